//! Browser demo: run the composers on the bundled mazes and render the
//! outcome as SVG. Three operations are exposed to JavaScript: a maze/
//! waypoint preview, a composer run, and a plan-graph build preview.

use wasm_bindgen::prelude::*;

use planstitch::composer::{
    build_plan_graph, run_preplan_inference, DcConfig, OcConfig, PcBuildConfig, PcInferConfig,
};
use planstitch::graph::ConnectivityGraph;
use planstitch::maze::{
    builtin_maze, generate_dataset, parse_maze, sample_task, KinematicParams, Maze,
};
use planstitch::plan::Plan;
use planstitch::proposer::GuidanceTarget;
use planstitch::render::{render_svg, Markers, PlanStyle, TaggedPlan};
use planstitch::rng;
use planstitch::waypoints::{default_k, WaypointSet};

fn load(maze_name: &str) -> Result<Maze, String> {
    let text = builtin_maze(maze_name)
        .ok_or_else(|| format!("unknown maze {maze_name:?} (medium|large|giant)"))?;
    Ok(parse_maze(text).map_err(|e| e.to_string())?.maze)
}

fn demo_waypoints(maze: &Maze, seed: u64) -> Result<Vec<planstitch::maze::State>, String> {
    let params = KinematicParams::default();
    let data = generate_dataset(maze, 60, 40, &params, seed);
    let ws = WaypointSet::from_dataset(maze, &data, default_k(maze), 100, seed)
        .map_err(|e| e.to_string())?;
    Ok(ws.centers)
}

/// Outcome of one interactive run.
#[wasm_bindgen]
pub struct DemoOutcome {
    svg: String,
    success: bool,
    steps: u32,
    expansions: u32,
    note: String,
}

#[wasm_bindgen]
impl DemoOutcome {
    #[wasm_bindgen(getter)]
    pub fn svg(&self) -> String {
        self.svg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn success(&self) -> bool {
        self.success
    }

    #[wasm_bindgen(getter)]
    pub fn steps(&self) -> u32 {
        self.steps
    }

    #[wasm_bindgen(getter)]
    pub fn expansions(&self) -> u32 {
        self.expansions
    }

    #[wasm_bindgen(getter)]
    pub fn note(&self) -> String {
        self.note.clone()
    }
}

/// Maze preview with the waypoints a given seed would select.
#[wasm_bindgen]
pub fn preview_svg(maze_name: &str, seed: u32) -> Result<String, JsError> {
    preview_svg_impl(maze_name, seed).map_err(|e| JsError::new(&e))
}

fn preview_svg_impl(maze_name: &str, seed: u32) -> Result<String, String> {
    let maze = load(maze_name)?;
    let waypoints = demo_waypoints(&maze, seed as u64)?;
    let markers = Markers {
        waypoints,
        ..Markers::default()
    };
    Ok(render_svg(&maze, &[], None, &markers))
}

/// Run one composer on a sampled task and render the search debris plus the
/// solution.
#[wasm_bindgen]
pub fn run_composer(
    maze_name: &str,
    composer: &str,
    seed: u32,
    budget: u32,
) -> Result<DemoOutcome, JsError> {
    run_composer_impl(maze_name, composer, seed, budget).map_err(|e| JsError::new(&e))
}

fn run_composer_impl(
    maze_name: &str,
    composer: &str,
    seed: u32,
    budget: u32,
) -> Result<DemoOutcome, String> {
    let maze = load(maze_name)?;
    let params = KinematicParams::default();
    let task = sample_task(
        &maze,
        0.4 * maze.world_width(),
        0.5 * maze.cell_size(),
        400,
        rng::derive(seed as u64, &[99]),
    )
    .map_err(|e| e.to_string())?;
    let master = rng::derive(seed as u64, &[rng::tags::RUN]);
    let oc = OcConfig {
        budget: (budget as usize).max(1),
        ..OcConfig::default()
    };
    let err = |e: planstitch::Error| e.to_string();

    let mut markers = Markers {
        start: Some(task.start),
        goal: Some(task.goal),
        eps_goal: Some(task.eps_goal),
        waypoints: Vec::new(),
    };
    let (solution, expansions, svg, note) = match composer {
        "oc" => {
            let r = planstitch::composer::online::run_with_params(
                &task,
                &maze,
                &oc,
                GuidanceTarget::GoalAttraction(task.goal),
                &params,
                master,
            )
            .map_err(err)?;
            let tagged: Vec<TaggedPlan> = r
                .solution
                .iter()
                .map(|p| TaggedPlan {
                    plan: p,
                    style: PlanStyle::Solution,
                })
                .collect();
            let svg = render_svg(&maze, &tagged, Some(&r.tree), &markers);
            let note = format!("online composer, {} tree nodes", r.tree.len());
            (r.solution, r.expansions, svg, note)
        }
        "dc" => {
            let waypoints = demo_waypoints(&maze, seed as u64)?;
            markers.waypoints = waypoints.clone();
            let cfg = DcConfig {
                waypoints,
                eps_connect: 0.5 * maze.cell_size(),
                max_rounds: (budget as usize).max(1),
                tree: oc,
                sim_horizon: task.horizon,
                scan_whole_plan: false,
            };
            let r = planstitch::composer::distributed::run_with_params(
                &task, &maze, &cfg, &params, master,
            )
            .map_err(err)?;
            let mut tagged: Vec<TaggedPlan> = r
                .graph
                .edges()
                .map(|e| TaggedPlan {
                    plan: &e.plan,
                    style: PlanStyle::Discarded,
                })
                .collect();
            if let Some(p) = &r.solution {
                tagged.push(TaggedPlan {
                    plan: p,
                    style: PlanStyle::Solution,
                });
            }
            let svg = render_svg(&maze, &tagged, None, &markers);
            let note = format!(
                "distributed composer, {} rounds, {} graph edges",
                r.rounds,
                r.graph.n_edges()
            );
            (r.solution, r.expansions, svg, note)
        }
        "pc" => {
            let (graph, build_expansions) = demo_graph(&maze, &params, seed as u64)?;
            markers.waypoints = graph.vertices().to_vec();
            let infer = PcInferConfig {
                local_budget: (budget as usize).max(1),
                ..PcInferConfig::default()
            };
            let r = run_preplan_inference(&task, &maze, &params, &graph, &infer, master)
                .map_err(err)?;
            let mut tagged: Vec<TaggedPlan> = graph
                .edges()
                .map(|e| TaggedPlan {
                    plan: &e.plan,
                    style: PlanStyle::Discarded,
                })
                .collect();
            if let Some(p) = &r.solution {
                tagged.push(TaggedPlan {
                    plan: p,
                    style: PlanStyle::Solution,
                });
            }
            let svg = render_svg(&maze, &tagged, None, &markers);
            let note = format!(
                "preplan composer, graph {} edges ({} build expansions), {} local expansions",
                graph.n_edges(),
                build_expansions,
                r.expansions
            );
            (r.solution, r.expansions, svg, note)
        }
        other => return Err(format!("unknown composer {other:?}")),
    };
    Ok(DemoOutcome {
        svg,
        success: solution.is_some(),
        steps: solution.as_ref().map(|p: &Plan| p.steps()).unwrap_or(0) as u32,
        expansions: expansions as u32,
        note,
    })
}

fn demo_graph(
    maze: &Maze,
    params: &KinematicParams,
    seed: u64,
) -> Result<(ConnectivityGraph, usize), String> {
    let cfg = PcBuildConfig {
        waypoints: demo_waypoints(maze, seed)?,
        pair_budget: 8,
        eps_stitch: 0.5 * maze.cell_size(),
        ..PcBuildConfig::default()
    };
    let report = build_plan_graph(maze, params, &cfg, seed).map_err(|e| e.to_string())?;
    Ok((report.graph, report.expansions))
}

/// Prebuild the plan graph alone and render it (the offline phase of the
/// preplan composer).
#[wasm_bindgen]
pub fn graph_svg(maze_name: &str, seed: u32) -> Result<DemoOutcome, JsError> {
    graph_svg_impl(maze_name, seed).map_err(|e| JsError::new(&e))
}

fn graph_svg_impl(maze_name: &str, seed: u32) -> Result<DemoOutcome, String> {
    let maze = load(maze_name)?;
    let params = KinematicParams::default();
    let (graph, build_expansions) = demo_graph(&maze, &params, seed as u64)?;
    let tagged: Vec<TaggedPlan> = graph
        .edges()
        .map(|e| TaggedPlan {
            plan: &e.plan,
            style: PlanStyle::Discarded,
        })
        .collect();
    let markers = Markers {
        waypoints: graph.vertices().to_vec(),
        ..Markers::default()
    };
    let svg = render_svg(&maze, &tagged, None, &markers);
    Ok(DemoOutcome {
        svg,
        success: graph.n_edges() > 0,
        steps: 0,
        expansions: build_expansions as u32,
        note: format!(
            "plan graph: {} waypoints, {} directed edges",
            graph.vertices().len(),
            graph.n_edges()
        ),
    })
}
