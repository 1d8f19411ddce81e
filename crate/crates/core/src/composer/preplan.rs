//! Preplan composer: offline all-pairs plan-graph construction with
//! position guidance, then fast inference that only plans short local
//! connections from the query's start and to its goal.
//!
//! The persisted graph is task-agnostic: it knows waypoints and the plans
//! between them, nothing about any start/goal. Inference works on a private
//! copy augmented with virtual start/goal vertices.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::composer::online::{run_with_params, OcConfig};
use crate::error::{Error, Result};
use crate::graph::ConnectivityGraph;
use crate::maze::{KinematicParams, Maze, State, Task};
use crate::plan::Plan;
use crate::proposer::GuidanceTarget;
use crate::rng::{self, tags};

#[derive(Clone, Debug)]
pub struct PcBuildConfig {
    pub waypoints: Vec<State>,
    /// Expansion budget per ordered waypoint pair.
    pub pair_budget: usize,
    /// Plan concatenations allowed per pair.
    pub pair_max_depth: usize,
    pub eps_stitch: f64,
    /// Shared search parameters (budget/max_depth are overridden per pair).
    pub base: OcConfig,
    /// Worker threads for pair builds; results are independent of the count.
    pub workers: usize,
}

impl Default for PcBuildConfig {
    fn default() -> Self {
        PcBuildConfig {
            waypoints: Vec::new(),
            pair_budget: 20,
            pair_max_depth: 2,
            eps_stitch: 0.5,
            base: OcConfig::default(),
            workers: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PcInferConfig {
    /// Local path horizon L' in steps for start/goal connections.
    pub local_horizon: usize,
    /// Expansion budget per local connection attempt.
    pub local_budget: usize,
    pub local_max_depth: usize,
    pub base: OcConfig,
    /// Attempt at most this many nearest candidate waypoints per side (the
    /// scan continues past the cap only while no connection has succeeded).
    pub max_attempts: usize,
    /// Stop a side early after this many successful connections.
    pub stop_after: usize,
}

impl Default for PcInferConfig {
    fn default() -> Self {
        PcInferConfig {
            local_horizon: 80,
            local_budget: 20,
            local_max_depth: 2,
            base: OcConfig::default(),
            max_attempts: 6,
            stop_after: 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PcBuildReport {
    pub graph: ConnectivityGraph,
    /// Total expansions spent across all pair searches (including retries).
    pub expansions: usize,
}

#[derive(Clone, Debug)]
pub struct PcReport {
    pub solution: Option<Plan>,
    /// Expansions spent on local connections for this query.
    pub expansions: usize,
    /// Edges in the augmented working graph.
    pub graph_edges: usize,
    pub local_edges_added: usize,
}

impl PcReport {
    pub fn success(&self) -> bool {
        self.solution.is_some()
    }
}

fn pair_task(from: State, to: State, eps: f64, depth: usize, h_plan: usize) -> Task {
    Task {
        start: from,
        goal: to,
        eps_goal: eps,
        horizon: depth.max(1) * h_plan,
    }
}

/// Build the all-pairs plan graph over the waypoints. Every ordered pair is
/// attempted with waypoint attraction toward the target and a goal ball of
/// `eps_stitch`; failed pairs retry once with a fresh stream and are left
/// absent if they fail again. Pairs may build in parallel; the merge order
/// is fixed, so the graph is identical for any worker count.
pub fn build_plan_graph(
    maze: &Maze,
    params: &KinematicParams,
    cfg: &PcBuildConfig,
    seed: u64,
) -> Result<PcBuildReport> {
    if cfg.waypoints.len() < 2 {
        return Err(Error::Config("plan-graph build needs at least 2 waypoints".into()));
    }
    let n = cfg.waypoints.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
        .collect();
    let pair_cfg = OcConfig {
        budget: cfg.pair_budget,
        max_depth: cfg.pair_max_depth,
        ..cfg.base.clone()
    };

    let results: Mutex<Vec<(Option<Plan>, usize)>> = Mutex::new(vec![(None, 0); pairs.len()]);
    let next: AtomicUsize = AtomicUsize::new(0);
    let workers = cfg.workers.max(1).min(pairs.len());
    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for _ in 0..workers {
            handles.push(scope.spawn(|| -> Result<()> {
                loop {
                    let idx = next.fetch_add(1, Ordering::Relaxed);
                    if idx >= pairs.len() {
                        return Ok(());
                    }
                    let (i, j) = pairs[idx];
                    let from = cfg.waypoints[i];
                    let to = cfg.waypoints[j];
                    let task = pair_task(from, to, cfg.eps_stitch, cfg.pair_max_depth, pair_cfg.proposer.h_plan);
                    let target = GuidanceTarget::WaypointAttraction(to);
                    let first = run_with_params(
                        &task,
                        maze,
                        &pair_cfg,
                        target,
                        params,
                        rng::derive(seed, &[tags::PAIR, i as u64, j as u64]),
                    )?;
                    let mut spent = first.expansions;
                    let plan = match first.solution {
                        Some(p) => Some(p),
                        None => {
                            let retry = run_with_params(
                                &task,
                                maze,
                                &pair_cfg,
                                target,
                                params,
                                rng::derive(seed, &[tags::PAIR_RETRY, i as u64, j as u64]),
                            )?;
                            spent += retry.expansions;
                            retry.solution
                        }
                    };
                    results.lock().unwrap()[idx] = (plan, spent);
                }
            }));
        }
        for h in handles {
            h.join().expect("pair builder panicked")?;
        }
        Ok(())
    })?;

    let mut graph = ConnectivityGraph::new(
        cfg.waypoints.clone(),
        maze.hash().to_string(),
        cfg.eps_stitch,
    );
    let results = results.into_inner().unwrap();
    let mut expansions = 0;
    for (idx, (plan, spent)) in results.into_iter().enumerate() {
        expansions += spent;
        if let Some(plan) = plan {
            let (i, j) = pairs[idx];
            graph.add_edge(i, j, plan)?;
        }
    }
    Ok(PcBuildReport { graph, expansions })
}

/// Answer a query against a prebuilt graph: augment a working copy with
/// local start/goal connections, then synthesize over the shortest path.
/// The persisted graph is never mutated.
pub fn run_preplan_inference(
    task: &Task,
    maze: &Maze,
    params: &KinematicParams,
    graph: &ConnectivityGraph,
    cfg: &PcInferConfig,
    seed: u64,
) -> Result<PcReport> {
    if graph.maze_hash() != maze.hash() {
        return Err(Error::MazeHashMismatch {
            graph: graph.maze_hash().to_string(),
            maze: maze.hash().to_string(),
        });
    }
    task.validate(maze)?;
    if cfg.local_horizon > task.horizon {
        return Err(Error::Config(format!(
            "local horizon {} exceeds task horizon {}",
            cfg.local_horizon, task.horizon
        )));
    }
    if cfg.local_horizon < cfg.base.proposer.h_plan {
        return Err(Error::Config(format!(
            "local horizon {} is shorter than h_plan {}",
            cfg.local_horizon, cfg.base.proposer.h_plan
        )));
    }

    if task.start.dist(task.goal) <= task.eps_goal {
        return Ok(PcReport {
            solution: Some(Plan::single(task.start)),
            expansions: 0,
            graph_edges: graph.n_edges(),
            local_edges_added: 0,
        });
    }

    let mut work = graph.clone();
    let n_waypoints = work.vertices().len();
    let start_v = work.add_vertex(task.start);
    let goal_v = work.add_vertex(task.goal);
    let eps = work.eps_stitch();
    let reach = cfg.local_horizon as f64 * params.v_max;
    let local_cfg = OcConfig {
        budget: cfg.local_budget,
        max_depth: cfg.local_max_depth,
        ..cfg.base.clone()
    };

    let mut expansions = 0usize;
    let mut local_edges = 0usize;

    // candidate waypoints per side, nearest first
    let sorted_by = |p: State, vertices: &[State]| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n_waypoints)
            .filter(|i| vertices[*i].dist(p) <= reach)
            .collect();
        idx.sort_by(|a, b| {
            vertices[*a]
                .dist(p)
                .partial_cmp(&vertices[*b].dist(p))
                .unwrap()
                .then(a.cmp(b))
        });
        idx
    };

    // start -> waypoint connections
    let mut successes = 0usize;
    for (attempt, &w) in sorted_by(task.start, work.vertices()).iter().enumerate() {
        if successes >= cfg.stop_after || (attempt >= cfg.max_attempts && successes > 0) {
            break;
        }
        let wp = work.vertices()[w];
        let t = Task {
            start: task.start,
            goal: wp,
            eps_goal: eps,
            horizon: cfg.local_horizon,
        };
        let r = run_with_params(
            &t,
            maze,
            &local_cfg,
            GuidanceTarget::WaypointAttraction(wp),
            params,
            rng::derive(seed, &[tags::LOCAL_EDGE, 0, w as u64]),
        )?;
        expansions += r.expansions;
        if let Some(plan) = r.solution {
            work.add_edge(start_v, w, plan)?;
            successes += 1;
            local_edges += 1;
        }
    }

    // waypoint -> goal connections; the goal ball shrinks to eps_stitch when
    // the task tolerance is wider, keeping the edge contract intact
    let goal_eps = task.eps_goal.min(eps);
    let mut successes = 0usize;
    for (attempt, &w) in sorted_by(task.goal, work.vertices()).iter().enumerate() {
        if successes >= cfg.stop_after || (attempt >= cfg.max_attempts && successes > 0) {
            break;
        }
        let wp = work.vertices()[w];
        let t = Task {
            start: wp,
            goal: task.goal,
            eps_goal: goal_eps,
            horizon: cfg.local_horizon,
        };
        let r = run_with_params(
            &t,
            maze,
            &local_cfg,
            GuidanceTarget::GoalAttraction(task.goal),
            params,
            rng::derive(seed, &[tags::LOCAL_EDGE, 1, w as u64]),
        )?;
        expansions += r.expansions;
        if let Some(plan) = r.solution {
            work.add_edge(w, goal_v, plan)?;
            successes += 1;
            local_edges += 1;
        }
    }

    let solution = match work.shortest_path(start_v, goal_v) {
        Some(path) => {
            let plan = work.synthesize_plan(&path)?;
            if plan.steps() <= task.horizon {
                Some(plan)
            } else {
                None
            }
        }
        None => None,
    };
    Ok(PcReport {
        solution,
        expansions,
        graph_edges: work.n_edges(),
        local_edges_added: local_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::{generate_dataset, parse_maze, sample_task};
    use crate::waypoints::WaypointSet;

    fn medium() -> Maze {
        parse_maze(crate::maze::MEDIUM_MAZE).unwrap().maze
    }

    #[test]
    fn two_waypoints_in_open_room_connect_both_ways() {
        let maze = parse_maze(
            "########\n#......#\n#......#\n#......#\n#......#\n#......#\n#......#\n########",
        )
        .unwrap()
        .maze;
        let params = KinematicParams::default();
        let cfg = PcBuildConfig {
            waypoints: vec![State::new(2.0, 2.0), State::new(6.0, 6.0)],
            workers: 2,
            ..PcBuildConfig::default()
        };
        let mut both = 0;
        for seed in 0..10 {
            let g = build_plan_graph(&maze, &params, &cfg, seed).unwrap().graph;
            if g.edge(0, 1).is_some() && g.edge(1, 0).is_some() {
                both += 1;
            }
            for e in g.edges() {
                assert_eq!(e.plan.first(), g.vertices()[e.from]);
                assert!(e.plan.last().dist(g.vertices()[e.to]) <= cfg.eps_stitch);
            }
        }
        assert_eq!(both, 10, "open-room pair failed to connect in {}/10 builds", 10 - both);
    }

    #[test]
    fn walled_pair_yields_no_edges() {
        let maze = parse_maze("#######\n#.###.#\n#.###.#\n#######").unwrap().maze;
        let params = KinematicParams::default();
        let cfg = PcBuildConfig {
            waypoints: vec![State::new(1.5, 1.5), State::new(5.5, 1.5)],
            pair_budget: 5,
            ..PcBuildConfig::default()
        };
        let r = build_plan_graph(&maze, &params, &cfg, 3).unwrap();
        assert_eq!(r.graph.n_edges(), 0);
        assert!(r.expansions > 0);
    }

    #[test]
    fn build_is_deterministic_across_worker_counts() {
        let maze = medium();
        let params = KinematicParams::default();
        let data = generate_dataset(&maze, 30, 40, &params, 2);
        let ws = WaypointSet::from_dataset(&maze, &data, 4, 50, 5).unwrap();
        let mk = |workers: usize| PcBuildConfig {
            waypoints: ws.centers.clone(),
            pair_budget: 6,
            workers,
            ..PcBuildConfig::default()
        };
        let a = build_plan_graph(&maze, &params, &mk(1), 11).unwrap();
        let b = build_plan_graph(&maze, &params, &mk(2), 11).unwrap();
        assert!(a.graph.same_structure(&b.graph));
        assert_eq!(a.graph.encode(), b.graph.encode());
        assert_eq!(a.expansions, b.expansions);
    }

    #[test]
    fn inference_rejects_wrong_maze() {
        let maze = medium();
        let other = parse_maze(crate::maze::LARGE_MAZE).unwrap().maze;
        let g = ConnectivityGraph::new(vec![State::new(1.5, 1.5), State::new(2.5, 1.5)], other.hash().to_string(), 0.5);
        let task = sample_task(&maze, 2.0, 0.5, 400, 1).unwrap();
        let params = KinematicParams::default();
        assert!(matches!(
            run_preplan_inference(&task, &maze, &params, &g, &PcInferConfig::default(), 1),
            Err(Error::MazeHashMismatch { .. })
        ));
    }

    #[test]
    fn empty_graph_with_unreachable_locals_fails() {
        // start and goal sealed in separate chambers; waypoints unreachable
        let maze = parse_maze("#######\n#.#.#.#\n#######").unwrap().maze;
        let params = KinematicParams::default();
        let g = ConnectivityGraph::new(
            vec![State::new(3.5, 1.2), State::new(3.5, 1.8)],
            maze.hash().to_string(),
            0.5,
        );
        let task = Task {
            start: State::new(1.5, 1.5),
            goal: State::new(5.5, 1.5),
            eps_goal: 0.3,
            horizon: 400,
        };
        let cfg = PcInferConfig {
            local_budget: 3,
            ..PcInferConfig::default()
        };
        let r = run_preplan_inference(&task, &maze, &params, &g, &cfg, 2).unwrap();
        assert!(!r.success());
    }

    #[test]
    fn prebuilt_edges_plus_local_connections_solve_medium() {
        let maze = medium();
        let params = KinematicParams::default();
        let data = generate_dataset(&maze, 40, 40, &params, 7);
        let ws = WaypointSet::from_dataset(&maze, &data, 6, 50, 9).unwrap();
        let build = PcBuildConfig {
            waypoints: ws.centers.clone(),
            workers: 2,
            ..PcBuildConfig::default()
        };
        let graph = build_plan_graph(&maze, &params, &build, 4).unwrap().graph;
        assert!(graph.n_edges() > 0);
        let infer = PcInferConfig::default();
        let mut ok = 0;
        for seed in 0..5u64 {
            let task = sample_task(&maze, 4.0, 0.5, 400, 40 + seed).unwrap();
            let r = run_preplan_inference(&task, &maze, &params, &graph, &infer, seed).unwrap();
            if let Some(plan) = &r.solution {
                ok += 1;
                assert_eq!(plan.first(), task.start);
                assert!(plan.last().dist(task.goal) <= task.eps_goal);
                assert!(plan.steps() <= task.horizon);
            }
        }
        assert!(ok >= 4, "only {ok}/5 medium inference queries succeeded");
        // the persisted graph is untouched by inference
        let again = build_plan_graph(&maze, &params, &build, 4).unwrap().graph;
        assert!(graph.same_structure(&again));
    }

    /// Amortization: once past the break-even query count, building the
    /// graph once plus cheap per-query local planning costs fewer total
    /// expansions than running the online composer from scratch per query.
    /// With the shooting proposer a single online run is cheap, so the
    /// break-even sits near ten queries on the large maze.
    #[test]
    fn amortization_beats_online_composer_beyond_break_even() {
        let maze = parse_maze(crate::maze::LARGE_MAZE).unwrap().maze;
        let params = KinematicParams::default();
        let data = generate_dataset(&maze, 60, 40, &params, 17);
        let ws = WaypointSet::from_dataset(&maze, &data, 8, 100, 17).unwrap();
        let build_cfg = PcBuildConfig {
            waypoints: ws.centers,
            pair_budget: 10,
            workers: 2,
            ..PcBuildConfig::default()
        };
        let report = build_plan_graph(&maze, &params, &build_cfg, 17).unwrap();
        let infer = PcInferConfig::default();
        let oc_cfg = crate::composer::online::OcConfig::default();
        let mut pc_total = report.expansions;
        let mut oc_total = 0usize;
        for q in 0..20u64 {
            let task =
                sample_task(&maze, 7.5, 0.5, 400, crate::rng::derive(1000, &[q])).unwrap();
            let pr = run_preplan_inference(&task, &maze, &params, &report.graph, &infer, q).unwrap();
            assert!(pr.success(), "PC failed on amortization query {q}");
            pc_total += pr.expansions;
            let or = crate::composer::online::run_with_params(
                &task,
                &maze,
                &oc_cfg,
                GuidanceTarget::GoalAttraction(task.goal),
                &params,
                q,
            )
            .unwrap();
            oc_total += or.expansions;
            if q == 9 {
                assert!(
                    pc_total < oc_total,
                    "build+10 queries ({pc_total}) not cheaper than 10 online runs ({oc_total})"
                );
            }
        }
        assert!(
            pc_total < oc_total,
            "build+20 queries ({pc_total}) not cheaper than 20 online runs ({oc_total})"
        );
    }

    #[test]
    fn start_on_waypoint_uses_prebuilt_edge() {
        // two rooms joined by a corridor; waypoint A at start, B near goal
        let maze = parse_maze(
            "##########\n#........#\n#........#\n#........#\n##########",
        )
        .unwrap()
        .maze;
        let params = KinematicParams::default();
        let a = State::new(1.5, 2.0);
        let b = State::new(8.0, 2.0);
        let build = PcBuildConfig {
            waypoints: vec![a, b],
            ..PcBuildConfig::default()
        };
        let graph = build_plan_graph(&maze, &params, &build, 6).unwrap().graph;
        assert!(graph.edge(0, 1).is_some());
        let task = Task {
            start: a,
            goal: State::new(8.3, 2.2),
            eps_goal: 0.5,
            horizon: 400,
        };
        let r = run_preplan_inference(&task, &maze, &params, &graph, &PcInferConfig::default(), 3).unwrap();
        assert!(r.success());
        let plan = r.solution.unwrap();
        assert_eq!(plan.first(), a);
        assert!(plan.last().dist(task.goal) <= task.eps_goal);
    }
}
