//! Benchmark harness: run configuration, the task x seed experiment grid,
//! machine-readable run records, aggregation, and the ablation suites.
//!
//! Records are emitted as an append-only line stream in grid order; a
//! truncated run loses at most the in-flight record. Every field except
//! `wall_time` is bit-deterministic for a given configuration, independent
//! of the worker count.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::sync::Mutex;
use std::time::Instant;

use crate::cache::{CacheKey, PlanCache};
use crate::composer::{
    build_plan_graph, default_eps_stitch, run_preplan_inference, DcConfig, OcConfig, PcBuildConfig,
    PcInferConfig,
};
use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::graph::ConnectivityGraph;
use crate::maze::{builtin_maze, generate_dataset, parse_maze, sample_task, KinematicParams, Maze, Task};
use crate::plan::GuidanceSet;
use crate::proposer::ProposerConfig;
use crate::rng;
use crate::waypoints::{default_k, WaypointSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComposerKind {
    Oc,
    Dc,
    Pc,
}

impl fmt::Display for ComposerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComposerKind::Oc => "oc",
            ComposerKind::Dc => "dc",
            ComposerKind::Pc => "pc",
        })
    }
}

impl FromStr for ComposerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<ComposerKind> {
        match s {
            "oc" => Ok(ComposerKind::Oc),
            "dc" => Ok(ComposerKind::Dc),
            "pc" => Ok(ComposerKind::Pc),
            other => Err(Error::Config(format!("unknown composer {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TaskSpec {
    pub count: usize,
    pub min_separation: f64,
    pub eps_goal: f64,
    pub horizon: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct DcTuning {
    pub k: usize,
    pub eps_connect: f64,
    pub max_rounds: usize,
    pub sim_horizon: usize,
    pub scan_whole_plan: bool,
}

#[derive(Clone, Debug)]
pub struct PcTuning {
    pub k: usize,
    pub pair_budget: usize,
    pub pair_max_depth: usize,
    pub eps_stitch: f64,
    pub local_budget: usize,
    pub local_horizon: usize,
    pub local_max_depth: usize,
    pub max_attempts: usize,
    pub stop_after: usize,
    /// Load a persisted graph instead of building one.
    pub graph_path: Option<String>,
}

#[derive(Clone, Debug)]
pub struct DatasetSpec {
    pub n: usize,
    pub h_train: usize,
    pub seed: u64,
}

/// Full experiment configuration for one benchmark cell.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub maze_name: String,
    pub maze: Maze,
    pub composer: ComposerKind,
    pub params: KinematicParams,
    pub seeds: Vec<u64>,
    pub tasks: TaskSpec,
    pub oc: OcConfig,
    pub dc: DcTuning,
    pub pc: PcTuning,
    pub dataset: DatasetSpec,
    pub cache_enabled: bool,
    pub eps_cache: f64,
    pub workers: usize,
}

/// Resolve a maze spec: `builtin:<name>`, a bare builtin name, or a file
/// path.
pub fn load_maze(spec: &str) -> Result<(String, Maze)> {
    let text = if let Some(name) = spec.strip_prefix("builtin:") {
        builtin_maze(name)
            .ok_or_else(|| Error::Config(format!("unknown builtin maze {name:?}")))?
            .to_string()
    } else if let Some(text) = builtin_maze(spec) {
        text.to_string()
    } else {
        std::fs::read_to_string(spec)
            .map_err(|e| Error::Config(format!("cannot read maze file {spec:?}: {e}")))?
    };
    Ok((spec.to_string(), parse_maze(&text)?.maze))
}

impl RunConfig {
    /// Build a configuration from the flat key-value namespace; unknown
    /// keys are rejected by the caller via [`KvConfig::reject_unused`].
    pub fn from_kv(kv: &KvConfig) -> Result<RunConfig> {
        let maze_spec = kv.get_str("maze", "builtin:medium");
        let (maze_name, maze) = load_maze(&maze_spec)?;
        let composer: ComposerKind = kv.get_str("composer", "oc").parse()?;
        let params = KinematicParams {
            v_max: kv.get_f64("kin.v_max", 0.5)?,
            noise_scale: kv.get_f64("kin.noise_scale", 0.3)?,
        };
        params.validate()?;
        let seeds = kv.get_seeds("seeds", &[0, 1, 2, 3, 4])?;
        if seeds.is_empty() {
            return Err(Error::Config("seeds must be non-empty".into()));
        }
        let eps_default = default_eps_stitch(maze.cell_size());
        let tasks = TaskSpec {
            count: kv.get_usize("task.count", 5)?,
            min_separation: kv.get_f64("task.min_separation", 0.4 * maze.world_width())?,
            eps_goal: kv.get_f64("task.eps_goal", eps_default)?,
            horizon: kv.get_usize("task.horizon", 400)?,
            seed: kv.get_u64("task.seed", 1000)?,
        };
        if tasks.count < 1 {
            return Err(Error::Config("task.count must be >= 1".into()));
        }
        let proposer = ProposerConfig {
            h_plan: kv.get_usize("proposer.h_plan", 40)?,
            n_candidates: kv.get_usize("proposer.n_candidates", 50)?,
            jump_factor: kv.get_usize("proposer.jump_factor", 10)?,
        };
        let guidance = match kv.get("guidance.fixed") {
            Some(v) => {
                if kv.contains("guidance") {
                    return Err(Error::Config(
                        "guidance and guidance.fixed are mutually exclusive".into(),
                    ));
                }
                let g: f64 = v
                    .parse()
                    .map_err(|_| Error::Config(format!("guidance.fixed: bad level {v:?}")))?;
                GuidanceSet::fixed(g)?
            }
            None => GuidanceSet::new(kv.get_f64_list("guidance", GuidanceSet::default().levels())?)?,
        };
        let oc = OcConfig {
            budget: kv.get_usize("oc.budget", 200)?,
            proposer,
            guidance,
            c_uct: kv.get_f64("oc.c_uct", std::f64::consts::SQRT_2)?,
            branching: kv.get_usize("oc.branching", 2)?,
            max_depth: kv.get_usize("oc.max_depth", 10)?,
            fast_replanning: kv.get_bool("oc.fast_replanning", true)?,
            promote_completion: kv.get_bool("oc.promote_completion", false)?,
        };
        oc.validate()?;
        let k_default = default_k(&maze);
        let dc = DcTuning {
            k: kv.get_usize("dc.k", k_default)?,
            eps_connect: kv.get_f64("dc.eps_connect", eps_default)?,
            max_rounds: kv.get_usize("dc.max_rounds", 100)?,
            sim_horizon: kv.get_usize("dc.sim_horizon", tasks.horizon)?,
            scan_whole_plan: kv.get_bool("dc.scan_whole_plan", false)?,
        };
        let pc = PcTuning {
            k: kv.get_usize("pc.k", k_default)?,
            pair_budget: kv.get_usize("pc.pair_budget", 20)?,
            pair_max_depth: kv.get_usize("pc.pair_max_depth", 2)?,
            eps_stitch: kv.get_f64("pc.eps_stitch", eps_default)?,
            local_budget: kv.get_usize("pc.local_budget", 20)?,
            local_horizon: kv.get_usize("pc.local_horizon", 2 * oc.proposer.h_plan)?,
            local_max_depth: kv.get_usize("pc.local_max_depth", 2)?,
            max_attempts: kv.get_usize("pc.max_attempts", 6)?,
            stop_after: kv.get_usize("pc.stop_after", 3)?,
            graph_path: kv.get("pc.graph").map(|s| s.to_string()),
        };
        let dataset = DatasetSpec {
            n: kv.get_usize("data.n", 60)?,
            h_train: kv.get_usize("data.h_train", oc.proposer.h_plan)?,
            seed: kv.get_u64("data.seed", 17)?,
        };
        let cache_enabled = kv.get_bool("cache.enabled", false)?;
        let eps_cache = kv.get_f64("cache.eps", tasks.eps_goal)?;
        let workers = kv.get_usize("workers", default_workers())?;
        Ok(RunConfig {
            maze_name,
            maze,
            composer,
            params,
            seeds,
            tasks,
            oc,
            dc,
            pc,
            dataset,
            cache_enabled,
            eps_cache,
            workers: workers.max(1),
        })
    }

    fn sample_tasks(&self) -> Result<Vec<Task>> {
        (0..self.tasks.count)
            .map(|i| {
                sample_task(
                    &self.maze,
                    self.tasks.min_separation,
                    self.tasks.eps_goal,
                    self.tasks.horizon,
                    rng::derive(self.tasks.seed, &[i as u64]),
                )
            })
            .collect()
    }
}

/// Worker-count default: the `PLANSTITCH_WORKERS` environment variable, or 1.
pub fn default_workers() -> usize {
    std::env::var("PLANSTITCH_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|w| *w >= 1)
        .unwrap_or(1)
}

/// One machine-readable outcome row.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub task_id: usize,
    pub seed: u64,
    pub composer: ComposerKind,
    pub success: bool,
    pub wall_time: f64,
    /// Present iff the run succeeded.
    pub plan_steps: Option<usize>,
    pub expansions: usize,
    pub graph_edges: Option<usize>,
}

impl RunRecord {
    pub fn to_line(&self) -> String {
        let mut s = format!(
            "task={} seed={} composer={} success={} wall_time={:.6} expansions={}",
            self.task_id,
            self.seed,
            self.composer,
            if self.success { 1 } else { 0 },
            self.wall_time,
            self.expansions
        );
        if let Some(steps) = self.plan_steps {
            s.push_str(&format!(" steps={}", steps));
        }
        if let Some(e) = self.graph_edges {
            s.push_str(&format!(" graph_edges={}", e));
        }
        s
    }

    /// The record line minus the wall-time field; this is the
    /// determinism-comparable identity of a run.
    pub fn deterministic_line(&self) -> String {
        self.to_line()
            .split_whitespace()
            .filter(|f| !f.starts_with("wall_time="))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn from_line(line: &str) -> Result<RunRecord> {
        let mut task_id = None;
        let mut seed = None;
        let mut composer = None;
        let mut success = None;
        let mut wall_time = 0.0;
        let mut plan_steps = None;
        let mut graph_edges = None;
        let mut expansions = 0;
        for field in line.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad record field {field:?}")))?;
            match k {
                "task" => task_id = Some(v.parse().map_err(|_| Error::Config("bad task".into()))?),
                "seed" => seed = Some(v.parse().map_err(|_| Error::Config("bad seed".into()))?),
                "composer" => composer = Some(v.parse()?),
                "success" => success = Some(v == "1"),
                "wall_time" => {
                    wall_time = v.parse().map_err(|_| Error::Config("bad wall_time".into()))?
                }
                "steps" => {
                    plan_steps = Some(v.parse().map_err(|_| Error::Config("bad steps".into()))?)
                }
                "expansions" => {
                    expansions = v.parse().map_err(|_| Error::Config("bad expansions".into()))?
                }
                "graph_edges" => {
                    graph_edges =
                        Some(v.parse().map_err(|_| Error::Config("bad graph_edges".into()))?)
                }
                other => return Err(Error::Config(format!("unknown record field {other:?}"))),
            }
        }
        Ok(RunRecord {
            task_id: task_id.ok_or_else(|| Error::Config("record missing task".into()))?,
            seed: seed.ok_or_else(|| Error::Config("record missing seed".into()))?,
            composer: composer.ok_or_else(|| Error::Config("record missing composer".into()))?,
            success: success.ok_or_else(|| Error::Config("record missing success".into()))?,
            wall_time,
            plan_steps,
            expansions,
            graph_edges,
        })
    }
}

/// Mean/std summary of one benchmark cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub runs: usize,
    pub successes: usize,
    pub success_mean: f64,
    pub success_std: f64,
    pub time_mean: f64,
    pub time_std: f64,
    /// Plan-length stats over successful runs only.
    pub steps_mean: Option<f64>,
    pub steps_std: Option<f64>,
    pub expansions_mean: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    (m, var.sqrt())
}

pub fn aggregate(records: &[RunRecord]) -> Aggregate {
    let succ: Vec<f64> = records.iter().map(|r| if r.success { 1.0 } else { 0.0 }).collect();
    let times: Vec<f64> = records.iter().map(|r| r.wall_time).collect();
    let steps: Vec<f64> = records
        .iter()
        .filter_map(|r| r.plan_steps.map(|s| s as f64))
        .collect();
    let expansions: Vec<f64> = records.iter().map(|r| r.expansions as f64).collect();
    let (sm, ss) = mean_std(&succ);
    let (tm, ts) = mean_std(&times);
    let (em, _) = mean_std(&expansions);
    let (stm, sts) = mean_std(&steps);
    Aggregate {
        runs: records.len(),
        successes: records.iter().filter(|r| r.success).count(),
        success_mean: sm,
        success_std: ss,
        time_mean: tm,
        time_std: ts,
        steps_mean: if steps.is_empty() { None } else { Some(stm) },
        steps_std: if steps.is_empty() { None } else { Some(sts) },
        expansions_mean: em,
    }
}

/// Outcome of one benchmark cell: the record stream plus its aggregate and
/// preparation costs (dataset/waypoints/graph building, outside per-run
/// timing).
#[derive(Clone, Debug)]
pub struct BenchOutput {
    pub records: Vec<RunRecord>,
    pub aggregate: Aggregate,
    pub prep_seconds: f64,
    pub graph_edges: Option<usize>,
    pub build_expansions: Option<usize>,
    pub cache_hits: Option<u64>,
}

enum Prepared {
    Oc,
    Dc { waypoints: Vec<crate::maze::State> },
    Pc { graph: ConnectivityGraph },
}

fn prepare(cfg: &RunConfig) -> Result<(Prepared, f64, Option<usize>, Option<usize>)> {
    let t0 = Instant::now();
    match cfg.composer {
        ComposerKind::Oc => Ok((Prepared::Oc, t0.elapsed().as_secs_f64(), None, None)),
        ComposerKind::Dc => {
            let data = generate_dataset(
                &cfg.maze,
                cfg.dataset.n,
                cfg.dataset.h_train,
                &cfg.params,
                cfg.dataset.seed,
            );
            let ws = WaypointSet::from_dataset(&cfg.maze, &data, cfg.dc.k, 100, cfg.dataset.seed)?;
            Ok((
                Prepared::Dc {
                    waypoints: ws.centers,
                },
                t0.elapsed().as_secs_f64(),
                None,
                None,
            ))
        }
        ComposerKind::Pc => {
            let (graph, build_expansions) = match &cfg.pc.graph_path {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    (ConnectivityGraph::decode(&text)?, None)
                }
                None => {
                    let data = generate_dataset(
                        &cfg.maze,
                        cfg.dataset.n,
                        cfg.dataset.h_train,
                        &cfg.params,
                        cfg.dataset.seed,
                    );
                    let ws =
                        WaypointSet::from_dataset(&cfg.maze, &data, cfg.pc.k, 100, cfg.dataset.seed)?;
                    let build = PcBuildConfig {
                        waypoints: ws.centers,
                        pair_budget: cfg.pc.pair_budget,
                        pair_max_depth: cfg.pc.pair_max_depth,
                        eps_stitch: cfg.pc.eps_stitch,
                        base: cfg.oc.clone(),
                        workers: cfg.workers,
                    };
                    let report = build_plan_graph(&cfg.maze, &cfg.params, &build, cfg.dataset.seed)?;
                    (report.graph, Some(report.expansions))
                }
            };
            let edges = graph.n_edges();
            Ok((
                Prepared::Pc { graph },
                t0.elapsed().as_secs_f64(),
                Some(edges),
                build_expansions,
            ))
        }
    }
}

fn run_cell(
    cfg: &RunConfig,
    prepared: &Prepared,
    cache: Option<&Mutex<PlanCache>>,
    task_id: usize,
    task: &Task,
    seed: u64,
) -> Result<RunRecord> {
    let master = rng::derive(seed, &[rng::tags::RUN, task_id as u64]);
    let mut record = RunRecord {
        task_id,
        seed,
        composer: cfg.composer,
        success: false,
        wall_time: 0.0,
        plan_steps: None,
        expansions: 0,
        graph_edges: None,
    };
    match prepared {
        Prepared::Oc => {
            if let Some(cache) = cache {
                let key = CacheKey {
                    context: cfg.maze.hash().to_string(),
                    start: task.start,
                    goal: task.goal,
                };
                let t0 = Instant::now();
                let hit = cache
                    .lock()
                    .unwrap()
                    .lookup(&key, cfg.eps_cache, &cfg.maze, &cfg.params);
                if let Some(plan) = hit {
                    record.wall_time = t0.elapsed().as_secs_f64();
                    record.success = true;
                    record.plan_steps = Some(plan.steps());
                    return Ok(record);
                }
                let r = crate::composer::online::run_with_params(
                    task,
                    &cfg.maze,
                    &cfg.oc,
                    crate::proposer::GuidanceTarget::GoalAttraction(task.goal),
                    &cfg.params,
                    master,
                )?;
                record.wall_time = t0.elapsed().as_secs_f64();
                record.expansions = r.expansions;
                if let Some(plan) = r.solution {
                    record.success = true;
                    record.plan_steps = Some(plan.steps());
                    cache
                        .lock()
                        .unwrap()
                        .insert(key, plan, &cfg.maze, &cfg.params)?;
                }
            } else {
                let t0 = Instant::now();
                let r = crate::composer::online::run_with_params(
                    task,
                    &cfg.maze,
                    &cfg.oc,
                    crate::proposer::GuidanceTarget::GoalAttraction(task.goal),
                    &cfg.params,
                    master,
                )?;
                record.wall_time = t0.elapsed().as_secs_f64();
                record.expansions = r.expansions;
                if let Some(plan) = r.solution {
                    record.success = true;
                    record.plan_steps = Some(plan.steps());
                }
            }
        }
        Prepared::Dc { waypoints } => {
            let dc_cfg = DcConfig {
                waypoints: waypoints.clone(),
                eps_connect: cfg.dc.eps_connect,
                max_rounds: cfg.dc.max_rounds,
                tree: cfg.oc.clone(),
                sim_horizon: cfg.dc.sim_horizon,
                scan_whole_plan: cfg.dc.scan_whole_plan,
            };
            let t0 = Instant::now();
            let r = crate::composer::distributed::run_with_params(
                task, &cfg.maze, &dc_cfg, &cfg.params, master,
            )?;
            record.wall_time = t0.elapsed().as_secs_f64();
            record.expansions = r.expansions;
            record.graph_edges = Some(r.graph.n_edges());
            if let Some(plan) = r.solution {
                record.success = true;
                record.plan_steps = Some(plan.steps());
            }
        }
        Prepared::Pc { graph } => {
            let infer = PcInferConfig {
                local_horizon: cfg.pc.local_horizon,
                local_budget: cfg.pc.local_budget,
                local_max_depth: cfg.pc.local_max_depth,
                base: cfg.oc.clone(),
                max_attempts: cfg.pc.max_attempts,
                stop_after: cfg.pc.stop_after,
            };
            let t0 = Instant::now();
            let r = run_preplan_inference(task, &cfg.maze, &cfg.params, graph, &infer, master)?;
            record.wall_time = t0.elapsed().as_secs_f64();
            record.expansions = r.expansions;
            record.graph_edges = Some(r.graph_edges);
            if let Some(plan) = r.solution {
                record.success = true;
                record.plan_steps = Some(plan.steps());
            }
        }
    }
    Ok(record)
}

/// Execute the task x seed grid. Records stream through `emit` in grid
/// order (task-major) regardless of scheduling.
pub fn run_benchmark(cfg: &RunConfig, emit: &mut dyn FnMut(&RunRecord)) -> Result<BenchOutput> {
    let tasks = cfg.sample_tasks()?;
    let (prepared, prep_seconds, graph_edges, build_expansions) = prepare(cfg)?;
    // a shared cache makes hit patterns depend on completion order, so
    // cached runs execute sequentially
    let workers = if cfg.cache_enabled { 1 } else { cfg.workers };
    let cache = if cfg.cache_enabled {
        Some(Mutex::new(PlanCache::new()))
    } else {
        None
    };

    let cells: Vec<(usize, u64)> = tasks
        .iter()
        .enumerate()
        .flat_map(|(t, _)| cfg.seeds.iter().map(move |s| (t, *s)))
        .collect();

    let mut records: Vec<RunRecord> = Vec::with_capacity(cells.len());
    if workers <= 1 {
        for &(task_id, seed) in &cells {
            let rec = run_cell(cfg, &prepared, cache.as_ref(), task_id, &tasks[task_id], seed)?;
            emit(&rec);
            records.push(rec);
        }
    } else {
        let next = AtomicUsize::new(0);
        let (tx, rx) = mpsc::channel::<(usize, Result<RunRecord>)>();
        std::thread::scope(|scope| {
            for _ in 0..workers.min(cells.len()) {
                let tx = tx.clone();
                let cells = &cells;
                let tasks = &tasks;
                let prepared = &prepared;
                let next = &next;
                scope.spawn(move || loop {
                    let idx = next.fetch_add(1, Ordering::Relaxed);
                    if idx >= cells.len() {
                        return;
                    }
                    let (task_id, seed) = cells[idx];
                    let rec = run_cell(cfg, prepared, None, task_id, &tasks[task_id], seed);
                    if tx.send((idx, rec)).is_err() {
                        return;
                    }
                });
            }
            drop(tx);
            // reorder buffer: emit the contiguous prefix as cells finish
            let mut pending: Vec<Option<RunRecord>> = (0..cells.len()).map(|_| None).collect();
            let mut emitted = 0;
            let mut first_err: Option<Error> = None;
            for (idx, rec) in rx {
                match rec {
                    Ok(r) => pending[idx] = Some(r),
                    Err(e) => {
                        if first_err.is_none() {
                            first_err = Some(e);
                        }
                    }
                }
                while emitted < cells.len() {
                    let Some(r) = pending[emitted].take() else {
                        break;
                    };
                    emit(&r);
                    records.push(r);
                    emitted += 1;
                }
            }
            match first_err {
                Some(e) => Err(e),
                None => Ok(()),
            }
        })?;
    }

    let aggregate = aggregate(&records);
    let cache_hits = cache.map(|c| c.into_inner().unwrap().total_hits());
    Ok(BenchOutput {
        records,
        aggregate,
        prep_seconds,
        graph_edges,
        build_expansions,
        cache_hits,
    })
}

/// One labelled cell of an ablation table.
#[derive(Clone, Debug)]
pub struct SuiteCell {
    pub label: String,
    pub output: BenchOutput,
}

/// Guidance-set ablation: the default set versus single fixed levels.
pub fn suite_guidance(
    base: &RunConfig,
    fixed_levels: &[f64],
    emit: &mut dyn FnMut(&RunRecord),
) -> Result<Vec<SuiteCell>> {
    let mut cells = Vec::new();
    let mut set_cfg = base.clone();
    set_cfg.composer = ComposerKind::Oc;
    cells.push(SuiteCell {
        label: "set".to_string(),
        output: run_benchmark(&set_cfg, emit)?,
    });
    for &g in fixed_levels {
        let mut cfg = set_cfg.clone();
        cfg.oc.guidance = GuidanceSet::fixed(g)?;
        cells.push(SuiteCell {
            label: format!("fixed:{g}"),
            output: run_benchmark(&cfg, emit)?,
        });
    }
    Ok(cells)
}

/// Fast-replanning ablation: simulation scoring with and without completion
/// across expansion budgets.
pub fn suite_fast_replanning(
    base: &RunConfig,
    budgets: &[usize],
    emit: &mut dyn FnMut(&RunRecord),
) -> Result<Vec<SuiteCell>> {
    let mut cells = Vec::new();
    for &budget in budgets {
        for fr in [true, false] {
            let mut cfg = base.clone();
            cfg.composer = ComposerKind::Oc;
            cfg.oc.budget = budget;
            cfg.oc.fast_replanning = fr;
            cells.push(SuiteCell {
                label: format!("{}:{}", if fr { "fr-on" } else { "fr-off" }, budget),
                output: run_benchmark(&cfg, emit)?,
            });
        }
    }
    Ok(cells)
}

/// Stitching-threshold sweep for the distributed composer. Values are the
/// reference thresholds; each is scaled by the desk-scale default so the
/// sweep covers the same ratios.
pub fn suite_eps(
    base: &RunConfig,
    reference_values: &[f64],
    emit: &mut dyn FnMut(&RunRecord),
) -> Result<Vec<SuiteCell>> {
    let scale = default_eps_stitch(base.maze.cell_size()) / 1.0;
    let mut cells = Vec::new();
    for &v in reference_values {
        let mut cfg = base.clone();
        cfg.composer = ComposerKind::Dc;
        cfg.dc.eps_connect = v * scale;
        cells.push(SuiteCell {
            label: format!("eps:{v}"),
            output: run_benchmark(&cfg, emit)?,
        });
    }
    Ok(cells)
}

/// Cache ablation outcome over a repeated-task schedule.
#[derive(Clone, Debug)]
pub struct CacheSuiteOutcome {
    pub cells: Vec<SuiteCell>,
    pub hits: u64,
    pub hit_rate: f64,
    pub wall_without: f64,
    pub wall_with: f64,
    /// wall_without / wall_with; larger means caching pays.
    pub speedup: f64,
}

/// Cache on/off over a schedule of repeated tasks: `distinct` tasks cycled
/// until `total_runs` runs have executed, single seed per instance.
pub fn suite_cache(
    base: &RunConfig,
    distinct: usize,
    total_runs: usize,
    emit: &mut dyn FnMut(&RunRecord),
) -> Result<CacheSuiteOutcome> {
    let run_one = |cache_on: bool, emit: &mut dyn FnMut(&RunRecord)| -> Result<BenchOutput> {
        let mut cfg = base.clone();
        cfg.composer = ComposerKind::Oc;
        cfg.cache_enabled = cache_on;
        cfg.tasks.count = distinct;
        let tasks = cfg.sample_tasks()?;
        let prepared = Prepared::Oc;
        let cache = if cache_on {
            Some(Mutex::new(PlanCache::new()))
        } else {
            None
        };
        let mut records = Vec::new();
        for i in 0..total_runs {
            let task_id = i % distinct;
            let rec = run_cell(
                &cfg,
                &prepared,
                cache.as_ref(),
                task_id,
                &tasks[task_id],
                cfg.seeds[0],
            )?;
            emit(&rec);
            records.push(rec);
        }
        let aggregate = aggregate(&records);
        Ok(BenchOutput {
            records,
            aggregate,
            prep_seconds: 0.0,
            graph_edges: None,
            build_expansions: None,
            cache_hits: cache.map(|c| c.into_inner().unwrap().total_hits()),
        })
    };
    let with_cache = run_one(true, emit)?;
    let without_cache = run_one(false, emit)?;
    let wall_with: f64 = with_cache.records.iter().map(|r| r.wall_time).sum();
    let wall_without: f64 = without_cache.records.iter().map(|r| r.wall_time).sum();
    let hits = with_cache.cache_hits.unwrap_or(0);
    Ok(CacheSuiteOutcome {
        hits,
        hit_rate: hits as f64 / total_runs as f64,
        wall_without,
        wall_with,
        speedup: if wall_with > 0.0 {
            wall_without / wall_with
        } else {
            f64::INFINITY
        },
        cells: vec![
            SuiteCell {
                label: "cache-on".into(),
                output: with_cache,
            },
            SuiteCell {
                label: "cache-off".into(),
                output: without_cache,
            },
        ],
    })
}

/// Aligned text table over suite cells.
pub fn format_table(title: &str, cells: &[SuiteCell]) -> String {
    let mut out = format!("# {title}\n");
    out.push_str(&format!(
        "{:<14} {:>5} {:>9} {:>8} {:>10} {:>10} {:>11}\n",
        "cell", "runs", "success%", "±std", "time(s)", "steps", "expansions"
    ));
    for c in cells {
        let a = &c.output.aggregate;
        out.push_str(&format!(
            "{:<14} {:>5} {:>9.1} {:>8.1} {:>10.3} {:>10} {:>11.1}\n",
            c.label,
            a.runs,
            100.0 * a.success_mean,
            100.0 * a.success_std,
            a.time_mean,
            a.steps_mean
                .map(|s| format!("{:.1}", s))
                .unwrap_or_else(|| "-".into()),
            a.expansions_mean
        ));
    }
    out
}
