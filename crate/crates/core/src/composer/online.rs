//! Online composer: budgeted plan-level tree search from the start state
//! until some node's stitched plan reaches the goal ball.

use crate::error::{Error, Result};
use crate::maze::{Maze, Task};
use crate::plan::{first_goal_hit, GuidanceSet, Plan};
use crate::proposer::{EvalSpec, GuidanceTarget, ProposerConfig};
use crate::tree::{SearchContext, SearchTree};

#[derive(Clone, Debug)]
pub struct OcConfig {
    /// Expansion budget B.
    pub budget: usize,
    pub proposer: ProposerConfig,
    pub guidance: GuidanceSet,
    pub c_uct: f64,
    /// Children per node (F).
    pub branching: usize,
    /// Maximum stitched segments per plan (M).
    pub max_depth: usize,
    /// Simulation scoring with fast completion; disable for the
    /// no-fast-replanning ablation.
    pub fast_replanning: bool,
    /// Extension (off by default): a fast completion that reaches the goal
    /// is promoted to a real child once per expansion.
    pub promote_completion: bool,
}

impl Default for OcConfig {
    fn default() -> Self {
        OcConfig {
            budget: 200,
            proposer: ProposerConfig::default(),
            guidance: GuidanceSet::default(),
            c_uct: std::f64::consts::SQRT_2,
            branching: 2,
            max_depth: 10,
            fast_replanning: true,
            promote_completion: false,
        }
    }
}

impl OcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget < 1 {
            return Err(Error::Config("budget must be >= 1".into()));
        }
        if self.branching < 1 {
            return Err(Error::Config("branching must be >= 1".into()));
        }
        if self.max_depth < 1 {
            return Err(Error::Config("max_depth must be >= 1".into()));
        }
        if !self.c_uct.is_finite() || self.c_uct < 0.0 {
            return Err(Error::Config("c_uct must be >= 0".into()));
        }
        self.proposer.validate()
    }
}

#[derive(Clone, Debug)]
pub struct OcReport {
    /// The goal-reaching plan, truncated at its first goal hit; `None` on
    /// failure.
    pub solution: Option<Plan>,
    /// Expansions performed (never exceeds the budget).
    pub expansions: usize,
    pub tree: SearchTree,
}

impl OcReport {
    pub fn success(&self) -> bool {
        self.solution.is_some()
    }
}

/// Run the online composer with goal attraction toward the task goal.
pub fn run_online_composer(task: &Task, maze: &Maze, cfg: &OcConfig, seed: u64) -> Result<OcReport> {
    run_online_composer_with_target(task, maze, cfg, GuidanceTarget::GoalAttraction(task.goal), seed)
}

/// Run the online composer with an explicit guidance target (the preplan
/// composer points it at waypoints).
pub fn run_online_composer_with_target(
    task: &Task,
    maze: &Maze,
    cfg: &OcConfig,
    target: GuidanceTarget,
    seed: u64,
) -> Result<OcReport> {
    let params = crate::maze::KinematicParams::default();
    run_with_params(task, maze, cfg, target, &params, seed)
}

pub fn run_with_params(
    task: &Task,
    maze: &Maze,
    cfg: &OcConfig,
    target: GuidanceTarget,
    params: &crate::maze::KinematicParams,
    seed: u64,
) -> Result<OcReport> {
    cfg.validate()?;
    task.validate(maze)?;
    params.validate()?;
    if task.horizon < cfg.proposer.h_plan {
        return Err(Error::Config(format!(
            "task horizon {} is shorter than h_plan {}",
            task.horizon, cfg.proposer.h_plan
        )));
    }
    let mut tree = SearchTree::new(
        task.start,
        cfg.guidance.clone(),
        cfg.c_uct,
        cfg.branching,
        cfg.max_depth,
        0,
    );
    let ctx = SearchContext {
        maze,
        params,
        proposer: &cfg.proposer,
        target,
        eval: EvalSpec {
            goal: task.goal,
            eps_goal: task.eps_goal,
            horizon: task.horizon,
            fast_replanning: cfg.fast_replanning,
        },
        master_seed: seed,
    };

    // the start may already satisfy the task
    if task.start.dist(task.goal) <= task.eps_goal {
        return Ok(OcReport {
            solution: Some(Plan::single(task.start)),
            expansions: 0,
            tree,
        });
    }

    let mut expansions = 0;
    while expansions < cfg.budget {
        let node = match tree.select_uct() {
            Ok(n) => n,
            Err(_) => break, // structurally saturated before the budget
        };
        let child = tree.expand(node, &ctx)?;
        expansions += 1;
        if let Some(t) = tree.node(child).goal_hit {
            if t <= task.horizon {
                let solution = tree.node(child).plan.truncated(t);
                return Ok(OcReport {
                    solution: Some(solution),
                    expansions,
                    tree,
                });
            }
        }
        let (reward, completion) = tree.simulate(child, &ctx);
        tree.backpropagate(child, reward);
        if cfg.promote_completion {
            if let Some(completed) = completion {
                if let Some(t) = first_goal_hit(&completed, task.goal, task.eps_goal) {
                    if t <= task.horizon {
                        let promoted = tree.insert_child(child, completed.truncated(t), &ctx)?;
                        let solution = tree.node(promoted).plan.clone();
                        return Ok(OcReport {
                            solution: Some(solution),
                            expansions,
                            tree,
                        });
                    }
                }
            }
        }
    }
    Ok(OcReport {
        solution: None,
        expansions,
        tree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::{parse_maze, sample_task, State};
    use crate::plan::check_plausibility;

    fn medium() -> Maze {
        parse_maze(crate::maze::MEDIUM_MAZE).unwrap().maze
    }

    #[test]
    fn immediate_success_when_start_near_goal() {
        let maze = medium();
        let task = Task {
            start: State::new(1.5, 1.5),
            goal: State::new(1.6, 1.5),
            eps_goal: 0.5,
            horizon: 400,
        };
        let r = run_online_composer(&task, &maze, &OcConfig::default(), 1).unwrap();
        assert!(r.success());
        assert_eq!(r.expansions, 0);
        assert_eq!(r.solution.unwrap().len(), 1);
    }

    #[test]
    fn walled_off_goal_fails_after_exactly_budget_expansions() {
        // goal chamber is sealed
        let maze = parse_maze("#######\n#...#.#\n#...#.#\n#######").unwrap().maze;
        let task = Task {
            start: State::new(1.5, 1.5),
            goal: State::new(5.5, 1.5),
            eps_goal: 0.3,
            horizon: 200,
        };
        let cfg = OcConfig {
            budget: 25,
            proposer: ProposerConfig {
                n_candidates: 3,
                h_plan: 10,
                ..ProposerConfig::default()
            },
            ..OcConfig::default()
        };
        let r = run_online_composer(&task, &maze, &cfg, 5).unwrap();
        assert!(!r.success());
        assert_eq!(r.expansions, 25);
    }

    #[test]
    fn solves_bundled_medium_and_solution_is_valid() {
        let maze = medium();
        let params = crate::maze::KinematicParams::default();
        let cfg = OcConfig::default();
        let mut successes = 0;
        for seed in 0..5 {
            let task = sample_task(&maze, 4.0, 0.5, 400, 100 + seed).unwrap();
            let r = run_online_composer(&task, &maze, &cfg, seed).unwrap();
            if let Some(plan) = &r.solution {
                successes += 1;
                assert_eq!(plan.first(), task.start);
                assert!(plan.last().dist(task.goal) <= task.eps_goal);
                assert!(plan.steps() <= task.horizon);
                assert!(check_plausibility(plan, params.v_max));
                assert!(plan.is_collision_free(&maze));
                assert!(r.expansions <= cfg.budget);
            }
        }
        assert!(successes >= 4, "only {successes}/5 medium tasks solved");
    }

    #[test]
    fn deterministic_given_seed() {
        let maze = medium();
        let task = sample_task(&maze, 4.0, 0.5, 400, 7).unwrap();
        let cfg = OcConfig {
            budget: 60,
            ..OcConfig::default()
        };
        let a = run_online_composer(&task, &maze, &cfg, 9).unwrap();
        let b = run_online_composer(&task, &maze, &cfg, 9).unwrap();
        assert_eq!(a.expansions, b.expansions);
        assert_eq!(a.solution.map(|p| p.states), b.solution.map(|p| p.states));
    }

    #[test]
    fn config_violations_are_errors() {
        let maze = medium();
        let task = sample_task(&maze, 2.0, 0.5, 400, 1).unwrap();
        let bad = OcConfig {
            budget: 0,
            ..OcConfig::default()
        };
        assert!(run_online_composer(&task, &maze, &bad, 1).is_err());
        let short_horizon = Task {
            horizon: 10,
            ..task
        };
        assert!(run_online_composer(&short_horizon, &maze, &OcConfig::default(), 1).is_err());
    }

    #[test]
    fn goal_reaching_completion_promotes_when_enabled() {
        let maze = parse_maze(crate::maze::LARGE_MAZE).unwrap().maze;
        let plain = OcConfig {
            budget: 120,
            ..OcConfig::default()
        };
        let promoting = OcConfig {
            promote_completion: true,
            ..plain.clone()
        };
        let mut promoted_earlier = 0;
        for seed in 0..6u64 {
            let task = sample_task(&maze, 6.0, 0.5, 400, 900 + seed).unwrap();
            let a = run_online_composer(&task, &maze, &plain, seed).unwrap();
            let b = run_online_composer(&task, &maze, &promoting, seed).unwrap();
            // promotion can only add ways to finish
            assert!(!a.success() || b.success());
            if b.success() {
                let p = b.solution.as_ref().unwrap();
                assert_eq!(p.first(), task.start);
                assert!(p.last().dist(task.goal) <= task.eps_goal);
                assert!(p.steps() <= task.horizon);
                assert!(check_plausibility(p, 0.5));
            }
            if b.success() && (!a.success() || b.expansions < a.expansions) {
                promoted_earlier += 1;
            }
        }
        assert!(
            promoted_earlier > 0,
            "promotion never finished a run earlier than the plain loop"
        );
    }

    #[test]
    fn budget_monotonicity_over_fixed_seeds() {
        let maze = parse_maze(crate::maze::LARGE_MAZE).unwrap().maze;
        let count = |budget: usize| -> usize {
            let cfg = OcConfig {
                budget,
                ..OcConfig::default()
            };
            (0..8)
                .filter(|s| {
                    let task = sample_task(&maze, 5.0, 0.5, 400, 300 + s).unwrap();
                    run_online_composer(&task, &maze, &cfg, *s).unwrap().success()
                })
                .count()
        };
        assert!(count(200) >= count(50));
    }
}
