//! The guided trajectory proposer.
//!
//! Everything above this module (trees, composers, graphs) only sees plans,
//! so the proposer is swappable behind this boundary. The implementation is
//! guided shooting: each step blends a unit drift toward the target with a
//! unit-disc noise draw, weighted by `w(g) = g / (g + 1)`, and advances
//! through the stop-at-wall dynamics. `g = 0` is the unconditional prior
//! (pure random walk); larger levels pull harder toward the target.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::maze::{step_dynamics, KinematicParams, Maze, State};
use crate::plan::{reward, stitch, GuidanceSet, Plan, SegmentMarker};
use crate::rng::{self, tags};

/// Proposal parameters: per-plan horizon, best-of-N width, and the jump
/// factor of the fast completion.
#[derive(Clone, Copy, Debug)]
pub struct ProposerConfig {
    /// Steps per proposed plan.
    pub h_plan: usize,
    /// Candidates drawn per expansion.
    pub n_candidates: usize,
    /// Dynamics steps taken per fixed-direction round of the fast completion.
    pub jump_factor: usize,
}

impl Default for ProposerConfig {
    fn default() -> Self {
        ProposerConfig {
            h_plan: 40,
            n_candidates: 50,
            jump_factor: 10,
        }
    }
}

impl ProposerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.h_plan < 1 {
            return Err(Error::Config("h_plan must be >= 1".into()));
        }
        if self.n_candidates < 1 {
            return Err(Error::Config("n_candidates must be >= 1".into()));
        }
        if self.jump_factor < 1 {
            return Err(Error::Config("jump_factor must be >= 1".into()));
        }
        Ok(())
    }
}

/// Drift weight of a guidance level: `w(0) = 0`, strictly increasing,
/// bounded below 1.
pub fn drift_weight(g: f64) -> f64 {
    g / (g + 1.0)
}

/// What the proposer is pulled toward: the task goal, or a waypoint during
/// graph building.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GuidanceTarget {
    GoalAttraction(State),
    WaypointAttraction(State),
}

impl GuidanceTarget {
    pub fn position(&self) -> State {
        match self {
            GuidanceTarget::GoalAttraction(s) | GuidanceTarget::WaypointAttraction(s) => *s,
        }
    }
}

/// How candidate plans are scored: against which goal ball, over which
/// horizon, and whether the fast completion runs first.
#[derive(Clone, Copy, Debug)]
pub struct EvalSpec {
    pub goal: State,
    pub eps_goal: f64,
    /// Scoring horizon `H` in steps; also the completion length bound.
    pub horizon: usize,
    /// When false, plans are scored as-is with no completion (the
    /// no-fast-replanning ablation).
    pub fast_replanning: bool,
}

/// Blended step direction, or `None` when drift and noise cancel out.
fn guided_direction(
    rng: &mut ChaCha8Rng,
    from: State,
    target: State,
    w: f64,
) -> Option<(f64, f64)> {
    let (ex, ey) = rng::unit_disc(rng);
    let dx = target.x - from.x;
    let dy = target.y - from.y;
    let n = (dx * dx + dy * dy).sqrt();
    let (ux, uy) = if n > 1e-12 { (dx / n, dy / n) } else { (0.0, 0.0) };
    let bx = w * ux + (1.0 - w) * ex;
    let by = w * uy + (1.0 - w) * ey;
    let bn = (bx * bx + by * by).sqrt();
    if bn > 1e-12 {
        Some((bx / bn, by / bn))
    } else {
        None
    }
}

/// Propose a plan of `h` steps starting exactly at `start`, drawing noise
/// from the given stream. Collision-free and plausible by construction.
#[allow(clippy::too_many_arguments)]
pub fn propose_with_rng(
    start: State,
    target: GuidanceTarget,
    g: f64,
    h: usize,
    maze: &Maze,
    params: &KinematicParams,
    rng: &mut ChaCha8Rng,
    source: u64,
) -> Plan {
    let w = drift_weight(g);
    let tpos = target.position();
    let mut states = Vec::with_capacity(h + 1);
    states.push(start);
    for _ in 0..h {
        let cur = *states.last().unwrap();
        let next = match guided_direction(rng, cur, tpos, w) {
            Some((dx, dy)) => step_dynamics(
                cur,
                (dx * params.v_max, dy * params.v_max),
                params,
                maze,
            ),
            None => cur,
        };
        states.push(next);
    }
    Plan::from_states(
        states,
        SegmentMarker {
            source,
            guidance: g,
            steps: h,
        },
    )
}

/// Seeded wrapper around [`propose_with_rng`].
pub fn propose(
    start: State,
    target: GuidanceTarget,
    g: f64,
    h: usize,
    maze: &Maze,
    params: &KinematicParams,
    seed: u64,
) -> Plan {
    let mut rng = rng::stream_from(seed);
    propose_with_rng(start, target, g, h, maze, params, &mut rng, seed)
}

/// Outcome of a best-of-N draw: the winning segment (not yet stitched onto
/// the prefix), its post-completion reward, and the level it was drawn with.
#[derive(Clone, Debug)]
pub struct BestOfN {
    pub segment: Plan,
    pub reward: f64,
    pub guidance: f64,
}

/// Draw `n_candidates` guided proposals from the prefix's terminal state,
/// each with a level sampled uniformly from the guidance set, and return the
/// one whose completion to the task horizon scores highest. Candidates are
/// scored on the whole stitched plan, never in isolation; ties keep the
/// lowest candidate index.
#[allow(clippy::too_many_arguments)]
pub fn best_of_n(
    prefix: &Plan,
    target: GuidanceTarget,
    guidance: &GuidanceSet,
    cfg: &ProposerConfig,
    maze: &Maze,
    params: &KinematicParams,
    eval: &EvalSpec,
    seed: u64,
) -> BestOfN {
    let mut best: Option<BestOfN> = None;
    for i in 0..cfg.n_candidates {
        let cand_seed = rng::derive(seed, &[tags::CANDIDATE, i as u64]);
        let mut rng = rng::stream_from(cand_seed);
        let levels = guidance.levels();
        let g = levels[rng.random_range(0..levels.len())];
        let segment = propose_with_rng(
            prefix.last(),
            target,
            g,
            cfg.h_plan,
            maze,
            params,
            &mut rng,
            cand_seed,
        );
        let stitched = stitch(prefix, &segment).expect("proposal starts at prefix terminal");
        let r = if eval.fast_replanning {
            let completed = fast_complete_with_rng(
                stitched,
                eval.goal,
                eval.eps_goal,
                guidance.max_level(),
                eval.horizon,
                cfg.jump_factor,
                maze,
                params,
                &mut rng,
                cand_seed,
            );
            reward(&completed, eval.goal, eval.eps_goal, eval.horizon, params.v_max)
        } else {
            reward(&stitched, eval.goal, eval.eps_goal, eval.horizon, params.v_max)
        };
        if best.as_ref().is_none_or(|b| r > b.reward) {
            best = Some(BestOfN {
                segment,
                reward: r,
                guidance: g,
            });
        }
    }
    best.expect("n_candidates >= 1")
}

#[allow(clippy::too_many_arguments)]
/// Cheaply extend `prefix` toward the goal until it hits the goal ball,
/// reaches `l_horizon` steps, or stops making progress (goal distance not
/// improved over 3 consecutive rounds). Each round fixes one blended
/// direction and takes up to `jump` dynamics steps along it.
pub fn fast_complete_with_rng(
    prefix: Plan,
    goal: State,
    eps_goal: f64,
    g_fast: f64,
    l_horizon: usize,
    jump: usize,
    maze: &Maze,
    params: &KinematicParams,
    rng: &mut ChaCha8Rng,
    source: u64,
) -> Plan {
    if prefix.last().dist(goal) <= eps_goal || prefix.steps() >= l_horizon {
        return prefix;
    }
    let w = drift_weight(g_fast);
    let mut plan = prefix;
    let mut best_dist = plan.last().dist(goal);
    let mut stalled = 0;
    while plan.steps() < l_horizon {
        let cur = plan.last();
        let dir = guided_direction(rng, cur, goal, w);
        let substeps = jump.min(l_horizon - plan.steps());
        let mut c = cur;
        let mut hit = false;
        for _ in 0..substeps {
            c = match dir {
                Some((dx, dy)) => step_dynamics(
                    c,
                    (dx * params.v_max, dy * params.v_max),
                    params,
                    maze,
                ),
                None => c,
            };
            plan.states.push(c);
            if c.dist(goal) <= eps_goal {
                hit = true;
            }
        }
        let taken = plan.states.len() - 1
            - plan.provenance.iter().map(|m| m.steps).sum::<usize>();
        plan.provenance.push(SegmentMarker {
            source,
            guidance: g_fast,
            steps: taken,
        });
        if hit {
            break;
        }
        let d = plan.last().dist(goal);
        if d < best_dist - 1e-12 {
            best_dist = d;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 3 {
                break;
            }
        }
    }
    plan
}

/// Seeded wrapper around [`fast_complete_with_rng`].
#[allow(clippy::too_many_arguments)]
pub fn fast_complete(
    prefix: Plan,
    goal: State,
    eps_goal: f64,
    g_fast: f64,
    l_horizon: usize,
    jump: usize,
    maze: &Maze,
    params: &KinematicParams,
    seed: u64,
) -> Plan {
    let mut rng = rng::stream_from(seed);
    fast_complete_with_rng(
        prefix, goal, eps_goal, g_fast, l_horizon, jump, maze, params, &mut rng, seed,
    )
}
