//! Plans: timestamped 2-D state sequences, stitching, plausibility, goal
//! detection, and the reward function shared by every composer.
//!
//! Length conventions: a plan of `n` states has `n - 1` executable steps.
//! Horizons (`h_plan`, `L`) count steps, so a proposal of horizon `h`
//! produces `h + 1` states and stitching two plans drops one duplicated
//! junction state.

use crate::error::{Error, Result};
use crate::maze::{segment_collision_free, Maze, State};

/// Tolerance factor absorbing accumulation error in world-unit arithmetic.
const PLAUSIBILITY_SLACK: f64 = 1.0 + 1e-9;

/// Where a contiguous run of steps in a plan came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentMarker {
    /// Identifier of the producing draw (a derived seed in practice).
    pub source: u64,
    /// Guidance level the segment was generated with.
    pub guidance: f64,
    /// Number of steps the segment contributes.
    pub steps: usize,
}

/// An executable trajectory. Invariants (maintained by construction, checked
/// by [`check_plausibility`] and [`Plan::is_collision_free`]): consecutive
/// displacements stay within `v_max`, consecutive pairs are collision-free,
/// and segment markers cover exactly the plan's steps.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub states: Vec<State>,
    pub provenance: Vec<SegmentMarker>,
}

impl Plan {
    /// Root plan: a single state, no steps.
    pub fn single(state: State) -> Plan {
        Plan {
            states: vec![state],
            provenance: Vec::new(),
        }
    }

    pub fn from_states(states: Vec<State>, marker: SegmentMarker) -> Plan {
        debug_assert!(!states.is_empty());
        debug_assert_eq!(marker.steps, states.len() - 1);
        Plan {
            states,
            provenance: if marker.steps > 0 { vec![marker] } else { Vec::new() },
        }
    }

    pub fn first(&self) -> State {
        self.states[0]
    }

    pub fn last(&self) -> State {
        *self.states.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length >= 1 by construction
    }

    /// Executable step count (`len() - 1`).
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn is_collision_free(&self, maze: &Maze) -> bool {
        self.states
            .windows(2)
            .all(|w| segment_collision_free(w[0], w[1], maze))
    }

    /// Prefix of the plan up to and including state `index`, with provenance
    /// markers trimmed to the kept steps.
    pub fn truncated(&self, index: usize) -> Plan {
        let index = index.min(self.states.len() - 1);
        let states = self.states[..=index].to_vec();
        let mut provenance = Vec::new();
        let mut remaining = index;
        for m in &self.provenance {
            if remaining == 0 {
                break;
            }
            let take = m.steps.min(remaining);
            provenance.push(SegmentMarker { steps: take, ..*m });
            remaining -= take;
        }
        Plan { states, provenance }
    }

    /// Serialize as one `t,x,y` line per state.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (t, s) in self.states.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", t, s.x, s.y));
        }
        out
    }

    /// Parse the `t,x,y` line format. Provenance is not part of the text
    /// format; the result carries a single synthetic marker.
    pub fn from_text(text: &str) -> Result<Plan> {
        let mut states = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::PlanParse(format!("line {}: expected t,x,y", i + 1)));
            }
            let t: usize = parts[0]
                .trim()
                .parse()
                .map_err(|_| Error::PlanParse(format!("line {}: bad index", i + 1)))?;
            if t != states.len() {
                return Err(Error::PlanParse(format!(
                    "line {}: index {} out of order",
                    i + 1,
                    t
                )));
            }
            let x: f64 = parts[1]
                .trim()
                .parse()
                .map_err(|_| Error::PlanParse(format!("line {}: bad x", i + 1)))?;
            let y: f64 = parts[2]
                .trim()
                .parse()
                .map_err(|_| Error::PlanParse(format!("line {}: bad y", i + 1)))?;
            states.push(State::new(x, y));
        }
        if states.is_empty() {
            return Err(Error::PlanParse("no states".into()));
        }
        let steps = states.len() - 1;
        Ok(Plan::from_states(
            states,
            SegmentMarker {
                source: 0,
                guidance: 0.0,
                steps,
            },
        ))
    }
}

/// Serialize a dataset: plan blocks in the `t,x,y` format separated by one
/// blank line.
pub fn dataset_to_text(plans: &[Plan]) -> String {
    let mut out = String::new();
    for (i, p) in plans.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&p.to_text());
    }
    out
}

pub fn dataset_from_text(text: &str) -> Result<Vec<Plan>> {
    let mut plans = Vec::new();
    for block in text.split("\n\n") {
        if block.trim().is_empty() {
            continue;
        }
        plans.push(Plan::from_text(block)?);
    }
    Ok(plans)
}

/// A non-empty set of non-negative guidance levels; the meta-action attached
/// to a tree expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct GuidanceSet {
    levels: Vec<f64>,
}

impl GuidanceSet {
    pub fn new(levels: Vec<f64>) -> Result<GuidanceSet> {
        if levels.is_empty() {
            return Err(Error::Config("guidance set must be non-empty".into()));
        }
        if levels.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::Config("guidance levels must be >= 0".into()));
        }
        Ok(GuidanceSet { levels })
    }

    /// Single fixed level (used by the fixed-guidance ablation).
    pub fn fixed(level: f64) -> Result<GuidanceSet> {
        GuidanceSet::new(vec![level])
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn max_level(&self) -> f64 {
        self.levels.iter().cloned().fold(0.0, f64::max)
    }
}

impl Default for GuidanceSet {
    fn default() -> Self {
        GuidanceSet {
            levels: vec![0.0, 0.1, 0.5, 1.0, 2.0],
        }
    }
}

/// Concatenate `child` onto `parent`. The child must start exactly at the
/// parent's terminal state; the duplicated junction state is dropped once so
/// step indices equal executable step count.
pub fn stitch(parent: &Plan, child: &Plan) -> Result<Plan> {
    let p = parent.last();
    let c = child.first();
    if p.x != c.x || p.y != c.y {
        return Err(Error::JunctionMismatch {
            px: p.x,
            py: p.y,
            cx: c.x,
            cy: c.y,
        });
    }
    let mut states = Vec::with_capacity(parent.len() + child.len() - 1);
    states.extend_from_slice(&parent.states);
    states.extend_from_slice(&child.states[1..]);
    let mut provenance = parent.provenance.clone();
    provenance.extend_from_slice(&child.provenance);
    Ok(Plan { states, provenance })
}

/// True iff every consecutive displacement stays within `v_max` (with a tiny
/// slack factor). Single-state plans are vacuously plausible.
pub fn check_plausibility(plan: &Plan, v_max: f64) -> bool {
    let bound = v_max * PLAUSIBILITY_SLACK;
    plan.states.windows(2).all(|w| w[0].dist(w[1]) <= bound)
}

/// Smallest step index whose state lies within `eps_goal` of the goal.
pub fn first_goal_hit(plan: &Plan, goal: State, eps_goal: f64) -> Option<usize> {
    plan.states.iter().position(|s| s.dist(goal) <= eps_goal)
}

/// Reward of a complete or simulated plan against a goal: `(H - t) / H` for
/// the first goal hit at step `t`, and 0 for implausible plans, plans that
/// never reach the goal, or hits at or beyond the horizon.
pub fn reward(plan: &Plan, goal: State, eps_goal: f64, horizon: usize, v_max: f64) -> f64 {
    debug_assert!(horizon >= 1);
    if !check_plausibility(plan, v_max) {
        return 0.0;
    }
    match first_goal_hit(plan, goal, eps_goal) {
        None => 0.0,
        Some(t) if t >= horizon => 0.0,
        Some(t) => (horizon - t) as f64 / horizon as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line_plan(x0: f64, n: usize, dx: f64) -> Plan {
        let states: Vec<State> = (0..n).map(|i| State::new(x0 + i as f64 * dx, 0.0)).collect();
        let steps = n - 1;
        Plan::from_states(
            states,
            SegmentMarker {
                source: 1,
                guidance: 0.5,
                steps,
            },
        )
    }

    #[test]
    fn stitch_root_and_lengths() {
        let root = Plan::single(State::new(0.0, 0.0));
        let child = line_plan(0.0, 5, 0.1);
        let s = stitch(&root, &child).unwrap();
        assert_eq!(s.len(), 5);
        let a = line_plan(0.0, 40, 0.1);
        let b = line_plan(0.0 + 39.0 * 0.1, 40, 0.1);
        assert_eq!(stitch(&a, &b).unwrap().len(), 79);
    }

    #[test]
    fn stitch_junction_mismatch() {
        let a = line_plan(0.0, 3, 0.1);
        let b = line_plan(0.7, 3, 0.1); // first state 0.5 away from a's last (0.2)
        assert!(matches!(stitch(&a, &b), Err(Error::JunctionMismatch { .. })));
    }

    #[test]
    fn plausibility() {
        let ok = line_plan(0.0, 10, 0.5);
        assert!(check_plausibility(&ok, 0.5));
        let mut bad = ok.clone();
        bad.states[5] = State::new(bad.states[4].x + 5.0, 0.0); // 10x v_max jump
        assert!(!check_plausibility(&bad, 0.5));
        assert!(check_plausibility(&Plan::single(State::new(1.0, 1.0)), 0.5));
    }

    #[test]
    fn goal_hit_first_index() {
        let p = line_plan(0.0, 12, 0.5);
        let goal = State::new(3.5, 0.0);
        assert_eq!(first_goal_hit(&p, goal, 1e-9), Some(7));
        assert_eq!(first_goal_hit(&p, State::new(100.0, 0.0), 0.5), None);
        // enters the ball at index 3 and stays near it later; scan oracle picks 3
        let goal2 = State::new(1.5, 0.0);
        let hit = first_goal_hit(&p, goal2, 0.01).unwrap();
        let oracle = (0..p.len()).find(|i| p.states[*i].dist(goal2) <= 0.01).unwrap();
        assert_eq!(hit, oracle);
    }

    #[test]
    fn reward_formula() {
        // a plan hitting the goal exactly at t = 500
        let goal = State::new(5.0, 5.0);
        let p = Plan {
            states: (0..=500)
                .map(|i| if i == 500 { goal } else { State::new(0.0, 0.0) })
                .collect(),
            provenance: vec![],
        };
        // the final jump is large; a generous v_max isolates the formula
        assert_eq!(reward(&p, goal, 0.1, 1000, 100.0), 0.5);
        // same plan but implausible under a small v_max scores zero
        assert_eq!(reward(&p, goal, 0.1, 1000, 0.5), 0.0);
        // no goal hit scores zero
        assert_eq!(reward(&p, State::new(50.0, 50.0), 0.1, 1000, 100.0), 0.0);
    }

    #[test]
    fn reward_zero_at_or_beyond_horizon() {
        let p = line_plan(0.0, 11, 0.5);
        let goal = p.states[10];
        assert_eq!(reward(&p, goal, 1e-9, 10, 0.5), 0.0);
        assert!(reward(&p, goal, 1e-9, 11, 0.5) > 0.0);
    }

    #[test]
    fn truncated_trims_provenance() {
        let a = line_plan(0.0, 5, 0.1);
        let b = line_plan(0.4, 5, 0.1);
        let s = stitch(&a, &b).unwrap();
        let t = s.truncated(6);
        assert_eq!(t.len(), 7);
        assert_eq!(t.provenance.len(), 2);
        assert_eq!(t.provenance[0].steps, 4);
        assert_eq!(t.provenance[1].steps, 2);
        let whole = s.truncated(100);
        assert_eq!(whole.len(), s.len());
    }

    #[test]
    fn text_round_trip() {
        let p = line_plan(0.25, 7, 0.125);
        let q = Plan::from_text(&p.to_text()).unwrap();
        assert_eq!(p.states, q.states);
        assert!(Plan::from_text("0,1.0\n").is_err());
        assert!(Plan::from_text("").is_err());
    }

    #[test]
    fn guidance_set_validation() {
        assert!(GuidanceSet::new(vec![]).is_err());
        assert!(GuidanceSet::new(vec![-0.1]).is_err());
        assert_eq!(GuidanceSet::default().levels(), &[0.0, 0.1, 0.5, 1.0, 2.0]);
        assert_eq!(GuidanceSet::default().max_level(), 2.0);
    }

    proptest! {
        #[test]
        fn stitch_associative_over_states(
            n1 in 2usize..6, n2 in 2usize..6, n3 in 2usize..6,
            dx in 0.01f64..0.4,
        ) {
            let a = line_plan(0.0, n1, dx);
            let b = line_plan(a.last().x, n2, dx);
            let c = line_plan(b.last().x, n3, dx);
            let left = stitch(&stitch(&a, &b).unwrap(), &c).unwrap();
            let right = stitch(&a, &stitch(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(&left.states, &right.states);
            // provenance markers always cover the steps exactly
            let covered: usize = left.provenance.iter().map(|m| m.steps).sum();
            prop_assert_eq!(covered, left.steps());
        }

        #[test]
        fn truncation_keeps_provenance_consistent(
            n1 in 2usize..6, n2 in 2usize..6, cut in 0usize..12,
            dx in 0.01f64..0.4,
        ) {
            let a = line_plan(0.0, n1, dx);
            let b = line_plan(a.last().x, n2, dx);
            let s = stitch(&a, &b).unwrap();
            let t = s.truncated(cut);
            let covered: usize = t.provenance.iter().map(|m| m.steps).sum();
            prop_assert_eq!(covered, t.steps());
            prop_assert_eq!(&t.states[..], &s.states[..t.len()]);
        }

        #[test]
        fn reward_bounded_and_monotone(
            t in 0usize..200, h in 1usize..200
        ) {
            let goal = State::new(1.0, 1.0);
            let p = Plan {
                states: (0..=t).map(|i| if i == t { goal } else { State::new(0.0, 0.0) }).collect(),
                provenance: vec![],
            };
            let r = reward(&p, goal, 0.01, h, 1e6);
            prop_assert!((0.0..=1.0).contains(&r));
            if t < 200 {
                let p2 = Plan {
                    states: (0..=(t + 1)).map(|i| if i == t + 1 { goal } else { State::new(0.0, 0.0) }).collect(),
                    provenance: vec![],
                };
                let r2 = reward(&p2, goal, 0.01, h, 1e6);
                prop_assert!(r2 <= r);
            }
        }

        #[test]
        fn plausibility_composes_across_exact_junctions(
            n1 in 2usize..8, n2 in 2usize..8, dx in 0.01f64..0.6,
        ) {
            let a = line_plan(0.0, n1, dx);
            let b = line_plan(a.last().x, n2, dx);
            let s = stitch(&a, &b).unwrap();
            let v_max = 0.5;
            prop_assert_eq!(
                check_plausibility(&s, v_max),
                check_plausibility(&a, v_max) && check_plausibility(&b, v_max)
            );
        }
    }
}
