//! Plan cache: reuse of previously generated plans across queries via
//! ε-matched keys. Entries are validated on insert and re-validated against
//! the environment on every hit.

use crate::error::{Error, Result};
use crate::maze::{segment_collision_free, KinematicParams, Maze, State};
use crate::plan::{check_plausibility, Plan, SegmentMarker};

const BRIDGE_SOURCE: u64 = u64::MAX - 1;

#[derive(Clone, Debug, PartialEq)]
pub struct CacheKey {
    /// Discrete label, e.g. a maze hash or task tag.
    pub context: String,
    pub start: State,
    pub goal: State,
}

#[derive(Clone, Debug)]
pub struct CacheEntry {
    pub key: CacheKey,
    pub plan: Plan,
    pub hits: u64,
}

#[derive(Clone, Debug, Default)]
pub struct PlanCache {
    entries: Vec<CacheEntry>,
}

impl PlanCache {
    pub fn new() -> PlanCache {
        PlanCache::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_hits(&self) -> u64 {
        self.entries.iter().map(|e| e.hits).sum()
    }

    pub fn entries(&self) -> &[CacheEntry] {
        &self.entries
    }

    /// Store a plan. The plan must be plausible and collision-free; an
    /// insert under an exactly matching key keeps the shorter plan.
    pub fn insert(
        &mut self,
        key: CacheKey,
        plan: Plan,
        maze: &Maze,
        params: &KinematicParams,
    ) -> Result<()> {
        if !check_plausibility(&plan, params.v_max) {
            return Err(Error::InvalidPlan("cached plan must be plausible".into()));
        }
        if !plan.is_collision_free(maze) {
            return Err(Error::InvalidPlan("cached plan must be collision-free".into()));
        }
        if let Some(existing) = self.entries.iter_mut().find(|e| e.key == key) {
            if plan.len() < existing.plan.len() {
                existing.plan = plan;
            }
            return Ok(());
        }
        self.entries.push(CacheEntry { key, plan, hits: 0 });
        Ok(())
    }

    /// Optional persistence: one header line per entry followed by the plan
    /// in the `t,x,y` text format, blocks separated by blank lines. The
    /// context label may contain spaces but not newlines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&format!(
                "entry start={},{} goal={},{} hits={} context={}\n",
                e.key.start.x, e.key.start.y, e.key.goal.x, e.key.goal.y, e.hits, e.key.context
            ));
            out.push_str(&e.plan.to_text());
        }
        out
    }

    /// Load persisted entries, re-validating each plan against the maze.
    pub fn from_text(text: &str, maze: &Maze, params: &KinematicParams) -> Result<PlanCache> {
        let mut cache = PlanCache::new();
        for block in text.split("\n\n") {
            if block.trim().is_empty() {
                continue;
            }
            let (header, plan_text) = block
                .split_once('\n')
                .ok_or_else(|| Error::PlanParse("cache entry without plan".into()))?;
            let rest = header
                .strip_prefix("entry ")
                .ok_or_else(|| Error::PlanParse(format!("bad cache header {header:?}")))?;
            let mut start = None;
            let mut goal = None;
            let mut hits = 0u64;
            let mut context = None;
            let mut cursor = rest;
            while !cursor.is_empty() {
                if let Some(ctx) = cursor.strip_prefix("context=") {
                    context = Some(ctx.to_string());
                    break;
                }
                let (field, tail) = cursor.split_once(' ').unwrap_or((cursor, ""));
                cursor = tail;
                let (k, v) = field
                    .split_once('=')
                    .ok_or_else(|| Error::PlanParse(format!("bad cache field {field:?}")))?;
                let parse_pt = |v: &str| -> Result<State> {
                    let (x, y) = v
                        .split_once(',')
                        .ok_or_else(|| Error::PlanParse(format!("bad point {v:?}")))?;
                    Ok(State::new(
                        x.parse().map_err(|_| Error::PlanParse("bad x".into()))?,
                        y.parse().map_err(|_| Error::PlanParse("bad y".into()))?,
                    ))
                };
                match k {
                    "start" => start = Some(parse_pt(v)?),
                    "goal" => goal = Some(parse_pt(v)?),
                    "hits" => hits = v.parse().map_err(|_| Error::PlanParse("bad hits".into()))?,
                    other => return Err(Error::PlanParse(format!("unknown cache field {other:?}"))),
                }
            }
            let key = CacheKey {
                context: context.ok_or_else(|| Error::PlanParse("cache entry missing context".into()))?,
                start: start.ok_or_else(|| Error::PlanParse("cache entry missing start".into()))?,
                goal: goal.ok_or_else(|| Error::PlanParse("cache entry missing goal".into()))?,
            };
            let plan = Plan::from_text(plan_text)?;
            cache.insert(key, plan, maze, params)?;
            cache.entries.last_mut().unwrap().hits = hits;
        }
        Ok(cache)
    }

    /// Retrieve a plan for a query whose context matches exactly and whose
    /// start and goal both lie within `eps_cache` (L2) of a stored entry.
    /// The nearest-start entry wins; the returned plan is re-rooted at the
    /// queried start by one bridging step when the starts differ. A miss is
    /// declared when the bridge would be illegal or the reused plan fails
    /// re-validation.
    pub fn lookup(
        &mut self,
        key: &CacheKey,
        eps_cache: f64,
        maze: &Maze,
        params: &KinematicParams,
    ) -> Option<Plan> {
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in self.entries.iter().enumerate() {
            if e.key.context != key.context {
                continue;
            }
            let ds = e.key.start.dist(key.start);
            let dg = e.key.goal.dist(key.goal);
            if ds <= eps_cache && dg <= eps_cache && best.is_none_or(|(_, bd)| ds < bd) {
                best = Some((i, ds));
            }
        }
        let (idx, ds) = best?;
        let entry_plan = self.entries[idx].plan.clone();
        let plan = if ds == 0.0 {
            entry_plan
        } else {
            if ds > params.v_max || !segment_collision_free(key.start, entry_plan.first(), maze) {
                return None;
            }
            let mut states = Vec::with_capacity(entry_plan.len() + 1);
            states.push(key.start);
            states.extend_from_slice(&entry_plan.states);
            let mut provenance = vec![SegmentMarker {
                source: BRIDGE_SOURCE,
                guidance: 0.0,
                steps: 1,
            }];
            provenance.extend_from_slice(&entry_plan.provenance);
            Plan { states, provenance }
        };
        if !check_plausibility(&plan, params.v_max) || !plan.is_collision_free(maze) {
            return None;
        }
        self.entries[idx].hits += 1;
        Some(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::parse_maze;

    fn open_room() -> Maze {
        parse_maze("########\n#......#\n#......#\n#......#\n#......#\n#......#\n#......#\n########")
            .unwrap()
            .maze
    }

    fn straight_plan(from: State, to: State, steps: usize) -> Plan {
        let states = (0..=steps)
            .map(|i| {
                let f = i as f64 / steps as f64;
                State::new(from.x + (to.x - from.x) * f, from.y + (to.y - from.y) * f)
            })
            .collect();
        Plan::from_states(
            states,
            SegmentMarker {
                source: 3,
                guidance: 1.0,
                steps,
            },
        )
    }

    fn key(start: State, goal: State) -> CacheKey {
        CacheKey {
            context: "maze-a".into(),
            start,
            goal,
        }
    }

    #[test]
    fn insert_then_exact_lookup() {
        let maze = open_room();
        let params = KinematicParams::default();
        let mut cache = PlanCache::new();
        let start = State::new(1.5, 1.5);
        let goal = State::new(6.0, 6.0);
        let plan = straight_plan(start, goal, 20);
        cache.insert(key(start, goal), plan.clone(), &maze, &params).unwrap();
        let hit = cache.lookup(&key(start, goal), 0.5, &maze, &params).unwrap();
        assert_eq!(hit.states, plan.states);
        assert_eq!(cache.total_hits(), 1);
    }

    #[test]
    fn duplicate_key_keeps_shorter_plan() {
        let maze = open_room();
        let params = KinematicParams::default();
        let mut cache = PlanCache::new();
        let start = State::new(1.5, 1.5);
        let goal = State::new(6.0, 6.0);
        cache.insert(key(start, goal), straight_plan(start, goal, 50), &maze, &params).unwrap();
        cache.insert(key(start, goal), straight_plan(start, goal, 40), &maze, &params).unwrap();
        assert_eq!(cache.len(), 1);
        let hit = cache.lookup(&key(start, goal), 0.5, &maze, &params).unwrap();
        assert_eq!(hit.len(), 41);
    }

    #[test]
    fn implausible_insert_rejected() {
        let maze = open_room();
        let params = KinematicParams::default();
        let mut cache = PlanCache::new();
        let start = State::new(1.5, 1.5);
        let goal = State::new(6.0, 6.0);
        let jump = Plan::from_states(
            vec![start, goal],
            SegmentMarker {
                source: 0,
                guidance: 0.0,
                steps: 1,
            },
        );
        assert!(cache.insert(key(start, goal), jump, &maze, &params).is_err());
    }

    #[test]
    fn near_miss_matching_rules() {
        let maze = open_room();
        let params = KinematicParams::default();
        let mut cache = PlanCache::new();
        let start = State::new(3.0, 3.0);
        let goal = State::new(6.0, 6.0);
        cache.insert(key(start, goal), straight_plan(start, goal, 20), &maze, &params).unwrap();
        let eps = 0.4;
        // displaced by eps/2: hit, re-rooted at the queried start
        let q = key(State::new(3.0 + eps / 2.0, 3.0), goal);
        let hit = cache.lookup(&q, eps, &maze, &params).unwrap();
        assert_eq!(hit.first(), q.start);
        assert_eq!(hit.states[1], start);
        assert!(check_plausibility(&hit, params.v_max));
        // displaced by 2 * eps: miss
        let far = key(State::new(3.0 + 2.0 * eps, 3.0), goal);
        assert!(cache.lookup(&far, eps, &maze, &params).is_none());
        // different context: miss
        let other = CacheKey {
            context: "maze-b".into(),
            ..q.clone()
        };
        assert!(cache.lookup(&other, eps, &maze, &params).is_none());
    }

    #[test]
    fn nearest_start_entry_wins() {
        let maze = open_room();
        let params = KinematicParams::default();
        let mut cache = PlanCache::new();
        let goal = State::new(6.0, 6.0);
        let near = State::new(3.1, 3.0);
        let far = State::new(3.3, 3.0);
        cache.insert(key(far, goal), straight_plan(far, goal, 30), &maze, &params).unwrap();
        cache.insert(key(near, goal), straight_plan(near, goal, 20), &maze, &params).unwrap();
        let q = key(State::new(3.0, 3.0), goal);
        let hit = cache.lookup(&q, 0.5, &maze, &params).unwrap();
        // linear-scan oracle: the 0.1-away entry beats the 0.3-away one
        assert_eq!(hit.states[1], near);
    }

    #[test]
    fn persistence_round_trip() {
        let maze = open_room();
        let params = KinematicParams::default();
        let mut cache = PlanCache::new();
        let start = State::new(1.5, 1.5);
        let goal = State::new(6.0, 6.0);
        cache
            .insert(key(start, goal), straight_plan(start, goal, 20), &maze, &params)
            .unwrap();
        let _ = cache.lookup(&key(start, goal), 0.5, &maze, &params).unwrap();
        let text = cache.to_text();
        let back = PlanCache::from_text(&text, &maze, &params).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back.entries()[0].hits, 1);
        assert_eq!(back.entries()[0].key, key(start, goal));
        assert_eq!(back.to_text(), text);
        assert!(PlanCache::from_text("entry nonsense\n0,1,1\n", &maze, &params).is_err());
    }

    #[test]
    fn bridge_through_wall_is_a_miss() {
        let maze = parse_maze("#####\n#.#.#\n#####").unwrap().maze;
        let params = KinematicParams {
            v_max: 3.0,
            ..KinematicParams::default()
        };
        let mut cache = PlanCache::new();
        let start = State::new(3.5, 1.5);
        let goal = State::new(3.5, 1.5);
        let stay = Plan::single(start);
        cache.insert(key(start, goal), stay, &maze, &params).unwrap();
        // queried start is across a wall; the bridge step is illegal
        let q = key(State::new(1.5, 1.5), goal);
        assert!(cache.lookup(&q, 3.0, &maze, &params).is_none());
    }
}
