//! Plan-level tree search: UCT selection, stitching expansion with
//! guidance-set meta-actions, fast-replanning simulation, and
//! backpropagation.
//!
//! Nodes carry whole stitched plans from the root, so one expansion extends
//! the frontier by a full proposer horizon. A tree is single-writer; trees
//! used in parallel (the distributed composer) are fully independent and
//! draw from seed streams derived from `(master seed, tree id, node id,
//! candidate index)`, so results never depend on scheduling.

use crate::error::{Error, Result};
use crate::maze::{KinematicParams, Maze};
use crate::plan::{first_goal_hit, stitch, GuidanceSet, Plan};
use crate::proposer::{best_of_n, fast_complete, EvalSpec, GuidanceTarget, ProposerConfig};
use crate::rng::{self, tags};

/// Everything an expansion or simulation needs besides the tree itself.
#[derive(Clone, Copy)]
pub struct SearchContext<'a> {
    pub maze: &'a Maze,
    pub params: &'a KinematicParams,
    pub proposer: &'a ProposerConfig,
    pub target: GuidanceTarget,
    pub eval: EvalSpec,
    pub master_seed: u64,
}

#[derive(Clone, Debug)]
pub struct PlanNode {
    pub id: usize,
    pub parent: Option<usize>,
    /// Stitched plan from the root's state to this node's frontier.
    pub plan: Plan,
    /// Number of stitched segments (root is 0).
    pub depth: usize,
    pub visits: u64,
    pub value_sum: f64,
    pub guidance: GuidanceSet,
    pub children: Vec<usize>,
    pub terminal: bool,
    /// First step index at which `plan` enters the goal ball, if any.
    pub goal_hit: Option<usize>,
}

impl PlanNode {
    pub fn mean_value(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.value_sum / self.visits as f64
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchTree {
    nodes: Vec<PlanNode>,
    pub c_uct: f64,
    pub branching: usize,
    pub max_depth: usize,
    pub tree_id: u64,
}

impl SearchTree {
    pub fn new(
        root: crate::maze::State,
        guidance: GuidanceSet,
        c_uct: f64,
        branching: usize,
        max_depth: usize,
        tree_id: u64,
    ) -> SearchTree {
        SearchTree {
            nodes: vec![PlanNode {
                id: 0,
                parent: None,
                plan: Plan::single(root),
                depth: 0,
                visits: 0,
                value_sum: 0.0,
                guidance,
                children: Vec::new(),
                terminal: false,
                goal_hit: None,
            }],
            c_uct,
            branching,
            max_depth,
            tree_id,
        }
    }

    pub fn node(&self, id: usize) -> &PlanNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a tree always has its root
    }

    pub fn nodes(&self) -> &[PlanNode] {
        &self.nodes
    }

    pub fn root(&self) -> &PlanNode {
        &self.nodes[0]
    }

    fn expandable(&self, id: usize) -> bool {
        let n = &self.nodes[id];
        !n.terminal && n.depth < self.max_depth && n.children.len() < self.branching
    }

    /// UCT score of a child under its parent; unvisited children rank first.
    fn uct_score(&self, parent: usize, child: usize) -> f64 {
        let c = &self.nodes[child];
        if c.visits == 0 {
            return f64::INFINITY;
        }
        let p = &self.nodes[parent];
        let parent_visits = p.visits.max(1) as f64;
        c.mean_value() + self.c_uct * (parent_visits.ln() / c.visits as f64).sqrt()
    }

    /// Descend from the root through fully-expanded nodes by UCT and return
    /// the first node that can take another child. Terminal children are
    /// never entered; dead branches are backtracked. Errors when the whole
    /// tree is structurally saturated.
    pub fn select_uct(&self) -> Result<usize> {
        self.select_from(0).ok_or(Error::TreeSaturated)
    }

    fn select_from(&self, id: usize) -> Option<usize> {
        if self.expandable(id) {
            return Some(id);
        }
        let node = &self.nodes[id];
        let mut order: Vec<usize> = node
            .children
            .iter()
            .cloned()
            .filter(|c| !self.nodes[*c].terminal)
            .collect();
        // unvisited first (leftmost), then descending UCT, ties to lowest id
        order.sort_by(|a, b| {
            let sa = self.uct_score(id, *a);
            let sb = self.uct_score(id, *b);
            sb.partial_cmp(&sa).unwrap().then(a.cmp(b))
        });
        for child in order {
            if let Some(found) = self.select_from(child) {
                return Some(found);
            }
        }
        None
    }

    /// Expand `id` by one stitched segment drawn with the node's guidance
    /// set. The child inherits the set and is marked terminal when its plan
    /// enters the goal ball.
    pub fn expand(&mut self, id: usize, ctx: &SearchContext) -> Result<usize> {
        let node = &self.nodes[id];
        if node.terminal {
            return Err(Error::NodeNotExpandable(id, "node is terminal".into()));
        }
        if node.depth >= self.max_depth {
            return Err(Error::NodeNotExpandable(id, "depth limit reached".into()));
        }
        if node.children.len() >= self.branching {
            return Err(Error::NodeNotExpandable(id, "node is saturated".into()));
        }
        let child_index = node.children.len();
        let seed = rng::derive(
            ctx.master_seed,
            &[tags::EXPAND, self.tree_id, id as u64, child_index as u64],
        );
        let pick = best_of_n(
            &node.plan,
            ctx.target,
            &node.guidance,
            ctx.proposer,
            ctx.maze,
            ctx.params,
            &ctx.eval,
            seed,
        );
        let plan = stitch(&node.plan, &pick.segment).expect("segment starts at node terminal");
        self.insert_child(id, plan, ctx)
    }

    /// Insert a fully-formed child plan under `parent`. Used by expansion and
    /// by the goal-promotion extension of the online composer.
    pub fn insert_child(&mut self, parent: usize, plan: Plan, ctx: &SearchContext) -> Result<usize> {
        let id = self.nodes.len();
        let goal_hit = first_goal_hit(&plan, ctx.eval.goal, ctx.eval.eps_goal);
        let depth = self.nodes[parent].depth + 1;
        let guidance = self.nodes[parent].guidance.clone();
        self.nodes.push(PlanNode {
            id,
            parent: Some(parent),
            plan,
            depth,
            visits: 0,
            value_sum: 0.0,
            guidance,
            children: Vec::new(),
            terminal: goal_hit.is_some(),
            goal_hit,
        });
        self.nodes[parent].children.push(id);
        Ok(id)
    }

    /// Score a node: nodes that already hit the goal score `(H - t) / H`
    /// directly; otherwise the plan is fast-completed to the horizon and
    /// scored, or scored as-is when fast replanning is disabled. Returns the
    /// completion so callers can inspect it.
    pub fn simulate(&self, id: usize, ctx: &SearchContext) -> (f64, Option<Plan>) {
        let node = &self.nodes[id];
        let h = ctx.eval.horizon;
        if let Some(t) = node.goal_hit {
            let r = if t >= h { 0.0 } else { (h - t) as f64 / h as f64 };
            return (r, None);
        }
        if !ctx.eval.fast_replanning {
            let r = crate::plan::reward(&node.plan, ctx.eval.goal, ctx.eval.eps_goal, h, ctx.params.v_max);
            return (r, None);
        }
        let seed = rng::derive(ctx.master_seed, &[tags::SIMULATE, self.tree_id, id as u64]);
        let completed = fast_complete(
            node.plan.clone(),
            ctx.eval.goal,
            ctx.eval.eps_goal,
            node.guidance.max_level(),
            h,
            ctx.proposer.jump_factor,
            ctx.maze,
            ctx.params,
            seed,
        );
        let r = crate::plan::reward(&completed, ctx.eval.goal, ctx.eval.eps_goal, h, ctx.params.v_max);
        (r, Some(completed))
    }

    /// Add one visit and the reward to `id` and every ancestor up to the
    /// root. No other node changes.
    pub fn backpropagate(&mut self, id: usize, reward: f64) {
        let mut cur = Some(id);
        while let Some(i) = cur {
            self.nodes[i].visits += 1;
            self.nodes[i].value_sum += reward;
            cur = self.nodes[i].parent;
        }
    }

    /// Line-oriented dump: one line per node carrying the parent edge and
    /// per-node statistics.
    pub fn dump(&self) -> String {
        let mut out = format!("tree {} nodes {}\n", self.tree_id, self.nodes.len());
        for n in &self.nodes {
            let parent = n
                .parent
                .map(|p| p.to_string())
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "node {} parent {} depth {} visits {} value {} terminal {} states {}\n",
                n.id,
                parent,
                n.depth,
                n.visits,
                n.value_sum,
                if n.terminal { 1 } else { 0 },
                n.plan.len()
            ));
        }
        out
    }
}
