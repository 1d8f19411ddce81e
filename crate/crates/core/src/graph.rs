//! Directed connectivity graph over origins/waypoints.
//!
//! Vertices are states; edges carry executable plans and their step costs.
//! Both the distributed composer (dynamic connections) and the preplan
//! composer (offline all-pairs build) synthesize solutions over this graph:
//! shortest path by cost, then edge-plan concatenation.

use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};
use crate::maze::State;
use crate::plan::{Plan, SegmentMarker};

/// Synthetic provenance source id for junction-bridging steps.
const JUNCTION_SOURCE: u64 = u64::MAX;

const CODEC_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct PlanEdge {
    pub from: usize,
    pub to: usize,
    pub plan: Plan,
    /// Step count of the edge plan (`plan.len() - 1`).
    pub cost: usize,
}

/// A path through the graph: ordered edge endpoints from `source`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphPath {
    pub source: usize,
    pub edges: Vec<(usize, usize)>,
    pub total_cost: usize,
}

impl GraphPath {
    pub fn target(&self) -> usize {
        self.edges.last().map(|e| e.1).unwrap_or(self.source)
    }
}

#[derive(Clone, Debug)]
pub struct ConnectivityGraph {
    vertices: Vec<State>,
    edges: BTreeMap<(usize, usize), PlanEdge>,
    maze_hash: String,
    eps_stitch: f64,
}

impl ConnectivityGraph {
    pub fn new(vertices: Vec<State>, maze_hash: String, eps_stitch: f64) -> ConnectivityGraph {
        ConnectivityGraph {
            vertices,
            edges: BTreeMap::new(),
            maze_hash,
            eps_stitch,
        }
    }

    pub fn vertices(&self) -> &[State] {
        &self.vertices
    }

    pub fn maze_hash(&self) -> &str {
        &self.maze_hash
    }

    pub fn eps_stitch(&self) -> f64 {
        self.eps_stitch
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = &PlanEdge> {
        self.edges.values()
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&PlanEdge> {
        self.edges.get(&(from, to))
    }

    /// Append a vertex (used for virtual start/goal at query time).
    pub fn add_vertex(&mut self, s: State) -> usize {
        self.vertices.push(s);
        self.vertices.len() - 1
    }

    /// Insert a directed edge whose plan starts exactly at `vertices[from]`
    /// and ends within `eps_stitch` of `vertices[to]`. A parallel edge keeps
    /// whichever plan costs fewer steps. Returns whether the edge set
    /// changed.
    pub fn add_edge(&mut self, from: usize, to: usize, plan: Plan) -> Result<bool> {
        if from == to {
            return Err(Error::EdgeEndpoint("self-edges are not allowed".into()));
        }
        if from >= self.vertices.len() || to >= self.vertices.len() {
            return Err(Error::EdgeEndpoint(format!(
                "vertex out of range: {} -> {} with {} vertices",
                from,
                to,
                self.vertices.len()
            )));
        }
        let vf = self.vertices[from];
        let first = plan.first();
        if first.x != vf.x || first.y != vf.y {
            return Err(Error::EdgeEndpoint(format!(
                "plan starts at ({}, {}), vertex {} is at ({}, {})",
                first.x, first.y, from, vf.x, vf.y
            )));
        }
        let gap = plan.last().dist(self.vertices[to]);
        if gap > self.eps_stitch {
            return Err(Error::EdgeEndpoint(format!(
                "plan terminal is {} from vertex {}, eps_stitch is {}",
                gap, to, self.eps_stitch
            )));
        }
        let cost = plan.steps();
        match self.edges.get(&(from, to)) {
            Some(existing) if existing.cost <= cost => Ok(false),
            _ => {
                self.edges.insert((from, to), PlanEdge { from, to, plan, cost });
                Ok(true)
            }
        }
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (&(from, to), e) in &self.edges {
            adj[from].push((to, e.cost));
        }
        adj
    }

    /// Minimum-total-cost path by Dijkstra; `None` when disconnected.
    /// Deterministic: equal-cost alternatives resolve to the lowest vertex
    /// index by relaxation order.
    pub fn shortest_path(&self, source: usize, target: usize) -> Option<GraphPath> {
        self.shortest_path_impl(source, target, |_| 0.0)
    }

    /// A* with a Euclidean travel lower bound, available as a flagged
    /// option. Admissible when every edge plan covers at least
    /// `(dist - eps_stitch)` world units per `v_max`-bounded step, which
    /// holds for well-separated vertices; Dijkstra remains the default.
    pub fn shortest_path_astar(&self, source: usize, target: usize, v_max: f64) -> Option<GraphPath> {
        let goal = self.vertices[target];
        let eps = self.eps_stitch;
        self.shortest_path_impl(source, target, move |s: State| {
            ((s.dist(goal) - eps).max(0.0) / v_max).floor()
        })
    }

    fn shortest_path_impl<H: Fn(State) -> f64>(
        &self,
        source: usize,
        target: usize,
        heuristic: H,
    ) -> Option<GraphPath> {
        if source >= self.vertices.len() || target >= self.vertices.len() {
            return None;
        }
        if source == target {
            return Some(GraphPath {
                source,
                edges: Vec::new(),
                total_cost: 0,
            });
        }
        let adj = self.adjacency();
        let n = self.vertices.len();
        let mut dist = vec![usize::MAX; n];
        let mut pred = vec![usize::MAX; n];
        let mut settled = vec![false; n];
        // max-heap on Reverse((priority, vertex)); priority = cost + heuristic
        let mut heap: BinaryHeap<std::cmp::Reverse<(u64, usize, usize)>> = BinaryHeap::new();
        dist[source] = 0;
        let prio = |d: usize, v: usize| -> u64 { d as u64 + heuristic(self.vertices[v]) as u64 };
        heap.push(std::cmp::Reverse((prio(0, source), source, 0)));
        while let Some(std::cmp::Reverse((_, v, d))) = heap.pop() {
            if settled[v] || d > dist[v] {
                continue;
            }
            settled[v] = true;
            if v == target {
                break;
            }
            for &(to, cost) in &adj[v] {
                let nd = d + cost;
                if nd < dist[to] {
                    dist[to] = nd;
                    pred[to] = v;
                    heap.push(std::cmp::Reverse((prio(nd, to), to, nd)));
                }
            }
        }
        if dist[target] == usize::MAX {
            return None;
        }
        let mut edges = Vec::new();
        let mut cur = target;
        while cur != source {
            let p = pred[cur];
            edges.push((p, cur));
            cur = p;
        }
        edges.reverse();
        Some(GraphPath {
            source,
            edges,
            total_cost: dist[target],
        })
    }

    /// Concatenate the edge plans along a path. Exact junctions drop the
    /// duplicated state; gapped junctions (within `eps_stitch`) become one
    /// bridging step. Errors when a junction gap exceeds `eps_stitch`.
    pub fn synthesize_plan(&self, path: &GraphPath) -> Result<Plan> {
        if path.edges.is_empty() {
            return Ok(Plan::single(self.vertices[path.source]));
        }
        let mut out: Option<Plan> = None;
        for &(from, to) in &path.edges {
            let edge = self.edges.get(&(from, to)).ok_or_else(|| {
                Error::EdgeEndpoint(format!("path references missing edge {} -> {}", from, to))
            })?;
            out = Some(match out {
                None => edge.plan.clone(),
                Some(mut acc) => {
                    let gap = acc.last().dist(edge.plan.first());
                    if gap > self.eps_stitch {
                        return Err(Error::JunctionGap {
                            gap,
                            eps: self.eps_stitch,
                        });
                    }
                    if gap == 0.0 {
                        acc.states.extend_from_slice(&edge.plan.states[1..]);
                    } else {
                        acc.provenance.push(SegmentMarker {
                            source: JUNCTION_SOURCE,
                            guidance: 0.0,
                            steps: 1,
                        });
                        acc.states.extend_from_slice(&edge.plan.states);
                    }
                    acc.provenance.extend_from_slice(&edge.plan.provenance);
                    acc
                }
            });
        }
        Ok(out.unwrap())
    }

    /// Versioned structured-text encoding. Floats print in Rust's shortest
    /// round-trip form, so decode(encode(g)) is bit-exact.
    pub fn encode(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("version: {}\n", CODEC_VERSION));
        out.push_str(&format!("maze_hash: {}\n", self.maze_hash));
        out.push_str(&format!("eps_stitch: {}\n", self.eps_stitch));
        out.push_str(&format!("vertices: {}\n", self.vertices.len()));
        for v in &self.vertices {
            out.push_str(&format!("{},{}\n", v.x, v.y));
        }
        out.push_str(&format!("edges: {}\n", self.edges.len()));
        for e in self.edges.values() {
            out.push_str(&format!("edge: {} {} {} {}\n", e.from, e.to, e.cost, e.plan.len()));
            for s in &e.plan.states {
                out.push_str(&format!("{},{}\n", s.x, s.y));
            }
        }
        out
    }

    pub fn decode(text: &str) -> Result<ConnectivityGraph> {
        let mut lines = text.lines();
        let mut expect = |prefix: &str| -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| Error::CodecMalformed(format!("missing field {prefix}")))?;
            line.strip_prefix(prefix)
                .map(|s| s.trim().to_string())
                .ok_or_else(|| Error::CodecMalformed(format!("expected field {prefix}, got {line:?}")))
        };
        let version = expect("version:")?;
        if version != CODEC_VERSION.to_string() {
            return Err(Error::CodecVersion {
                found: version,
                expected: CODEC_VERSION,
            });
        }
        let maze_hash = expect("maze_hash:")?;
        let eps_stitch: f64 = expect("eps_stitch:")?
            .parse()
            .map_err(|_| Error::CodecMalformed("bad eps_stitch".into()))?;
        let n_vertices: usize = expect("vertices:")?
            .parse()
            .map_err(|_| Error::CodecMalformed("bad vertex count".into()))?;
        let parse_state = |line: &str| -> Result<State> {
            let (x, y) = line
                .split_once(',')
                .ok_or_else(|| Error::CodecMalformed(format!("bad state line {line:?}")))?;
            Ok(State::new(
                x.trim()
                    .parse()
                    .map_err(|_| Error::CodecMalformed(format!("bad x in {line:?}")))?,
                y.trim()
                    .parse()
                    .map_err(|_| Error::CodecMalformed(format!("bad y in {line:?}")))?,
            ))
        };
        let mut vertices = Vec::with_capacity(n_vertices);
        for _ in 0..n_vertices {
            let line = lines
                .next()
                .ok_or_else(|| Error::CodecMalformed("truncated vertex list".into()))?;
            vertices.push(parse_state(line)?);
        }
        let n_edges: usize = {
            let line = lines
                .next()
                .ok_or_else(|| Error::CodecMalformed("missing edges field".into()))?;
            line.strip_prefix("edges:")
                .ok_or_else(|| Error::CodecMalformed(format!("expected edges field, got {line:?}")))?
                .trim()
                .parse()
                .map_err(|_| Error::CodecMalformed("bad edge count".into()))?
        };
        let mut graph = ConnectivityGraph::new(vertices, maze_hash, eps_stitch);
        for _ in 0..n_edges {
            let header = lines
                .next()
                .ok_or_else(|| Error::CodecMalformed("truncated edge list".into()))?;
            let rest = header
                .strip_prefix("edge:")
                .ok_or_else(|| Error::CodecMalformed(format!("expected edge header, got {header:?}")))?;
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::CodecMalformed(format!("bad edge header {header:?}")));
            }
            let from: usize = fields[0]
                .parse()
                .map_err(|_| Error::CodecMalformed("bad edge from".into()))?;
            let to: usize = fields[1]
                .parse()
                .map_err(|_| Error::CodecMalformed("bad edge to".into()))?;
            let cost: usize = fields[2]
                .parse()
                .map_err(|_| Error::CodecMalformed("bad edge cost".into()))?;
            let n_states: usize = fields[3]
                .parse()
                .map_err(|_| Error::CodecMalformed("bad edge state count".into()))?;
            if n_states == 0 {
                return Err(Error::CodecMalformed("edge with zero states".into()));
            }
            let mut states = Vec::with_capacity(n_states);
            for _ in 0..n_states {
                let line = lines
                    .next()
                    .ok_or_else(|| Error::CodecMalformed("truncated edge states".into()))?;
                states.push(parse_state(line)?);
            }
            if cost != n_states - 1 {
                return Err(Error::CodecMalformed(format!(
                    "edge {} -> {} cost {} does not match {} states",
                    from, to, cost, n_states
                )));
            }
            let steps = n_states - 1;
            let plan = Plan::from_states(
                states,
                SegmentMarker {
                    source: 0,
                    guidance: 0.0,
                    steps,
                },
            );
            graph.add_edge(from, to, plan)?;
        }
        Ok(graph)
    }

    /// Structural equality over the codec-visible content: vertices, edge
    /// endpoints, costs, plan states, maze hash, and eps.
    pub fn same_structure(&self, other: &ConnectivityGraph) -> bool {
        self.maze_hash == other.maze_hash
            && self.eps_stitch == other.eps_stitch
            && self.vertices == other.vertices
            && self.edges.len() == other.edges.len()
            && self.edges.iter().zip(other.edges.iter()).all(|((ka, ea), (kb, eb))| {
                ka == kb && ea.cost == eb.cost && ea.plan.states == eb.plan.states
            })
    }
}
