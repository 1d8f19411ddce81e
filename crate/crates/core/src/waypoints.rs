//! Waypoint selection: k-means over dataset states, with centers snapped
//! into free space so they can serve as tree origins and graph vertices.

use rand::Rng;

use crate::error::{Error, Result};
use crate::maze::{Maze, State};
use crate::plan::Plan;
use crate::rng::{self, tags};

/// Instrumented outcome of one k-means run (centers are not yet snapped).
#[derive(Clone, Debug)]
pub struct KmeansRun {
    pub centers: Vec<State>,
    pub assignments: Vec<usize>,
    /// Sum of squared point-to-center distances under the final assignment.
    pub inertia: f64,
    /// Inertia recorded after the assignment step of every Lloyd iteration.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
}

fn d2(a: State, b: State) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

fn nearest_center(p: State, centers: &[State]) -> (usize, f64) {
    let mut best = (0usize, d2(p, centers[0]));
    for (i, c) in centers.iter().enumerate().skip(1) {
        let d = d2(p, *c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Lloyd's algorithm with k-means++ style seeding. Empty clusters are
/// reseeded to the point farthest from its assigned center. Deterministic
/// given the seed.
pub fn kmeans(points: &[State], k: usize, max_iters: usize, seed: u64) -> Result<KmeansRun> {
    if k < 1 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    if points.len() < k {
        return Err(Error::TooFewPoints {
            points: points.len(),
            k,
        });
    }
    let mut rng = rng::stream(seed, &[tags::KMEANS]);

    // k-means++ seeding
    let mut centers: Vec<State> = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())]);
    while centers.len() < k {
        let weights: Vec<f64> = points.iter().map(|p| nearest_center(*p, &centers).1).collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            centers.push(points[rng.random_range(0..points.len())]);
            continue;
        }
        let mut u: f64 = rng.random_range(0.0..total);
        let mut chosen = points.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                chosen = i;
                break;
            }
            u -= w;
        }
        centers.push(points[chosen]);
    }

    let mut assignments = vec![0usize; points.len()];
    let mut trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iters.max(1) {
        iterations += 1;
        // assignment under current centers
        let mut next: Vec<usize> = points
            .iter()
            .map(|p| nearest_center(*p, &centers).0)
            .collect();
        // reseed empty clusters to the farthest point, then reassign
        for _ in 0..k {
            let mut counts = vec![0usize; k];
            for &a in &next {
                counts[a] += 1;
            }
            let Some(empty) = counts.iter().position(|c| *c == 0) else {
                break;
            };
            let mut far_idx = 0usize;
            let mut far_d = -1.0f64;
            for (i, p) in points.iter().enumerate() {
                let d = d2(*p, centers[next[i]]);
                if d > far_d {
                    far_d = d;
                    far_idx = i;
                }
            }
            if far_d <= 0.0 {
                // every point already coincides with a center; an empty
                // cluster cannot be improved (duplicate inputs)
                break;
            }
            centers[empty] = points[far_idx];
            next = points.iter().map(|p| nearest_center(*p, &centers).0).collect();
        }
        let inertia: f64 = points
            .iter()
            .zip(&next)
            .map(|(p, a)| d2(*p, centers[*a]))
            .sum();
        trace.push(inertia);
        let converged = next == assignments && iterations > 1;
        assignments = next;
        if converged {
            break;
        }
        // update step: move each center to its cluster mean
        let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
        for (p, &a) in points.iter().zip(&assignments) {
            sums[a].0 += p.x;
            sums[a].1 += p.y;
            sums[a].2 += 1;
        }
        for (i, (sx, sy, n)) in sums.into_iter().enumerate() {
            if n > 0 {
                centers[i] = State::new(sx / n as f64, sy / n as f64);
            }
        }
    }
    let inertia = *trace.last().unwrap();
    Ok(KmeansRun {
        centers,
        assignments,
        inertia,
        inertia_trace: trace,
        iterations,
    })
}

/// Center of the nearest free cell. Waypoints serve as tree origins and
/// connection anchors, so they snap to corridor centers where passing
/// trajectories come closest.
pub fn snap_to_free(maze: &Maze, s: State) -> State {
    let mut best: Option<(f64, State)> = None;
    for (cx, cy) in maze.free_cells() {
        let center = maze.cell_center(cx, cy);
        let d = s.dist(center);
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, center));
        }
    }
    best.expect("maze has at least one free cell").1
}

/// Waypoints selected for the distributed and preplan composers.
#[derive(Clone, Debug)]
pub struct WaypointSet {
    pub centers: Vec<State>,
    pub k: usize,
    pub inertia: f64,
}

impl WaypointSet {
    /// Cluster all states of a dataset and snap centers into free space.
    pub fn from_dataset(
        maze: &Maze,
        dataset: &[Plan],
        k: usize,
        max_iters: usize,
        seed: u64,
    ) -> Result<WaypointSet> {
        let points: Vec<State> = dataset.iter().flat_map(|p| p.states.iter().cloned()).collect();
        Self::from_points(maze, &points, k, max_iters, seed)
    }

    pub fn from_points(
        maze: &Maze,
        points: &[State],
        k: usize,
        max_iters: usize,
        seed: u64,
    ) -> Result<WaypointSet> {
        let run = kmeans(points, k, max_iters, seed)?;
        let centers = run.centers.iter().map(|c| snap_to_free(maze, *c)).collect();
        Ok(WaypointSet {
            centers,
            k,
            inertia: run.inertia,
        })
    }

    /// One `x,y` line per center.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for c in &self.centers {
            out.push_str(&format!("{},{}\n", c.x, c.y));
        }
        out
    }

    pub fn from_lines(text: &str) -> Result<WaypointSet> {
        let mut centers = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (x, y) = line
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("bad waypoint line {line:?}")))?;
            centers.push(State::new(
                x.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad waypoint x in {line:?}")))?,
                y.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad waypoint y in {line:?}")))?,
            ));
        }
        if centers.is_empty() {
            return Err(Error::Config("waypoint list is empty".into()));
        }
        let k = centers.len();
        Ok(WaypointSet {
            centers,
            k,
            inertia: 0.0,
        })
    }
}

/// Desk-scale default cluster count by free area.
pub fn default_k(maze: &Maze) -> usize {
    let free = maze.n_free();
    if free < 30 {
        6
    } else if free < 100 {
        12
    } else {
        24
    }
}
