//! Occupancy-grid maze worlds with point-mass dynamics.
//!
//! A [`Maze`] is a rectangular grid of `Wall`/`Free` cells with an enforced
//! wall boundary. States live in continuous world coordinates; a cell spans
//! `cell_size` world units per axis. Motion is displacement-based with a
//! stop-at-wall response: a step travels along its segment until it would
//! enter a wall cell and halts a contact margin short of the face.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::plan::{Plan, SegmentMarker};
use crate::rng::{self, tags};

/// Distance kept between a stopped state and the wall face it hit, so states
/// stay strictly inside free space and never flap across the boundary.
pub const CONTACT_MARGIN: f64 = 1e-6;

pub const MEDIUM_MAZE: &str = include_str!("../mazes/medium.txt");
pub const LARGE_MAZE: &str = include_str!("../mazes/large.txt");
pub const GIANT_MAZE: &str = include_str!("../mazes/giant.txt");

/// Bundled desk-scale maze by name (`medium`, `large`, `giant`).
pub fn builtin_maze(name: &str) -> Option<&'static str> {
    match name {
        "medium" => Some(MEDIUM_MAZE),
        "large" => Some(LARGE_MAZE),
        "giant" => Some(GIANT_MAZE),
        _ => None,
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Cell {
    Wall,
    Free,
}

/// A position in world coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct State {
    pub x: f64,
    pub y: f64,
}

impl State {
    pub fn new(x: f64, y: f64) -> Self {
        State { x, y }
    }

    pub fn dist(self, other: State) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Point-mass step limits.
#[derive(Clone, Copy, Debug)]
pub struct KinematicParams {
    /// Maximum displacement per step, world units.
    pub v_max: f64,
    /// Direction churn of the dataset random walk, in [0, 1].
    pub noise_scale: f64,
}

impl Default for KinematicParams {
    fn default() -> Self {
        KinematicParams {
            v_max: 0.5,
            noise_scale: 0.3,
        }
    }
}

impl KinematicParams {
    pub fn validate(&self) -> Result<()> {
        if !self.v_max.is_finite() || self.v_max <= 0.0 {
            return Err(Error::Config(format!("v_max must be > 0, got {}", self.v_max)));
        }
        if !(0.0..=1.0).contains(&self.noise_scale) {
            return Err(Error::Config(format!(
                "noise_scale must be in [0, 1], got {}",
                self.noise_scale
            )));
        }
        Ok(())
    }
}

/// A goal-reaching query: reach `goal` within `eps_goal` using at most
/// `horizon` executable steps.
#[derive(Clone, Copy, Debug)]
pub struct Task {
    pub start: State,
    pub goal: State,
    pub eps_goal: f64,
    pub horizon: usize,
}

impl Task {
    pub fn validate(&self, maze: &Maze) -> Result<()> {
        if !maze.free_at(self.start) {
            return Err(Error::InvalidTask("start is not in a free cell".into()));
        }
        if !maze.free_at(self.goal) {
            return Err(Error::InvalidTask("goal is not in a free cell".into()));
        }
        if !self.eps_goal.is_finite() || self.eps_goal <= 0.0 {
            return Err(Error::InvalidTask("eps_goal must be > 0".into()));
        }
        if self.horizon < 1 {
            return Err(Error::InvalidTask("horizon must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Maze {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    cell_size: f64,
    hash: String,
}

/// Result of parsing an ASCII maze; `S`/`G` markers are reported separately
/// as cell-center states when present.
#[derive(Clone, Debug)]
pub struct ParsedMaze {
    pub maze: Maze,
    pub start: Option<State>,
    pub goal: Option<State>,
}

/// Parse an ASCII grid: `#` is wall, `.`/`S`/`G` are free. The outer boundary
/// is forced to wall even when the text says otherwise.
pub fn parse_maze(text: &str) -> Result<ParsedMaze> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
    if lines.is_empty() {
        return Err(Error::MazeParse("empty input".into()));
    }
    let width = lines[0].chars().count();
    let height = lines.len();
    let mut cells = vec![Cell::Wall; width * height];
    let mut start_cell = None;
    let mut goal_cell = None;
    for (y, line) in lines.iter().enumerate() {
        let row: Vec<char> = line.chars().collect();
        if row.len() != width {
            return Err(Error::MazeParse(format!(
                "ragged rows: row {} has {} cells, expected {}",
                y,
                row.len(),
                width
            )));
        }
        for (x, ch) in row.iter().enumerate() {
            let cell = match ch {
                '#' => Cell::Wall,
                '.' => Cell::Free,
                'S' => {
                    start_cell = Some((x, y));
                    Cell::Free
                }
                'G' => {
                    goal_cell = Some((x, y));
                    Cell::Free
                }
                other => {
                    return Err(Error::MazeParse(format!(
                        "invalid character {:?} at row {}, col {}",
                        other, y, x
                    )));
                }
            };
            cells[y * width + x] = cell;
        }
    }
    // Boundary walls keep the dynamics total.
    for x in 0..width {
        cells[x] = Cell::Wall;
        cells[(height - 1) * width + x] = Cell::Wall;
    }
    for y in 0..height {
        cells[y * width] = Cell::Wall;
        cells[y * width + width - 1] = Cell::Wall;
    }
    if !cells.contains(&Cell::Free) {
        return Err(Error::MazeParse("no free cell".into()));
    }
    let maze = Maze::from_cells(width, height, cells, 1.0);
    let center = |c: Option<(usize, usize)>| -> Result<Option<State>> {
        match c {
            None => Ok(None),
            Some((x, y)) => {
                if maze.is_free_cell(x as i64, y as i64) {
                    Ok(Some(maze.cell_center(x, y)))
                } else {
                    Err(Error::MazeParse(format!(
                        "marker at row {}, col {} lies on the enforced wall boundary",
                        y, x
                    )))
                }
            }
        }
    };
    let start = center(start_cell)?;
    let goal = center(goal_cell)?;
    Ok(ParsedMaze { maze, start, goal })
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Maze {
    fn from_cells(width: usize, height: usize, cells: Vec<Cell>, cell_size: f64) -> Maze {
        let mut normalized = String::with_capacity((width + 1) * height);
        for y in 0..height {
            for x in 0..width {
                normalized.push(match cells[y * width + x] {
                    Cell::Wall => '#',
                    Cell::Free => '.',
                });
            }
            normalized.push('\n');
        }
        let hash = format!("{:016x}", fnv1a(normalized.as_bytes()));
        Maze {
            width,
            height,
            cells,
            cell_size,
            hash,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    /// Content digest of the normalized grid text; binds persisted plan
    /// graphs to the maze they were built on.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn world_width(&self) -> f64 {
        self.width as f64 * self.cell_size
    }

    pub fn world_height(&self) -> f64 {
        self.height as f64 * self.cell_size
    }

    /// Cell at grid coordinates; anything out of bounds reads as wall.
    pub fn cell(&self, cx: i64, cy: i64) -> Cell {
        if cx < 0 || cy < 0 || cx as usize >= self.width || cy as usize >= self.height {
            Cell::Wall
        } else {
            self.cells[cy as usize * self.width + cx as usize]
        }
    }

    pub fn is_free_cell(&self, cx: i64, cy: i64) -> bool {
        self.cell(cx, cy) == Cell::Free
    }

    pub fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        (
            (x / self.cell_size).floor() as i64,
            (y / self.cell_size).floor() as i64,
        )
    }

    pub fn free_at(&self, s: State) -> bool {
        let (cx, cy) = self.cell_of(s.x, s.y);
        self.is_free_cell(cx, cy)
    }

    pub fn cell_center(&self, cx: usize, cy: usize) -> State {
        State::new(
            (cx as f64 + 0.5) * self.cell_size,
            (cy as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn free_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for cy in 0..self.height {
            for cx in 0..self.width {
                if self.cells[cy * self.width + cx] == Cell::Free {
                    out.push((cx, cy));
                }
            }
        }
        out
    }

    pub fn n_free(&self) -> usize {
        self.cells.iter().filter(|c| **c == Cell::Free).count()
    }

    /// Uniform point inside a uniformly chosen free cell, inset from the
    /// cell faces so sampled states sit strictly in the interior.
    pub fn random_free_point(&self, rng: &mut ChaCha8Rng) -> State {
        let free = self.free_cells();
        let (cx, cy) = free[rng.random_range(0..free.len())];
        let u: f64 = rng.random_range(0.1..0.9);
        let v: f64 = rng.random_range(0.1..0.9);
        State::new(
            (cx as f64 + u) * self.cell_size,
            (cy as f64 + v) * self.cell_size,
        )
    }
}

/// Distance along `(dx, dy)` (as a fraction `t` of the full displacement) at
/// which the ray from `(x0, y0)` first crosses into a wall cell, if it does
/// within `t <= 1`. The starting cell is not checked.
fn first_wall_hit(maze: &Maze, x0: f64, y0: f64, dx: f64, dy: f64) -> Option<f64> {
    if dx == 0.0 && dy == 0.0 {
        return None;
    }
    let cs = maze.cell_size;
    let (mut cx, mut cy) = maze.cell_of(x0, y0);
    let step_x: i64 = if dx > 0.0 {
        1
    } else if dx < 0.0 {
        -1
    } else {
        0
    };
    let step_y: i64 = if dy > 0.0 {
        1
    } else if dy < 0.0 {
        -1
    } else {
        0
    };
    let mut t_max_x = if dx > 0.0 {
        ((cx + 1) as f64 * cs - x0) / dx
    } else if dx < 0.0 {
        (cx as f64 * cs - x0) / dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy > 0.0 {
        ((cy + 1) as f64 * cs - y0) / dy
    } else if dy < 0.0 {
        (cy as f64 * cs - y0) / dy
    } else {
        f64::INFINITY
    };
    let t_delta_x = if dx != 0.0 { cs / dx.abs() } else { f64::INFINITY };
    let t_delta_y = if dy != 0.0 { cs / dy.abs() } else { f64::INFINITY };
    loop {
        if t_max_x < t_max_y {
            let t = t_max_x;
            if t > 1.0 {
                return None;
            }
            cx += step_x;
            t_max_x += t_delta_x;
            if !maze.is_free_cell(cx, cy) {
                return Some(t);
            }
        } else if t_max_y < t_max_x {
            let t = t_max_y;
            if t > 1.0 {
                return None;
            }
            cy += step_y;
            t_max_y += t_delta_y;
            if !maze.is_free_cell(cx, cy) {
                return Some(t);
            }
        } else {
            // Exact corner crossing: the ray grazes both side cells on its
            // way into the diagonal one; block if any of the three is a wall.
            let t = t_max_x;
            if t > 1.0 {
                return None;
            }
            let side_a = maze.is_free_cell(cx + step_x, cy);
            let side_b = maze.is_free_cell(cx, cy + step_y);
            cx += step_x;
            cy += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
            if !side_a || !side_b || !maze.is_free_cell(cx, cy) {
                return Some(t);
            }
        }
    }
}

/// Advance one step: the action is clipped to `v_max` and motion stops at the
/// first wall intersection along the segment. Total for any valid input.
pub fn step_dynamics(s: State, action: (f64, f64), params: &KinematicParams, maze: &Maze) -> State {
    let (mut dx, mut dy) = action;
    let n = (dx * dx + dy * dy).sqrt();
    if n == 0.0 {
        return s;
    }
    if n > params.v_max {
        let f = params.v_max / n;
        dx *= f;
        dy *= f;
    }
    match first_wall_hit(maze, s.x, s.y, dx, dy) {
        None => State::new(s.x + dx, s.y + dy),
        Some(t) => {
            let len = (dx * dx + dy * dy).sqrt();
            let travel = (t * len - CONTACT_MARGIN).max(0.0);
            let f = travel / len;
            State::new(s.x + dx * f, s.y + dy * f)
        }
    }
}

/// True iff the segment from `p0` to `p1` touches only free cells.
pub fn segment_collision_free(p0: State, p1: State, maze: &Maze) -> bool {
    if !maze.free_at(p0) {
        return false;
    }
    first_wall_hit(maze, p0.x, p0.y, p1.x - p0.x, p1.y - p0.y).is_none()
}

/// Generate `n` collision-free correlated random walks of `h_train` states
/// each. Both start positions and step noise come from per-trajectory derived
/// streams, so the dataset only depends on `seed`.
pub fn generate_dataset(
    maze: &Maze,
    n: usize,
    h_train: usize,
    params: &KinematicParams,
    seed: u64,
) -> Vec<Plan> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = rng::stream(seed, &[tags::DATASET, i as u64]);
        let start = maze.random_free_point(&mut rng);
        let mut states = Vec::with_capacity(h_train);
        states.push(start);
        let (ex, ey) = rng::unit_disc(&mut rng);
        let en = (ex * ex + ey * ey).sqrt();
        let mut dir = if en > 1e-12 { (ex / en, ey / en) } else { (1.0, 0.0) };
        let ns = params.noise_scale;
        for _ in 0..h_train.saturating_sub(1) {
            let cur = *states.last().unwrap();
            let (ex, ey) = rng::unit_disc(&mut rng);
            let bx = (1.0 - ns) * dir.0 + ns * ex;
            let by = (1.0 - ns) * dir.1 + ns * ey;
            let bn = (bx * bx + by * by).sqrt();
            if bn > 1e-12 {
                dir = (bx / bn, by / bn);
            }
            let next = step_dynamics(
                cur,
                (dir.0 * params.v_max, dir.1 * params.v_max),
                params,
                maze,
            );
            states.push(next);
        }
        let steps = states.len() - 1;
        out.push(Plan::from_states(
            states,
            SegmentMarker {
                source: rng::derive(seed, &[tags::DATASET, i as u64]),
                guidance: 0.0,
                steps,
            },
        ));
    }
    out
}

/// Sample a task whose start and goal are at least `min_separation` apart.
pub fn sample_task(
    maze: &Maze,
    min_separation: f64,
    eps_goal: f64,
    horizon: usize,
    seed: u64,
) -> Result<Task> {
    if maze.n_free() < 2 {
        return Err(Error::Config("task sampling needs at least 2 free cells".into()));
    }
    if !eps_goal.is_finite() || eps_goal <= 0.0 {
        return Err(Error::Config("eps_goal must be > 0".into()));
    }
    if horizon < 1 {
        return Err(Error::Config("horizon must be >= 1".into()));
    }
    let mut rng = rng::stream(seed, &[tags::TASK]);
    const ATTEMPTS: usize = 10_000;
    for _ in 0..ATTEMPTS {
        let start = maze.random_free_point(&mut rng);
        let goal = maze.random_free_point(&mut rng);
        if start.dist(goal) >= min_separation {
            return Ok(Task {
                start,
                goal,
                eps_goal,
                horizon,
            });
        }
    }
    Err(Error::TaskSampling { attempts: ATTEMPTS })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan;

    fn open_room() -> Maze {
        // 8x8 with fully open 6x6 interior
        let text = "########\n#......#\n#......#\n#......#\n#......#\n#......#\n#......#\n########\n";
        parse_maze(text).unwrap().maze
    }

    #[test]
    fn parse_tiny() {
        let p = parse_maze("###\n#.#\n###").unwrap();
        assert_eq!(p.maze.n_free(), 1);
        assert_eq!(p.maze.width(), 3);
        assert_eq!(p.maze.height(), 3);
    }

    #[test]
    fn parse_ragged() {
        assert!(matches!(parse_maze("##\n#"), Err(Error::MazeParse(_))));
    }

    #[test]
    fn parse_empty_and_all_wall() {
        assert!(parse_maze("").is_err());
        assert!(parse_maze("##\n##").is_err());
    }

    #[test]
    fn parse_invalid_char() {
        assert!(parse_maze("###\n#x#\n###").is_err());
    }

    #[test]
    fn parse_markers() {
        let p = parse_maze("#####\n#S.G#\n#####").unwrap();
        assert_eq!(p.start, Some(State::new(1.5, 1.5)));
        assert_eq!(p.goal, Some(State::new(3.5, 1.5)));
    }

    #[test]
    fn boundary_enforced_even_if_text_open() {
        let p = parse_maze("...\n...\n...").unwrap();
        assert_eq!(p.maze.n_free(), 1); // only the center survives
        assert!(p.maze.is_free_cell(1, 1));
    }

    #[test]
    fn bundled_free_counts_match_character_oracle() {
        for text in [MEDIUM_MAZE, LARGE_MAZE, GIANT_MAZE] {
            let non_wall = text.chars().filter(|c| *c == '.').count();
            let maze = parse_maze(text).unwrap().maze;
            assert_eq!(maze.n_free(), non_wall);
        }
    }

    #[test]
    fn bundled_mazes_are_connected() {
        for text in [MEDIUM_MAZE, LARGE_MAZE, GIANT_MAZE] {
            let maze = parse_maze(text).unwrap().maze;
            let free = maze.free_cells();
            let mut seen = vec![free[0]];
            let mut queue = vec![free[0]];
            while let Some((cx, cy)) = queue.pop() {
                for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                    let n = ((cx as i64 + dx) as usize, (cy as i64 + dy) as usize);
                    if maze.is_free_cell(n.0 as i64, n.1 as i64) && !seen.contains(&n) {
                        seen.push(n);
                        queue.push(n);
                    }
                }
            }
            assert_eq!(seen.len(), free.len(), "maze has unreachable free cells");
        }
    }

    #[test]
    fn step_zero_action() {
        let maze = open_room();
        let s = State::new(3.0, 3.0);
        let p = KinematicParams::default();
        assert_eq!(step_dynamics(s, (0.0, 0.0), &p, &maze), s);
    }

    #[test]
    fn step_clips_to_v_max() {
        let maze = open_room();
        let p = KinematicParams::default();
        let s = State::new(3.0, 3.0);
        let out = step_dynamics(s, (2.0 * p.v_max, 0.0), &p, &maze);
        assert!((out.dist(s) - p.v_max).abs() < 1e-12);
    }

    #[test]
    fn step_stops_at_wall_face_minus_margin() {
        let maze = open_room();
        let p = KinematicParams::default();
        // wall face at x = 7.0 (rightmost free column spans [6,7))
        let s = State::new(6.9, 3.0);
        let out = step_dynamics(s, (0.5, 0.0), &p, &maze);
        assert!((out.x - (7.0 - CONTACT_MARGIN)).abs() < 1e-9);
        assert_eq!(out.y, 3.0);
        assert!(maze.free_at(out));
    }

    #[test]
    fn segment_trivial_cases() {
        let maze = open_room();
        let a = State::new(2.2, 2.2);
        assert!(segment_collision_free(a, a, &maze));
        assert!(segment_collision_free(a, State::new(2.8, 2.7), &maze));
    }

    #[test]
    fn segment_through_wall_blocked() {
        let p = parse_maze("#####\n#.#.#\n#####").unwrap();
        let a = State::new(1.5, 1.5);
        let b = State::new(3.5, 1.5);
        // midpoint (2.5, 1.5) sits in the wall cell
        assert!(!segment_collision_free(a, b, &p.maze));
    }

    /// Fine-sampling oracle for segment collision checks.
    fn oracle_segment_free(p0: State, p1: State, maze: &Maze) -> bool {
        const SAMPLES: usize = 1000;
        (0..=SAMPLES).all(|i| {
            let t = i as f64 / SAMPLES as f64;
            maze.free_at(State::new(
                p0.x + (p1.x - p0.x) * t,
                p0.y + (p1.y - p0.y) * t,
            ))
        })
    }

    #[test]
    fn segment_agrees_with_sampling_oracle() {
        let maze = parse_maze(LARGE_MAZE).unwrap().maze;
        let mut rng = rng::stream_from(77);
        let params = KinematicParams::default();
        let mut blocked = 0;
        for _ in 0..2000 {
            let p0 = maze.random_free_point(&mut rng);
            let (ex, ey) = rng::unit_disc(&mut rng);
            let p1 = State::new(p0.x + ex * params.v_max, p0.y + ey * params.v_max);
            let got = segment_collision_free(p0, p1, &maze);
            let want = oracle_segment_free(p0, p1, &maze);
            assert_eq!(got, want, "disagreement on segment {:?} -> {:?}", p0, p1);
            if !got {
                blocked += 1;
            }
        }
        assert!(blocked > 0, "fuzz never produced a blocked segment");
    }

    #[test]
    fn dynamics_never_lands_in_wall() {
        let maze = parse_maze(GIANT_MAZE).unwrap().maze;
        let params = KinematicParams::default();
        let mut rng = rng::stream_from(5);
        let mut s = maze.random_free_point(&mut rng);
        for i in 0..20_000 {
            let (ax, ay) = rng::unit_disc(&mut rng);
            let scale: f64 = rng.random_range(0.0..3.0);
            s = step_dynamics(s, (ax * scale, ay * scale), &params, &maze);
            assert!(maze.free_at(s), "landed in wall at iteration {}: {:?}", i, s);
            if i % 500 == 0 {
                s = maze.random_free_point(&mut rng);
            }
        }
    }

    #[test]
    fn dataset_empty_and_deterministic() {
        let maze = parse_maze(MEDIUM_MAZE).unwrap().maze;
        let params = KinematicParams::default();
        assert!(generate_dataset(&maze, 0, 40, &params, 1).is_empty());
        let a = generate_dataset(&maze, 5, 40, &params, 9);
        let b = generate_dataset(&maze, 5, 40, &params, 9);
        assert_eq!(a.len(), 5);
        for (pa, pb) in a.iter().zip(&b) {
            assert_eq!(pa.states, pb.states);
        }
    }

    #[test]
    fn dataset_plans_are_plausible_and_collision_free() {
        let maze = parse_maze(MEDIUM_MAZE).unwrap().maze;
        let params = KinematicParams::default();
        for p in generate_dataset(&maze, 5, 40, &params, 3) {
            assert!(p.states.len() <= 40);
            assert!(plan::check_plausibility(&p, params.v_max));
            assert!(p.is_collision_free(&maze));
        }
    }

    #[test]
    fn task_sampling() {
        let maze = parse_maze(MEDIUM_MAZE).unwrap().maze;
        let t = sample_task(&maze, 0.0, 0.5, 100, 4).unwrap();
        assert!(maze.free_at(t.start) && maze.free_at(t.goal));
        let t2 = sample_task(&maze, 0.0, 0.5, 100, 4).unwrap();
        assert_eq!(t.start, t2.start);
        assert_eq!(t.goal, t2.goal);
        let diag = (maze.world_width().powi(2) + maze.world_height().powi(2)).sqrt();
        assert!(matches!(
            sample_task(&maze, diag + 1.0, 0.5, 100, 4),
            Err(Error::TaskSampling { .. })
        ));
    }

    #[test]
    fn separated_task_respects_min_distance() {
        let maze = parse_maze(LARGE_MAZE).unwrap().maze;
        for seed in 0..20 {
            let t = sample_task(&maze, 5.0, 0.5, 400, seed).unwrap();
            assert!(t.start.dist(t.goal) >= 5.0);
        }
    }
}
