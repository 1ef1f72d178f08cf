//! Grid maze with local observation.
//!
//! The layout is a perfect maze carved by randomized depth-first search on
//! the odd-coordinate lattice; start and goal are rejection-sampled so that
//! the shortest start-to-goal path length falls in `[min_path, max_path]`.
//! The agent only ever sees whether each of its four neighbours is path or
//! wall; the goal is announced only when it is reached.

use std::collections::VecDeque;
use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{invalid_message, seeded_rng, EnvError, EnvId, Environment, StepOutcome};
use crate::agents::prompts::{maze_prompt, MAZE_MOVE_REQUEST};

const SALT: u64 = 0x6d61_7a65;
const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MazeParams {
    pub rows: usize,
    pub cols: usize,
    pub min_path: usize,
    pub max_path: usize,
}

impl Default for MazeParams {
    fn default() -> Self {
        MazeParams {
            rows: 7,
            cols: 7,
            min_path: 3,
            max_path: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub row: usize,
    pub col: usize,
}

impl Pos {
    pub fn new(row: usize, col: usize) -> Self {
        Pos { row, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    /// Fixed order used for rendering and for deterministic tie-breaking.
    pub const ALL: [Direction; 4] = [
        Direction::Up,
        Direction::Down,
        Direction::Left,
        Direction::Right,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        Direction::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s.trim()))
    }

    /// Neighbour of `pos` in this direction, or `None` past the top/left edge.
    pub fn apply(self, pos: Pos) -> Option<Pos> {
        match self {
            Direction::Up => pos.row.checked_sub(1).map(|r| Pos::new(r, pos.col)),
            Direction::Down => Some(Pos::new(pos.row + 1, pos.col)),
            Direction::Left => pos.col.checked_sub(1).map(|c| Pos::new(pos.row, c)),
            Direction::Right => Some(Pos::new(pos.row, pos.col + 1)),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Wall,
    Path,
}

/// Static maze layout. Cells outside the grid read as walls.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MazeGrid {
    rows: usize,
    cols: usize,
    cells: Vec<Cell>,
}

impl MazeGrid {
    pub fn new(rows: usize, cols: usize, cells: Vec<Cell>) -> Self {
        assert_eq!(cells.len(), rows * cols);
        MazeGrid { rows, cols, cells }
    }

    /// Parses a picture with `#` for walls and anything else for path.
    pub fn from_ascii(picture: &str) -> Self {
        let lines: Vec<&str> = picture
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        let rows = lines.len();
        let cols = lines.first().map_or(0, |l| l.chars().count());
        let cells = lines
            .iter()
            .flat_map(|l| {
                assert_eq!(l.chars().count(), cols, "ragged maze picture");
                l.chars()
                    .map(|c| if c == '#' { Cell::Wall } else { Cell::Path })
            })
            .collect();
        MazeGrid { rows, cols, cells }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell(&self, pos: Pos) -> Cell {
        if pos.row < self.rows && pos.col < self.cols {
            self.cells[pos.row * self.cols + pos.col]
        } else {
            Cell::Wall
        }
    }

    pub fn is_path(&self, pos: Pos) -> bool {
        self.cell(pos) == Cell::Path
    }

    /// Cell reached by moving from `pos`, if it is open.
    pub fn step(&self, pos: Pos, dir: Direction) -> Option<Pos> {
        dir.apply(pos).filter(|&p| self.is_path(p))
    }

    pub fn path_cells(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.rows)
            .flat_map(move |r| (0..self.cols).map(move |c| Pos::new(r, c)))
            .filter(|&p| self.is_path(p))
    }

    /// BFS distances from `from`; `None` for unreachable or wall cells.
    pub fn distances(&self, from: Pos) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.rows * self.cols];
        if !self.is_path(from) {
            return dist;
        }
        dist[from.row * self.cols + from.col] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(p) = queue.pop_front() {
            let d = dist[p.row * self.cols + p.col].unwrap();
            for dir in Direction::ALL {
                if let Some(n) = self.step(p, dir) {
                    let slot = &mut dist[n.row * self.cols + n.col];
                    if slot.is_none() {
                        *slot = Some(d + 1);
                        queue.push_back(n);
                    }
                }
            }
        }
        dist
    }

    pub fn shortest_path_len(&self, from: Pos, to: Pos) -> Option<usize> {
        if to.row >= self.rows || to.col >= self.cols {
            return None;
        }
        self.distances(from)[to.row * self.cols + to.col]
    }

    pub fn to_ascii(&self, start: Pos, goal: Pos) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let p = Pos::new(r, c);
                out.push(if p == start {
                    'S'
                } else if p == goal {
                    'G'
                } else if self.is_path(p) {
                    '.'
                } else {
                    '#'
                });
            }
            out.push('\n');
        }
        out
    }
}

/// The `Around you, ...` sentence describing the four neighbours.
pub fn maze_observe(grid: &MazeGrid, pos: Pos) -> String {
    let kind = |d: Direction| {
        if grid.step(pos, d).is_some() {
            "path"
        } else {
            "wall"
        }
    };
    format!(
        "Around you, up leads to {}, down leads to {}, left leads to {}, and right leads to {}.",
        kind(Direction::Up),
        kind(Direction::Down),
        kind(Direction::Left),
        kind(Direction::Right)
    )
}

fn carve(rows: usize, cols: usize, rng: &mut impl Rng) -> MazeGrid {
    let mut cells = vec![Cell::Wall; rows * cols];
    let start = Pos::new(1, 1);
    cells[start.row * cols + start.col] = Cell::Path;
    let mut stack = vec![start];
    while let Some(&cur) = stack.last() {
        let mut options: Vec<(Pos, Pos)> = Vec::with_capacity(4);
        for dir in Direction::ALL {
            let Some(mid) = dir.apply(cur) else { continue };
            let Some(next) = dir.apply(mid) else { continue };
            if next.row == 0 || next.col == 0 || next.row >= rows - 1 || next.col >= cols - 1 {
                continue;
            }
            if cells[next.row * cols + next.col] == Cell::Wall {
                options.push((mid, next));
            }
        }
        match options.choose(rng) {
            Some(&(mid, next)) => {
                cells[mid.row * cols + mid.col] = Cell::Path;
                cells[next.row * cols + next.col] = Cell::Path;
                stack.push(next);
            }
            None => {
                stack.pop();
            }
        }
    }
    MazeGrid::new(rows, cols, cells)
}

#[derive(Debug, Clone)]
pub struct MazeEnv {
    grid: MazeGrid,
    start: Pos,
    goal: Pos,
    horizon: usize,
    pos: Pos,
    turn: usize,
}

impl MazeEnv {
    pub fn generate(seed: u64, params: &MazeParams, horizon: usize) -> Result<Self, EnvError> {
        let bad = |reason: &str| EnvError::InvalidParams {
            env: EnvId::Maze,
            reason: reason.to_string(),
        };
        if params.rows < 3 || params.cols < 3 {
            return Err(bad("grid must be at least 3x3"));
        }
        if params.min_path == 0 || params.min_path > params.max_path {
            return Err(bad("path range must satisfy 1 <= min_path <= max_path"));
        }
        if params.min_path > horizon {
            return Err(bad("min_path exceeds the horizon, goal would be unreachable"));
        }
        let max_path = params.max_path.min(horizon);
        let mut rng = seeded_rng(seed, SALT);
        for _ in 0..MAX_ATTEMPTS {
            let grid = carve(params.rows, params.cols, &mut rng);
            let cells: Vec<Pos> = grid.path_cells().collect();
            let start = *cells.choose(&mut rng).expect("carved maze has path cells");
            let dist = grid.distances(start);
            let goals: Vec<Pos> = cells
                .iter()
                .copied()
                .filter(|p| {
                    dist[p.row * grid.cols + p.col]
                        .is_some_and(|d| (params.min_path..=max_path).contains(&d))
                })
                .collect();
            if let Some(&goal) = goals.choose(&mut rng) {
                return Ok(MazeEnv::from_layout(grid, start, goal, horizon));
            }
        }
        Err(EnvError::Generation {
            env: EnvId::Maze,
            attempts: MAX_ATTEMPTS,
            reason: format!(
                "no start/goal pair with shortest path in [{}, {}] on a {}x{} grid",
                params.min_path, max_path, params.rows, params.cols
            ),
        })
    }

    pub fn from_layout(grid: MazeGrid, start: Pos, goal: Pos, horizon: usize) -> Self {
        assert!(grid.is_path(start) && grid.is_path(goal));
        MazeEnv {
            grid,
            start,
            goal,
            horizon,
            pos: start,
            turn: 0,
        }
    }

    pub fn grid(&self) -> &MazeGrid {
        &self.grid
    }

    pub fn start(&self) -> Pos {
        self.start
    }

    pub fn goal(&self) -> Pos {
        self.goal
    }

    pub fn position(&self) -> Pos {
        self.pos
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    fn surroundings(&self) -> String {
        maze_observe(&self.grid, self.pos)
    }
}

impl Environment for MazeEnv {
    fn env_id(&self) -> EnvId {
        EnvId::Maze
    }

    fn reset(&mut self) -> String {
        self.pos = self.start;
        self.turn = 0;
        maze_prompt(self.start.row, self.start.col, &self.surroundings())
    }

    fn step(&mut self, action: &str) -> StepOutcome {
        self.turn += 1;
        let Some(dir) = Direction::parse(action) else {
            return StepOutcome::running(format!(
                "{} {} {MAZE_MOVE_REQUEST}",
                invalid_message(action, "Valid moves are up, down, left and right."),
                self.surroundings()
            ));
        };
        match self.grid.step(self.pos, dir) {
            Some(next) if next == self.goal => {
                self.pos = next;
                StepOutcome::success("Congratulations! You arrived at the goal.")
            }
            Some(next) => {
                self.pos = next;
                StepOutcome::running(format!(
                    "You moved {dir}. {} {MAZE_MOVE_REQUEST}",
                    self.surroundings()
                ))
            }
            None => StepOutcome::running(format!(
                "You hit a wall moving {dir} and stayed in place. {} {MAZE_MOVE_REQUEST}",
                self.surroundings()
            )),
        }
    }

    fn reject(&mut self, reason: &str) -> StepOutcome {
        self.turn += 1;
        StepOutcome::running(format!(
            "{reason} {} {MAZE_MOVE_REQUEST}",
            self.surroundings()
        ))
    }

    fn state_key(&self) -> String {
        self.pos.to_string()
    }

    fn normalize_action(&self, action: &str) -> Option<String> {
        Direction::parse(action).map(|d| d.as_str().to_string())
    }
}
