//! Maze oracle: finite-horizon value iteration on a belief map.
//!
//! The belief map aggregates every observation of the task so far and is
//! kept across episodes. Planning treats unknown cells as open floor worth
//! the exploration bonus, so the oracle walks towards unexplored territory
//! until it has found the goal, and straight to the goal afterwards.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::agents::parse::boxed;
use crate::agents::{Agent, AgentError, AgentView};
use crate::envs::{Direction, MazeGrid, Pos};

static AROUND: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"up leads to (path|wall), down leads to (path|wall), left leads to (path|wall), and right leads to (path|wall)",
    )
    .unwrap()
});

static START: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"START position \((\d+),(\d+)\)").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BeliefError {
    #[error("cell {pos} was {known:?} but is now reported as {reported:?}")]
    Inconsistent {
        pos: Pos,
        known: Label,
        reported: Label,
    },
    #[error("observation has no surroundings sentence")]
    NoSurroundings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Wall,
    Path,
}

/// Shaping rewards of the planner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MazeRewards {
    pub wall: f64,
    pub revisit: f64,
    pub explore: f64,
    pub goal: f64,
}

impl Default for MazeRewards {
    fn default() -> Self {
        MazeRewards {
            wall: -100.0,
            revisit: -0.1,
            explore: 1.0,
            goal: 100.0,
        }
    }
}

/// What is known about a maze: labelled cells, visited cells, the current
/// position and, once reached, the goal. Unlabelled cells are unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefMap {
    labels: BTreeMap<Pos, Label>,
    visited: BTreeSet<Pos>,
    position: Pos,
    goal: Option<Pos>,
}

impl BeliefMap {
    /// Empty belief with the agent standing at `start`.
    pub fn new(start: Pos) -> Self {
        BeliefMap {
            labels: BTreeMap::new(),
            visited: BTreeSet::new(),
            position: start,
            goal: None,
        }
    }

    /// Complete knowledge of `grid`: every cell labelled, every path cell
    /// visited, goal known.
    pub fn fully_revealed(grid: &MazeGrid, start: Pos, goal: Pos) -> Self {
        let mut belief = BeliefMap::new(start);
        for row in 0..grid.rows() {
            for col in 0..grid.cols() {
                let pos = Pos::new(row, col);
                let label = if grid.is_path(pos) {
                    belief.visited.insert(pos);
                    Label::Path
                } else {
                    Label::Wall
                };
                belief.labels.insert(pos, label);
            }
        }
        belief.goal = Some(goal);
        belief
    }

    pub fn label(&self, pos: Pos) -> Option<Label> {
        self.labels.get(&pos).copied()
    }

    pub fn is_visited(&self, pos: Pos) -> bool {
        self.visited.contains(&pos)
    }

    pub fn position(&self) -> Pos {
        self.position
    }

    pub fn goal(&self) -> Option<Pos> {
        self.goal
    }

    pub fn labelled_cells(&self) -> usize {
        self.labels.len()
    }

    pub fn set_goal(&mut self, goal: Pos) {
        self.goal = Some(goal);
    }

    /// Moves the agent without touching any labels.
    pub fn move_to(&mut self, pos: Pos) {
        self.position = pos;
    }

    fn assign(&mut self, pos: Pos, label: Label) -> Result<(), BeliefError> {
        match self.labels.get(&pos) {
            Some(&known) if known != label => Err(BeliefError::Inconsistent {
                pos,
                known,
                reported: label,
            }),
            Some(_) => Ok(()),
            None => {
                self.labels.insert(pos, label);
                Ok(())
            }
        }
    }

    /// Labels the four neighbours from the last surroundings sentence in
    /// `observation` and marks the current cell visited.
    pub fn belief_update(&mut self, observation: &str) -> Result<(), BeliefError> {
        let caps = AROUND
            .captures_iter(observation)
            .last()
            .ok_or(BeliefError::NoSurroundings)?;
        let mut updates = Vec::with_capacity(5);
        updates.push((self.position, Label::Path));
        for (i, dir) in Direction::ALL.into_iter().enumerate() {
            let label = if &caps[i + 1] == "path" {
                Label::Path
            } else {
                Label::Wall
            };
            match dir.apply(self.position) {
                Some(pos) => updates.push((pos, label)),
                None if label == Label::Path => {
                    return Err(BeliefError::Inconsistent {
                        pos: self.position,
                        known: Label::Wall,
                        reported: Label::Path,
                    })
                }
                None => {}
            }
        }
        // Check everything before writing so a failed update changes nothing.
        for &(pos, label) in &updates {
            if let Some(&known) = self.labels.get(&pos) {
                if known != label {
                    return Err(BeliefError::Inconsistent {
                        pos,
                        known,
                        reported: label,
                    });
                }
            }
        }
        for (pos, label) in updates {
            self.assign(pos, label)?;
        }
        self.visited.insert(self.position);
        Ok(())
    }
}

/// Memoized finite-horizon Bellman backups over a fixed belief map.
pub struct MazePlanner<'a> {
    belief: &'a BeliefMap,
    rewards: MazeRewards,
    memo: HashMap<(Pos, usize), f64>,
}

const TIE_EPS: f64 = 1e-9;

impl<'a> MazePlanner<'a> {
    pub fn new(belief: &'a BeliefMap, rewards: MazeRewards) -> Self {
        MazePlanner {
            belief,
            rewards,
            memo: HashMap::new(),
        }
    }

    /// Optimal return from `pos` with `k` moves left.
    pub fn value(&mut self, pos: Pos, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        if let Some(&v) = self.memo.get(&(pos, k)) {
            return v;
        }
        let v = Direction::ALL
            .into_iter()
            .map(|d| self.q_value(pos, d, k))
            .fold(f64::NEG_INFINITY, f64::max);
        self.memo.insert((pos, k), v);
        v
    }

    /// Return of moving `dir` from `pos` with `k >= 1` moves left, then
    /// acting optimally. Once the goal is known, new cells earn no bonus
    /// and cost the same as revisits, so the plan is a shortest path.
    pub fn q_value(&mut self, pos: Pos, dir: Direction, k: usize) -> f64 {
        let r = self.rewards;
        let explore = if self.belief.goal.is_some() {
            r.revisit
        } else {
            r.explore
        };
        match dir.apply(pos) {
            Some(next) if self.belief.goal == Some(next) => r.goal,
            Some(next) => match self.belief.label(next) {
                Some(Label::Wall) => r.wall + self.value(pos, k - 1),
                Some(Label::Path) if self.belief.is_visited(next) => {
                    r.revisit + self.value(next, k - 1)
                }
                _ => explore + self.value(next, k - 1),
            },
            None => r.wall + self.value(pos, k - 1),
        }
    }

    /// Best first move, ties going to the earliest of up, down, left, right.
    pub fn best_action(&mut self, k: usize) -> Direction {
        let pos = self.belief.position;
        let q: Vec<f64> = Direction::ALL
            .into_iter()
            .map(|d| self.q_value(pos, d, k))
            .collect();
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let i = q.iter().position(|&v| v >= best - TIE_EPS).unwrap();
        Direction::ALL[i]
    }
}

/// The oracle's move with `steps_remaining` moves left in the episode.
pub fn maze_oracle_action(belief: &BeliefMap, steps_remaining: usize) -> Direction {
    assert!(steps_remaining >= 1, "the oracle needs at least one step to plan");
    MazePlanner::new(belief, MazeRewards::default()).best_action(steps_remaining)
}

/// The maze oracle as a protocol agent. It reads the transcript for
/// positions and surroundings and keeps its belief across episodes.
#[derive(Debug, Clone, Default)]
pub struct MazeOracleAgent {
    belief: Option<BeliefMap>,
    rewards: MazeRewards,
}

impl MazeOracleAgent {
    pub fn new() -> Self {
        MazeOracleAgent::default()
    }

    /// Starts from complete knowledge of the layout.
    pub fn with_full_map(grid: &MazeGrid, start: Pos, goal: Pos) -> Self {
        MazeOracleAgent {
            belief: Some(BeliefMap::fully_revealed(grid, start, goal)),
            rewards: MazeRewards::default(),
        }
    }

    pub fn with_rewards(rewards: MazeRewards) -> Self {
        MazeOracleAgent {
            belief: None,
            rewards,
        }
    }

    pub fn belief(&self) -> Option<&BeliefMap> {
        self.belief.as_ref()
    }

    fn observe(&mut self, view: &AgentView<'_>) -> Result<(), BeliefError> {
        if view.step == 0 {
            let caps = START
                .captures(view.observation)
                .ok_or(BeliefError::NoSurroundings)?;
            let start = Pos::new(caps[1].parse().unwrap(), caps[2].parse().unwrap());
            let belief = self.belief.get_or_insert_with(|| BeliefMap::new(start));
            if let Some(last) = view.steps.last() {
                if last.success {
                    if let Some(goal) = moved_to(belief.position, last.action.as_deref()) {
                        belief.set_goal(goal);
                    }
                }
            }
            belief.move_to(start);
        } else if let (Some(belief), Some(last)) = (self.belief.as_mut(), view.steps.last()) {
            if last.next_observation.starts_with("You moved ") {
                if let Some(next) = moved_to(belief.position, last.action.as_deref()) {
                    belief.move_to(next);
                }
            }
        }
        match self.belief.as_mut() {
            Some(b) => b.belief_update(view.observation),
            None => Err(BeliefError::NoSurroundings),
        }
    }
}

fn moved_to(from: Pos, action: Option<&str>) -> Option<Pos> {
    action.and_then(Direction::parse).and_then(|d| d.apply(from))
}

impl Agent for MazeOracleAgent {
    fn act(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        self.observe(view)
            .map_err(|e| AgentError::Protocol(format!("maze oracle: {e}")))?;
        let horizon = view.task.map_or(9, |t| t.horizon);
        let belief = self.belief.as_ref().expect("observe sets the belief");
        let dir = MazePlanner::new(belief, self.rewards).best_action(horizon - view.step);
        Ok(boxed(dir.as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::maze_observe;

    fn around(up: &str, down: &str, left: &str, right: &str) -> String {
        format!(
            "Around you, up leads to {up}, down leads to {down}, left leads to {left}, and right leads to {right}."
        )
    }

    #[test]
    fn goal_neighbour_wins() {
        let mut b = BeliefMap::new(Pos::new(3, 3));
        b.belief_update(&around("path", "path", "path", "path")).unwrap();
        b.set_goal(Pos::new(3, 2));
        assert_eq!(maze_oracle_action(&b, 4), Direction::Left);
    }

    #[test]
    fn unknown_beats_visited_path() {
        // At (2,2): left is visited, right is open and never seen beyond.
        let mut b = BeliefMap::new(Pos::new(2, 1));
        b.belief_update(&around("wall", "wall", "wall", "path")).unwrap();
        b.move_to(Pos::new(2, 2));
        b.belief_update(&around("wall", "wall", "path", "path")).unwrap();
        let mut p = MazePlanner::new(&b, MazeRewards::default());
        assert!((p.q_value(Pos::new(2, 2), Direction::Left, 1) - -0.1).abs() < 1e-12);
        assert!((p.q_value(Pos::new(2, 2), Direction::Right, 1) - 1.0).abs() < 1e-12);
        assert_eq!(maze_oracle_action(&b, 1), Direction::Right);
        assert_eq!(maze_oracle_action(&b, 5), Direction::Right);
    }

    #[test]
    fn dead_end_takes_the_only_path() {
        let mut b = BeliefMap::new(Pos::new(1, 2));
        b.belief_update(&around("wall", "path", "wall", "wall")).unwrap();
        b.move_to(Pos::new(2, 2));
        b.belief_update(&around("path", "wall", "wall", "wall")).unwrap();
        for k in 1..6 {
            assert_eq!(maze_oracle_action(&b, k), Direction::Up, "k={k}");
        }
    }

    #[test]
    fn belief_is_monotone_and_checked() {
        let mut b = BeliefMap::new(Pos::new(1, 1));
        let obs = around("wall", "path", "wall", "path");
        b.belief_update(&obs).unwrap();
        let snapshot = b.clone();
        b.belief_update(&obs).unwrap();
        assert_eq!(b, snapshot);
        let err = b.belief_update(&around("path", "path", "wall", "path"));
        assert!(matches!(err, Err(BeliefError::Inconsistent { .. })));
        assert_eq!(b, snapshot);
    }

    #[test]
    fn reset_keeps_labels() {
        let mut b = BeliefMap::new(Pos::new(1, 1));
        b.belief_update(&around("wall", "path", "wall", "path")).unwrap();
        b.move_to(Pos::new(1, 2));
        b.belief_update(&around("wall", "wall", "path", "wall")).unwrap();
        let labelled = b.labelled_cells();
        b.move_to(Pos::new(1, 1));
        assert_eq!(b.labelled_cells(), labelled);
        assert!(b.is_visited(Pos::new(1, 2)));
    }

    #[test]
    fn belief_accepts_env_sentences() {
        let grid = MazeGrid::from_ascii("#####\n#...#\n#.#.#\n#####");
        let mut b = BeliefMap::new(Pos::new(1, 1));
        b.belief_update(&maze_observe(&grid, Pos::new(1, 1))).unwrap();
        assert_eq!(b.label(Pos::new(1, 2)), Some(Label::Path));
        assert_eq!(b.label(Pos::new(0, 1)), Some(Label::Wall));
    }
}
