//! Minesweeper with flood-fill reveals and toggled flags.

use std::collections::VecDeque;

use rand::seq::index::sample;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::LazyLock;

use super::{invalid_message, seeded_rng, EnvError, EnvId, Environment, StepOutcome};
use crate::agents::prompts::minesweeper_prompt;

const SALT: u64 = 0x6d69_6e65;

static MOVE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?i)(reveal|flag)\s+(\d+)\s+(\d+)$").unwrap());

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinesweeperParams {
    pub rows: usize,
    pub cols: usize,
    pub mines: usize,
}

impl Default for MinesweeperParams {
    fn default() -> Self {
        MinesweeperParams {
            rows: 5,
            cols: 5,
            mines: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Visibility {
    Hidden,
    Flagged,
    Revealed,
}

#[derive(Debug, Clone)]
pub struct MinesweeperEnv {
    rows: usize,
    cols: usize,
    mines: Vec<bool>,
    vis: Vec<Visibility>,
    exploded: bool,
}

impl MinesweeperEnv {
    pub fn generate(
        seed: u64,
        params: &MinesweeperParams,
        _horizon: usize,
    ) -> Result<Self, EnvError> {
        let cells = params.rows * params.cols;
        if params.rows == 0 || params.cols == 0 || params.rows > 10 || params.cols > 10 {
            return Err(EnvError::InvalidParams {
                env: EnvId::Minesweeper,
                reason: "board sides must be between 1 and 10".into(),
            });
        }
        if params.mines == 0 || params.mines >= cells {
            return Err(EnvError::InvalidParams {
                env: EnvId::Minesweeper,
                reason: format!("need between 1 and {} mines", cells - 1),
            });
        }
        let mut rng = seeded_rng(seed, SALT);
        let mut mines = vec![false; cells];
        for i in sample(&mut rng, cells, params.mines) {
            mines[i] = true;
        }
        Ok(MinesweeperEnv::with_mines(params.rows, params.cols, mines))
    }

    pub fn with_mines(rows: usize, cols: usize, mines: Vec<bool>) -> Self {
        assert_eq!(mines.len(), rows * cols);
        MinesweeperEnv {
            rows,
            cols,
            vis: vec![Visibility::Hidden; mines.len()],
            mines,
            exploded: false,
        }
    }

    fn neighbours(&self, r: usize, c: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let rows = self.rows as isize;
        let cols = self.cols as isize;
        (-1isize..=1)
            .flat_map(|dr| (-1isize..=1).map(move |dc| (dr, dc)))
            .filter(|&d| d != (0, 0))
            .map(move |(dr, dc)| (r as isize + dr, c as isize + dc))
            .filter(move |&(nr, nc)| nr >= 0 && nc >= 0 && nr < rows && nc < cols)
            .map(|(nr, nc)| (nr as usize, nc as usize))
    }

    pub fn adjacent_mines(&self, r: usize, c: usize) -> usize {
        self.neighbours(r, c)
            .filter(|&(nr, nc)| self.mines[nr * self.cols + nc])
            .count()
    }

    pub fn is_revealed(&self, r: usize, c: usize) -> bool {
        self.vis[r * self.cols + c] == Visibility::Revealed
    }

    pub fn is_mine(&self, r: usize, c: usize) -> bool {
        self.mines[r * self.cols + c]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn all_safe_revealed(&self) -> bool {
        self.mines
            .iter()
            .zip(&self.vis)
            .all(|(m, v)| *m || *v == Visibility::Revealed)
    }

    /// Board with column and row headers; `.` hidden, `F` flagged, `*` an
    /// exploded mine.
    pub fn render_board(&self) -> String {
        let mut out = String::from("  ");
        for c in 0..self.cols {
            out.push_str(&format!("{c:>3}"));
        }
        for r in 0..self.rows {
            out.push_str(&format!("\n{r:>2}"));
            for c in 0..self.cols {
                let i = r * self.cols + c;
                let ch = match self.vis[i] {
                    Visibility::Hidden => '.',
                    Visibility::Flagged => 'F',
                    Visibility::Revealed if self.mines[i] => '*',
                    Visibility::Revealed => {
                        char::from_digit(self.adjacent_mines(r, c) as u32, 10).unwrap()
                    }
                };
                out.push_str(&format!("{ch:>3}"));
            }
        }
        out
    }

    /// Reveals a cell, flood-filling through zero-count cells. Returns
    /// `true` when the cell held a mine.
    pub fn reveal(&mut self, r: usize, c: usize) -> bool {
        let i = r * self.cols + c;
        self.vis[i] = Visibility::Revealed;
        if self.mines[i] {
            self.exploded = true;
            return true;
        }
        let mut queue = VecDeque::from([(r, c)]);
        while let Some((qr, qc)) = queue.pop_front() {
            if self.adjacent_mines(qr, qc) != 0 {
                continue;
            }
            let around: Vec<_> = self.neighbours(qr, qc).collect();
            for (nr, nc) in around {
                let j = nr * self.cols + nc;
                if self.vis[j] != Visibility::Revealed && !self.mines[j] {
                    self.vis[j] = Visibility::Revealed;
                    queue.push_back((nr, nc));
                }
            }
        }
        false
    }

    fn board_text(&self, summary: &str) -> String {
        format!(
            "{summary}\nHere is the current board layout:\n{}\nEnter your guess.",
            self.render_board()
        )
    }
}

impl Environment for MinesweeperEnv {
    fn env_id(&self) -> EnvId {
        EnvId::Minesweeper
    }

    fn reset(&mut self) -> String {
        self.vis.fill(Visibility::Hidden);
        self.exploded = false;
        minesweeper_prompt(&self.render_board())
    }

    fn step(&mut self, action: &str) -> StepOutcome {
        let hint = "Use 'reveal <row> <col>' or 'flag <row> <col>' with coordinates on the board.";
        let Some(caps) = MOVE.captures(action.trim()) else {
            return StepOutcome::running(self.board_text(&invalid_message(action, hint)));
        };
        let cmd = caps[1].to_ascii_lowercase();
        let (r, c) = match (caps[2].parse::<usize>(), caps[3].parse::<usize>()) {
            (Ok(r), Ok(c)) if r < self.rows && c < self.cols => (r, c),
            _ => return StepOutcome::running(self.board_text(&invalid_message(action, hint))),
        };
        let i = r * self.cols + c;
        if cmd == "flag" {
            return match self.vis[i] {
                Visibility::Revealed => StepOutcome::running(self.board_text(&invalid_message(
                    action,
                    "That cell is already revealed and cannot be flagged.",
                ))),
                Visibility::Flagged => {
                    self.vis[i] = Visibility::Hidden;
                    StepOutcome::running(self.board_text(&format!("Removed the flag at {r} {c}.")))
                }
                Visibility::Hidden => {
                    self.vis[i] = Visibility::Flagged;
                    StepOutcome::running(self.board_text(&format!("Placed a flag at {r} {c}.")))
                }
            };
        }
        match self.vis[i] {
            Visibility::Revealed => {
                return StepOutcome::running(self.board_text(&invalid_message(
                    action,
                    "That cell is already revealed.",
                )))
            }
            Visibility::Flagged => {
                return StepOutcome::running(self.board_text(&invalid_message(
                    action,
                    "That cell is flagged; remove the flag before revealing it.",
                )))
            }
            Visibility::Hidden => {}
        }
        if self.reveal(r, c) {
            return StepOutcome::failure(format!(
                "Boom! You revealed a mine at {r} {c}. Game over.\n{}",
                self.render_board()
            ));
        }
        if self.all_safe_revealed() {
            return StepOutcome::success(format!(
                "You revealed {r} {c}.\n{}\nCongratulations! You revealed all safe cells.",
                self.render_board()
            ));
        }
        StepOutcome::running(self.board_text(&format!("You revealed {r} {c}.")))
    }

    fn reject(&mut self, reason: &str) -> StepOutcome {
        StepOutcome::running(self.board_text(reason))
    }

    fn state_key(&self) -> String {
        self.render_board()
    }

    fn normalize_action(&self, action: &str) -> Option<String> {
        let caps = MOVE.captures(action.trim())?;
        Some(format!(
            "{} {} {}",
            caps[1].to_ascii_lowercase(),
            caps[2].parse::<usize>().ok()?,
            caps[3].parse::<usize>().ok()?
        ))
    }
}
