//! Seeded, partially observable text games.
//!
//! Every environment is built from `(seed, params, horizon)`. The hidden task
//! (maze layout, secret code, mine layout, ...) is a pure function of the seed
//! and params, and [`Environment::reset`] starts a new episode of the *same*
//! task. Actions arrive already extracted from the agent's boxed output; each
//! environment applies its own action grammar.

pub mod blackjack;
pub mod hangman;
pub mod mastermind;
pub mod maze;
pub mod minesweeper;
pub mod rps;
pub mod wordle;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::TaskInstance;

pub use blackjack::{hand_value, BlackjackEnv, BlackjackParams, Card};
pub use hangman::{HangmanEnv, HangmanParams};
pub use mastermind::{mastermind_feedback, Code, MastermindEnv, MastermindParams, Pegs};
pub use maze::{maze_observe, Cell, Direction, MazeEnv, MazeGrid, MazeParams, Pos};
pub use minesweeper::{MinesweeperEnv, MinesweeperParams};
pub use rps::{rps_round, RoundResult, RpsEnv, RpsMove, RpsParams};
pub use wordle::{wordle_feedback, Mark, WordleEnv, WordleParams};

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("invalid parameters for {env}: {reason}")]
    InvalidParams { env: EnvId, reason: String },
    #[error("could not generate a {env} instance after {attempts} attempts: {reason}")]
    Generation {
        env: EnvId,
        attempts: usize,
        reason: String,
    },
    #[error("params are for {params} but the task names {task}")]
    ParamsMismatch { task: EnvId, params: EnvId },
    #[error("unknown environment {0:?}")]
    UnknownEnv(String),
    #[error("input error: {0}")]
    Input(String),
}

/// The seven games of the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvId {
    Rps,
    Minesweeper,
    Hangman,
    Wordle,
    Blackjack,
    Maze,
    Mastermind,
}

impl EnvId {
    pub const ALL: [EnvId; 7] = [
        EnvId::Rps,
        EnvId::Minesweeper,
        EnvId::Hangman,
        EnvId::Wordle,
        EnvId::Blackjack,
        EnvId::Maze,
        EnvId::Mastermind,
    ];

    /// Per-episode step cap H of the standard suite.
    pub fn default_horizon(self) -> usize {
        match self {
            EnvId::Rps => 5,
            EnvId::Minesweeper => 8,
            EnvId::Hangman => 10,
            EnvId::Wordle => 10,
            EnvId::Blackjack => 4,
            EnvId::Maze => 9,
            EnvId::Mastermind => 3,
        }
    }

    /// Episodes per task T of the standard suite.
    pub fn default_episodes(self) -> usize {
        3
    }

    /// Maze and Mastermind are held out for evaluation; the rest are training games.
    pub fn is_test_split(self) -> bool {
        matches!(self, EnvId::Maze | EnvId::Mastermind)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EnvId::Rps => "rps",
            EnvId::Minesweeper => "minesweeper",
            EnvId::Hangman => "hangman",
            EnvId::Wordle => "wordle",
            EnvId::Blackjack => "blackjack",
            EnvId::Maze => "maze",
            EnvId::Mastermind => "mastermind",
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvId {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        EnvId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or(EnvError::UnknownEnv(s))
    }
}

/// Environment-specific parameters. The `env` tag names the game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "lowercase")]
pub enum EnvParams {
    Rps(RpsParams),
    Minesweeper(MinesweeperParams),
    Hangman(HangmanParams),
    Wordle(WordleParams),
    Blackjack(BlackjackParams),
    Maze(MazeParams),
    Mastermind(MastermindParams),
}

impl EnvParams {
    pub fn default_for(env: EnvId) -> Self {
        match env {
            EnvId::Rps => EnvParams::Rps(RpsParams::default()),
            EnvId::Minesweeper => EnvParams::Minesweeper(MinesweeperParams::default()),
            EnvId::Hangman => EnvParams::Hangman(HangmanParams::default()),
            EnvId::Wordle => EnvParams::Wordle(WordleParams::default()),
            EnvId::Blackjack => EnvParams::Blackjack(BlackjackParams::default()),
            EnvId::Maze => EnvParams::Maze(MazeParams::default()),
            EnvId::Mastermind => EnvParams::Mastermind(MastermindParams::default()),
        }
    }

    pub fn env_id(&self) -> EnvId {
        match self {
            EnvParams::Rps(_) => EnvId::Rps,
            EnvParams::Minesweeper(_) => EnvId::Minesweeper,
            EnvParams::Hangman(_) => EnvId::Hangman,
            EnvParams::Wordle(_) => EnvId::Wordle,
            EnvParams::Blackjack(_) => EnvId::Blackjack,
            EnvParams::Maze(_) => EnvId::Maze,
            EnvParams::Mastermind(_) => EnvId::Mastermind,
        }
    }
}

/// Result of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: String,
    pub reward: f64,
    pub terminal: bool,
    pub success: bool,
}

impl StepOutcome {
    pub fn running(observation: impl Into<String>) -> Self {
        StepOutcome {
            observation: observation.into(),
            reward: 0.0,
            terminal: false,
            success: false,
        }
    }

    pub fn success(observation: impl Into<String>) -> Self {
        StepOutcome {
            observation: observation.into(),
            reward: 1.0,
            terminal: true,
            success: true,
        }
    }

    pub fn failure(observation: impl Into<String>) -> Self {
        StepOutcome {
            observation: observation.into(),
            reward: 0.0,
            terminal: true,
            success: false,
        }
    }
}

/// A seeded episodic game.
pub trait Environment: Send {
    fn env_id(&self) -> EnvId;

    /// Starts a new episode of the same hidden task and returns its opening
    /// observation (the game prompt with the live state spliced in).
    fn reset(&mut self) -> String;

    /// Applies one already-extracted action. Semantically invalid actions
    /// consume the step and leave the game state unchanged.
    fn step(&mut self, action: &str) -> StepOutcome;

    /// Consumes a step for agent output that carried no usable action.
    fn reject(&mut self, reason: &str) -> StepOutcome;

    /// Fingerprint of the current public state, for exploration statistics.
    fn state_key(&self) -> String;

    /// Canonical form of an action string under this game's grammar, or
    /// `None` when the string does not match the grammar.
    fn normalize_action(&self, action: &str) -> Option<String>;
}

/// The part of an environment the interaction loop needs. Every
/// [`Environment`] is one; small ad-hoc games can implement it directly.
pub trait Episodic {
    fn reset(&mut self) -> String;
    fn step(&mut self, action: &str) -> StepOutcome;
    fn reject(&mut self, reason: &str) -> StepOutcome;
    fn normalize_action(&self, action: &str) -> Option<String>;
}

impl<E: Environment + ?Sized> Episodic for E {
    fn reset(&mut self) -> String {
        Environment::reset(self)
    }

    fn step(&mut self, action: &str) -> StepOutcome {
        Environment::step(self, action)
    }

    fn reject(&mut self, reason: &str) -> StepOutcome {
        Environment::reject(self, reason)
    }

    fn normalize_action(&self, action: &str) -> Option<String> {
        Environment::normalize_action(self, action)
    }
}

/// Builds the environment for a task instance.
pub fn make_env(task: &TaskInstance) -> Result<Box<dyn Environment>, EnvError> {
    if task.params.env_id() != task.env_id {
        return Err(EnvError::ParamsMismatch {
            task: task.env_id,
            params: task.params.env_id(),
        });
    }
    let seed = task.seed;
    let horizon = task.horizon;
    Ok(match &task.params {
        EnvParams::Rps(p) => Box::new(RpsEnv::generate(seed, p, horizon)?),
        EnvParams::Minesweeper(p) => Box::new(MinesweeperEnv::generate(seed, p, horizon)?),
        EnvParams::Hangman(p) => Box::new(HangmanEnv::generate(seed, p, horizon)?),
        EnvParams::Wordle(p) => Box::new(WordleEnv::generate(seed, p, horizon)?),
        EnvParams::Blackjack(p) => Box::new(BlackjackEnv::generate(seed, p, horizon)?),
        EnvParams::Maze(p) => Box::new(MazeEnv::generate(seed, p, horizon)?),
        EnvParams::Mastermind(p) => Box::new(MastermindEnv::generate(seed, p, horizon)?),
    })
}

/// Stream for hidden-parameter generation. Each game salts the seed so that
/// two games never share a stream for the same seed.
pub(crate) fn seeded_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub(crate) fn invalid_message(action: &str, hint: &str) -> String {
    format!("Invalid action '{action}'. {hint} The game state is unchanged.")
}
