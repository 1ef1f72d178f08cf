//! Five-letter Wordle with G/Y/X marks.

use std::fmt;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::{invalid_message, seeded_rng, EnvError, EnvId, Environment, StepOutcome};
use crate::agents::prompts::wordle_prompt;

const SALT: u64 = 0x776f_7264;
pub const WORD_LEN: usize = 5;

static WORD_LIST: &str = include_str!("../../data/wordle_words.txt");

/// Bundled secret-word list, uppercase, one word per line.
pub fn word_list() -> Vec<&'static str> {
    WORD_LIST.lines().filter(|l| !l.is_empty()).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WordleParams {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mark {
    /// Right letter, right position.
    G,
    /// Letter present elsewhere.
    Y,
    /// Letter absent (or all its copies already accounted for).
    X,
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mark::G => "G",
            Mark::Y => "Y",
            Mark::X => "X",
        })
    }
}

pub fn format_marks(marks: &[Mark]) -> String {
    marks
        .iter()
        .map(Mark::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Two-pass marking. Exact matches are marked first and consume their
/// letter; remaining letters are then marked Y while unconsumed copies of
/// that letter remain in the secret.
pub fn wordle_feedback(secret: &str, guess: &str) -> Result<[Mark; WORD_LEN], EnvError> {
    let s = secret.as_bytes();
    let g = guess.as_bytes();
    if s.len() != WORD_LEN || g.len() != WORD_LEN {
        return Err(EnvError::Input(format!(
            "both words must have {WORD_LEN} letters (secret {secret:?}, guess {guess:?})"
        )));
    }
    let mut remaining = [0u8; 256];
    let mut marks = [Mark::X; WORD_LEN];
    for i in 0..WORD_LEN {
        if g[i] == s[i] {
            marks[i] = Mark::G;
        } else {
            remaining[s[i] as usize] += 1;
        }
    }
    for i in 0..WORD_LEN {
        if marks[i] != Mark::G && remaining[g[i] as usize] > 0 {
            remaining[g[i] as usize] -= 1;
            marks[i] = Mark::Y;
        }
    }
    Ok(marks)
}

#[derive(Debug, Clone)]
pub struct WordleEnv {
    secret: String,
    horizon: usize,
    turn: usize,
    guesses: Vec<String>,
}

impl WordleEnv {
    pub fn generate(seed: u64, _params: &WordleParams, horizon: usize) -> Result<Self, EnvError> {
        let mut rng = seeded_rng(seed, SALT);
        let secret = word_list()
            .choose(&mut rng)
            .expect("word list is nonempty")
            .to_string();
        Ok(WordleEnv::with_secret(&secret, horizon))
    }

    pub fn with_secret(secret: &str, horizon: usize) -> Self {
        WordleEnv {
            secret: secret.to_ascii_uppercase(),
            horizon,
            turn: 0,
            guesses: Vec::new(),
        }
    }

    pub fn secret(&self) -> &str {
        &self.secret
    }

    fn turns_left(&self) -> usize {
        self.horizon.saturating_sub(self.turn)
    }

    fn finish(&self, observation: String) -> StepOutcome {
        if self.turns_left() == 0 {
            StepOutcome::failure(format!("{observation} You ran out of guesses. Game over."))
        } else {
            StepOutcome::running(observation)
        }
    }
}

impl Environment for WordleEnv {
    fn env_id(&self) -> EnvId {
        EnvId::Wordle
    }

    fn reset(&mut self) -> String {
        self.turn = 0;
        self.guesses.clear();
        wordle_prompt(self.horizon)
    }

    fn step(&mut self, action: &str) -> StepOutcome {
        self.turn += 1;
        let Some(guess) = self.normalize_action(action) else {
            let msg = invalid_message(action, "Guess a single 5-letter word, for example CRANE.");
            return self.finish(format!("{msg} Turns left: {}.", self.turns_left()));
        };
        let marks = wordle_feedback(&self.secret, &guess).expect("lengths checked");
        self.guesses.push(guess.clone());
        let line = format!("{guess}: {}.", format_marks(&marks));
        if marks.iter().all(|m| *m == Mark::G) {
            return StepOutcome::success(format!(
                "{line} Congratulations! You guessed the word."
            ));
        }
        self.finish(format!("{line} Turns left: {}.", self.turns_left()))
    }

    fn reject(&mut self, reason: &str) -> StepOutcome {
        self.turn += 1;
        self.finish(format!("{reason} Turns left: {}.", self.turns_left()))
    }

    fn state_key(&self) -> String {
        self.guesses.join(",")
    }

    fn normalize_action(&self, action: &str) -> Option<String> {
        let word = action.trim();
        (word.len() == WORD_LEN && word.bytes().all(|b| b.is_ascii_alphabetic()))
            .then(|| word.to_ascii_uppercase())
    }
}
