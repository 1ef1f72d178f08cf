//! Hangman on three-letter words. Every turn, right or wrong, spends one of
//! the `horizon` attempts.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::{invalid_message, seeded_rng, EnvError, EnvId, Environment, StepOutcome};
use crate::agents::prompts::hangman_prompt;

const SALT: u64 = 0x6861_6e67;

static WORD_LIST: &str = include_str!("../../data/hangman_words.txt");

pub fn word_list() -> Vec<&'static str> {
    WORD_LIST.lines().filter(|l| !l.is_empty()).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HangmanParams {}

#[derive(Debug, Clone)]
pub struct HangmanEnv {
    word: Vec<u8>,
    horizon: usize,
    turn: usize,
    guessed: BTreeSet<u8>,
}

impl HangmanEnv {
    pub fn generate(seed: u64, _params: &HangmanParams, horizon: usize) -> Result<Self, EnvError> {
        let mut rng = seeded_rng(seed, SALT);
        let word = word_list()
            .choose(&mut rng)
            .expect("word list is nonempty")
            .to_string();
        Ok(HangmanEnv::with_word(&word, horizon))
    }

    pub fn with_word(word: &str, horizon: usize) -> Self {
        HangmanEnv {
            word: word.to_ascii_uppercase().into_bytes(),
            horizon,
            turn: 0,
            guessed: BTreeSet::new(),
        }
    }

    pub fn word(&self) -> String {
        String::from_utf8_lossy(&self.word).into_owned()
    }

    fn solved(&self) -> bool {
        self.word.iter().all(|c| self.guessed.contains(c))
    }

    /// Column header and letter row, `_` for hidden letters.
    pub fn render_grid(&self) -> String {
        let header: Vec<String> = (0..self.word.len()).map(|i| format!("C{i:02}")).collect();
        let cells: Vec<String> = self
            .word
            .iter()
            .map(|c| {
                let shown = if self.guessed.contains(c) { *c as char } else { '_' };
                format!(" {shown} ")
            })
            .collect();
        format!("{}\n{}", header.join(" "), cells.join(" ").trim_end())
    }

    fn attempts_left(&self) -> usize {
        self.horizon.saturating_sub(self.turn)
    }

    fn after_guess(&self, summary: String) -> StepOutcome {
        let text = format!(
            "{summary}\n{}\nAttempts left: {}.",
            self.render_grid(),
            self.attempts_left()
        );
        if self.attempts_left() == 0 {
            StepOutcome::failure(format!("{text} You ran out of attempts. Game over."))
        } else {
            StepOutcome::running(text)
        }
    }
}

impl Environment for HangmanEnv {
    fn env_id(&self) -> EnvId {
        EnvId::Hangman
    }

    fn reset(&mut self) -> String {
        self.turn = 0;
        self.guessed.clear();
        hangman_prompt(self.word.len(), self.horizon, &self.render_grid())
    }

    fn step(&mut self, action: &str) -> StepOutcome {
        self.turn += 1;
        let Some(guess) = self.normalize_action(action) else {
            let hint = format!(
                "Guess one letter or the whole {}-letter word.",
                self.word.len()
            );
            return self.after_guess(invalid_message(action, &hint));
        };
        if guess.len() == self.word.len() {
            if guess.as_bytes() == self.word.as_slice() {
                self.guessed.extend(self.word.iter().copied());
                return StepOutcome::success(format!(
                    "{guess} is correct!\n{}\nCongratulations! You guessed the word.",
                    self.render_grid()
                ));
            }
            return self.after_guess(format!("{guess} is not the word."));
        }
        let letter = guess.as_bytes()[0];
        let fresh = self.guessed.insert(letter);
        if !self.word.contains(&letter) {
            return self.after_guess(format!("The letter {guess} is not in the word."));
        }
        if self.solved() {
            return StepOutcome::success(format!(
                "The letter {guess} is in the word.\n{}\nCongratulations! You guessed the word.",
                self.render_grid()
            ));
        }
        let summary = if fresh {
            format!("The letter {guess} is in the word.")
        } else {
            format!("The letter {guess} was already revealed.")
        };
        self.after_guess(summary)
    }

    fn reject(&mut self, reason: &str) -> StepOutcome {
        self.turn += 1;
        self.after_guess(reason.to_string())
    }

    fn state_key(&self) -> String {
        self.render_grid()
    }

    fn normalize_action(&self, action: &str) -> Option<String> {
        let a = action.trim();
        let ok_len = a.len() == 1 || a.len() == self.word.len();
        (ok_len && a.bytes().all(|b| b.is_ascii_alphabetic())).then(|| a.to_ascii_uppercase())
    }
}
