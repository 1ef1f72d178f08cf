//! Three-digit Mastermind over digits 1..=6 with a duplicate-free secret.

use std::fmt;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::{invalid_message, seeded_rng, EnvError, EnvId, Environment, StepOutcome};
use crate::agents::prompts::mastermind_prompt;

const SALT: u64 = 0x6d61_7374;

pub const CODE_LEN: usize = 3;
pub const DIGITS: u8 = 6;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MastermindParams {}

/// A guess or secret. Guesses may repeat digits; secrets never do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Code(pub [u8; CODE_LEN]);

impl Code {
    /// All 120 duplicate-free codes in lexicographic order.
    pub fn all_distinct() -> Vec<Code> {
        Code::all_with_repeats()
            .into_iter()
            .filter(Code::is_distinct)
            .collect()
    }

    /// All 216 codes in lexicographic order.
    pub fn all_with_repeats() -> Vec<Code> {
        let mut out = Vec::with_capacity(216);
        for a in 1..=DIGITS {
            for b in 1..=DIGITS {
                for c in 1..=DIGITS {
                    out.push(Code([a, b, c]));
                }
            }
        }
        out
    }

    pub fn is_distinct(&self) -> bool {
        let [a, b, c] = self.0;
        a != b && a != c && b != c
    }

    /// Parses `1 4 6`, `1,4,6` or `146`.
    pub fn parse(s: &str) -> Result<Code, EnvError> {
        let digits: Vec<char> = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .collect();
        if digits.len() != CODE_LEN {
            return Err(EnvError::Input(format!(
                "expected {CODE_LEN} digits, got {s:?}"
            )));
        }
        let mut code = [0u8; CODE_LEN];
        for (slot, ch) in code.iter_mut().zip(digits) {
            let d = ch
                .to_digit(10)
                .ok_or_else(|| EnvError::Input(format!("{ch:?} is not a digit")))?;
            if !(1..=DIGITS as u32).contains(&d) {
                return Err(EnvError::Input(format!("digit {d} is outside 1-{DIGITS}")));
            }
            *slot = d as u8;
        }
        Ok(Code(code))
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.0;
        write!(f, "{a} {b} {c}")
    }
}

/// Black and white peg counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pegs {
    pub black: u8,
    pub white: u8,
}

impl Pegs {
    pub const SOLVED: Pegs = Pegs {
        black: CODE_LEN as u8,
        white: 0,
    };

    /// Dense index in `0..16`, used for partition tables.
    pub fn index(self) -> usize {
        self.black as usize * 4 + self.white as usize
    }
}

/// Black pegs are positional matches; white pegs are the multiset
/// intersection of digits minus the black pegs.
pub fn mastermind_feedback(secret: Code, guess: Code) -> Pegs {
    let black = secret.0.iter().zip(guess.0).filter(|(s, g)| **s == *g).count();
    let mut secret_counts = [0u8; DIGITS as usize + 1];
    let mut guess_counts = [0u8; DIGITS as usize + 1];
    for d in secret.0 {
        secret_counts[d as usize] += 1;
    }
    for d in guess.0 {
        guess_counts[d as usize] += 1;
    }
    let common: usize = secret_counts
        .iter()
        .zip(guess_counts)
        .map(|(s, g)| (*s).min(g) as usize)
        .sum();
    Pegs {
        black: black as u8,
        white: (common - black) as u8,
    }
}

#[derive(Debug, Clone)]
pub struct MastermindEnv {
    secret: Code,
    horizon: usize,
    turn: usize,
    history: Vec<(Code, Pegs)>,
}

impl MastermindEnv {
    pub fn generate(seed: u64, _params: &MastermindParams, horizon: usize) -> Result<Self, EnvError> {
        let mut rng = seeded_rng(seed, SALT);
        let secret = *Code::all_distinct()
            .choose(&mut rng)
            .expect("code space is nonempty");
        Ok(MastermindEnv::with_secret(secret, horizon))
    }

    pub fn with_secret(secret: Code, horizon: usize) -> Self {
        assert!(secret.is_distinct(), "secret codes are duplicate-free");
        MastermindEnv {
            secret,
            horizon,
            turn: 0,
            history: Vec::new(),
        }
    }

    pub fn secret(&self) -> Code {
        self.secret
    }

    /// Feedback emitted so far in the current episode.
    pub fn history(&self) -> &[(Code, Pegs)] {
        &self.history
    }

    fn turns_left(&self) -> usize {
        self.horizon.saturating_sub(self.turn)
    }

    fn out_of_turns(&self, observation: String) -> StepOutcome {
        if self.turns_left() == 0 {
            StepOutcome::failure(format!(
                "{observation} You have used all {} turns. Game over.",
                self.horizon
            ))
        } else {
            StepOutcome::running(observation)
        }
    }
}

impl Environment for MastermindEnv {
    fn env_id(&self) -> EnvId {
        EnvId::Mastermind
    }

    fn reset(&mut self) -> String {
        self.turn = 0;
        self.history.clear();
        mastermind_prompt(self.horizon)
    }

    fn step(&mut self, action: &str) -> StepOutcome {
        self.turn += 1;
        let guess = match Code::parse(action) {
            Ok(g) => g,
            Err(_) => {
                let msg = invalid_message(
                    action,
                    "Enter three digits from 1 to 6 separated by spaces, for example 1 4 6.",
                );
                return self.out_of_turns(format!("{msg} Turns left: {}.", self.turns_left()));
            }
        };
        let pegs = mastermind_feedback(self.secret, guess);
        self.history.push((guess, pegs));
        if pegs == Pegs::SOLVED {
            return StepOutcome::success(format!(
                "Guess {guess}: {} black, {} white. Congratulations! You cracked the code.",
                pegs.black, pegs.white
            ));
        }
        self.out_of_turns(format!(
            "Guess {guess}: {} black, {} white. Turns left: {}.",
            pegs.black,
            pegs.white,
            self.turns_left()
        ))
    }

    fn reject(&mut self, reason: &str) -> StepOutcome {
        self.turn += 1;
        self.out_of_turns(format!("{reason} Turns left: {}.", self.turns_left()))
    }

    fn state_key(&self) -> String {
        self.history
            .last()
            .map(|(g, _)| g.to_string())
            .unwrap_or_default()
    }

    fn normalize_action(&self, action: &str) -> Option<String> {
        Code::parse(action).ok().map(|c| c.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(s: &str) -> Code {
        Code::parse(s).unwrap()
    }

    #[test]
    fn worked_example() {
        let pegs = mastermind_feedback(code("1 2 3"), code("1 3 4"));
        assert_eq!(pegs, Pegs { black: 1, white: 1 });
    }

    #[test]
    fn identity_and_derangement() {
        assert_eq!(mastermind_feedback(code("123"), code("123")), Pegs::SOLVED);
        assert_eq!(
            mastermind_feedback(code("123"), code("312")),
            Pegs { black: 0, white: 3 }
        );
    }

    #[test]
    fn duplicate_guess_uses_multiset_rule() {
        assert_eq!(
            mastermind_feedback(code("123"), code("111")),
            Pegs { black: 1, white: 0 }
        );
        assert_eq!(
            mastermind_feedback(code("123"), code("211")),
            Pegs { black: 0, white: 2 }
        );
    }

    #[test]
    fn code_space_sizes() {
        assert_eq!(Code::all_distinct().len(), 120);
        assert_eq!(Code::all_with_repeats().len(), 216);
    }

    #[test]
    fn malformed_guesses_are_rejected() {
        assert!(Code::parse("1 2").is_err());
        assert!(Code::parse("1 2 7").is_err());
        assert!(Code::parse("a b c").is_err());
        assert_eq!(code("1,4,6"), code("1 4 6"));
    }

    #[test]
    fn secrets_are_duplicate_free_and_seeded() {
        for seed in 0..200 {
            let a = MastermindEnv::generate(seed, &MastermindParams {}, 3).unwrap();
            let b = MastermindEnv::generate(seed, &MastermindParams {}, 3).unwrap();
            assert!(a.secret().is_distinct());
            assert!(a.secret().0.iter().all(|d| (1..=6).contains(d)));
            assert_eq!(a.secret(), b.secret());
        }
    }

    #[test]
    fn reset_keeps_secret_and_turn_limit_ends_game() {
        let mut env = MastermindEnv::with_secret(code("1 2 3"), 3);
        env.reset();
        assert!(!env.step("4 5 6").terminal);
        assert!(!env.step("not a code").terminal);
        let last = env.step("6 5 4");
        assert!(last.terminal && !last.success);
        env.reset();
        assert_eq!(env.secret(), code("1 2 3"));
        assert!(env.step("1 2 3").success);
    }
}
