//! Mastermind oracle: exact finite-horizon DP over candidate sets.
//!
//! Candidate sets are bitmasks over the 120 duplicate-free codes. The DP
//! counts, for a set `C` and `k` turns, how many secrets in `C` the best
//! strategy cracks; the success probability is that count over `|C|`.
//! Counting keeps every comparison exact, so tie-breaking is too.

use std::collections::HashMap;
use std::sync::{LazyLock, OnceLock};

use regex::Regex;
use thiserror::Error;

use crate::agents::parse::boxed;
use crate::agents::{Agent, AgentError, AgentView};
use crate::envs::{mastermind_feedback, Code, Pegs};

const N: usize = 120;

static FEEDBACK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Guess (\d) (\d) (\d): (\d) black, (\d) white").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("candidate set is empty: the feedback history is inconsistent")]
    EmptyCandidates,
    #[error("need at least one turn")]
    NoTurns,
}

struct Tables {
    codes: Vec<Code>,
    /// `fb[g][s]`: peg index of guess `g` against secret `s`.
    fb: Vec<[u8; N]>,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let codes = Code::all_distinct();
        let fb = codes
            .iter()
            .map(|&g| {
                let mut row = [0u8; N];
                for (s, &secret) in codes.iter().enumerate() {
                    row[s] = mastermind_feedback(secret, g).index() as u8;
                }
                row
            })
            .collect();
        Tables { codes, fb }
    })
}

fn code_index(code: Code) -> Option<usize> {
    tables().codes.binary_search(&code).ok()
}

/// Codes consistent with all feedback so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CandidateSet(u128);

impl CandidateSet {
    pub fn all() -> Self {
        CandidateSet((1u128 << N) - 1)
    }

    pub fn from_codes(codes: impl IntoIterator<Item = Code>) -> Self {
        let mut mask = 0u128;
        for c in codes {
            if let Some(i) = code_index(c) {
                mask |= 1 << i;
            }
        }
        CandidateSet(mask)
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn contains(&self, code: Code) -> bool {
        code_index(code).is_some_and(|i| self.0 >> i & 1 == 1)
    }

    pub fn codes(&self) -> Vec<Code> {
        indices(self.0).map(|i| tables().codes[i]).collect()
    }

    /// Keeps the codes that would have produced `pegs` for `guess`.
    pub fn filter(&self, guess: Code, pegs: Pegs) -> Self {
        let want = pegs.index() as u8;
        let mut mask = 0u128;
        for i in indices(self.0) {
            if mastermind_feedback(tables().codes[i], guess).index() as u8 == want {
                mask |= 1 << i;
            }
        }
        CandidateSet(mask)
    }
}

fn indices(mut mask: u128) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            return None;
        }
        let i = mask.trailing_zeros() as usize;
        mask &= mask - 1;
        Some(i)
    })
}

/// Memoized solver; one per task run.
#[derive(Debug, Default)]
pub struct MastermindSolver {
    memo: HashMap<(u128, usize), (u32, usize)>,
}

impl MastermindSolver {
    pub fn new() -> Self {
        MastermindSolver::default()
    }

    /// Number of secrets in `mask` cracked within `k` turns by the best
    /// strategy, with the first guess (index) achieving it.
    fn solve(&mut self, mask: u128, k: usize) -> (u32, usize) {
        debug_assert!(mask != 0 && k >= 1);
        if k == 1 {
            return (1, mask.trailing_zeros() as usize);
        }
        if mask.count_ones() == 1 {
            return (1, mask.trailing_zeros() as usize);
        }
        if let Some(&hit) = self.memo.get(&(mask, k)) {
            return hit;
        }
        let t = tables();
        let solved = Pegs::SOLVED.index();
        let mut best = (0u32, 0usize);
        for g in 0..N {
            let mut parts = [0u128; 16];
            for s in indices(mask) {
                parts[t.fb[g][s] as usize] |= 1 << s;
            }
            let mut wins = 0u32;
            for (fb, &part) in parts.iter().enumerate() {
                if part == 0 {
                    continue;
                }
                wins += if fb == solved {
                    1
                } else {
                    self.solve(part, k - 1).0
                };
            }
            if wins > best.0 {
                best = (wins, g);
            }
        }
        self.memo.insert((mask, k), best);
        best
    }

    /// Probability that optimal play cracks a secret drawn uniformly from
    /// `candidates` within `turns`.
    pub fn value(&mut self, candidates: CandidateSet, turns: usize) -> Result<f64, OracleError> {
        let (wins, _) = self.checked(candidates, turns)?;
        Ok(wins as f64 / candidates.len() as f64)
    }

    /// The guess maximizing the success probability, smallest code on ties.
    pub fn best_guess(&mut self, candidates: CandidateSet, turns: usize) -> Result<Code, OracleError> {
        let (_, g) = self.checked(candidates, turns)?;
        Ok(tables().codes[g])
    }

    fn checked(&mut self, candidates: CandidateSet, turns: usize) -> Result<(u32, usize), OracleError> {
        if candidates.is_empty() {
            return Err(OracleError::EmptyCandidates);
        }
        if turns == 0 {
            return Err(OracleError::NoTurns);
        }
        Ok(self.solve(candidates.0, turns))
    }
}

pub fn mastermind_oracle_action(candidates: CandidateSet, turns_remaining: usize) -> Result<Code, OracleError> {
    MastermindSolver::new().best_guess(candidates, turns_remaining)
}

/// Candidates left after every `Guess a b c: x black, y white` line in
/// the given texts.
pub fn candidates_from_feedback<'a>(texts: impl IntoIterator<Item = &'a str>) -> CandidateSet {
    let mut set = CandidateSet::all();
    for text in texts {
        for caps in FEEDBACK.captures_iter(text) {
            let d = |i: usize| caps[i].parse::<u8>().unwrap();
            let guess = Code([d(1), d(2), d(3)]);
            let pegs = Pegs {
                black: d(4),
                white: d(5),
            };
            set = set.filter(guess, pegs);
        }
    }
    set
}

/// The Mastermind oracle as a protocol agent. It filters candidates with
/// every feedback line of the task so far, across episodes.
#[derive(Debug, Default)]
pub struct MastermindOracleAgent {
    solver: MastermindSolver,
}

impl MastermindOracleAgent {
    pub fn new() -> Self {
        MastermindOracleAgent::default()
    }
}

impl Agent for MastermindOracleAgent {
    fn act(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        let candidates =
            candidates_from_feedback(view.steps.iter().map(|s| s.next_observation.as_str()));
        let horizon = view.task.map_or(3, |t| t.horizon);
        let guess = self
            .solver
            .best_guess(candidates, horizon - view.step)
            .map_err(|e| AgentError::Protocol(format!("mastermind oracle: {e}")))?;
        Ok(boxed(&guess.to_string()))
    }
}
