//! Reference policies for the held-out games and full-information optima.

pub mod mastermind;
pub mod maze;

pub use mastermind::{
    candidates_from_feedback, mastermind_oracle_action, CandidateSet, MastermindOracleAgent,
    MastermindSolver, OracleError,
};
pub use maze::{
    maze_oracle_action, BeliefError, BeliefMap, Label, MazeOracleAgent, MazePlanner, MazeRewards,
};

use crate::envs::{hand_value, BlackjackEnv, Card, EnvError, EnvParams, RpsEnv};
use crate::protocol::TaskInstance;

/// Optimal expected per-episode success when the hidden parameters are
/// known.
///
/// Maze, Mastermind, Wordle, Hangman and Minesweeper are always solvable
/// with full information. Rock-Paper-Scissors is the chance of a strict
/// majority of wins when countering the opponent's likeliest move every
/// round. Blackjack is 1 when some set of at most `H - 1` deck cards,
/// drawn and then stood on, beats the dealer, else 0.
pub fn j_star(task: &TaskInstance) -> Result<f64, EnvError> {
    task.validate().map_err(|e| EnvError::Input(e.to_string()))?;
    let h = task.horizon;
    Ok(match &task.params {
        EnvParams::Rps(p) => {
            let env = RpsEnv::generate(task.seed, p, h)?;
            let best = env.opponent_distribution().into_iter().fold(0.0, f64::max);
            binomial_tail(h, best, h / 2 + 1)
        }
        EnvParams::Blackjack(p) => {
            let env = BlackjackEnv::generate(task.seed, p, h)?;
            if blackjack_winnable(&env, h) {
                1.0
            } else {
                0.0
            }
        }
        _ => 1.0,
    })
}

/// `P(X >= k)` for `X ~ Binomial(n, p)`.
pub fn binomial_tail(n: usize, p: f64, k: usize) -> f64 {
    (k..=n)
        .map(|i| binomial(n, i) * p.powi(i as i32) * (1.0 - p).powi((n - i) as i32))
        .sum()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Whether hitting some set of at most `horizon - 1` deck positions and
/// then standing beats the dealer. The order of hits is irrelevant: the
/// all-ones total only grows, so a set that never busts at the end never
/// busts along the way.
pub fn blackjack_winnable(env: &BlackjackEnv, horizon: usize) -> bool {
    fn search(hand: &mut Vec<Card>, deck: &[Card], from: usize, hits_left: usize, env: &BlackjackEnv) -> bool {
        if env.beats_dealer(hand) {
            return true;
        }
        if hits_left == 0 || hand_value(hand) > 21 {
            return false;
        }
        for i in from..deck.len() {
            hand.push(deck[i]);
            let ok = hand_value(hand) <= 21 && search(hand, deck, i + 1, hits_left - 1, env);
            hand.pop();
            if ok {
                return true;
            }
        }
        false
    }
    if horizon == 0 {
        return false;
    }
    let mut hand = env.player_start().to_vec();
    search(&mut hand, env.deck(), 0, horizon - 1, env)
}
