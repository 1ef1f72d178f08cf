//! Repeated Rock-Paper-Scissors against a fixed hidden mixed strategy.
//! An episode is `horizon` rounds and succeeds on a strict majority of wins.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{invalid_message, seeded_rng, EnvError, EnvId, Environment, StepOutcome};
use crate::agents::prompts::rps_prompt;

const SALT: u64 = 0x7270_7331;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RpsParams {
    /// Fixes the opponent's (rock, paper, scissors) probabilities instead of
    /// drawing them from the seed.
    pub opponent: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RpsMove {
    Rock,
    Paper,
    Scissors,
}

impl RpsMove {
    pub const ALL: [RpsMove; 3] = [RpsMove::Rock, RpsMove::Paper, RpsMove::Scissors];

    pub fn as_str(self) -> &'static str {
        match self {
            RpsMove::Rock => "rock",
            RpsMove::Paper => "paper",
            RpsMove::Scissors => "scissors",
        }
    }

    pub fn parse(s: &str) -> Option<RpsMove> {
        RpsMove::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
    }

    /// The move that beats `self`.
    pub fn counter(self) -> RpsMove {
        match self {
            RpsMove::Rock => RpsMove::Paper,
            RpsMove::Paper => RpsMove::Scissors,
            RpsMove::Scissors => RpsMove::Rock,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundResult {
    Win,
    Lose,
    Tie,
}

pub fn rps_round(player: RpsMove, opponent: RpsMove) -> RoundResult {
    if player == opponent {
        RoundResult::Tie
    } else if player == opponent.counter() {
        RoundResult::Win
    } else {
        RoundResult::Lose
    }
}

/// Uniform draw from the probability simplex (normalized unit exponentials).
fn simplex_point(rng: &mut impl Rng) -> [f64; 3] {
    let mut e = [0.0; 3];
    for x in &mut e {
        let u: f64 = rng.random::<f64>();
        *x = -(1.0 - u).ln();
    }
    let total: f64 = e.iter().sum();
    e.map(|x| x / total)
}

#[derive(Debug, Clone)]
pub struct RpsEnv {
    probs: [f64; 3],
    stream: ChaCha8Rng,
    horizon: usize,
    round: usize,
    wins: usize,
    losses: usize,
    ties: usize,
}

impl RpsEnv {
    pub fn generate(seed: u64, params: &RpsParams, horizon: usize) -> Result<Self, EnvError> {
        let mut rng = seeded_rng(seed, SALT);
        let probs = match params.opponent {
            Some(p) => {
                let total: f64 = p.iter().sum();
                if p.iter().any(|x| !x.is_finite() || *x < 0.0) || (total - 1.0).abs() > 1e-9 {
                    return Err(EnvError::InvalidParams {
                        env: EnvId::Rps,
                        reason: "opponent probabilities must be nonnegative and sum to 1".into(),
                    });
                }
                p
            }
            None => simplex_point(&mut rng),
        };
        Ok(RpsEnv {
            probs,
            stream: rng,
            horizon,
            round: 0,
            wins: 0,
            losses: 0,
            ties: 0,
        })
    }

    /// The hidden (rock, paper, scissors) probabilities.
    pub fn opponent_distribution(&self) -> [f64; 3] {
        self.probs
    }

    fn draw_opponent(&mut self) -> RpsMove {
        let u: f64 = self.stream.random();
        if u < self.probs[0] {
            RpsMove::Rock
        } else if u < self.probs[0] + self.probs[1] {
            RpsMove::Paper
        } else {
            RpsMove::Scissors
        }
    }

    fn score(&self) -> String {
        format!(
            "Score: {} win(s), {} loss(es), {} tie(s).",
            self.wins, self.losses, self.ties
        )
    }

    fn close_round(&self, text: String) -> StepOutcome {
        if self.round < self.horizon {
            return StepOutcome::running(format!(
                "{text} Round {} of {}. Output your action within \\\\box{{...}}.",
                self.round + 1,
                self.horizon
            ));
        }
        if 2 * self.wins > self.horizon {
            StepOutcome::success(format!(
                "{text} You won the majority of the {} rounds. Congratulations!",
                self.horizon
            ))
        } else {
            StepOutcome::failure(format!(
                "{text} You did not win more than half of the {} rounds.",
                self.horizon
            ))
        }
    }
}

impl Environment for RpsEnv {
    fn env_id(&self) -> EnvId {
        EnvId::Rps
    }

    fn reset(&mut self) -> String {
        self.round = 0;
        self.wins = 0;
        self.losses = 0;
        self.ties = 0;
        rps_prompt()
    }

    fn step(&mut self, action: &str) -> StepOutcome {
        let Some(player) = RpsMove::parse(action) else {
            self.round += 1;
            self.losses += 1;
            let msg = invalid_message(action, "Choose rock, paper or scissors.");
            let text = format!("{msg} The round counts as a loss. {}", self.score());
            return self.close_round(text);
        };
        self.round += 1;
        let opponent = self.draw_opponent();
        let result = rps_round(player, opponent);
        match result {
            RoundResult::Win => self.wins += 1,
            RoundResult::Lose => self.losses += 1,
            RoundResult::Tie => self.ties += 1,
        }
        let verdict = match result {
            RoundResult::Win => "You win this round.",
            RoundResult::Lose => "You lose this round.",
            RoundResult::Tie => "This round is a tie.",
        };
        let text = format!(
            "You played {}, the opponent played {}. {verdict} {}",
            player.as_str(),
            opponent.as_str(),
            self.score()
        );
        self.close_round(text)
    }

    fn reject(&mut self, reason: &str) -> StepOutcome {
        self.round += 1;
        self.losses += 1;
        let text = format!("{reason} The round counts as a loss. {}", self.score());
        self.close_round(text)
    }

    fn state_key(&self) -> String {
        format!("{}/{}/{}", self.wins, self.losses, self.ties)
    }

    fn normalize_action(&self, action: &str) -> Option<String> {
        RpsMove::parse(action).map(|m| m.as_str().to_string())
    }
}
