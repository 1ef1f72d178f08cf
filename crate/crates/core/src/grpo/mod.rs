//! Group-relative policy optimization objective.
//!
//! For K trajectories of one task with rewards `R_k`, the advantage is
//! `A_k = R_k - mean(R)` and the objective is
//! `(1/K) Σ_k Σ_t min(r A_k, clip(r, 1 - eps_low, 1 + eps_high) A_k)`
//! with `r = exp(logp_new - logp_old)` per decision.

pub mod policy;
pub mod toy;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use policy::SoftmaxTable;
pub use toy::{toy_meta_train, BanditHistory, LearningCurve, ToyConfig, TwoArmBandit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrpoError {
    #[error("non-finite log-probability in trajectory {trajectory}, step {step}")]
    NonFinite { trajectory: usize, step: usize },
    #[error("old and new log-probabilities differ in length for trajectory {0}")]
    Misaligned(usize),
    #[error("empty group")]
    EmptyGroup,
    #[error("invalid clip bounds: need 1 - eps_low > 0 and eps_high >= 0")]
    BadClip,
    #[error("training diverged at step {0}")]
    Diverged(usize),
}

/// Rewards minus their group mean. No scale normalization.
pub fn group_advantages(rewards: &[f64]) -> Vec<f64> {
    if rewards.is_empty() {
        return Vec::new();
    }
    let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
    rewards.iter().map(|r| r - mean).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipConfig {
    pub eps_low: f64,
    pub eps_high: f64,
}

impl Default for ClipConfig {
    fn default() -> Self {
        ClipConfig {
            eps_low: 0.2,
            eps_high: 0.28,
        }
    }
}

impl ClipConfig {
    pub fn validate(&self) -> Result<(), GrpoError> {
        if 1.0 - self.eps_low > 0.0 && self.eps_high >= 0.0 {
            Ok(())
        } else {
            Err(GrpoError::BadClip)
        }
    }

    pub fn clip(&self, r: f64) -> f64 {
        r.clamp(1.0 - self.eps_low, 1.0 + self.eps_high)
    }
}

/// One trajectory's reward and per-decision log-probabilities under the
/// sampling policy and the policy being optimized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLogProbs {
    pub reward: f64,
    pub logp_old: Vec<f64>,
    pub logp_new: Vec<f64>,
}

impl TrajectoryLogProbs {
    /// Builds per-decision log-probabilities from per-token ones by summing
    /// the tokens of each decision.
    pub fn from_tokens(reward: f64, old: &[Vec<f64>], new: &[Vec<f64>]) -> Self {
        TrajectoryLogProbs {
            reward,
            logp_old: old.iter().map(|t| t.iter().sum()).collect(),
            logp_new: new.iter().map(|t| t.iter().sum()).collect(),
        }
    }
}

/// K trajectories sampled for the same task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupBatch {
    pub trajectories: Vec<TrajectoryLogProbs>,
}

impl GroupBatch {
    pub fn new(trajectories: Vec<TrajectoryLogProbs>) -> Self {
        GroupBatch { trajectories }
    }

    pub fn k(&self) -> usize {
        self.trajectories.len()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.trajectories.iter().map(|t| t.reward).collect()
    }

    fn check(&self) -> Result<(), GrpoError> {
        if self.trajectories.is_empty() {
            return Err(GrpoError::EmptyGroup);
        }
        for (k, t) in self.trajectories.iter().enumerate() {
            if t.logp_old.len() != t.logp_new.len() {
                return Err(GrpoError::Misaligned(k));
            }
            for (step, (a, b)) in t.logp_old.iter().zip(&t.logp_new).enumerate() {
                if !a.is_finite() || !b.is_finite() {
                    return Err(GrpoError::NonFinite { trajectory: k, step });
                }
            }
        }
        Ok(())
    }
}

fn term(r: f64, adv: f64, clip: &ClipConfig) -> (f64, bool) {
    let unclipped = r * adv;
    let clipped = clip.clip(r) * adv;
    if unclipped <= clipped {
        (unclipped, true)
    } else {
        (clipped, false)
    }
}

/// The clipped surrogate objective (to be maximized).
pub fn clipped_surrogate(batch: &GroupBatch, clip: &ClipConfig) -> Result<f64, GrpoError> {
    batch.check()?;
    clip.validate()?;
    let adv = group_advantages(&batch.rewards());
    let mut total = 0.0;
    for (t, a) in batch.trajectories.iter().zip(&adv) {
        for (old, new) in t.logp_old.iter().zip(&t.logp_new) {
            total += term((new - old).exp(), *a, clip).0;
        }
    }
    Ok(total / batch.k() as f64)
}

/// Gradient of [`clipped_surrogate`] with respect to every `logp_new`.
/// A term contributes `r A / K` while its unclipped branch is the minimum
/// and nothing once the clip binds.
pub fn surrogate_gradient(batch: &GroupBatch, clip: &ClipConfig) -> Result<Vec<Vec<f64>>, GrpoError> {
    batch.check()?;
    clip.validate()?;
    let adv = group_advantages(&batch.rewards());
    let k = batch.k() as f64;
    Ok(batch
        .trajectories
        .iter()
        .zip(&adv)
        .map(|(t, &a)| {
            t.logp_old
                .iter()
                .zip(&t.logp_new)
                .map(|(old, new)| {
                    let r = (new - old).exp();
                    match term(r, a, clip) {
                        (_, true) => r * a / k,
                        (_, false) => 0.0,
                    }
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(adv_reward: f64, r: f64) -> GroupBatch {
        // Two trajectories with rewards ±adv around 0 so A = adv for the first.
        GroupBatch::new(vec![
            TrajectoryLogProbs {
                reward: adv_reward,
                logp_old: vec![0.0],
                logp_new: vec![r.ln()],
            },
            TrajectoryLogProbs {
                reward: -adv_reward,
                logp_old: vec![],
                logp_new: vec![],
            },
        ])
    }

    #[test]
    fn advantages() {
        assert_eq!(group_advantages(&[2.0, 0.0, 1.0, 1.0]), vec![1.0, -1.0, 0.0, 0.0]);
        assert_eq!(group_advantages(&[3.0, 3.0]), vec![0.0, 0.0]);
        assert_eq!(group_advantages(&[5.0]), vec![0.0]);
    }

    #[test]
    fn clip_arithmetic() {
        let clip = ClipConfig::default();
        assert_eq!(term(2.0, 1.0, &clip).0, 1.28);
        assert_eq!(term(0.5, -1.0, &clip).0, -0.8);
        // With K = 2, the objective is half the single term.
        let v = clipped_surrogate(&single(1.0, 2.0), &clip).unwrap();
        assert!((v - 1.28 / 2.0).abs() < 1e-15);
        let v = clipped_surrogate(&single(-1.0, 0.5), &clip).unwrap();
        assert!((v - -0.8 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn ratio_one_is_unclipped() {
        let batch = GroupBatch::new(vec![
            TrajectoryLogProbs { reward: 2.0, logp_old: vec![-0.3, -1.0], logp_new: vec![-0.3, -1.0] },
            TrajectoryLogProbs { reward: 0.0, logp_old: vec![-0.7], logp_new: vec![-0.7] },
        ]);
        let v = clipped_surrogate(&batch, &ClipConfig::default()).unwrap();
        // (1/2)(2 * 1 + 1 * -1)
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let mut batch = single(1.0, 2.0);
        batch.trajectories[0].logp_new[0] = f64::NAN;
        assert!(matches!(
            clipped_surrogate(&batch, &ClipConfig::default()),
            Err(GrpoError::NonFinite { .. })
        ));
        let bad = ClipConfig { eps_low: 1.0, eps_high: 0.2 };
        assert_eq!(clipped_surrogate(&single(1.0, 1.0), &bad), Err(GrpoError::BadClip));
        assert_eq!(
            clipped_surrogate(&GroupBatch::new(vec![]), &ClipConfig::default()),
            Err(GrpoError::EmptyGroup)
        );
    }

    #[test]
    fn token_hook_sums_tokens() {
        let t = TrajectoryLogProbs::from_tokens(1.0, &[vec![-0.5, -0.25]], &[vec![-0.5, -0.5]]);
        assert_eq!(t.logp_old, vec![-0.75]);
        assert_eq!(t.logp_new, vec![-1.0]);
    }
}
