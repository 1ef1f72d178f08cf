//! Desk-scale meta-training on a two-armed task-identity bandit.
//!
//! Each task hides a good arm. An episode is one pull (H = 1) and a task is
//! played for two episodes (T = 2), so episode 1 reveals which arm pays and
//! an agent that learned to use its history always succeeds in episode 2.
//! The policy is a softmax table over five histories: the empty one, and
//! (first arm, first outcome) for the second episode.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{surrogate_gradient, ClipConfig, GroupBatch, GrpoError, SoftmaxTable, TrajectoryLogProbs};
use crate::agents::parse::boxed;
use crate::agents::{Agent, AgentError, AgentView};
use crate::envs::{Episodic, StepOutcome};
use crate::protocol::{run_episodes, Budget, StepRecord};

pub const ARMS: usize = 2;
pub const HISTORIES: usize = 5;

/// One task of the family: pulling `good` succeeds, the other arm fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoArmBandit {
    pub good: usize,
}

impl Episodic for TwoArmBandit {
    fn reset(&mut self) -> String {
        "Two arms, one pays. Pull arm 0 or arm 1.".into()
    }

    fn step(&mut self, action: &str) -> StepOutcome {
        match action.trim().parse::<usize>() {
            Ok(a) if a == self.good => StepOutcome::success(format!("Arm {a} paid.")),
            Ok(a) if a < ARMS => StepOutcome::failure(format!("Arm {a} did not pay.")),
            _ => StepOutcome::failure(format!("Invalid arm '{action}'.")),
        }
    }

    fn reject(&mut self, reason: &str) -> StepOutcome {
        StepOutcome::failure(reason.to_string())
    }

    fn normalize_action(&self, action: &str) -> Option<String> {
        let a = action.trim();
        (a == "0" || a == "1").then(|| a.to_string())
    }
}

/// Index of the history a decision conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BanditHistory {
    Fresh,
    After { arm: usize, paid: bool },
}

impl BanditHistory {
    pub fn from_steps(steps: &[StepRecord]) -> Self {
        match steps.last() {
            None => BanditHistory::Fresh,
            Some(s) => BanditHistory::After {
                arm: s.action.as_deref().and_then(|a| a.parse().ok()).unwrap_or(0),
                paid: s.success,
            },
        }
    }

    pub fn index(self) -> usize {
        match self {
            BanditHistory::Fresh => 0,
            BanditHistory::After { arm, paid } => 1 + 2 * arm + usize::from(!paid),
        }
    }
}

struct TableAgent<'a, R> {
    table: &'a SoftmaxTable,
    rng: &'a mut R,
    decisions: Vec<(usize, usize)>,
}

impl<R: Rng> Agent for TableAgent<'_, R> {
    fn act(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        let state = BanditHistory::from_steps(view.steps).index();
        let arm = self.table.sample(state, self.rng);
        self.decisions.push((state, arm));
        Ok(boxed(&arm.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyConfig {
    pub group_size: usize,
    pub batch_size: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub clip: ClipConfig,
    /// Gradient steps per sampled batch; beyond the first, ratios move off 1.
    pub inner_epochs: usize,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            group_size: 4,
            batch_size: 64,
            steps: 100,
            learning_rate: 1.0,
            clip: ClipConfig::default(),
            inner_epochs: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    /// Mean success count of the batch sampled at this step (NaN at step 0).
    pub batch_mean_reward: f64,
    /// Exact expected success count of the current policy.
    pub expected_reward: f64,
    pub episode1_success: f64,
    pub episode2_success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
    pub policy: SoftmaxTable,
}

impl LearningCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "step,batch_mean_reward,expected_reward,episode1_success,episode2_success\n",
        );
        for p in &self.points {
            writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6}",
                p.step, p.batch_mean_reward, p.expected_reward, p.episode1_success, p.episode2_success
            )
            .unwrap();
        }
        out
    }

    pub fn last(&self) -> &CurvePoint {
        self.points.last().expect("curve has the initial point")
    }
}

/// Exact per-episode success probabilities of `table`, averaging over the
/// two equally likely tasks.
pub fn exact_success(table: &SoftmaxTable) -> (f64, f64) {
    let first = table.probs(0);
    let mut ep1 = 0.0;
    let mut ep2 = 0.0;
    for good in 0..ARMS {
        ep1 += 0.5 * first[good];
        for (arm, p_arm) in first.iter().enumerate() {
            let state = BanditHistory::After {
                arm,
                paid: arm == good,
            }
            .index();
            ep2 += 0.5 * p_arm * table.probs(state)[good];
        }
    }
    (ep1, ep2)
}

fn point(step: usize, batch_mean_reward: f64, table: &SoftmaxTable) -> CurvePoint {
    let (ep1, ep2) = exact_success(table);
    CurvePoint {
        step,
        batch_mean_reward,
        expected_reward: ep1 + ep2,
        episode1_success: ep1,
        episode2_success: ep2,
    }
}

struct Sample {
    reward: f64,
    decisions: Vec<(usize, usize)>,
    logp_old: Vec<f64>,
}

/// Trains a uniform softmax table with the clipped group objective by plain
/// gradient ascent. Returns the curve with the untrained policy at step 0.
pub fn toy_meta_train(config: &ToyConfig) -> Result<LearningCurve, GrpoError> {
    config.clip.validate()?;
    if config.group_size == 0 || config.batch_size < config.group_size {
        return Err(GrpoError::EmptyGroup);
    }
    let groups = config.batch_size / config.group_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut table = SoftmaxTable::uniform(HISTORIES, ARMS);
    let mut points = vec![point(0, f64::NAN, &table)];

    for step in 1..=config.steps {
        let mut batch: Vec<Vec<Sample>> = Vec::with_capacity(groups);
        for _ in 0..groups {
            let good = rng.random_range(0..ARMS);
            let mut group = Vec::with_capacity(config.group_size);
            for _ in 0..config.group_size {
                let mut env = TwoArmBandit { good };
                let mut agent = TableAgent {
                    table: &table,
                    rng: &mut rng,
                    decisions: Vec::new(),
                };
                let rollout = run_episodes(&mut env, None, 1, 2, &mut agent, &Budget::unlimited())
                    .expect("table agent cannot fail");
                let reward = if rollout.truncated {
                    0.0
                } else {
                    rollout.steps.iter().filter(|s| s.success).count() as f64
                };
                let decisions = agent.decisions;
                let logp_old = decisions.iter().map(|&(s, a)| table.log_prob(s, a)).collect();
                group.push(Sample {
                    reward,
                    decisions,
                    logp_old,
                });
            }
            batch.push(group);
        }
        let batch_mean = batch.iter().flatten().map(|s| s.reward).sum::<f64>()
            / (groups * config.group_size) as f64;

        for _ in 0..config.inner_epochs.max(1) {
            let mut grad = vec![0.0; table.logits().len()];
            for group in &batch {
                let gb = GroupBatch::new(
                    group
                        .iter()
                        .map(|s| TrajectoryLogProbs {
                            reward: s.reward,
                            logp_old: s.logp_old.clone(),
                            logp_new: s.decisions.iter().map(|&(st, a)| table.log_prob(st, a)).collect(),
                        })
                        .collect(),
                );
                let g = surrogate_gradient(&gb, &config.clip)?;
                for (sample, gk) in group.iter().zip(&g) {
                    for (&(st, a), &w) in sample.decisions.iter().zip(gk) {
                        table.accumulate_log_prob_grad(st, a, w / groups as f64, &mut grad);
                    }
                }
            }
            for (l, g) in table.logits_mut().iter_mut().zip(&grad) {
                *l += config.learning_rate * g;
            }
            if !table.is_finite() {
                return Err(GrpoError::Diverged(step));
            }
        }
        points.push(point(step, batch_mean, &table));
    }
    Ok(LearningCurve {
        points,
        policy: table,
    })
}
