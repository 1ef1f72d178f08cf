//! Tabular softmax policy.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Independent softmax distributions over `actions` choices for each of
/// `states` discrete contexts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxTable {
    states: usize,
    actions: usize,
    logits: Vec<f64>,
}

impl SoftmaxTable {
    pub fn uniform(states: usize, actions: usize) -> Self {
        assert!(states > 0 && actions > 0);
        SoftmaxTable {
            states,
            actions,
            logits: vec![0.0; states * actions],
        }
    }

    pub fn from_logits(states: usize, actions: usize, logits: Vec<f64>) -> Self {
        assert_eq!(logits.len(), states * actions);
        SoftmaxTable {
            states,
            actions,
            logits,
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    pub fn probs(&self, state: usize) -> Vec<f64> {
        let row = &self.logits[state * self.actions..(state + 1) * self.actions];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = row.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / z).collect()
    }

    pub fn log_prob(&self, state: usize, action: usize) -> f64 {
        self.probs(state)[action].ln()
    }

    /// Adds `scale * d log pi(action | state) / d logits` into `grad`.
    pub fn accumulate_log_prob_grad(&self, state: usize, action: usize, scale: f64, grad: &mut [f64]) {
        let p = self.probs(state);
        let row = &mut grad[state * self.actions..(state + 1) * self.actions];
        for (j, g) in row.iter_mut().enumerate() {
            let indicator = if j == action { 1.0 } else { 0.0 };
            *g += scale * (indicator - p[j]);
        }
    }

    pub fn sample(&self, state: usize, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let p = self.probs(state);
        for (a, q) in p.iter().enumerate() {
            acc += q;
            if u < acc {
                return a;
            }
        }
        p.len() - 1
    }

    pub fn is_finite(&self) -> bool {
        self.logits.iter().all(|l| l.is_finite())
    }
}
