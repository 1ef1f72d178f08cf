//! Evaluates the clipped group objective and its gradient on a small group.

use icrl_bench::grpo::{clipped_surrogate, group_advantages, surrogate_gradient, ClipConfig, GroupBatch, TrajectoryLogProbs};

fn main() {
    let batch = GroupBatch::new(vec![
        TrajectoryLogProbs { reward: 2.0, logp_old: vec![-0.7, -1.1], logp_new: vec![-0.2, -1.0] },
        TrajectoryLogProbs { reward: 0.0, logp_old: vec![-0.4], logp_new: vec![-1.5] },
        TrajectoryLogProbs { reward: 1.0, logp_old: vec![-0.9, -0.3, -2.0], logp_new: vec![-0.9, -0.3, -2.0] },
    ]);
    let clip = ClipConfig::default();
    println!("advantages {:?}", group_advantages(&batch.rewards()));
    println!("objective  {:.6}", clipped_surrogate(&batch, &clip).unwrap());
    println!("gradient   {:?}", surrogate_gradient(&batch, &clip).unwrap());
}
