//! Meta-trains a softmax table on the two-armed task-identity bandit.

use icrl_bench::grpo::{toy_meta_train, ToyConfig};

fn main() {
    let curve = toy_meta_train(&ToyConfig::default()).unwrap();
    for p in curve.points.iter().step_by(10) {
        println!(
            "step {:>3}  episode 1 {:.3}  episode 2 {:.3}",
            p.step, p.episode1_success, p.episode2_success
        );
    }
    let last = curve.last();
    println!("final episode 2 success {:.4}", last.episode2_success);
}
