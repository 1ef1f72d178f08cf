//! Exact Mastermind DP: the optimal first guess and its win probability.

use icrl_bench::envs::EnvId;
use icrl_bench::oracles::{CandidateSet, MastermindOracleAgent, MastermindSolver};
use icrl_bench::protocol::{run_task, Budget, TaskInstance};

fn main() {
    let mut solver = MastermindSolver::new();
    for turns in 1..=5 {
        let v = solver.value(CandidateSet::all(), turns).unwrap();
        let g = solver.best_guess(CandidateSet::all(), turns).unwrap();
        println!("turns {turns}: win probability {v:.4}, first guess {g}");
    }
    let task = TaskInstance::standard(EnvId::Mastermind, 7);
    let tr = run_task(&task, &mut MastermindOracleAgent::new(), &Budget::unlimited()).unwrap();
    println!("{task}: episode successes {:?}", tr.episode_successes());
}
