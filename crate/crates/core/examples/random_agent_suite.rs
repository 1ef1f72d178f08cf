//! Random baseline over every game, with per-game reports.

use icrl_bench::agents::RandomAgent;
use icrl_bench::envs::EnvId;
use icrl_bench::metrics::EvalReport;
use icrl_bench::oracles::j_star;
use icrl_bench::protocol::{run_task, Budget, TaskInstance};

fn main() {
    for env in EnvId::ALL {
        let transcripts: Vec<_> = (0..32)
            .map(|seed| {
                let task = TaskInstance::standard(env, seed);
                run_task(&task, &mut RandomAgent::new(seed), &Budget::unlimited()).unwrap()
            })
            .collect();
        let j: Vec<f64> = transcripts.iter().map(|t| j_star(&t.task).unwrap()).collect();
        let report = EvalReport::from_transcripts(&transcripts, &j).unwrap();
        println!("{}", report.summary_line());
    }
}
