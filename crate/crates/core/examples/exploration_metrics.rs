//! Success curve, regret and state-novelty metrics for two baselines.

use icrl_bench::agents::{RandomAgent, RepeatLastEpisodeAgent};
use icrl_bench::envs::EnvId;
use icrl_bench::metrics::{delta_states, regret_curve, success_by_episode};
use icrl_bench::protocol::{run_task, Budget, TaskInstance};

fn main() {
    let run = |repeat: bool| -> Vec<_> {
        (0..64)
            .map(|seed| {
                let task = TaskInstance::standard(EnvId::Wordle, seed);
                if repeat {
                    run_task(&task, &mut RepeatLastEpisodeAgent::new(RandomAgent::new(seed)), &Budget::unlimited())
                } else {
                    run_task(&task, &mut RandomAgent::new(seed), &Budget::unlimited())
                }
                .unwrap()
            })
            .collect()
    };
    for (name, trs) in [("random", run(false)), ("repeat-last-episode", run(true))] {
        println!("{name}");
        println!("  success by episode {:?}", success_by_episode(&trs).unwrap());
        println!("  regret curve       {:?}", regret_curve(&trs, 1.0).unwrap());
        println!("  delta states       {:?}", delta_states(&trs).unwrap());
    }
}
