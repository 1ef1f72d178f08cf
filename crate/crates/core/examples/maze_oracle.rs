//! Plays a few partially observed mazes with the belief-map oracle.

use icrl_bench::envs::EnvId;
use icrl_bench::metrics::success_by_episode;
use icrl_bench::oracles::MazeOracleAgent;
use icrl_bench::protocol::{run_task, Budget, TaskInstance};

fn main() {
    let mut transcripts = Vec::new();
    for seed in 0..20 {
        let task = TaskInstance::standard(EnvId::Maze, seed);
        let mut agent = MazeOracleAgent::new();
        transcripts.push(run_task(&task, &mut agent, &Budget::unlimited()).expect("maze run"));
    }
    let first = &transcripts[0];
    for s in first.episode(0) {
        println!("{:>8}  {}", s.action.as_deref().unwrap_or("-"), s.next_observation.lines().next().unwrap_or(""));
    }
    println!("success by episode: {:?}", success_by_episode(&transcripts).unwrap());
}
