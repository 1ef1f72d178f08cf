//! Drives the HTTP chat-completions agent against a local replay server.

use std::sync::Arc;

use icrl_bench::agents::{RemoteClient, RemoteConfig, RemoteLlmAgent, ReplayServer};
use icrl_bench::envs::EnvId;
use icrl_bench::protocol::{run_task, Budget, TaskInstance};

fn main() {
    let replies = ["up", "down", "left", "right"].map(|d| format!("I will try \\boxed{{{d}}}.")).to_vec();
    let server = ReplayServer::start_with_failures(replies, 1).unwrap();
    let client = RemoteClient::new(RemoteConfig {
        model: "replay".into(),
        base_url: Some(server.base_url()),
        backoff_initial_ms: 10,
        ..RemoteConfig::default()
    })
    .unwrap();
    let mut agent = RemoteLlmAgent::new(Arc::new(client));
    let task = TaskInstance::standard(EnvId::Maze, 0);
    let tr = run_task(&task, &mut agent, &Budget::unlimited()).unwrap();
    println!("{} steps, successes {:?}", tr.steps.len(), tr.episode_successes());
    println!("server saw {} requests", server.requests().len());
}
