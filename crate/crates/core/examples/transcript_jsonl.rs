//! Writes a transcript as JSONL and reads it back.

use icrl_bench::agents::ScriptedAgent;
use icrl_bench::envs::EnvId;
use icrl_bench::protocol::{run_task, Budget, TaskInstance, Transcript};

fn main() {
    let task = TaskInstance::standard(EnvId::Hangman, 3);
    let mut agent = ScriptedAgent::repeating(["e", "a", "t", "o", "i", "n", "s", "r", "h"].map(String::from).to_vec());
    let tr = run_task(&task, &mut agent, &Budget::unlimited()).unwrap();
    let text = tr.to_jsonl();
    print!("{}", text.lines().take(3).collect::<Vec<_>>().join("\n"));
    println!("\n... {} lines", text.lines().count());
    let back = Transcript::from_jsonl(&text).unwrap();
    assert_eq!(back, tr);
    println!("round trip ok");
}
