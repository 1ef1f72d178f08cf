//! Baseline agents with known behaviour.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::parse::boxed;
use super::{Agent, AgentError, AgentView};
use crate::envs::wordle::word_list;
use crate::envs::{Code, Direction, EnvId, EnvParams, RpsMove};

/// Uniformly random action from each game's action grammar.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        RandomAgent {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// A random grammatical action for the task's game.
    pub fn sample_action(&mut self, env: EnvId, params: Option<&EnvParams>) -> String {
        let rng = &mut self.rng;
        match env {
            EnvId::Rps => RpsMove::ALL.choose(rng).unwrap().as_str().to_string(),
            EnvId::Minesweeper => {
                let (rows, cols) = match params {
                    Some(EnvParams::Minesweeper(p)) => (p.rows, p.cols),
                    _ => (5, 5),
                };
                format!("reveal {} {}", rng.random_range(0..rows), rng.random_range(0..cols))
            }
            EnvId::Hangman => (rng.random_range(b'A'..=b'Z') as char).to_string(),
            EnvId::Wordle => word_list().choose(rng).unwrap().to_string(),
            EnvId::Blackjack => {
                if rng.random_bool(0.5) {
                    "stand".into()
                } else {
                    format!("hit {}", rng.random_range(0..48))
                }
            }
            EnvId::Maze => Direction::ALL.choose(rng).unwrap().as_str().to_string(),
            EnvId::Mastermind => Code::all_distinct().choose(rng).unwrap().to_string(),
        }
    }
}

impl Agent for RandomAgent {
    fn act(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        let task = view
            .task
            .ok_or_else(|| AgentError::Config("the random agent needs a task instance".into()))?;
        Ok(boxed(&self.sample_action(task.env_id, Some(&task.params))))
    }
}

#[derive(Debug, Clone)]
enum Script {
    /// Boxed actions, cycled over the whole run.
    Cycle(Vec<String>),
    /// Raw outputs, cycled over the whole run.
    Raw(Vec<String>),
    /// One boxed script per episode, the last reused; each cycled within its episode.
    PerEpisode(Vec<Vec<String>>),
}

/// Plays fixed action lists.
#[derive(Debug, Clone)]
pub struct ScriptedAgent {
    script: Script,
    calls: usize,
}

impl ScriptedAgent {
    pub fn repeating(actions: Vec<String>) -> Self {
        assert!(!actions.is_empty(), "script needs at least one action");
        ScriptedAgent {
            script: Script::Cycle(actions),
            calls: 0,
        }
    }

    /// Emits the given strings verbatim, without boxing.
    pub fn raw(outputs: Vec<String>) -> Self {
        assert!(!outputs.is_empty(), "script needs at least one output");
        ScriptedAgent {
            script: Script::Raw(outputs),
            calls: 0,
        }
    }

    pub fn per_episode(scripts: Vec<Vec<String>>) -> Self {
        assert!(
            !scripts.is_empty() && scripts.iter().all(|s| !s.is_empty()),
            "every episode script needs at least one action"
        );
        ScriptedAgent {
            script: Script::PerEpisode(scripts),
            calls: 0,
        }
    }
}

impl Agent for ScriptedAgent {
    fn act(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        let i = self.calls;
        self.calls += 1;
        Ok(match &self.script {
            Script::Cycle(a) => boxed(&a[i % a.len()]),
            Script::Raw(a) => a[i % a.len()].clone(),
            Script::PerEpisode(scripts) => {
                let s = &scripts[(view.episode - 1).min(scripts.len() - 1)];
                boxed(&s[view.step % s.len()])
            }
        })
    }
}

/// Replays the previous episode's outputs step by step; falls back to the
/// inner agent in episode 1 and past the end of the previous episode.
#[derive(Debug, Clone)]
pub struct RepeatLastEpisodeAgent<A> {
    inner: A,
}

impl<A: Agent> RepeatLastEpisodeAgent<A> {
    pub fn new(inner: A) -> Self {
        RepeatLastEpisodeAgent { inner }
    }
}

impl<A: Agent> Agent for RepeatLastEpisodeAgent<A> {
    fn act(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        let previous = view
            .steps
            .iter()
            .find(|s| s.episode_index + 1 == view.episode && s.step_index == view.step);
        match previous {
            Some(s) => Ok(s.raw_agent_output.clone()),
            None => self.inner.act(view),
        }
    }
}

/// Plays a fixed probe script in episode 1, then hands over to another agent.
#[derive(Debug, Clone)]
pub struct FailThenDivergeAgent<A> {
    probe: Vec<String>,
    inner: A,
}

impl<A: Agent> FailThenDivergeAgent<A> {
    pub fn new(probe: Vec<String>, inner: A) -> Self {
        assert!(!probe.is_empty(), "probe script needs at least one action");
        FailThenDivergeAgent { probe, inner }
    }
}

impl<A: Agent> Agent for FailThenDivergeAgent<A> {
    fn act(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        if view.episode == 1 {
            Ok(boxed(&self.probe[view.step % self.probe.len()]))
        } else {
            self.inner.act(view)
        }
    }
}
