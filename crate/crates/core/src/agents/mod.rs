//! Agents, prompts, the chat mapping and the boxed-action parser.

pub mod baselines;
pub mod chat;
pub mod parse;
pub mod prompts;
pub mod remote;
pub mod replay;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracles::{MastermindOracleAgent, MazeOracleAgent};
use crate::envs::EnvId;
use crate::protocol::{StepRecord, TaskInstance};

pub use baselines::{FailThenDivergeAgent, RandomAgent, RepeatLastEpisodeAgent, ScriptedAgent};
pub use chat::{build_history, ChatMessage, Role};
pub use parse::{boxed, parse_action, ParseError};
pub use remote::{RemoteClient, RemoteConfig, RemoteLlmAgent};
pub use replay::ReplayServer;

#[derive(Debug, Error)]
pub enum AgentError {
    /// The backend could not be reached or kept failing after retries.
    #[error("transport error: {0}")]
    Transport(String),
    /// The backend answered with something that is not a chat completion.
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("agent configuration: {0}")]
    Config(String),
}

/// Everything an agent may condition on at step `(episode, step)`.
#[derive(Debug, Clone, Copy)]
pub struct AgentView<'a> {
    pub task: Option<&'a TaskInstance>,
    /// All earlier steps, across episodes.
    pub steps: &'a [StepRecord],
    /// 1-based episode.
    pub episode: usize,
    /// 0-based step within the episode.
    pub step: usize,
    pub observation: &'a str,
    /// The chat rendering of the history, ending with the pending user turn.
    pub messages: &'a [ChatMessage],
}

impl AgentView<'_> {
    pub fn env_id(&self) -> Option<EnvId> {
        self.task.map(|t| t.env_id)
    }

    /// Steps of the current episode so far.
    pub fn current_episode(&self) -> &[StepRecord] {
        let start = self
            .steps
            .iter()
            .position(|s| s.episode_index == self.episode)
            .unwrap_or(self.steps.len());
        &self.steps[start..]
    }
}

/// A policy producing one raw text output per observation.
pub trait Agent {
    fn act(&mut self, view: &AgentView<'_>) -> Result<String, AgentError>;
}

impl<A: Agent + ?Sized> Agent for Box<A> {
    fn act(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        (**self).act(view)
    }
}

/// Declarative agent choice, as written in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AgentSpec {
    Random {
        #[serde(default)]
        seed: u64,
    },
    Scripted {
        actions: Vec<String>,
    },
    RepeatLastEpisode {
        #[serde(default)]
        seed: u64,
    },
    FailThenDiverge {
        probe: Vec<String>,
        #[serde(default)]
        seed: u64,
    },
    Oracle,
    RemoteLlm(RemoteConfig),
}

impl AgentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            AgentSpec::Random { .. } => "random",
            AgentSpec::Scripted { .. } => "scripted",
            AgentSpec::RepeatLastEpisode { .. } => "repeat-last-episode",
            AgentSpec::FailThenDiverge { .. } => "fail-then-diverge",
            AgentSpec::Oracle => "oracle",
            AgentSpec::RemoteLlm(_) => "remote-llm",
        }
    }

    /// Parses the short `--agent` flag forms: `random`, `oracle`,
    /// `repeat-last-episode`, `remote-llm:<model>`, `scripted:a|b|c`.
    pub fn from_flag(flag: &str) -> Result<AgentSpec, AgentError> {
        let (kind, arg) = flag.split_once(':').unwrap_or((flag, ""));
        Ok(match kind {
            "random" => AgentSpec::Random { seed: 0 },
            "oracle" => AgentSpec::Oracle,
            "repeat-last-episode" => AgentSpec::RepeatLastEpisode { seed: 0 },
            "scripted" if !arg.is_empty() => AgentSpec::Scripted {
                actions: arg.split('|').map(str::to_string).collect(),
            },
            "remote-llm" if !arg.is_empty() => AgentSpec::RemoteLlm(RemoteConfig {
                model: arg.to_string(),
                ..RemoteConfig::default()
            }),
            _ => {
                return Err(AgentError::Config(format!(
                    "unrecognised agent {flag:?}; expected random, oracle, repeat-last-episode, \
                     scripted:<a|b|...> or remote-llm:<model>"
                )))
            }
        })
    }
}

/// Builds one agent per (task, rollout). Remote agents built by the same
/// factory share one HTTP client and in-flight limit.
pub struct AgentFactory {
    spec: AgentSpec,
    client: Option<Arc<RemoteClient>>,
}

impl AgentFactory {
    pub fn new(spec: AgentSpec) -> Result<Self, AgentError> {
        let client = match &spec {
            AgentSpec::RemoteLlm(cfg) => Some(Arc::new(RemoteClient::new(cfg.clone())?)),
            _ => None,
        };
        Ok(AgentFactory { spec, client })
    }

    pub fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    pub fn build(&self, task: &TaskInstance, rollout: u64) -> Result<Box<dyn Agent + Send>, AgentError> {
        let stream = |seed: u64| {
            seed ^ task.seed.wrapping_mul(0x2545_F491_4F6C_DD1D) ^ rollout.wrapping_mul(0x9E37_79B9)
        };
        Ok(match &self.spec {
            AgentSpec::Random { seed } => Box::new(RandomAgent::new(stream(*seed))),
            AgentSpec::Scripted { actions } => Box::new(ScriptedAgent::repeating(actions.clone())),
            AgentSpec::RepeatLastEpisode { seed } => {
                Box::new(RepeatLastEpisodeAgent::new(RandomAgent::new(stream(*seed))))
            }
            AgentSpec::FailThenDiverge { probe, seed } => Box::new(FailThenDivergeAgent::new(
                probe.clone(),
                RandomAgent::new(stream(*seed)),
            )),
            AgentSpec::Oracle => match task.env_id {
                EnvId::Maze => Box::new(MazeOracleAgent::new()),
                EnvId::Mastermind => Box::new(MastermindOracleAgent::new()),
                other => {
                    return Err(AgentError::Config(format!(
                        "no oracle for {other}; oracles exist for maze and mastermind"
                    )))
                }
            },
            AgentSpec::RemoteLlm(_) => {
                let client = self.client.clone().expect("client built with the factory");
                Box::new(RemoteLlmAgent::new(client))
            }
        })
    }
}
