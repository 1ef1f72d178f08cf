//! The multi-episode interaction protocol and its transcript.
//!
//! A task is played for `episodes` episodes of at most `horizon` steps.
//! Every episode resets the environment to a fresh start of the same hidden
//! task, while the agent keeps the whole cross-episode history.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::chat::{user_turn, ChatMessage};
use crate::agents::parse::parse_action;
use crate::agents::prompts::{render_observation, render_system_prompt};
use crate::agents::{Agent, AgentError, AgentView};
use crate::envs::{make_env, EnvError, EnvId, EnvParams, Episodic, StepOutcome};

/// Format tag written into every transcript header.
pub const TRANSCRIPT_FORMAT: &str = "icrl-transcript/1";

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("agent failed: {0}")]
    Agent(#[from] AgentError),
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("malformed transcript: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("transcript json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One environment instance: game, seed, horizon H, episode count T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub env_id: EnvId,
    pub seed: u64,
    pub horizon: usize,
    pub episodes: usize,
    pub params: EnvParams,
}

impl TaskInstance {
    /// Standard suite settings for `env_id` with default parameters.
    pub fn standard(env_id: EnvId, seed: u64) -> Self {
        TaskInstance {
            env_id,
            seed,
            horizon: env_id.default_horizon(),
            episodes: env_id.default_episodes(),
            params: EnvParams::default_for(env_id),
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.horizon == 0 || self.episodes == 0 {
            return Err(ProtocolError::InvalidTask(format!(
                "horizon and episodes must be positive (got H={}, T={})",
                self.horizon, self.episodes
            )));
        }
        if self.params.env_id() != self.env_id {
            return Err(EnvError::ParamsMismatch {
                task: self.env_id,
                params: self.params.env_id(),
            }
            .into());
        }
        Ok(())
    }
}

impl fmt::Display for TaskInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} seed={} H={} T={}",
            self.env_id, self.seed, self.horizon, self.episodes
        )
    }
}

/// One agent decision and the environment's response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based episode number.
    pub episode_index: usize,
    /// 0-based step within the episode.
    pub step_index: usize,
    /// What the agent saw before acting.
    pub observation: String,
    /// Extracted action, `None` when the output had no boxed action.
    pub action: Option<String>,
    pub raw_agent_output: String,
    pub reward: f64,
    pub terminal: bool,
    pub success: bool,
    /// The environment's response to the action.
    pub next_observation: String,
}

/// Counts the tokens of one message.
pub type TokenCounter = Arc<dyn Fn(&str) -> usize + Send + Sync>;

/// Step and size caps for one run. Exceeding any cap truncates the run.
#[derive(Clone, Default)]
pub struct Budget {
    pub max_steps: Option<usize>,
    pub max_chars: Option<usize>,
    pub max_tokens: Option<usize>,
    pub token_counter: Option<TokenCounter>,
}

impl fmt::Debug for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Budget")
            .field("max_steps", &self.max_steps)
            .field("max_chars", &self.max_chars)
            .field("max_tokens", &self.max_tokens)
            .field("token_counter", &self.token_counter.is_some())
            .finish()
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn chars(max_chars: usize) -> Self {
        Budget {
            max_chars: Some(max_chars),
            ..Budget::default()
        }
    }

    pub fn steps(max_steps: usize) -> Self {
        Budget {
            max_steps: Some(max_steps),
            ..Budget::default()
        }
    }

    /// Attaches a tokenizer hook and a token cap.
    pub fn with_tokens(
        mut self,
        max_tokens: usize,
        counter: impl Fn(&str) -> usize + Send + Sync + 'static,
    ) -> Self {
        self.max_tokens = Some(max_tokens);
        self.token_counter = Some(Arc::new(counter));
        self
    }

    fn context_exceeded(&self, messages: &[ChatMessage]) -> bool {
        if let Some(max) = self.max_chars {
            let chars: usize = messages.iter().map(|m| m.content.chars().count()).sum();
            if chars > max {
                return true;
            }
        }
        if let (Some(max), Some(count)) = (self.max_tokens, &self.token_counter) {
            let tokens: usize = messages.iter().map(|m| count(&m.content)).sum();
            if tokens > max {
                return true;
            }
        }
        false
    }
}

/// The full cross-episode record of one task run.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub task: TaskInstance,
    pub steps: Vec<StepRecord>,
    pub episode_lengths: Vec<usize>,
    /// Set when a budget cap cut the run short.
    pub truncated: bool,
}

/// Which convention [`trajectory_reward`] applies to truncated runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardConvention {
    /// Truncated trajectories score zero.
    Training,
    /// Successes are counted regardless of truncation.
    Evaluation,
}

impl Transcript {
    /// Steps of episode `e` (1-based).
    pub fn episode(&self, e: usize) -> &[StepRecord] {
        let start: usize = self.episode_lengths.iter().take(e.saturating_sub(1)).sum();
        let len = self.episode_lengths.get(e.wrapping_sub(1)).copied().unwrap_or(0);
        &self.steps[start.min(self.steps.len())..(start + len).min(self.steps.len())]
    }

    /// Success flag per episode, length T; episodes that never ran count as failures.
    pub fn episode_successes(&self) -> Vec<bool> {
        (1..=self.task.episodes)
            .map(|e| self.episode(e).iter().any(|s| s.success))
            .collect()
    }

    /// Binary per-episode returns (1 for a success, else 0), length T.
    pub fn episode_returns(&self) -> Vec<f64> {
        self.episode_successes()
            .into_iter()
            .map(|s| if s { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: String| Err(ProtocolError::Malformed(m));
        if self.episode_lengths.len() > self.task.episodes {
            return bad(format!(
                "{} episodes recorded but T = {}",
                self.episode_lengths.len(),
                self.task.episodes
            ));
        }
        if self.episode_lengths.iter().sum::<usize>() != self.steps.len() {
            return bad("episode lengths do not add up to the step count".into());
        }
        for (e, &len) in self.episode_lengths.iter().enumerate() {
            let e = e + 1;
            if len > self.task.horizon {
                return bad(format!("episode {e} has {len} steps, H = {}", self.task.horizon));
            }
            let steps = self.episode(e);
            for (t, s) in steps.iter().enumerate() {
                if s.episode_index != e || s.step_index != t {
                    return bad(format!(
                        "step ({}, {}) out of order, expected ({e}, {t})",
                        s.episode_index, s.step_index
                    ));
                }
                if s.success && !s.terminal {
                    return bad(format!("step ({e}, {t}) succeeds without terminating"));
                }
                if s.terminal && t + 1 != steps.len() {
                    return bad(format!("step ({e}, {t}) is terminal but not last"));
                }
            }
        }
        Ok(())
    }

    /// Serializes as JSONL: a header line with the task, then one line per step.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), ProtocolError> {
        let header = TranscriptHeader {
            format: TRANSCRIPT_FORMAT.to_string(),
            task: self.task.clone(),
            episode_lengths: self.episode_lengths.clone(),
            truncated: self.truncated,
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for step in &self.steps {
            serde_json::to_writer(&mut out, step)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Transcript, ProtocolError> {
        let mut lines = input.lines();
        let first = lines
            .next()
            .ok_or_else(|| ProtocolError::Malformed("empty transcript".into()))??;
        let header: TranscriptHeader = serde_json::from_str(&first)?;
        if header.format != TRANSCRIPT_FORMAT {
            return Err(ProtocolError::Malformed(format!(
                "unsupported transcript format {:?}",
                header.format
            )));
        }
        let mut steps = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            steps.push(serde_json::from_str(&line)?);
        }
        let transcript = Transcript {
            task: header.task,
            steps,
            episode_lengths: header.episode_lengths,
            truncated: header.truncated,
        };
        transcript.validate()?;
        Ok(transcript)
    }

    pub fn from_jsonl(text: &str) -> Result<Transcript, ProtocolError> {
        Transcript::read_jsonl(text.as_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<(), ProtocolError> {
        let file = std::fs::File::create(path)?;
        let mut out = io::BufWriter::new(file);
        self.write_jsonl(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Transcript, ProtocolError> {
        let file = std::fs::File::open(path)?;
        Transcript::read_jsonl(io::BufReader::new(file))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TranscriptHeader {
    format: String,
    task: TaskInstance,
    episode_lengths: Vec<usize>,
    truncated: bool,
}

/// Steps, episode lengths and truncation flag of a protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub steps: Vec<StepRecord>,
    pub episode_lengths: Vec<usize>,
    pub truncated: bool,
}

const NO_ACTION: &str = "No boxed action was found in your response, so this turn is lost.";

/// Runs the protocol against any environment. `task` is passed through to
/// the agent's view and may be absent for ad-hoc environments.
pub fn run_episodes<E: Episodic + ?Sized, A: Agent + ?Sized>(
    env: &mut E,
    task: Option<&TaskInstance>,
    horizon: usize,
    episodes: usize,
    agent: &mut A,
    budget: &Budget,
) -> Result<Rollout, ProtocolError> {
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut lengths = Vec::with_capacity(episodes);
    let mut messages = vec![ChatMessage::system(render_system_prompt())];
    let mut truncated = false;

    'episodes: for e in 1..=episodes {
        let mut observation = render_observation(&env.reset(), true);
        let mut len = 0;
        for t in 0..horizon {
            if budget.max_steps.is_some_and(|m| steps.len() >= m) {
                truncated = true;
            } else {
                messages.push(ChatMessage::user(user_turn(steps.last(), e, &observation)));
                truncated = budget.context_exceeded(&messages);
            }
            if truncated {
                if len > 0 {
                    lengths.push(len);
                }
                break 'episodes;
            }
            let view = AgentView {
                task,
                steps: &steps,
                episode: e,
                step: t,
                observation: &observation,
                messages: &messages,
            };
            let raw = agent.act(&view)?;
            messages.push(ChatMessage::assistant(raw.clone()));
            if budget.context_exceeded(&messages) {
                truncated = true;
                if len > 0 {
                    lengths.push(len);
                }
                break 'episodes;
            }
            let (action, outcome): (Option<String>, StepOutcome) = match parse_action(&raw) {
                Ok(content) => {
                    let action = env.normalize_action(&content).unwrap_or(content);
                    let outcome = env.step(&action);
                    (Some(action), outcome)
                }
                Err(_) => (None, env.reject(NO_ACTION)),
            };
            steps.push(StepRecord {
                episode_index: e,
                step_index: t,
                observation: std::mem::take(&mut observation),
                action,
                raw_agent_output: raw,
                reward: outcome.reward,
                terminal: outcome.terminal,
                success: outcome.success,
                next_observation: outcome.observation.clone(),
            });
            len += 1;
            observation = outcome.observation;
            if outcome.terminal {
                break;
            }
        }
        lengths.push(len);
    }

    Ok(Rollout {
        steps,
        episode_lengths: lengths,
        truncated,
    })
}

/// Plays `task` for T episodes with `agent`.
pub fn run_task<A: Agent + ?Sized>(
    task: &TaskInstance,
    agent: &mut A,
    budget: &Budget,
) -> Result<Transcript, ProtocolError> {
    task.validate()?;
    let mut env = make_env(task)?;
    let rollout = run_episodes(
        env.as_mut(),
        Some(task),
        task.horizon,
        task.episodes,
        agent,
        budget,
    )?;
    Ok(Transcript {
        task: task.clone(),
        steps: rollout.steps,
        episode_lengths: rollout.episode_lengths,
        truncated: rollout.truncated,
    })
}

/// Number of successful episodes. Under the training convention a truncated
/// transcript scores zero.
pub fn trajectory_reward(transcript: &Transcript, convention: RewardConvention) -> u32 {
    if transcript.truncated && convention == RewardConvention::Training {
        return 0;
    }
    transcript.steps.iter().filter(|s| s.success).count() as u32
}

/// `T * j_star` minus the summed episode returns of one trace.
pub fn in_context_regret(j_star: f64, episode_returns: &[f64]) -> f64 {
    episode_returns.len() as f64 * j_star - episode_returns.iter().sum::<f64>()
}
