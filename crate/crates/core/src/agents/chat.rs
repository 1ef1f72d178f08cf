//! Transcript-to-chat mapping.
//!
//! The conversation is one system message, then alternating user and
//! assistant turns: each observation is a user turn and each raw agent
//! output an assistant turn. The feedback to the last action of an episode
//! is shown at the top of the next episode's first user turn.

use serde::{Deserialize, Serialize};

use super::prompts::render_system_prompt;
use crate::protocol::StepRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// User-turn text showing `observation` at episode `episode`, given the
/// step that came before it.
pub fn user_turn(prev: Option<&StepRecord>, episode: usize, observation: &str) -> String {
    match prev {
        Some(p) if p.episode_index != episode => {
            format!("{}\n\n{}", p.next_observation, observation)
        }
        _ => observation.to_string(),
    }
}

/// The message list an agent sees at episode `episode` with `observation`
/// pending, after the steps in `steps`.
pub fn build_history(steps: &[StepRecord], episode: usize, observation: &str) -> Vec<ChatMessage> {
    let mut messages = Vec::with_capacity(2 * steps.len() + 2);
    messages.push(ChatMessage::system(render_system_prompt()));
    for (i, step) in steps.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| &steps[j]);
        messages.push(ChatMessage::user(user_turn(
            prev,
            step.episode_index,
            &step.observation,
        )));
        messages.push(ChatMessage::assistant(step.raw_agent_output.clone()));
    }
    messages.push(ChatMessage::user(user_turn(steps.last(), episode, observation)));
    messages
}
