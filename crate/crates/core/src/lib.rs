//! Multi-episode in-context reinforcement learning benchmark.
//!
//! Seeded text games ([`envs`]), the cross-episode interaction loop and its
//! transcript ([`protocol`]), baseline and remote agents ([`agents`]),
//! reference oracles ([`oracles`]), evaluation statistics ([`metrics`]), the
//! group-relative clipped objective with a toy trainer ([`grpo`]) and the
//! command-line driver ([`cli`]).

pub mod agents;
pub mod cli;
pub mod envs;
pub mod grpo;
pub mod metrics;
pub mod oracles;
pub mod protocol;
