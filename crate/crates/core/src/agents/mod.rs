//! Policies: the [`Policy`] contract, deterministic baselines, and an
//! advantage actor-critic trained from scratch on the trading environment.

mod a2c;
mod baselines;
mod checkpoint;
mod mlp;
mod normalize;

use rand::RngCore;
use thiserror::Error;

use crate::env::{Action, EnvError};

pub use a2c::{
    a2c_loss, a2c_train, a2c_update, advantages, gaussian_entropy, n_step_returns, A2CConfig, A2CPolicy, LossParts,
    RmsProp, RolloutBatch, TrainStats, TrainedAgent, UpdateStats,
};
pub use baselines::{baseline, BuyAndHold, Hold, Momentum, RandomPolicy, BASELINE_NAMES};
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointHeader};
pub use mlp::{mlp_backward, mlp_forward, Forward, HeadGrads, MlpParams};
pub use normalize::ObsNormalizer;

/// Anything that maps observations to actions.
pub trait Policy {
    fn label(&self) -> &str;

    /// Whether `act` depends on previous calls.
    fn stateful(&self) -> bool {
        false
    }

    /// Clears per-episode state.
    fn reset(&mut self) {}

    /// Returns an action with every component in `[-1, 1]`.
    fn act(&mut self, observation: &[f64], rng: &mut dyn RngCore) -> Action;
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite loss at update {update}: {detail}")]
    NonFiniteLoss { update: usize, detail: String },
    #[error("invalid A2C config: {0}")]
    InvalidConfig(String),
    #[error("unknown agent `{name}`; valid names: {valid}")]
    UnknownAgent { name: String, valid: String },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
