//! On-policy training: PPO with a clipped surrogate and a synchronous A3C
//! baseline, sharing rollout collection and return computation.

mod config;
pub mod loss;
mod rollout;
mod train;
mod update;

pub use config::{A3cConfig, Algorithm, PpoConfig};
pub use loss::{
    actor_loss, clipped_objective, clipped_objective_dratio, critic_loss, entropy_schedule,
    kl_estimate, ActorLoss, ActorObjective,
};
pub use rollout::{
    collect_rollouts, compute_returns_advantages, sample_categorical, standardize_advantages,
    EpisodeEnd, EpisodeSpan, RolloutBatch, Transition, ADV_STD_FLOOR,
};
pub use train::{curve_csv, train, train_with, TrainOutcome, TrainSetup, TrainStats, CURVE_HEADER};
pub use update::{a3c_update, ppo_update, UpdateStats};

use thiserror::Error;

use crate::env::EnvError;
use crate::nn::NnError;
use crate::qoe::QoeError;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Qoe(#[from] QoeError),
    #[error("training diverged at update {update}: {source}")]
    Diverged {
        update: usize,
        source: Box<RlError>,
        /// State before the failing update.
        last_good: Box<TrainOutcome>,
    },
}
