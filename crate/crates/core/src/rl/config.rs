use serde::{Deserialize, Serialize};

use super::RlError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ppo,
    A3c,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ppo => "ppo",
            Algorithm::A3c => "a3c",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = RlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ppo" => Ok(Algorithm::Ppo),
            "a3c" => Ok(Algorithm::A3c),
            other => Err(RlError::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Training hyperparameters shared by PPO and A3C. A3C ignores the clip and
/// reuse-epoch fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub clip_eps: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub entropy_start: f64,
    pub entropy_end: f64,
    /// Fraction of `total_epochs` over which the entropy weight decays.
    pub entropy_decay_frac: f64,
    pub n_actors: usize,
    pub epochs_per_update: usize,
    pub minibatches_per_epoch: usize,
    /// Number of update cycles.
    pub total_epochs: usize,
    pub seed: u64,
    /// KL threshold; exceeding it is counted, never enforced.
    pub kl_limit: f64,
    /// Steps per actor per update; `None` runs whole episodes.
    pub rollout_len: Option<usize>,
    pub hidden: Vec<usize>,
    /// Window of the rolling mean QoE used to pick the best checkpoint.
    pub selection_window: usize,
}

pub type A3cConfig = PpoConfig;

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            clip_eps: 0.2,
            lr_actor: 1e-4,
            lr_critic: 1e-3,
            entropy_start: 6.0,
            entropy_end: 0.01,
            entropy_decay_frac: 0.6,
            n_actors: 16,
            epochs_per_update: 4,
            minibatches_per_epoch: 4,
            total_epochs: 1000,
            seed: 42,
            kl_limit: 0.1,
            rollout_len: None,
            hidden: vec![128, 128],
            selection_window: 100,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |msg: String| Err(RlError::Config(msg));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return bad(format!(
                "clip_eps must lie in (0, 1), got {}",
                self.clip_eps
            ));
        }
        if !(self.lr_actor > 0.0 && self.lr_critic > 0.0) {
            return bad("learning rates must be > 0".into());
        }
        if !(self.entropy_end > 0.0 && self.entropy_start >= self.entropy_end) {
            return bad(format!(
                "need entropy_start >= entropy_end > 0, got {} and {}",
                self.entropy_start, self.entropy_end
            ));
        }
        if !(self.entropy_decay_frac > 0.0 && self.entropy_decay_frac <= 1.0) {
            return bad(format!(
                "entropy_decay_frac must lie in (0, 1], got {}",
                self.entropy_decay_frac
            ));
        }
        if self.n_actors == 0 || self.epochs_per_update == 0 || self.minibatches_per_epoch == 0 {
            return bad(
                "n_actors, epochs_per_update and minibatches_per_epoch must be >= 1".into(),
            );
        }
        if self.rollout_len == Some(0) {
            return bad("rollout_len must be >= 1".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be >= 1".into());
        }
        if self.selection_window == 0 {
            return bad("selection_window must be >= 1".into());
        }
        if !(self.kl_limit > 0.0) {
            return bad("kl_limit must be > 0".into());
        }
        Ok(())
    }
}
