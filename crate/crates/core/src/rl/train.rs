//! Training loop shared by PPO and A3C.

use std::collections::VecDeque;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::entropy_schedule;
use super::rollout::{collect_rollouts, compute_returns_advantages};
use super::update::{a3c_update, ppo_update};
use super::{Algorithm, PpoConfig, RlError};
use crate::env::{feature_dim, LinkConfig, PlayerConfig, StartOffset, StreamingEnv};
use crate::nn::PolicyValueNet;
use crate::qoe::QoeVariant;
use crate::traces::ThroughputTrace;
use crate::video::VideoManifest;

/// Header of the learning-curve CSV.
pub const CURVE_HEADER: &str =
    "update,mean_qoe,policy_loss,value_loss,entropy,kl,entropy_weight,seconds";

/// One row of the learning curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub update: usize,
    /// Mean episode QoE of the rollouts collected for this update.
    pub mean_qoe: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub kl: f64,
    pub entropy_weight: f64,
    /// Wall-clock seconds since training started.
    pub seconds: f64,
    pub sync_gap: Option<f64>,
    pub kl_exceeded: bool,
}

impl TrainStats {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3}",
            self.update,
            self.mean_qoe,
            self.policy_loss,
            self.value_loss,
            self.entropy,
            self.kl,
            self.entropy_weight,
            self.seconds
        )
    }
}

pub fn curve_csv(curve: &[TrainStats]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for s in curve {
        out.push_str(&s.csv_row());
        out.push('\n');
    }
    out
}

/// Everything the environment side of training needs.
#[derive(Clone, Debug)]
pub struct TrainSetup {
    pub traces: Vec<Arc<ThroughputTrace>>,
    pub video: Arc<VideoManifest>,
    pub link: LinkConfig,
    pub player: PlayerConfig,
    pub qoe: QoeVariant,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub algo: Algorithm,
    /// Network at the update with the best rolling mean QoE.
    pub best: PolicyValueNet,
    pub best_update: usize,
    pub best_rolling_qoe: f64,
    pub last: PolicyValueNet,
    pub curve: Vec<TrainStats>,
    pub kl_violations: usize,
}

pub fn train(
    algo: Algorithm,
    config: &PpoConfig,
    setup: &TrainSetup,
) -> Result<TrainOutcome, RlError> {
    train_with(algo, config, setup, |_| {})
}

/// Train and call `on_update` after every update. Deterministic in
/// `config.seed`: all randomness is drawn from one seeded stream in a fixed
/// order, and parallel rollouts are merged in actor order.
pub fn train_with(
    algo: Algorithm,
    config: &PpoConfig,
    setup: &TrainSetup,
    mut on_update: impl FnMut(&TrainStats),
) -> Result<TrainOutcome, RlError> {
    config.validate()?;
    if setup.traces.is_empty() {
        return Err(RlError::Config("training needs at least one trace".into()));
    }
    let started = Instant::now();
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let dim = feature_dim(setup.player.history_len, setup.video.level_count());
    let mut net = {
        let mut init_rng = ChaCha8Rng::seed_from_u64(master.gen());
        PolicyValueNet::new(
            dim,
            setup.video.level_count(),
            &config.hidden,
            &mut init_rng,
        )?
    };

    let mut curve = Vec::with_capacity(config.total_epochs);
    let mut window: VecDeque<f64> = VecDeque::with_capacity(config.selection_window);
    let mut window_sum = 0.0;
    let mut best = net.clone();
    let mut best_update = 0;
    let mut best_rolling = f64::NEG_INFINITY;
    let mut kl_violations = 0;

    for update in 0..config.total_epochs {
        let eta = entropy_schedule(
            update,
            config.total_epochs,
            config.entropy_start,
            config.entropy_end,
            config.entropy_decay_frac,
        );
        let mut envs = Vec::with_capacity(config.n_actors);
        let mut seeds = Vec::with_capacity(config.n_actors);
        for _ in 0..config.n_actors {
            let trace = &setup.traces[master.gen_range(0..setup.traces.len())];
            let player = PlayerConfig {
                start_offset: StartOffset::Random { seed: master.gen() },
                ..setup.player
            };
            let (env, _) =
                StreamingEnv::new(trace.clone(), setup.video.clone(), setup.link, player)?;
            envs.push(env);
            seeds.push(master.gen());
        }
        let update_seed: u64 = master.gen();

        let wrap = |e: RlError| -> RlError {
            RlError::Diverged {
                update,
                source: Box::new(e),
                last_good: Box::new(partial(
                    algo,
                    &best,
                    best_update,
                    best_rolling,
                    &net,
                    &curve,
                    kl_violations,
                )),
            }
        };

        // the rollout policy is the current network; parameters are only
        // written after collection finishes
        let mut batch = collect_rollouts(
            &net.actor,
            &net.critic,
            envs,
            &setup.qoe,
            &seeds,
            config.rollout_len,
        )?;
        compute_returns_advantages(&mut batch, config.gamma, &net.critic)?;
        let mean_qoe = batch.mean_episode_qoe();

        let mut candidate = net.clone();
        let stats = match algo {
            Algorithm::Ppo => {
                let mut rng = ChaCha8Rng::seed_from_u64(update_seed);
                ppo_update(&mut candidate, &batch, config, eta, &mut rng)
            }
            Algorithm::A3c => a3c_update(&mut candidate, &batch, config, eta),
        }
        .map_err(wrap)?;
        if !mean_qoe.is_finite() {
            return Err(wrap(RlError::NonFinite(format!("mean QoE = {mean_qoe}"))));
        }
        net = candidate;

        let kl_exceeded = stats.kl > config.kl_limit;
        kl_violations += usize::from(kl_exceeded);
        let record = TrainStats {
            update,
            mean_qoe,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
            kl: stats.kl,
            entropy_weight: eta,
            seconds: started.elapsed().as_secs_f64(),
            sync_gap: stats.sync_gap,
            kl_exceeded,
        };
        on_update(&record);
        curve.push(record);

        if window.len() == config.selection_window {
            window_sum -= window.pop_front().unwrap_or(0.0);
        }
        window.push_back(mean_qoe);
        window_sum += mean_qoe;
        let rolling = window_sum / window.len() as f64;
        if rolling > best_rolling {
            best_rolling = rolling;
            best_update = update;
            best = net.clone();
        }
    }

    Ok(TrainOutcome {
        algo,
        best,
        best_update,
        best_rolling_qoe: best_rolling,
        last: net,
        curve,
        kl_violations,
    })
}

fn partial(
    algo: Algorithm,
    best: &PolicyValueNet,
    best_update: usize,
    best_rolling: f64,
    last: &PolicyValueNet,
    curve: &[TrainStats],
    kl_violations: usize,
) -> TrainOutcome {
    TrainOutcome {
        algo,
        best: best.clone(),
        best_update,
        best_rolling_qoe: best_rolling,
        last: last.clone(),
        curve: curve.to_vec(),
        kl_violations,
    }
}
