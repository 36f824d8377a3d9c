//! Running controllers over traces and summarizing the resulting QoE.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::baselines::{
    argmax_first, AbrController, Bola, BufferBased, MpcParams, RateBased, RobustMpc,
};
use crate::env::{
    encode_observation, EnvError, LinkConfig, PlayerConfig, StreamObservation, StreamingEnv,
};
use crate::nn::{Mlp, NnError};
use crate::qoe::{episode_qoe, QoeBreakdown, QoeError, QoeVariant};
use crate::traces::ThroughputTrace;
use crate::video::VideoManifest;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Qoe(#[from] QoeError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("unknown controller {0:?}")]
    UnknownAlgo(String),
    #[error("policy expects {expected} features and {actions} actions, environment provides {got} and {levels}")]
    Incompatible {
        expected: usize,
        actions: usize,
        got: usize,
        levels: usize,
    },
}

/// Greedy (argmax) policy from a trained actor network.
#[derive(Clone, Debug)]
pub struct PolicyController {
    name: String,
    actor: Mlp,
}

impl PolicyController {
    pub fn new(name: impl Into<String>, actor: Mlp) -> Self {
        Self {
            name: name.into(),
            actor,
        }
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn probabilities(&self, obs: &StreamObservation) -> Result<Vec<f64>, NnError> {
        self.actor.predict(&encode_observation(obs))
    }
}

impl AbrController for PolicyController {
    fn name(&self) -> &str {
        &self.name
    }

    fn reset(&mut self) {}

    fn select_level(&mut self, obs: &StreamObservation, _video: &VideoManifest) -> usize {
        // dimensions are checked in `check_policy_dims` before an episode starts
        let probs = self
            .probabilities(obs)
            .expect("policy input dimension checked before evaluation");
        argmax_first(&probs)
    }
}

pub fn check_policy_dims(
    actor: &Mlp,
    player: &PlayerConfig,
    video: &VideoManifest,
) -> Result<(), EvalError> {
    let got = crate::env::feature_dim(player.history_len, video.level_count());
    if actor.input_dim() != got || actor.output_dim() != video.level_count() {
        return Err(EvalError::Incompatible {
            expected: actor.input_dim(),
            actions: actor.output_dim(),
            got,
            levels: video.level_count(),
        });
    }
    Ok(())
}

/// Build a rule-based controller by name (`bb`, `rb`, `bola`, `mpc`).
pub fn baseline_by_name(
    name: &str,
    qoe: &QoeVariant,
    player: &PlayerConfig,
) -> Result<Box<dyn AbrController>, EvalError> {
    Ok(match name {
        "bb" => Box::new(BufferBased::default()),
        "rb" => Box::new(RateBased::default()),
        "bola" => Box::new(Bola::new(player.buffer_cap_s)),
        "mpc" => Box::new(RobustMpc::new(
            *qoe,
            MpcParams {
                buffer_cap_s: player.buffer_cap_s,
                ..MpcParams::default()
            },
        )),
        other => return Err(EvalError::UnknownAlgo(other.to_string())),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeReport {
    pub trace_id: String,
    pub algo: String,
    pub qoe: QoeBreakdown,
    pub mean_bitrate_kbps: f64,
    pub total_rebuffer_s: f64,
    pub levels: Vec<usize>,
    pub rebuffers_s: Vec<f64>,
}

impl EpisodeReport {
    /// Stall time after the first chunk, i.e. excluding startup.
    pub fn playback_rebuffer_s(&self) -> f64 {
        self.rebuffers_s.iter().skip(1).sum()
    }
}

/// Play one full episode. Evaluation always starts at the beginning of the
/// trace regardless of `player.start_offset`.
pub fn run_episode(
    controller: &mut dyn AbrController,
    trace: Arc<ThroughputTrace>,
    video: Arc<VideoManifest>,
    link: LinkConfig,
    player: PlayerConfig,
    qoe: &QoeVariant,
) -> Result<EpisodeReport, EvalError> {
    let player = PlayerConfig {
        start_offset: crate::env::StartOffset::Zero,
        ..player
    };
    let trace_id = trace.id().to_string();
    let (mut env, mut obs) = StreamingEnv::new(trace, video.clone(), link, player)?;
    controller.reset();
    let mut levels = Vec::with_capacity(video.chunk_count());
    let mut rebuffers = Vec::with_capacity(video.chunk_count());
    while !env.is_done() {
        let level = controller.select_level(&obs, &video);
        let (next, outcome) = env.step(level)?;
        levels.push(level);
        rebuffers.push(outcome.rebuffer_s);
        obs = next;
    }
    let bitrates: Vec<f64> = levels.iter().map(|&l| video.bitrate_kbps(l)).collect();
    let breakdown = episode_qoe(qoe, &bitrates, &rebuffers)?;
    Ok(EpisodeReport {
        trace_id,
        algo: controller.name().to_string(),
        qoe: breakdown,
        mean_bitrate_kbps: bitrates.iter().sum::<f64>() / bitrates.len() as f64,
        total_rebuffer_s: rebuffers.iter().sum(),
        levels,
        rebuffers_s: rebuffers,
    })
}

/// Evaluate a controller over many traces in parallel. `make` builds a fresh
/// controller per trace; reports come back in trace order.
pub fn evaluate_traces<F>(
    make: F,
    traces: &[Arc<ThroughputTrace>],
    video: &Arc<VideoManifest>,
    link: LinkConfig,
    player: PlayerConfig,
    qoe: &QoeVariant,
) -> Result<Vec<EpisodeReport>, EvalError>
where
    F: Fn() -> Result<Box<dyn AbrController>, EvalError> + Sync,
{
    traces
        .par_iter()
        .map(|t| {
            let mut c = make()?;
            run_episode(c.as_mut(), t.clone(), video.clone(), link, player, qoe)
        })
        .collect()
}

/// Column-wise mean of a set of reports.
pub fn mean_report(reports: &[EpisodeReport]) -> (QoeBreakdown, f64, f64) {
    let n = reports.len().max(1) as f64;
    let mut q = QoeBreakdown::default();
    let mut bitrate = 0.0;
    let mut rebuf = 0.0;
    for r in reports {
        q.total += r.qoe.total / n;
        q.bitrate_sum += r.qoe.bitrate_sum / n;
        q.rebuf_penalty += r.qoe.rebuf_penalty / n;
        q.smooth_penalty += r.qoe.smooth_penalty / n;
        bitrate += r.mean_bitrate_kbps / n;
        rebuf += r.total_rebuffer_s / n;
    }
    (q, bitrate, rebuf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Head;
    use crate::traces::{synth_trace, TraceKind};
    use crate::video::default_manifest;

    fn constant(mbps: f64) -> Arc<ThroughputTrace> {
        Arc::new(
            synth_trace(
                format!("c{mbps}"),
                &TraceKind::Constant { level_mbps: mbps },
                400.0,
                1.0,
                0,
            )
            .unwrap(),
        )
    }

    #[test]
    fn mpc_on_fast_link_reaches_top_after_startup() {
        let video = Arc::new(default_manifest());
        let qoe = QoeVariant::lin();
        let player = PlayerConfig::default();
        let mut mpc = baseline_by_name("mpc", &qoe, &player).unwrap();
        let r = run_episode(
            mpc.as_mut(),
            constant(10.0),
            video,
            LinkConfig::default(),
            player,
            &qoe,
        )
        .unwrap();
        assert!(r.levels[1..].iter().all(|&l| l == 5), "{:?}", r.levels);
        assert_eq!(r.playback_rebuffer_s(), 0.0);
        let q = r.qoe;
        assert!((q.total - (q.bitrate_sum - q.rebuf_penalty - q.smooth_penalty)).abs() < 1e-9);
    }

    #[test]
    fn every_baseline_runs() {
        let video = Arc::new(default_manifest());
        let qoe = QoeVariant::lin();
        let player = PlayerConfig::default();
        let traces = vec![constant(1.0), constant(3.0)];
        for name in ["bb", "rb", "bola", "mpc"] {
            let reports = evaluate_traces(
                || baseline_by_name(name, &qoe, &player),
                &traces,
                &video,
                LinkConfig::default(),
                player,
                &qoe,
            )
            .unwrap();
            assert_eq!(reports.len(), 2);
            assert_eq!(reports[0].trace_id, "c1");
            assert!(reports
                .iter()
                .all(|r| r.levels.len() == 48 && r.algo == name));
        }
        assert!(baseline_by_name("nope", &qoe, &player).is_err());
    }

    #[test]
    fn policy_dims_checked() {
        let video = default_manifest();
        let player = PlayerConfig::default();
        let ok = Mlp::zeros(&[crate::env::feature_dim(8, 6), 6], Head::Softmax).unwrap();
        check_policy_dims(&ok, &player, &video).unwrap();
        let bad = Mlp::zeros(&[10, 6], Head::Softmax).unwrap();
        assert!(matches!(
            check_policy_dims(&bad, &player, &video),
            Err(EvalError::Incompatible { .. })
        ));
    }

    #[test]
    fn uniform_policy_picks_lowest_level() {
        let video = Arc::new(default_manifest());
        let actor = Mlp::zeros(&[crate::env::feature_dim(8, 6), 6], Head::Softmax).unwrap();
        let mut c = PolicyController::new("ppo", actor);
        let qoe = QoeVariant::lin();
        let r = run_episode(
            &mut c,
            constant(3.0),
            video,
            LinkConfig::default(),
            PlayerConfig::default(),
            &qoe,
        )
        .unwrap();
        assert!(r.levels.iter().all(|&l| l == 0));
        assert!((r.mean_bitrate_kbps - 300.0).abs() < 1e-9);
    }
}
