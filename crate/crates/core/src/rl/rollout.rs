//! On-policy experience collection and return/advantage computation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::RlError;
use crate::env::{encode_observation, StreamingEnv};
use crate::nn::{log_softmax, Mlp};
use crate::qoe::{chunk_reward, QoeVariant};

/// Floor applied to the advantage standard deviation.
pub const ADV_STD_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub features: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub done: bool,
    /// `log π(a|s)` under the collecting policy.
    pub old_logprob: f64,
    /// Full action distribution of the collecting policy, for KL diagnostics.
    pub old_probs: Vec<f64>,
    pub value_est: f64,
    pub ret: f64,
    /// `ret − value_est` before standardization.
    pub raw_advantage: f64,
    pub advantage: f64,
}

impl Transition {
    pub fn new(
        features: Vec<f64>,
        action: usize,
        reward: f64,
        done: bool,
        old_probs: Vec<f64>,
        value_est: f64,
    ) -> Self {
        let old_logprob = old_probs[action].ln();
        Self {
            features,
            action,
            reward,
            done,
            old_logprob,
            old_probs,
            value_est,
            ret: 0.0,
            raw_advantage: 0.0,
            advantage: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EpisodeEnd {
    Terminal,
    /// Cut short; the critic's value of these features seeds the return.
    Truncated {
        features: Vec<f64>,
    },
}

/// Contiguous run of transitions from one actor.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeSpan {
    pub actor: usize,
    pub trace_id: String,
    pub start: usize,
    pub len: usize,
    pub end: EpisodeEnd,
    /// Sum of the episode's chunk rewards.
    pub qoe: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RolloutBatch {
    pub transitions: Vec<Transition>,
    pub episodes: Vec<EpisodeSpan>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn mean_episode_qoe(&self) -> f64 {
        if self.episodes.is_empty() {
            return 0.0;
        }
        self.episodes.iter().map(|e| e.qoe).sum::<f64>() / self.episodes.len() as f64
    }

    /// Append a single episode; used to assemble batches by hand.
    pub fn push_episode(&mut self, actor: usize, transitions: Vec<Transition>, end: EpisodeEnd) {
        let qoe = transitions.iter().map(|t| t.reward).sum();
        self.episodes.push(EpisodeSpan {
            actor,
            trace_id: String::new(),
            start: self.transitions.len(),
            len: transitions.len(),
            end,
            qoe,
        });
        self.transitions.extend(transitions);
    }
}

/// Draw from a categorical distribution with one uniform variate.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

struct ActorRun {
    transitions: Vec<Transition>,
    span: EpisodeSpan,
}

fn run_actor(
    actor_idx: usize,
    policy: &Mlp,
    critic: &Mlp,
    mut env: StreamingEnv,
    qoe: &QoeVariant,
    seed: u64,
    max_steps: Option<usize>,
) -> Result<ActorRun, RlError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obs = env.observation();
    let mut prev_bitrate: Option<f64> = None;
    let mut transitions = Vec::new();
    let mut qoe_sum = 0.0;
    let limit = max_steps.unwrap_or(usize::MAX);
    while !env.is_done() && transitions.len() < limit {
        let features = encode_observation(&obs);
        let logits = policy.forward(&features)?;
        // log-softmax of the same logits keeps old_logprob consistent with the update path
        let logp = log_softmax(logits.logits());
        let probs: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
        let value = critic.predict(&features)?[0];
        let action = sample_categorical(&probs, &mut rng);
        let (next_obs, outcome) = env.step(action)?;
        let bitrate = env.video().bitrate_kbps(action);
        let reward = chunk_reward(
            qoe,
            bitrate,
            prev_bitrate.unwrap_or(bitrate),
            outcome.rebuffer_s,
        )?;
        prev_bitrate = Some(bitrate);
        qoe_sum += reward;
        let mut t = Transition::new(features, action, reward, outcome.done, probs, value);
        t.old_logprob = logp[action];
        transitions.push(t);
        obs = next_obs;
    }
    let end = if env.is_done() {
        EpisodeEnd::Terminal
    } else {
        EpisodeEnd::Truncated {
            features: encode_observation(&obs),
        }
    };
    let span = EpisodeSpan {
        actor: actor_idx,
        trace_id: env.trace().id().to_string(),
        start: 0,
        len: transitions.len(),
        end,
        qoe: qoe_sum,
    };
    Ok(ActorRun { transitions, span })
}

/// Run one episode (or `max_steps` steps) per environment with actions
/// sampled from `policy`. Actors run in parallel; results are merged in actor
/// order, so the batch depends only on the inputs.
pub fn collect_rollouts(
    policy: &Mlp,
    critic: &Mlp,
    envs: Vec<StreamingEnv>,
    qoe: &QoeVariant,
    seeds: &[u64],
    max_steps: Option<usize>,
) -> Result<RolloutBatch, RlError> {
    if seeds.len() != envs.len() {
        return Err(RlError::Config(format!(
            "{} environments but {} seeds",
            envs.len(),
            seeds.len()
        )));
    }
    let runs: Vec<ActorRun> = envs
        .into_par_iter()
        .zip(seeds.par_iter())
        .enumerate()
        .map(|(i, (env, &seed))| run_actor(i, policy, critic, env, qoe, seed, max_steps))
        .collect::<Result<_, _>>()?;
    let mut batch = RolloutBatch::default();
    for mut run in runs {
        run.span.start = batch.transitions.len();
        batch.transitions.extend(run.transitions);
        batch.episodes.push(run.span);
    }
    Ok(batch)
}

/// Fill returns and advantages: `R_t = r_t + γ R_{t+1}` seeded with 0 at a
/// terminal state or the critic's value at a truncation point, `A = R − V`,
/// then standardize advantages over the batch.
pub fn compute_returns_advantages(
    batch: &mut RolloutBatch,
    gamma: f64,
    critic: &Mlp,
) -> Result<(), RlError> {
    if batch.is_empty() {
        return Err(RlError::EmptyBatch);
    }
    for ep in &batch.episodes {
        let mut ret = match &ep.end {
            EpisodeEnd::Terminal => 0.0,
            EpisodeEnd::Truncated { features } => critic.predict(features)?[0],
        };
        for t in batch.transitions[ep.start..ep.start + ep.len]
            .iter_mut()
            .rev()
        {
            ret = t.reward + gamma * ret;
            t.ret = ret;
            t.raw_advantage = ret - t.value_est;
        }
    }
    standardize_advantages(&mut batch.transitions);
    Ok(())
}

pub fn standardize_advantages(transitions: &mut [Transition]) {
    let n = transitions.len() as f64;
    let mean = transitions.iter().map(|t| t.raw_advantage).sum::<f64>() / n;
    let var = transitions
        .iter()
        .map(|t| (t.raw_advantage - mean).powi(2))
        .sum::<f64>()
        / n;
    let std = var.sqrt().max(ADV_STD_FLOOR);
    for t in transitions {
        t.advantage = (t.raw_advantage - mean) / std;
    }
}
