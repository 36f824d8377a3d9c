//! Parameter updates for PPO (clipped surrogate, several minibatch epochs)
//! and the synchronous A3C baseline (one pass, plain policy gradient).

use rand::seq::SliceRandom;
use rand::Rng;

use super::loss::{actor_loss, critic_loss, kl_estimate, ActorObjective};
use super::{PpoConfig, RlError, RolloutBatch, Transition};
use crate::nn::{log_softmax, PolicyValueNet};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// KL of the updated policy from the collecting policy over the batch.
    pub kl: f64,
    /// `|surrogate − mean(A)|` on the first minibatch, before any step. Only
    /// PPO reports it.
    pub sync_gap: Option<f64>,
    pub minibatches: usize,
}

fn check_finite(what: &str, x: f64) -> Result<(), RlError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(RlError::NonFinite(format!("{what} = {x}")))
    }
}

fn batch_kl(net: &PolicyValueNet, batch: &RolloutBatch) -> Result<f64, RlError> {
    let mut new = Vec::with_capacity(batch.len());
    for t in &batch.transitions {
        let logits = net.actor.forward(&t.features)?;
        new.push(
            log_softmax(logits.logits())
                .iter()
                .map(|l| l.exp())
                .collect(),
        );
    }
    let old: Vec<Vec<f64>> = batch
        .transitions
        .iter()
        .map(|t| t.old_probs.clone())
        .collect();
    kl_estimate(&old, &new)
}

/// One actor step and one critic step on `mb`.
fn step_minibatch(
    net: &mut PolicyValueNet,
    mb: &[&Transition],
    objective: ActorObjective,
    config: &PpoConfig,
    entropy_weight: f64,
) -> Result<(super::loss::ActorLoss, f64), RlError> {
    let mut actor_grads = net.actor.zero_grads();
    let a = actor_loss(
        &net.actor,
        mb,
        objective,
        entropy_weight,
        Some(&mut actor_grads),
    )?;
    check_finite("actor loss", a.loss)?;
    let mut critic_grads = net.critic.zero_grads();
    let v = critic_loss(&net.critic, mb, Some(&mut critic_grads))?;
    check_finite("critic loss", v)?;
    net.actor_opt
        .step(&mut net.actor, &actor_grads, config.lr_actor)?;
    net.critic_opt
        .step(&mut net.critic, &critic_grads, config.lr_critic)?;
    Ok((a, v))
}

/// PPO update: `epochs_per_update` passes over the shuffled batch split into
/// `minibatches_per_epoch` minibatches, one actor and one critic Adam step
/// per minibatch.
pub fn ppo_update<R: Rng + ?Sized>(
    net: &mut PolicyValueNet,
    batch: &RolloutBatch,
    config: &PpoConfig,
    entropy_weight: f64,
    rng: &mut R,
) -> Result<UpdateStats, RlError> {
    if batch.is_empty() {
        return Err(RlError::EmptyBatch);
    }
    let objective = ActorObjective::Clipped {
        eps: config.clip_eps,
    };
    let n_mb = config.minibatches_per_epoch.min(batch.len());
    let mut stats = UpdateStats::default();
    let mut order: Vec<usize> = (0..batch.len()).collect();
    for _ in 0..config.epochs_per_update {
        order.shuffle(rng);
        for k in 0..n_mb {
            let lo = k * order.len() / n_mb;
            let hi = (k + 1) * order.len() / n_mb;
            let mb: Vec<&Transition> = order[lo..hi]
                .iter()
                .map(|&i| &batch.transitions[i])
                .collect();
            let (a, v) = step_minibatch(net, &mb, objective, config, entropy_weight)?;
            if stats.sync_gap.is_none() {
                let mean_adv = mb.iter().map(|t| t.advantage).sum::<f64>() / mb.len() as f64;
                stats.sync_gap = Some((a.surrogate - mean_adv).abs());
            }
            stats.policy_loss += a.loss;
            stats.value_loss += v;
            stats.entropy += a.entropy;
            stats.minibatches += 1;
        }
    }
    let m = stats.minibatches as f64;
    stats.policy_loss /= m;
    stats.value_loss /= m;
    stats.entropy /= m;
    stats.kl = batch_kl(net, batch)?;
    check_finite("kl", stats.kl)?;
    Ok(stats)
}

/// A3C update: a single actor step on `−mean(log π(a|s)·A) − η·mean(H)` and a
/// single critic step, both over the whole batch.
pub fn a3c_update(
    net: &mut PolicyValueNet,
    batch: &RolloutBatch,
    config: &PpoConfig,
    entropy_weight: f64,
) -> Result<UpdateStats, RlError> {
    if batch.is_empty() {
        return Err(RlError::EmptyBatch);
    }
    let all: Vec<&Transition> = batch.transitions.iter().collect();
    let (a, v) = step_minibatch(net, &all, ActorObjective::Vanilla, config, entropy_weight)?;
    let kl = batch_kl(net, batch)?;
    check_finite("kl", kl)?;
    Ok(UpdateStats {
        policy_loss: a.loss,
        value_loss: v,
        entropy: a.entropy,
        kl,
        sync_gap: None,
        minibatches: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Head, Mlp};
    use crate::rl::{compute_returns_advantages, EpisodeEnd};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_batch(net: &PolicyValueNet, n: usize, seed: u64) -> RolloutBatch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trs = (0..n)
            .map(|i| {
                let x: Vec<f64> = (0..net.feature_dim())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                let logp = log_softmax(net.actor.forward(&x).unwrap().logits());
                let probs: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
                let a = i % net.n_actions();
                let v = net.value(&x).unwrap();
                let mut t = Transition::new(x, a, rng.gen_range(-1.0..3.0), i == n - 1, probs, v);
                t.old_logprob = logp[a];
                t
            })
            .collect();
        let mut b = RolloutBatch::default();
        b.push_episode(0, trs, EpisodeEnd::Terminal);
        compute_returns_advantages(&mut b, 0.9, &net.critic).unwrap();
        b
    }

    fn net(seed: u64) -> PolicyValueNet {
        PolicyValueNet::new(4, 3, &[8], &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn ppo_first_minibatch_is_synchronized() {
        let mut n = net(1);
        let b = toy_batch(&n, 32, 2);
        let cfg = PpoConfig::default();
        let stats = ppo_update(&mut n, &b, &cfg, 0.5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(stats.sync_gap.unwrap() <= 1e-9);
        assert_eq!(stats.minibatches, 16);
        assert!(stats.kl >= 0.0 && stats.kl.is_finite());
    }

    #[test]
    fn updates_are_deterministic() {
        let cfg = PpoConfig::default();
        let run = |algo_ppo: bool| {
            let mut n = net(5);
            let b = toy_batch(&n, 20, 6);
            if algo_ppo {
                ppo_update(&mut n, &b, &cfg, 0.1, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
            } else {
                a3c_update(&mut n, &b, &cfg, 0.1).unwrap();
            }
            (n.actor, n.critic)
        };
        assert_eq!(run(true), run(true));
        assert_eq!(run(false), run(false));
    }

    #[test]
    fn kl_is_zero_without_a_step() {
        let n = net(8);
        let b = toy_batch(&n, 10, 9);
        assert_eq!(batch_kl(&n, &b).unwrap(), 0.0);
    }

    #[test]
    fn a3c_symmetric_batch_gives_no_logit_gradient() {
        // uniform two-action policy over a single state, A = ±1 on both actions
        let actor = Mlp::zeros(&[1, 2], Head::Softmax).unwrap();
        let mk = |a: usize, adv: f64| {
            let mut t = Transition::new(vec![1.0], a, 0.0, true, vec![0.5, 0.5], 0.0);
            t.advantage = adv;
            t
        };
        let trs = [mk(0, 1.0), mk(0, -1.0), mk(1, 1.0), mk(1, -1.0)];
        let refs: Vec<&Transition> = trs.iter().collect();
        let mut g = actor.zero_grads();
        actor_loss(&actor, &refs, ActorObjective::Vanilla, 0.0, Some(&mut g)).unwrap();
        assert!(g.max_abs() < 1e-10);
    }

    #[test]
    fn empty_batch_rejected() {
        let mut n = net(1);
        let b = RolloutBatch::default();
        let cfg = PpoConfig::default();
        assert!(matches!(
            ppo_update(&mut n, &b, &cfg, 0.1, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(RlError::EmptyBatch)
        ));
        assert!(matches!(
            a3c_update(&mut n, &b, &cfg, 0.1),
            Err(RlError::EmptyBatch)
        ));
    }

    #[test]
    fn non_finite_loss_aborts() {
        let mut n = net(1);
        let mut b = toy_batch(&n, 8, 2);
        b.transitions[0].ret = f64::NAN;
        let before = n.critic.clone();
        let err = a3c_update(&mut n, &b, &PpoConfig::default(), 0.1).unwrap_err();
        assert!(matches!(err, RlError::NonFinite(_)), "{err}");
        assert_eq!(n.critic, before);
    }
}
