//! Actor and critic losses with their gradients, plus the KL and entropy
//! bookkeeping used during updates.

use super::{RlError, Transition};
use crate::nn::{log_softmax, Gradients, Mlp};

/// `min(r·A, clip(r, 1−ε, 1+ε)·A)`.
pub fn clipped_objective(ratio: f64, advantage: f64, eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    (ratio * advantage).min(clipped * advantage)
}

/// Derivative of [`clipped_objective`] with respect to the ratio: `A` while
/// the unclipped term is the minimum, zero once the clipped term takes over.
pub fn clipped_objective_dratio(ratio: f64, advantage: f64, eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    if ratio * advantage <= clipped * advantage {
        advantage
    } else {
        0.0
    }
}

/// Linear entropy-weight schedule: `start` at epoch 0 down to `end` at
/// `decay_frac · total_epochs`, flat afterwards.
pub fn entropy_schedule(
    epoch: usize,
    total_epochs: usize,
    start: f64,
    end: f64,
    decay_frac: f64,
) -> f64 {
    let horizon = decay_frac * total_epochs as f64;
    if horizon <= 0.0 {
        return end;
    }
    let frac = epoch as f64 / horizon;
    if frac >= 1.0 {
        end
    } else {
        start + (end - start) * frac
    }
}

/// Mean over states of `Σ_a π_new (log π_new − log π_old)`, clamped at 0.
pub fn kl_estimate(old: &[Vec<f64>], new: &[Vec<f64>]) -> Result<f64, RlError> {
    if old.len() != new.len() {
        return Err(RlError::Dimension(format!(
            "{} old distributions vs {} new",
            old.len(),
            new.len()
        )));
    }
    if old.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (p_old, p_new) in old.iter().zip(new) {
        if p_old.len() != p_new.len() {
            return Err(RlError::Dimension(format!(
                "distribution of length {} vs {}",
                p_old.len(),
                p_new.len()
            )));
        }
        total += p_new
            .iter()
            .zip(p_old)
            .filter(|(&pn, _)| pn > 0.0)
            .map(|(&pn, &po)| pn * (pn.ln() - po.ln()))
            .sum::<f64>();
    }
    Ok((total / old.len() as f64).max(0.0))
}

/// Per-minibatch actor statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ActorLoss {
    pub loss: f64,
    /// Mean of the (clipped) surrogate term alone.
    pub surrogate: f64,
    pub entropy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ActorObjective {
    /// Clipped importance-ratio surrogate.
    Clipped { eps: f64 },
    /// Plain `log π(a|s)·A` policy gradient.
    Vanilla,
}

/// Actor loss `−mean(objective) − η·mean(H)` over `batch`. When `grads` is
/// given the parameter gradient is accumulated into it.
pub fn actor_loss(
    actor: &Mlp,
    batch: &[&Transition],
    objective: ActorObjective,
    entropy_weight: f64,
    mut grads: Option<&mut Gradients>,
) -> Result<ActorLoss, RlError> {
    if batch.is_empty() {
        return Err(RlError::EmptyBatch);
    }
    let n = batch.len() as f64;
    let mut out = ActorLoss::default();
    let mut gz = vec![0.0; actor.output_dim()];
    for t in batch {
        let cache = actor.forward(&t.features)?;
        let logp = log_softmax(cache.logits());
        let probs: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
        let entropy = -probs.iter().zip(&logp).map(|(p, l)| p * l).sum::<f64>();
        let a = t.action;

        // d(objective)/d(log π(a|s))
        let (obj, dobj_dlogp) = match objective {
            ActorObjective::Clipped { eps } => {
                let ratio = (logp[a] - t.old_logprob).exp();
                (
                    clipped_objective(ratio, t.advantage, eps),
                    clipped_objective_dratio(ratio, t.advantage, eps) * ratio,
                )
            }
            ActorObjective::Vanilla => (logp[a] * t.advantage, t.advantage),
        };
        out.surrogate += obj / n;
        out.entropy += entropy / n;
        out.loss += (-obj - entropy_weight * entropy) / n;

        if let Some(g) = grads.as_deref_mut() {
            for (j, (p, l)) in probs.iter().zip(&logp).enumerate() {
                let dlogp = if j == a { 1.0 - p } else { -p };
                // dH/dz_j = −p_j (log p_j + H)
                let dh = -p * (l + entropy);
                gz[j] = (-dobj_dlogp * dlogp - entropy_weight * dh) / n;
            }
            actor.backward_logits(&cache, &gz, g)?;
        }
    }
    Ok(out)
}

/// Critic loss `mean((R − V(s))²)`, accumulating gradients when asked.
pub fn critic_loss(
    critic: &Mlp,
    batch: &[&Transition],
    mut grads: Option<&mut Gradients>,
) -> Result<f64, RlError> {
    if batch.is_empty() {
        return Err(RlError::EmptyBatch);
    }
    let n = batch.len() as f64;
    let mut loss = 0.0;
    for t in batch {
        let cache = critic.forward(&t.features)?;
        let err = t.ret - cache.output[0];
        loss += err * err / n;
        if let Some(g) = grads.as_deref_mut() {
            critic.backward(&cache, &[-2.0 * err / n], g)?;
        }
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Head;
    use proptest::prelude::*;

    #[test]
    fn clip_arithmetic() {
        assert!((clipped_objective(2.0, 1.0, 0.2) - 1.2).abs() < 1e-15);
        assert!((clipped_objective(0.5, -1.0, 0.2) + 0.8).abs() < 1e-15);
        assert_eq!(clipped_objective(1.0, 0.7, 0.2), 0.7);
        assert_eq!(clipped_objective_dratio(2.0, 1.0, 0.2), 0.0);
        assert_eq!(clipped_objective_dratio(0.5, -1.0, 0.2), 0.0);
        // the pessimistic branch keeps the gradient when the ratio moves the wrong way
        assert_eq!(clipped_objective_dratio(0.5, 1.0, 0.2), 1.0);
        assert_eq!(clipped_objective_dratio(1.5, -1.0, 0.2), -1.0);
    }

    #[test]
    fn schedule() {
        assert_eq!(entropy_schedule(0, 100, 6.0, 0.01, 0.6), 6.0);
        assert_eq!(entropy_schedule(60, 100, 6.0, 0.01, 0.6), 0.01);
        assert_eq!(entropy_schedule(99, 100, 6.0, 0.01, 0.6), 0.01);
        assert!((entropy_schedule(30, 100, 6.0, 0.01, 0.6) - 3.005).abs() < 1e-12);
    }

    #[test]
    fn kl_examples() {
        let old = vec![vec![0.5, 0.5]];
        assert_eq!(kl_estimate(&old, &old).unwrap(), 0.0);
        let new = vec![vec![0.25, 0.75]];
        let expected = 0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln();
        let kl = kl_estimate(&old, &new).unwrap();
        assert!((kl - expected).abs() < 1e-15);
        assert!((kl - 0.1308).abs() < 1e-4);
        assert!(kl_estimate(&old, &[vec![1.0]]).is_err());
        assert!(kl_estimate(&old, &[]).is_err());
    }

    #[test]
    fn first_minibatch_surrogate_is_mean_advantage() {
        let actor = Mlp::new(&[3, 4, 3], Head::Softmax, false, &mut rand::thread_rng()).unwrap();
        let trs: Vec<Transition> = (0..5)
            .map(|i| {
                let x = vec![i as f64 * 0.1, -0.2, 0.3];
                let logp = log_softmax(actor.forward(&x).unwrap().logits());
                let probs = logp.iter().map(|l| l.exp()).collect();
                let mut t = Transition::new(x, i % 3, 0.0, false, probs, 0.0);
                t.old_logprob = logp[i % 3];
                t.advantage = i as f64 - 2.5;
                t
            })
            .collect();
        let refs: Vec<&Transition> = trs.iter().collect();
        let out = actor_loss(
            &actor,
            &refs,
            ActorObjective::Clipped { eps: 0.2 },
            0.0,
            None,
        )
        .unwrap();
        let mean_a = trs.iter().map(|t| t.advantage).sum::<f64>() / 5.0;
        assert!((out.surrogate - mean_a).abs() <= 1e-12);
    }

    proptest! {
        #[test]
        fn clipped_is_lower_bound(r in 0.0f64..5.0, a in -10.0f64..10.0, eps in 0.01f64..0.99) {
            prop_assert!(clipped_objective(r, a, eps) <= r * a);
        }

        #[test]
        fn kl_nonnegative(p in prop::collection::vec(0.001f64..1.0, 2..6), q in prop::collection::vec(0.001f64..1.0, 6)) {
            let n = p.len();
            let sp: f64 = p.iter().sum();
            let sq: f64 = q[..n].iter().sum();
            let p: Vec<f64> = p.iter().map(|x| x / sp).collect();
            let q: Vec<f64> = q[..n].iter().map(|x| x / sq).collect();
            prop_assert!(kl_estimate(&[p], &[q]).unwrap() >= 0.0);
        }
    }
}
