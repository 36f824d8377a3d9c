use rand::Rng;

use super::{Adam, Head, Mlp, NnError};

/// Softmax with max subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

/// `−Σ p log p`, treating `0 log 0` as 0.
pub fn categorical_entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

/// Separate actor (softmax over levels) and critic (scalar value) networks,
/// each with its own optimizer.
#[derive(Clone, Debug)]
pub struct PolicyValueNet {
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
}

impl PolicyValueNet {
    /// `hidden` lists the hidden layer widths shared by both networks. The
    /// actor's output layer starts at zero, i.e. at the uniform policy.
    pub fn new<R: Rng + ?Sized>(
        feature_dim: usize,
        n_actions: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self, NnError> {
        let dims = |out: usize| {
            std::iter::once(feature_dim)
                .chain(hidden.iter().copied())
                .chain(std::iter::once(out))
                .collect::<Vec<_>>()
        };
        let actor = Mlp::new(&dims(n_actions), Head::Softmax, true, rng)?;
        let critic = Mlp::new(&dims(1), Head::Linear, false, rng)?;
        Self::from_parts(actor, critic)
    }

    pub fn from_parts(actor: Mlp, critic: Mlp) -> Result<Self, NnError> {
        if actor.head() != Head::Softmax
            || critic.head() != Head::Linear
            || critic.output_dim() != 1
        {
            return Err(NnError::Invalid(
                "actor needs a softmax head, critic a scalar linear head".into(),
            ));
        }
        if actor.input_dim() != critic.input_dim() {
            return Err(NnError::Invalid(format!(
                "actor input {} != critic input {}",
                actor.input_dim(),
                critic.input_dim()
            )));
        }
        let actor_opt = Adam::new(&actor);
        let critic_opt = Adam::new(&critic);
        Ok(Self {
            actor,
            critic,
            actor_opt,
            critic_opt,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn n_actions(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn policy(&self, features: &[f64]) -> Result<Vec<f64>, NnError> {
        self.actor.predict(features)
    }

    pub fn value(&self, features: &[f64]) -> Result<f64, NnError> {
        Ok(self.critic.predict(features)?[0])
    }
}
