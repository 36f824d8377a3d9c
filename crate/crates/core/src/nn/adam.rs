use super::{Gradients, Mlp, NnError};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Adam moments for one network, laid out like [`Gradients`].
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl Adam {
    pub fn new(net: &Mlp) -> Self {
        let g = net.zero_grads();
        let slots: Vec<Vec<f64>> = g
            .weights
            .into_iter()
            .zip(g.biases)
            .flat_map(|(w, b)| [w, b])
            .collect();
        Self {
            m: slots.clone(),
            v: slots,
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update. Non-finite gradients leave the
    /// network and moments untouched.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients, lr: f64) -> Result<(), NnError> {
        net.check_grads(grads)?;
        for (i, (w, b)) in grads.weights.iter().zip(&grads.biases).enumerate() {
            if w.iter().chain(b).any(|g| !g.is_finite()) {
                return Err(NnError::NonFiniteGradient { layer: i });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - ADAM_BETA1.powi(t);
        let c2 = 1.0 - ADAM_BETA2.powi(t);
        let (m, v) = (&mut self.m, &mut self.v);
        net.for_each_param_mut(grads, |slot, j, p, g| {
            let mj = &mut m[slot][j];
            let vj = &mut v[slot][j];
            *mj = ADAM_BETA1 * *mj + (1.0 - ADAM_BETA1) * g;
            *vj = ADAM_BETA2 * *vj + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *mj / c1;
            let v_hat = *vj / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Head;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_net(w: f64) -> Mlp {
        let mut net = Mlp::zeros(&[1, 1], Head::Linear).unwrap();
        *net.param_mut(0) = w;
        net
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut net = scalar_net(0.0);
        let mut opt = Adam::new(&net);
        let mut g = net.zero_grads();
        g.weights[0][0] = 1.0;
        opt.step(&mut net, &g, 0.1).unwrap();
        let w = net.params().next().unwrap();
        // m_hat = 1, v_hat = 1 so the step is lr / (1 + eps)
        assert!((w + 0.1 / (1.0 + ADAM_EPS)).abs() < 1e-15, "{w}");
        assert_eq!(opt.step_count(), 1);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut net = Mlp::new(
            &[3, 4, 2],
            Head::Softmax,
            false,
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        let before = net.clone();
        let mut opt = Adam::new(&net);
        let g = net.zero_grads();
        opt.step(&mut net, &g, 0.01).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn identical_inputs_identical_updates() {
        let base = Mlp::new(
            &[3, 4, 2],
            Head::Softmax,
            false,
            &mut ChaCha8Rng::seed_from_u64(2),
        )
        .unwrap();
        let (mut a, mut b) = (base.clone(), base);
        let (mut oa, mut ob) = (Adam::new(&a), Adam::new(&b));
        let mut g = a.zero_grads();
        for (i, w) in g.weights.iter_mut().flatten().enumerate() {
            *w = (i as f64 * 0.37).sin();
        }
        for _ in 0..3 {
            oa.step(&mut a, &g, 1e-3).unwrap();
            ob.step(&mut b, &g, 1e-3).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_non_finite() {
        let mut net = scalar_net(1.0);
        let mut opt = Adam::new(&net);
        let mut g = net.zero_grads();
        g.weights[0][0] = f64::NAN;
        assert_eq!(
            opt.step(&mut net, &g, 0.1).unwrap_err(),
            NnError::NonFiniteGradient { layer: 0 }
        );
        assert_eq!(net.params().next().unwrap(), 1.0);
        assert_eq!(opt.step_count(), 0);
    }
}
