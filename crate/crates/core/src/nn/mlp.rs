use rand::Rng;
use serde::{Deserialize, Serialize};

use super::policy::softmax;
use super::NnError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Softmax,
    Linear,
}

/// Fully connected layer, weights row-major `[out][in]`.
#[derive(Clone, Debug, PartialEq)]
struct Dense {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn xavier<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let mut d = Self::zeros(inputs, outputs);
        for w in &mut d.weights {
            *w = rng.gen_range(-limit..=limit);
        }
        d
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.biases
                .iter()
                .zip(self.weights.chunks_exact(self.inputs))
                .map(|(b, row)| b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()),
        );
    }
}

/// Multilayer perceptron: tanh hidden layers, softmax or linear output.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
    head: Head,
}

/// Activations recorded by [`Mlp::forward`]; required by backward.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// `acts[0]` is the input, `acts[i + 1]` the output of layer `i` (tanh for
    /// hidden layers, raw pre-head values for the last).
    acts: Vec<Vec<f64>>,
    /// Head outputs: probabilities or the linear values.
    pub output: Vec<f64>,
}

impl ForwardCache {
    pub fn logits(&self) -> &[f64] {
        self.acts
            .last()
            .expect("cache has at least input and output")
    }
}

/// Parameter-shaped gradient accumulator.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zero(&mut self) {
        for g in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            g.fill(0.0);
        }
    }

    pub fn scale(&mut self, k: f64) {
        for g in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            g.iter_mut().for_each(|x| *x *= k);
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self
            .weights
            .iter_mut()
            .zip(&other.weights)
            .chain(self.biases.iter_mut().zip(&other.biases))
        {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .flatten()
            .chain(self.biases.iter().flatten())
            .copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub epoch: u64,
    pub seed: u64,
    pub config_hash: String,
}

/// On-disk form of one network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    pub head: Head,
    pub meta: CheckpointMeta,
}

impl Mlp {
    /// Xavier-uniform weights and zero biases everywhere. With
    /// `zero_output_layer` the last layer starts at zero.
    pub fn new<R: Rng + ?Sized>(
        layer_dims: &[usize],
        head: Head,
        zero_output_layer: bool,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        check_dims(layer_dims)?;
        let n = layer_dims.len() - 1;
        let layers = layer_dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                if zero_output_layer && i == n - 1 {
                    Dense::zeros(w[0], w[1])
                } else {
                    Dense::xavier(w[0], w[1], rng)
                }
            })
            .collect();
        Ok(Self { layers, head })
    }

    pub fn zeros(layer_dims: &[usize], head: Head) -> Result<Self, NnError> {
        check_dims(layer_dims)?;
        let layers = layer_dims
            .windows(2)
            .map(|w| Dense::zeros(w[0], w[1]))
            .collect();
        Ok(Self { layers, head })
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Parameters in the same order as [`Gradients::iter`].
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter())
            .chain(self.layers.iter().flat_map(|l| l.biases.iter()))
            .copied()
    }

    /// Mutable access to parameter `i` in [`Mlp::params`] order.
    pub fn param_mut(&mut self, mut i: usize) -> &mut f64 {
        let n_weights: usize = self.layers.iter().map(|l| l.weights.len()).sum();
        let in_weights = i < n_weights;
        if !in_weights {
            i -= n_weights;
        }
        for l in &mut self.layers {
            let slot = if in_weights {
                &mut l.weights
            } else {
                &mut l.biases
            };
            if i < slot.len() {
                return &mut slot[i];
            }
            i -= slot.len();
        }
        panic!("parameter index out of range");
    }

    /// Visit (parameter, gradient) pairs layer by layer.
    pub(crate) fn for_each_param_mut(
        &mut self,
        grads: &Gradients,
        mut f: impl FnMut(usize, usize, &mut f64, f64),
    ) {
        for (li, (layer, (gw, gb))) in self
            .layers
            .iter_mut()
            .zip(grads.weights.iter().zip(&grads.biases))
            .enumerate()
        {
            for (j, (p, g)) in layer.weights.iter_mut().zip(gw).enumerate() {
                f(2 * li, j, p, *g);
            }
            for (j, (p, g)) in layer.biases.iter_mut().zip(gb).enumerate() {
                f(2 * li + 1, j, p, *g);
            }
        }
    }

    pub fn zero_grads(&self) -> Gradients {
        Gradients {
            weights: self
                .layers
                .iter()
                .map(|l| vec![0.0; l.weights.len()])
                .collect(),
            biases: self
                .layers
                .iter()
                .map(|l| vec![0.0; l.biases.len()])
                .collect(),
        }
    }

    pub fn check_grads(&self, grads: &Gradients) -> Result<(), NnError> {
        let ok = grads.weights.len() == self.layers.len()
            && grads.biases.len() == self.layers.len()
            && self
                .layers
                .iter()
                .zip(&grads.weights)
                .zip(&grads.biases)
                .all(|((l, w), b)| l.weights.len() == w.len() && l.biases.len() == b.len());
        if ok {
            Ok(())
        } else {
            Err(NnError::GradientShape)
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<ForwardCache, NnError> {
        if input.len() != self.input_dim() {
            return Err(NnError::InputDim {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.forward(&acts[i], &mut out);
            if i < last {
                out.iter_mut().for_each(|z| *z = z.tanh());
            }
            acts.push(out);
        }
        let raw = &acts[acts.len() - 1];
        let output = match self.head {
            Head::Softmax => softmax(raw),
            Head::Linear => raw.clone(),
        };
        Ok(ForwardCache { acts, output })
    }

    /// Head outputs only.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        Ok(self.forward(input)?.output)
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<(), NnError> {
        let ok = cache.acts.len() == self.layers.len() + 1
            && cache
                .acts
                .iter()
                .zip(self.layer_dims())
                .all(|(a, d)| a.len() == d);
        if ok {
            Ok(())
        } else {
            Err(NnError::CacheMismatch)
        }
    }

    /// Accumulate parameter gradients given `dL/d(pre-head values)`.
    pub fn backward_logits(
        &self,
        cache: &ForwardCache,
        grad_logits: &[f64],
        grads: &mut Gradients,
    ) -> Result<(), NnError> {
        self.check_cache(cache)?;
        self.check_grads(grads)?;
        if grad_logits.len() != self.output_dim() {
            return Err(NnError::OutputDim {
                expected: self.output_dim(),
                got: grad_logits.len(),
            });
        }
        let mut delta = grad_logits.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let x = &cache.acts[i];
            let gw = &mut grads.weights[i];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(x).for_each(|(g, xi)| *g += d * xi);
            }
            grads.biases[i]
                .iter_mut()
                .zip(&delta)
                .for_each(|(g, d)| *g += d);
            if i == 0 {
                break;
            }
            // back through W and the tanh of the previous layer
            let mut prev = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
            }
            prev.iter_mut().zip(x).for_each(|(p, a)| *p *= 1.0 - a * a);
            delta = prev;
        }
        Ok(())
    }

    /// Accumulate parameter gradients given `dL/d(head outputs)`. For the
    /// softmax head this applies the softmax Jacobian first.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_output: &[f64],
        grads: &mut Gradients,
    ) -> Result<(), NnError> {
        if grad_output.len() != self.output_dim() {
            return Err(NnError::OutputDim {
                expected: self.output_dim(),
                got: grad_output.len(),
            });
        }
        match self.head {
            Head::Linear => self.backward_logits(cache, grad_output, grads),
            Head::Softmax => {
                let p = &cache.output;
                let dot: f64 = p.iter().zip(grad_output).map(|(pi, gi)| pi * gi).sum();
                let gz: Vec<f64> = p
                    .iter()
                    .zip(grad_output)
                    .map(|(pi, gi)| pi * (gi - dot))
                    .collect();
                self.backward_logits(cache, &gz, grads)
            }
        }
    }

    pub fn to_checkpoint(&self, meta: CheckpointMeta) -> Checkpoint {
        Checkpoint {
            layer_dims: self.layer_dims(),
            weights: self
                .layers
                .iter()
                .map(|l| l.weights.chunks(l.inputs).map(<[f64]>::to_vec).collect())
                .collect(),
            biases: self.layers.iter().map(|l| l.biases.clone()).collect(),
            head: self.head,
            meta,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, NnError> {
        check_dims(&ck.layer_dims)?;
        let n = ck.layer_dims.len() - 1;
        if ck.weights.len() != n || ck.biases.len() != n {
            return Err(NnError::Invalid(format!(
                "expected {n} layers of weights and biases"
            )));
        }
        let mut layers = Vec::with_capacity(n);
        for (i, dims) in ck.layer_dims.windows(2).enumerate() {
            let (inputs, outputs) = (dims[0], dims[1]);
            let rows = &ck.weights[i];
            if rows.len() != outputs || rows.iter().any(|r| r.len() != inputs) {
                return Err(NnError::Invalid(format!(
                    "layer {i}: weight matrix is not {outputs}x{inputs}"
                )));
            }
            if ck.biases[i].len() != outputs {
                return Err(NnError::Invalid(format!(
                    "layer {i}: expected {outputs} biases"
                )));
            }
            let weights: Vec<f64> = rows.iter().flatten().copied().collect();
            if weights.iter().chain(&ck.biases[i]).any(|x| !x.is_finite()) {
                return Err(NnError::Invalid(format!("layer {i}: non-finite parameter")));
            }
            layers.push(Dense {
                inputs,
                outputs,
                weights,
                biases: ck.biases[i].clone(),
            });
        }
        Ok(Self {
            layers,
            head: ck.head,
        })
    }
}

fn check_dims(dims: &[usize]) -> Result<(), NnError> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(NnError::Invalid(format!("bad layer dims {dims:?}")));
    }
    Ok(())
}
