//! Small dense Q-network with hand-written backpropagation and Adam.
//!
//! Two architectures share a ReLU trunk `in -> H -> H`:
//!
//! * `Standard`: linear head `H -> A`.
//! * `Dueling`: value head `H -> 1` and advantage head `H -> A`, combined as
//!   `Q(s,a) = V(s) + A(s,a) - mean_a A(s,a)`.
//!
//! Weights are stored row-major by input (`weights[i * outputs + j]` connects
//! input `i` to output `j`). Inputs to the first layer are mostly zeros, so the
//! first affine map skips zero entries.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SeededRng;

pub const DEFAULT_HIDDEN: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NeuralError {
    #[error("input holds {found} values, expected {expected}")]
    InputShape { expected: usize, found: usize },
    #[error("batch has {inputs} rows but {actions} actions and {targets} targets")]
    BatchShape {
        inputs: usize,
        actions: usize,
        targets: usize,
    },
    #[error("action index {0} out of range")]
    Action(usize),
    #[error("gradient shapes do not match the network")]
    GradientShape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Standard,
    Dueling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NetShape {
    pub input: usize,
    pub hidden: usize,
    pub actions: usize,
}

impl NetShape {
    pub fn new(input: usize) -> Self {
        Self {
            input,
            hidden: DEFAULT_HIDDEN,
            actions: crate::env::ACTION_COUNT,
        }
    }

    /// (inputs, outputs) of every layer, in storage order.
    pub fn layer_dims(&self, arch: Architecture) -> Vec<(usize, usize)> {
        let mut dims = vec![(self.input, self.hidden), (self.hidden, self.hidden)];
        match arch {
            Architecture::Standard => dims.push((self.hidden, self.actions)),
            Architecture::Dueling => {
                dims.push((self.hidden, 1));
                dims.push((self.hidden, self.actions));
            }
        }
        dims
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn uniform(inputs: usize, outputs: usize, rng: &mut SeededRng) -> Self {
        let bound = (6.0 / (inputs + outputs) as f64).sqrt() as f32;
        let weights = (0..inputs * outputs).map(|_| rng.gen_range(-bound..=bound)).collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    /// `out[b] = bias + x[b] · W`, skipping zero inputs.
    fn forward(&self, x: &[f32], batch: usize, out: &mut [f32]) {
        for b in 0..batch {
            let row = &mut out[b * self.outputs..(b + 1) * self.outputs];
            row.copy_from_slice(&self.bias);
            for (i, &xi) in x[b * self.inputs..(b + 1) * self.inputs].iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let w = &self.weights[i * self.outputs..(i + 1) * self.outputs];
                for (o, wij) in row.iter_mut().zip(w) {
                    *o += xi * wij;
                }
            }
        }
    }

    /// Accumulates weight/bias gradients for upstream gradient `dz` and, when
    /// asked, writes the gradient with respect to the layer input into `dx`.
    fn backward(&self, x: &[f32], dz: &[f32], batch: usize, grad: &mut Dense, dx: Option<&mut [f32]>) {
        for b in 0..batch {
            let dzb = &dz[b * self.outputs..(b + 1) * self.outputs];
            for (gb, d) in grad.bias.iter_mut().zip(dzb) {
                *gb += d;
            }
            for (i, &xi) in x[b * self.inputs..(b + 1) * self.inputs].iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let g = &mut grad.weights[i * self.outputs..(i + 1) * self.outputs];
                for (gij, d) in g.iter_mut().zip(dzb) {
                    *gij += xi * d;
                }
            }
        }
        if let Some(dx) = dx {
            for b in 0..batch {
                let dzb = &dz[b * self.outputs..(b + 1) * self.outputs];
                for (i, dxi) in dx[b * self.inputs..(b + 1) * self.inputs].iter_mut().enumerate() {
                    let w = &self.weights[i * self.outputs..(i + 1) * self.outputs];
                    *dxi += w.iter().zip(dzb).map(|(a, b)| a * b).sum::<f32>();
                }
            }
        }
    }
}

/// Network parameters. Also used as the container for gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    arch: Architecture,
    shape: NetShape,
    layers: Vec<Dense>,
}

pub type Gradients = Network;

/// Supervised minibatch: inputs, the action taken per row, and its target.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub inputs: Vec<f32>,
    pub actions: Vec<usize>,
    pub targets: Vec<f32>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

struct Activations {
    h1: Vec<f32>,
    h2: Vec<f32>,
    q: Vec<f32>,
}

impl Network {
    pub fn init(arch: Architecture, obs_size: usize, seed: u64) -> Self {
        Self::with_shape(arch, NetShape::new(obs_size), seed)
    }

    pub fn with_shape(arch: Architecture, shape: NetShape, seed: u64) -> Self {
        assert!(shape.input >= 1 && shape.hidden >= 1 && shape.actions >= 1);
        let mut rng = SeededRng::new(seed);
        let layers = shape
            .layer_dims(arch)
            .into_iter()
            .map(|(i, o)| Dense::uniform(i, o, &mut rng))
            .collect();
        Self { arch, shape, layers }
    }

    pub fn zeros(arch: Architecture, shape: NetShape) -> Self {
        let layers = shape
            .layer_dims(arch)
            .into_iter()
            .map(|(i, o)| Dense::zeros(i, o))
            .collect();
        Self { arch, shape, layers }
    }

    /// Builds a network from explicit layers; `None` if the layer shapes do
    /// not match the architecture.
    pub fn from_layers(arch: Architecture, shape: NetShape, layers: Vec<Dense>) -> Option<Self> {
        let dims = shape.layer_dims(arch);
        let ok = dims.len() == layers.len()
            && dims
                .iter()
                .zip(&layers)
                .all(|(&(i, o), l)| l.inputs == i && l.outputs == o && l.weights.len() == i * o && l.bias.len() == o);
        ok.then_some(Self { arch, shape, layers })
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn shape(&self) -> NetShape {
        self.shape
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    /// Parameter slices in storage order: weights then bias, layer by layer.
    pub fn tensors(&self) -> impl Iterator<Item = &[f32]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Vec<f32>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weights, &mut l.bias])
    }

    pub fn param_count(&self) -> usize {
        self.tensors().map(<[f32]>::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// Overwrites this network with `src` without reallocating.
    pub fn copy_from(&mut self, src: &Network) {
        assert_eq!(self.arch, src.arch);
        assert_eq!(self.shape, src.shape);
        for (dst, s) in self.layers.iter_mut().zip(&src.layers) {
            dst.weights.copy_from_slice(&s.weights);
            dst.bias.copy_from_slice(&s.bias);
        }
    }

    /// Q-values for a batch of observations, `batch × actions` row-major.
    pub fn forward(&self, inputs: &[f32], batch: usize) -> Result<Vec<f32>, NeuralError> {
        self.check_inputs(inputs, batch)?;
        Ok(self.activations(inputs, batch).q)
    }

    pub fn q_values(&self, observation: &[f32]) -> Result<Vec<f32>, NeuralError> {
        self.forward(observation, 1)
    }

    fn check_inputs(&self, inputs: &[f32], batch: usize) -> Result<(), NeuralError> {
        let expected = batch * self.shape.input;
        if inputs.len() != expected {
            return Err(NeuralError::InputShape {
                expected,
                found: inputs.len(),
            });
        }
        Ok(())
    }

    fn activations(&self, x: &[f32], batch: usize) -> Activations {
        let NetShape { hidden, actions, .. } = self.shape;
        let mut h1 = vec![0.0; batch * hidden];
        self.layers[0].forward(x, batch, &mut h1);
        relu(&mut h1);
        let mut h2 = vec![0.0; batch * hidden];
        self.layers[1].forward(&h1, batch, &mut h2);
        relu(&mut h2);
        let mut q = vec![0.0; batch * actions];
        match self.arch {
            Architecture::Standard => self.layers[2].forward(&h2, batch, &mut q),
            Architecture::Dueling => {
                let mut value = vec![0.0; batch];
                self.layers[2].forward(&h2, batch, &mut value);
                self.layers[3].forward(&h2, batch, &mut q);
                for (row, v) in q.chunks_mut(actions).zip(&value) {
                    let mean = row.iter().sum::<f32>() / actions as f32;
                    for a in row.iter_mut() {
                        *a += v - mean;
                    }
                }
            }
        }
        Activations { h1, h2, q }
    }

    /// Mean squared error over the taken actions, `(1/B) Σ (Q(s_i,a_i) - y_i)²`.
    pub fn loss(&self, batch: &Batch) -> Result<f32, NeuralError> {
        self.check_batch(batch)?;
        let q = self.activations(&batch.inputs, batch.len()).q;
        Ok(mse(&q, batch, self.shape.actions))
    }

    fn check_batch(&self, batch: &Batch) -> Result<(), NeuralError> {
        let n = batch.actions.len();
        if batch.targets.len() != n || batch.inputs.len() != n * self.shape.input {
            return Err(NeuralError::BatchShape {
                inputs: batch.inputs.len() / self.shape.input.max(1),
                actions: n,
                targets: batch.targets.len(),
            });
        }
        if let Some(a) = batch.actions.iter().find(|a| **a >= self.shape.actions) {
            return Err(NeuralError::Action(*a));
        }
        Ok(())
    }

    /// Exact gradients of the minibatch loss, together with the loss itself.
    pub fn backward(&self, batch: &Batch) -> Result<(Gradients, f32), NeuralError> {
        self.check_batch(batch)?;
        let n = batch.len();
        let NetShape { hidden, actions, .. } = self.shape;
        let acts = self.activations(&batch.inputs, n);
        let loss = mse(&acts.q, batch, actions);

        let mut dq = vec![0.0f32; n * actions];
        for (b, (&a, &y)) in batch.actions.iter().zip(&batch.targets).enumerate() {
            dq[b * actions + a] = 2.0 * (acts.q[b * actions + a] - y) / n as f32;
        }

        let mut grads = Network::zeros(self.arch, self.shape);
        let mut dh2 = vec![0.0f32; n * hidden];
        match self.arch {
            Architecture::Standard => {
                self.layers[2].backward(&acts.h2, &dq, n, &mut grads.layers[2], Some(&mut dh2));
            }
            Architecture::Dueling => {
                let mut dv = vec![0.0f32; n];
                let mut dadv = dq.clone();
                for b in 0..n {
                    let row = &mut dadv[b * actions..(b + 1) * actions];
                    let total: f32 = row.iter().sum();
                    dv[b] = total;
                    let shift = total / actions as f32;
                    for g in row.iter_mut() {
                        *g -= shift;
                    }
                }
                self.layers[2].backward(&acts.h2, &dv, n, &mut grads.layers[2], Some(&mut dh2));
                self.layers[3].backward(&acts.h2, &dadv, n, &mut grads.layers[3], Some(&mut dh2));
            }
        }
        relu_grad(&mut dh2, &acts.h2);
        let mut dh1 = vec![0.0f32; n * hidden];
        self.layers[1].backward(&acts.h1, &dh2, n, &mut grads.layers[1], Some(&mut dh1));
        relu_grad(&mut dh1, &acts.h1);
        self.layers[0].backward(&batch.inputs, &dh1, n, &mut grads.layers[0], None);
        Ok((grads, loss))
    }
}

fn relu(v: &mut [f32]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

fn relu_grad(grad: &mut [f32], activated: &[f32]) {
    for (g, h) in grad.iter_mut().zip(activated) {
        if *h <= 0.0 {
            *g = 0.0;
        }
    }
}

fn mse(q: &[f32], batch: &Batch, actions: usize) -> f32 {
    let n = batch.len();
    let total: f32 = batch
        .actions
        .iter()
        .zip(&batch.targets)
        .enumerate()
        .map(|(b, (&a, &y))| (q[b * actions + a] - y).powi(2))
        .sum();
    total / n.max(1) as f32
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments shaped like a network's tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Vec<f32>>,
    pub v: Vec<Vec<f32>>,
}

impl Adam {
    pub fn new(net: &Network, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<f32>> = net.tensors().map(|t| vec![0.0; t.len()]).collect();
        Self {
            config,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn matches(&self, net: &Network) -> bool {
        let lens: Vec<usize> = net.tensors().map(<[f32]>::len).collect();
        self.m.iter().map(Vec::len).eq(lens.iter().copied()) && self.v.iter().map(Vec::len).eq(lens.iter().copied())
    }

    pub fn update(&mut self, net: &mut Network, grads: &Gradients) -> Result<(), NeuralError> {
        if grads.arch != net.arch || grads.shape != net.shape || !self.matches(net) {
            return Err(NeuralError::GradientShape);
        }
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - f64::from(beta1).powi(t);
        let c2 = 1.0 - f64::from(beta2).powi(t);
        let c1 = c1 as f32;
        let c2 = c2 as f32;
        for (((param, grad), m), v) in net.tensors_mut().zip(grads.tensors()).zip(&mut self.m).zip(&mut self.v) {
            for (((p, &g), mi), vi) in param.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = beta1 * *mi + (1.0 - beta1) * g;
                *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
