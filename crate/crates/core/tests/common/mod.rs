//! Reference implementations shared by the learning and acceptance tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use sls_core::agents::{AgentVariant, Transition};
use sls_core::env::{ActionId, ActionMask, Observation, ACTION_COUNT};
use sls_core::neural::{Architecture, Batch, Dense, NetShape, Network};

pub mod oracle {
    //! Plain f64 forward pass used as an independent reference.
    use super::*;

    pub struct Pass {
        pub q: Vec<f64>,
        pub value: Option<f64>,
        /// Pre-activation signs of both hidden layers.
        pub pattern: Vec<bool>,
        /// Smallest pre-activation magnitude.
        pub margin: f64,
    }

    fn affine(layer: &Dense, w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
        (0..layer.outputs)
            .map(|o| b[o] + (0..layer.inputs).map(|i| x[i] * w[i * layer.outputs + o]).sum::<f64>())
            .collect()
    }

    pub fn forward(net: &Network, params: &[Vec<f64>], x: &[f64]) -> Pass {
        let layers = net.layers();
        let z1 = affine(&layers[0], &params[0], &params[1], x);
        let h1: Vec<f64> = z1.iter().map(|v| v.max(0.0)).collect();
        let z2 = affine(&layers[1], &params[2], &params[3], &h1);
        let h2: Vec<f64> = z2.iter().map(|v| v.max(0.0)).collect();
        let pattern = z1.iter().chain(&z2).map(|v| *v > 0.0).collect();
        let margin = z1.iter().chain(&z2).map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        match net.architecture() {
            Architecture::Standard => Pass {
                q: affine(&layers[2], &params[4], &params[5], &h2),
                value: None,
                pattern,
                margin,
            },
            Architecture::Dueling => {
                let v = affine(&layers[2], &params[4], &params[5], &h2)[0];
                let a = affine(&layers[3], &params[6], &params[7], &h2);
                let mean = a.iter().sum::<f64>() / a.len() as f64;
                Pass {
                    q: a.iter().map(|ai| v + ai - mean).collect(),
                    value: Some(v),
                    pattern,
                    margin,
                }
            }
        }
    }

    pub fn params(net: &Network) -> Vec<Vec<f64>> {
        net.tensors()
            .map(|t| t.iter().map(|x| f64::from(*x)).collect())
            .collect()
    }

    /// Loss, concatenated activation pattern and smallest pre-activation
    /// magnitude over the batch.
    pub fn loss(net: &Network, params: &[Vec<f64>], batch: &Batch) -> (f64, Vec<bool>, f64) {
        let width = net.shape().input;
        let mut total = 0.0;
        let mut pattern = Vec::new();
        let mut margin = f64::INFINITY;
        for (b, (&a, &y)) in batch.actions.iter().zip(&batch.targets).enumerate() {
            let x: Vec<f64> = batch.inputs[b * width..(b + 1) * width]
                .iter()
                .map(|v| f64::from(*v))
                .collect();
            let pass = forward(net, params, &x);
            total += (pass.q[a] - f64::from(y)).powi(2);
            pattern.extend(pass.pattern);
            margin = margin.min(pass.margin);
        }
        (total / batch.len() as f64, pattern, margin)
    }
}

pub fn random_batch(rng: &mut ChaCha8Rng, width: usize, n: usize) -> Batch {
    Batch {
        inputs: (0..n * width)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    0.0
                } else {
                    rng.gen_range(-2.0..2.0)
                }
            })
            .collect(),
        actions: (0..n).map(|_| rng.gen_range(0..ACTION_COUNT)).collect(),
        targets: (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect(),
    }
}

/// Checks every parameter against central differences; returns the largest
/// relative error and how many parameters sat too close to a ReLU kink.
pub fn gradient_check(net: &Network, batch: &Batch) -> (f64, usize) {
    const H: f64 = 1e-3;
    let (grads, _) = net.backward(batch).unwrap();
    let analytic: Vec<Vec<f32>> = grads.tensors().map(<[f32]>::to_vec).collect();
    let base = oracle::params(net);
    let (_, pattern0, _) = oracle::loss(net, &base, batch);
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    for (ti, tensor) in base.iter().enumerate() {
        for pi in 0..tensor.len() {
            let mut plus = base.clone();
            plus[ti][pi] += H;
            let mut minus = base.clone();
            minus[ti][pi] -= H;
            let (lp, pp, _) = oracle::loss(net, &plus, batch);
            let (lm, pm, _) = oracle::loss(net, &minus, batch);
            if pp != pattern0 || pm != pattern0 {
                skipped += 1;
                continue;
            }
            let fd = (lp - lm) / (2.0 * H);
            let g = f64::from(analytic[ti][pi]);
            // Below 1e-2 the f32 accumulation error of the analytic gradient
            // (about 1e-7 absolute) dominates any relative comparison.
            let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-2);
            worst = worst.max(rel);
        }
    }
    (worst, skipped)
}

pub fn transition(
    obs: Vec<f32>,
    action: usize,
    reward: f64,
    next: Vec<f32>,
    mask: ActionMask,
    done: bool,
) -> Transition {
    Transition {
        obs: Observation::from_vec(obs),
        action: ActionId::new(action).unwrap(),
        reward,
        next_obs: Observation::from_vec(next),
        next_mask: mask,
        done,
    }
}

/// Network whose Q-values on the one-hot input `e_s` are exactly `table[s]`.
pub fn table_network(table: &[[f32; ACTION_COUNT]]) -> Network {
    let n = table.len();
    let shape = NetShape {
        input: n,
        hidden: n,
        actions: ACTION_COUNT,
    };
    let mut net = Network::zeros(Architecture::Standard, shape);
    let layers = net.layers_mut();
    for (i, row) in table.iter().enumerate() {
        layers[0].weights[i * n + i] = 1.0;
        layers[1].weights[i * n + i] = 1.0;
        layers[2].weights[i * ACTION_COUNT..(i + 1) * ACTION_COUNT].copy_from_slice(row);
    }
    net
}

pub fn one_hot(n: usize, i: usize) -> Vec<f32> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Brute-force reference: enumerate the masked actions directly.
#[allow(clippy::too_many_arguments)]
pub fn brute_force(
    variant: AgentVariant,
    online: &[[f32; ACTION_COUNT]],
    target: &[[f32; ACTION_COUNT]],
    next_state: usize,
    mask: &ActionMask,
    reward: f64,
    done: bool,
    gamma: f32,
) -> f32 {
    if done {
        return reward as f32;
    }
    let allowed: Vec<usize> = (0..ACTION_COUNT).filter(|a| mask.0[*a]).collect();
    let bootstrap = match variant {
        AgentVariant::Ddqn => {
            let mut best = allowed[0];
            for &a in &allowed {
                if online[next_state][a] > online[next_state][best] {
                    best = a;
                }
            }
            target[next_state][best]
        }
        _ => allowed
            .iter()
            .map(|a| target[next_state][*a])
            .fold(f32::NEG_INFINITY, f32::max),
    };
    reward as f32 + gamma * bootstrap
}
