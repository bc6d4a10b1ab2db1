//! Adam optimizer with bias correction.

use crate::error::{Error, Result};
use crate::network::{Gradients, Network};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators shaped like the network parameters,
/// plus the step counter used for bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    cfg: AdamConfig,
    first: Gradients,
    second: Gradients,
    step: u64,
}

impl AdamState {
    pub fn new(net: &Network, cfg: AdamConfig) -> Self {
        Self {
            cfg,
            first: Gradients::zeros_like(net),
            second: Gradients::zeros_like(net),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamConfig {
        &self.cfg
    }

    /// One update: m ← β₁m + (1-β₁)g, v ← β₂v + (1-β₂)g², then
    /// θ ← θ - lr·m̂/(√v̂ + ε) with m̂, v̂ bias-corrected.
    pub fn step(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        if grads.layers.len() != self.first.layers.len() {
            return Err(Error::ShapeMismatch(format!(
                "adam state tracks {} layers, gradients have {}",
                self.first.layers.len(),
                grads.layers.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.cfg.beta1.powi(t);
        let c2 = 1.0 - self.cfg.beta2.powi(t);
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.cfg;

        for (l, (weights, bias)) in net.params_mut().enumerate() {
            let g = &grads.layers[l];
            if !g.weights.same_shape(weights) || g.bias.len() != bias.len() {
                return Err(Error::ShapeMismatch(format!(
                    "layer {l}: gradient shape does not mirror parameters"
                )));
            }
            let m = &mut self.first.layers[l];
            let v = &mut self.second.layers[l];

            let update = |param: &mut f64, grad: f64, m: &mut f64, v: &mut f64| {
                *m = beta1 * *m + (1.0 - beta1) * grad;
                *v = beta2 * *v + (1.0 - beta2) * grad * grad;
                let mhat = *m / c1;
                let vhat = *v / c2;
                *param -= learning_rate * mhat / (vhat.sqrt() + epsilon);
            };

            for ((p, &gr), (mm, vv)) in weights
                .values_mut()
                .iter_mut()
                .zip(g.weights.values())
                .zip(m.weights.values_mut().iter_mut().zip(v.weights.values_mut()))
            {
                update(p, gr, mm, vv);
            }
            for ((p, &gr), (mm, vv)) in bias
                .iter_mut()
                .zip(&g.bias)
                .zip(m.bias.iter_mut().zip(v.bias.iter_mut()))
            {
                update(p, gr, mm, vv);
            }
        }
        Ok(())
    }
}
