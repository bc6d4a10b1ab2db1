//! Dense autoencoder: layers, seeded initialization, batch forward and
//! backward passes, and a finite-difference gradient oracle.
//!
//! The backward pass differentiates the weighted squared-error objective
//!
//! ```text
//! L(θ) = Σ_rows w_r · ||target_r - output_r||²
//! ```
//!
//! which covers every training mode in this crate: the per-row weight and
//! target select between plain reconstruction (target = x, w = 1), the
//! anomaly-targeted term (target = F(x), w = λ), and negative training
//! (w < 0).
//!
//! All reductions run in a fixed order, so results are bit-identical for
//! a given seed regardless of the rayon thread count.

use rayon::prelude::*;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::Tensor;

/// Below this many multiply-accumulates a layer pass stays single-threaded;
/// fan-out overhead dominates for the small tabular networks.
const PAR_THRESHOLD: usize = 250_000;

#[derive(Debug, Clone)]
pub struct DenseLayer {
    /// Row-major, shape (out_dim, in_dim).
    weights: Tensor,
    bias: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }
}

/// Layer widths plus activation choices. Widths include the input and
/// output dims, e.g. `[8, 64, 4, 64, 8]` for an 8-dimensional autoencoder
/// with latent width 4.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    pub widths: Vec<usize>,
    pub hidden: Activation,
    pub output: Activation,
}

impl NetworkSpec {
    /// Standard autoencoder spec: relu hidden layers, sigmoid output so
    /// reconstructions stay inside [0,1]^d like the training targets.
    pub fn autoencoder(widths: Vec<usize>) -> Self {
        Self {
            widths,
            hidden: Activation::Relu,
            output: Activation::Sigmoid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.widths;
        if w.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "network spec needs at least [input, latent, output] widths, got {w:?}"
            )));
        }
        if w.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "zero-width layer in {w:?}"
            )));
        }
        for i in 0..w.len() / 2 {
            if w[i] != w[w.len() - 1 - i] {
                return Err(Error::InvalidArgument(format!(
                    "decoder is not a mirror of the encoder: {w:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Default widths for d-dimensional data: two encoder layers down to a
/// latent of 32 (image-scale) or d/2 capped below at 2 (tabular d < 32,
/// where a latent of 32 would not compress), mirrored for the decoder.
pub fn default_widths(d: usize) -> Vec<usize> {
    let hidden = d.div_ceil(2).max(64);
    let latent = if d < 32 { d.div_ceil(2).max(2) } else { 32 };
    vec![d, hidden, latent, hidden, d]
}

#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<DenseLayer>,
    input_dim: usize,
    latent_dim: usize,
    seed: u64,
}

/// Per-parameter gradients, shaped exactly like the network they came from.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub weights: Tensor,
    pub bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrads {
                    weights: Tensor::zeros(l.out_dim(), l.in_dim()),
                    bias: vec![0.0; l.out_dim()],
                })
                .collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.all_finite() && l.bias.iter().all(|v| v.is_finite()))
    }

    /// Largest absolute relative difference against another gradient set,
    /// with denominators floored to dodge 0/0 on dead relu units.
    pub fn max_relative_error(&self, other: &Gradients) -> f64 {
        let mut worst = 0.0f64;
        for (a, b) in self.layers.iter().zip(&other.layers) {
            let pairs = a
                .weights
                .values()
                .iter()
                .zip(b.weights.values())
                .chain(a.bias.iter().zip(&b.bias));
            for (x, y) in pairs {
                let denom = x.abs().max(y.abs()).max(1e-8);
                worst = worst.max((x - y).abs() / denom);
            }
        }
        worst
    }
}

/// Fixed-order dot product with four independent accumulators (keeps the
/// sum order deterministic while letting LLVM vectorize the lanes).
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let head = n - n % 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let mut i = 0;
    while i < head {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        i += 4;
    }
    let mut tail = 0.0;
    while i < n {
        tail += a[i] * b[i];
        i += 1;
    }
    (s0 + s1) + (s2 + s3) + tail
}

impl Network {
    /// Build a network from `spec` with Glorot-uniform weights and zero
    /// biases, drawn from a SplitMix64 stream seeded with `seed`.
    ///
    /// Draw order is fixed (layer by layer, weight rows in row-major
    /// order), so the same `(spec, seed)` always produces bit-identical
    /// parameters.
    pub fn init(spec: &NetworkSpec, seed: u64) -> Result<Network> {
        spec.validate()?;
        let mut rng = SplitMix64::new(seed);
        let mut layers = Vec::with_capacity(spec.widths.len() - 1);
        let last = spec.widths.len() - 2;
        for (l, pair) in spec.widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut weights = Tensor::zeros(fan_out, fan_in);
            for v in weights.values_mut() {
                *v = rng.uniform(-limit, limit);
            }
            layers.push(DenseLayer {
                weights,
                bias: vec![0.0; fan_out],
                activation: if l == last { spec.output } else { spec.hidden },
            });
        }
        let input_dim = spec.widths[0];
        let latent_dim = *spec.widths.iter().min().expect("nonempty widths");
        Ok(Network {
            layers,
            input_dim,
            latent_dim,
            seed,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim];
        w.extend(self.layers.iter().map(DenseLayer::out_dim));
        w
    }

    pub(crate) fn from_parts(layers: Vec<DenseLayer>, seed: u64) -> Result<Network> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("network with no layers".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::ShapeMismatch(format!(
                    "layer output {} feeds layer input {}",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        let input_dim = layers[0].in_dim();
        let latent_dim = layers
            .iter()
            .map(DenseLayer::out_dim)
            .chain(std::iter::once(input_dim))
            .min()
            .unwrap();
        Ok(Network {
            layers,
            input_dim,
            latent_dim,
            seed,
        })
    }

    pub(crate) fn layer_parts(
        weights: Tensor,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<DenseLayer> {
        if bias.len() != weights.rows() {
            return Err(Error::ShapeMismatch(format!(
                "bias length {} vs weight rows {}",
                bias.len(),
                weights.rows()
            )));
        }
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    fn check_batch(&self, batch: &Tensor) -> Result<()> {
        if batch.cols() != self.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "batch has {} columns, network expects {}",
                batch.cols(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// Activations of every layer for `batch`; index 0 is the input itself.
    fn forward_full(&self, batch: &Tensor) -> Result<Vec<Tensor>> {
        self.check_batch(batch)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(batch.clone());
        for layer in &self.layers {
            let next = layer_forward(layer, acts.last().unwrap());
            acts.push(next);
        }
        Ok(acts)
    }

    /// Batch reconstruction: rows in, rows of the same width out.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let mut acts = self.forward_full(batch)?;
        let out = acts.pop().unwrap();
        if !out.all_finite() {
            return Err(Error::NonFinite("forward output".into()));
        }
        Ok(out)
    }

    /// Weighted squared-error objective `Σ_r w_r · ||target_r - out_r||²`.
    pub fn weighted_sse(
        &self,
        batch: &Tensor,
        targets: &Tensor,
        weights: &[f64],
    ) -> Result<f64> {
        check_objective_shapes(batch, targets, weights)?;
        let out = self.forward(batch)?;
        let mut total = 0.0;
        for (r, &w) in weights.iter().enumerate() {
            let mut err = 0.0;
            for (o, t) in out.row(r).iter().zip(targets.row(r)) {
                err += (t - o) * (t - o);
            }
            total += w * err;
        }
        Ok(total)
    }

    /// Analytic gradients of the weighted squared-error objective.
    pub fn backward(
        &self,
        batch: &Tensor,
        targets: &Tensor,
        weights: &[f64],
    ) -> Result<Gradients> {
        Ok(self.backward_with_loss(batch, targets, weights)?.1)
    }

    /// Same as [`Network::backward`] but also returns the objective value
    /// from the forward pass it performs anyway.
    pub fn backward_with_loss(
        &self,
        batch: &Tensor,
        targets: &Tensor,
        weights: &[f64],
    ) -> Result<(f64, Gradients)> {
        check_objective_shapes(batch, targets, weights)?;
        let acts = self.forward_full(batch)?;
        let rows = batch.rows();
        let output = acts.last().unwrap();

        // dL/dz at the output layer: 2·w_r·(out - target)·act'(out).
        let out_act = self.layers.last().unwrap().activation;
        let mut loss = 0.0;
        let mut delta = Tensor::zeros(rows, output.cols());
        for (r, &w) in weights.iter().enumerate() {
            let orow = output.row(r);
            let trow = targets.row(r);
            let drow = delta.row_mut(r);
            let mut err = 0.0;
            for c in 0..orow.len() {
                let diff = orow[c] - trow[c];
                err += diff * diff;
                drow[c] = 2.0 * w * diff * out_act.grad_from_output(orow[c]);
            }
            loss += w * err;
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite("training objective".into()));
        }

        let mut grads = Gradients::zeros_like(self);
        for l in (0..self.layers.len()).rev() {
            let input = &acts[l];
            let layer = &self.layers[l];
            accumulate_param_grads(&delta, input, &mut grads.layers[l]);
            if l > 0 {
                delta = propagate_delta(layer, &delta, input, self.layers[l - 1].activation);
            }
        }
        if !grads.all_finite() {
            return Err(Error::NonFinite("gradients".into()));
        }
        Ok((loss, grads))
    }

    /// Central finite-difference estimate of the same gradients:
    /// `(L(θ+h) - L(θ-h)) / 2h` per scalar parameter. Test oracle; O(P)
    /// forward passes.
    pub fn numeric_gradient(
        &self,
        batch: &Tensor,
        targets: &Tensor,
        weights: &[f64],
        h: f64,
    ) -> Result<Gradients> {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "numeric_gradient: step h must be positive, got {h}"
            )));
        }
        check_objective_shapes(batch, targets, weights)?;
        let mut probe = self.clone();
        let mut grads = Gradients::zeros_like(self);
        for l in 0..self.layers.len() {
            for idx in 0..self.layers[l].weights.values().len() {
                let orig = probe.layers[l].weights.values()[idx];
                probe.layers[l].weights.values_mut()[idx] = orig + h;
                let plus = probe.weighted_sse(batch, targets, weights)?;
                probe.layers[l].weights.values_mut()[idx] = orig - h;
                let minus = probe.weighted_sse(batch, targets, weights)?;
                probe.layers[l].weights.values_mut()[idx] = orig;
                grads.layers[l].weights.values_mut()[idx] = (plus - minus) / (2.0 * h);
            }
            for b in 0..self.layers[l].bias.len() {
                let orig = probe.layers[l].bias[b];
                probe.layers[l].bias[b] = orig + h;
                let plus = probe.weighted_sse(batch, targets, weights)?;
                probe.layers[l].bias[b] = orig - h;
                let minus = probe.weighted_sse(batch, targets, weights)?;
                probe.layers[l].bias[b] = orig;
                grads.layers[l].bias[b] = (plus - minus) / (2.0 * h);
            }
        }
        Ok(grads)
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = (&mut Tensor, &mut Vec<f64>)> {
        self.layers
            .iter_mut()
            .map(|l| (&mut l.weights, &mut l.bias))
    }
}

fn check_objective_shapes(batch: &Tensor, targets: &Tensor, weights: &[f64]) -> Result<()> {
    if !batch.same_shape(targets) {
        return Err(Error::ShapeMismatch(format!(
            "batch {}x{} vs targets {}x{}",
            batch.rows(),
            batch.cols(),
            targets.rows(),
            targets.cols()
        )));
    }
    if weights.len() != batch.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} row weights for {} rows",
            weights.len(),
            batch.rows()
        )));
    }
    Ok(())
}

fn layer_forward(layer: &DenseLayer, input: &Tensor) -> Tensor {
    let rows = input.rows();
    let out_dim = layer.out_dim();
    let act = layer.activation;
    let mut out = Tensor::zeros(rows, out_dim);
    let work = rows * out_dim * layer.in_dim();

    let compute_row = |r: usize, orow: &mut [f64]| {
        let irow = input.row(r);
        for (o, slot) in orow.iter_mut().enumerate() {
            let z = dot(irow, layer.weights.row(o)) + layer.bias[o];
            *slot = act.apply(z);
        }
    };

    if work >= PAR_THRESHOLD {
        out.values_mut()
            .par_chunks_mut(out_dim)
            .enumerate()
            .for_each(|(r, orow)| compute_row(r, orow));
    } else {
        for r in 0..rows {
            compute_row(r, out.row_mut(r));
        }
    }
    out
}

/// dW[o][i] += Σ_r delta[r][o]·input[r][i]; db[o] += Σ_r delta[r][o].
/// Parallel over output units; each unit sums rows in order, so the
/// result is independent of the thread count.
fn accumulate_param_grads(delta: &Tensor, input: &Tensor, grads: &mut LayerGrads) {
    let rows = delta.rows();
    let in_dim = input.cols();
    let out_dim = delta.cols();
    let work = rows * in_dim * out_dim;

    let compute_unit = |o: usize, wrow: &mut [f64], db: &mut f64| {
        for r in 0..rows {
            let d = delta.get(r, o);
            if d == 0.0 {
                continue;
            }
            *db += d;
            let irow = input.row(r);
            for i in 0..in_dim {
                wrow[i] += d * irow[i];
            }
        }
    };

    let LayerGrads { weights, bias } = grads;
    if work >= PAR_THRESHOLD {
        weights
            .values_mut()
            .par_chunks_mut(in_dim)
            .zip(bias.par_iter_mut())
            .enumerate()
            .for_each(|(o, (wrow, db))| compute_unit(o, wrow, db));
    } else {
        for (o, db) in bias.iter_mut().enumerate() {
            compute_unit(o, weights.row_mut(o), db);
        }
    }
}

/// delta_prev[r][i] = act'(input[r][i]) · Σ_o delta[r][o]·W[o][i].
fn propagate_delta(
    layer: &DenseLayer,
    delta: &Tensor,
    input: &Tensor,
    prev_act: Activation,
) -> Tensor {
    let rows = delta.rows();
    let in_dim = layer.in_dim();
    let out_dim = layer.out_dim();
    let mut prev = Tensor::zeros(rows, in_dim);
    let work = rows * in_dim * out_dim;

    let compute_row = |r: usize, prow: &mut [f64]| {
        let drow = delta.row(r);
        for (o, &d) in drow.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let wrow = layer.weights.row(o);
            for i in 0..in_dim {
                prow[i] += d * wrow[i];
            }
        }
        let irow = input.row(r);
        for i in 0..in_dim {
            prow[i] *= prev_act.grad_from_output(irow[i]);
        }
    };

    if work >= PAR_THRESHOLD {
        prev.values_mut()
            .par_chunks_mut(in_dim)
            .enumerate()
            .for_each(|(r, prow)| compute_row(r, prow));
    } else {
        for r in 0..rows {
            compute_row(r, prev.row_mut(r));
        }
    }
    prev
}
