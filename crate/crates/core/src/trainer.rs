//! Training loops and anomaly scoring.
//!
//! Three methods share one minibatch engine:
//!
//! - [`train`]: targeted training — normal rows regress onto themselves,
//!   labeled anomalies onto `F(x)` with weight λ.
//! - [`train_standard`]: the plain autoencoder baseline; labeled anomalies
//!   are dropped and the remaining rows regress onto themselves.
//! - [`train_neg`]: negative-training baseline; phase one is standard
//!   training on normals, phase two ascends the reconstruction error of
//!   the labeled anomalies (clamped per row to the input dimension so the
//!   objective stays bounded).
//!
//! The per-batch objective is the mean over batch rows of the weighted
//! squared error, which keeps the learning rate independent of the batch
//! size. Epoch shuffles draw from streams derived from `cfg.seed`, so a
//! fixed config reproduces bit-identical parameter trajectories.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::adam::{AdamConfig, AdamState};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::eval::auc;
use crate::loss::{lambda_schedule, reconstruction_error, target_for, FKind};
use crate::network::Network;
use crate::rng::SplitMix64;
use crate::tensor::Tensor;

/// Stream tag space for phase-two shuffles, keeping them disjoint from
/// the phase-one tags (1-based epoch numbers).
const NEG_PHASE_TAG: u64 = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Aesad,
    StandardAe,
    NegAe,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::Aesad => "aesad",
            Method::StandardAe => "standard_ae",
            Method::NegAe => "neg_ae",
        };
        f.write_str(name)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aesad" => Ok(Method::Aesad),
            "standard_ae" => Ok(Method::StandardAe),
            "neg_ae" => Ok(Method::NegAe),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}` (expected aesad|standard_ae|neg_ae)"
            ))),
        }
    }
}

/// Anomaly weight: either a literal λ or an α resolved against the
/// training counts via the λ(α) schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    Fixed(f64),
    Alpha(f64),
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub method: Method,
    pub f_kind: FKind,
    pub lambda: LambdaSpec,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
    pub seed: u64,
    /// Epoch stride for test-set AUC evaluation; defaults to every epoch
    /// when a test set is supplied.
    pub eval_every: Option<usize>,
    /// Fraction of `epochs` spent in the negative phase of `neg_ae`.
    pub neg_phase_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Aesad,
            f_kind: FKind::F0,
            lambda: LambdaSpec::Alpha(0.1),
            epochs: 200,
            batch_size: 32,
            optimizer: AdamConfig::default(),
            seed: 0,
            eval_every: None,
            neg_phase_fraction: 0.25,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if self.eval_every == Some(0) {
            return Err(Error::InvalidArgument("eval_every must be >= 1".into()));
        }
        if let LambdaSpec::Fixed(l) = self.lambda {
            if !l.is_finite() || l < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "lambda must be finite and >= 0, got {l}"
                )));
            }
        }
        if !self.neg_phase_fraction.is_finite() || self.neg_phase_fraction <= 0.0 {
            return Err(Error::InvalidArgument(
                "neg_phase_fraction must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// λ as used for training `train_set`: fixed values pass through,
    /// α values go through the λ(α) schedule with n = normal rows and
    /// s = labeled anomalies.
    pub fn resolve_lambda(&self, train_set: &Dataset) -> Result<f64> {
        match self.lambda {
            LambdaSpec::Fixed(l) => Ok(l),
            LambdaSpec::Alpha(a) => {
                let (n, s) = train_set.label_counts();
                lambda_schedule(a, n, s)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// One objective value per epoch, as observed during the training
    /// passes of that epoch.
    pub losses: Vec<f64>,
    /// (1-based epoch, test AUC) at each evaluation point.
    pub aucs: Vec<(usize, f64)>,
    pub wall: Duration,
    pub final_epoch: usize,
    pub resolved_lambda: f64,
    pub widths: Vec<usize>,
}

impl TrainReport {
    /// `epoch,loss,auc` rows; the auc cell is empty on epochs without an
    /// evaluation. Stable output for byte-level reproducibility checks.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,auc\n");
        for (i, loss) in self.losses.iter().enumerate() {
            let epoch = i + 1;
            out.push_str(&epoch.to_string());
            out.push(',');
            out.push_str(&loss.to_string());
            out.push(',');
            if let Some((_, a)) = self.aucs.iter().find(|(e, _)| *e == epoch) {
                out.push_str(&a.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Anomaly scores: the squared reconstruction error of each row.
pub fn score(net: &Network, rows: &Tensor) -> Result<Vec<f64>> {
    for (i, &v) in rows.values().iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!(
                "score: value {v} at flat index {i} outside [0,1]"
            )));
        }
    }
    let out = net.forward(rows)?;
    (0..rows.rows())
        .map(|r| reconstruction_error(rows.row(r), out.row(r)))
        .collect()
}

/// Dispatch on `cfg.method`.
pub fn fit(
    net: Network,
    train_set: &Dataset,
    cfg: &TrainConfig,
    test: Option<&Dataset>,
) -> Result<(Network, TrainReport)> {
    match cfg.method {
        Method::Aesad => train(net, train_set, cfg, test),
        Method::StandardAe => train_standard(net, train_set, cfg, test),
        Method::NegAe => train_neg(net, train_set, cfg, test),
    }
}

/// Targeted training on the full labeled set.
pub fn train(
    net: Network,
    train_set: &Dataset,
    cfg: &TrainConfig,
    test: Option<&Dataset>,
) -> Result<(Network, TrainReport)> {
    cfg.validate()?;
    check_train_set(&net, train_set)?;
    let lambda = cfg.resolve_lambda(train_set)?;

    let mut target_rows = Vec::with_capacity(train_set.n_rows());
    let mut weights = Vec::with_capacity(train_set.n_rows());
    for r in 0..train_set.n_rows() {
        let (target, w) = target_for(
            train_set.features.row(r),
            train_set.labels[r],
            cfg.f_kind,
            lambda,
        )?;
        target_rows.push(target);
        weights.push(w);
    }
    let targets = Tensor::from_rows(&target_rows)?;

    let start = Instant::now();
    let mut net = net;
    let mut report = TrainReport {
        losses: Vec::with_capacity(cfg.epochs),
        aucs: Vec::new(),
        wall: Duration::ZERO,
        final_epoch: 0,
        resolved_lambda: lambda,
        widths: net.widths(),
    };
    let mut adam = AdamState::new(&net, cfg.optimizer);
    for epoch in 0..cfg.epochs {
        let loss = run_epoch(
            &mut net,
            &mut adam,
            &train_set.features,
            &targets,
            &weights,
            cfg.batch_size,
            SplitMix64::derive(cfg.seed, 1 + epoch as u64),
        )?;
        report.losses.push(loss);
        maybe_eval(&net, test, cfg, epoch + 1, &mut report)?;
    }
    report.final_epoch = cfg.epochs;
    report.wall = start.elapsed();
    Ok((net, report))
}

/// Plain autoencoder baseline: labeled anomalies are removed and the
/// remaining rows regress onto themselves.
pub fn train_standard(
    net: Network,
    train_set: &Dataset,
    cfg: &TrainConfig,
    test: Option<&Dataset>,
) -> Result<(Network, TrainReport)> {
    let normals = train_set.indices_with_label(0);
    if normals.is_empty() {
        return Err(Error::Data(
            "train_standard: no label-0 rows to train on".into(),
        ));
    }
    let subset = train_set.select(&normals, Some(0));
    let cfg = TrainConfig {
        lambda: LambdaSpec::Fixed(1.0), // unused: no anomaly rows remain
        ..cfg.clone()
    };
    train(net, &subset, &cfg, test)
}

/// Two-phase negative-training baseline.
pub fn train_neg(
    net: Network,
    train_set: &Dataset,
    cfg: &TrainConfig,
    test: Option<&Dataset>,
) -> Result<(Network, TrainReport)> {
    cfg.validate()?;
    check_train_set(&net, train_set)?;
    let (n0, n1) = train_set.label_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::Data(format!(
            "train_neg needs both labels present, got {n0} normals / {n1} anomalies"
        )));
    }

    let start = Instant::now();
    let (mut net, mut report) = train_standard(net, train_set, cfg, test)?;

    // Phase two: gradient ascent on the reconstruction error of the
    // anomalies. A row's contribution is clamped at d (the largest
    // possible squared error per dimension, summed), implemented by
    // zeroing the row weight once its error passes the clamp.
    let anomalies = train_set.select(&train_set.indices_with_label(1), Some(1));
    let d = anomalies.dim() as f64;
    let phase2_epochs = ((cfg.epochs as f64 * cfg.neg_phase_fraction) + 0.5).floor() as usize;
    let phase2_epochs = phase2_epochs.max(1);
    let n = anomalies.n_rows();
    let mut adam = AdamState::new(&net, cfg.optimizer);

    for epoch in 0..phase2_epochs {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = SplitMix64::new(SplitMix64::derive(cfg.seed, NEG_PHASE_TAG + epoch as u64));
        rng.shuffle(&mut perm);

        let mut objective = 0.0;
        for chunk in perm.chunks(cfg.batch_size) {
            let batch = anomalies.features.select_rows(chunk);
            let out = net.forward(&batch)?;
            let mut weights = Vec::with_capacity(chunk.len());
            for r in 0..batch.rows() {
                let err = reconstruction_error(batch.row(r), out.row(r))?;
                objective += err.min(d);
                weights.push(if err >= d {
                    0.0
                } else {
                    -1.0 / chunk.len() as f64
                });
            }
            let (_, grads) = net.backward_with_loss(&batch, &batch, &weights)?;
            adam.step(&mut net, &grads)?;
        }
        // Reported as the minimized objective: the negated clamped error.
        report.losses.push(-objective / n as f64);
        maybe_eval(&net, test, cfg, cfg.epochs + epoch + 1, &mut report)?;
    }
    report.final_epoch = cfg.epochs + phase2_epochs;
    report.wall = start.elapsed();
    Ok((net, report))
}

fn check_train_set(net: &Network, train_set: &Dataset) -> Result<()> {
    if train_set.n_rows() == 0 {
        return Err(Error::Data("empty training set".into()));
    }
    if train_set.dim() != net.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "training data has {} columns, network expects {}",
            train_set.dim(),
            net.input_dim()
        )));
    }
    train_set.check_unit_range()
}

fn run_epoch(
    net: &mut Network,
    adam: &mut AdamState,
    features: &Tensor,
    targets: &Tensor,
    weights: &[f64],
    batch_size: usize,
    shuffle_seed: u64,
) -> Result<f64> {
    let n = features.rows();
    let mut perm: Vec<usize> = (0..n).collect();
    SplitMix64::new(shuffle_seed).shuffle(&mut perm);

    let mut weighted_sum = 0.0;
    for chunk in perm.chunks(batch_size) {
        let batch = features.select_rows(chunk);
        let batch_targets = targets.select_rows(chunk);
        let scale = 1.0 / chunk.len() as f64;
        let batch_weights: Vec<f64> = chunk.iter().map(|&i| weights[i] * scale).collect();
        let (batch_loss, grads) = net.backward_with_loss(&batch, &batch_targets, &batch_weights)?;
        adam.step(net, &grads)?;
        weighted_sum += batch_loss * chunk.len() as f64;
    }
    Ok(weighted_sum / n as f64)
}

fn maybe_eval(
    net: &Network,
    test: Option<&Dataset>,
    cfg: &TrainConfig,
    epoch: usize,
    report: &mut TrainReport,
) -> Result<()> {
    let Some(test) = test else { return Ok(()) };
    let every = cfg.eval_every.unwrap_or(1);
    if epoch.is_multiple_of(every) {
        let scores = score(net, &test.features)?;
        report.aucs.push((epoch, auc(&scores, &test.labels)?));
    }
    Ok(())
}
