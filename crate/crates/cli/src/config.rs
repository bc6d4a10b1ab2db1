//! Experiment configuration: a TOML key-value tree with every default
//! materialized at resolution time so emitted manifests are
//! self-describing.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use aesad_core::{
    AdamConfig, BlobsSpec, FKind, LambdaSpec, Method, Protocol, SplitSpec, TrainConfig,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: DatasetCfg,
    #[serde(default)]
    pub split: SplitCfg,
    pub pollution: Option<PollutionCfg>,
    #[serde(default)]
    pub train: TrainCfg,
    pub grid: Option<GridCfg>,
    pub compare: Option<CompareCfg>,
    /// Repetitions for grid and compare aggregates.
    pub runs: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetCfg {
    pub kind: String,
    // idx
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    // csv
    pub path: Option<PathBuf>,
    pub label_column: Option<String>,
    pub class_column: Option<String>,
    pub normalize: Option<bool>,
    // blobs
    pub dim: Option<usize>,
    pub factors: Option<usize>,
    pub factor_sigma: Option<f64>,
    pub noise_sigma: Option<f64>,
    pub anomaly_shift: Option<f64>,
    pub train_normal: Option<usize>,
    pub train_anomaly: Option<usize>,
    pub test_normal: Option<usize>,
    pub test_anomaly: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitCfg {
    pub protocol: Option<String>,
    pub normal_classes: Option<Vec<u32>>,
    pub seen_anomaly_classes: Option<Vec<u32>>,
    pub s: Option<usize>,
    pub per_class_quota: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PollutionCfg {
    pub rate: Option<f64>,
    pub per_class: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCfg {
    pub method: Option<String>,
    pub f_kind: Option<String>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub seed: Option<u64>,
    pub eval_every: Option<usize>,
    pub widths: Option<Vec<usize>>,
    pub neg_phase_fraction: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub s_values: Vec<usize>,
    pub alphas: Option<Vec<f64>>,
    pub alpha_lo: Option<f64>,
    pub alpha_hi: Option<f64>,
    pub alpha_count: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareCfg {
    pub methods: Vec<String>,
}

// ---------------------------------------------------------------------------
// Resolved form
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub enum DataSource {
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
    },
    Csv {
        path: PathBuf,
        label_column: String,
        class_column: Option<String>,
        normalize: bool,
    },
    Blobs {
        dim: usize,
        factors: usize,
        factor_sigma: f64,
        noise_sigma: f64,
        anomaly_shift: f64,
        train_normal: usize,
        train_anomaly: usize,
        test_normal: usize,
        test_anomaly: usize,
        seed: u64,
    },
}

impl DataSource {
    pub fn blobs_spec(&self) -> Option<BlobsSpec> {
        match self {
            DataSource::Blobs {
                dim,
                factors,
                factor_sigma,
                noise_sigma,
                anomaly_shift,
                train_normal,
                train_anomaly,
                test_normal,
                test_anomaly,
                seed,
            } => Some(BlobsSpec {
                dim: *dim,
                factors: *factors,
                factor_sigma: *factor_sigma,
                noise_sigma: *noise_sigma,
                anomaly_shift: *anomaly_shift,
                train_normal: *train_normal,
                train_anomaly: *train_anomaly,
                test_normal: *test_normal,
                test_anomaly: *test_anomaly,
                seed: *seed,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub enum PollutionMode {
    Rate(f64),
    PerClass(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedPollution {
    pub mode: PollutionMode,
    pub seed: u64,
}

/// Everything a command needs, with defaults filled in.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub protocol: Protocol,
    pub normal_classes: BTreeSet<u32>,
    pub seen_anomaly_classes: BTreeSet<u32>,
    pub s: usize,
    pub per_class_quota: Option<usize>,
    pub split_seed: u64,
    pub pollution: Option<ResolvedPollution>,
    pub method: Method,
    pub f_kind: FKind,
    pub lambda: LambdaSpec,
    /// None until the data dimension is known; see [`default_epochs`].
    pub epochs: Option<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub train_seed: u64,
    pub eval_every: Option<usize>,
    pub widths: Option<Vec<usize>>,
    pub neg_phase_fraction: f64,
    pub runs: usize,
    pub grid: Option<ResolvedGrid>,
    pub compare_methods: Vec<Method>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedGrid {
    pub s_values: Vec<usize>,
    pub alphas: Vec<f64>,
}

/// 200 epochs for tabular-width data, 50 for image-scale rows.
pub fn default_epochs(dim: usize) -> usize {
    if dim < 100 {
        200
    } else {
        50
    }
}

impl ExperimentConfig {
    pub fn split_spec(&self, run: usize) -> SplitSpec {
        SplitSpec {
            protocol: self.protocol,
            normal_classes: self.normal_classes.clone(),
            seen_anomaly_classes: self.seen_anomaly_classes.clone(),
            s: self.s,
            per_class_quota: self.per_class_quota,
            seed: self.split_seed + run as u64,
        }
    }

    pub fn train_config(&self, run: usize, dim: usize) -> TrainConfig {
        TrainConfig {
            method: self.method,
            f_kind: self.f_kind,
            lambda: self.lambda,
            epochs: self.epochs.unwrap_or_else(|| default_epochs(dim)),
            batch_size: self.batch_size,
            optimizer: AdamConfig {
                learning_rate: self.learning_rate,
                ..AdamConfig::default()
            },
            seed: self.train_seed + run as u64,
            eval_every: self.eval_every,
            neg_phase_fraction: self.neg_phase_fraction,
        }
    }
}

fn require_file(path: &Path, key: &str) -> Result<PathBuf> {
    if !path.is_file() {
        bail!("{key}: file not found: {}", path.display());
    }
    Ok(path.to_path_buf())
}

pub fn load(path: &Path, seed_override: Option<u64>) -> Result<ExperimentConfig> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let file: FileConfig = toml::from_str(&raw)
        .with_context(|| format!("parsing config {}", path.display()))?;
    resolve(file, seed_override)
}

pub fn resolve(file: FileConfig, seed_override: Option<u64>) -> Result<ExperimentConfig> {
    let d = &file.dataset;
    let source = match d.kind.as_str() {
        "idx" => {
            let get = |p: &Option<PathBuf>, key: &str| -> Result<PathBuf> {
                let p = p
                    .as_ref()
                    .with_context(|| format!("dataset.{key} is required for kind = \"idx\""))?;
                require_file(p, &format!("dataset.{key}"))
            };
            DataSource::Idx {
                train_images: get(&d.train_images, "train_images")?,
                train_labels: get(&d.train_labels, "train_labels")?,
                test_images: get(&d.test_images, "test_images")?,
                test_labels: get(&d.test_labels, "test_labels")?,
            }
        }
        "csv" => {
            let p = d
                .path
                .as_ref()
                .context("dataset.path is required for kind = \"csv\"")?;
            DataSource::Csv {
                path: require_file(p, "dataset.path")?,
                label_column: d.label_column.clone().unwrap_or_else(|| "label".into()),
                class_column: d.class_column.clone(),
                normalize: d.normalize.unwrap_or(true),
            }
        }
        "blobs" => DataSource::Blobs {
            dim: d.dim.unwrap_or(8),
            factors: d.factors.unwrap_or(4),
            factor_sigma: d.factor_sigma.unwrap_or(0.12),
            noise_sigma: d.noise_sigma.unwrap_or(0.02),
            anomaly_shift: d.anomaly_shift.unwrap_or(0.45),
            train_normal: d.train_normal.unwrap_or(2000),
            train_anomaly: d.train_anomaly.unwrap_or(500),
            test_normal: d.test_normal.unwrap_or(500),
            test_anomaly: d.test_anomaly.unwrap_or(500),
            seed: d.seed.unwrap_or(1),
        },
        other => bail!("dataset.kind: unknown kind `{other}` (expected idx|csv|blobs)"),
    };

    let protocol = match &file.split.protocol {
        Some(p) => Protocol::from_str(p).map_err(anyhow::Error::from)?,
        None => match &source {
            DataSource::Csv { .. } => Protocol::Odds,
            _ => Protocol::OneVsOne,
        },
    };
    if protocol == Protocol::Odds {
        if !matches!(source, DataSource::Csv { .. }) {
            bail!("split.protocol = \"odds\" applies to csv datasets only");
        }
        if file.pollution.is_some() {
            bail!("pollution is not supported with the odds protocol");
        }
    } else if matches!(source, DataSource::Csv { .. }) {
        bail!("csv datasets support the odds protocol only (a single file has no class-based train/test partition)");
    }

    let pollution = match &file.pollution {
        None => None,
        Some(p) => {
            let mode = match (p.rate, p.per_class) {
                (Some(rate), None) => PollutionMode::Rate(rate),
                (None, Some(k)) => PollutionMode::PerClass(k),
                _ => bail!("pollution: set exactly one of `rate` or `per_class`"),
            };
            Some(ResolvedPollution {
                mode,
                seed: p.seed.unwrap_or_else(|| {
                    aesad_core::SplitMix64::derive(file.split.seed.unwrap_or(1), 0x706f_6c6c)
                }),
            })
        }
    };

    let t = &file.train;
    let lambda = match (t.lambda, t.alpha) {
        (Some(_), Some(_)) => bail!("train: `lambda` and `alpha` are mutually exclusive"),
        (Some(l), None) => LambdaSpec::Fixed(l),
        (None, Some(a)) => LambdaSpec::Alpha(a),
        (None, None) => LambdaSpec::Alpha(0.1),
    };
    let method = match &t.method {
        Some(m) => Method::from_str(m).map_err(anyhow::Error::from)?,
        None => Method::Aesad,
    };
    let f_kind = match &t.f_kind {
        Some(f) => FKind::from_str(f).map_err(anyhow::Error::from)?,
        None => FKind::F0,
    };

    let compare_methods = match &file.compare {
        None => Vec::new(),
        Some(c) => {
            let mut methods = Vec::new();
            for name in &c.methods {
                methods.push(Method::from_str(name).map_err(anyhow::Error::from)?);
            }
            methods
        }
    };

    let grid = match &file.grid {
        None => None,
        Some(g) => {
            if g.s_values.is_empty() {
                bail!("grid.s_values must not be empty");
            }
            let alphas = match (&g.alphas, g.alpha_lo, g.alpha_hi, g.alpha_count) {
                (Some(a), None, None, None) => {
                    if a.is_empty() {
                        bail!("grid.alphas must not be empty");
                    }
                    a.clone()
                }
                (None, Some(lo), Some(hi), Some(k)) => {
                    aesad_core::alpha_grid(lo, hi, k).map_err(anyhow::Error::from)?
                }
                (None, None, None, None) => {
                    aesad_core::alpha_grid(0.1, 2.0, 5).map_err(anyhow::Error::from)?
                }
                _ => bail!(
                    "grid: set either `alphas` or all of `alpha_lo`/`alpha_hi`/`alpha_count`"
                ),
            };
            Some(ResolvedGrid {
                s_values: g.s_values.clone(),
                alphas,
            })
        }
    };

    let runs = file.runs.unwrap_or(10);
    if runs == 0 {
        bail!("runs must be >= 1");
    }

    Ok(ExperimentConfig {
        source,
        protocol,
        normal_classes: file
            .split
            .normal_classes
            .clone()
            .unwrap_or_default()
            .into_iter()
            .collect(),
        seen_anomaly_classes: file
            .split
            .seen_anomaly_classes
            .clone()
            .unwrap_or_default()
            .into_iter()
            .collect(),
        s: file.split.s.unwrap_or(8),
        per_class_quota: file.split.per_class_quota,
        split_seed: file.split.seed.unwrap_or(1),
        pollution,
        method,
        f_kind,
        lambda,
        epochs: t.epochs,
        batch_size: t.batch_size.unwrap_or(32),
        learning_rate: t.learning_rate.unwrap_or(1e-3),
        train_seed: seed_override.or(t.seed).unwrap_or(7),
        eval_every: t.eval_every,
        widths: t.widths.clone(),
        neg_phase_fraction: t.neg_phase_fraction.unwrap_or(0.25),
        runs,
        grid,
        compare_methods,
    })
}
