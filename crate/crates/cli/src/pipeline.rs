//! Shared command plumbing: source loading, per-run split assembly,
//! network construction, and atomic file output.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use aesad_core::{
    build_odds_split, build_split, default_widths, gaussian_blobs, inject_pollution,
    inject_pollution_per_class, load_csv, load_idx, normalize_minmax, Dataset, MinMaxStats,
    Network, NetworkSpec, PollutionSpec, Protocol,
};

use crate::config::{DataSource, ExperimentConfig, PollutionMode};

/// Source datasets, loaded once and split per run.
pub struct Sources {
    pub train_source: Dataset,
    pub test_source: Option<Dataset>,
}

pub fn load_sources(cfg: &ExperimentConfig) -> Result<Sources> {
    match &cfg.source {
        DataSource::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
        } => Ok(Sources {
            train_source: load_idx(train_images, train_labels)?,
            test_source: Some(load_idx(test_images, test_labels)?),
        }),
        DataSource::Csv {
            path,
            label_column,
            class_column,
            ..
        } => Ok(Sources {
            train_source: load_csv(path, label_column, class_column.as_deref())?,
            test_source: None,
        }),
        DataSource::Blobs { .. } => {
            let spec = cfg.source.blobs_spec().expect("blobs source");
            let (train, test) = gaussian_blobs(&spec)?;
            Ok(Sources {
                train_source: train,
                test_source: Some(test),
            })
        }
    }
}

/// One run's materialized data: normalized train/test sets, the
/// normalization stats when fitted, and the split audit record.
pub struct PreparedRun {
    pub train: Dataset,
    pub test: Dataset,
    pub stats: Option<MinMaxStats>,
    pub manifest: aesad_core::SplitManifest,
}

pub fn prepare_run(
    cfg: &ExperimentConfig,
    sources: &Sources,
    run: usize,
    s_override: Option<usize>,
) -> Result<PreparedRun> {
    let built = if cfg.protocol == Protocol::Odds {
        build_odds_split(&sources.train_source, cfg.split_seed + run as u64)?
    } else {
        let test_source = sources
            .test_source
            .as_ref()
            .context("class protocols need a test source")?;
        let mut spec = cfg.split_spec(run);
        if let Some(s) = s_override {
            spec.s = s;
        }
        build_split(&sources.train_source, test_source, &spec)?
    };

    let mut train = built.train;
    let mut test = built.test;

    // Pollution happens before normalization so the injected rows are part
    // of the fitted training distribution, as they would be in the wild.
    if let Some(p) = &cfg.pollution {
        let (polluted, _) = match p.mode {
            PollutionMode::Rate(rate) => inject_pollution(
                &train,
                &built.leftover_seen_pool,
                &PollutionSpec {
                    rate,
                    seed: p.seed + run as u64,
                },
            )?,
            PollutionMode::PerClass(k) => {
                inject_pollution_per_class(&train, &built.leftover_seen_pool, k, p.seed + run as u64)?
            }
        };
        train = polluted;
    }

    let normalize = matches!(cfg.source, DataSource::Csv { normalize: true, .. });
    let stats = if normalize {
        let fit_rows: Vec<usize> = (0..train.n_rows()).collect();
        let (norm_train, stats) = normalize_minmax(&train, &fit_rows)?;
        train = norm_train;
        test = stats.transform(&test)?;
        Some(stats)
    } else {
        None
    };

    Ok(PreparedRun {
        train,
        test,
        stats,
        manifest: built.manifest,
    })
}

pub fn init_network(cfg: &ExperimentConfig, dim: usize, seed: u64) -> Result<Network> {
    let widths = match &cfg.widths {
        Some(w) => {
            if w.first() != Some(&dim) || w.last() != Some(&dim) {
                bail!(
                    "train.widths {:?} must start and end with the data dimension {dim}",
                    w
                );
            }
            w.clone()
        }
        None => default_widths(dim),
    };
    Ok(Network::init(&NetworkSpec::autoencoder(widths), seed)?)
}

/// Write via a temp file + rename so partial output never lands under the
/// final name.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = tmp_path(path);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

pub fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
