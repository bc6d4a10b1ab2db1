//! `aesad train`: one training run, persisted as model + metrics + manifest.

use std::path::Path;

use anyhow::Result;

use aesad_core::{fit, ModelFile};

use crate::config::ExperimentConfig;
use crate::manifest::{self, ManifestInputs};
use crate::pipeline::{ensure_out_dir, init_network, load_sources, prepare_run, write_atomic};

pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    ensure_out_dir(out)?;
    let sources = load_sources(cfg)?;
    let prep = prepare_run(cfg, &sources, 0, None)?;
    let dim = prep.train.dim();

    let net = init_network(cfg, dim, cfg.train_seed)?;
    let train_cfg = cfg.train_config(0, dim);
    let (trained, report) = fit(net, &prep.train, &train_cfg, Some(&prep.test))?;

    ModelFile::new(trained, prep.stats.clone()).save(&out.join("model.bin"))?;
    write_atomic(&out.join("metrics.csv"), &report.to_csv())?;
    let manifest = manifest::render(
        cfg,
        &ManifestInputs {
            command: "train",
            run: 0,
            data_dim: dim,
            widths: &report.widths,
            resolved_lambda: Some(report.resolved_lambda),
            resolved_epochs: train_cfg.epochs,
            split_digest: &prep.manifest.digest(),
        },
    );
    write_atomic(&out.join("manifest.toml"), &manifest)?;

    let last_auc = report
        .aucs
        .last()
        .map(|(e, a)| format!("auc[{e}]={a:.4}"))
        .unwrap_or_else(|| "auc=n/a".into());
    println!(
        "train: {} rows ({} anomalies), {} epochs, final loss {:.6}, {last_auc}, {:.1?}",
        prep.train.n_rows(),
        prep.train.label_counts().1,
        report.final_epoch,
        report.losses.last().copied().unwrap_or(f64::NAN),
        report.wall,
    );
    Ok(())
}
