//! `aesad evaluate`: score a dataset with a saved model.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

use aesad_core::{auc, per_class_auc, score, Dataset, EvalReport, ModelFile};

use crate::config::{DataSource, ExperimentConfig};
use crate::pipeline::{ensure_out_dir, load_sources, write_atomic};

/// The rows a saved model is evaluated on: the configured test partition
/// for idx/blobs sources, the whole file for csv sources.
fn eval_dataset(cfg: &ExperimentConfig, model: &ModelFile) -> Result<Dataset> {
    let sources = load_sources(cfg)?;
    let mut data = match &cfg.source {
        DataSource::Csv { .. } => sources.train_source,
        _ => {
            let mut test = sources
                .test_source
                .context("no test partition in this dataset")?;
            if !cfg.normal_classes.is_empty() {
                let ids = test
                    .class_ids
                    .clone()
                    .context("test data has no class ids to label by")?;
                test.labels = ids
                    .iter()
                    .map(|c| u8::from(!cfg.normal_classes.contains(c)))
                    .collect();
            }
            test
        }
    };
    if let Some(stats) = &model.stats {
        data = stats.transform(&data)?;
    }
    Ok(data)
}

pub fn cmd_evaluate(cfg: &ExperimentConfig, model_path: &Path, out: &Path) -> Result<()> {
    ensure_out_dir(out)?;
    let model = ModelFile::load(model_path)?;
    let data = eval_dataset(cfg, &model)?;
    if data.dim() != model.network.input_dim() {
        bail!(
            "model expects {} features but `{}` has {}",
            model.network.input_dim(),
            data.name,
            data.dim()
        );
    }

    let scores = score(&model.network, &data.features)?;

    let mut csv = String::from("row,score,label,class\n");
    for (i, s) in scores.iter().enumerate() {
        let class = data
            .class_ids
            .as_ref()
            .map(|ids| ids[i].to_string())
            .unwrap_or_default();
        csv.push_str(&format!("{i},{s},{},{class}\n", data.labels[i]));
    }
    write_atomic(&out.join("scores.csv"), &csv)?;

    let (n0, n1) = data.label_counts();
    if n0 == 0 || n1 == 0 {
        bail!(
            "`{}` has a single label value ({n0} normals, {n1} anomalies); auc is undefined",
            data.name
        );
    }
    let overall = auc(&scores, &data.labels)?;
    let per_class = match (&data.class_ids, cfg.normal_classes.is_empty()) {
        (Some(ids), false) => per_class_auc(&scores, &data.labels, ids, &cfg.normal_classes)?,
        _ => BTreeMap::new(),
    };
    let report = EvalReport::new(
        cfg.method.to_string(),
        vec![overall],
        per_class,
        format!("model = {}", model_path.display()),
    )?;
    write_atomic(&out.join("report.txt"), &report.to_text())?;
    if !report.per_class.is_empty() {
        write_atomic(&out.join("per_class.csv"), &report.per_class_csv())?;
    }

    println!(
        "evaluate: {} rows, auc {:.4}, scores -> {}",
        data.n_rows(),
        overall,
        out.join("scores.csv").display()
    );
    Ok(())
}
