//! `aesad compare`: train every configured method on identical splits,
//! then emit mean±std and pairwise win-probability tables.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Result};
use rayon::prelude::*;

use aesad_core::{aggregate_runs, auc, fit, per_class_auc, score, win_probability};

use crate::config::ExperimentConfig;
use crate::manifest::{self, ManifestInputs};
use crate::pipeline::{ensure_out_dir, init_network, load_sources, prepare_run, write_atomic};

pub fn cmd_compare(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let methods = &cfg.compare_methods;
    if methods.len() < 2 {
        bail!("config needs a [compare] section listing at least two methods");
    }
    ensure_out_dir(out)?;
    let sources = load_sources(cfg)?;

    // One split per run, shared by every method so the comparison is paired.
    type RunRow = (usize, String, Vec<f64>, Vec<BTreeMap<u32, f64>>);
    let per_run: Vec<Result<RunRow>> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let prep = prepare_run(cfg, &sources, run, None)?;
            let dim = prep.train.dim();
            let digest = prep.manifest.digest();
            write_atomic(
                &out.join(format!("split_manifest_r{run}.txt")),
                &format!("digest {digest}\n{}", prep.manifest.to_text()),
            )?;
            let mut aucs = Vec::with_capacity(methods.len());
            let mut per_class = Vec::with_capacity(methods.len());
            for &method in methods {
                let net = init_network(cfg, dim, cfg.train_seed + run as u64)?;
                let mut train_cfg = cfg.train_config(run, dim);
                train_cfg.method = method;
                let (trained, _) = fit(net, &prep.train, &train_cfg, None)?;
                let scores = score(&trained, &prep.test.features)?;
                aucs.push(auc(&scores, &prep.test.labels)?);
                if let (Some(ids), false) =
                    (&prep.test.class_ids, cfg.normal_classes.is_empty())
                {
                    per_class.push(per_class_auc(
                        &scores,
                        &prep.test.labels,
                        ids,
                        &cfg.normal_classes,
                    )?);
                } else {
                    per_class.push(BTreeMap::new());
                }
            }
            Ok((run, digest, aucs, per_class))
        })
        .collect();

    let mut runs: Vec<RunRow> = Vec::with_capacity(cfg.runs);
    for r in per_run {
        runs.push(r?);
    }
    runs.sort_by_key(|(run, _, _, _)| *run);

    let mut long = String::from("method,run,seed,auc,split_digest\n");
    for (mi, method) in methods.iter().enumerate() {
        for (run, digest, aucs, _) in &runs {
            let seed = cfg.train_seed + *run as u64;
            long.push_str(&format!("{method},{run},{seed},{},{digest}\n", aucs[mi]));
        }
    }
    write_atomic(&out.join("per_run.csv"), &long)?;

    // per-class table: rows = anomalous class, columns = methods (mean over runs)
    let classes: std::collections::BTreeSet<u32> = runs
        .iter()
        .flat_map(|(_, _, _, pc)| pc.iter().flat_map(|m| m.keys().copied()))
        .collect();
    if !classes.is_empty() {
        let mut table = String::from("class");
        for m in methods {
            table.push_str(&format!(",{m}"));
        }
        table.push('\n');
        for class in classes {
            table.push_str(&class.to_string());
            for mi in 0..methods.len() {
                let values: Vec<f64> = runs
                    .iter()
                    .filter_map(|(_, _, _, pc)| pc[mi].get(&class).copied())
                    .collect();
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                table.push_str(&format!(",{mean}"));
            }
            table.push('\n');
        }
        write_atomic(&out.join("per_class.csv"), &table)?;
    }

    let mut summary = String::from("method,mean_auc,std_auc\n");
    let series: Vec<Vec<f64>> = (0..methods.len())
        .map(|mi| runs.iter().map(|(_, _, aucs, _)| aucs[mi]).collect())
        .collect();
    for (mi, method) in methods.iter().enumerate() {
        let (mean, std) = aggregate_runs(&series[mi])?;
        summary.push_str(&format!("{method},{mean},{std}\n"));
    }
    write_atomic(&out.join("summary.csv"), &summary)?;

    let mut wins = String::from("method");
    for m in methods {
        wins.push_str(&format!(",{m}"));
    }
    wins.push('\n');
    for (i, row_method) in methods.iter().enumerate() {
        wins.push_str(&row_method.to_string());
        for j in 0..methods.len() {
            if i == j {
                wins.push(',');
            } else {
                wins.push_str(&format!(",{}", win_probability(&series[i], &series[j])?));
            }
        }
        wins.push('\n');
    }
    write_atomic(&out.join("wins.csv"), &wins)?;

    let dim = sources.train_source.dim();
    let widths = cfg
        .widths
        .clone()
        .unwrap_or_else(|| aesad_core::default_widths(dim));
    let manifest = manifest::render(
        cfg,
        &ManifestInputs {
            command: "compare",
            run: 0,
            data_dim: dim,
            widths: &widths,
            resolved_lambda: None,
            resolved_epochs: cfg
                .epochs
                .unwrap_or_else(|| crate::config::default_epochs(dim)),
            split_digest: "per-run",
        },
    );
    write_atomic(&out.join("manifest.toml"), &manifest)?;

    for (mi, method) in methods.iter().enumerate() {
        let (mean, std) = aggregate_runs(&series[mi])?;
        println!("compare: {method} mean auc {mean:.4} +/- {std:.4} over {} runs", cfg.runs);
    }
    Ok(())
}
