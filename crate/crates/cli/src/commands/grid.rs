//! `aesad grid`: the (s × α × seed) sensitivity cross-product with
//! per-cell completion markers for restartable long grids.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use aesad_core::{auc, fit, score, LambdaSpec, Protocol};

use crate::config::ExperimentConfig;
use crate::manifest::{self, ManifestInputs};
use crate::pipeline::{ensure_out_dir, init_network, load_sources, prepare_run, write_atomic};

#[derive(Debug, Clone, Copy)]
struct Cell {
    si: usize,
    ai: usize,
    run: usize,
}

pub fn cmd_grid(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let grid = cfg
        .grid
        .as_ref()
        .context("config has no [grid] section")?;
    if cfg.protocol == Protocol::Odds {
        bail!("grid varies s, which the odds protocol does not use");
    }
    ensure_out_dir(out)?;
    let cells_dir = out.join("cells");
    ensure_out_dir(&cells_dir)?;

    let sources = load_sources(cfg)?;
    let mut cells = Vec::new();
    for si in 0..grid.s_values.len() {
        for ai in 0..grid.alphas.len() {
            for run in 0..cfg.runs {
                cells.push(Cell { si, ai, run });
            }
        }
    }

    let results: Vec<Result<(Cell, f64)>> = cells
        .par_iter()
        .map(|&cell| {
            let s = grid.s_values[cell.si];
            let alpha = grid.alphas[cell.ai];
            let seed = cfg.train_seed + cell.run as u64;
            let path = cells_dir.join(format!("cell_s{s}_a{}_r{}.csv", cell.ai, cell.run));

            if path.is_file() {
                let text = std::fs::read_to_string(&path)?;
                let value = text
                    .lines()
                    .nth(1)
                    .and_then(|l| l.rsplit(',').next())
                    .and_then(|v| v.parse::<f64>().ok())
                    .with_context(|| format!("unreadable cell marker {}", path.display()))?;
                return Ok((cell, value));
            }

            let prep = prepare_run(cfg, &sources, cell.run, Some(s))?;
            let dim = prep.train.dim();
            let net = init_network(cfg, dim, seed)?;
            let mut train_cfg = cfg.train_config(cell.run, dim);
            train_cfg.lambda = LambdaSpec::Alpha(alpha);
            let (trained, _) = fit(net, &prep.train, &train_cfg, None)?;
            let scores = score(&trained, &prep.test.features)?;
            let value = auc(&scores, &prep.test.labels)?;

            let marker = format!("s,alpha,seed,auc\n{s},{alpha},{seed},{value}\n");
            write_atomic(&path, &marker)?;
            Ok((cell, value))
        })
        .collect();

    let mut table = vec![vec![vec![f64::NAN; cfg.runs]; grid.alphas.len()]; grid.s_values.len()];
    for r in results {
        let (cell, value) = r?;
        table[cell.si][cell.ai][cell.run] = value;
    }

    let mut long = String::from("s,alpha,seed,auc\n");
    for (si, s) in grid.s_values.iter().enumerate() {
        for (ai, alpha) in grid.alphas.iter().enumerate() {
            for (run, value) in table[si][ai].iter().enumerate() {
                let seed = cfg.train_seed + run as u64;
                long.push_str(&format!("{s},{alpha},{seed},{value}\n"));
            }
        }
    }
    write_atomic(&out.join("grid_long.csv"), &long)?;

    let mut pivot = String::from("s");
    for alpha in &grid.alphas {
        pivot.push_str(&format!(",alpha={alpha}"));
    }
    pivot.push('\n');
    for (si, s) in grid.s_values.iter().enumerate() {
        pivot.push_str(&s.to_string());
        for cell in &table[si] {
            let mean = cell.iter().sum::<f64>() / cfg.runs as f64;
            pivot.push_str(&format!(",{mean}"));
        }
        pivot.push('\n');
    }
    write_atomic(&out.join("grid_pivot.csv"), &pivot)?;

    // manifest echoes the resolved grid; per-cell λ differs, so none is echoed
    let dim = sources.train_source.dim();
    let widths = cfg
        .widths
        .clone()
        .unwrap_or_else(|| aesad_core::default_widths(dim));
    let manifest = manifest::render(
        cfg,
        &ManifestInputs {
            command: "grid",
            run: 0,
            data_dim: dim,
            widths: &widths,
            resolved_lambda: None,
            resolved_epochs: cfg
                .epochs
                .unwrap_or_else(|| crate::config::default_epochs(dim)),
            split_digest: "per-cell",
        },
    );
    write_atomic(&out.join("manifest.toml"), &manifest)?;

    println!(
        "grid: {} cells ({} s-values x {} alphas x {} runs) -> {}",
        cells.len(),
        grid.s_values.len(),
        grid.alphas.len(),
        cfg.runs,
        out.join("grid_long.csv").display()
    );
    Ok(())
}
