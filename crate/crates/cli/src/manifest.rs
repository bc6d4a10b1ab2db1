//! Manifest emission: the resolved configuration echoed as TOML so every
//! output directory is self-describing.

use aesad_core::{LambdaSpec, Method};

use crate::config::{DataSource, ExperimentConfig, PollutionMode};

fn toml_string(s: &str) -> String {
    format!("{s:?}")
}

fn push_kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    out.push_str(key);
    out.push_str(" = ");
    out.push_str(&value.to_string());
    out.push('\n');
}

fn push_list<T: std::fmt::Display>(out: &mut String, key: &str, values: impl Iterator<Item = T>) {
    let items: Vec<String> = values.map(|v| v.to_string()).collect();
    push_kv(out, key, format!("[{}]", items.join(", ")));
}

pub struct ManifestInputs<'a> {
    pub command: &'a str,
    pub run: usize,
    pub data_dim: usize,
    pub widths: &'a [usize],
    pub resolved_lambda: Option<f64>,
    pub resolved_epochs: usize,
    pub split_digest: &'a str,
}

/// Render the full resolved configuration. Field order is fixed, so the
/// output is byte-stable for a fixed config.
pub fn render(cfg: &ExperimentConfig, inputs: &ManifestInputs<'_>) -> String {
    let mut out = String::new();
    out.push_str("[experiment]\n");
    push_kv(&mut out, "command", toml_string(inputs.command));
    push_kv(&mut out, "run", inputs.run);
    push_kv(&mut out, "runs", cfg.runs);
    push_kv(&mut out, "data_dim", inputs.data_dim);
    push_kv(&mut out, "split_digest", toml_string(inputs.split_digest));

    out.push_str("\n[dataset]\n");
    match &cfg.source {
        DataSource::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
        } => {
            push_kv(&mut out, "kind", toml_string("idx"));
            push_kv(&mut out, "train_images", toml_string(&train_images.display().to_string()));
            push_kv(&mut out, "train_labels", toml_string(&train_labels.display().to_string()));
            push_kv(&mut out, "test_images", toml_string(&test_images.display().to_string()));
            push_kv(&mut out, "test_labels", toml_string(&test_labels.display().to_string()));
        }
        DataSource::Csv {
            path,
            label_column,
            class_column,
            normalize,
        } => {
            push_kv(&mut out, "kind", toml_string("csv"));
            push_kv(&mut out, "path", toml_string(&path.display().to_string()));
            push_kv(&mut out, "label_column", toml_string(label_column));
            if let Some(c) = class_column {
                push_kv(&mut out, "class_column", toml_string(c));
            }
            push_kv(&mut out, "normalize", normalize);
        }
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
        } => {
            push_kv(&mut out, "kind", toml_string("blobs"));
            push_kv(&mut out, "dim", dim);
            push_kv(&mut out, "factors", factors);
            push_kv(&mut out, "factor_sigma", factor_sigma);
            push_kv(&mut out, "noise_sigma", noise_sigma);
            push_kv(&mut out, "anomaly_shift", anomaly_shift);
            push_kv(&mut out, "train_normal", train_normal);
            push_kv(&mut out, "train_anomaly", train_anomaly);
            push_kv(&mut out, "test_normal", test_normal);
            push_kv(&mut out, "test_anomaly", test_anomaly);
            push_kv(&mut out, "seed", seed);
        }
    }

    out.push_str("\n[split]\n");
    push_kv(&mut out, "protocol", toml_string(&cfg.protocol.to_string()));
    push_list(&mut out, "normal_classes", cfg.normal_classes.iter());
    push_list(&mut out, "seen_anomaly_classes", cfg.seen_anomaly_classes.iter());
    push_kv(&mut out, "s", cfg.s);
    if let Some(q) = cfg.per_class_quota {
        push_kv(&mut out, "per_class_quota", q);
    }
    push_kv(&mut out, "seed", cfg.split_seed + inputs.run as u64);

    if let Some(p) = &cfg.pollution {
        out.push_str("\n[pollution]\n");
        match p.mode {
            PollutionMode::Rate(r) => push_kv(&mut out, "rate", r),
            PollutionMode::PerClass(k) => push_kv(&mut out, "per_class", k),
        }
        push_kv(&mut out, "seed", p.seed + inputs.run as u64);
    }

    out.push_str("\n[train]\n");
    push_kv(&mut out, "method", toml_string(&cfg.method.to_string()));
    push_kv(&mut out, "f_kind", toml_string(&cfg.f_kind.to_string()));
    match cfg.lambda {
        LambdaSpec::Fixed(l) => push_kv(&mut out, "lambda", l),
        LambdaSpec::Alpha(a) => push_kv(&mut out, "alpha", a),
    }
    if let Some(l) = inputs.resolved_lambda {
        push_kv(&mut out, "resolved_lambda", l);
    }
    push_kv(&mut out, "epochs", inputs.resolved_epochs);
    push_kv(&mut out, "batch_size", cfg.batch_size);
    push_kv(&mut out, "learning_rate", cfg.learning_rate);
    push_kv(&mut out, "seed", cfg.train_seed + inputs.run as u64);
    if let Some(e) = cfg.eval_every {
        push_kv(&mut out, "eval_every", e);
    }
    push_list(&mut out, "widths", inputs.widths.iter());
    if cfg.method == Method::NegAe {
        push_kv(&mut out, "neg_phase_fraction", cfg.neg_phase_fraction);
    }

    if let Some(grid) = &cfg.grid {
        out.push_str("\n[grid]\n");
        push_list(&mut out, "s_values", grid.s_values.iter());
        push_list(&mut out, "alphas", grid.alphas.iter());
    }
    if !cfg.compare_methods.is_empty() {
        out.push_str("\n[compare]\n");
        push_list(
            &mut out,
            "methods",
            cfg.compare_methods.iter().map(|m| toml_string(&m.to_string())),
        );
    }
    out
}
