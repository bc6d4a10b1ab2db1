//! AUC computation and run aggregation.
//!
//! [`auc`] uses rank statistics (Mann-Whitney with midranks for ties) and
//! agrees exactly, not approximately, with the O(n²) pair enumeration in
//! [`auc_bruteforce`]: both accumulate only multiples of one half, which
//! f64 represents exactly at these sizes.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

fn check_scores_labels(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} outside {{0,1}}"
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores".into()));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::InvalidArgument(
            "auc needs both label values present".into(),
        ));
    }
    Ok((pos, neg))
}

/// Probability that a random anomaly outranks a random normal row, with
/// half credit for ties.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check_scores_labels(scores, labels)?;
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // Midranks: a tie group spanning sorted positions i..j (0-based) gets
    // the average of ranks i+1 ..= j.
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }

    let p = pos as f64;
    let u = rank_sum_pos - p * (p + 1.0) / 2.0;
    Ok(u / (p * neg as f64))
}

/// O(n²) oracle: count ordered pairs directly with the same tie convention.
pub fn auc_bruteforce(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check_scores_labels(scores, labels)?;
    let mut count = 0.0f64;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            if si > sj {
                count += 1.0;
            } else if si == sj {
                count += 0.5;
            }
        }
    }
    Ok(count / (pos as f64 * neg as f64))
}

/// Per-anomalous-class AUC: for each class `c` outside `normal_classes`,
/// the AUC over the normal rows plus the rows of class `c` only.
pub fn per_class_auc(
    scores: &[f64],
    labels: &[u8],
    class_ids: &[u32],
    normal_classes: &BTreeSet<u32>,
) -> Result<BTreeMap<u32, f64>> {
    if scores.len() != class_ids.len() || scores.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores, {} labels, {} class ids",
            scores.len(),
            labels.len(),
            class_ids.len()
        )));
    }
    let normal_rows: Vec<usize> = (0..scores.len())
        .filter(|&i| normal_classes.contains(&class_ids[i]))
        .collect();
    let anomalous: BTreeSet<u32> = class_ids
        .iter()
        .copied()
        .filter(|c| !normal_classes.contains(c))
        .collect();
    if anomalous.is_empty() {
        return Err(Error::InvalidArgument(
            "per_class_auc: no anomalous classes present".into(),
        ));
    }

    let mut out = BTreeMap::new();
    for class in anomalous {
        let mut sub_scores: Vec<f64> = normal_rows.iter().map(|&i| scores[i]).collect();
        let mut sub_labels: Vec<u8> = vec![0; normal_rows.len()];
        for i in 0..scores.len() {
            if class_ids[i] == class {
                sub_scores.push(scores[i]);
                sub_labels.push(1);
            }
        }
        out.insert(class, auc(&sub_scores, &sub_labels)?);
    }
    Ok(out)
}

/// Mean and sample standard deviation (n-1 denominator; 0.0 for a single
/// run).
pub fn aggregate_runs(aucs: &[f64]) -> Result<(f64, f64)> {
    if aucs.is_empty() {
        return Err(Error::InvalidArgument("aggregate_runs: empty list".into()));
    }
    let n = aucs.len() as f64;
    let mean = aucs.iter().sum::<f64>() / n;
    let std = if aucs.len() < 2 {
        0.0
    } else {
        let ss: f64 = aucs.iter().map(|a| (a - mean) * (a - mean)).sum();
        (ss / (n - 1.0)).sqrt()
    };
    Ok((mean, std))
}

/// Fraction of paired runs where `a` strictly beats `b`; ties count for
/// neither side.
pub fn win_probability(a_aucs: &[f64], b_aucs: &[f64]) -> Result<f64> {
    if a_aucs.len() != b_aucs.len() {
        return Err(Error::ShapeMismatch(format!(
            "win_probability: {} vs {} runs",
            a_aucs.len(),
            b_aucs.len()
        )));
    }
    if a_aucs.is_empty() {
        return Err(Error::InvalidArgument("win_probability: no runs".into()));
    }
    let wins = a_aucs
        .iter()
        .zip(b_aucs)
        .filter(|(a, b)| a > b)
        .count();
    Ok(wins as f64 / a_aucs.len() as f64)
}

/// Evaluation summary for one method over one or more runs.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub method: String,
    /// AUC of each run, in run order.
    pub run_aucs: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Mean per-class AUC across runs (normal rows vs that class only).
    pub per_class: BTreeMap<u32, f64>,
    /// The resolved configuration this report came from.
    pub config_echo: String,
}

impl EvalReport {
    pub fn new(
        method: impl Into<String>,
        run_aucs: Vec<f64>,
        per_class: BTreeMap<u32, f64>,
        config_echo: impl Into<String>,
    ) -> Result<Self> {
        let (mean, std) = aggregate_runs(&run_aucs)?;
        for (what, value) in run_aucs
            .iter()
            .map(|a| ("run", a))
            .chain(per_class.values().map(|a| ("class", a)))
        {
            if !(0.0..=1.0).contains(value) {
                return Err(Error::InvalidArgument(format!(
                    "{what} auc {value} outside [0,1]"
                )));
            }
        }
        Ok(Self {
            method: method.into(),
            run_aucs,
            mean,
            std,
            per_class,
            config_echo: config_echo.into(),
        })
    }

    pub fn overall_auc(&self) -> f64 {
        self.mean
    }

    /// Structured text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("method: {}\n", self.method));
        out.push_str(&format!("runs: {}\n", self.run_aucs.len()));
        out.push_str(&format!("mean_auc: {}\n", self.mean));
        out.push_str(&format!("std_auc: {}\n", self.std));
        for (i, a) in self.run_aucs.iter().enumerate() {
            out.push_str(&format!("run_{i}_auc: {a}\n"));
        }
        if !self.per_class.is_empty() {
            out.push_str("per_class_auc:\n");
            for (class, a) in &self.per_class {
                out.push_str(&format!("  {class}: {a}\n"));
            }
        }
        if !self.config_echo.is_empty() {
            out.push_str("config:\n");
            for line in self.config_echo.lines() {
                out.push_str(&format!("  {line}\n"));
            }
        }
        out
    }

    /// Flat `class,auc` table.
    pub fn per_class_csv(&self) -> String {
        let mut out = String::from("class,auc\n");
        for (class, a) in &self.per_class {
            out.push_str(&format!("{class},{a}\n"));
        }
        out
    }
}
