//! Reconstruction-error scoring and the targeted training loss.
//!
//! The anomaly score of a row is its squared reconstruction error
//! `||x - x̂||²`. Training uses a weighted regression form of the same
//! error: normal rows (label 0) regress onto themselves with weight 1,
//! labeled anomalies (label 1) regress onto a fixed contrast transform
//! `F(x)` with weight λ. Pushing anomalies toward `F(x)` instead of `x`
//! makes their reconstruction error large at scoring time.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The fixed contrast transforms, all mapping [0,1]^d onto itself
/// element-wise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FKind {
    /// Complement `1 - x`: the negative image.
    F0,
    /// Indicator of `[0, 1/2]`: snaps each value to the far end of the
    /// unit interval, maximizing the per-component gap `max(x, 1-x)`.
    F1,
    /// Half shift `x ± 1/2`: the gap is exactly 1/2 in every component.
    F2,
}

impl FKind {
    /// Apply to a single component. Assumes `v` is already validated to
    /// lie in [0,1]. The boundary v = 1/2 belongs to the lower branch.
    #[inline]
    pub fn apply_scalar(self, v: f64) -> f64 {
        match self {
            FKind::F0 => 1.0 - v,
            FKind::F1 => {
                if v <= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            FKind::F2 => {
                if v <= 0.5 {
                    v + 0.5
                } else {
                    v - 0.5
                }
            }
        }
    }
}

impl fmt::Display for FKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FKind::F0 => "f0",
            FKind::F1 => "f1",
            FKind::F2 => "f2",
        };
        f.write_str(name)
    }
}

impl FromStr for FKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f0" => Ok(FKind::F0),
            "f1" => Ok(FKind::F1),
            "f2" => Ok(FKind::F2),
            other => Err(Error::InvalidArgument(format!(
                "unknown f_kind `{other}` (expected f0|f1|f2)"
            ))),
        }
    }
}

/// Anomaly weight and contrast transform used by the targeted loss.
#[derive(Debug, Clone, Copy)]
pub struct LossConfig {
    pub lambda: f64,
    pub f_kind: FKind,
}

impl LossConfig {
    pub fn new(lambda: f64, f_kind: FKind) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "lambda must be a finite nonnegative real, got {lambda}"
            )));
        }
        Ok(Self { lambda, f_kind })
    }
}

fn check_unit_interval(x: &[f64]) -> Result<()> {
    for (i, &v) in x.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!(
                "component {i} = {v} outside [0,1]"
            )));
        }
    }
    Ok(())
}

fn check_label(y: u8) -> Result<()> {
    if y > 1 {
        return Err(Error::InvalidArgument(format!(
            "label must be 0 or 1, got {y}"
        )));
    }
    Ok(())
}

/// Element-wise contrast transform of a vector in [0,1]^d.
pub fn apply_f(kind: FKind, x: &[f64]) -> Result<Vec<f64>> {
    check_unit_interval(x)?;
    Ok(x.iter().map(|&v| kind.apply_scalar(v)).collect())
}

/// Squared reconstruction error `Σ (xᵢ - x̂ᵢ)²`; this is the anomaly score.
pub fn reconstruction_error(x: &[f64], xhat: &[f64]) -> Result<f64> {
    if x.len() != xhat.len() {
        return Err(Error::ShapeMismatch(format!(
            "reconstruction_error: lengths {} vs {}",
            x.len(),
            xhat.len()
        )));
    }
    Ok(x.iter()
        .zip(xhat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// Per-row training loss: `(1-y)·||x - x̂||² + λ·y·||F(x) - x̂||²`.
pub fn aesad_loss(x: &[f64], xhat: &[f64], y: u8, cfg: &LossConfig) -> Result<f64> {
    check_label(y)?;
    if y == 0 {
        reconstruction_error(x, xhat)
    } else {
        let target = apply_f(cfg.f_kind, x)?;
        Ok(cfg.lambda * reconstruction_error(&target, xhat)?)
    }
}

/// Regression form of [`aesad_loss`]: returns the target vector and row
/// weight such that the loss equals `weight · ||target - x̂||²` for every x̂.
pub fn target_for(x: &[f64], y: u8, kind: FKind, lambda: f64) -> Result<(Vec<f64>, f64)> {
    check_label(y)?;
    if y == 0 {
        check_unit_interval(x)?;
        Ok((x.to_vec(), 1.0))
    } else {
        Ok((apply_f(kind, x)?, lambda))
    }
}

/// λ(α) = 1 + α(n/s - 1): interpolates the anomaly weight between 1
/// (α = 0, each anomaly counts like one inlier) and n/s (α = 1, the s
/// anomalies together weigh as much as the n inliers). α may exceed 1,
/// in which case anomalies weigh more than inliers globally.
pub fn lambda_schedule(alpha: f64, n: usize, s: usize) -> Result<f64> {
    if s == 0 {
        return Err(Error::InvalidArgument(
            "lambda_schedule: s = 0 leaves the anomaly weight undefined".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "lambda_schedule: need at least one normal row".into(),
        ));
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda_schedule: alpha must be finite and >= 0, got {alpha}"
        )));
    }
    Ok(1.0 + alpha * (n as f64 / s as f64 - 1.0))
}

/// `k` log-spaced values from `lo` to `hi` inclusive (geometric progression).
pub fn alpha_grid(lo: f64, hi: f64, k: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "alpha_grid: need 0 < lo < hi, got lo={lo} hi={hi}"
        )));
    }
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "alpha_grid: need k >= 2, got {k}"
        )));
    }
    let ratio = hi / lo;
    let mut grid = Vec::with_capacity(k);
    grid.push(lo);
    for i in 1..k - 1 {
        grid.push(lo * ratio.powf(i as f64 / (k - 1) as f64));
    }
    grid.push(hi);
    Ok(grid)
}
