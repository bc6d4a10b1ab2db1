//! Seeded synthetic data: two Gaussian blobs inside the unit cube.
//!
//! Normal rows live on a low-dimensional linear manifold: each latent
//! factor drives a fixed group of coordinates, so the population is a
//! correlated Gaussian centered at 0.5. Anomalous rows follow the same
//! factor model with the first factor shifted by `anomaly_shift`, which
//! places them *along* the manifold the autoencoder learns. A plain
//! autoencoder therefore reconstructs them almost as well as normal rows,
//! while the input-space separation between the two blobs stays large.
//! Values are clamped to [0,1].

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct BlobsSpec {
    pub dim: usize,
    /// Latent factor count; must divide evenly into `dim` groups.
    pub factors: usize,
    /// Standard deviation of each latent factor.
    pub factor_sigma: f64,
    /// Per-coordinate additive noise.
    pub noise_sigma: f64,
    /// Mean shift of the first latent factor for anomalous rows.
    pub anomaly_shift: f64,
    pub train_normal: usize,
    pub train_anomaly: usize,
    pub test_normal: usize,
    pub test_anomaly: usize,
    pub seed: u64,
}

impl Default for BlobsSpec {
    fn default() -> Self {
        Self {
            dim: 8,
            factors: 4,
            factor_sigma: 0.12,
            noise_sigma: 0.02,
            anomaly_shift: 0.45,
            train_normal: 2000,
            train_anomaly: 500,
            test_normal: 500,
            test_anomaly: 500,
            seed: 1,
        }
    }
}

/// Build (train_source, test_source) datasets with class ids 0 (normal)
/// and 1 (anomalous); anomaly labels mirror the class ids so both the
/// class protocols and the label-based protocol apply.
pub fn gaussian_blobs(spec: &BlobsSpec) -> Result<(Dataset, Dataset)> {
    if spec.dim == 0 || spec.factors == 0 {
        return Err(Error::InvalidArgument(
            "blobs: dim and factors must be >= 1".into(),
        ));
    }
    if spec.factors > spec.dim {
        return Err(Error::InvalidArgument(format!(
            "blobs: factors {} exceeds dim {}",
            spec.factors, spec.dim
        )));
    }
    if !spec.factor_sigma.is_finite()
        || spec.factor_sigma <= 0.0
        || !spec.noise_sigma.is_finite()
        || spec.noise_sigma < 0.0
    {
        return Err(Error::InvalidArgument(
            "blobs: factor_sigma must be > 0 and noise_sigma >= 0".into(),
        ));
    }

    // Factor j drives coordinates {i : i mod factors == j}, normalized so
    // a unit latent move is a unit move in input space.
    let group_size = |j: usize| (spec.dim - j).div_ceil(spec.factors);
    let loadings: Vec<f64> = (0..spec.factors)
        .map(|j| 1.0 / (group_size(j) as f64).sqrt())
        .collect();

    let mut rng = SplitMix64::new(spec.seed);
    let sample = |rng: &mut SplitMix64, class: u32| -> Vec<f64> {
        let z: Vec<f64> = (0..spec.factors)
            .map(|j| {
                let mean = if class == 1 && j == 0 {
                    spec.anomaly_shift
                } else {
                    0.0
                };
                mean + spec.factor_sigma * rng.standard_normal()
            })
            .collect();
        (0..spec.dim)
            .map(|i| {
                let j = i % spec.factors;
                let v = 0.5 + z[j] * loadings[j] + spec.noise_sigma * rng.standard_normal();
                v.clamp(0.0, 1.0)
            })
            .collect()
    };

    let build = |rng: &mut SplitMix64, normals: usize, anomalies: usize, name: &str| {
        let mut rows = Vec::with_capacity(normals + anomalies);
        let mut ids = Vec::with_capacity(normals + anomalies);
        for _ in 0..normals {
            rows.push(sample(rng, 0));
            ids.push(0u32);
        }
        for _ in 0..anomalies {
            rows.push(sample(rng, 1));
            ids.push(1u32);
        }
        let labels = ids.iter().map(|&c| c as u8).collect();
        Dataset::new(Tensor::from_rows(&rows)?, labels, Some(ids), name)
    };

    let train = build(&mut rng, spec.train_normal, spec.train_anomaly, "blobs")?;
    let test = build(&mut rng, spec.test_normal, spec.test_anomaly, "blobs")?;
    Ok((train, test))
}
