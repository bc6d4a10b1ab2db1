//! Semi-supervised anomaly detection with targeted-reconstruction
//! autoencoders.
//!
//! A dense autoencoder is trained so that normal rows reconstruct to
//! themselves while the few labeled anomalies reconstruct to a fixed
//! contrast transform `F(x)`, weighted by λ. At inference the anomaly
//! score is the plain squared reconstruction error, which ends up large
//! for anomalies (seen or unseen) and small for normal data. The crate
//! also ships the standard autoencoder and two-phase negative-training
//! baselines, dataset split protocols, pollution injection, and
//! rank-based AUC evaluation.
//!
//! Everything is deterministic given the configured seeds: one SplitMix64
//! stream drives weight init, shuffling, and row selection, and all
//! floating-point reductions run in a fixed order.

pub mod activation;
pub mod adam;
pub mod data;
pub mod error;
pub mod eval;
pub mod loss;
pub mod model;
pub mod network;
pub mod rng;
pub mod synthetic;
pub mod tensor;
pub mod trainer;

pub use activation::Activation;
pub use adam::{AdamConfig, AdamState};
pub use data::{
    build_odds_split, build_split, inject_pollution, inject_pollution_per_class, load_csv,
    load_idx, normalize_minmax, BuiltSplit, Dataset, MinMaxStats, PollutionSpec, Protocol,
    SplitManifest, SplitSpec,
};
pub use error::{Error, Result};
pub use eval::{
    aggregate_runs, auc, auc_bruteforce, per_class_auc, win_probability, EvalReport,
};
pub use loss::{
    aesad_loss, alpha_grid, apply_f, lambda_schedule, reconstruction_error, target_for, FKind,
    LossConfig,
};
pub use model::ModelFile;
pub use network::{default_widths, Gradients, Network, NetworkSpec};
pub use rng::SplitMix64;
pub use synthetic::{gaussian_blobs, BlobsSpec};
pub use tensor::Tensor;
pub use trainer::{
    fit, score, train, train_neg, train_standard, LambdaSpec, Method, TrainConfig, TrainReport,
};
