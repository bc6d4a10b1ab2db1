//! Dataset ingestion, min-max normalization, semi-supervised split
//! construction, and pollution injection.
//!
//! Label semantics everywhere: 0 = normal, 1 = anomaly. `class_ids`
//! optionally carry the original multi-class labels (e.g. digit classes)
//! that the split protocols partition into normal, seen-anomalous, and
//! unseen-anomalous groups.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Tensor,
    pub labels: Vec<u8>,
    pub class_ids: Option<Vec<u32>>,
    pub name: String,
}

impl Dataset {
    pub fn new(
        features: Tensor,
        labels: Vec<u8>,
        class_ids: Option<Vec<u32>>,
        name: impl Into<String>,
    ) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::Data(format!(
                "{} labels for {} rows",
                labels.len(),
                features.rows()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::Data(format!("label {bad} outside {{0,1}}")));
        }
        if let Some(ids) = &class_ids {
            if ids.len() != features.rows() {
                return Err(Error::Data(format!(
                    "{} class ids for {} rows",
                    ids.len(),
                    features.rows()
                )));
            }
        }
        Ok(Self {
            features,
            labels,
            class_ids,
            name: name.into(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// (normal count, anomaly count)
    pub fn label_counts(&self) -> (usize, usize) {
        let ones = self.labels.iter().filter(|&&y| y == 1).count();
        (self.labels.len() - ones, ones)
    }

    pub fn indices_with_label(&self, label: u8) -> Vec<usize> {
        (0..self.n_rows())
            .filter(|&i| self.labels[i] == label)
            .collect()
    }

    /// Classes present, sorted.
    pub fn classes(&self) -> Result<Vec<u32>> {
        let ids = self
            .class_ids
            .as_ref()
            .ok_or_else(|| Error::Data(format!("dataset `{}` has no class ids", self.name)))?;
        let set: BTreeSet<u32> = ids.iter().copied().collect();
        Ok(set.into_iter().collect())
    }

    /// New dataset from the given rows, with labels overridden where
    /// `relabel` is provided.
    pub fn select(&self, indices: &[usize], relabel: Option<u8>) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: match relabel {
                Some(y) => vec![y; indices.len()],
                None => indices.iter().map(|&i| self.labels[i]).collect(),
            },
            class_ids: self
                .class_ids
                .as_ref()
                .map(|ids| indices.iter().map(|&i| ids[i]).collect()),
            name: self.name.clone(),
        }
    }

    /// Row-wise concatenation. Class ids survive only if both sides have them.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch(format!(
                "concat: {} vs {} columns",
                self.dim(),
                other.dim()
            )));
        }
        let mut values = self.features.values().to_vec();
        values.extend_from_slice(other.features.values());
        let features = Tensor::from_vec(self.n_rows() + other.n_rows(), self.dim(), values)?;
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let class_ids = match (&self.class_ids, &other.class_ids) {
            (Some(a), Some(b)) => {
                let mut ids = a.clone();
                ids.extend_from_slice(b);
                Some(ids)
            }
            _ => None,
        };
        Dataset::new(features, labels, class_ids, self.name.clone())
    }

    /// Check every feature value sits inside [0,1]; the training targets
    /// are only defined on that cube.
    pub fn check_unit_range(&self) -> Result<()> {
        for (i, &v) in self.features.values().iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Data(format!(
                    "dataset `{}`: value {v} at flat index {i} outside [0,1]; normalize first",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

/// Load a headered CSV with one {0,1} label column and an optional
/// original-class column; every other column must be numeric and becomes a
/// feature, in file order. No normalization is applied here.
pub fn load_csv(path: &Path, label_column: &str, class_column: Option<&str>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .clone();

    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Data(format!("missing label column `{label_column}`")))?;
    let class_idx = match class_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Data(format!("missing class column `{name}`")))?,
        ),
        None => None,
    };
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&i| i != label_idx && Some(i) != class_idx)
        .collect();
    if feature_idx.is_empty() {
        return Err(Error::Data("no feature columns".into()));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut class_ids = class_idx.map(|_| Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let mut row = Vec::with_capacity(feature_idx.len());
        for &i in &feature_idx {
            let cell = &record[i];
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::Data(format!(
                    "row {line}, column `{}`: non-numeric cell `{cell}`",
                    &headers[i]
                ))
            })?;
            row.push(v);
        }
        let label_cell = record[label_idx].trim();
        let label: f64 = label_cell.parse().map_err(|_| {
            Error::Data(format!("row {line}: non-numeric label `{label_cell}`"))
        })?;
        let label = if label == 0.0 {
            0u8
        } else if label == 1.0 {
            1u8
        } else {
            return Err(Error::Data(format!(
                "row {line}: label {label} outside {{0,1}}"
            )));
        };
        if let (Some(ids), Some(ci)) = (&mut class_ids, class_idx) {
            let cell = record[ci].trim();
            let parsed = cell
                .parse::<u32>()
                .or_else(|_| {
                    cell.parse::<f64>()
                        .map_err(|_| ())
                        .and_then(|v| {
                            if v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64 {
                                Ok(v as u32)
                            } else {
                                Err(())
                            }
                        })
                })
                .map_err(|_| {
                    Error::Data(format!("row {line}: class id `{cell}` is not an integer"))
                })?;
            ids.push(parsed);
        }
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    Dataset::new(Tensor::from_rows(&rows)?, labels, class_ids, name)
}

// ---------------------------------------------------------------------------
// IDX ingestion
// ---------------------------------------------------------------------------

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32_be(reader: &mut impl Read, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader
        .read_exact(&mut buf)
        .map_err(|e| Error::Data(format!("reading {what}: {e}")))?;
    Ok(u32::from_be_bytes(buf))
}

/// Load an IDX image/label file pair (the classic big-endian layout).
/// Images are flattened row-major to d = rows×cols with pixels scaled to
/// [0,1]; the byte labels become `class_ids` and the {0,1} anomaly labels
/// are all 0 until a split protocol assigns them.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let mut images = BufReader::new(
        File::open(images_path)
            .map_err(|e| Error::Data(format!("{}: {e}", images_path.display())))?,
    );
    let magic = read_u32_be(&mut images, "image magic")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Data(format!(
            "{}: bad image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}",
            images_path.display()
        )));
    }
    let n = read_u32_be(&mut images, "image count")? as usize;
    let rows = read_u32_be(&mut images, "image rows")? as usize;
    let cols = read_u32_be(&mut images, "image cols")? as usize;
    let mut pixels = vec![0u8; n * rows * cols];
    images
        .read_exact(&mut pixels)
        .map_err(|e| Error::Data(format!("{}: truncated image data: {e}", images_path.display())))?;

    let mut labels = BufReader::new(
        File::open(labels_path)
            .map_err(|e| Error::Data(format!("{}: {e}", labels_path.display())))?,
    );
    let magic = read_u32_be(&mut labels, "label magic")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Data(format!(
            "{}: bad label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}",
            labels_path.display()
        )));
    }
    let n_labels = read_u32_be(&mut labels, "label count")? as usize;
    if n_labels != n {
        return Err(Error::Data(format!(
            "{n} images but {n_labels} labels"
        )));
    }
    let mut classes = vec![0u8; n];
    labels
        .read_exact(&mut classes)
        .map_err(|e| Error::Data(format!("{}: truncated labels: {e}", labels_path.display())))?;

    let features: Vec<f64> = pixels.iter().map(|&p| p as f64 / 255.0).collect();
    let name = images_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".into());
    Dataset::new(
        Tensor::from_vec(n, rows * cols, features)?,
        vec![0u8; n],
        Some(classes.into_iter().map(u32::from).collect()),
        name,
    )
}

// ---------------------------------------------------------------------------
// Min-max normalization
// ---------------------------------------------------------------------------

/// Per-feature (min, max) fitted on a training subset.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxStats {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl MinMaxStats {
    pub fn fit(dataset: &Dataset, fit_rows: &[usize]) -> Result<Self> {
        if fit_rows.is_empty() {
            return Err(Error::InvalidArgument(
                "normalize_minmax: empty fit set".into(),
            ));
        }
        let d = dataset.dim();
        let mut mins = vec![f64::INFINITY; d];
        let mut maxs = vec![f64::NEG_INFINITY; d];
        for &r in fit_rows {
            for (c, &v) in dataset.features.row(r).iter().enumerate() {
                mins[c] = mins[c].min(v);
                maxs[c] = maxs[c].max(v);
            }
        }
        Ok(Self { mins, maxs })
    }

    /// (v - min) / (max - min), clamped to [0,1] for values outside the
    /// fitted range; constant features map to 0.5.
    pub fn transform(&self, dataset: &Dataset) -> Result<Dataset> {
        if dataset.dim() != self.mins.len() {
            return Err(Error::ShapeMismatch(format!(
                "stats fitted on {} features, dataset has {}",
                self.mins.len(),
                dataset.dim()
            )));
        }
        let mut out = dataset.clone();
        let d = dataset.dim();
        for r in 0..out.features.rows() {
            let row = out.features.row_mut(r);
            for (c, v) in row.iter_mut().enumerate().take(d) {
                let range = self.maxs[c] - self.mins[c];
                *v = if range == 0.0 {
                    0.5
                } else {
                    ((*v - self.mins[c]) / range).clamp(0.0, 1.0)
                };
            }
        }
        Ok(out)
    }
}

/// Fit on `fit_rows` and transform the whole dataset.
pub fn normalize_minmax(dataset: &Dataset, fit_rows: &[usize]) -> Result<(Dataset, MinMaxStats)> {
    let stats = MinMaxStats::fit(dataset, fit_rows)?;
    Ok((stats.transform(dataset)?, stats))
}

// ---------------------------------------------------------------------------
// Split protocols
// ---------------------------------------------------------------------------

/// How normal and seen-anomalous classes are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    OneVsOne,
    OneVsMany,
    OneVsAll,
    ManyVsMany,
    /// Label-based 60/40 split with anomalies at 5% of the training set;
    /// use [`build_odds_split`].
    Odds,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Protocol::OneVsOne => "one-vs-one",
            Protocol::OneVsMany => "one-vs-many",
            Protocol::OneVsAll => "one-vs-all",
            Protocol::ManyVsMany => "many-vs-many",
            Protocol::Odds => "odds",
        };
        f.write_str(name)
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-vs-one" => Ok(Protocol::OneVsOne),
            "one-vs-many" => Ok(Protocol::OneVsMany),
            "one-vs-all" => Ok(Protocol::OneVsAll),
            "many-vs-many" => Ok(Protocol::ManyVsMany),
            "odds" => Ok(Protocol::Odds),
            other => Err(Error::InvalidArgument(format!(
                "unknown protocol `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SplitSpec {
    pub protocol: Protocol,
    pub normal_classes: BTreeSet<u32>,
    pub seen_anomaly_classes: BTreeSet<u32>,
    /// Number of labeled anomalies pooled across seen classes.
    pub s: usize,
    /// When set, pick exactly this many labeled anomalies from each seen
    /// class instead of pooling `s`.
    pub per_class_quota: Option<usize>,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.normal_classes.is_disjoint(&self.seen_anomaly_classes) {
            return Err(Error::Data(format!(
                "normal classes {:?} overlap seen anomaly classes {:?}",
                self.normal_classes, self.seen_anomaly_classes
            )));
        }
        match self.protocol {
            Protocol::OneVsOne => {
                if self.normal_classes.len() != 1 || self.seen_anomaly_classes.len() != 1 {
                    return Err(Error::Data(
                        "one-vs-one needs exactly one normal and one seen anomalous class".into(),
                    ));
                }
            }
            Protocol::OneVsMany | Protocol::OneVsAll => {
                if self.normal_classes.len() != 1 {
                    return Err(Error::Data(format!(
                        "{} needs exactly one normal class",
                        self.protocol
                    )));
                }
            }
            Protocol::ManyVsMany => {
                if self.normal_classes.is_empty() {
                    return Err(Error::Data("many-vs-many needs normal classes".into()));
                }
            }
            Protocol::Odds => {
                return Err(Error::Data(
                    "odds protocol splits by label; use build_odds_split".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Audit record: which source rows went where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitManifest {
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

impl SplitManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(12 * (self.train_rows.len() + self.test_rows.len()));
        for i in &self.train_rows {
            out.push_str("train ");
            out.push_str(&i.to_string());
            out.push('\n');
        }
        for i in &self.test_rows {
            out.push_str("test ");
            out.push_str(&i.to_string());
            out.push('\n');
        }
        out
    }

    /// FNV-1a 64 over the text form; two splits with equal digests selected
    /// identical rows.
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_text().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

#[derive(Debug, Clone)]
pub struct BuiltSplit {
    pub train: Dataset,
    pub test: Dataset,
    pub manifest: SplitManifest,
    /// Seen-class training rows that were *not* picked as labeled
    /// anomalies; the pollution pool.
    pub leftover_seen_pool: Dataset,
}

/// Build a class-protocol split: train = every normal-class row of
/// `train_source` (label 0) plus seeded anomaly picks from the seen
/// classes (label 1); test = all of `test_source` with labels assigned by
/// class membership.
pub fn build_split(
    train_source: &Dataset,
    test_source: &Dataset,
    spec: &SplitSpec,
) -> Result<BuiltSplit> {
    let mut spec = spec.clone();
    let train_classes: BTreeSet<u32> = train_source.classes()?.into_iter().collect();
    if spec.protocol == Protocol::OneVsAll {
        let complement: BTreeSet<u32> = train_classes
            .difference(&spec.normal_classes)
            .copied()
            .collect();
        if spec.seen_anomaly_classes.is_empty() {
            spec.seen_anomaly_classes = complement;
        } else if spec.seen_anomaly_classes != complement {
            return Err(Error::Data(format!(
                "one-vs-all expects seen classes {:?}, got {:?}",
                complement, spec.seen_anomaly_classes
            )));
        }
    }
    spec.validate()?;
    for class in spec.normal_classes.iter().chain(&spec.seen_anomaly_classes) {
        if !train_classes.contains(class) {
            return Err(Error::Data(format!(
                "class {class} not present in `{}`",
                train_source.name
            )));
        }
    }

    let ids = train_source.class_ids.as_ref().expect("checked by classes()");
    let normal_rows: Vec<usize> = (0..train_source.n_rows())
        .filter(|&i| spec.normal_classes.contains(&ids[i]))
        .collect();

    // Labeled anomaly selection, either pooled or via per-class quotas.
    let mut rng = SplitMix64::new(spec.seed);
    let mut picked: Vec<usize> = Vec::new();
    if let Some(quota) = spec.per_class_quota {
        for &class in &spec.seen_anomaly_classes {
            let pool: Vec<usize> = (0..train_source.n_rows())
                .filter(|&i| ids[i] == class)
                .collect();
            if quota > pool.len() {
                return Err(Error::Data(format!(
                    "per-class quota {quota} exceeds the {} rows of class {class}",
                    pool.len()
                )));
            }
            let choice = rng.sample_indices(pool.len(), quota);
            picked.extend(choice.into_iter().map(|k| pool[k]));
        }
    } else {
        let pool: Vec<usize> = (0..train_source.n_rows())
            .filter(|&i| spec.seen_anomaly_classes.contains(&ids[i]))
            .collect();
        if spec.s > pool.len() {
            return Err(Error::Data(format!(
                "s = {} exceeds the {} available seen-anomaly rows",
                spec.s,
                pool.len()
            )));
        }
        let choice = rng.sample_indices(pool.len(), spec.s);
        picked.extend(choice.into_iter().map(|k| pool[k]));
    }
    picked.sort_unstable();

    let picked_set: BTreeSet<usize> = picked.iter().copied().collect();
    let leftover: Vec<usize> = (0..train_source.n_rows())
        .filter(|&i| spec.seen_anomaly_classes.contains(&ids[i]) && !picked_set.contains(&i))
        .collect();

    let train = train_source
        .select(&normal_rows, Some(0))
        .concat(&train_source.select(&picked, Some(1)))?;
    let mut train_rows = normal_rows;
    train_rows.extend(&picked);

    let test_rows: Vec<usize> = (0..test_source.n_rows()).collect();
    let test_ids = test_source
        .class_ids
        .as_ref()
        .ok_or_else(|| Error::Data(format!("test set `{}` has no class ids", test_source.name)))?;
    let test_labels: Vec<u8> = test_ids
        .iter()
        .map(|c| u8::from(!spec.normal_classes.contains(c)))
        .collect();
    let test = Dataset::new(
        test_source.features.clone(),
        test_labels,
        test_source.class_ids.clone(),
        format!("{}:test", test_source.name),
    )?;

    let mut train = train;
    train.name = format!("{}:train", train_source.name);

    Ok(BuiltSplit {
        train,
        test,
        manifest: SplitManifest {
            train_rows,
            test_rows,
        },
        leftover_seen_pool: train_source.select(&leftover, Some(1)),
    })
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Label-based split for tabular anomaly datasets: a seeded 60% of the
/// normal rows go to training, anomalies are added until they make up 5%
/// of the resulting training set (round-half-up on 0.05/0.95 × normals,
/// clamped to the available pool), and everything else goes to the test
/// set.
pub fn build_odds_split(dataset: &Dataset, seed: u64) -> Result<BuiltSplit> {
    let normals = dataset.indices_with_label(0);
    let anomalies = dataset.indices_with_label(1);
    if anomalies.is_empty() {
        return Err(Error::Data(format!(
            "`{}` has no anomalies to split",
            dataset.name
        )));
    }
    if normals.is_empty() {
        return Err(Error::Data(format!(
            "`{}` has no normal rows to split",
            dataset.name
        )));
    }

    let mut rng = SplitMix64::new(seed);
    let n_train_normals = round_half_up(0.6 * normals.len() as f64);
    let norm_choice = rng.sample_indices(normals.len(), n_train_normals);
    let train_normals: Vec<usize> = norm_choice.iter().map(|&k| normals[k]).collect();

    let want = round_half_up(0.05 / 0.95 * n_train_normals as f64).min(anomalies.len());
    let anom_choice = rng.sample_indices(anomalies.len(), want);
    let train_anoms: Vec<usize> = anom_choice.iter().map(|&k| anomalies[k]).collect();

    let in_train: BTreeSet<usize> = train_normals
        .iter()
        .chain(&train_anoms)
        .copied()
        .collect();
    let test_rows: Vec<usize> = (0..dataset.n_rows())
        .filter(|i| !in_train.contains(i))
        .collect();

    let mut train_rows = train_normals;
    train_rows.extend(&train_anoms);
    let train = dataset.select(&train_rows, None);
    let test = dataset.select(&test_rows, None);

    Ok(BuiltSplit {
        train: Dataset {
            name: format!("{}:train", dataset.name),
            ..train
        },
        test: Dataset {
            name: format!("{}:test", dataset.name),
            ..test
        },
        manifest: SplitManifest {
            train_rows,
            test_rows,
        },
        leftover_seen_pool: dataset.select(&[], Some(1)),
    })
}

// ---------------------------------------------------------------------------
// Pollution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct PollutionSpec {
    /// Mislabeled anomalies as a fraction of the inlier count.
    pub rate: f64,
    pub seed: u64,
}

/// Inject mislabeled anomalies: `round(rate × n_inliers)` rows drawn from
/// `anomaly_pool` are appended to `train` with label 0. The pool must be
/// disjoint from the training rows (guaranteed when it is the leftover
/// pool of [`build_split`]).
pub fn inject_pollution(
    train: &Dataset,
    anomaly_pool: &Dataset,
    spec: &PollutionSpec,
) -> Result<(Dataset, Vec<usize>)> {
    if !spec.rate.is_finite() || spec.rate < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "pollution rate must be finite and >= 0, got {}",
            spec.rate
        )));
    }
    let (n_inliers, _) = train.label_counts();
    let count = round_half_up(spec.rate * n_inliers as f64);
    if count == 0 {
        return Ok((train.clone(), Vec::new()));
    }
    if count > anomaly_pool.n_rows() {
        return Err(Error::Data(format!(
            "pollution needs {count} rows but the pool has {}",
            anomaly_pool.n_rows()
        )));
    }
    let mut rng = SplitMix64::new(spec.seed);
    let picked = rng.sample_indices(anomaly_pool.n_rows(), count);
    let polluted = train.concat(&anomaly_pool.select(&picked, Some(0)))?;
    Ok((polluted, picked))
}

/// Per-class variant: draw a fixed number of mislabeled rows from each
/// class present in the pool.
pub fn inject_pollution_per_class(
    train: &Dataset,
    anomaly_pool: &Dataset,
    per_class: usize,
    seed: u64,
) -> Result<(Dataset, Vec<usize>)> {
    if per_class == 0 {
        return Ok((train.clone(), Vec::new()));
    }
    let classes = anomaly_pool.classes()?;
    let ids = anomaly_pool.class_ids.as_ref().expect("classes() checked");
    let mut rng = SplitMix64::new(seed);
    let mut picked = Vec::new();
    for class in classes {
        let pool: Vec<usize> = (0..anomaly_pool.n_rows())
            .filter(|&i| ids[i] == class)
            .collect();
        if per_class > pool.len() {
            return Err(Error::Data(format!(
                "pollution needs {per_class} rows of class {class} but the pool has {}",
                pool.len()
            )));
        }
        let choice = rng.sample_indices(pool.len(), per_class);
        picked.extend(choice.into_iter().map(|k| pool[k]));
    }
    picked.sort_unstable();
    let polluted = train.concat(&anomaly_pool.select(&picked, Some(0)))?;
    Ok((polluted, picked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn class_dataset(counts: &[(u32, usize)], seed: u64) -> Dataset {
        let mut rng = SplitMix64::new(seed);
        let mut rows = Vec::new();
        let mut ids = Vec::new();
        for &(class, n) in counts {
            for _ in 0..n {
                rows.push(vec![rng.next_f64(), rng.next_f64(), rng.next_f64()]);
                ids.push(class);
            }
        }
        let n = rows.len();
        Dataset::new(
            Tensor::from_rows(&rows).unwrap(),
            vec![0; n],
            Some(ids),
            "toy",
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_with_class_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "a,b,label,class").unwrap();
        writeln!(f, "1.0,2.0,0,3").unwrap();
        writeln!(f, "3.5,4.0,1,7").unwrap();
        writeln!(f, "5.0,6.5,0,3").unwrap();
        drop(f);

        let ds = load_csv(&path, "label", Some("class")).unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.class_ids, Some(vec![3, 7, 3]));
        assert_eq!(ds.features.row(1), &[3.5, 4.0]);

        let no_class = load_csv(&path, "label", None).unwrap();
        assert_eq!(no_class.dim(), 3); // class column becomes a feature
    }

    #[test]
    fn csv_rejects_bad_labels_and_cells() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,label\n1.0,2\n").unwrap();
        assert!(load_csv(&path, "label", None).is_err());

        std::fs::write(&path, "a,label\noops,1\n").unwrap();
        assert!(load_csv(&path, "label", None).is_err());

        std::fs::write(&path, "a,label\n").unwrap();
        assert!(load_csv(&path, "label", None).is_err());

        std::fs::write(&path, "a,label\n1.0,1\n").unwrap();
        assert!(load_csv(&path, "missing", None).is_err());
    }

    fn write_idx_pair(dir: &Path, images: &[Vec<u8>], labels: &[u8], h: u32, w: u32) -> (std::path::PathBuf, std::path::PathBuf) {
        let ipath = dir.join("imgs-idx3-ubyte");
        let lpath = dir.join("labs-idx1-ubyte");
        let mut f = File::create(&ipath).unwrap();
        f.write_all(&IDX_IMAGES_MAGIC.to_be_bytes()).unwrap();
        f.write_all(&(images.len() as u32).to_be_bytes()).unwrap();
        f.write_all(&h.to_be_bytes()).unwrap();
        f.write_all(&w.to_be_bytes()).unwrap();
        for img in images {
            f.write_all(img).unwrap();
        }
        drop(f);
        let mut f = File::create(&lpath).unwrap();
        f.write_all(&IDX_LABELS_MAGIC.to_be_bytes()).unwrap();
        f.write_all(&(labels.len() as u32).to_be_bytes()).unwrap();
        f.write_all(labels).unwrap();
        drop(f);
        (ipath, lpath)
    }

    #[test]
    fn idx_pair_loads_and_scales() {
        let dir = tempfile::tempdir().unwrap();
        let imgs = vec![vec![0u8, 255, 128, 64], vec![255u8, 0, 0, 0]];
        let (ipath, lpath) = write_idx_pair(dir.path(), &imgs, &[7, 2], 2, 2);
        let ds = load_idx(&ipath, &lpath).unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.dim(), 4);
        assert_eq!(ds.class_ids, Some(vec![7, 2]));
        assert_eq!(ds.features.get(0, 0), 0.0);
        assert_eq!(ds.features.get(0, 1), 1.0);
        assert!((ds.features.get(0, 2) - 128.0 / 255.0).abs() < 1e-15);
    }

    #[test]
    fn idx_rejects_bad_magic_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let imgs = vec![vec![1u8, 2, 3, 4]];
        let (ipath, lpath) = write_idx_pair(dir.path(), &imgs, &[1], 2, 2);

        // corrupt the image magic
        let mut bytes = std::fs::read(&ipath).unwrap();
        bytes[3] = 0x99;
        let bad = dir.path().join("badmagic");
        std::fs::write(&bad, &bytes).unwrap();
        assert!(load_idx(&bad, &lpath).is_err());

        // truncate the pixel payload
        let bytes = std::fs::read(&ipath).unwrap();
        let trunc = dir.path().join("trunc");
        std::fs::write(&trunc, &bytes[..bytes.len() - 2]).unwrap();
        assert!(load_idx(&trunc, &lpath).is_err());

        // mismatched counts
        let (ipath2, _) = write_idx_pair(dir.path(), &imgs, &[1], 2, 2);
        let lpath2 = {
            let p = dir.path().join("two-labels");
            let mut f = File::create(&p).unwrap();
            f.write_all(&IDX_LABELS_MAGIC.to_be_bytes()).unwrap();
            f.write_all(&2u32.to_be_bytes()).unwrap();
            f.write_all(&[1, 2]).unwrap();
            p
        };
        assert!(load_idx(&ipath2, &lpath2).is_err());
    }

    #[test]
    fn minmax_basic_constant_and_clamp() {
        let ds = Dataset::new(
            Tensor::from_rows(&[vec![2.0, 5.0], vec![4.0, 5.0], vec![6.0, 5.0]]).unwrap(),
            vec![0, 0, 1],
            None,
            "t",
        )
        .unwrap();
        let (norm, stats) = normalize_minmax(&ds, &[0, 1, 2]).unwrap();
        assert_eq!(norm.features.row(0)[0], 0.0);
        assert_eq!(norm.features.row(1)[0], 0.5);
        assert_eq!(norm.features.row(2)[0], 1.0);
        // constant column maps to 0.5 everywhere
        assert!(norm.features.values().iter().skip(1).step_by(2).all(|&v| v == 0.5));

        // out-of-range test value clamps
        let test = Dataset::new(
            Tensor::from_rows(&[vec![60.0, 5.0], vec![-10.0, 5.0]]).unwrap(),
            vec![1, 0],
            None,
            "t2",
        )
        .unwrap();
        let out = stats.transform(&test).unwrap();
        assert_eq!(out.features.row(0)[0], 1.0);
        assert_eq!(out.features.row(1)[0], 0.0);

        assert!(MinMaxStats::fit(&ds, &[]).is_err());
    }

    #[test]
    fn build_split_counts_and_labels() {
        let train_src = class_dataset(&[(8, 50), (1, 30), (3, 30), (5, 30), (9, 30), (2, 20)], 1);
        let test_src = class_dataset(&[(8, 10), (1, 5), (2, 5)], 2);
        let spec = SplitSpec {
            protocol: Protocol::OneVsMany,
            normal_classes: [8].into(),
            seen_anomaly_classes: [1, 3, 5, 9].into(),
            s: 25,
            per_class_quota: None,
            seed: 11,
        };
        let built = build_split(&train_src, &test_src, &spec).unwrap();
        assert_eq!(built.train.n_rows(), 50 + 25);
        let (n0, n1) = built.train.label_counts();
        assert_eq!((n0, n1), (50, 25));
        // test keeps every row; labels by class membership
        assert_eq!(built.test.n_rows(), 20);
        let (t0, t1) = built.test.label_counts();
        assert_eq!((t0, t1), (10, 10));
        // leftover pool holds the unpicked seen rows
        assert_eq!(built.leftover_seen_pool.n_rows(), 120 - 25);
        // no unseen class leaks into training
        let ids = built.train.class_ids.as_ref().unwrap();
        assert!(ids.iter().all(|&c| c != 2));

        // determinism
        let again = build_split(&train_src, &test_src, &spec).unwrap();
        assert_eq!(built.manifest, again.manifest);
        assert_eq!(built.manifest.digest(), again.manifest.digest());
        let other_seed = build_split(
            &train_src,
            &test_src,
            &SplitSpec {
                seed: 12,
                ..spec.clone()
            },
        )
        .unwrap();
        assert_ne!(built.manifest, other_seed.manifest);
    }

    #[test]
    fn build_split_zero_s_and_errors() {
        let train_src = class_dataset(&[(0, 20), (1, 10)], 3);
        let test_src = class_dataset(&[(0, 5), (1, 5)], 4);
        let mut spec = SplitSpec {
            protocol: Protocol::OneVsOne,
            normal_classes: [0].into(),
            seen_anomaly_classes: [1].into(),
            s: 0,
            per_class_quota: None,
            seed: 0,
        };
        let built = build_split(&train_src, &test_src, &spec).unwrap();
        assert_eq!(built.train.label_counts(), (20, 0));

        spec.s = 11; // pool has only 10
        assert!(build_split(&train_src, &test_src, &spec).is_err());

        spec.s = 1;
        spec.seen_anomaly_classes = [0].into(); // overlap
        assert!(build_split(&train_src, &test_src, &spec).is_err());

        spec.seen_anomaly_classes = [9].into(); // absent class
        assert!(build_split(&train_src, &test_src, &spec).is_err());
    }

    #[test]
    fn one_vs_all_autofills_seen_classes() {
        let train_src = class_dataset(&[(0, 10), (1, 10), (2, 10)], 5);
        let test_src = class_dataset(&[(0, 3), (1, 3), (2, 3)], 6);
        let spec = SplitSpec {
            protocol: Protocol::OneVsAll,
            normal_classes: [1].into(),
            seen_anomaly_classes: BTreeSet::new(),
            s: 4,
            per_class_quota: None,
            seed: 9,
        };
        let built = build_split(&train_src, &test_src, &spec).unwrap();
        let ids = built.train.class_ids.as_ref().unwrap();
        let anomaly_classes: BTreeSet<u32> = ids
            .iter()
            .zip(&built.train.labels)
            .filter(|(_, &y)| y == 1)
            .map(|(&c, _)| c)
            .collect();
        assert!(anomaly_classes.is_subset(&[0u32, 2].into()));
    }

    #[test]
    fn per_class_quota_selection() {
        let train_src = class_dataset(&[(0, 20), (1, 15), (2, 15)], 7);
        let test_src = class_dataset(&[(0, 5), (1, 5), (2, 5)], 8);
        let spec = SplitSpec {
            protocol: Protocol::OneVsMany,
            normal_classes: [0].into(),
            seen_anomaly_classes: [1, 2].into(),
            s: 0,
            per_class_quota: Some(2),
            seed: 3,
        };
        let built = build_split(&train_src, &test_src, &spec).unwrap();
        let ids = built.train.class_ids.as_ref().unwrap();
        for class in [1u32, 2] {
            let picked = ids
                .iter()
                .zip(&built.train.labels)
                .filter(|(&c, &y)| c == class && y == 1)
                .count();
            assert_eq!(picked, 2);
        }
    }

    #[test]
    fn odds_split_proportions() {
        let mut ds = class_dataset(&[(0, 1000), (1, 100)], 13);
        ds.labels = ds
            .class_ids
            .as_ref()
            .unwrap()
            .iter()
            .map(|&c| u8::from(c == 1))
            .collect();

        let built = build_odds_split(&ds, 5).unwrap();
        let (n0, n1) = built.train.label_counts();
        assert_eq!(n0, 600);
        // round-half-up(600 · 0.05/0.95) = round-half-up(31.578…) = 32
        assert_eq!(n1, 32);
        let (t0, t1) = built.test.label_counts();
        assert_eq!((t0, t1), (400, 68));
        assert_eq!(built.train.n_rows() + built.test.n_rows(), 1100);

        // anomalies are about 5% of the training set
        let frac = n1 as f64 / built.train.n_rows() as f64;
        assert!((frac - 0.05).abs() < 0.005, "anomaly fraction {frac}");

        // determinism
        let again = build_odds_split(&ds, 5).unwrap();
        assert_eq!(built.manifest, again.manifest);

        // no overlap between train and test
        let train_set: BTreeSet<usize> = built.manifest.train_rows.iter().copied().collect();
        assert!(built.manifest.test_rows.iter().all(|i| !train_set.contains(i)));

        let all_normal = class_dataset(&[(0, 10)], 1);
        assert!(build_odds_split(&all_normal, 0).is_err());
    }

    #[test]
    fn pollution_counts_and_exhaustion() {
        let train = {
            let mut d = class_dataset(&[(0, 1000)], 21);
            d.labels = vec![0; 1000];
            d
        };
        let pool = {
            let mut d = class_dataset(&[(1, 60)], 22);
            d.labels = vec![1; 60];
            d
        };
        let (polluted, picked) = inject_pollution(
            &train,
            &pool,
            &PollutionSpec {
                rate: 0.05,
                seed: 2,
            },
        )
        .unwrap();
        assert_eq!(picked.len(), 50);
        assert_eq!(polluted.n_rows(), 1050);
        // injected rows carry label 0
        assert_eq!(polluted.label_counts(), (1050, 0));
        // original rows are untouched
        assert_eq!(
            &polluted.features.values()[..train.features.values().len()],
            train.features.values()
        );

        let (same, picked) = inject_pollution(
            &train,
            &pool,
            &PollutionSpec { rate: 0.0, seed: 2 },
        )
        .unwrap();
        assert!(picked.is_empty());
        assert_eq!(same.n_rows(), train.n_rows());

        assert!(inject_pollution(
            &train,
            &pool,
            &PollutionSpec { rate: 0.1, seed: 2 } // needs 100 > 60
        )
        .is_err());
    }

    #[test]
    fn per_class_pollution_matches_one_vs_all_shape() {
        // one normal class plus nine anomalous classes: 100 mislabeled per
        // class on ~6000 inliers gives roughly 15% pollution.
        let counts: Vec<(u32, usize)> = (0..10u32).map(|c| (c, if c == 0 { 6000 } else { 700 })).collect();
        let src = class_dataset(&counts, 31);
        let test_src = class_dataset(&[(0, 10), (1, 10)], 32);
        let spec = SplitSpec {
            protocol: Protocol::OneVsAll,
            normal_classes: [0].into(),
            seen_anomaly_classes: BTreeSet::new(),
            s: 0,
            per_class_quota: Some(2),
            seed: 41,
        };
        let built = build_split(&src, &test_src, &spec).unwrap();
        let (polluted, picked) =
            inject_pollution_per_class(&built.train, &built.leftover_seen_pool, 100, 9).unwrap();
        assert_eq!(picked.len(), 900);
        let (inliers, labeled) = polluted.label_counts();
        assert_eq!(labeled, 18); // 2 per anomalous class
        let rate = 900.0 / (inliers - 900) as f64;
        assert!((rate - 0.15).abs() < 0.01, "pollution rate {rate}");
    }
}
