use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Binary classification data: one example per row of `features`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    /// Each entry is 0 or 1.
    pub labels: Vec<u8>,
    pub split: Split,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: Vec<u8>, split: Split) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(invalid("dataset needs at least one example"));
        }
        if labels.len() != features.nrows() {
            return Err(invalid(format!(
                "{} labels for {} examples",
                labels.len(),
                features.nrows()
            )));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(invalid("labels must be 0 or 1"));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(invalid("features must be finite"));
        }
        Ok(Self {
            features,
            labels,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    fn subset(&self, rows: &[usize], split: Split) -> Dataset {
        let d = self.num_features();
        let features = DMatrix::from_fn(rows.len(), d, |i, j| self.features[(rows[i], j)]);
        Dataset {
            features,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            split,
        }
    }
}

/// Parse `label, f_1, ..., f_d` rows. Blank lines and lines starting with
/// `#` are skipped; a header row is not allowed.
pub fn parse_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut width = None;
    for record in rdr.records() {
        let record = record?;
        let row = record
            .position()
            .map_or(labels.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() < 2 {
            return Err(Error::Parse {
                row,
                message: "expected a label followed by at least one feature".into(),
            });
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {w} fields, found {}", record.len()),
                })
            }
            _ => {}
        }
        let label: f64 = record[0].parse().map_err(|_| Error::Parse {
            row,
            message: format!("label {:?} is not a number", &record[0]),
        })?;
        let label = match label {
            0.0 => 0u8,
            1.0 => 1u8,
            _ => {
                return Err(Error::Parse {
                    row,
                    message: format!("label must be 0 or 1, found {:?}", &record[0]),
                })
            }
        };
        labels.push(label);
        for field in record.iter().skip(1) {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                message: format!("feature {field:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: format!("feature {field:?} is not finite"),
                });
            }
            values.push(v);
        }
    }
    let Some(width) = width else {
        return Err(Error::Parse {
            row: 0,
            message: "no examples found".into(),
        });
    };
    let features = DMatrix::from_row_slice(labels.len(), width - 1, &values);
    Dataset::new(features, labels, Split::Train)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    parse_dataset(file)
}

/// Two Gaussian clusters with identity covariance whose means are
/// `separation` apart along the diagonal direction. Labels are fair coin
/// flips. Deterministic in `seed`.
pub fn synthetic_dataset(
    seed: u64,
    samples: usize,
    dim: usize,
    separation: f64,
) -> Result<Dataset> {
    if samples == 0 || dim == 0 {
        return Err(invalid("synthetic dataset needs samples >= 1 and dim >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = 0.5 * separation / (dim as f64).sqrt();
    let mut labels = Vec::with_capacity(samples);
    let mut features = DMatrix::zeros(samples, dim);
    for i in 0..samples {
        let y: u8 = rng.random_range(0..=1);
        let sign = if y == 1 { 1.0 } else { -1.0 };
        for j in 0..dim {
            let noise: f64 = rng.sample(StandardNormal);
            features[(i, j)] = sign * offset + noise;
        }
        labels.push(y);
    }
    Dataset::new(features, labels, Split::Train)
}

/// Shuffle with `seed` and put `round(ratio * K)` examples in the training part.
pub fn train_test_split(data: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(invalid(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let k = data.len();
    let n_train = ((ratio * k as f64).round() as usize).clamp(1, k.saturating_sub(1).max(1));
    if n_train >= k {
        return Err(invalid("not enough examples to hold out a test set"));
    }
    let mut rows: Vec<usize> = (0..k).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((
        data.subset(&rows[..n_train], Split::Train),
        data.subset(&rows[n_train..], Split::Test),
    ))
}

/// Per-feature min-max scaling to `[0, 1]`, fitted on one dataset and
/// applicable to another.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler {
    pub min: DVector<f64>,
    pub range: DVector<f64>,
}

impl FeatureScaler {
    pub fn fit(data: &Dataset) -> Self {
        let d = data.num_features();
        let min = DVector::from_fn(d, |j, _| data.features.column(j).min());
        let max = DVector::from_fn(d, |j, _| data.features.column(j).max());
        Self {
            range: &max - &min,
            min,
        }
    }

    pub fn apply(&self, data: &Dataset) -> Dataset {
        let mut out = data.clone();
        for j in 0..data.num_features() {
            let r = self.range[j];
            for i in 0..data.len() {
                let v = data.features[(i, j)] - self.min[j];
                out.features[(i, j)] = if r > 0.0 { v / r } else { 0.0 };
            }
        }
        out
    }
}
