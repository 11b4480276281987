//! Labeled datasets, split handling and min-max feature scaling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A binary-classification dataset: dense feature rows with labels in {-1, +1}.
///
/// Row order is significant (the first-n center scheme depends on it).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>, // row-major, m * d
    labels: Vec<f64>,
    d: usize,
}

impl Dataset {
    /// Builds a dataset from row-major features and labels.
    pub fn new(features: Vec<f64>, labels: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("input dimension must be >= 1".into()));
        }
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if features.len() != labels.len() * d {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * d,
                actual: features.len(),
            });
        }
        for (i, &y) in labels.iter().enumerate() {
            if y != 1.0 && y != -1.0 {
                return Err(Error::InvalidLabel { found: y, row: i });
            }
        }
        Ok(Self { features, labels, d })
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Input dimension d.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// The i-th feature row.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.d)
    }

    /// Per-dimension (min, max) bounding box of the inputs.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.d];
        let mut hi = vec![f64::NEG_INFINITY; self.d];
        for row in self.rows() {
            for (j, &x) in row.iter().enumerate() {
                lo[j] = lo[j].min(x);
                hi[j] = hi[j].max(x);
            }
        }
        (lo, hi)
    }

    /// Subset by row indices, preserving the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Ok(Self { features, labels, d: self.d })
    }

    /// Shuffles rows with a seeded generator and splits into
    /// train/validation/test parts by the given fractions.
    ///
    /// Fractions must be positive and sum to at most 1; the test part takes
    /// the remainder of the shuffled rows.
    pub fn split(&self, train_frac: f64, val_frac: f64, seed: u64) -> Result<(Self, Self, Self)> {
        if !(train_frac > 0.0 && val_frac > 0.0 && train_frac + val_frac < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "split fractions ({train_frac}, {val_frac}) must be positive with sum < 1"
            )));
        }
        let m = self.len();
        let mut order: Vec<usize> = (0..m).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);

        let n_train = ((m as f64) * train_frac).floor() as usize;
        let n_val = ((m as f64) * val_frac).floor() as usize;
        if n_train == 0 {
            return Err(Error::EmptySplit("train"));
        }
        if n_val == 0 {
            return Err(Error::EmptySplit("validation"));
        }
        if n_train + n_val >= m {
            return Err(Error::EmptySplit("test"));
        }
        let train = self.subset(&order[..n_train])?;
        let val = self.subset(&order[n_train..n_train + n_val])?;
        let test = self.subset(&order[n_train + n_val..])?;
        Ok((train, val, test))
    }
}

/// Per-dimension min-max scaling to [0, 1].
///
/// Constant dimensions map to 0. The parameters travel with a trained model
/// so prediction applies the same transform as training.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(data: &Dataset) -> Self {
        let (mins, maxs) = data.bounding_box();
        Self { mins, maxs }
    }

    pub fn from_params(mins: Vec<f64>, maxs: Vec<f64>) -> Result<Self> {
        if mins.len() != maxs.len() {
            return Err(Error::DimensionMismatch { expected: mins.len(), actual: maxs.len() });
        }
        Ok(Self { mins, maxs })
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    pub fn mins(&self) -> &[f64] {
        &self.mins
    }

    pub fn maxs(&self) -> &[f64] {
        &self.maxs
    }

    /// Scales one point into the fitted box.
    pub fn transform_point(&self, x: &[f64], out: &mut [f64]) {
        for j in 0..self.mins.len() {
            let range = self.maxs[j] - self.mins[j];
            out[j] = if range > 0.0 { (x[j] - self.mins[j]) / range } else { 0.0 };
        }
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        if data.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: data.dim() });
        }
        let d = data.dim();
        let mut features = vec![0.0; data.len() * d];
        for (i, row) in data.rows().enumerate() {
            self.transform_point(row, &mut features[i * d..(i + 1) * d]);
        }
        Dataset::new(features, data.labels().to_vec(), d)
    }
}
