//! Desk-scale synthetic data and feature masking.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SahdlError};
use crate::hypergraph::{FeatureMatrix, LabelVector};

/// Largest allowed cosine between two class centers (60°).
const MAX_CENTER_COSINE: f64 = 0.5;
const MAX_CENTER_TRIES: usize = 10_000;

#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub train_features: FeatureMatrix,
    pub train_labels: LabelVector,
    pub test_features: FeatureMatrix,
    /// Ground truth, read only when scoring.
    pub test_labels: LabelVector,
}

impl DatasetBundle {
    pub fn new(
        train_features: FeatureMatrix,
        train_labels: LabelVector,
        test_features: FeatureMatrix,
        test_labels: LabelVector,
    ) -> Result<Self> {
        if train_features.dim() != test_features.dim() {
            return Err(SahdlError::Input(format!(
                "train dim {} differs from test dim {}",
                train_features.dim(),
                test_features.dim()
            )));
        }
        if train_labels.len() != train_features.n_samples()
            || test_labels.len() != test_features.n_samples()
        {
            return Err(SahdlError::Input("label count does not match sample count".into()));
        }
        if let Some(c) = test_labels
            .as_slice()
            .iter()
            .flatten()
            .find(|&&c| c >= train_labels.n_classes())
        {
            return Err(SahdlError::Input(format!(
                "test class {c} does not occur in the training labels"
            )));
        }
        let test_labels = LabelVector::new(test_labels.as_slice().to_vec(), train_labels.n_classes())?;
        Ok(DatasetBundle {
            train_features,
            train_labels,
            test_features,
            test_labels,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.train_labels.n_classes()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub per_class_train: usize,
    pub per_class_test: usize,
    pub dim: usize,
    /// Expected norm of the additive noise; class centers have norm 1.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            classes: 4,
            per_class_train: 5,
            per_class_test: 10,
            dim: 50,
            noise_sigma: 0.3,
            seed: 0,
        }
    }
}

fn unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    loop {
        let v: Array1<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.dot(&v).sqrt();
        if n > 0.0 {
            return v / n;
        }
    }
}

/// Gaussian clusters around unit-norm class centers with pairwise angles of
/// at least 60°. Noise is isotropic with per-coordinate standard deviation
/// `noise_sigma / sqrt(dim)`. Samples are ordered class by class.
pub fn make_synthetic(spec: &SyntheticSpec) -> Result<DatasetBundle> {
    if spec.classes < 2 {
        return Err(SahdlError::Parameter(format!(
            "need at least 2 classes, got {}",
            spec.classes
        )));
    }
    if spec.dim == 0 || spec.per_class_train == 0 || spec.per_class_test == 0 {
        return Err(SahdlError::Parameter(
            "dim and per-class sample counts must be positive".into(),
        ));
    }
    if !(spec.noise_sigma >= 0.0) || !spec.noise_sigma.is_finite() {
        return Err(SahdlError::Parameter(format!(
            "noise_sigma must be nonnegative, got {}",
            spec.noise_sigma
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut centers: Vec<Array1<f64>> = Vec::with_capacity(spec.classes);
    let mut tries = 0;
    while centers.len() < spec.classes {
        tries += 1;
        if tries > MAX_CENTER_TRIES {
            return Err(SahdlError::Parameter(format!(
                "could not place {} centers 60° apart in dimension {}",
                spec.classes, spec.dim
            )));
        }
        let cand = unit_vector(spec.dim, &mut rng);
        if centers.iter().all(|c| c.dot(&cand) <= MAX_CENTER_COSINE) {
            centers.push(cand);
        }
    }

    let noise = Normal::new(0.0, spec.noise_sigma / (spec.dim as f64).sqrt())
        .expect("finite nonnegative std");
    let draw = |per_class: usize, rng: &mut ChaCha8Rng| {
        let n = per_class * spec.classes;
        let mut data = Array2::<f64>::zeros((spec.dim, n));
        let mut labels = Vec::with_capacity(n);
        for (c, center) in centers.iter().enumerate() {
            for i in 0..per_class {
                let j = c * per_class + i;
                for d in 0..spec.dim {
                    data[[d, j]] = center[d] + noise.sample(rng);
                }
                labels.push(Some(c));
            }
        }
        (data, labels)
    };
    let (train, train_labels) = draw(spec.per_class_train, &mut rng);
    let (test, test_labels) = draw(spec.per_class_test, &mut rng);
    DatasetBundle::new(
        FeatureMatrix::new(train)?,
        LabelVector::new(train_labels, spec.classes)?,
        FeatureMatrix::new(test)?,
        LabelVector::new(test_labels, spec.classes)?,
    )
}

/// Zeroes `⌊fraction · dim⌋` pseudorandomly chosen coordinates of every
/// column, drawn independently per column.
pub fn apply_mask(x: &FeatureMatrix, fraction: f64, seed: u64) -> Result<FeatureMatrix> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(SahdlError::Parameter(format!(
            "mask fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let dim = x.dim();
    let count = (fraction * dim as f64).floor() as usize;
    let mut data = x.data().clone();
    if count == 0 {
        return FeatureMatrix::new(data);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for mut col in data.columns_mut() {
        for i in rand::seq::index::sample(&mut rng, dim, count) {
            col[i] = 0.0;
        }
    }
    FeatureMatrix::new(data)
}
