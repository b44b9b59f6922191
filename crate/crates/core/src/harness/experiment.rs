//! End-to-end runs, ablations and mask sweeps with JSON reports.

use std::path::Path;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictlearn::{train_pipeline, LearningMode, SahdlParams};
use crate::error::{Result, SahdlError};
use crate::harness::synth::{apply_mask, DatasetBundle};
use crate::harness::{stage_seed, Stage};
use crate::hypergraph::{HypergraphConfig, LabelVector, SafWeighting};
use crate::sparse_attention::AdmmParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    #[default]
    Full,
    /// Attention weights fixed to 1.
    SafOff,
    /// Label hyperedges removed.
    LbOff,
}

impl Ablation {
    pub const ALL: [Ablation; 3] = [Ablation::Full, Ablation::SafOff, Ablation::LbOff];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub k_nn: usize,
    pub dict_size: usize,
    pub mode: LearningMode,
    pub ablation: Ablation,
    pub mask_fraction: f64,
    pub seed: u64,
    pub max_outer_iter: usize,
    pub obj_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = SahdlParams::default();
        ExperimentConfig {
            epsilon: AdmmParams::default().epsilon,
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
            k_nn: 10,
            dict_size: p.dict_size,
            mode: LearningMode::Inductive,
            ablation: Ablation::Full,
            mask_fraction: 0.0,
            seed: 0,
            max_outer_iter: p.max_outer_iter,
            obj_tol: p.obj_tol,
        }
    }
}

impl ExperimentConfig {
    /// Solver settings for a training set of `n_columns` samples. The
    /// neighbourhood size is capped at `n_columns − 1` and the dictionary
    /// size at `n_columns`.
    pub fn solver_settings(&self, n_columns: usize) -> Result<(HypergraphConfig, SahdlParams)> {
        if n_columns < 2 {
            return Err(SahdlError::Input(format!(
                "need at least 2 samples to build a hypergraph, got {n_columns}"
            )));
        }
        let k = self.k_nn.min(n_columns - 1);
        if k < self.k_nn {
            info!("capping knn from {} to {k} for {n_columns} samples", self.k_nn);
        }
        let hypergraph = HypergraphConfig {
            k,
            attention: AdmmParams::with_epsilon(self.epsilon),
            saf_weighting: match self.ablation {
                Ablation::SafOff => SafWeighting::Uniform,
                _ => SafWeighting::Attention,
            },
            label_modal: self.ablation != Ablation::LbOff,
        };
        let params = SahdlParams {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            dict_size: self.dict_size.min(n_columns),
            max_outer_iter: self.max_outer_iter,
            obj_tol: self.obj_tol,
            seed: stage_seed(self.seed, Stage::Init),
            ..SahdlParams::default()
        };
        hypergraph.attention.validate()?;
        params.validate()?;
        Ok((hypergraph, params))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub accuracy: f64,
    /// `None` for classes without test samples.
    pub per_class_accuracy: Vec<Option<f64>>,
    pub objective_trace: Vec<f64>,
    pub wall_time_seconds: f64,
    pub config: ExperimentConfig,
    /// Predicted class of every test sample.
    pub predictions: Vec<usize>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| SahdlError::Internal(e.to_string()))
    }
}

/// Accuracy over labeled truth entries, and per class.
pub fn score(predictions: &[usize], truth: &LabelVector) -> (f64, Vec<Option<f64>>) {
    let c = truth.n_classes();
    let mut hits = vec![0usize; c];
    let mut counts = vec![0usize; c];
    for (p, t) in predictions.iter().zip(truth.as_slice()) {
        if let Some(t) = t {
            counts[*t] += 1;
            if p == t {
                hits[*t] += 1;
            }
        }
    }
    let total: usize = counts.iter().sum();
    let accuracy = if total == 0 {
        0.0
    } else {
        hits.iter().sum::<usize>() as f64 / total as f64
    };
    let per_class = hits
        .iter()
        .zip(&counts)
        .map(|(&h, &n)| (n > 0).then(|| h as f64 / n as f64))
        .collect();
    (accuracy, per_class)
}

/// Masks features, trains, predicts the test columns, and scores them.
///
/// Test labels are read only by the final scoring step.
pub fn run(config: &ExperimentConfig, bundle: &DatasetBundle) -> Result<RunReport> {
    let start = Instant::now();
    let (train_x, test_x) = if config.mask_fraction > 0.0 {
        (
            apply_mask(&bundle.train_features, config.mask_fraction, stage_seed(config.seed, Stage::TrainMask))?,
            apply_mask(&bundle.test_features, config.mask_fraction, stage_seed(config.seed, Stage::TestMask))?,
        )
    } else {
        apply_mask(&bundle.train_features, config.mask_fraction, 0)?;
        (bundle.train_features.clone(), bundle.test_features.clone())
    };

    let n_columns = match config.mode {
        LearningMode::Inductive => train_x.n_samples(),
        LearningMode::Transductive => train_x.n_samples() + test_x.n_samples(),
    };
    let (hypergraph, params) = config.solver_settings(n_columns)?;
    let model = train_pipeline(
        &train_x,
        &bundle.train_labels,
        Some(&test_x),
        &hypergraph,
        &params,
        config.mode,
    )?;
    let predicted = model
        .predict_test()
        .expect("test features were supplied")?;
    let predictions: Vec<usize> = predicted
        .as_slice()
        .iter()
        .map(|p| p.expect("predictions are always labeled"))
        .collect();

    let (accuracy, per_class_accuracy) = score(&predictions, &bundle.test_labels);
    Ok(RunReport {
        accuracy,
        per_class_accuracy,
        objective_trace: model.objective_trace,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        config: *config,
        predictions,
    })
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value).map_err(|e| SahdlError::Internal(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| SahdlError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub full: Vec<RunReport>,
    pub saf_off: Vec<RunReport>,
    pub lb_off: Vec<RunReport>,
    pub mean_accuracy_full: f64,
    pub mean_accuracy_saf_off: f64,
    pub mean_accuracy_lb_off: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Runs every ablation on every `(seed, bundle)` trial. Trials run in
/// parallel; reports keep trial order.
pub fn ablate(config: &ExperimentConfig, trials: &[(u64, DatasetBundle)]) -> Result<AblationReport> {
    let reports: Vec<Result<[RunReport; 3]>> = trials
        .par_iter()
        .map(|(seed, bundle)| {
            let mut out = Vec::with_capacity(3);
            for ablation in Ablation::ALL {
                let cfg = ExperimentConfig { ablation, seed: *seed, ..*config };
                out.push(run(&cfg, bundle)?);
            }
            Ok(out.try_into().expect("three ablations"))
        })
        .collect();
    let mut full = Vec::new();
    let mut saf_off = Vec::new();
    let mut lb_off = Vec::new();
    for r in reports {
        let [f, s, l] = r?;
        full.push(f);
        saf_off.push(s);
        lb_off.push(l);
    }
    Ok(AblationReport {
        mean_accuracy_full: mean(full.iter().map(|r| r.accuracy)),
        mean_accuracy_saf_off: mean(saf_off.iter().map(|r| r.accuracy)),
        mean_accuracy_lb_off: mean(lb_off.iter().map(|r| r.accuracy)),
        full,
        saf_off,
        lb_off,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSweepReport {
    pub fractions: Vec<f64>,
    /// Mean accuracy of the configured model per fraction.
    pub sahdl_accuracy: Vec<f64>,
    /// Mean accuracy of the same configuration with `beta = 0`.
    pub baseline_accuracy: Vec<f64>,
    /// `sahdl_accuracy − baseline_accuracy` per fraction.
    pub gap: Vec<f64>,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
}

/// Mean accuracy of the configured model and of its `beta = 0` baseline at
/// each mask fraction, over all trials.
pub fn mask_sweep(
    config: &ExperimentConfig,
    trials: &[(u64, DatasetBundle)],
    fractions: &[f64],
) -> Result<MaskSweepReport> {
    let mut sahdl_accuracy = Vec::with_capacity(fractions.len());
    let mut baseline_accuracy = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let per_trial: Vec<Result<(f64, f64)>> = trials
            .par_iter()
            .map(|(seed, bundle)| {
                let cfg = ExperimentConfig { mask_fraction: fraction, seed: *seed, ..*config };
                let model = run(&cfg, bundle)?.accuracy;
                let base = run(&ExperimentConfig { beta: 0.0, ..cfg }, bundle)?.accuracy;
                Ok((model, base))
            })
            .collect();
        let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;
        sahdl_accuracy.push(mean(per_trial.iter().map(|p| p.0)));
        baseline_accuracy.push(mean(per_trial.iter().map(|p| p.1)));
    }
    let gap = sahdl_accuracy
        .iter()
        .zip(&baseline_accuracy)
        .map(|(a, b)| a - b)
        .collect();
    Ok(MaskSweepReport {
        fractions: fractions.to_vec(),
        sahdl_accuracy,
        baseline_accuracy,
        gap,
        config: *config,
        seeds: trials.iter().map(|(s, _)| *s).collect(),
    })
}
