//! Experiment layer: file formats, synthetic data, runs and sweeps.

pub mod experiment;
pub mod io;
pub mod synth;

pub use experiment::{
    ablate, mask_sweep, run, Ablation, AblationReport, ExperimentConfig, MaskSweepReport,
    RunReport,
};
pub use io::{load_binmat, load_csv, save_binmat, save_csv, LoadedData};
pub use synth::{apply_mask, make_synthetic, DatasetBundle, SyntheticSpec};

/// Sub-seed for one pipeline stage, so stages draw from independent streams.
pub fn stage_seed(seed: u64, stage: Stage) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stage as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Init = 1,
    TrainMask = 2,
    TestMask = 3,
    Synthetic = 4,
}
