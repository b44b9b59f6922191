use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sahdl::dictlearn::{train_pipeline, LearningMode};
use sahdl::harness::experiment::write_json;
use sahdl::harness::io::{load_labels, save_labels, save_matrix_binmat};
use sahdl::harness::{
    ablate, load_binmat, load_csv, make_synthetic, mask_sweep, run, save_binmat, save_csv,
    stage_seed, Ablation, DatasetBundle, ExperimentConfig, Stage, SyntheticSpec,
};
use sahdl::hypergraph::{build_hypergraph, hypergraph_laplacian, FeatureMatrix, LabelVector};
use sahdl::{Result, SahdlError};

#[derive(Parser)]
#[command(name = "sahdl", version, about = "Sparse attention hypergraph regularized dictionary learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and write it as JSON.
    Train(RunArgs),
    /// Fit on the training set, score the test set, write a run report.
    Eval(RunArgs),
    /// Compare full, saf-off and lb-off over several seeds.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        /// Number of seeds, starting at --seed.
        #[arg(long, default_value_t = 1)]
        repeats: u64,
    },
    /// Accuracy of the model and its beta=0 baseline under feature masking.
    MaskSweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1)]
        repeats: u64,
        #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.4,0.6")]
        fractions: Vec<f64>,
    },
    /// Write a synthetic train/test split.
    Synth {
        #[command(flatten)]
        synth: SynthArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for train.* and test.*.
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Build the hypergraph over --train and write its Laplacian.
    ExportLaplacian {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = Format::Binmat)]
        out_format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Binmat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Inductive,
    Transductive,
}

#[derive(Args, Clone)]
struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 5)]
    per_class_train: usize,
    #[arg(long, default_value_t = 10)]
    per_class_test: usize,
    #[arg(long, default_value_t = 50)]
    dim: usize,
    /// Expected norm of the per-sample noise (class centers have norm 1).
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Generate data instead of reading --train/--test.
    #[arg(long, conflicts_with_all = ["train", "test"])]
    synthetic: bool,
    #[command(flatten)]
    synth: SynthArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value_t = 2f64.powi(-6))]
    epsilon: f64,
    #[arg(long, default_value_t = 2f64.powi(-6))]
    alpha: f64,
    #[arg(long, default_value_t = 8.0)]
    beta: f64,
    /// Test coding sparsity; defaults to --alpha.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 10)]
    knn: usize,
    #[arg(long, default_value_t = 200)]
    dict_size: usize,
    #[arg(long, value_enum, default_value_t = Mode::Inductive)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = Ablation::Full)]
    ablation: Ablation,
    #[arg(long, default_value_t = 0.0)]
    mask_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            epsilon: self.epsilon,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma.unwrap_or(self.alpha),
            k_nn: self.knn,
            dict_size: self.dict_size,
            mode: match self.mode {
                Mode::Inductive => LearningMode::Inductive,
                Mode::Transductive => LearningMode::Transductive,
            },
            ablation: self.ablation,
            mask_fraction: self.mask_fraction,
            seed: self.seed,
            max_outer_iter: self.max_iter,
            ..ExperimentConfig::default()
        }
    }

    fn synthetic_bundle(&self, seed: u64) -> Result<DatasetBundle> {
        make_synthetic(&SyntheticSpec {
            classes: self.synth.classes,
            per_class_train: self.synth.per_class_train,
            per_class_test: self.synth.per_class_test,
            dim: self.synth.dim,
            noise_sigma: self.synth.noise,
            seed: stage_seed(seed, Stage::Synthetic),
        })
    }

    fn file_bundle(&self) -> Result<DatasetBundle> {
        let train = self.train.as_ref().ok_or_else(|| missing("--train"))?;
        let test = self.test.as_ref().ok_or_else(|| missing("--test"))?;
        let (xtr, ltr) = load(train, self.format)?;
        let (xts, lts) = load(test, self.format)?;
        let ltr = ltr.ok_or_else(|| SahdlError::Input(format!("{} has no labels", train.display())))?;
        let lts = lts.ok_or_else(|| SahdlError::Input(format!("{} has no labels", test.display())))?;
        DatasetBundle::new(xtr, ltr, xts, lts)
    }

    /// One `(seed, bundle)` per repeat. Synthetic data is regenerated per
    /// seed; file data is shared.
    fn trials(&self, repeats: u64) -> Result<Vec<(u64, DatasetBundle)>> {
        if repeats == 0 {
            return Err(SahdlError::Parameter("--repeats must be at least 1".into()));
        }
        let seeds = (0..repeats).map(|r| self.seed + r);
        if self.synthetic {
            seeds.map(|s| Ok((s, self.synthetic_bundle(s)?))).collect()
        } else {
            let bundle = self.file_bundle()?;
            Ok(seeds.map(|s| (s, bundle.clone())).collect())
        }
    }

    fn bundle(&self) -> Result<DatasetBundle> {
        if self.synthetic {
            self.synthetic_bundle(self.seed)
        } else {
            self.file_bundle()
        }
    }
}

fn missing(flag: &str) -> SahdlError {
    SahdlError::Parameter(format!("{flag} is required unless --synthetic is given"))
}

fn labels_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".labels");
    PathBuf::from(s)
}

fn load(path: &Path, format: Format) -> Result<(FeatureMatrix, Option<LabelVector>)> {
    match format {
        Format::Csv => {
            let d = load_csv(path)?;
            Ok((d.features, d.labels))
        }
        Format::Binmat => {
            let x = load_binmat(path)?;
            let sidecar = labels_sidecar(path);
            let labels = if sidecar.exists() {
                let l = load_labels(&sidecar)?;
                if l.len() != x.n_samples() {
                    return Err(SahdlError::format(
                        &sidecar,
                        format!("{} labels for {} samples", l.len(), x.n_samples()),
                    ));
                }
                Some(l)
            } else {
                None
            };
            Ok((x, labels))
        }
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_json(value, p),
        None => {
            let text = serde_json::to_string_pretty(value)
                .map_err(|e| SahdlError::Internal(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct ModelFile {
    config: ExperimentConfig,
    dim: usize,
    dict_size: usize,
    /// Dictionary atoms, one inner vector per atom.
    atoms: Vec<Vec<f64>>,
    /// Classifier plane, one inner vector per class.
    classifier: Vec<Vec<f64>>,
    gamma: f64,
    objective_trace: Vec<f64>,
}

fn cmd_train(args: &RunArgs) -> Result<()> {
    let config = args.config();
    let (x, labels, test) = if args.synthetic {
        let b = args.synthetic_bundle(args.seed)?;
        (b.train_features, b.train_labels, Some(b.test_features))
    } else {
        let train = args.train.as_ref().ok_or_else(|| missing("--train"))?;
        let (x, labels) = load(train, args.format)?;
        let labels =
            labels.ok_or_else(|| SahdlError::Input(format!("{} has no labels", train.display())))?;
        let test = match &args.test {
            Some(p) => Some(load(p, args.format)?.0),
            None => None,
        };
        (x, labels, test)
    };
    let test = match config.mode {
        LearningMode::Transductive => test,
        LearningMode::Inductive => None,
    };
    let n_columns = x.n_samples() + test.as_ref().map_or(0, |t| t.n_samples());
    let (hg, params) = config.solver_settings(n_columns)?;
    let model = train_pipeline(&x, &labels, test.as_ref(), &hg, &params, config.mode)?;
    let atoms = model.dictionary.atoms();
    let file = ModelFile {
        config,
        dim: atoms.nrows(),
        dict_size: atoms.ncols(),
        atoms: atoms.columns().into_iter().map(|c| c.to_vec()).collect(),
        classifier: model.classifier.plane.rows().into_iter().map(|r| r.to_vec()).collect(),
        gamma: model.gamma,
        objective_trace: model.objective_trace,
    };
    emit(&file, args.out.as_deref())
}

fn cmd_synth(synth: &SynthArgs, seed: u64, out_dir: &Path, format: Format) -> Result<()> {
    let bundle = make_synthetic(&SyntheticSpec {
        classes: synth.classes,
        per_class_train: synth.per_class_train,
        per_class_test: synth.per_class_test,
        dim: synth.dim,
        noise_sigma: synth.noise,
        seed,
    })?;
    std::fs::create_dir_all(out_dir).map_err(|e| SahdlError::Io { path: out_dir.into(), source: e })?;
    for (name, x, l) in [
        ("train", &bundle.train_features, &bundle.train_labels),
        ("test", &bundle.test_features, &bundle.test_labels),
    ] {
        match format {
            Format::Csv => save_csv(out_dir.join(format!("{name}.csv")), x, Some(l))?,
            Format::Binmat => {
                let p = out_dir.join(format!("{name}.binmat"));
                save_binmat(&p, x)?;
                save_labels(labels_sidecar(&p), l)?;
            }
        }
    }
    Ok(())
}

fn cmd_export_laplacian(args: &RunArgs, out_format: Format) -> Result<()> {
    let config = args.config();
    let (x, labels) = if args.synthetic {
        let b = args.synthetic_bundle(args.seed)?;
        (b.train_features, b.train_labels)
    } else {
        let train = args.train.as_ref().ok_or_else(|| missing("--train"))?;
        let (x, labels) = load(train, args.format)?;
        let n = x.n_samples();
        (x, labels.unwrap_or_else(|| LabelVector::unlabeled(n, 0)))
    };
    let (hg, _) = config.solver_settings(x.n_samples())?;
    let lap = hypergraph_laplacian(&build_hypergraph(&x, &labels, &hg)?)?;
    let out = args
        .out
        .as_ref()
        .ok_or_else(|| SahdlError::Parameter("--out is required for export-laplacian".into()))?;
    match out_format {
        Format::Binmat => save_matrix_binmat(out, lap.matrix()),
        Format::Csv => save_csv(out, &FeatureMatrix::new(lap.into_inner())?, None),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => cmd_train(&args),
        Command::Eval(args) => {
            let report = run(&args.config(), &args.bundle()?)?;
            emit(&report, args.out.as_deref())
        }
        Command::Ablate { run: args, repeats } => {
            let report = ablate(&args.config(), &args.trials(repeats)?)?;
            emit(&report, args.out.as_deref())
        }
        Command::MaskSweep { run: args, repeats, fractions } => {
            let report = mask_sweep(&args.config(), &args.trials(repeats)?, &fractions)?;
            emit(&report, args.out.as_deref())
        }
        Command::Synth { synth, seed, out_dir, format } => cmd_synth(&synth, seed, &out_dir, format),
        Command::ExportLaplacian { run: args, out_format } => cmd_export_laplacian(&args, out_format),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
