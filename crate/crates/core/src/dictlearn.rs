//! Hypergraph-regularized dictionary learning and the linear classifier.
//!
//! Training minimizes
//!
//! ```text
//! ‖X − DS‖²_F + 2α Σ|S| + β tr(Δ SᵀS)    s.t. ‖d_k‖₂ ≤ 1
//! ```
//!
//! by alternating one Gauss–Seidel coordinate sweep over `S` with one
//! blockwise sweep over the atoms of `D`. Both sweeps minimize their block
//! exactly (atoms stay on the unit sphere), so the objective never increases.

use log::warn;
use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SahdlError};
use crate::hypergraph::{
    build_hypergraph, hypergraph_laplacian, FeatureMatrix, HypergraphConfig, LabelVector,
    LaplacianMatrix,
};
use crate::linalg::{norm2, Cholesky};
use crate::sparse_attention::soft_threshold_scalar;

/// Column norms may exceed 1 by at most this much.
pub const ATOM_NORM_SLACK: f64 = 1e-12;
/// Denominators and atom numerators at or below this are treated as zero.
pub const DEGENERATE: f64 = 1e-12;
/// Allowed per-step objective increase during training.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Seed offset for dead-atom reinitialization draws.
const REINIT_SEED_OFFSET: u64 = 0x5eed_0001;

const ENCODE_REL_TOL: f64 = 1e-8;
const ENCODE_MAX_SWEEPS: usize = 500;

/// `dim × K` atom matrix with columns of norm at most 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary(Array2<f64>);

impl Dictionary {
    pub fn new(atoms: Array2<f64>) -> Result<Self> {
        if atoms.ncols() == 0 {
            return Err(SahdlError::Parameter("dictionary needs at least one atom".into()));
        }
        for (k, col) in atoms.columns().into_iter().enumerate() {
            let n = norm2(col);
            if !n.is_finite() || n > 1.0 + ATOM_NORM_SLACK {
                return Err(SahdlError::Input(format!(
                    "atom {k} has norm {n}, above 1"
                )));
            }
        }
        Ok(Dictionary(atoms))
    }

    pub fn atoms(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn n_atoms(&self) -> usize {
        self.0.ncols()
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// `K × N` code matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCodes(Array2<f64>);

impl SparseCodes {
    pub fn new(codes: Array2<f64>) -> Result<Self> {
        if codes.iter().any(|v| !v.is_finite()) {
            return Err(SahdlError::Input("codes contain a non-finite value".into()));
        }
        Ok(SparseCodes(codes))
    }

    pub fn zeros(k: usize, n: usize) -> Self {
        SparseCodes(Array2::zeros((k, n)))
    }

    pub fn codes(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn codes_mut(&mut self) -> &mut Array2<f64> {
        &mut self.0
    }

    pub fn n_atoms(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.0.ncols()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Columns `start..end`.
    pub fn columns(&self, start: usize, end: usize) -> SparseCodes {
        SparseCodes(self.0.slice(s![.., start..end]).to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SahdlParams {
    /// Sparsity weight α.
    pub alpha: f64,
    /// Manifold weight β.
    pub beta: f64,
    /// Sparsity weight γ when encoding held-out samples.
    pub gamma: f64,
    /// Number of atoms K.
    pub dict_size: usize,
    pub max_outer_iter: usize,
    /// Stop when the relative objective change falls below this.
    pub obj_tol: f64,
    pub seed: u64,
    /// Ridge λ_B of the classifier fit.
    pub classifier_ridge: f64,
}

impl Default for SahdlParams {
    fn default() -> Self {
        let alpha = 2f64.powi(-6);
        SahdlParams {
            alpha,
            beta: 2f64.powi(3),
            gamma: alpha,
            dict_size: 200,
            max_outer_iter: 100,
            obj_tol: 1e-6,
            seed: 0,
            classifier_ridge: 1e-3,
        }
    }
}

impl SahdlParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: String| if ok { Ok(()) } else { Err(SahdlError::Parameter(msg)) };
        check(self.alpha > 0.0 && self.alpha.is_finite(), format!("alpha must be positive, got {}", self.alpha))?;
        check(self.beta >= 0.0 && self.beta.is_finite(), format!("beta must be nonnegative, got {}", self.beta))?;
        check(self.gamma > 0.0 && self.gamma.is_finite(), format!("gamma must be positive, got {}", self.gamma))?;
        check(self.dict_size >= 1, "dictionary size must be at least 1".into())?;
        check(self.obj_tol >= 0.0, format!("obj_tol must be nonnegative, got {}", self.obj_tol))?;
        check(
            self.classifier_ridge >= 0.0 && self.classifier_ridge.is_finite(),
            format!("classifier ridge must be nonnegative, got {}", self.classifier_ridge),
        )
    }
}

/// Linear map from codes to class scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    /// `C × K` plane B.
    pub plane: Array2<f64>,
    pub ridge: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LearningMode {
    /// Hypergraph and dictionary see training columns only.
    #[default]
    Inductive,
    /// Hypergraph and dictionary see training and test columns.
    Transductive,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub dictionary: Dictionary,
    /// Codes learned jointly with the dictionary (train columns, then test
    /// columns in transductive mode).
    pub codes: SparseCodes,
    /// Codes of the test columns, when test features were supplied.
    pub test_codes: Option<SparseCodes>,
    pub classifier: Classifier,
    pub objective_trace: Vec<f64>,
    pub mode: LearningMode,
    pub gamma: f64,
}

impl TrainedModel {
    /// Encodes new samples against the learned dictionary.
    pub fn encode(&self, y: &FeatureMatrix) -> Result<SparseCodes> {
        encode_test(y, &self.dictionary, self.gamma)
    }

    pub fn predict(&self, y: &FeatureMatrix) -> Result<LabelVector> {
        predict(&self.classifier, &self.encode(y)?)
    }

    /// Predictions for the test columns passed to [`train_pipeline`].
    pub fn predict_test(&self) -> Option<Result<LabelVector>> {
        self.test_codes
            .as_ref()
            .map(|codes| predict(&self.classifier, codes))
    }
}

/// Output of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub dictionary: Dictionary,
    pub codes: SparseCodes,
    pub objective_trace: Vec<f64>,
}

fn check_shapes(x: &FeatureMatrix, d: &Dictionary, s: &SparseCodes) -> Result<()> {
    if d.dim() != x.dim() || s.n_atoms() != d.n_atoms() || s.n_samples() != x.n_samples() {
        return Err(SahdlError::Parameter(format!(
            "shape mismatch: X is {}x{}, D is {}x{}, S is {}x{}",
            x.dim(),
            x.n_samples(),
            d.dim(),
            d.n_atoms(),
            s.n_atoms(),
            s.n_samples()
        )));
    }
    Ok(())
}

/// Reconstruction error plus the l1 penalty, `‖X − DS‖²_F + 2α Σ|S|`.
pub fn baseline_objective(x: &FeatureMatrix, d: &Dictionary, s: &SparseCodes, alpha: f64) -> Result<f64> {
    check_shapes(x, d, s)?;
    let residual = x.data() - &d.atoms().dot(s.codes());
    let recon: f64 = residual.iter().map(|v| v * v).sum();
    let l1: f64 = s.codes().iter().map(|v| v.abs()).sum();
    Ok(recon + 2.0 * alpha * l1)
}

/// `‖X − DS‖²_F + 2α Σ|S| + β tr(Δ SᵀS)`.
pub fn objective(
    x: &FeatureMatrix,
    d: &Dictionary,
    s: &SparseCodes,
    delta: &LaplacianMatrix,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let base = baseline_objective(x, d, s, alpha)?;
    if delta.size() != s.n_samples() {
        return Err(SahdlError::Parameter(format!(
            "laplacian is {}x{} but there are {} samples",
            delta.size(),
            delta.size(),
            s.n_samples()
        )));
    }
    if beta == 0.0 {
        return Ok(base);
    }
    Ok(base + beta * delta.quadratic_trace(s.codes().view()))
}

/// `K` data columns (without replacement when `K ≤ N`), each scaled to
/// unit norm. Zero columns are replaced by random unit vectors.
pub fn init_dictionary(x: &FeatureMatrix, k: usize, seed: u64) -> Result<Dictionary> {
    if k == 0 {
        return Err(SahdlError::Parameter("dictionary size must be at least 1".into()));
    }
    let n = x.n_samples();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<usize> = if k <= n {
        rand::seq::index::sample(&mut rng, n, k).into_vec()
    } else {
        (0..k).map(|_| rng.random_range(0..n)).collect()
    };
    let mut atoms = Array2::<f64>::zeros((x.dim(), k));
    for (a, &j) in picks.iter().enumerate() {
        let col = x.column(j);
        let nrm = norm2(col);
        if nrm > DEGENERATE {
            atoms.column_mut(a).assign(&(&col / nrm));
        } else {
            atoms.column_mut(a).assign(&random_unit(x.dim(), &mut rng));
        }
    }
    Dictionary::new(atoms)
}

fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Array1<f64> {
    loop {
        let v: Array1<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norm2(v.view());
        if n > DEGENERATE {
            return v / n;
        }
    }
}

/// Exact single-entry minimizer of the objective over `S`, with `D` and
/// `Δ` fixed.
pub struct CodeUpdater<'a> {
    dtx: Array2<f64>,
    gram: Array2<f64>,
    lap: &'a Array2<f64>,
    alpha: f64,
    beta: f64,
}

impl<'a> CodeUpdater<'a> {
    pub fn new(
        x: &FeatureMatrix,
        d: &Dictionary,
        delta: &'a LaplacianMatrix,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        if d.dim() != x.dim() {
            return Err(SahdlError::Parameter(format!(
                "samples have dim {} but atoms have dim {}",
                x.dim(),
                d.dim()
            )));
        }
        if delta.size() != x.n_samples() {
            return Err(SahdlError::Parameter(format!(
                "laplacian is {}x{} but there are {} samples",
                delta.size(),
                delta.size(),
                x.n_samples()
            )));
        }
        Ok(CodeUpdater {
            dtx: d.atoms().t().dot(x.data()),
            gram: d.atoms().t().dot(d.atoms()),
            lap: delta.matrix(),
            alpha,
            beta,
        })
    }

    /// Sets `S[k, n]` to `soft(J, α) / ((DᵀD)_kk + βΔ_nn)` where `J` collects
    /// the data term minus the coupling to every other entry.
    pub fn update_entry(&self, s: &mut SparseCodes, k: usize, n: usize) -> Result<()> {
        let codes = &mut s.0;
        if codes.dim() != self.dtx.dim() {
            return Err(SahdlError::Parameter(format!(
                "codes are {:?}, expected {:?}",
                codes.dim(),
                self.dtx.dim()
            )));
        }
        let mut j = self.dtx[[k, n]];
        if self.beta != 0.0 {
            let mut graph = 0.0;
            let lap_row = self.lap.row(n);
            let code_row = codes.row(k);
            for r in 0..lap_row.len() {
                if r != n {
                    graph += lap_row[r] * code_row[r];
                }
            }
            j -= self.beta * graph;
        }
        let mut cross = 0.0;
        for l in 0..self.gram.nrows() {
            if l != k {
                cross += self.gram[[k, l]] * codes[[l, n]];
            }
        }
        j -= cross;
        if !j.is_finite() {
            return Err(SahdlError::Numerical(format!(
                "non-finite coordinate target at atom {k}, sample {n}"
            )));
        }
        let denom = self.gram[[k, k]] + self.beta * self.lap[[n, n]];
        codes[[k, n]] = if denom <= DEGENERATE {
            0.0
        } else {
            soft_threshold_scalar(j, self.alpha) / denom
        };
        Ok(())
    }
}

/// One coordinate sweep over `S` (samples outer, atoms inner, ascending).
///
/// Each entry is set to the exact minimizer of the objective in that entry
/// with all others fixed.
pub fn update_codes(
    x: &FeatureMatrix,
    d: &Dictionary,
    s: &mut SparseCodes,
    delta: &LaplacianMatrix,
    alpha: f64,
    beta: f64,
) -> Result<()> {
    check_shapes(x, d, s)?;
    let updater = CodeUpdater::new(x, d, delta, alpha, beta)?;
    for n in 0..x.n_samples() {
        for k in 0..d.n_atoms() {
            updater.update_entry(s, k, n)?;
        }
    }
    Ok(())
}

/// One blockwise sweep over atoms (ascending). Each atom becomes the
/// normalized residual correlation with its code row. Atoms whose numerator
/// vanishes are redrawn from the data columns; returns how many were.
pub fn update_dictionary<R: Rng + ?Sized>(
    x: &FeatureMatrix,
    s: &SparseCodes,
    d: &mut Dictionary,
    rng: &mut R,
) -> Result<usize> {
    check_shapes(x, d, s)?;
    let k_atoms = d.n_atoms();
    let xst = x.data().dot(&s.codes().t());
    let sst = s.codes().dot(&s.codes().t());
    let atoms = &mut d.0;
    let mut reinitialized = 0;

    for k in 0..k_atoms {
        let mut u = xst.column(k).to_owned();
        for m in 0..k_atoms {
            if m != k {
                let c = sst[[m, k]];
                if c != 0.0 {
                    u.scaled_add(-c, &atoms.column(m));
                }
            }
        }
        let nrm = norm2(u.view());
        if nrm > DEGENERATE && nrm.is_finite() {
            atoms.column_mut(k).assign(&(u / nrm));
        } else if !nrm.is_finite() {
            return Err(SahdlError::Numerical(format!(
                "non-finite numerator for atom {k}"
            )));
        } else {
            let j = rng.random_range(0..x.n_samples());
            let col = x.column(j);
            let cn = norm2(col);
            let fresh = if cn > DEGENERATE {
                &col / cn
            } else {
                random_unit(x.dim(), rng)
            };
            warn!("atom {k} has a vanishing update; reinitialized from sample {j}");
            atoms.column_mut(k).assign(&fresh);
            reinitialized += 1;
        }
    }
    Ok(reinitialized)
}

/// Alternating minimization from sampled atoms and zero codes.
pub fn train(x: &FeatureMatrix, delta: &LaplacianMatrix, params: &SahdlParams) -> Result<TrainOutput> {
    train_with_observer(x, delta, params, |_, _, _, _| {})
}

/// [`train`], calling `observe(iteration, D, S, objective)` after every
/// outer iteration.
pub fn train_with_observer<F>(
    x: &FeatureMatrix,
    delta: &LaplacianMatrix,
    params: &SahdlParams,
    mut observe: F,
) -> Result<TrainOutput>
where
    F: FnMut(usize, &Dictionary, &SparseCodes, f64),
{
    params.validate()?;
    if delta.size() != x.n_samples() {
        return Err(SahdlError::Parameter(format!(
            "laplacian is {}x{} but there are {} samples",
            delta.size(),
            delta.size(),
            x.n_samples()
        )));
    }
    let mut d = init_dictionary(x, params.dict_size, params.seed)?;
    let mut s = SparseCodes::zeros(params.dict_size, x.n_samples());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(REINIT_SEED_OFFSET));
    let mut trace: Vec<f64> = Vec::with_capacity(params.max_outer_iter);

    for it in 0..params.max_outer_iter {
        update_codes(x, &d, &mut s, delta, params.alpha, params.beta)?;
        update_dictionary(x, &s, &mut d, &mut rng)?;
        let obj = objective(x, &d, &s, delta, params.alpha, params.beta)?;
        if !obj.is_finite() {
            return Err(SahdlError::Numerical(format!(
                "objective became non-finite at iteration {it}"
            )));
        }
        observe(it, &d, &s, obj);
        if let Some(&prev) = trace.last() {
            if obj > prev + MONOTONE_SLACK.max(1e-12 * prev.abs()) {
                return Err(SahdlError::Internal(format!(
                    "objective increased from {prev} to {obj} at iteration {it}"
                )));
            }
            trace.push(obj);
            if (prev - obj).abs() <= params.obj_tol * prev.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        } else {
            trace.push(obj);
        }
    }
    Ok(TrainOutput {
        dictionary: d,
        codes: s,
        objective_trace: trace,
    })
}

/// Lasso codes of one column by cyclic coordinate descent.
fn encode_column(gram: &Array2<f64>, dty: ArrayView1<f64>, yy: f64, gamma: f64) -> Array1<f64> {
    let k_atoms = gram.nrows();
    let mut code = Array1::<f64>::zeros(k_atoms);
    let column_objective = |c: &Array1<f64>| {
        yy - 2.0 * c.dot(&dty) + c.dot(&gram.dot(c)) + 2.0 * gamma * c.iter().map(|v| v.abs()).sum::<f64>()
    };
    let mut prev = yy;
    for _ in 0..ENCODE_MAX_SWEEPS {
        for k in 0..k_atoms {
            let mut j = dty[k];
            for l in 0..k_atoms {
                if l != k {
                    j -= gram[[k, l]] * code[l];
                }
            }
            let denom = gram[[k, k]];
            code[k] = if denom <= DEGENERATE {
                0.0
            } else {
                soft_threshold_scalar(j, gamma) / denom
            };
        }
        let obj = column_objective(&code);
        if (prev - obj).abs() <= ENCODE_REL_TOL * prev.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        prev = obj;
    }
    code
}

/// Codes of `y` against a fixed dictionary: per column,
/// `min ‖y − Ds‖² + 2γ‖s‖₁`.
pub fn encode_test(y: &FeatureMatrix, d: &Dictionary, gamma: f64) -> Result<SparseCodes> {
    if y.dim() != d.dim() {
        return Err(SahdlError::Parameter(format!(
            "samples have dim {} but atoms have dim {}",
            y.dim(),
            d.dim()
        )));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(SahdlError::Parameter(format!("gamma must be positive, got {gamma}")));
    }
    let gram = d.atoms().t().dot(d.atoms());
    let dty = d.atoms().t().dot(y.data());
    let columns: Vec<Array1<f64>> = (0..y.n_samples())
        .into_par_iter()
        .map(|j| {
            let yj = y.column(j);
            encode_column(&gram, dty.column(j), yj.dot(&yj), gamma)
        })
        .collect();
    let mut codes = Array2::<f64>::zeros((d.n_atoms(), y.n_samples()));
    for (j, c) in columns.into_iter().enumerate() {
        codes.column_mut(j).assign(&c);
    }
    SparseCodes::new(codes)
}

/// Ridge fit of one-hot labels on the labeled code columns:
/// `B = U Sₗᵀ (Sₗ Sₗᵀ + λI)⁻¹`.
pub fn fit_classifier(s: &SparseCodes, labels: &LabelVector, ridge: f64) -> Result<Classifier> {
    if labels.len() != s.n_samples() {
        return Err(SahdlError::Parameter(format!(
            "{} labels for {} code columns",
            labels.len(),
            s.n_samples()
        )));
    }
    let labeled = labels.labeled_indices();
    if labeled.is_empty() {
        return Err(SahdlError::Input("classifier needs at least one labeled sample".into()));
    }
    let n_classes = labels.n_classes();
    let k_atoms = s.n_atoms();
    let sl = s.codes().select(Axis(1), &labeled);
    let mut onehot = Array2::<f64>::zeros((n_classes, labeled.len()));
    for (j, &i) in labeled.iter().enumerate() {
        onehot[[labels.get(i).expect("labeled"), j]] = 1.0;
    }
    let mut normal = sl.dot(&sl.t());
    for k in 0..k_atoms {
        normal[[k, k]] += ridge;
    }
    let factor = Cholesky::factor(normal.view())?;
    let rhs = sl.dot(&onehot.t());
    let mut plane = Array2::<f64>::zeros((n_classes, k_atoms));
    for c in 0..n_classes {
        plane.row_mut(c).assign(&factor.solve(rhs.column(c)));
    }
    Ok(Classifier { plane, ridge })
}

/// Class with the largest score `B s` per column; ties go to the lowest class.
pub fn predict(b: &Classifier, s_ts: &SparseCodes) -> Result<LabelVector> {
    if b.plane.ncols() != s_ts.n_atoms() {
        return Err(SahdlError::Parameter(format!(
            "classifier expects {} atoms, codes have {}",
            b.plane.ncols(),
            s_ts.n_atoms()
        )));
    }
    let scores = b.plane.dot(s_ts.codes());
    let labels = scores
        .columns()
        .into_iter()
        .map(|col| {
            let mut best = 0;
            for c in 1..col.len() {
                if col[c] > col[best] {
                    best = c;
                }
            }
            Some(best)
        })
        .collect();
    LabelVector::new(labels, b.plane.nrows())
}

/// Hypergraph construction, dictionary training, test coding and classifier
/// fit in one call. `labels` covers the columns of `x_train` only.
pub fn train_pipeline(
    x_train: &FeatureMatrix,
    labels: &LabelVector,
    x_test: Option<&FeatureMatrix>,
    hypergraph: &HypergraphConfig,
    params: &SahdlParams,
    mode: LearningMode,
) -> Result<TrainedModel> {
    params.validate()?;
    if labels.len() != x_train.n_samples() {
        return Err(SahdlError::Parameter(format!(
            "{} labels for {} training samples",
            labels.len(),
            x_train.n_samples()
        )));
    }
    let n_train = x_train.n_samples();

    let (features, graph_labels) = match (mode, x_test) {
        (LearningMode::Transductive, Some(y)) => {
            (x_train.hstack(y)?, labels.extend_unlabeled(y.n_samples()))
        }
        (LearningMode::Transductive, None) => {
            return Err(SahdlError::Parameter(
                "transductive mode requires test features".into(),
            ))
        }
        (LearningMode::Inductive, _) => (x_train.clone(), labels.clone()),
    };

    let delta = if params.beta == 0.0 {
        LaplacianMatrix::zeros(features.n_samples())
    } else {
        hypergraph_laplacian(&build_hypergraph(&features, &graph_labels, hypergraph)?)?
    };
    let out = train(&features, &delta, params)?;

    let train_codes = out.codes.columns(0, n_train);
    let classifier = fit_classifier(&train_codes, labels, params.classifier_ridge)?;
    let test_codes = match (mode, x_test) {
        (LearningMode::Transductive, Some(_)) => {
            Some(out.codes.columns(n_train, out.codes.n_samples()))
        }
        (LearningMode::Inductive, Some(y)) => Some(encode_test(y, &out.dictionary, params.gamma)?),
        _ => None,
    };

    Ok(TrainedModel {
        dictionary: out.dictionary,
        codes: out.codes,
        test_codes,
        classifier,
        objective_trace: out.objective_trace,
        mode,
        gamma: params.gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn rand_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal))
    }

    fn features(a: Array2<f64>) -> FeatureMatrix {
        FeatureMatrix::new(a).unwrap()
    }

    #[test]
    fn objective_with_zero_codes_is_data_energy() {
        let x = features(rand_matrix(4, 5, 1));
        let d = init_dictionary(&x, 3, 0).unwrap();
        let s = SparseCodes::zeros(3, 5);
        let lap = LaplacianMatrix::new(Array2::eye(5)).unwrap();
        let energy: f64 = x.data().iter().map(|v| v * v).sum();
        let obj = objective(&x, &d, &s, &lap, 0.3, 2.0).unwrap();
        assert!((obj - energy).abs() < 1e-12);
    }

    #[test]
    fn objective_rejects_shape_mismatch() {
        let x = features(rand_matrix(4, 5, 1));
        let d = init_dictionary(&x, 3, 0).unwrap();
        let s = SparseCodes::zeros(2, 5);
        let lap = LaplacianMatrix::zeros(5);
        assert!(matches!(
            objective(&x, &d, &s, &lap, 0.1, 0.0),
            Err(SahdlError::Parameter(_))
        ));
    }

    #[test]
    fn init_dictionary_contracts() {
        let raw = rand_matrix(5, 6, 3);
        let norms = raw.map_axis(Axis(0), |c| norm2(c));
        let unit = &raw / &norms.insert_axis(Axis(0));
        let x = features(unit.clone());
        let d = init_dictionary(&x, 6, 11).unwrap();
        // Every atom is some data column and every column is used once.
        let mut used = [false; 6];
        for atom in d.atoms().columns() {
            let j = (0..6)
                .find(|&j| unit.column(j).iter().zip(atom.iter()).all(|(a, b)| (a - b).abs() < 1e-15))
                .expect("atom is a data column");
            assert!(!used[j]);
            used[j] = true;
        }
        assert_eq!(d, init_dictionary(&x, 6, 11).unwrap());

        let mut with_zero = raw.clone();
        with_zero.column_mut(0).fill(0.0);
        let big = init_dictionary(&features(with_zero), 15, 2).unwrap();
        for atom in big.atoms().columns() {
            assert!((norm2(atom) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_atom_update_is_scalar_lasso() {
        let x = features(array![[0.6, -0.2], [0.8, 0.1]]);
        let d = Dictionary::new(array![[0.6], [0.8]]).unwrap();
        let mut s = SparseCodes::zeros(1, 2);
        let lap = LaplacianMatrix::zeros(2);
        update_codes(&x, &d, &mut s, &lap, 0.1, 0.0).unwrap();
        // dᵀx = [1.0, -0.04].
        assert!((s.codes()[[0, 0]] - 0.9).abs() < 1e-15);
        assert_eq!(s.codes()[[0, 1]], 0.0);
    }

    #[test]
    fn huge_alpha_zeroes_codes() {
        let x = features(rand_matrix(6, 8, 5));
        let d = init_dictionary(&x, 4, 1).unwrap();
        let mut s = SparseCodes::new(rand_matrix(4, 8, 6)).unwrap();
        let lap = LaplacianMatrix::new(Array2::eye(8) * 0.5).unwrap();
        update_codes(&x, &d, &mut s, &lap, 1e6, 1.0).unwrap();
        assert!(s.codes().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_atom_with_ones_row_is_mean_direction() {
        let raw = rand_matrix(4, 7, 8);
        let x = features(raw.clone());
        let s = SparseCodes::new(Array2::ones((1, 7))).unwrap();
        let mut d = init_dictionary(&x, 1, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        update_dictionary(&x, &s, &mut d, &mut rng).unwrap();
        let sum = raw.sum_axis(Axis(1));
        let expected = &sum / norm2(sum.view());
        for (a, b) in d.atoms().column(0).iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn dead_atom_is_reinitialized() {
        let x = features(rand_matrix(5, 6, 9));
        let mut s = SparseCodes::new(rand_matrix(3, 6, 10)).unwrap();
        s.codes_mut().row_mut(1).fill(0.0);
        let mut d = init_dictionary(&x, 3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = update_dictionary(&x, &s, &mut d, &mut rng).unwrap();
        assert_eq!(n, 1);
        for atom in d.atoms().columns() {
            assert!((norm2(atom) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn self_representation_reconstructs() {
        let x = features(rand_matrix(10, 12, 21));
        let params = SahdlParams {
            alpha: 1e-6,
            beta: 0.0,
            gamma: 1e-6,
            dict_size: 12,
            max_outer_iter: 100,
            obj_tol: 1e-12,
            seed: 3,
            classifier_ridge: 1e-3,
        };
        let out = train(&x, &LaplacianMatrix::zeros(12), &params).unwrap();
        let r = x.data() - &out.dictionary.atoms().dot(out.codes.codes());
        let rel = r.iter().map(|v| v * v).sum::<f64>() / x.data().iter().map(|v| v * v).sum::<f64>();
        assert!(rel <= 1e-3, "relative residual {rel}");
    }

    #[test]
    fn encode_recovers_scaled_atom() {
        let d = Dictionary::new(Array2::eye(3)).unwrap();
        let y = features(array![[0.0], [1.0], [0.0]]);
        let s = encode_test(&y, &d, 0.05).unwrap();
        assert_eq!(s.codes().column(0).to_vec(), vec![0.0, 0.95, 0.0]);

        let y = features(array![[0.2], [-0.1], [0.05]]);
        assert!(encode_test(&y, &d, 0.2).unwrap().codes().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn classifier_identity_regression() {
        let s = SparseCodes::new(Array2::eye(3)).unwrap();
        let labels = LabelVector::new(vec![Some(0), Some(1), Some(1)], 2).unwrap();
        let b = fit_classifier(&s, &labels, 1e-12).unwrap();
        let u = array![[1.0, 0.0, 0.0], [0.0, 1.0, 1.0]];
        assert!((&b.plane - &u).iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn classifier_duplicates_equal_weighted_problem() {
        // Duplicating a column doubles its weight in the normal equations.
        let base = rand_matrix(3, 4, 30);
        let dup = ndarray::concatenate(Axis(1), &[base.view(), base.slice(s![.., 0..1])]).unwrap();
        let labels = LabelVector::new(vec![Some(0), Some(1), Some(0), Some(1), Some(0)], 2).unwrap();
        let b = fit_classifier(&SparseCodes::new(dup).unwrap(), &labels, 0.1).unwrap();

        let mut w = base.clone();
        w.column_mut(0).mapv_inplace(|v| v * 2f64.sqrt());
        let mut u = array![[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]];
        u.column_mut(0).mapv_inplace(|v| v * 2f64.sqrt());
        let mut normal = w.dot(&w.t());
        for k in 0..3 {
            normal[[k, k]] += 0.1;
        }
        let rhs = w.dot(&u.t());
        let chol = Cholesky::factor(normal.view()).unwrap();
        for c in 0..2 {
            let row = chol.solve(rhs.column(c));
            for k in 0..3 {
                assert!((row[k] - b.plane[[c, k]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn predict_ties_and_identity() {
        let b = Classifier { plane: Array2::eye(3), ridge: 0.0 };
        let s = SparseCodes::new(array![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]).unwrap();
        let p = predict(&b, &s).unwrap();
        assert_eq!(p.as_slice(), &[Some(2), Some(0)]);
    }

    #[test]
    fn pipeline_requires_test_for_transductive() {
        let x = features(rand_matrix(4, 6, 2));
        let labels = LabelVector::new(vec![Some(0), Some(1), Some(0), Some(1), Some(0), Some(1)], 2).unwrap();
        let hg = HypergraphConfig { k: 2, ..Default::default() };
        let params = SahdlParams { dict_size: 4, ..Default::default() };
        assert!(matches!(
            train_pipeline(&x, &labels, None, &hg, &params, LearningMode::Transductive),
            Err(SahdlError::Parameter(_))
        ));
    }
}
