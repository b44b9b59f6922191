//! Two-modal hypergraph over samples and its normalized Laplacian.
//!
//! Vertices are samples. The feature modal contributes one hyperedge per
//! sample (its center) holding the center and its k nearest neighbours; the
//! label modal contributes one hyperedge per observed class. All hyperedges
//! carry weight 1.

use log::warn;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SahdlError};
use crate::sparse_attention::{solve_attention, AdmmParams, AttentionProblem};

/// Dense `dim × N` matrix whose columns are sample embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(Array2<f64>);

impl FeatureMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(SahdlError::Input(format!(
                "feature matrix must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if let Some(((r, c), v)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(SahdlError::Input(format!(
                "non-finite feature {v} at dim {r}, sample {c}"
            )));
        }
        Ok(FeatureMatrix(data))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.0.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.0.column(j)
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// `[self | other]`.
    pub fn hstack(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.dim() != other.dim() {
            return Err(SahdlError::Parameter(format!(
                "cannot stack features of dim {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let data = ndarray::concatenate(Axis(1), &[self.view(), other.view()])
            .expect("row counts checked above");
        Ok(FeatureMatrix(data))
    }
}

/// Sentinel used in signed label encodings for an unlabeled sample.
pub const UNLABELED: i64 = -1;

/// Per-sample class labels; `None` marks an unlabeled sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<Option<usize>>,
    n_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<Option<usize>>, n_classes: usize) -> Result<Self> {
        if let Some((i, c)) = labels
            .iter()
            .enumerate()
            .find_map(|(i, l)| l.filter(|&c| c >= n_classes).map(|c| (i, c)))
        {
            return Err(SahdlError::Input(format!(
                "label {c} of sample {i} is out of range for {n_classes} classes"
            )));
        }
        Ok(LabelVector { labels, n_classes })
    }

    /// Builds labels from a signed encoding where [`UNLABELED`] marks missing
    /// labels. The class count is one past the largest label.
    pub fn from_signed(raw: &[i64]) -> Result<Self> {
        let mut labels = Vec::with_capacity(raw.len());
        for (i, &v) in raw.iter().enumerate() {
            match v {
                UNLABELED => labels.push(None),
                v if v >= 0 => labels.push(Some(v as usize)),
                v => {
                    return Err(SahdlError::Input(format!(
                        "label {v} of sample {i} is negative and not the unlabeled sentinel"
                    )))
                }
            }
        }
        let n_classes = labels.iter().flatten().max().map_or(0, |m| m + 1);
        LabelVector::new(labels, n_classes)
    }

    pub fn unlabeled(n: usize, n_classes: usize) -> Self {
        LabelVector {
            labels: vec![None; n],
            n_classes,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn get(&self, i: usize) -> Option<usize> {
        self.labels[i]
    }

    pub fn as_slice(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn to_signed(&self) -> Vec<i64> {
        self.labels
            .iter()
            .map(|l| l.map_or(UNLABELED, |c| c as i64))
            .collect()
    }

    /// Indices of labeled samples, ascending.
    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i].is_some()).collect()
    }

    /// `self` followed by `n` unlabeled entries.
    pub fn extend_unlabeled(&self, n: usize) -> LabelVector {
        let mut labels = self.labels.clone();
        labels.extend(std::iter::repeat_n(None, n));
        LabelVector {
            labels,
            n_classes: self.n_classes,
        }
    }

    /// Fails unless every class in `0..n_classes` has a labeled sample.
    pub fn require_all_classes(&self) -> Result<()> {
        let mut seen = vec![false; self.n_classes];
        for c in self.labels.iter().flatten() {
            seen[*c] = true;
        }
        match seen.iter().position(|s| !s) {
            Some(c) => Err(SahdlError::Input(format!(
                "class {c} has no labeled sample"
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modal {
    /// Sparse-attention feature hyperedge.
    Saf,
    /// Label hyperedge.
    Lb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    /// `|V| × |E|` nonnegative incidence.
    pub incidence: Array2<f64>,
    /// Diagonal of W.
    pub edge_weights: Array1<f64>,
    pub modal_tags: Vec<Modal>,
}

impl Hypergraph {
    pub fn new(incidence: Array2<f64>, edge_weights: Array1<f64>, modal_tags: Vec<Modal>) -> Result<Self> {
        let n_edges = incidence.ncols();
        if edge_weights.len() != n_edges || modal_tags.len() != n_edges {
            return Err(SahdlError::Parameter(format!(
                "{} incidence columns but {} weights and {} tags",
                n_edges,
                edge_weights.len(),
                modal_tags.len()
            )));
        }
        if incidence.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SahdlError::Input(
                "incidence entries must be finite and nonnegative".into(),
            ));
        }
        if edge_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(SahdlError::Input("hyperedge weights must be positive".into()));
        }
        Ok(Hypergraph {
            incidence,
            edge_weights,
            modal_tags,
        })
    }

    /// A hypergraph with `n_vertices` vertices and no hyperedges.
    pub fn empty(n_vertices: usize) -> Self {
        Hypergraph {
            incidence: Array2::zeros((n_vertices, 0)),
            edge_weights: Array1::zeros(0),
            modal_tags: Vec::new(),
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.incidence.nrows()
    }

    pub fn n_edges(&self) -> usize {
        self.incidence.ncols()
    }
}

/// Vertex and hyperedge degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreePair {
    /// `d(v) = Σ_e W(e) H(v, e)`.
    pub vertex_degrees: Array1<f64>,
    /// `δ(e) = Σ_v H(v, e)`, one per hyperedge of the input.
    pub edge_degrees: Array1<f64>,
    /// Hyperedges with `δ(e) > 0`, ascending.
    pub retained_edges: Vec<usize>,
}

/// Normalized hypergraph Laplacian `I − Dv^{-1/2} H W De^{-1} Hᵀ Dv^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix(Array2<f64>);

impl LaplacianMatrix {
    pub fn new(delta: Array2<f64>) -> Result<Self> {
        if delta.nrows() != delta.ncols() {
            return Err(SahdlError::Parameter(format!(
                "laplacian must be square, got {}x{}",
                delta.nrows(),
                delta.ncols()
            )));
        }
        Ok(LaplacianMatrix(delta))
    }

    /// All-zero operator on `n` vertices; disables the manifold term.
    pub fn zeros(n: usize) -> Self {
        LaplacianMatrix(Array2::zeros((n, n)))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// `trace(Δ SᵀS)` for codes `S` of shape `K × N`.
    pub fn quadratic_trace(&self, codes: ArrayView2<f64>) -> f64 {
        let mut total = 0.0;
        for row in codes.rows() {
            total += row.dot(&self.0.dot(&row));
        }
        total
    }
}

/// How feature hyperedge members are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SafWeighting {
    /// Lasso attention weights, clamped at zero.
    #[default]
    Attention,
    /// Every attention weight fixed to 1.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypergraphConfig {
    pub k: usize,
    pub attention: AdmmParams,
    pub saf_weighting: SafWeighting,
    /// Append label hyperedges.
    pub label_modal: bool,
}

impl Default for HypergraphConfig {
    fn default() -> Self {
        HypergraphConfig {
            k: 10,
            attention: AdmmParams::default(),
            saf_weighting: SafWeighting::Attention,
            label_modal: true,
        }
    }
}

fn euclidean(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The `k` nearest other columns of each column with their distances, by
/// ascending distance then ascending index.
fn knn_with_distances(x: &FeatureMatrix, k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    let n = x.n_samples();
    if k == 0 || k >= n {
        return Err(SahdlError::Parameter(format!(
            "k must satisfy 1 <= k < N, got k={k} with N={n}"
        )));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|c| {
            let center = x.column(c);
            let mut cand: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != c)
                .map(|j| (j, euclidean(center, x.column(j))))
                .collect();
            cand.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            cand.truncate(k);
            cand
        })
        .collect())
}

/// Indices of the `k` nearest other columns of every column (Euclidean),
/// sorted by ascending distance with ties broken by ascending index.
pub fn knn_neighbors(x: &FeatureMatrix, k: usize) -> Result<Vec<Vec<usize>>> {
    Ok(knn_with_distances(x, k)?
        .into_iter()
        .map(|row| row.into_iter().map(|(j, _)| j).collect())
        .collect())
}

/// Feature hyperedges weighted by sparse attention.
pub fn build_saf_hypergraph(x: &FeatureMatrix, k: usize, params: &AdmmParams) -> Result<Hypergraph> {
    build_feature_hypergraph(x, k, params, SafWeighting::Attention)
}

/// Feature hyperedges with every attention weight fixed to 1.
pub fn build_uniform_saf_hypergraph(x: &FeatureMatrix, k: usize) -> Result<Hypergraph> {
    build_feature_hypergraph(x, k, &AdmmParams::default(), SafWeighting::Uniform)
}

pub fn build_feature_hypergraph(
    x: &FeatureMatrix,
    k: usize,
    params: &AdmmParams,
    weighting: SafWeighting,
) -> Result<Hypergraph> {
    params.validate()?;
    let n = x.n_samples();
    let neighbors = knn_with_distances(x, k)?;

    let columns: Vec<Result<Vec<(usize, f64)>>> = neighbors
        .par_iter()
        .enumerate()
        .map(|(c, nbrs)| {
            let mean = nbrs.iter().map(|(_, d)| d).sum::<f64>() / nbrs.len() as f64;
            let sigma = if mean > 0.0 { mean } else { 1.0 };
            let attention = match weighting {
                SafWeighting::Uniform => Array1::ones(nbrs.len()),
                SafWeighting::Attention => {
                    let p = x.view().select(Axis(1), &nbrs.iter().map(|(j, _)| *j).collect::<Vec<_>>());
                    let prob = AttentionProblem::new(x.column(c).to_owned(), p, params.epsilon)?;
                    let sol = solve_attention(&prob, params)?;
                    if !sol.converged {
                        warn!(
                            "attention solver for center {c} stopped after {} iterations without \
                             converging; using the last iterate",
                            sol.iterations
                        );
                    }
                    sol.q.mapv(|v| v.max(0.0))
                }
            };
            Ok(nbrs
                .iter()
                .zip(attention.iter())
                .map(|(&(j, d), &w)| {
                    let r = d / sigma;
                    (j, (-r * r).exp() * w)
                })
                .collect())
        })
        .collect();

    let mut incidence = Array2::<f64>::zeros((n, n));
    for (c, col) in columns.into_iter().enumerate() {
        for (j, w) in col? {
            incidence[[j, c]] = w;
        }
        incidence[[c, c]] = 1.0;
    }
    Hypergraph::new(incidence, Array1::ones(n), vec![Modal::Saf; n])
}

/// One 0/1 hyperedge per class that has at least one labeled sample.
pub fn build_lb_hypergraph(labels: &LabelVector) -> Hypergraph {
    let n = labels.len();
    let mut members = vec![Vec::new(); labels.n_classes()];
    for (i, l) in labels.as_slice().iter().enumerate() {
        if let Some(c) = l {
            members[*c].push(i);
        }
    }
    let present: Vec<&Vec<usize>> = members.iter().filter(|m| !m.is_empty()).collect();
    let mut incidence = Array2::<f64>::zeros((n, present.len()));
    for (e, rows) in present.iter().enumerate() {
        for &v in rows.iter() {
            incidence[[v, e]] = 1.0;
        }
    }
    let e = present.len();
    Hypergraph {
        incidence,
        edge_weights: Array1::ones(e),
        modal_tags: vec![Modal::Lb; e],
    }
}

/// Column-wise concatenation, `saf` columns first.
pub fn fuse(saf: &Hypergraph, lb: &Hypergraph) -> Result<Hypergraph> {
    if saf.n_vertices() != lb.n_vertices() {
        return Err(SahdlError::Parameter(format!(
            "cannot fuse hypergraphs over {} and {} vertices",
            saf.n_vertices(),
            lb.n_vertices()
        )));
    }
    let incidence = ndarray::concatenate(Axis(1), &[saf.incidence.view(), lb.incidence.view()])
        .expect("vertex counts checked above");
    let edge_weights =
        ndarray::concatenate(Axis(0), &[saf.edge_weights.view(), lb.edge_weights.view()])
            .expect("1-d concat");
    let mut modal_tags = saf.modal_tags.clone();
    modal_tags.extend_from_slice(&lb.modal_tags);
    Ok(Hypergraph {
        incidence,
        edge_weights,
        modal_tags,
    })
}

/// Vertex and hyperedge degrees, summed in ascending index order.
///
/// Hyperedges with zero degree are left out of `retained_edges`. A vertex
/// with zero degree is an error.
pub fn degrees(hg: &Hypergraph) -> Result<DegreePair> {
    let (nv, ne) = hg.incidence.dim();
    let mut edge_degrees = Array1::<f64>::zeros(ne);
    for e in 0..ne {
        let mut s = 0.0;
        for v in 0..nv {
            s += hg.incidence[[v, e]];
        }
        edge_degrees[e] = s;
    }
    let mut vertex_degrees = Array1::<f64>::zeros(nv);
    for v in 0..nv {
        let mut s = 0.0;
        for e in 0..ne {
            s += hg.edge_weights[e] * hg.incidence[[v, e]];
        }
        vertex_degrees[v] = s;
    }
    let mut retained_edges = Vec::with_capacity(ne);
    for e in 0..ne {
        if edge_degrees[e] > 0.0 {
            retained_edges.push(e);
        } else {
            warn!("dropping hyperedge {e}: it has no member vertices");
        }
    }
    if let Some(v) = vertex_degrees.iter().position(|&d| !(d > 0.0)) {
        return Err(SahdlError::Internal(format!(
            "vertex {v} has zero degree; every vertex must belong to a hyperedge"
        )));
    }
    Ok(DegreePair {
        vertex_degrees,
        edge_degrees,
        retained_edges,
    })
}

/// Normalized Laplacian of `hg` given its degrees.
pub fn laplacian(hg: &Hypergraph, dp: &DegreePair) -> Result<LaplacianMatrix> {
    let n = hg.n_vertices();
    if dp.vertex_degrees.len() != n || dp.edge_degrees.len() != hg.n_edges() {
        return Err(SahdlError::Parameter(
            "degree vectors do not match the hypergraph".into(),
        ));
    }
    if dp.vertex_degrees.iter().any(|&d| !(d > 0.0)) {
        return Err(SahdlError::Internal(
            "zero vertex degree reached laplacian assembly".into(),
        ));
    }
    // Accumulate H W De^{-1} Hᵀ edge by edge, touching only member pairs.
    let mut affinity = Array2::<f64>::zeros((n, n));
    for &e in &dp.retained_edges {
        let delta_e = dp.edge_degrees[e];
        if !(delta_e > 0.0) {
            return Err(SahdlError::Internal(format!(
                "hyperedge {e} with zero degree reached laplacian assembly"
            )));
        }
        let scale = hg.edge_weights[e] / delta_e;
        let members: Vec<(usize, f64)> = hg
            .incidence
            .column(e)
            .iter()
            .enumerate()
            .filter(|(_, &h)| h != 0.0)
            .map(|(v, &h)| (v, h))
            .collect();
        for (a, &(u, hu)) in members.iter().enumerate() {
            for &(v, hv) in &members[a..] {
                affinity[[u, v]] += hu * hv * scale;
            }
        }
    }
    let inv_sqrt: Array1<f64> = dp.vertex_degrees.mapv(|d| 1.0 / d.sqrt());
    let mut delta = Array2::<f64>::zeros((n, n));
    for u in 0..n {
        for v in u..n {
            let val = -affinity[[u, v]] * inv_sqrt[u] * inv_sqrt[v];
            let val = if u == v { 1.0 + val } else { val };
            delta[[u, v]] = val;
            delta[[v, u]] = val;
        }
    }
    Ok(LaplacianMatrix(delta))
}

/// Degrees followed by Laplacian assembly.
pub fn hypergraph_laplacian(hg: &Hypergraph) -> Result<LaplacianMatrix> {
    let dp = degrees(hg)?;
    laplacian(hg, &dp)
}

/// Feature hyperedges (and label hyperedges when enabled) over the columns
/// of `x`. `labels` must have one entry per column.
pub fn build_hypergraph(
    x: &FeatureMatrix,
    labels: &LabelVector,
    config: &HypergraphConfig,
) -> Result<Hypergraph> {
    if labels.len() != x.n_samples() {
        return Err(SahdlError::Parameter(format!(
            "{} labels for {} samples",
            labels.len(),
            x.n_samples()
        )));
    }
    let saf = build_feature_hypergraph(x, config.k, &config.attention, config.saf_weighting)?;
    if config.label_modal {
        fuse(&saf, &build_lb_hypergraph(labels))
    } else {
        Ok(saf)
    }
}
