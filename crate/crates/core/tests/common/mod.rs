//! Reference computations that share no code with the library paths they
//! check.
#![allow(dead_code)]

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector(n: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal))
}

/// Prints one acceptance line and returns `ok`.
pub fn verdict(id: &str, ok: bool, detail: impl std::fmt::Display) -> bool {
    println!("[{}] {id}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

/// `‖x − Pz‖² + 2ε‖z‖₁`, written out with explicit loops.
pub fn lasso_objective(p: &Array2<f64>, x: &Array1<f64>, eps: f64, z: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..x.len() {
        let mut fit = 0.0;
        for j in 0..z.len() {
            fit += p[[i, j]] * z[j];
        }
        total += (x[i] - fit) * (x[i] - fit);
    }
    total + 2.0 * eps * z.iter().map(|v| v.abs()).sum::<f64>()
}

/// Cyclic coordinate descent on `‖x − Pz‖² + 2ε‖z‖₁` until no coordinate
/// moves more than `tol`.
pub fn cd_lasso(p: &Array2<f64>, x: &Array1<f64>, eps: f64, tol: f64) -> Vec<f64> {
    let (m, n) = p.dim();
    let mut z = vec![0.0; n];
    let mut r: Vec<f64> = x.to_vec();
    let col_sq: Vec<f64> = (0..n).map(|j| (0..m).map(|i| p[[i, j]] * p[[i, j]]).sum()).collect();
    for _ in 0..100_000 {
        let mut max_step: f64 = 0.0;
        for j in 0..n {
            if col_sq[j] == 0.0 {
                continue;
            }
            let mut rho = 0.0;
            for i in 0..m {
                rho += p[[i, j]] * (r[i] + p[[i, j]] * z[j]);
            }
            let new = if rho > eps {
                (rho - eps) / col_sq[j]
            } else if rho < -eps {
                (rho + eps) / col_sq[j]
            } else {
                0.0
            };
            let step = new - z[j];
            if step != 0.0 {
                for i in 0..m {
                    r[i] -= p[[i, j]] * step;
                }
                z[j] = new;
            }
            max_step = max_step.max(step.abs());
        }
        if max_step < tol {
            break;
        }
    }
    z
}

/// Golden-section minimizer of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
    m.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// `½ Σ_c Σ_e Σ_{u,v} W(e) H(u,e) H(v,e) / δ(e) · (S(c,u)/√d(u) − S(c,v)/√d(v))²`
/// with degrees recomputed from scratch.
pub fn hypergraph_smoothness(h: &Array2<f64>, w: &Array1<f64>, s: &Array2<f64>) -> f64 {
    let (nv, ne) = h.dim();
    let delta: Vec<f64> = (0..ne).map(|e| (0..nv).map(|v| h[[v, e]]).sum()).collect();
    let d: Vec<f64> = (0..nv).map(|v| (0..ne).map(|e| w[e] * h[[v, e]]).sum()).collect();
    let mut total = 0.0;
    for c in 0..s.nrows() {
        for e in 0..ne {
            if delta[e] == 0.0 {
                continue;
            }
            for u in 0..nv {
                for v in 0..nv {
                    let diff = s[[c, u]] / d[u].sqrt() - s[[c, v]] / d[v].sqrt();
                    total += w[e] * h[[u, e]] * h[[v, e]] / delta[e] * diff * diff;
                }
            }
        }
    }
    0.5 * total
}

/// Symmetric normalized graph Laplacian `I − D^{-1/2} A D^{-1/2}` of a
/// multigraph given as an edge list.
pub fn normalized_graph_laplacian(n: usize, edges: &[(usize, usize)]) -> Array2<f64> {
    let mut adj = Array2::<f64>::zeros((n, n));
    for &(u, v) in edges {
        adj[[u, v]] += 1.0;
        adj[[v, u]] += 1.0;
    }
    let deg: Vec<f64> = (0..n).map(|u| adj.row(u).sum()).collect();
    let mut l = Array2::<f64>::eye(n);
    for u in 0..n {
        for v in 0..n {
            if adj[[u, v]] != 0.0 {
                l[[u, v]] -= adj[[u, v]] / (deg[u] * deg[v]).sqrt();
            }
        }
    }
    l
}

/// Random nonnegative incidence where every vertex sits in at least one edge.
pub fn random_incidence(nv: usize, ne: usize, density: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut h = Array2::<f64>::zeros((nv, ne));
    for v in 0..nv {
        for e in 0..ne {
            if rng.random::<f64>() < density {
                h[[v, e]] = rng.random::<f64>();
            }
        }
        let e = rng.random_range(0..ne);
        if h[[v, e]] == 0.0 {
            h[[v, e]] = 0.5 + rng.random::<f64>();
        }
    }
    h
}

/// `min_B ‖U − B S‖² + λ‖B‖²` by gradient descent with a step from the
/// Frobenius bound on the Hessian.
pub fn ridge_by_gradient(s: &Array2<f64>, u: &Array2<f64>, lambda: f64, iters: usize) -> Array2<f64> {
    let sst = s.dot(&s.t());
    let lip = 2.0 * (sst.iter().map(|v| v * v).sum::<f64>().sqrt() + lambda);
    let step = 1.0 / lip;
    let mut b = Array2::<f64>::zeros((u.nrows(), s.nrows()));
    let ust = u.dot(&s.t());
    for _ in 0..iters {
        let grad = 2.0 * (b.dot(&sst) - &ust + lambda * &b);
        b = &b - &(step * &grad);
    }
    b
}

pub fn ridge_loss(s: &Array2<f64>, u: &Array2<f64>, b: &Array2<f64>, lambda: f64) -> f64 {
    let r = u - &b.dot(s);
    r.iter().map(|v| v * v).sum::<f64>() + lambda * b.iter().map(|v| v * v).sum::<f64>()
}
