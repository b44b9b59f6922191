//! l1-sparse attention weights for one hyperedge center.
//!
//! A center feature `x` is reconstructed from its neighbour features `P`
//! under the lasso objective `‖x − Pz‖² + 2ε‖z‖₁`. The problem is split as
//! `z = q` and solved with ADMM: a ridge solve for `z` against a cached
//! Cholesky factor of `PᵀP + ρI`, a soft-threshold step for `q`, and a dual
//! ascent step of size `θ` for the multiplier `m`.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SahdlError};
use crate::linalg::{max_abs, Cholesky};

#[derive(Debug, Clone)]
pub struct AttentionProblem {
    /// Center feature, length `dim`.
    pub x: Array1<f64>,
    /// Neighbour features, `dim × n_neighbors`.
    pub p: Array2<f64>,
    pub epsilon: f64,
}

impl AttentionProblem {
    pub fn new(x: Array1<f64>, p: Array2<f64>, epsilon: f64) -> Result<Self> {
        if p.ncols() == 0 {
            return Err(SahdlError::Parameter(
                "attention problem needs at least one neighbour".into(),
            ));
        }
        if p.nrows() != x.len() {
            return Err(SahdlError::Parameter(format!(
                "center has dim {} but neighbours have dim {}",
                x.len(),
                p.nrows()
            )));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(SahdlError::Parameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if x.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(SahdlError::Input(
                "attention problem contains a non-finite value".into(),
            ));
        }
        Ok(AttentionProblem { x, p, epsilon })
    }

    /// `‖x − Pw‖² + 2ε‖w‖₁`.
    pub fn objective(&self, w: ArrayView1<f64>) -> f64 {
        let r = &self.x - &self.p.dot(&w);
        r.dot(&r) + 2.0 * self.epsilon * w.iter().map(|v| v.abs()).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmParams {
    /// Sparsity weight ε.
    pub epsilon: f64,
    /// Penalty ρ on `‖z − q‖²`.
    pub rho: f64,
    /// Dual step size θ.
    pub theta: f64,
    pub max_iter: usize,
    /// Stop once `‖z − q‖∞ ≤ tol` and `ρ‖Δq‖∞ ≤ tol`.
    pub tol: f64,
}

impl Default for AdmmParams {
    fn default() -> Self {
        AdmmParams {
            epsilon: 2f64.powi(-6),
            rho: 1.0,
            theta: 1.0,
            max_iter: 200,
            tol: 1e-6,
        }
    }
}

impl AdmmParams {
    /// Default solver settings with the given sparsity weight.
    pub fn with_epsilon(epsilon: f64) -> Self {
        AdmmParams {
            epsilon,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SahdlError::Parameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("rho", self.rho)?;
        positive("theta", self.theta)?;
        positive("tol", self.tol)?;
        if self.max_iter == 0 {
            return Err(SahdlError::Parameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AttentionSolution {
    /// Ridge-step iterate.
    pub z: Array1<f64>,
    /// Sparse iterate; the canonical attention weights. Without convergence,
    /// the iterate with the lowest objective.
    pub q: Array1<f64>,
    /// Scaled multiplier.
    pub m: Array1<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Lasso objective at `q`.
    pub objective: f64,
    /// Lasso objective at `q` after every iteration.
    pub objective_trace: Vec<f64>,
}

/// Entrywise `max(v − t, 0) + min(v + t, 0)`.
pub fn soft_threshold(v: ArrayView1<f64>, t: f64) -> Array1<f64> {
    v.mapv(|x| soft_threshold_scalar(x, t))
}

#[inline]
pub fn soft_threshold_scalar(v: f64, t: f64) -> f64 {
    (v - t).max(0.0) + (v + t).min(0.0)
}

/// Runs ADMM from `z = q = m = 0` until both the split residual `‖z − q‖∞`
/// and the dual residual `ρ‖q − q_prev‖∞` drop below `params.tol`, or
/// `params.max_iter` iterations elapse.
///
/// The sparsity weight comes from `prob.epsilon`; `params.epsilon` is only
/// used by callers that build problems from params.
pub fn solve_attention(prob: &AttentionProblem, params: &AdmmParams) -> Result<AttentionSolution> {
    params.validate()?;
    let n = prob.p.ncols();
    let rho = params.rho;
    let threshold = prob.epsilon / rho;

    let mut gram = prob.p.t().dot(&prob.p);
    for i in 0..n {
        gram[[i, i]] += rho;
    }
    let factor = Cholesky::factor(gram.view())?;
    let ptx = prob.p.t().dot(&prob.x);

    let mut z = Array1::<f64>::zeros(n);
    let mut q = Array1::<f64>::zeros(n);
    let mut m = Array1::<f64>::zeros(n);
    let mut trace = Vec::with_capacity(params.max_iter);
    let mut converged = false;
    let mut iterations = 0;
    let mut best = (f64::INFINITY, Array1::<f64>::zeros(n));

    while iterations < params.max_iter {
        iterations += 1;
        let rhs = &ptx + &(rho * &q) - &m;
        z = factor.solve(rhs.view());
        let shifted = &z + &(&m / rho);
        let q_next = soft_threshold(shifted.view(), threshold);
        let dual_residual = rho * max_abs((&q_next - &q).view());
        q = q_next;
        let gap = &z - &q;
        m.scaled_add(params.theta, &gap);

        if z.iter().chain(q.iter()).chain(m.iter()).any(|v| !v.is_finite()) {
            return Err(SahdlError::Numerical(format!(
                "attention ADMM produced a non-finite iterate at iteration {iterations} \
                 (rho={rho}, epsilon={})",
                prob.epsilon
            )));
        }
        let obj = prob.objective(q.view());
        if obj < best.0 {
            best = (obj, q.clone());
        }
        trace.push(obj);
        // z and q can meet before m settles, so the dual residual must
        // also be small.
        if max_abs(gap.view()) <= params.tol && dual_residual <= params.tol {
            converged = true;
            break;
        }
    }

    if !converged {
        q = best.1;
    }
    let objective = prob.objective(q.view());
    Ok(AttentionSolution {
        z,
        q,
        m,
        iterations,
        converged,
        objective,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn soft_threshold_examples() {
        let v = array![2.0, -2.0, 0.5];
        assert_eq!(soft_threshold(v.view(), 1.0), array![1.0, -1.0, 0.0]);
        let w = array![0.3, -4.0, 0.0, 1e-9];
        assert_eq!(soft_threshold(w.view(), 0.0), w);
    }

    #[test]
    fn soft_threshold_is_scalar_prox() {
        // argmin_u t|u| + (u - v)^2 / 2 by dense grid search.
        for &(v, t) in &[(1.3, 0.4), (-0.7, 0.2), (0.1, 0.5), (-2.0, 2.5), (0.9, 0.0)] {
            let f = |u: f64| t * u.abs() + 0.5 * (u - v) * (u - v);
            let mut best = (f64::INFINITY, 0.0);
            let mut u = -4.0;
            while u <= 4.0 {
                let val = f(u);
                if val < best.0 {
                    best = (val, u);
                }
                u += 1e-4;
            }
            assert!((soft_threshold_scalar(v, t) - best.1).abs() < 2e-4);
        }
    }

    #[test]
    fn single_unit_column_matches_scalar_lasso() {
        let x = array![0.6, 0.8];
        let p = x.clone().insert_axis(ndarray::Axis(1));
        let prob = AttentionProblem::new(x, p, 0.1).unwrap();
        let sol = solve_attention(&prob, &AdmmParams::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.q[0] - 0.9).abs() < 1e-6, "q = {}", sol.q[0]);
    }

    #[test]
    fn large_epsilon_gives_zero_weights() {
        let x = array![1.0, -0.5, 0.25];
        let p = array![[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]];
        let ptx = p.t().dot(&x);
        let eps = max_abs(ptx.view()) + 1e-3;
        let prob = AttentionProblem::new(x, p, eps).unwrap();
        let sol = solve_attention(&prob, &AdmmParams::default()).unwrap();
        assert!(sol.q.iter().all(|&v| v == 0.0));
        assert!(sol.converged);
    }

    #[test]
    fn rejects_bad_problems() {
        let p = Array2::<f64>::zeros((3, 0));
        assert!(AttentionProblem::new(Array1::zeros(3), p, 0.1).is_err());
        let p = Array2::<f64>::zeros((2, 1));
        assert!(AttentionProblem::new(Array1::zeros(3), p, 0.1).is_err());
        let p = array![[f64::NAN], [0.0]];
        assert!(matches!(
            AttentionProblem::new(Array1::zeros(2), p, 0.1),
            Err(SahdlError::Input(_))
        ));
    }

    #[test]
    fn deterministic_output() {
        let x = array![0.3, -1.2, 0.7, 0.1];
        let p = array![[1.0, 0.2, -0.3], [0.1, -1.0, 0.4], [0.5, 0.5, 0.9], [0.0, 0.3, -0.2]];
        let prob = AttentionProblem::new(x, p, 0.05).unwrap();
        let a = solve_attention(&prob, &AdmmParams::default()).unwrap();
        let b = solve_attention(&prob, &AdmmParams::default()).unwrap();
        assert_eq!(a.q, b.q);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }
}
