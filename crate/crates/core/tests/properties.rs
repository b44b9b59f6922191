mod common;

use ndarray::{Array1, Array2};
use proptest::prelude::*;

use common::*;
use sahdl::dictlearn::{
    encode_test, fit_classifier, predict, update_dictionary, Classifier, Dictionary, SparseCodes,
};
use sahdl::hypergraph::{
    build_lb_hypergraph, build_saf_hypergraph, degrees, hypergraph_laplacian, FeatureMatrix,
    Hypergraph, LabelVector, Modal,
};
use sahdl::sparse_attention::{solve_attention, AdmmParams, AttentionProblem};

fn random_hypergraph(seed: u64, nv: usize, ne: usize) -> Hypergraph {
    use rand::Rng;
    let mut r = rng(seed);
    let h = random_incidence(nv, ne, 0.2, &mut r);
    let w = Array1::from_shape_fn(ne, |_| 0.05 + r.random::<f64>());
    Hypergraph::new(h, w, vec![Modal::Saf; ne]).unwrap()
}

fn unit_columns(mut m: Array2<f64>) -> Array2<f64> {
    for mut c in m.columns_mut() {
        let n = c.dot(&c).sqrt();
        c /= n;
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn laplacian_is_symmetric_psd(seed in any::<u64>(), nv in 2usize..30, ne in 1usize..20) {
        let lap = hypergraph_laplacian(&random_hypergraph(seed, nv, ne)).unwrap();
        let m = lap.matrix();
        for i in 0..nv {
            for j in 0..nv {
                prop_assert!((m[[i, j]] - m[[j, i]]).abs() <= 1e-12);
            }
        }
        prop_assert!(min_eigenvalue(m) >= -1e-8);
    }

    #[test]
    fn degrees_match_plain_sums(seed in any::<u64>(), nv in 1usize..25, ne in 1usize..15) {
        let hg = random_hypergraph(seed, nv, ne);
        let dp = degrees(&hg).unwrap();
        for v in 0..nv {
            let mut d = 0.0;
            for e in 0..ne {
                d += hg.edge_weights[e] * hg.incidence[[v, e]];
            }
            prop_assert_eq!(dp.vertex_degrees[v].to_bits(), d.to_bits());
        }
        for e in 0..ne {
            let mut delta = 0.0;
            for v in 0..nv {
                delta += hg.incidence[[v, e]];
            }
            prop_assert_eq!(dp.edge_degrees[e].to_bits(), delta.to_bits());
        }
    }

    #[test]
    fn saf_entries_are_bounded(seed in any::<u64>(), n in 4usize..20, k in 1usize..4) {
        let mut r = rng(seed);
        let x = FeatureMatrix::new(gaussian_matrix(6, n, &mut r)).unwrap();
        let hg = build_saf_hypergraph(&x, k, &AdmmParams::default()).unwrap();
        prop_assert_eq!(hg.n_edges(), n);
        for c in 0..n {
            prop_assert_eq!(hg.incidence[[c, c]], 1.0);
            let members = hg.incidence.column(c).iter().filter(|v| **v > 0.0).count();
            prop_assert!(members <= k + 1);
            // Entries are a Gaussian kernel (≤ 1) times clamped lasso weights.
            let others: Vec<f64> = (0..n).filter(|&v| v != c).map(|v| hg.incidence[[v, c]]).collect();
            prop_assert!(others.iter().all(|v| *v >= 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn label_hyperedges_are_one_hot(raw in prop::collection::vec(-1i64..4, 1..40)) {
        let labels = LabelVector::from_signed(&raw).unwrap();
        let hg = build_lb_hypergraph(&labels);
        for v in 0..raw.len() {
            let row = hg.incidence.row(v);
            prop_assert!(row.iter().all(|x| *x == 0.0 || *x == 1.0));
            let ones = row.iter().filter(|x| **x == 1.0).count();
            prop_assert_eq!(ones, usize::from(raw[v] >= 0));
        }
    }

    #[test]
    fn attention_follows_column_permutation(seed in any::<u64>(), n in 2usize..8) {
        use rand::seq::SliceRandom;
        let mut r = rng(seed);
        let p = gaussian_matrix(12, n, &mut r);
        let x = gaussian_vector(12, &mut r);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let permuted = Array2::from_shape_fn((12, n), |(i, j)| p[[i, perm[j]]]);
        let params = AdmmParams::with_epsilon(0.05);
        let a = solve_attention(&AttentionProblem::new(x.clone(), p, 0.05).unwrap(), &params).unwrap();
        let b = solve_attention(&AttentionProblem::new(x, permuted, 0.05).unwrap(), &params).unwrap();
        for j in 0..n {
            prop_assert!((b.q[j] - a.q[perm[j]]).abs() <= 1e-5);
        }
    }

    #[test]
    fn predict_ignores_positive_scaling(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let mut r = rng(seed);
        let plane = gaussian_matrix(4, 6, &mut r);
        let codes = SparseCodes::new(gaussian_matrix(6, 15, &mut r)).unwrap();
        let a = predict(&Classifier { plane: plane.clone(), ridge: 1e-3 }, &codes).unwrap();
        let b = predict(&Classifier { plane: plane * scale, ridge: 1e-3 }, &codes).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn encode_matches_attention_solver(seed in any::<u64>(), k in 2usize..10) {
        let mut r = rng(seed);
        let d = Dictionary::new(unit_columns(gaussian_matrix(15, k, &mut r))).unwrap();
        let y = gaussian_vector(15, &mut r);
        let gamma = 0.05;
        let codes = encode_test(&FeatureMatrix::new(y.clone().insert_axis(ndarray::Axis(1))).unwrap(), &d, gamma).unwrap();
        let prob = AttentionProblem::new(y, d.atoms().clone(), gamma).unwrap();
        let admm = solve_attention(&prob, &AdmmParams { max_iter: 5000, ..AdmmParams::with_epsilon(gamma) }).unwrap();
        let ours = prob.objective(codes.codes().column(0));
        prop_assert!((ours - admm.objective).abs() <= 1e-4 * admm.objective.abs());
    }

    #[test]
    fn dictionary_sweep_never_raises_reconstruction(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = FeatureMatrix::new(gaussian_matrix(10, 20, &mut r)).unwrap();
        let mut d = Dictionary::new(unit_columns(gaussian_matrix(10, 6, &mut r))).unwrap();
        let s = SparseCodes::new(gaussian_matrix(6, 20, &mut r)).unwrap();
        let recon = |d: &Dictionary| {
            let res = x.data() - &d.atoms().dot(s.codes());
            res.iter().map(|v| v * v).sum::<f64>()
        };
        let before = recon(&d);
        update_dictionary(&x, &s, &mut d, &mut r).unwrap();
        prop_assert!(recon(&d) <= before + 1e-9);
        for c in d.atoms().columns() {
            prop_assert!((c.dot(&c).sqrt() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn classifier_matches_gradient_descent_ridge() {
    let mut r = rng(42);
    let s = SparseCodes::new(gaussian_matrix(5, 12, &mut r)).unwrap();
    let raw: Vec<i64> = (0..12).map(|i| (i % 3) as i64).collect();
    let labels = LabelVector::from_signed(&raw).unwrap();
    let lambda = 0.1;
    let b = fit_classifier(&s, &labels, lambda).unwrap();
    let mut onehot = Array2::<f64>::zeros((3, 12));
    for (j, c) in raw.iter().enumerate() {
        onehot[[*c as usize, j]] = 1.0;
    }
    let oracle = ridge_by_gradient(s.codes(), &onehot, lambda, 20_000);
    let diff = (&b.plane - &oracle).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(diff < 1e-6, "max entry difference {diff}");
    assert!(ridge_loss(s.codes(), &onehot, &b.plane, lambda) <= ridge_loss(s.codes(), &onehot, &oracle, lambda) + 1e-12);
}

#[test]
fn code_entry_matches_golden_section() {
    use sahdl::dictlearn::{objective, CodeUpdater};
    let mut r = rng(7);
    let x = FeatureMatrix::new(gaussian_matrix(8, 10, &mut r)).unwrap();
    let d = Dictionary::new(unit_columns(gaussian_matrix(8, 4, &mut r))).unwrap();
    let lap = hypergraph_laplacian(&random_hypergraph(8, 10, 5)).unwrap();
    let mut s = SparseCodes::new(gaussian_matrix(4, 10, &mut r)).unwrap();
    let (alpha, beta) = (0.1, 1.5);
    let updater = CodeUpdater::new(&x, &d, &lap, alpha, beta).unwrap();
    for (k, n) in [(0, 0), (3, 9), (2, 4), (1, 7)] {
        let along = |v: f64| {
            let mut t = s.clone();
            t.codes_mut()[[k, n]] = v;
            objective(&x, &d, &t, &lap, alpha, beta).unwrap()
        };
        let best = golden_section(along, -10.0, 10.0, 1e-9);
        updater.update_entry(&mut s, k, n).unwrap();
        assert!((s.codes()[[k, n]] - best).abs() < 1e-6, "({k},{n}): {} vs {best}", s.codes()[[k, n]]);
    }
}
