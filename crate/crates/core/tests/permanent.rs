use bosim_core::matrix::SquareComplexMatrix;
use bosim_core::permanent::{
    cycle_restricted_sum, glynn_estimate, permanent_bruteforce, permanent_exact, weighted_perm_sum, xi_rescale,
    CutoffPolicy,
};
use bosim_core::rng::seeded;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn random_matrix(n: usize, seed: u64) -> SquareComplexMatrix {
    let mut rng = seeded(seed);
    SquareComplexMatrix::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn exact_matches_bruteforce_up_to_7() {
    for n in 1..=7 {
        for s in 0..50 {
            let a = random_matrix(n, 1000 * n as u64 + s);
            let e = permanent_exact(&a).unwrap();
            let b = permanent_bruteforce(&a).unwrap();
            assert!(rel_err(e, b) < 1e-9, "n={n} seed={s}");
        }
    }
}

#[test]
fn weighted_sum_is_permanent_of_rescaled_matrix() {
    for n in 1..=7 {
        for xi in [0.0, 0.3, 0.7, 1.0] {
            let a = random_matrix(n, 77 + n as u64);
            let w = weighted_perm_sum(&a, xi).unwrap();
            let p = permanent_exact(&xi_rescale(&a, xi)).unwrap();
            assert!(rel_err(w, p) < 1e-10, "n={n} xi={xi}");
            let full = cycle_restricted_sum(&a, &CutoffPolicy::new(n, xi).unwrap()).unwrap();
            assert!(rel_err(full, w) < 1e-10, "K = n, n={n} xi={xi}");
        }
    }
}

#[test]
fn cycle_restricted_sum_grows_with_k_on_nonnegative_matrices() {
    let mut rng = seeded(5);
    for n in 2..=7 {
        let a = SquareComplexMatrix::from_fn(n, |_, _| Complex64::new(rng.random::<f64>(), 0.0));
        for xi in [0.0, 0.4, 1.0] {
            let mut prev = f64::NEG_INFINITY;
            for k in 1..=n {
                let v = cycle_restricted_sum(&a, &CutoffPolicy::new(k, xi).unwrap()).unwrap().re;
                assert!(v >= prev - 1e-12, "n={n} xi={xi} k={k}");
                prev = v;
            }
        }
    }
}

#[test]
fn glynn_estimate_is_unbiased() {
    let a = random_matrix(4, 31);
    let exact = permanent_exact(&a).unwrap();
    let runs = 200;
    let ests: Vec<_> = (0..runs).map(|s| glynn_estimate(&a, 64, 5000 + s).unwrap()).collect();
    let mean = ests.iter().map(|e| e.estimate).sum::<Complex64>() / runs as f64;
    let pooled = (ests.iter().map(|e| e.std_error * e.std_error).sum::<f64>() / runs as f64).sqrt();
    let se_of_mean = pooled / (runs as f64).sqrt();
    assert!((mean - exact).norm() < 4.0 * se_of_mean, "{mean} vs {exact}");
}

fn matrix_strategy(max_n: usize) -> impl Strategy<Value = SquareComplexMatrix> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
            SquareComplexMatrix::from_row_major(n, v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
                .unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permanent_is_invariant_under_row_permutation_and_transpose(a in matrix_strategy(6), shift in 0usize..6) {
        let n = a.n();
        let p = permanent_exact(&a).unwrap();
        let rows: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let cols: Vec<usize> = (0..n).collect();
        let permuted = a.select(&rows, &cols);
        let transposed = SquareComplexMatrix::from_fn(n, |i, j| a[(j, i)]);
        let scale = p.norm().max(1e-6);
        prop_assert!((permanent_exact(&permuted).unwrap() - p).norm() <= 1e-10 * scale.max(1.0));
        prop_assert!((permanent_exact(&transposed).unwrap() - p).norm() <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn permanent_is_linear_in_each_row(a in matrix_strategy(6), c in -2.0f64..2.0) {
        let n = a.n();
        let scaled = SquareComplexMatrix::from_fn(n, |i, j| if i == 0 { a[(i, j)] * c } else { a[(i, j)] });
        let p = permanent_exact(&a).unwrap();
        prop_assert!((permanent_exact(&scaled).unwrap() - p * c).norm() <= 1e-10 * (1.0 + p.norm()));
    }

    #[test]
    fn k1_is_the_diagonal_product(a in matrix_strategy(8), xi in 0.0f64..=1.0) {
        let v = cycle_restricted_sum(&a, &CutoffPolicy::new(1, xi).unwrap()).unwrap();
        prop_assert!((v - a.diag_product()).norm() <= 1e-12 * (1.0 + v.norm()));
    }
}
