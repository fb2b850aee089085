use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use pushpull_sim::metrics::{consensus_error, weighted_average};

fn weights(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(0.01f64..5.0, n).prop_map(move |w| {
        let s: f64 = w.iter().sum();
        DVector::from_vec(w) * (n as f64 / s)
    })
}

fn matrix(n: usize, p: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-10.0f64..10.0, n * p).prop_map(move |v| DMatrix::from_vec(n, p, v))
}

proptest! {
    #[test]
    fn weighted_average_is_linear((r, a, b) in weights(5).prop_flat_map(|r| (Just(r), matrix(5, 3), matrix(5, 3))), s in -3.0f64..3.0) {
        let lhs = weighted_average(&(&a * s + &b), &r).unwrap();
        let rhs = weighted_average(&a, &r).unwrap() * s + weighted_average(&b, &r).unwrap();
        prop_assert!((lhs - rhs).amax() <= 1e-12);
    }

    #[test]
    fn weighted_average_ignores_r_orthogonal_shifts((r, x, m) in weights(5).prop_flat_map(|r| (Just(r), matrix(5, 3), matrix(5, 3)))) {
        // project m onto {M : rᵀM = 0}
        let proj = &m - &r * (r.transpose() * &m) / r.norm_squared();
        let shifted = weighted_average(&(&x + proj), &r).unwrap();
        prop_assert!((shifted - weighted_average(&x, &r).unwrap()).amax() <= 1e-12);
    }

    #[test]
    fn consensus_error_vanishes_only_at_consensus(r in weights(6), row in prop::collection::vec(-5.0f64..5.0, 4), bump in 1e-3f64..1.0) {
        let x = DMatrix::from_fn(6, 4, |_, j| row[j]);
        prop_assert!(consensus_error(&x, &r).unwrap() <= 1e-12);
        let mut y = x.clone();
        y[(2, 1)] += bump;
        prop_assert!(consensus_error(&y, &r).unwrap() > 1e-12);
    }
}
