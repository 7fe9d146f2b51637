use banach_core::normspace::{Body, Exponent};
use banach_core::rip_jl::{
    binomial, cotype_gap_check, gaussian_rip, general_rip, jl_dimension, jl_sparse, random_sparse_family, rip_of_sketch,
    NormedBasis, RatioSearch, SketchOperator,
};
use banach_core::spherestats::sample_orthogonal;
use banach_core::{Error, Seed};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Extreme singular values over all supports by full SVD of each block.
fn brute_rip(op: &SketchOperator<f64>, k: usize) -> (f64, f64) {
    let n = op.n();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut stack = vec![(0usize, Vec::new())];
    while let Some((start, s)) = stack.pop() {
        if s.len() == k {
            let sv = (op.g.select_columns(&s) * op.scale).singular_values();
            lo = lo.min(sv.min());
            hi = hi.max(sv.max());
            continue;
        }
        for j in start..n {
            let mut t = s.clone();
            t.push(j);
            stack.push((j + 1, t));
        }
    }
    (lo, hi)
}

#[test]
fn single_columns_match_column_norms() {
    for seed in 0..5 {
        let op = SketchOperator::<f64>::new(40, 25, Seed(seed)).unwrap();
        let r = gaussian_rip(25, 40, 1, 0.3, Seed(seed), 1000).unwrap();
        let norms: Vec<f64> = (0..25).map(|j| op.g.column(j).norm() / 40f64.sqrt()).collect();
        let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = norms.iter().copied().fold(0.0, f64::max);
        assert!((r.worst_lo - lo).abs() < 1e-12, "{} vs {lo}", r.worst_lo);
        assert!((r.worst_hi - hi).abs() < 1e-12);
        assert!(!r.partial && r.exact);
    }
}

#[test]
fn enumerated_extremes_match_svd() {
    let op = SketchOperator::<f64>::new(12, 9, Seed(3)).unwrap();
    for k in 1..=4 {
        let r = rip_of_sketch(&op, k, 0.5, Seed(3), 10_000).unwrap();
        let (lo, hi) = brute_rip(&op, k);
        assert_eq!(r.tested_supports as u128, binomial(9, k));
        assert!((r.worst_lo - lo).abs() < 1e-10 && (r.worst_hi - hi).abs() < 1e-10, "k={k}");
    }
}

#[test]
fn larger_supports_are_worse() {
    let mut prev = (f64::INFINITY, 0.0);
    for k in 1..=5 {
        let r = gaussian_rip(14, 30, k, 0.5, Seed(8), 10_000).unwrap();
        assert!(!r.partial);
        assert!(r.worst_lo <= prev.0 + 1e-14 && r.worst_hi >= prev.1 - 1e-14);
        prev = (r.worst_lo, r.worst_hi);
    }
}

#[test]
fn rank_deficient_supports() {
    let r = gaussian_rip(20, 3, 4, 0.9, Seed(1), 100).unwrap();
    assert!(!r.pass && r.worst_lo == 0.0);
    assert_eq!(r.reason.as_deref(), Some("rank deficient"));
    assert!(matches!(gaussian_rip(20, 3, 0, 0.5, Seed(1), 100), Err(Error::Domain(_))));
    assert!(matches!(gaussian_rip(20, 3, 2, 1.5, Seed(1), 100), Err(Error::Domain(_))));
}

#[test]
fn sampled_supports_are_flagged() {
    let r = gaussian_rip(64, 200, 3, 0.5, Seed(4), 500).unwrap();
    assert!(r.partial);
    // Sampled supports plus the swap-refined ones.
    assert!(r.tested_supports >= 500);
    let op = SketchOperator::<f64>::new(200, 64, Seed(4)).unwrap();
    let (lo, hi) = brute_rip(&op, 3);
    assert!(r.worst_lo >= lo - 1e-12 && r.worst_hi <= hi + 1e-12);
    // The swap search should land close to the true extremes.
    assert!(r.worst_lo - lo < 0.02 && hi - r.worst_hi < 0.02, "{} {lo} {} {hi}", r.worst_lo, r.worst_hi);
}

#[test]
fn euclidean_general_rip_is_gaussian_rip() {
    for seed in [1u64, 2, 3] {
        let x = NormedBasis::standard(Body::<f64>::euclidean(16));
        let y = NormedBasis::standard(Body::<f64>::euclidean(24));
        let g = general_rip(&x, &y, 3, 0.4, Seed(seed), &RatioSearch::default(), 10_000).unwrap();
        let r = gaussian_rip(16, 24, 3, 0.4, Seed(seed), 10_000).unwrap();
        assert_eq!(g.worst_lo.to_bits(), r.worst_lo.to_bits());
        assert_eq!(g.worst_hi.to_bits(), r.worst_hi.to_bits());
        assert_eq!(g.pass, r.pass);
    }
}

#[test]
fn searched_ratios_approach_singular_values() {
    // A doubled basis is not orthonormal, so the generic search runs.
    let x = NormedBasis::new(Body::<f64>::euclidean(10), DMatrix::identity(10, 10) * 2.0).unwrap();
    let y = NormedBasis::standard(Body::<f64>::euclidean(20));
    let search = RatioSearch { n_samples: 300, restarts: 5, max_steps: 300 };
    let g = general_rip(&x, &y, 2, 0.5, Seed(6), &search, 10_000).unwrap();
    let r = gaussian_rip(10, 20, 2, 0.5, Seed(6), 10_000).unwrap();
    assert!(!g.exact);
    let (lo, hi) = (r.worst_lo / 2.0, r.worst_hi / 2.0);
    assert!(g.worst_lo >= lo - 1e-9 && g.worst_hi <= hi + 1e-9);
    assert!(g.worst_lo - lo < 1e-4 && hi - g.worst_hi < 1e-4, "{g:?} {r:?}");
}

#[test]
fn general_rip_bounds_coordinate_ratios() {
    let n = 12;
    let m = 30;
    let mut rng = Seed(9).rng();
    let e = sample_orthogonal::<f64, _>(n, &mut rng).unwrap();
    let x = NormedBasis::new(Body::cross_polytope(n), e.clone()).unwrap();
    let y = NormedBasis::standard(Body::<f64>::euclidean(m));
    let g = general_rip(&x, &y, 2, 0.4, Seed(2), &RatioSearch::default(), 10_000).unwrap();
    let op = SketchOperator::<f64>::new(m, n, Seed(2)).unwrap();
    for j in 0..n {
        let ratio = op.g.column(j).norm() * op.scale / e.column(j).lp_norm(1);
        assert!(g.worst_lo <= ratio + 1e-12 && ratio <= g.worst_hi + 1e-12);
    }
    let bad = NormedBasis::new(Body::<f64>::euclidean(n), DMatrix::identity(n, n + 1));
    assert!(matches!(bad, Err(Error::Domain(_))));
}

#[test]
fn jl_dimension_formula() {
    assert_eq!(jl_dimension(32, 0.5, 8.0), 111);
    assert_eq!(jl_dimension(1000, 0.1, 1.0), 691);
}

#[test]
fn jl_on_sparse_points() {
    let n = 256;
    let omega = random_sparse_family::<f64>(n, 4, 32, Seed(10)).unwrap();
    let x = NormedBasis::standard(Body::<f64>::euclidean(n));
    let r = jl_sparse(&x, &omega, 4, 0.5, 8.0, Seed(11)).unwrap();
    assert_eq!((r.m, r.pairs), (111, 496));
    assert!(r.pass && r.max_error < 0.5);

    let scaled: Vec<DVector<f64>> = omega.iter().map(|a| a * 3.0).collect();
    let s = jl_sparse(&x, &scaled, 4, 0.5, 8.0, Seed(11)).unwrap();
    assert!((s.max_error - r.max_error).abs() < 1e-12);

    assert!(matches!(jl_sparse(&x, &omega, 3, 0.5, 8.0, Seed(11)), Err(Error::Domain(_))));
    let same = vec![omega[0].clone(), omega[0].clone()];
    assert!(matches!(jl_sparse(&x, &same, 4, 0.5, 8.0, Seed(11)), Err(Error::Degenerate(_))));
}

#[test]
fn cotype_gap() {
    let r = cotype_gap_check(&Body::<f64>::euclidean(32), Exponent::Finite(2.0), 1.0, 500, Seed(1)).unwrap();
    assert!((r.m_estimate - 1.0).abs() < 1e-12 && r.bound == 1.0 && (r.fitted_c - 1.0).abs() < 1e-12);
    let c = cotype_gap_check(&Body::<f64>::cube(64), Exponent::Infinite, 0.5, 2000, Seed(1)).unwrap();
    assert!((c.bound - 0.5 / 8.0).abs() < 1e-15);
    assert!(c.m_estimate > c.bound);
    assert!(matches!(cotype_gap_check(&Body::<f64>::cube(4), Exponent::Finite(1.5), 0.5, 10, Seed(1)), Err(Error::Domain(_))));
    assert!(matches!(cotype_gap_check(&Body::<f64>::cube(4), Exponent::Finite(3.0), 0.0, 10, Seed(1)), Err(Error::Domain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn passing_is_monotone_in_eps(seed in 0u64..1000, e1 in 0.05f64..0.95, e2 in 0.05f64..0.95) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = gaussian_rip(12, 40, 2, lo, Seed(seed), 1000).unwrap();
        let b = gaussian_rip(12, 40, 2, hi, Seed(seed), 1000).unwrap();
        prop_assert_eq!(a.worst_lo, b.worst_lo);
        prop_assert!(!a.pass || b.pass);
    }

    #[test]
    fn jl_error_is_scale_free(seed in 0u64..1000, c in 0.01f64..100.0) {
        let omega = random_sparse_family::<f64>(40, 3, 8, Seed(seed)).unwrap();
        let x = NormedBasis::standard(Body::<f64>::cube(40));
        let a = jl_sparse(&x, &omega, 3, 0.5, 8.0, Seed(seed)).unwrap();
        let scaled: Vec<DVector<f64>> = omega.iter().map(|v| v * c).collect();
        let b = jl_sparse(&x, &scaled, 3, 0.5, 8.0, Seed(seed)).unwrap();
        prop_assert!((a.max_error - b.max_error).abs() < 1e-9 * (1.0 + a.max_error));
    }
}
