use std::time::Instant;

use banach_core::johnpos::{analytic_john_radius, john_transform, mvee, verify_sandwich};
use banach_core::normspace::{Body, BodySpec, Exponent};
use banach_core::{Error, Seed};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

/// Largest r with r·B_2 inside B_p^n, from a dense grid over the sphere in
/// dimensions 2 and 3: r = 1 / max_θ ‖θ‖_p.
fn inradius_grid(p: f64, n: usize) -> f64 {
    let norm = |v: &[f64]| {
        if p.is_infinite() {
            v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        } else {
            v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
        }
    };
    let steps = 2000;
    let mut best = 0.0f64;
    for i in 0..=steps {
        let a = std::f64::consts::FRAC_PI_2 * i as f64 / steps as f64;
        if n == 2 {
            best = best.max(norm(&[a.cos(), a.sin()]));
        } else {
            for j in 0..=steps / 4 {
                let b = std::f64::consts::FRAC_PI_2 * j as f64 / (steps / 4) as f64;
                best = best.max(norm(&[a.cos() * b.sin(), a.sin() * b.sin(), b.cos()]));
            }
        }
    }
    1.0 / best
}

#[test]
fn analytic_radii_match_grid_oracle() {
    for n in [2, 3] {
        for p in [1.0, 1.5, 2.0, 3.0, 4.0, f64::INFINITY] {
            let e = if p.is_infinite() { Exponent::Infinite } else { Exponent::Finite(p) };
            let r: f64 = analytic_john_radius(e, n);
            let oracle = inradius_grid(p, n);
            assert!((r - oracle).abs() < 1e-5, "p={p} n={n}: {r} vs {oracle}");
        }
    }
}

#[test]
fn closed_form_radii() {
    for n in [4, 16, 64, 1000] {
        let nf = n as f64;
        let r1: f64 = analytic_john_radius(Exponent::Finite(1.0), n);
        assert!((r1 - 1.0 / nf.sqrt()).abs() < 1e-12);
        let r15: f64 = analytic_john_radius(Exponent::Finite(1.5), n);
        assert!((r15 - nf.powf(0.5 - 1.0 / 1.5)).abs() < 1e-12);
        assert_eq!(analytic_john_radius::<f64>(Exponent::Finite(4.0), n), 1.0);
        assert_eq!(analytic_john_radius::<f64>(Exponent::Infinite, n), 1.0);
    }
}

#[test]
fn square_polar_reproduces_unit_disk() {
    let jp = john_transform(&Body::<f64>::facets(DMatrix::identity(2, 2)).unwrap()).unwrap();
    let m = jp.map.matrix().clone();
    assert!((m.transpose() * &m - DMatrix::identity(2, 2)).amax() < 1e-5);
}

#[test]
fn mvee_examples() {
    let e = mvee(&DMatrix::<f64>::identity(2, 2), 1e-7).unwrap();
    assert!((e.ellipsoid.shape - DMatrix::identity(2, 2)).amax() < 1e-6);
    let e = mvee(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]), 1e-7).unwrap();
    assert!((e.ellipsoid.shape - DMatrix::identity(2, 2) * 0.5).amax() < 1e-6);
    let err = mvee(&DMatrix::from_row_slice(2, 1, &[1.0, 0.0]), 1e-7);
    assert!(matches!(err, Err(Error::Degenerate(_))));
}

#[test]
fn mvee_of_axis_box_matches_brute_force() {
    // Points (±a, ±b): over axis-aligned ellipses x²/u + y²/v ≤ 1 the volume
    // √(uv) is minimal subject to a²/u + b²/v = 1 at u = 2a², v = 2b².
    let (a, b) = (3.0, 0.5);
    let e = mvee(&DMatrix::from_row_slice(2, 2, &[a, a, b, -b]), 1e-9).unwrap();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 1..4000 {
        let s = i as f64 / 4000.0;
        let (u, v) = (a * a / s, b * b / (1.0 - s));
        let vol = (u * v).sqrt();
        if vol < best.0 {
            best = (vol, u, v);
        }
    }
    assert!((1.0 / e.ellipsoid.shape[(0, 0)] - best.1).abs() < 1e-2 * best.1);
    assert!((1.0 / e.ellipsoid.shape[(1, 1)] - best.2).abs() < 1e-2 * best.2);
    assert!(e.ellipsoid.shape[(0, 1)].abs() < 1e-6);
}

#[test]
fn mvee_ignores_interior_points() {
    let mut rng = Seed(3).rng();
    let pts = DMatrix::from_fn(4, 12, |_, _| rng.random::<f64>() - 0.5);
    let e1 = mvee(&pts, 1e-9).unwrap();
    let inner = pts.column(0) * 0.3 + pts.column(1) * 0.2;
    let mut more = pts.clone().insert_column(12, 0.0);
    more.set_column(12, &inner);
    let e2 = mvee(&more, 1e-9).unwrap();
    assert!((e1.ellipsoid.shape - e2.ellipsoid.shape).amax() < 1e-5);
}

fn contact_checks(body: &Body<f64>) {
    let jp = john_transform(body).unwrap();
    let cert = &jp.certificate;
    assert!(!cert.contacts.is_empty());
    assert!(cert.decomposition_error() < 1e-5, "decomposition {}", cert.decomposition_error());
    for v in &cert.contacts {
        assert!((v.norm() - 1.0).abs() < 1e-10);
        let g = jp.body.gauge_value(v).unwrap();
        let h = jp.body.dual_gauge(v).unwrap();
        assert!((g - 1.0).abs() < 1e-5 && (h - 1.0).abs() < 1e-5, "gauge {g} dual {h}");
    }
}

#[test]
fn contacts_are_unit_in_body_and_polar() {
    for n in [3, 8, 13] {
        for p in [Exponent::Finite(1.0), Exponent::Finite(1.5), Exponent::Finite(4.0), Exponent::Infinite] {
            contact_checks(&Body::pnorm(n, p).unwrap());
        }
        let spec = BodySpec::RandomPolytope { dim: n, facets: 3 * n, seed: 5 };
        contact_checks(&spec.build().unwrap());
    }
}

#[test]
fn transform_is_idempotent_up_to_rotation() {
    for seed in 0..3 {
        let body: Body<f64> = BodySpec::RandomPolytope { dim: 10, facets: 25, seed }.build().unwrap();
        let once = john_transform(&body).unwrap();
        let twice = john_transform(&once.body).unwrap();
        let m = twice.map.matrix().clone();
        let sv = m.singular_values();
        assert!(sv.iter().all(|s| (s - 1.0).abs() < 1e-5), "{sv:?}");
    }
}

#[test]
fn facet_transform_at_n64_is_fast() {
    let body: Body<f64> = BodySpec::RandomPolytope { dim: 64, facets: 128, seed: 9 }.build().unwrap();
    let start = Instant::now();
    let jp = john_transform(&body).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 1.0, "{elapsed}s");
    assert!(jp.certificate.decomposition_error() < 1e-5);
}

#[test]
fn sandwich_holds_after_transform() {
    let r = verify_sandwich(&Body::<f64>::euclidean(8), 1000, Seed(1)).unwrap();
    assert!(r.pass && (r.min_gauge - 1.0).abs() < 1e-12 && (r.max_gauge - 1.0).abs() < 1e-12);
    for p in [Exponent::Finite(1.0), Exponent::Infinite] {
        let jp = john_transform(&Body::<f64>::pnorm(8, p).unwrap()).unwrap();
        let r = verify_sandwich(&jp.body, 100_000, Seed(2)).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.min_gauge >= 8f64.powf(-0.5) - 1e-9 && r.max_gauge <= 1.0 + 1e-9);
    }
}

#[test]
fn linear_image_is_undone() {
    let mut rng = Seed(4).rng();
    let a = DMatrix::from_fn(5, 5, |i, j| if i == j { 1.5 } else { 0.0 } + 0.4 * (rng.random::<f64>() - 0.5));
    let base = Body::<f64>::pnorm(5, Exponent::Finite(1.0)).unwrap();
    let img = Body::linear_image(a, base).unwrap();
    let jp = john_transform(&img).unwrap();
    for _ in 0..20 {
        let x = DVector::from_fn(5, |_, _| rng.random::<f64>() - 0.5);
        let direct = jp.body.gauge_value(&(jp.map.matrix() * &x)).unwrap();
        let via = img.gauge_value(&x).unwrap();
        assert!((direct - via).abs() < 1e-9 * via);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mvee_contains_its_points(seed in 0u64..1000, n in 2usize..6, extra in 0usize..10) {
        let mut rng = Seed(seed).rng();
        let pts = DMatrix::from_fn(n, n + extra, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        match mvee(&pts, 1e-8) {
            Ok(e) => {
                for j in 0..pts.ncols() {
                    prop_assert!(e.ellipsoid.gauge(&pts.column(j).into_owned()) <= 1.0 + 1e-6);
                }
                prop_assert!(e.gap >= 1.0 - 1e-12 && e.gap <= 1.0 + 1e-8);
            }
            Err(Error::Degenerate(_)) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}
