use banach_core::normspace::{
    dual_gauge, euclid_project, gauge, hull_gauge, Body, BodySpec, Exponent, PSpec, Weights,
};
use banach_core::spherestats::sample_sphere;
use banach_core::Seed;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

/// Hull gauges over general linear images of p-norm balls are not provided.
fn supported<T>(r: banach_core::Result<T>) -> Option<T> {
    match r {
        Err(banach_core::Error::Unsupported(_)) => None,
        r => Some(r.unwrap()),
    }
}

fn bodies(n: usize, seed: u64) -> Vec<Body<f64>> {
    let mut rng = Seed(seed).rng();
    let w = DVector::from_fn(n, |_, _| 0.5 + rng.random::<f64>());
    let facets = DMatrix::from_fn(n, 2 * n, |_, _| rng.random::<f64>() - 0.5);
    let verts = DMatrix::from_fn(n, 2 * n, |_, _| rng.random::<f64>() - 0.5);
    let map = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { 0.0 } + 0.3 * (rng.random::<f64>() - 0.5));
    let mut out = Vec::new();
    for p in [Exponent::Finite(1.0), Exponent::Finite(1.5), Exponent::Finite(2.0), Exponent::Finite(4.0), Exponent::Infinite] {
        out.push(Body::pnorm(n, p).unwrap());
        out.push(Body::weighted_pnorm(p, Weights::PerCoord(w.clone()), n).unwrap());
    }
    out.push(Body::facets(facets).unwrap());
    out.push(Body::vertices(verts).unwrap());
    out.push(Body::linear_image(map, Body::pnorm(n, Exponent::Finite(3.0)).unwrap()).unwrap());
    out
}

/// `max_y <x,y> / max(h_K(y), t|y|)` over a fine circle of directions, then
/// refined by golden section around the best angle.
fn hull_dual_oracle_2d(inner: &Body<f64>, t: f64, x: &DVector<f64>) -> f64 {
    let ratio = |a: f64| {
        let y = DVector::from_vec(vec![a.cos(), a.sin()]);
        x.dot(&y) / dual_gauge(inner, &y).unwrap().max(t)
    };
    let m = 20_000;
    let step = std::f64::consts::TAU / m as f64;
    let (mut best_a, mut best) = (0.0, f64::NEG_INFINITY);
    for k in 0..m {
        let a = k as f64 * step;
        let r = ratio(a);
        if r > best {
            best = r;
            best_a = a;
        }
    }
    let (mut lo, mut hi) = (best_a - step, best_a + step);
    for _ in 0..80 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if ratio(m1) < ratio(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    best.max(ratio(0.5 * (lo + hi)))
}

#[test]
fn hull_gauge_matches_dual_oracle_in_the_plane() {
    let mut rng = Seed(11).rng();
    for (bi, inner) in bodies(2, 5).iter().enumerate() {
        for &t in &[1.0, 1.3, 2.0, 5.0] {
            for _ in 0..4 {
                let x = DVector::from_fn(2, |_, _| rng.random::<f64>() * 4.0 - 2.0);
                let Some(g) = supported(hull_gauge(inner, t, &x)) else { continue };
                let g = g.value;
                let oracle = hull_dual_oracle_2d(inner, t, &x);
                assert!((g - oracle).abs() <= 1e-7 * oracle.max(1e-3), "body {bi} t={t}: {g} vs {oracle}");
            }
        }
    }
}

#[test]
fn certificates_satisfy_pairing_identity() {
    let mut rng = Seed(12).rng();
    for n in [3, 6] {
        for (bi, b) in bodies(n, 7).iter().enumerate() {
            for &t in &[1.0, 2.0, 3.5] {
                let h = Body::hull(b.clone(), t).unwrap();
                for (k, body) in [b, &h].into_iter().enumerate() {
                    let x = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
                    let Some(g) = supported(gauge(body, &x)) else { continue };
                    let y = g.certificate.unwrap_or_else(|| panic!("no certificate: body {bi} hull {k} n={n} t={t} x={x:?}"));
                    let d = dual_gauge(body, &y).unwrap();
                    assert!((x.dot(&y) - g.value * d).abs() <= 1e-8 * g.value, "body {bi} n={n} t={t}");
                }
            }
        }
    }
}

#[test]
fn polytope_gauges_close_their_duality_gap() {
    let mut rng = Seed(13).rng();
    for n in [2, 5, 9] {
        let v = DMatrix::from_fn(n, 3 * n, |_, _| rng.random::<f64>() - 0.5);
        let verts = Body::vertices(v.clone()).unwrap();
        let facets = Body::facets(v).unwrap();
        for _ in 0..20 {
            let x = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
            // vertex gauge = min ‖μ‖₁; any y with |Vᵀy|_∞ <= 1 gives <x,y> as a lower bound
            let g = gauge(&verts, &x).unwrap();
            let y = g.certificate.unwrap();
            let feas = dual_gauge(&verts, &y).unwrap();
            assert!(feas <= 1.0 + 1e-10);
            assert!((x.dot(&y) - g.value).abs() <= 1e-9 * g.value);
            // polarity: facets of V are the polar of conv(±V)
            let h = dual_gauge(&facets, &x).unwrap();
            assert!((h - g.value).abs() <= 1e-9 * g.value);
        }
    }
}

#[test]
fn axis_polytopes_match_pnorms() {
    let mut rng = Seed(14).rng();
    let n = 6;
    let cube = Body::facets(DMatrix::identity(n, n)).unwrap();
    let cross = Body::vertices(DMatrix::identity(n, n)).unwrap();
    for _ in 0..50 {
        let x = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
        let l1 = x.lp_norm(1);
        assert!((gauge(&cross, &x).unwrap().value - l1).abs() < 1e-12);
        assert!((dual_gauge(&cube, &x).unwrap() - l1).abs() < 1e-12);
        for t in [1.0, 1.7, 3.0] {
            let a = hull_gauge(&cube, t, &x).unwrap().value;
            let b = hull_gauge(&Body::cube(n), t, &x).unwrap().value;
            assert!((a - b).abs() < 1e-9, "cube t={t}: {a} vs {b}");
            let a = hull_gauge(&cross, t, &x).unwrap().value;
            let b = hull_gauge(&Body::cross_polytope(n), t, &x).unwrap().value;
            assert!((a - b).abs() < 1e-9, "cross t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn projections_satisfy_variational_inequality() {
    let mut rng = Seed(15).rng();
    let n = 5;
    for (bi, b) in bodies(n, 9).iter().enumerate() {
        for &s in &[0.3, 1.0] {
            let x = DVector::from_fn(n, |_, _| rng.random::<f64>() * 6.0 - 3.0);
            let p = match euclid_project(b, &x, s) {
                Ok(p) => p,
                Err(_) => continue,
            };
            assert!(gauge(b, &p).unwrap().value <= s * (1.0 + 1e-9), "body {bi}");
            let r = &x - &p;
            for _ in 0..500 {
                let th: DVector<f64> = sample_sphere(n, &mut rng).unwrap();
                let u = &th * (s * rng.random::<f64>() / gauge(b, &th).unwrap().value);
                assert!(r.dot(&(u - &p)) <= 1e-9, "body {bi} s={s}");
            }
        }
    }
}

#[test]
fn bipolar_consistency_for_pnorms() {
    let mut rng = Seed(16).rng();
    for p in [1.0, 1.25, 2.0, 3.0, 7.0] {
        let b = Body::<f64>::pnorm(8, Exponent::Finite(p)).unwrap();
        let polar = b.polar();
        for _ in 0..50 {
            let x = DVector::from_fn(8, |_, _| rng.random::<f64>() - 0.5);
            let g = gauge(&b, &x).unwrap().value;
            let d = dual_gauge(&polar, &x).unwrap();
            assert!((g - d).abs() <= 1e-8 * g);
        }
    }
}

#[test]
fn intersect_dual_is_hull_of_polar() {
    let mut rng = Seed(17).rng();
    let k = Body::intersect_ball(Body::<f64>::cube(2), 1.2).unwrap();
    for _ in 0..10 {
        let y = DVector::from_fn(2, |_, _| rng.random::<f64>() - 0.5);
        // h_{K∩ρB}(y) = max over the boundary of the clipped square
        let mut best: f64 = 0.0;
        for i in 0..200_000 {
            let a = i as f64 * std::f64::consts::TAU / 200_000.0;
            let d = DVector::from_vec(vec![a.cos(), a.sin()]);
            let r = 1.0 / gauge(&k, &d).unwrap().value;
            best = best.max(r * d.dot(&y));
        }
        let h = dual_gauge(&k, &y).unwrap();
        assert!((h - best).abs() <= 1e-6 * best, "{h} vs {best}");
    }
}

#[test]
fn body_spec_builds_every_kind() {
    let spec = r#"{"kind":"intersect_ball","rho":3.0,"inner":{"kind":"linear_image","matrix":[[2,0],[0,1]],
        "inner":{"kind":"polytope","vertices":[[1,0],[0,1],[1,1]]}}}"#;
    let b: Body<f64> = BodySpec::from_json(spec).unwrap().build().unwrap();
    let x = DVector::from_vec(vec![2.0, 1.0]);
    assert!((gauge(&b, &x).unwrap().value - 1.0).abs() < 1e-12);
    let j: Body<f64> = BodySpec::john(BodySpec::pnorm(PSpec::Finite(1.0), 4)).build().unwrap();
    let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
    assert!((gauge(&j, &e1).unwrap().value - 0.5).abs() < 1e-12);
}

fn arb_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-5.0f64..5.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauge_is_homogeneous_symmetric_subadditive(x in arb_vec(4), y in arb_vec(4), z in arb_vec(4), lam in 0.0f64..10.0, bi in 0usize..13, t in 1.0f64..4.0) {
        let bs = bodies(4, 21);
        let inner = &bs[bi];
        let hull = Body::hull(inner.clone(), t).unwrap();
        let (x, y, z) = (DVector::from_vec(x), DVector::from_vec(y), DVector::from_vec(z));
        // The hull gauge comes out of a 1-D minimization, so homogeneity holds to its tolerance.
        for (b, rel) in [(inner, 1e-12), (&hull, 1e-9)] {
            if supported(gauge(b, &x)).is_none() {
                continue;
            }
            let g = |v: &DVector<f64>| gauge(b, v).unwrap().value;
            let gx = g(&x);
            prop_assert!((g(&(&x * lam)) - lam * gx).abs() <= rel * lam * gx);
            prop_assert_eq!(g(&-&x), gx);
            prop_assert!(g(&(&y + &z)) <= g(&y) + g(&z) + 1e-9 * (1.0 + g(&y) + g(&z)));
            let dy = dual_gauge(b, &y).unwrap();
            prop_assert!(x.dot(&y) <= gx * dy * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn hull_gauge_is_monotone_in_t(x in arb_vec(5), t in 1.0f64..5.0, dt in 0.0f64..3.0, bi in 0usize..13) {
        let bs = bodies(5, 22);
        let x = DVector::from_vec(x);
        let Some(a) = supported(hull_gauge(&bs[bi], t, &x)) else { return Ok(()) };
        let a = a.value;
        let b = hull_gauge(&bs[bi], t + dt, &x).unwrap().value;
        prop_assert!(b <= a + 1e-12 + 1e-9 * a);
        prop_assert!(a <= gauge(&bs[bi], &x).unwrap().value.min(x.norm() / t) + 1e-8);
    }
}
