//! Acceptance checks. Each test prints one `criterion N: PASS|FAIL` line to
//! the real stdout so the lines survive output capture.
//!
//! The full-size run of criterion 4 (1e5 samples for the n = 256 facet
//! polytopes) takes close to an hour on one core; it runs only with
//! `BANACH_FULL_ACCEPTANCE=1`. The default run uses fewer samples for those
//! five bodies and reports the criterion as failed on time.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use banach_cli::{run, ExperimentConfig, RunOptions};
use banach_core::arrangements::{bit_string, cyclic_length, distortion_budget, kol_encode, kol_proxy};
use banach_core::johnpos::{analytic_john_radius, john_transform, mvee};
use banach_core::normspace::{dual_gauge, gauge, hull_gauge, Body, BodySpec, Exponent, Weights};
use banach_core::rip_jl::{gaussian_rip, general_rip, NormedBasis, RatioSearch, SketchOperator};
use banach_core::spherestats::{estimate_b, sample_sphere, BSearch};
use banach_core::{Error, Seed};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde_json::{json, Value};

fn report(n: usize, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {n}: {verdict} ({detail})");
    let _ = out.flush();
}

type Row = BTreeMap<String, String>;

struct Run {
    rows: Vec<Row>,
    seconds: f64,
}

fn run_config(cfg: Value, dir: &Path, threads: Option<usize>) -> Run {
    let text = serde_json::to_string(&cfg).unwrap();
    let (cfg, warnings) = ExperimentConfig::parse(Path::new("acceptance.json"), &text).unwrap();
    let start = Instant::now();
    let out = run(&cfg, &warnings, &RunOptions { out: Some(dir.into()), threads, ..Default::default() }).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let mut r = csv::Reader::from_path(&out.csv).unwrap();
    let head = r.headers().unwrap().clone();
    let rows = r
        .records()
        .map(|rec| head.iter().zip(rec.unwrap().iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect();
    Run { rows, seconds }
}

fn num(row: &Row, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("{key} = {:?}", row[key]))
}

fn seeds(k: u64) -> Vec<u64> {
    (1..=k).collect()
}

fn pass_rate(rows: &[Row]) -> f64 {
    rows.iter().filter(|r| r["pass"] == "true").count() as f64 / rows.len() as f64
}

fn john(inner: Value) -> Value {
    json!({"kind": "john", "inner": inner})
}

fn pnorm(p: Value, dim: usize) -> Value {
    json!({"kind": "pnorm", "p": p, "dim": dim})
}

#[test]
fn criterion_01_john_positioning() {
    // Inradius oracle from gauges at the two candidate extremal directions,
    // confirmed against random directions.
    let mut worst: f64 = 0.0;
    let mut rng = Seed(1).rng();
    for n in [4usize, 16, 64] {
        for p in [Exponent::Finite(1.0), Exponent::Finite(1.5), Exponent::Finite(2.0), Exponent::Finite(4.0), Exponent::Infinite] {
            let body = Body::<f64>::pnorm(n, p).unwrap();
            let e1 = DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
            let diag = DVector::from_element(n, 1.0 / (n as f64).sqrt());
            let max_gauge = body.gauge_value(&e1).unwrap().max(body.gauge_value(&diag).unwrap());
            for _ in 0..200 {
                let th: DVector<f64> = sample_sphere(n, &mut rng).unwrap();
                assert!(body.gauge_value(&th).unwrap() <= max_gauge + 1e-12);
            }
            let r: f64 = analytic_john_radius(p, n);
            worst = worst.max((r - 1.0 / max_gauge).abs());
        }
        let r1: f64 = analytic_john_radius(Exponent::Finite(1.0), n);
        assert!((r1 - 1.0 / (n as f64).sqrt()).abs() < 1e-12);
        assert_eq!(analytic_john_radius::<f64>(Exponent::Infinite, n), 1.0);
    }
    assert!(worst < 1e-9, "radius error {worst}");

    // The square's polar is conv{±e1, ±e2}; its minimum-volume ellipsoid is
    // the unit disk, whose polar is the John ellipsoid of the square.
    let e = mvee(&DMatrix::<f64>::identity(2, 2), 1e-9).unwrap();
    let shape_err = (&e.ellipsoid.shape - DMatrix::identity(2, 2)).amax();
    let jp = john_transform(&Body::<f64>::facets(DMatrix::identity(2, 2)).unwrap()).unwrap();
    let m = jp.map.matrix().clone();
    let map_err = (m.transpose() * &m - DMatrix::identity(2, 2)).amax();
    assert!(shape_err < 1e-5 && map_err < 1e-5);

    let mut slowest: f64 = 0.0;
    let mut bodies: Vec<Body<f64>> = [Exponent::Finite(1.0), Exponent::Finite(4.0), Exponent::Infinite]
        .into_iter()
        .map(|p| Body::pnorm(64, p).unwrap())
        .collect();
    bodies.push(BodySpec::RandomPolytope { dim: 64, facets: 128, seed: 3 }.build().unwrap());
    for b in &bodies {
        let start = Instant::now();
        let jp = john_transform(b).unwrap();
        slowest = slowest.max(start.elapsed().as_secs_f64());
        assert!(jp.certificate.decomposition_error() < 1e-5);
    }
    let ok = slowest < 1.0;
    report(
        1,
        ok,
        &format!(
            "max radius error vs inradius oracle {worst:.1e}; square polar MVEE shape error {shape_err:.1e}; \
             slowest John transform at n=64 {slowest:.3} s. Radii for p >= 2 equal 1: n^(1/p-1/2) is the \
             reciprocal circumradius, not the inradius"
        ),
    );
    assert!(ok);
}

fn duality_bodies(n: usize, seed: u64) -> Vec<(String, Body<f64>)> {
    let mut rng = Seed(seed).rng();
    let w = DVector::from_fn(n, |_, _| 0.5 + rng.random::<f64>());
    let facets = DMatrix::from_fn(n, 2 * n, |_, _| rng.random::<f64>() - 0.5);
    let verts = DMatrix::from_fn(n, 2 * n, |_, _| rng.random::<f64>() - 0.5);
    let map = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { 0.0 } + 0.3 * (rng.random::<f64>() - 0.5));
    let mut out = Vec::new();
    for (name, p) in [("l1", Exponent::Finite(1.0)), ("l1.5", Exponent::Finite(1.5)), ("l2", Exponent::Finite(2.0)), ("l4", Exponent::Finite(4.0)), ("linf", Exponent::Infinite)] {
        out.push((name.to_string(), Body::pnorm(n, p).unwrap()));
        out.push((format!("weighted {name}"), Body::weighted_pnorm(p, Weights::PerCoord(w.clone()), n).unwrap()));
    }
    out.push(("facets".into(), Body::facets(facets).unwrap()));
    out.push(("vertices".into(), Body::vertices(verts).unwrap()));
    out.push(("linear image".into(), Body::linear_image(map, Body::pnorm(n, Exponent::Finite(3.0)).unwrap()).unwrap()));
    out.push(("hull".into(), Body::hull(Body::pnorm(n, Exponent::Finite(1.0)).unwrap(), 1.7).unwrap()));
    out.push(("intersect".into(), Body::intersect_ball(Body::pnorm(n, Exponent::Finite(1.0)).unwrap(), 0.7).unwrap()));
    out
}

#[test]
fn criterion_02_gauge_duality() {
    let start = Instant::now();
    let n = 5;
    let bodies = duality_bodies(n, 2);
    let mut rng = Seed(3).rng();
    let mut triples = 0;
    let mut hull_checks = 0;
    let mut skipped = 0;
    let mut worst_pair: f64 = 0.0;
    let mut worst_cert: f64 = 0.0;
    let mut worst_hull: f64 = 0.0;
    while triples < 10_000 {
        for (name, body) in &bodies {
            let x = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let y = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let g = gauge(body, &x).unwrap();
            let h = dual_gauge(body, &y).unwrap();
            // <x, y> <= ‖x‖·h(y)
            worst_pair = worst_pair.max((x.dot(&y) - g.value * h) / (g.value * h));
            let cert = g.certificate.unwrap_or_else(|| panic!("{name}: no certificate"));
            let hc = dual_gauge(body, &cert).unwrap();
            worst_cert = worst_cert.max((x.dot(&cert) - g.value * hc).abs() / g.value);
            triples += 1;

            let t = 1.0 + 3.0 * rng.random::<f64>();
            match hull_gauge(body, t, &x) {
                Err(Error::Unsupported(_)) => skipped += 1,
                r => {
                    let hg = r.unwrap();
                    let yc = hg.certificate.unwrap_or_else(|| panic!("{name}: no hull certificate"));
                    let dual = dual_gauge(body, &yc).unwrap().max(t * yc.norm());
                    let hull_dual = Body::hull(body.clone(), t).unwrap().dual_gauge(&yc).unwrap();
                    worst_hull = worst_hull.max((x.dot(&yc) - hg.value * dual).abs() / hg.value);
                    worst_hull = worst_hull.max((hull_dual - dual).abs() / dual);
                    hull_checks += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst_pair <= 1e-9 && worst_cert <= 1e-8 && worst_hull <= 1e-8 && secs < 30.0;
    report(
        2,
        ok,
        &format!(
            "{triples} triples over {} bodies; pairing excess {worst_pair:.1e}; certificate gap {worst_cert:.1e}; \
             {hull_checks} hull checks, gap {worst_hull:.1e}, {skipped} unsupported; {secs:.1} s",
            bodies.len()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_03_hull_certificate() {
    let mut worst_contact: f64 = 0.0;
    let mut worst_ascent = f64::NEG_INFINITY;
    let mut cases = 0;
    for n in [16usize, 64, 256] {
        for p in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Finite(4.0), Exponent::Infinite] {
            let jp = john_transform(&Body::<f64>::pnorm(n, p).unwrap()).unwrap();
            for t in [1.0, 2.0, 4.0, (n as f64).sqrt()] {
                let hull = Body::hull(jp.body.clone(), t).unwrap();
                for u in &jp.certificate.contacts {
                    let g = hull.gauge_value(&(u / u.norm())).unwrap();
                    worst_contact = worst_contact.max((g - 1.0 / t).abs());
                }
                let search = BSearch { contacts: Vec::new(), restarts: 8, max_steps: 100 };
                let b = estimate_b(&hull, &search, Seed(n as u64)).unwrap();
                worst_ascent = worst_ascent.max(b.value - 1.0 / t);
                cases += 1;
            }
        }
    }
    let ok = worst_contact <= 1e-6 && worst_ascent <= 1e-6;
    report(
        3,
        ok,
        &format!("{cases} (family, n, t) cases; max |b_t - 1/t| at contacts {worst_contact:.1e}; max ascent excess over 1/t {worst_ascent:.1e}"),
    );
    assert!(ok);
}

struct LemmaRuns {
    /// (family, n, t, m_t, stderr, fitted_c)
    rows: Vec<(String, usize, f64, f64, f64, f64)>,
    seconds: f64,
    /// Seconds spent on the reduced-sample jobs.
    reduced_seconds: f64,
    reduced: Option<usize>,
}

const LEMMA_SAMPLES: usize = 100_000;
const REDUCED_POLYTOPE_SAMPLES: usize = 2_000;

fn lemma_runs() -> &'static LemmaRuns {
    static RUNS: OnceLock<LemmaRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let full = std::env::var("BANACH_FULL_ACCEPTANCE").is_ok_and(|v| v == "1");
        let dir = tempfile::tempdir().unwrap();
        let mut jobs: Vec<(String, Value, Vec<usize>, usize)> = Vec::new();
        for (name, p) in [("l1", json!(1)), ("l2", json!(2)), ("l4", json!(4)), ("linf", json!("inf"))] {
            jobs.push((name.into(), john(pnorm(p, 64)), vec![64, 256], LEMMA_SAMPLES));
        }
        for seed in 1..=5u64 {
            let body = john(json!({"kind": "random_polytope", "dim": 64, "facets": 128, "seed": seed}));
            let name = format!("polytope {seed}");
            jobs.push((name.clone(), body.clone(), vec![64], LEMMA_SAMPLES));
            let big = if full { LEMMA_SAMPLES } else { REDUCED_POLYTOPE_SAMPLES };
            jobs.push((name, body, vec![256], big));
        }
        let mut rows = Vec::new();
        let mut seconds = 0.0;
        let mut reduced_seconds = 0.0;
        for (i, (name, body, ns, samples)) in jobs.into_iter().enumerate() {
            let cfg = json!({
                "experiment": "lemma1", "body": body, "grid": {"n": ns, "t": [2, 4, 8]},
                "seeds": [1], "samples": samples, "constants": {"c_prime": 4.0}
            });
            let out = dir.path().join(format!("job{i}"));
            let r = run_config(cfg, &out, None);
            seconds += r.seconds;
            if samples < LEMMA_SAMPLES {
                reduced_seconds += r.seconds;
            }
            for row in &r.rows {
                let n = num(row, "n") as usize;
                rows.push((name.clone(), n, num(row, "t"), num(row, "m_t"), num(row, "m_t_stderr"), num(row, "fitted_c")));
            }
        }
        LemmaRuns { rows, seconds, reduced_seconds, reduced: (!full).then_some(REDUCED_POLYTOPE_SAMPLES) }
    })
}

#[test]
fn criterion_04_fitted_constant() {
    let runs = lemma_runs();
    let mut per_family: BTreeMap<&str, f64> = BTreeMap::new();
    for (name, _, _, _, _, c) in &runs.rows {
        let e = per_family.entry(name).or_insert(f64::INFINITY);
        *e = e.min(*c);
    }
    let (worst_family, min_c) = per_family.iter().min_by(|a, b| a.1.total_cmp(b.1)).map(|(k, v)| (*k, *v)).unwrap();
    let constants_ok = per_family.len() == 9 && min_c >= 0.1;
    let time_ok = runs.seconds < 300.0 && runs.reduced.is_none();
    let mut detail = format!(
        "min fitted c {min_c:.3} ({worst_family}) over {} families, n in {{64, 256}}, t in {{2, 4, 8}}; wall {:.0} s",
        per_family.len(),
        runs.seconds
    );
    if let Some(s) = runs.reduced {
        let projected = runs.seconds + runs.reduced_seconds * (LEMMA_SAMPLES as f64 / s as f64 - 1.0);
        detail.push_str(&format!(
            "; facet polytopes at n=256 used {s} samples instead of 1e5 ({:.0} s), projected full wall {projected:.0} s \
             against the 300 s bound: exact hull gauges of 512-facet polytopes cost milliseconds each on one core",
            runs.reduced_seconds
        ));
    }
    report(4, constants_ok && time_ok, &detail);
    assert!(constants_ok, "{per_family:?}");
}

#[test]
fn criterion_05_monotonicity() {
    let runs = lemma_runs();
    let mut groups: BTreeMap<(&str, usize), Vec<(f64, f64, f64)>> = BTreeMap::new();
    for (name, n, t, m, se, _) in &runs.rows {
        groups.entry((name, *n)).or_default().push((*t, *m, *se));
    }
    let mut violations = Vec::new();
    for ((name, n), v) in &mut groups {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in v.windows(2) {
            let ((t0, m0, s0), (t1, m1, s1)) = (w[0], w[1]);
            let tol = 3.0 * s0.max(s1);
            if m1 > m0 + tol || t1 * m1 < t0 * m0 - t1 * tol {
                violations.push(format!("{name} n={n} t={t0}->{t1}"));
            }
        }
    }
    let ok = violations.is_empty();
    report(5, ok, &format!("{} (family, n) groups, violations: {}", groups.len(), if ok { "none".into() } else { violations.join(", ") }));
    assert!(ok);
}

/// `E max_i |g_i| / E|g|` for a standard Gaussian in `R^n`.
fn gaussian_max_oracle(n: usize) -> f64 {
    // E max = ∫_0^∞ 1 - P(|g| <= x)^n dx, with the CDF by the trapezoid rule.
    let h = 1e-4;
    let dens = |x: f64| (-0.5 * x * x).exp() * (2.0 / std::f64::consts::PI).sqrt();
    let mut cdf = 0.0;
    let mut e_max = 0.0;
    let mut prev_tail = 1.0;
    for i in 1..=100_000 {
        let x = i as f64 * h;
        cdf += 0.5 * h * (dens(x - h) + dens(x));
        let tail = 1.0 - cdf.min(1.0).powi(n as i32);
        e_max += 0.5 * h * (prev_tail + tail);
        prev_tail = tail;
    }
    // E|g| = √2·Γ((n+1)/2)/Γ(n/2), with r(k+1) = (k/2)/r(k) from r(1) = 1/√π.
    let mut r = 1.0 / std::f64::consts::PI.sqrt();
    for k in 1..n {
        r = (k as f64 / 2.0) / r;
    }
    e_max / (2f64.sqrt() * r)
}

#[test]
fn criterion_06_mean_values() {
    let dir = tempfile::tempdir().unwrap();
    let n = 1024;
    let mut means = Vec::new();
    for body in [john(pnorm(json!(1), n)), pnorm(json!("inf"), n)] {
        let cfg = json!({"experiment": "stats", "body": body, "grid": {"n": [n]}, "seeds": [1], "samples": 10000});
        let r = run_config(cfg, dir.path(), None);
        means.push(num(&r.rows[0], "mean_m"));
    }
    let l1_oracle = (2.0 / std::f64::consts::PI).sqrt();
    let inf_oracle = gaussian_max_oracle(n);
    let l1_ok = (means[0] - 0.798).abs() <= 0.01 && (means[0] - l1_oracle).abs() <= 0.01;
    let inf_ok = (means[1] - inf_oracle).abs() <= 0.1 * inf_oracle;
    report(
        6,
        l1_ok && inf_ok,
        &format!(
            "l1 John n=1024: M = {:.4} (oracle {l1_oracle:.4}); linf n=1024: M = {:.4} (Gaussian-max oracle {inf_oracle:.4}, \
             asymptotic sqrt(2 ln n / n) = {:.4})",
            means[0],
            means[1],
            (2.0 * (n as f64).ln() / n as f64).sqrt()
        ),
    );
    assert!(l1_ok && inf_ok);
}

#[test]
fn criterion_07_gaussian_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = Vec::new();
    for p in [json!(1), json!(4)] {
        let cfg = json!({
            "experiment": "schsch", "body": john(pnorm(p, 64)), "grid": {"n": [64], "t": [1, 1.5, 2, 2.5, 3, 4, 6, 8]},
            "seeds": [1], "samples": 100000
        });
        rows.extend(run_config(cfg, dir.path(), None).rows);
    }
    let worst = rows
        .iter()
        .map(|r| num(r, "cdf_body") - num(r, "cdf_inf") - 2.0 * num(r, "se_diff"))
        .fold(f64::NEG_INFINITY, f64::max);
    let ok = pass_rate(&rows) == 1.0;
    report(7, ok, &format!("{} grid points for John l1 and l4 at n=64; max excess over the bound {worst:.2e}", rows.len()));
    assert!(ok);
}

#[test]
fn criterion_08_order_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "experiment": "orderstats", "grid": {"m": [100000], "s": [0.6]}, "seeds": [1], "samples": 500,
        "constants": {"c_prime": 0.05}
    });
    let r = run_config(cfg, dir.path(), None);
    let freq = num(&r.rows[0], "frequency");
    let ok = freq >= 0.5 && r.seconds < 60.0;
    report(8, ok, &format!("frequency {freq:.3} over 500 trials at m=1e5, s=0.6, c'=0.05; {:.1} s", r.seconds));
    assert!(ok);
}

#[test]
fn criterion_09_splitting() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"experiment": "kashin", "grid": {"n": [64, 128, 256]}, "seeds": seeds(20), "samples": 1000});
    let r = run_config(cfg, dir.path(), None);
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [64, 128, 256] {
        let rows: Vec<Row> = r.rows.iter().filter(|row| row["n"] == n.to_string()).cloned().collect();
        let rate = pass_rate(&rows);
        let worst = rows.iter().map(|row| num(row, "worst")).fold(0.0, f64::max);
        ok &= rows.len() == 20 && rate >= 0.9;
        parts.push(format!("n={n}: {:.0}% of seeds within 3 (largest {worst:.2})", 100.0 * rate));
    }
    report(9, ok, &format!("{}; {:.0} s", parts.join("; "), r.seconds));
    assert!(ok);
}

#[test]
fn criterion_10_block_decomposition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "experiment": "blocks", "body": john(pnorm(json!(1), 256)), "grid": {"n": [256], "k": [16], "eps": [0.2]},
        "seeds": seeds(10), "samples": 1000
    });
    let r = run_config(cfg, dir.path(), None);
    let rate = pass_rate(&r.rows);
    let dev = r.rows.iter().map(|row| num(row, "max_deviation")).fold(0.0, f64::max);
    let b = r.rows.iter().map(|row| num(row, "max_b_scaled")).fold(0.0, f64::max);
    let ok = r.rows.len() == 10 && rate >= 0.9;
    report(
        10,
        ok,
        &format!("{:.0}% of 10 seeds pass; largest relative median deviation {dev:.3}; largest b*sqrt(n/k) {b:.3}", 100.0 * rate),
    );
    assert!(ok);
}

#[test]
fn criterion_11_sup_norm_refuter() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = Vec::new();
    for basis in ["haar", "perturbed_permutation"] {
        let cfg = json!({
            "experiment": "refute", "grid": {"n": [16], "eps": [0.02]}, "seeds": seeds(100), "samples": 100,
            "constants": {"basis": basis}
        });
        rows.extend(run_config(cfg, dir.path(), None).rows);
    }
    let verified = rows.iter().filter(|r| r["verified"] == "true" && r["pass"] == "true").count();
    let ok = verified == 200;
    report(11, ok, &format!("{verified}/{} witnesses verified by re-evaluation", rows.len()));
    assert!(ok);
}

#[test]
fn criterion_12_classical_rip() {
    let (n, k, eps) = (256usize, 4usize, 0.3);
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"experiment": "rip", "grid": {"n": [n], "k": [k], "eps": [eps]}, "seeds": seeds(20), "samples": 100});
    let r = run_config(cfg, dir.path(), None);
    let m = num(&r.rows[0], "m") as usize;
    let rate = pass_rate(&r.rows);

    let mut oracle_err: f64 = 0.0;
    for seed in 1..=5 {
        let op = SketchOperator::<f64>::new(m, n, Seed(seed)).unwrap();
        let rep = gaussian_rip(n, m, 1, eps, Seed(seed), 100_000).unwrap();
        let norms: Vec<f64> = (0..n).map(|j| op.g.column(j).norm() * op.scale).collect();
        let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = norms.iter().copied().fold(0.0, f64::max);
        oracle_err = oracle_err.max((rep.worst_lo - lo).abs()).max((rep.worst_hi - hi).abs());
    }
    let ok = rate >= 0.95 && oracle_err <= 1e-12;
    report(12, ok, &format!("m={m}; {:.0}% of 20 seeds pass; k=1 column-norm oracle error {oracle_err:.1e}", 100.0 * rate));
    assert!(ok);
}

#[test]
fn criterion_13_reductions() {
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let x = NormedBasis::standard(Body::<f64>::euclidean(32));
        let y = NormedBasis::standard(Body::<f64>::euclidean(60));
        let g = general_rip(&x, &y, 2, 0.4, Seed(seed), &RatioSearch::default(), 10_000).unwrap();
        let r = gaussian_rip(32, 60, 2, 0.4, Seed(seed), 10_000).unwrap();
        worst = worst.max((g.worst_lo - r.worst_lo).abs()).max((g.worst_hi - r.worst_hi).abs());
        assert_eq!(g.pass, r.pass);
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "experiment": "jl", "body": pnorm(json!(2), 256), "grid": {"n": [256], "k": [4], "eps": [0.5]},
        "seeds": seeds(20), "samples": 100, "constants": {"points": 32}
    });
    let r = run_config(cfg, dir.path(), None);
    let rate = pass_rate(&r.rows);
    let err = r.rows.iter().map(|row| num(row, "max_error")).fold(0.0, f64::max);
    let ok = worst <= 1e-10 && rate >= 0.9;
    report(
        13,
        ok,
        &format!("general vs classical RIP bound difference {worst:.1e}; JL |Omega|=32, eps=0.5: {:.0}% of 20 seeds, largest error {err:.3}", 100.0 * rate),
    );
    assert!(ok);
}

fn cyclic_length_brute(a: &[f64]) -> usize {
    let n = a.len();
    (0..=n).find(|&k| (0..n).any(|m| (k..n).all(|i| a[(m + i) % n] == 0.0))).unwrap_or(n)
}

#[test]
fn criterion_14_combinatorial_oracles() {
    let mut checked = 0;
    for n in 1..=12usize {
        for mask in 0u32..(1 << n) {
            if mask.count_ones() > 4 {
                continue;
            }
            let a: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { 1.0 + i as f64 } else { 0.0 }).collect();
            assert_eq!(cyclic_length(&a), cyclic_length_brute(&a), "n={n} mask={mask:b}");
            checked += 1;
        }
    }
    let fixtures: [(&str, &str); 20] = [
        ("00011000", concat!("0", "011", "010", "011")),
        ("00000000", concat!("0", "0001000")),
        ("11111111", concat!("1", "0001000")),
        ("10000000", concat!("1", "1", "00111")),
        ("00000001", concat!("0", "00111", "1")),
        ("10000001", concat!("1", "1", "00110", "1")),
        ("01010101", concat!("0", "1", "1", "1", "1", "1", "1", "1", "1")),
        ("1", "11"),
        ("0", "01"),
        ("110", concat!("1", "010", "1")),
        ("0011", concat!("0", "010", "010")),
        ("111000111", concat!("1", "011", "011", "011")),
        ("000010000", concat!("0", "00100", "1", "00100")),
        ("000000000000", concat!("0", "0001100")),
        ("100000000000", concat!("1", "1", "0001011")),
        ("0000000000000000", concat!("0", "000010000")),
        ("1111100000000000", concat!("1", "00101", "0001011")),
        ("0000000011111111", concat!("0", "0001000", "0001000")),
        ("1100000001", concat!("1", "010", "00111", "1")),
        ("0111111111", concat!("0", "1", "0001001")),
    ];
    for (support, code) in fixtures {
        let a: Vec<f64> = support.chars().map(|c| if c == '1' { -2.25 } else { 0.0 }).collect();
        assert_eq!(bit_string(&kol_encode(&a)), code, "support {support}");
        assert_eq!(kol_proxy(&a), code.len());
    }
    let mut rng = Seed(14).rng();
    let mut invariant = 0;
    for _ in 0..500 {
        let n = rng.random_range(2..40);
        let a: Vec<f64> = (0..n).map(|_| if rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 }).collect();
        if a.iter().all(|v| *v == 0.0) {
            continue;
        }
        let b: Vec<f64> = a.iter().map(|v| v * (rng.random::<f64>() * 10.0 + 0.1) * if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        assert_eq!(distortion_budget(&a, 1.0).unwrap(), distortion_budget(&b, 1.0).unwrap());
        invariant += 1;
    }
    report(
        14,
        true,
        &format!("{checked} supports match brute-force cyclic length; 20 run-length fixtures match; D(a) identical under {invariant} random support rescalings"),
    );
}

#[test]
fn criterion_15_determinism() {
    let configs = [
        json!({"experiment": "lemma1", "body": john(pnorm(json!(4), 64)), "grid": {"t": [2, 4, 8]}, "seeds": [1, 2, 3], "samples": 5000}),
        json!({"experiment": "stats", "body": john(json!({"kind": "random_polytope", "dim": 24, "facets": 48, "seed": 2})), "grid": {"n": [24]}, "seeds": [1, 2, 3, 4], "samples": 3000}),
        json!({"experiment": "kashin", "grid": {"n": [32]}, "seeds": [1, 2, 3, 4], "samples": 300}),
        json!({"experiment": "rip", "grid": {"n": [64], "k": [3], "eps": [0.5]}, "seeds": [1, 2, 3], "samples": 100}),
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut identical = 0;
    for (i, cfg) in configs.iter().enumerate() {
        let mut texts = Vec::new();
        for (j, threads) in [1, 4, 1, 4].into_iter().enumerate() {
            let out = dir.path().join(format!("{i}-{j}"));
            run_config(cfg.clone(), &out, Some(threads));
            let name = format!("{}.csv", cfg["experiment"].as_str().unwrap());
            texts.push(std::fs::read(out.join(name)).unwrap());
        }
        if texts.iter().all(|t| *t == texts[0]) {
            identical += 1;
        }
    }
    let ok = identical == configs.len();
    report(15, ok, &format!("{identical}/{} experiments byte-identical across runs with 1 and 4 threads", configs.len()));
    assert!(ok);
}
