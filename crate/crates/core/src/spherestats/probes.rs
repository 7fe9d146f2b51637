//! Concentration, small-ball and Gaussian comparison probes.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{median_with_stderr, sample_gaussian, sphere_gauges};
use crate::error::{domain, Result};
use crate::normspace::{Body, BodyKind, Exponent};
use crate::rng::{samples, Seed};
use crate::scalar::{total_cmp, Scalar};

/// Tail fractions `P{|‖θ‖ − median| > τ·b}` for `τ ∈ {1, 2, 4}/√n`.
#[derive(Debug, Clone, Serialize)]
pub struct LevyReport {
    pub median: f64,
    pub b: f64,
    pub taus: Vec<f64>,
    pub fractions: Vec<f64>,
    /// `min −ln(fraction)/(nτ²)` over levels with a nonzero fraction.
    pub fitted_c2: Option<f64>,
    pub n_samples: usize,
}

pub fn levy_check<T: Scalar>(body: &Body<T>, b: T, n_samples: usize, seed: Seed) -> Result<LevyReport> {
    if n_samples == 0 {
        return Err(domain!("need at least one sample"));
    }
    let n = body.dim() as f64;
    let mut vals: Vec<f64> = sphere_gauges(body, n_samples, seed.derive_str("levy"))?.iter().map(|v| v.as_f64()).collect();
    vals.sort_by(total_cmp);
    let (median, _) = median_with_stderr(&vals);
    let b = b.as_f64();
    let taus: Vec<f64> = [1.0, 2.0, 4.0].iter().map(|k| k / n.sqrt()).collect();
    let fractions: Vec<f64> = taus
        .iter()
        .map(|tau| vals.iter().filter(|v| (**v - median).abs() > tau * b).count() as f64 / n_samples as f64)
        .collect();
    let fitted_c2 = taus
        .iter()
        .zip(&fractions)
        .filter(|(_, f)| **f > 0.0)
        .map(|(tau, f)| -f.ln() / (n * tau * tau))
        .reduce(f64::min);
    Ok(LevyReport { median, b, taus, fractions, fitted_c2, n_samples })
}

/// Constants of the small-ball bound `C·exp(−c₁·n·exp(−c₂t²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallBallConstants {
    #[serde(rename = "C")]
    pub big_c: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for SmallBallConstants {
    fn default() -> Self {
        SmallBallConstants { big_c: 1.0, c1: 1.0, c2: 1.0 }
    }
}

impl SmallBallConstants {
    pub fn bound(&self, n: usize, t: f64) -> f64 {
        self.big_c * (-self.c1 * n as f64 * (-self.c2 * t * t).exp()).exp()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallBallReport {
    pub t: f64,
    pub threshold: f64,
    pub count: usize,
    pub n_samples: usize,
    pub estimate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    /// 95% upper bound: rule of three when no event occurred.
    pub upper95: f64,
    pub censored: bool,
    pub bound: f64,
}

/// 95% Wilson score interval.
pub fn wilson(count: usize, n: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054;
    let nf = n as f64;
    let p = count as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if count == 0 { 0.0 } else { (centre - half).max(0.0) };
    (lo, (centre + half).min(1.0))
}

/// `σ{θ : ‖θ‖ <= t/√n}` for a body in John position.
pub fn small_ball<T: Scalar>(
    body: &Body<T>,
    t: f64,
    n_samples: usize,
    seed: Seed,
    constants: &SmallBallConstants,
) -> Result<SmallBallReport> {
    let n = body.dim();
    if !(t >= 1.0 && t <= (n as f64).sqrt()) {
        return Err(domain!("small-ball level must satisfy 1 <= t <= sqrt(n), got {t}"));
    }
    if n_samples == 0 {
        return Err(domain!("need at least one sample"));
    }
    let thr = t / (n as f64).sqrt();
    let vals = sphere_gauges(body, n_samples, seed.derive_str("small-ball"))?;
    let count = vals.iter().filter(|v| v.as_f64() <= thr).count();
    let (lo, hi) = wilson(count, n_samples);
    Ok(SmallBallReport {
        t,
        threshold: thr,
        count,
        n_samples,
        estimate: count as f64 / n_samples as f64,
        wilson_lo: lo,
        wilson_hi: hi,
        upper95: if count == 0 { 3.0 / n_samples as f64 } else { hi },
        censored: count == 0,
        bound: constants.bound(n, t),
    })
}

/// Paired empirical CDFs of `‖G‖_K` and `‖G‖_∞` at one level.
#[derive(Debug, Clone, Serialize)]
pub struct CdfRow {
    pub t: f64,
    pub cdf_body: f64,
    pub se_body: f64,
    pub cdf_inf: f64,
    pub se_inf: f64,
    /// Standard error of the paired difference.
    pub se_diff: f64,
}

pub fn schsch_compare<T: Scalar>(body: &Body<T>, t_grid: &[f64], n_samples: usize, seed: Seed) -> Result<Vec<CdfRow>> {
    if n_samples == 0 {
        return Err(domain!("need at least one sample"));
    }
    let body = body.canonical();
    let n = body.dim();
    let pairs: Vec<Result<(f64, f64)>> = samples(seed.derive_str("schsch"), n_samples, |rng| {
        let g: DVector<T> = sample_gaussian(n, rng);
        Ok((body.gauge_value(&g)?.as_f64(), g.amax().as_f64()))
    });
    let pairs: Vec<(f64, f64)> = pairs.into_iter().collect::<Result<_>>()?;
    let nf = n_samples as f64;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let (mut a, mut b, mut d2) = (0usize, 0usize, 0usize);
            for &(x, y) in &pairs {
                let ia = x <= t;
                let ib = y <= t;
                a += ia as usize;
                b += ib as usize;
                d2 += (ia != ib) as usize;
            }
            let pa = a as f64 / nf;
            let pb = b as f64 / nf;
            let md = pa - pb;
            let vd = (d2 as f64 / nf - md * md).max(0.0);
            CdfRow {
                t,
                cdf_body: pa,
                se_body: (pa * (1.0 - pa) / nf).sqrt(),
                cdf_inf: pb,
                se_inf: (pb * (1.0 - pb) / nf).sqrt(),
                se_diff: (vd / nf).sqrt(),
            }
        })
        .collect())
}

/// `d_u(K) = min(n, −ln σ{θ : ‖θ‖ <= M/u})`.
#[derive(Debug, Clone, Serialize)]
pub struct DuEstimate {
    pub u: f64,
    pub value: f64,
    pub probability: f64,
    pub count: usize,
    /// No event observed: `value` is the rule-of-three lower bound.
    pub censored: bool,
}

fn is_round_ball<T: Scalar>(body: &Body<T>) -> bool {
    matches!(
        body.canonical().kind(),
        BodyKind::PNorm { p: Exponent::Finite(p), weights: crate::normspace::Weights::Uniform(_) } if *p == T::lit(2.0)
    )
}

pub fn d_u_estimate<T: Scalar>(body: &Body<T>, u: f64, mean_m: f64, n_samples: usize, seed: Seed) -> Result<DuEstimate> {
    if !(u > 1.0) {
        return Err(domain!("d_u needs u > 1, got {u}"));
    }
    if n_samples == 0 {
        return Err(domain!("need at least one sample"));
    }
    let n = body.dim() as f64;
    if is_round_ball(body) {
        // The gauge is constant on the sphere, so the event is empty.
        return Ok(DuEstimate { u, value: n, probability: 0.0, count: 0, censored: false });
    }
    let thr = mean_m / u;
    let vals = sphere_gauges(body, n_samples, seed.derive_str("d-u"))?;
    let count = vals.iter().filter(|v| v.as_f64() <= thr).count();
    let nf = n_samples as f64;
    if count == 0 {
        return Ok(DuEstimate { u, value: n.min(-(3.0 / nf).ln()), probability: 0.0, count, censored: true });
    }
    let p = count as f64 / nf;
    Ok(DuEstimate { u, value: n.min(-p.ln()), probability: p, count, censored: false })
}
