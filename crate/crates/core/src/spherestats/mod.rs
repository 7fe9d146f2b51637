//! Haar sampling and Monte Carlo statistics of gauges on the sphere.

mod lemma1;
mod order_stats;
mod probes;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::normspace::Body;
use crate::rng::{samples, Seed};
use crate::scalar::{total_cmp, Scalar};

pub use lemma1::{lemma1_ratio, Lemma1Options, Lemma1Row, Lemma1Table};
pub use order_stats::{order_stats_experiment, OrderStatsReport};
pub use probes::{
    d_u_estimate, levy_check, schsch_compare, small_ball, CdfRow, DuEstimate, LevyReport, SmallBallConstants,
    SmallBallReport,
};

/// Uniform point on `S^{n-1}`: a normalized standard Gaussian vector.
pub fn sample_sphere<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DVector<T>> {
    if n == 0 {
        return Err(domain!("sphere dimension must be positive"));
    }
    loop {
        let g = DVector::from_fn(n, |_, _| T::standard_normal(rng));
        let norm = g.norm();
        if norm > T::zero() {
            return Ok(g / norm);
        }
    }
}

/// Standard Gaussian vector in `ℝⁿ`.
pub fn sample_gaussian<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<T> {
    DVector::from_fn(n, |_, _| T::standard_normal(rng))
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// columns of `Q` signed so that `R` has a positive diagonal.
pub fn sample_orthogonal<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DMatrix<T>> {
    if n == 0 {
        return Err(domain!("matrix dimension must be positive"));
    }
    let g = DMatrix::from_fn(n, n, |_, _| T::standard_normal(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < T::zero() {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// Haar point of the Grassmannian `G_{n,k}` as an orthonormal `n×k` frame.
pub fn sample_grassmann<T: Scalar, R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<DMatrix<T>> {
    if k == 0 || k > n {
        return Err(domain!("need 1 <= k <= n, got k={k}, n={n}"));
    }
    Ok(sample_orthogonal::<T, R>(n, rng)?.columns(0, k).into_owned())
}

/// Haar orthogonal matrix tagged with the seed it was drawn from.
#[derive(Debug, Clone)]
pub struct OrthogonalSample<T: Scalar> {
    pub matrix: DMatrix<T>,
    pub seed: u64,
}

impl<T: Scalar> OrthogonalSample<T> {
    pub fn draw(n: usize, seed: Seed) -> Result<Self> {
        Ok(OrthogonalSample { matrix: sample_orthogonal(n, &mut seed.rng())?, seed: seed.0 })
    }
}

/// Type-7 quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median with an order-statistic standard error.
pub(crate) fn median_with_stderr(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len();
    let med = quantile_sorted(sorted, 0.5);
    if n < 2 {
        return (med, 0.0);
    }
    let half = (n as f64).sqrt() / 2.0;
    let lo = ((n as f64 / 2.0 - half).floor().max(0.0)) as usize;
    let hi = ((n as f64 / 2.0 + half).ceil() as usize).min(n - 1);
    (med, (sorted[hi] - sorted[lo]) / 2.0)
}

/// Monte Carlo summary of a gauge over Haar samples of the sphere.
#[derive(Debug, Clone, Serialize)]
pub struct StatsSummary {
    pub mean_m: f64,
    pub median: f64,
    pub b_max: f64,
    pub b_certified: bool,
    pub quantiles: BTreeMap<String, f64>,
    pub stderr_mean: f64,
    pub stderr_median: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub k_dvoretzky: f64,
}

impl StatsSummary {
    pub fn quantile(&self, q: f64) -> f64 {
        self.quantiles[&format!("{q}")]
    }
}

/// Options for the search behind `b = max_θ ‖θ‖`.
#[derive(Debug, Clone)]
pub struct BSearch<T: Scalar> {
    pub contacts: Vec<DVector<T>>,
    pub restarts: usize,
    pub max_steps: usize,
}

impl<T: Scalar> Default for BSearch<T> {
    fn default() -> Self {
        BSearch { contacts: Vec::new(), restarts: 20, max_steps: 100 }
    }
}

/// Lower estimate of `max_{θ ∈ S^{n-1}} ‖θ‖_K`.
#[derive(Debug, Clone)]
pub struct BEstimate<T: Scalar> {
    pub value: T,
    pub argmax: DVector<T>,
    /// True when the value meets the structural upper bound `1/r` with
    /// `r·B_2 ⊆ K`, so it is the exact maximum.
    pub certified: bool,
}

/// Fixed-point ascent `θ ← y/|y|` with `y` a subgradient of the gauge at `θ`;
/// the gauge never decreases along it.
fn ascend<T: Scalar>(body: &Body<T>, mut th: DVector<T>, max_steps: usize) -> Result<(T, DVector<T>)> {
    let mut g = body.gauge(&th)?;
    for _ in 0..max_steps {
        let Some(y) = g.certificate.as_ref() else { break };
        let yn = y.norm();
        if yn == T::zero() {
            break;
        }
        let next = y / yn;
        let g2 = body.gauge(&next)?;
        if !(g2.value > g.value * (T::one() + T::lit(1e-13))) {
            if g2.value > g.value {
                return Ok((g2.value, next));
            }
            break;
        }
        th = next;
        g = g2;
    }
    Ok((g.value, th))
}

pub fn estimate_b<T: Scalar>(body: &Body<T>, search: &BSearch<T>, seed: Seed) -> Result<BEstimate<T>> {
    if search.restarts == 0 {
        return Err(domain!("need at least one ascent restart"));
    }
    let body = body.canonical();
    let n = body.dim();
    let mut best = (T::zero(), DVector::zeros(n));
    let mut consider = |v: T, th: DVector<T>| {
        if v > best.0 {
            best = (v, th);
        }
    };
    for c in &search.contacts {
        let th = c / c.norm();
        consider(body.gauge_value(&th)?, th.clone());
        let (v, th) = ascend(&body, th, search.max_steps)?;
        consider(v, th);
    }
    let s = seed.derive_str("b-ascent");
    for i in 0..search.restarts {
        let mut rng = s.stream(i as u64);
        let th = sample_sphere(n, &mut rng)?;
        let (v, th) = ascend(&body, th, search.max_steps)?;
        consider(v, th);
    }
    let certified = body.inradius_bound().is_some_and(|r| best.0 >= T::one() / r - T::lit(1e-9));
    Ok(BEstimate { value: best.0, argmax: best.1, certified })
}

/// Gauge values at `n_samples` Haar points, in sample order.
pub fn sphere_gauges<T: Scalar>(body: &Body<T>, n_samples: usize, seed: Seed) -> Result<Vec<T>> {
    let body = body.canonical();
    let n = body.dim();
    samples(seed, n_samples, |rng| {
        let th = sample_sphere::<T, _>(n, rng)?;
        body.gauge_value(&th)
    })
    .into_iter()
    .collect()
}

pub fn estimate_stats<T: Scalar>(body: &Body<T>, n_samples: usize, seed: Seed) -> Result<StatsSummary> {
    estimate_stats_with(body, n_samples, seed, &BSearch::default())
}

pub fn estimate_stats_with<T: Scalar>(
    body: &Body<T>,
    n_samples: usize,
    seed: Seed,
    search: &BSearch<T>,
) -> Result<StatsSummary> {
    if n_samples < 100 {
        return Err(domain!("need at least 100 samples, got {n_samples}"));
    }
    let vals = sphere_gauges(body, n_samples, seed.derive_str("stats"))?;
    let b = estimate_b(body, search, seed)?;
    let mut sorted: Vec<f64> = vals.iter().map(|v| v.as_f64()).collect();
    sorted.sort_by(total_cmp);
    Ok(summarize(&sorted, b.value.as_f64(), b.certified, body.dim(), seed))
}

pub(crate) fn summarize(sorted: &[f64], b: f64, certified: bool, n: usize, seed: Seed) -> StatsSummary {
    let ns = sorted.len();
    let mean = sorted.iter().sum::<f64>() / ns as f64;
    let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (ns as f64 - 1.0).max(1.0);
    let (median, stderr_median) = median_with_stderr(sorted);
    let quantiles: BTreeMap<String, f64> =
        [0.1, 0.25, 0.75, 0.9].iter().map(|&q| (format!("{q}"), quantile_sorted(sorted, q))).collect();
    let b_max = if certified { b } else { b.max(*sorted.last().unwrap_or(&0.0)) };
    StatsSummary {
        mean_m: mean,
        median,
        b_max,
        b_certified: certified,
        quantiles,
        stderr_mean: (var / ns as f64).sqrt(),
        stderr_median,
        n_samples: ns,
        seed: seed.0,
        k_dvoretzky: n as f64 * mean * mean / (b_max * b_max),
    }
}
