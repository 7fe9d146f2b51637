//! Distortion of a norm restricted to subspaces, and the random-basis,
//! splitting and block experiments built on it.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::support::profile_of;
use crate::error::{domain, Error, Result};
use crate::normspace::{Body, BodyKind, Exponent, Weights};
use crate::rng::{per_item, samples, Seed};
use crate::scalar::{total_cmp, Scalar};
use crate::spherestats::{quantile_sorted, sample_orthogonal, sample_sphere};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisOrigin {
    Coordinate { support: Vec<usize> },
    Haar { seed: u64 },
    BasisColumns { support: Vec<usize> },
}

/// Orthonormal basis `Q` (`n×k`) of a subspace.
#[derive(Debug, Clone)]
pub struct SubspaceBasis<T: Scalar> {
    pub q: DMatrix<T>,
    pub origin: BasisOrigin,
}

impl<T: Scalar> SubspaceBasis<T> {
    /// Coordinate subspace spanned by `e_i`, `i ∈ support`.
    pub fn coordinate(n: usize, support: &[usize]) -> Result<Self> {
        let q = select_columns(&DMatrix::identity(n, n), support)?;
        Ok(SubspaceBasis { q, origin: BasisOrigin::Coordinate { support: support.to_vec() } })
    }

    /// Haar-random `k`-dimensional subspace.
    pub fn haar(n: usize, k: usize, seed: Seed) -> Result<Self> {
        let q = crate::spherestats::sample_grassmann(n, k, &mut seed.rng())?;
        Ok(SubspaceBasis { q, origin: BasisOrigin::Haar { seed: seed.0 } })
    }

    /// Columns of an orthogonal matrix `u` indexed by `support`.
    pub fn columns(u: &DMatrix<T>, support: &[usize]) -> Result<Self> {
        let q = select_columns(u, support)?;
        let err = (q.tr_mul(&q) - DMatrix::identity(q.ncols(), q.ncols())).amax();
        if err > T::lit(1e-10) {
            return Err(domain!("selected columns are not orthonormal (error {err:?})"));
        }
        Ok(SubspaceBasis { q, origin: BasisOrigin::BasisColumns { support: support.to_vec() } })
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn k(&self) -> usize {
        self.q.ncols()
    }
}

fn select_columns<T: Scalar>(m: &DMatrix<T>, support: &[usize]) -> Result<DMatrix<T>> {
    if support.is_empty() {
        return Err(domain!("empty support"));
    }
    if let Some(&i) = support.iter().find(|&&i| i >= m.ncols()) {
        return Err(domain!("column {i} out of range for {} columns", m.ncols()));
    }
    Ok(m.select_columns(support))
}

/// Extremes of `‖Qa‖ / |a|` over coefficient vectors `a`.
#[derive(Debug, Clone, Serialize)]
pub struct DistortionBounds {
    pub lo: f64,
    pub hi: f64,
    /// True when the side is a closed form rather than a search result.
    pub lo_exact: bool,
    pub hi_exact: bool,
    pub lo_arg: Vec<f64>,
    pub hi_arg: Vec<f64>,
}

impl DistortionBounds {
    pub fn ratio(&self) -> f64 {
        self.hi / self.lo
    }
}

/// Search effort for [`subspace_distortion`].
#[derive(Debug, Clone, Copy)]
pub struct DistortionSearch {
    pub n_samples: usize,
    pub restarts: usize,
    pub max_steps: usize,
}

impl Default for DistortionSearch {
    fn default() -> Self {
        DistortionSearch { n_samples: 1000, restarts: 8, max_steps: 200 }
    }
}

fn unit<T: Scalar>(v: DVector<T>) -> Option<DVector<T>> {
    let n = v.norm();
    (n > T::zero() && n.is_finite()).then(|| v / n)
}

/// `θ ← Qᵀy/|Qᵀy|` with `y` a subgradient at `Qθ`; never decreases the gauge.
fn ascend<T: Scalar>(body: &Body<T>, q: &DMatrix<T>, mut a: DVector<T>, steps: usize) -> Result<(T, DVector<T>)> {
    let mut g = body.gauge(&(q * &a))?;
    for _ in 0..steps {
        let Some(y) = g.certificate.as_ref() else { break };
        let Some(next) = unit(q.tr_mul(y)) else { break };
        let g2 = body.gauge(&(q * &next))?;
        if !(g2.value > g.value * (T::one() + T::lit(1e-14))) {
            if g2.value > g.value {
                return Ok((g2.value, next));
            }
            break;
        }
        a = next;
        g = g2;
    }
    Ok((g.value, a))
}

/// Projected subgradient descent on the sphere with an adaptive step.
fn descend<T: Scalar>(body: &Body<T>, q: &DMatrix<T>, mut a: DVector<T>, steps: usize) -> Result<(T, DVector<T>)> {
    let mut g = body.gauge(&(q * &a))?;
    let mut eta = T::lit(0.5);
    for _ in 0..steps {
        let Some(y) = g.certificate.as_ref() else { break };
        let grad = q.tr_mul(y);
        let tangent = &grad - &a * grad.dot(&a);
        if tangent.norm() <= T::lit(1e-14) * grad.norm() {
            break;
        }
        let mut moved = false;
        while eta > T::lit(1e-10) {
            let Some(next) = unit(&a - &tangent * eta) else { break };
            let g2 = body.gauge(&(q * &next))?;
            if g2.value < g.value {
                a = next;
                g = g2;
                eta *= T::lit(1.5);
                moved = true;
                break;
            }
            eta *= T::lit(0.5);
        }
        if !moved {
            break;
        }
    }
    Ok((g.value, a))
}

fn to_f64<T: Scalar>(v: &DVector<T>) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

/// Closed forms: the max of an ℓ_∞ gauge is the largest weighted row norm,
/// and a uniform ℓ_2 gauge is constant on orthonormal frames.
fn closed_forms<T: Scalar>(body: &Body<T>, q: &DMatrix<T>) -> (Option<(T, DVector<T>)>, Option<T>) {
    let BodyKind::PNorm { p, weights } = body.kind() else { return (None, None) };
    match p {
        Exponent::Infinite => {
            let mut best = (T::zero(), 0);
            for i in 0..q.nrows() {
                let v = weights.get(i) * q.row(i).norm();
                if v > best.0 {
                    best = (v, i);
                }
            }
            let arg = q.row(best.1).transpose() / q.row(best.1).norm();
            (Some((best.0, arg)), None)
        }
        Exponent::Finite(p) if *p == T::lit(2.0) => match weights {
            Weights::Uniform(c) => {
                let k = q.ncols();
                let orth = (q.tr_mul(q) - DMatrix::identity(k, k)).amax() <= T::lit(1e-10);
                (None, orth.then_some(*c))
            }
            Weights::PerCoord(_) => (None, None),
        },
        _ => (None, None),
    }
}

/// Min and max of `‖Qa‖_K/|a|` from Haar samples of `a`, `extra` candidate
/// directions, ascent for the max and descent for the min.
pub(crate) fn ratio_extremes<T: Scalar>(
    body: &Body<T>,
    q: &DMatrix<T>,
    search: &DistortionSearch,
    extra: &[DVector<T>],
    seed: Seed,
) -> Result<DistortionBounds> {
    let k = q.ncols();
    let body = body.canonical();
    let (hi_closed, flat) = closed_forms(&body, q);
    if let Some(c) = flat {
        let e1 = DVector::from_fn(k, |i, _| if i == 0 { T::one() } else { T::zero() });
        let arg = to_f64(&e1);
        return Ok(DistortionBounds {
            lo: c.as_f64(),
            hi: c.as_f64(),
            lo_exact: true,
            hi_exact: true,
            lo_arg: arg.clone(),
            hi_arg: arg,
        });
    }
    let sampled: Vec<Result<(T, DVector<T>)>> = samples(seed.derive_str("ratio-samples"), search.n_samples, |rng| {
        let a = sample_sphere::<T, _>(k, rng)?;
        Ok((body.gauge_value(&(q * &a))?, a))
    });
    let mut cands: Vec<(T, DVector<T>)> = sampled.into_iter().collect::<Result<_>>()?;
    for a in extra {
        if let Some(a) = unit(a.clone()) {
            cands.push((body.gauge_value(&(q * &a))?, a));
        }
    }
    let starts: Vec<Result<DVector<T>>> =
        per_item(seed.derive_str("ratio-starts"), search.restarts, |_, rng| sample_sphere::<T, _>(k, rng));
    let starts: Vec<DVector<T>> = starts.into_iter().collect::<Result<_>>()?;
    // Local searches start from the random starts and the most extreme
    // samples on each side.
    cands.sort_by(|a, b| total_cmp(&a.0.as_f64(), &b.0.as_f64()));
    let top = cands.len().div_ceil(4);
    let bottom = cands.len().div_ceil(16);

    let (hi, hi_arg, hi_exact) = match hi_closed {
        Some((v, arg)) => (v, arg, true),
        None => {
            let mut seeds: Vec<DVector<T>> = starts.clone();
            seeds.extend(cands.iter().rev().take(top).map(|c| c.1.clone()));
            let runs: Vec<Result<(T, DVector<T>)>> =
                per_item(seed, seeds.len(), |i, _| ascend(&body, q, seeds[i].clone(), search.max_steps));
            let mut best = cands.last().cloned().unwrap_or((T::zero(), seeds[0].clone()));
            for r in runs {
                let r = r?;
                if r.0 > best.0 {
                    best = r;
                }
            }
            (best.0, best.1, false)
        }
    };
    let mut seeds: Vec<DVector<T>> = starts;
    seeds.extend(cands.iter().take(bottom).map(|c| c.1.clone()));
    let runs: Vec<Result<(T, DVector<T>)>> =
        per_item(seed, seeds.len(), |i, _| descend(&body, q, seeds[i].clone(), search.max_steps));
    let mut lo = cands.first().cloned().unwrap_or((T::infinity(), DVector::zeros(k)));
    for r in runs {
        let r = r?;
        if r.0 < lo.0 {
            lo = r;
        }
    }
    Ok(DistortionBounds {
        lo: lo.0.as_f64(),
        hi: hi.as_f64(),
        lo_exact: false,
        hi_exact,
        lo_arg: to_f64(&lo.1),
        hi_arg: to_f64(&hi_arg),
    })
}

/// Distortion of the body's norm on the span of an orthonormal basis.
pub fn subspace_distortion<T: Scalar>(
    body: &Body<T>,
    basis: &SubspaceBasis<T>,
    search: &DistortionSearch,
    seed: Seed,
) -> Result<DistortionBounds> {
    if basis.dim() != body.dim() {
        return Err(domain!("basis has {} rows, body dimension is {}", basis.dim(), body.dim()));
    }
    if search.restarts == 0 && search.n_samples == 0 {
        return Err(domain!("need samples or restarts"));
    }
    ratio_extremes(body, &basis.q, search, &[], seed)
}

/// Gauge of `√n B_1`, the cross-polytope in John position.
pub fn john_cross_polytope<T: Scalar>(n: usize) -> Result<Body<T>> {
    Body::weighted_pnorm(Exponent::Finite(T::one()), Weights::Uniform(T::one() / T::from_usize_lossy(n).sqrt()), n)
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisRow {
    pub support: Vec<usize>,
    pub lo: f64,
    pub hi: f64,
    pub ratio: f64,
    pub d_raw: f64,
    /// Hull radius `max(1, d_raw)` at which `m_t` is measured.
    pub t: f64,
    pub m_t: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct BasisExperiment {
    pub search: DistortionSearch,
    /// Haar samples for the hull median `M_t`.
    pub median_samples: usize,
    /// Rows with `hi/lo` above this are flagged.
    pub ratio_limit: f64,
}

impl Default for BasisExperiment {
    fn default() -> Self {
        BasisExperiment { search: DistortionSearch::default(), median_samples: 2000, ratio_limit: 3.0 }
    }
}

fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(total_cmp);
    quantile_sorted(&v, 0.5)
}

/// One Haar basis `U`; for every support `A` the distortion on
/// `span{U e_i : i ∈ A}` next to the support's budget.
pub fn random_basis_experiment<T: Scalar>(
    body: &Body<T>,
    supports: &[Vec<usize>],
    cfg: &BasisExperiment,
    seed: Seed,
) -> Result<Vec<BasisRow>> {
    let n = body.dim();
    let u = sample_orthogonal::<T, _>(n, &mut seed.derive_str("basis").rng())?;
    let inner = body.canonical();
    let mut rows = Vec::with_capacity(supports.len());
    for (i, s) in supports.iter().enumerate() {
        let basis = SubspaceBasis::columns(&u, s)?;
        let b = subspace_distortion(&inner, &basis, &cfg.search, seed.derive(i as u64))?;
        let prof = profile_of(&super::support::indicator(n, s)?, 1.0)?;
        let t = prof.d_raw.max(1.0);
        let hull = Body::hull(inner.clone(), T::lit(t))?;
        let vals: Vec<Result<f64>> = samples(seed.derive_str("hull-median").derive(i as u64), cfg.median_samples, |rng| {
            let th = sample_sphere::<T, _>(n, rng)?;
            Ok(hull.gauge_value(&th)?.as_f64())
        });
        let m_t = median_of(vals.into_iter().collect::<Result<_>>()?);
        let ratio = b.ratio();
        rows.push(BasisRow { support: s.clone(), lo: b.lo, hi: b.hi, ratio, d_raw: prof.d_raw, t, m_t, pass: ratio <= cfg.ratio_limit });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct KashinRow {
    pub trial: usize,
    pub ratio_first: f64,
    pub ratio_second: f64,
    pub worst: f64,
}

/// Splits a Haar basis into halves and measures the distortion of the
/// John-positioned ℓ_1 norm on each.
pub fn kashin_experiment<T: Scalar>(n: usize, trials: usize, search: &DistortionSearch, seed: Seed) -> Result<Vec<KashinRow>> {
    if n == 0 || n % 2 == 1 {
        return Err(domain!("splitting needs a positive even dimension, got {n}"));
    }
    let body = john_cross_polytope::<T>(n)?;
    let first: Vec<usize> = (0..n / 2).collect();
    let second: Vec<usize> = (n / 2..n).collect();
    let mut rows = Vec::with_capacity(trials);
    for trial in 0..trials {
        let s = seed.derive(trial as u64);
        let u = sample_orthogonal::<T, _>(n, &mut s.derive_str("basis").rng())?;
        let a = subspace_distortion(&body, &SubspaceBasis::columns(&u, &first)?, search, s.derive(1))?;
        let b = subspace_distortion(&body, &SubspaceBasis::columns(&u, &second)?, search, s.derive(2))?;
        let (ra, rb) = (a.ratio(), b.ratio());
        rows.push(KashinRow { trial, ratio_first: ra, ratio_second: rb, worst: ra.max(rb) });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockRow {
    pub index: usize,
    pub size: usize,
    pub median: f64,
    /// `|M♯(E_i) − M♯| / M♯`.
    pub deviation: f64,
    pub b: f64,
    /// `b(E_i)·√(n/k)`.
    pub b_scaled: f64,
    pub within_eps: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockReport {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub median: f64,
    pub blocks: Vec<BlockRow>,
    pub all_within_eps: bool,
    pub max_b_scaled: f64,
}

/// Block size `⌈n/N⌉` for `N = ⌊n^{1 − ε²/ln²(1/ε)}⌋` blocks.
pub fn asymptotic_block_size(n: usize, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(domain!("eps must lie in (0, 1/2), got {eps}"));
    }
    let l = (1.0 / eps).ln();
    let blocks = ((n as f64).powf(1.0 - eps * eps / (l * l)).floor() as usize).max(1);
    Ok(n.div_ceil(blocks))
}

/// Default block size `⌈√n⌉`.
pub fn default_block_size(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(1)
}

/// Rotates coordinate blocks of size `k` by one Haar `U` and compares the
/// median and maximum of the norm on each block with the global median.
pub fn block_decomposition<T: Scalar>(
    body: &Body<T>,
    k: usize,
    eps: f64,
    search: &DistortionSearch,
    seed: Seed,
) -> Result<BlockReport> {
    let n = body.dim();
    if k == 0 || k > n {
        return Err(domain!("block size must satisfy 1 <= k <= n, got k={k}, n={n}"));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(domain!("eps must lie in (0, 1/2), got {eps}"));
    }
    if search.n_samples == 0 {
        return Err(Error::Domain("block medians need samples".into()));
    }
    let inner = body.canonical();
    let global: Vec<Result<f64>> = samples(seed.derive_str("global-median"), search.n_samples, |rng| {
        let th = sample_sphere::<T, _>(n, rng)?;
        Ok(inner.gauge_value(&th)?.as_f64())
    });
    let median = median_of(global.into_iter().collect::<Result<_>>()?);
    let u = sample_orthogonal::<T, _>(n, &mut seed.derive_str("basis").rng())?;
    let mut blocks = Vec::new();
    for (index, start) in (0..n).step_by(k).enumerate() {
        let cols: Vec<usize> = (start..(start + k).min(n)).collect();
        let basis = SubspaceBasis::columns(&u, &cols)?;
        let s = seed.derive(index as u64);
        let vals: Vec<Result<f64>> = samples(s.derive_str("block-median"), search.n_samples, |rng| {
            let a = sample_sphere::<T, _>(cols.len(), rng)?;
            Ok(inner.gauge_value(&(&basis.q * a))?.as_f64())
        });
        let m = median_of(vals.into_iter().collect::<Result<_>>()?);
        let b = subspace_distortion(&inner, &basis, search, s)?.hi;
        let deviation = (m - median).abs() / median;
        blocks.push(BlockRow {
            index,
            size: cols.len(),
            median: m,
            deviation,
            b,
            b_scaled: b * (n as f64 / cols.len() as f64).sqrt(),
            within_eps: deviation <= eps,
        });
    }
    let all_within_eps = blocks.iter().all(|b| b.within_eps);
    let max_b_scaled = blocks.iter().map(|b| b.b_scaled).fold(0.0, f64::max);
    Ok(BlockReport { n, k, eps, median, blocks, all_within_eps, max_b_scaled })
}
