//! Gaussian sketches: restricted isometry on sparse vectors, between
//! general normed spaces, and sparse Johnson–Lindenstrauss embeddings.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::normspace::{Body, BodyKind, Exponent, Weights};
use crate::rng::{per_item, samples, Seed};
use crate::scalar::Scalar;
use crate::spherestats::{sample_sphere, sphere_gauges};

/// `G/√m` with `G` an `m×n` matrix of i.i.d. standard normals.
#[derive(Debug, Clone)]
pub struct SketchOperator<T: Scalar> {
    pub g: DMatrix<T>,
    pub scale: T,
    pub seed: u64,
}

impl<T: Scalar> SketchOperator<T> {
    /// Entries are drawn column by column from the seed's stream.
    pub fn new(m: usize, n: usize, seed: Seed) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(domain!("sketch needs positive dimensions, got {m}x{n}"));
        }
        let mut rng = seed.derive_str("sketch").rng();
        let mut g = DMatrix::zeros(m, n);
        for j in 0..n {
            for i in 0..m {
                g[(i, j)] = T::standard_normal(&mut rng);
            }
        }
        Ok(SketchOperator { g, scale: T::one() / T::from_usize_lossy(m).sqrt(), seed: seed.0 })
    }

    pub fn m(&self) -> usize {
        self.g.nrows()
    }

    pub fn n(&self) -> usize {
        self.g.ncols()
    }

    pub fn apply(&self, x: &DVector<T>) -> DVector<T> {
        &self.g * x * self.scale
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RipReport {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub eps: f64,
    pub tested_supports: usize,
    pub worst_lo: f64,
    pub worst_hi: f64,
    pub pass: bool,
    /// True when supports were sampled rather than enumerated.
    pub partial: bool,
    /// Extremes are exact singular values rather than search estimates.
    pub exact: bool,
    pub reason: Option<String>,
}

impl RipReport {
    fn judge(mut self) -> Self {
        self.pass = self.reason.is_none() && self.worst_lo >= 1.0 - self.eps && self.worst_hi <= 1.0 + self.eps;
        self
    }
}

/// Number of `k`-subsets of `n`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    c
}

pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else { break };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
    out
}

/// All `k`-supports when there are at most `cap`, otherwise `cap` sampled ones.
fn supports(n: usize, k: usize, cap: usize, seed: Seed) -> (Vec<Vec<usize>>, bool) {
    if binomial(n, k) <= cap as u128 {
        (combinations(n, k), false)
    } else {
        let s = per_item(seed.derive_str("supports"), cap, |_, rng| {
            let mut s = sample(rng, n, k).into_vec();
            s.sort_unstable();
            s
        });
        (s, true)
    }
}

/// Extreme singular values of `(G/√m)` restricted to `support`, from the
/// eigenvalues of the scaled Gram block.
fn singular_range<T: Scalar>(gram: &DMatrix<T>, support: &[usize]) -> (T, T) {
    let k = support.len();
    let block = DMatrix::from_fn(k, k, |i, j| gram[(support[i], support[j])]);
    let ev = block.symmetric_eigenvalues();
    (ev.min().max(T::zero()).sqrt(), ev.max().max(T::zero()).sqrt())
}

fn improve_support<T: Scalar>(gram: &DMatrix<T>, start: &[usize], worse: impl Fn(T, T) -> bool, pick: impl Fn((T, T)) -> T) -> Vec<usize> {
    let n = gram.nrows();
    let mut cur = start.to_vec();
    let mut val = pick(singular_range(gram, &cur));
    for _ in 0..10 {
        let mut changed = false;
        for pos in 0..cur.len() {
            for c in 0..n {
                if cur.contains(&c) {
                    continue;
                }
                let mut cand = cur.clone();
                cand[pos] = c;
                cand.sort_unstable();
                let v = pick(singular_range(gram, &cand));
                if worse(v, val) {
                    cur = cand;
                    val = v;
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            break;
        }
    }
    cur
}

/// Restricted isometry constants of a Gaussian sketch over `k`-sparse
/// vectors. Sampled supports are followed by a swap search from the most
/// extreme ones.
pub fn gaussian_rip(n: usize, m: usize, k: usize, eps: f64, seed: Seed, support_cap: usize) -> Result<RipReport> {
    let op = SketchOperator::<f64>::new(m, n, seed)?;
    rip_of_sketch(&op, k, eps, seed, support_cap)
}

pub fn rip_of_sketch<T: Scalar>(op: &SketchOperator<T>, k: usize, eps: f64, seed: Seed, support_cap: usize) -> Result<RipReport> {
    let (m, n) = (op.m(), op.n());
    if k == 0 || k > n {
        return Err(domain!("sparsity must satisfy 1 <= k <= n, got k={k}, n={n}"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain!("eps must lie in (0, 1), got {eps}"));
    }
    if support_cap == 0 {
        return Err(domain!("support cap must be positive"));
    }
    let base = RipReport {
        n,
        m,
        k,
        eps,
        tested_supports: 0,
        worst_lo: 0.0,
        worst_hi: 0.0,
        pass: false,
        partial: false,
        exact: true,
        reason: None,
    };
    if k > m {
        return Ok(RipReport { reason: Some("rank deficient".into()), ..base }.judge());
    }
    let s2 = op.scale * op.scale;
    let gram = op.g.tr_mul(&op.g) * s2;
    let (mut sup, partial) = supports(n, k, support_cap, seed);
    let ranges: Vec<(T, T)> = sup.iter().map(|s| singular_range(&gram, s)).collect();
    if partial {
        let mut by_lo: Vec<usize> = (0..sup.len()).collect();
        by_lo.sort_by(|&a, &b| ranges[a].0.as_f64().total_cmp(&ranges[b].0.as_f64()));
        let mut by_hi = by_lo.clone();
        by_hi.sort_by(|&a, &b| ranges[b].1.as_f64().total_cmp(&ranges[a].1.as_f64()));
        let mut extra = Vec::new();
        for &i in by_lo.iter().take(8) {
            extra.push(improve_support(&gram, &sup[i], |a, b| a < b, |r| r.0));
        }
        for &i in by_hi.iter().take(8) {
            extra.push(improve_support(&gram, &sup[i], |a, b| a > b, |r| r.1));
        }
        sup.extend(extra);
    }
    let mut lo = T::infinity();
    let mut hi = T::zero();
    for s in &sup {
        let (a, b) = singular_range(&gram, s);
        lo = lo.min(a);
        hi = hi.max(b);
    }
    Ok(RipReport { tested_supports: sup.len(), worst_lo: lo.as_f64(), worst_hi: hi.as_f64(), partial, ..base }.judge())
}

/// A normed space given by its unit ball and a basis (columns).
#[derive(Debug, Clone)]
pub struct NormedBasis<T: Scalar> {
    pub body: Body<T>,
    pub basis: DMatrix<T>,
}

impl<T: Scalar> NormedBasis<T> {
    pub fn new(body: Body<T>, basis: DMatrix<T>) -> Result<Self> {
        let n = body.dim();
        if basis.shape() != (n, n) {
            return Err(domain!("basis must be {n}x{n}, got {:?}", basis.shape()));
        }
        Ok(NormedBasis { body: body.canonical(), basis })
    }

    pub fn standard(body: Body<T>) -> Self {
        let n = body.dim();
        NormedBasis { body: body.canonical(), basis: DMatrix::identity(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.body.dim()
    }

    /// Uniform ℓ_2 norm with an orthonormal basis, where all norms are
    /// Euclidean up to the factor returned.
    fn euclidean_factor(&self) -> Option<T> {
        let BodyKind::PNorm { p: Exponent::Finite(p), weights: Weights::Uniform(c) } = self.body.kind() else {
            return None;
        };
        let n = self.dim();
        let orth = (self.basis.tr_mul(&self.basis) - DMatrix::identity(n, n)).amax() <= T::lit(1e-12);
        (*p == T::lit(2.0) && orth).then_some(*c)
    }
}

/// Search effort for ratios over coefficient spheres.
#[derive(Debug, Clone, Copy)]
pub struct RatioSearch {
    pub n_samples: usize,
    pub restarts: usize,
    pub max_steps: usize,
}

impl Default for RatioSearch {
    fn default() -> Self {
        RatioSearch { n_samples: 1000, restarts: 20, max_steps: 100 }
    }
}

/// `‖y_map·a‖_Y / ‖x_map·a‖_X` and its gradient in `a`.
struct Ratio<'a, T: Scalar> {
    x: &'a Body<T>,
    x_map: DMatrix<T>,
    y: &'a Body<T>,
    y_map: DMatrix<T>,
}

impl<T: Scalar> Ratio<'_, T> {
    fn value(&self, a: &DVector<T>) -> Result<T> {
        Ok(self.y.gauge_value(&(&self.y_map * a))? / self.x.gauge_value(&(&self.x_map * a))?)
    }

    fn value_grad(&self, a: &DVector<T>) -> Result<(T, Option<DVector<T>>)> {
        let gy = self.y.gauge(&(&self.y_map * a))?;
        let gx = self.x.gauge(&(&self.x_map * a))?;
        let v = gy.value / gx.value;
        let grad = match (gy.certificate, gx.certificate) {
            (Some(cy), Some(cx)) => Some((self.y_map.tr_mul(&cy) - self.x_map.tr_mul(&cx) * v) / gx.value),
            _ => None,
        };
        Ok((v, grad))
    }

    /// Projected gradient steps on the sphere with backtracking; `sign` is
    /// `+1` to maximize and `−1` to minimize.
    fn refine(&self, mut a: DVector<T>, sign: T, steps: usize) -> Result<T> {
        let (mut v, mut grad) = self.value_grad(&a)?;
        let mut eta = T::lit(0.5);
        for _ in 0..steps {
            let Some(g) = grad.take() else { break };
            let tangent = &g - &a * g.dot(&a);
            if tangent.norm() <= T::lit(1e-14) * (T::one() + g.norm()) {
                break;
            }
            let mut moved = false;
            while eta > T::lit(1e-12) {
                let mut next = &a + &tangent * (sign * eta);
                next /= next.norm();
                let (v2, g2) = self.value_grad(&next)?;
                if sign * (v2 - v) > T::zero() {
                    a = next;
                    v = v2;
                    grad = g2;
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
        Ok(v)
    }

    fn extremes(&self, k: usize, search: &RatioSearch, seed: Seed) -> Result<(T, T)> {
        let vals: Vec<Result<(T, DVector<T>)>> = samples(seed.derive_str("ratio"), search.n_samples, |rng| {
            let a = sample_sphere::<T, _>(k, rng)?;
            Ok((self.value(&a)?, a))
        });
        let vals: Vec<(T, DVector<T>)> = vals.into_iter().collect::<Result<_>>()?;
        let mut lo = (T::infinity(), None);
        let mut hi = (T::zero(), None);
        for (v, a) in &vals {
            if *v < lo.0 {
                lo = (*v, Some(a.clone()));
            }
            if *v > hi.0 {
                hi = (*v, Some(a.clone()));
            }
        }
        let mut rng = seed.derive_str("restarts").rng();
        let mut starts_lo: Vec<DVector<T>> = lo.1.into_iter().collect();
        let mut starts_hi: Vec<DVector<T>> = hi.1.into_iter().collect();
        for _ in 0..search.restarts {
            let a = sample_sphere::<T, _>(k, &mut rng)?;
            starts_lo.push(a.clone());
            starts_hi.push(a);
        }
        let (mut lo, mut hi) = (lo.0, hi.0);
        for a in starts_lo {
            lo = lo.min(self.refine(a, -T::one(), search.max_steps)?);
        }
        for a in starts_hi {
            hi = hi.max(self.refine(a, T::one(), search.max_steps)?);
        }
        Ok((lo, hi))
    }
}

/// Norm-to-norm restricted isometry of `a ↦ F·(G a)/√m` from `(X, E)` to
/// `(Y, F)` over `k`-sparse coefficient vectors, with `m = dim Y`.
pub fn general_rip<T: Scalar>(
    x: &NormedBasis<T>,
    y: &NormedBasis<T>,
    k: usize,
    eps: f64,
    seed: Seed,
    search: &RatioSearch,
    support_cap: usize,
) -> Result<RipReport> {
    let (n, m) = (x.dim(), y.dim());
    let op = SketchOperator::<T>::new(m, n, seed)?;
    if let (Some(cx), Some(cy)) = (x.euclidean_factor(), y.euclidean_factor()) {
        let mut r = rip_of_sketch(&op, k, eps, seed, support_cap)?;
        let f = (cy / cx).as_f64();
        if f != 1.0 {
            r.worst_lo *= f;
            r.worst_hi *= f;
            r = r.judge();
        }
        return Ok(r);
    }
    if k == 0 || k > n {
        return Err(domain!("sparsity must satisfy 1 <= k <= n, got k={k}, n={n}"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain!("eps must lie in (0, 1), got {eps}"));
    }
    if search.n_samples == 0 && search.restarts == 0 {
        return Err(domain!("need samples or restarts"));
    }
    let fg = &y.basis * &op.g * op.scale;
    let (sup, partial) = supports(n, k, support_cap, seed);
    let results: Vec<Result<(T, T)>> = per_item(seed.derive_str("general-rip"), sup.len(), |i, _| {
        let s = &sup[i];
        let ratio = Ratio { x: &x.body, x_map: x.basis.select_columns(s), y: &y.body, y_map: fg.select_columns(s) };
        ratio.extremes(k, search, seed.derive(i as u64))
    });
    let mut lo = T::infinity();
    let mut hi = T::zero();
    for r in results {
        let (a, b) = r?;
        lo = lo.min(a);
        hi = hi.max(b);
    }
    Ok(RipReport {
        n,
        m,
        k,
        eps,
        tested_supports: sup.len(),
        worst_lo: lo.as_f64(),
        worst_hi: hi.as_f64(),
        pass: false,
        partial,
        exact: false,
        reason: if k > m { Some("rank deficient".into()) } else { None },
    }
    .judge())
}

#[derive(Debug, Clone, Serialize)]
pub struct JlReport {
    pub points: usize,
    pub m: usize,
    pub eps: f64,
    pub c_jl: f64,
    pub pairs: usize,
    pub max_error: f64,
    pub pass: bool,
}

/// `m = ⌈C·ε⁻²·ln|Ω|⌉`.
pub fn jl_dimension(points: usize, eps: f64, c_jl: f64) -> usize {
    (c_jl / (eps * eps) * (points as f64).ln()).ceil().max(1.0) as usize
}

/// Embeds points `x = E a` with `k`-sparse coefficients `a` by
/// `x ↦ G a/√m` and reports the worst relative distortion of distances.
pub fn jl_sparse<T: Scalar>(
    x: &NormedBasis<T>,
    omega: &[DVector<T>],
    k: usize,
    eps: f64,
    c_jl: f64,
    seed: Seed,
) -> Result<JlReport> {
    let n = x.dim();
    if omega.len() < 2 {
        return Err(domain!("need at least two points, got {}", omega.len()));
    }
    if !(eps > 0.0) || !(c_jl > 0.0) {
        return Err(domain!("eps and C must be positive"));
    }
    for (i, a) in omega.iter().enumerate() {
        if a.len() != n {
            return Err(domain!("point {i} has length {}, expected {n}", a.len()));
        }
        let nnz = a.iter().filter(|v| **v != T::zero()).count();
        if nnz > k {
            return Err(domain!("point {i} has {nnz} nonzero coefficients, more than k = {k}"));
        }
    }
    let m = jl_dimension(omega.len(), eps, c_jl);
    let op = SketchOperator::<T>::new(m, n, seed)?;
    let images: Vec<DVector<T>> = omega.iter().map(|a| op.apply(a)).collect();
    let mut pairs = 0;
    let mut worst = T::zero();
    for i in 0..omega.len() {
        for j in i + 1..omega.len() {
            let d = &omega[i] - &omega[j];
            if d.iter().all(|v| *v == T::zero()) {
                continue;
            }
            let dist = x.body.gauge_value(&(&x.basis * d))?;
            let err = ((&images[i] - &images[j]).norm() / dist - T::one()).abs();
            worst = worst.max(err);
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let max_error = worst.as_f64();
    Ok(JlReport { points: omega.len(), m, eps, c_jl, pairs, max_error, pass: max_error <= eps })
}

/// `count` coefficient vectors with `k` nonzero Gaussian entries on random supports.
pub fn random_sparse_family<T: Scalar>(n: usize, k: usize, count: usize, seed: Seed) -> Result<Vec<DVector<T>>> {
    if k == 0 || k > n {
        return Err(domain!("sparsity must satisfy 1 <= k <= n, got k={k}, n={n}"));
    }
    Ok(per_item(seed.derive_str("sparse-family"), count, |_, rng| {
        let mut a = DVector::zeros(n);
        for i in sample(rng, n, k) {
            a[i] = T::standard_normal(rng);
        }
        a
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct CotypeReport {
    pub n: usize,
    /// `None` for `q = ∞`.
    pub q: Option<f64>,
    pub beta: f64,
    pub m_estimate: f64,
    pub m_stderr: f64,
    /// `β·n^{1/q − 1/2}`
    pub bound: f64,
    pub fitted_c: f64,
}

/// Mean norm on the sphere against the cotype lower bound `β·n^{1/q−1/2}`.
pub fn cotype_gap_check<T: Scalar>(body: &Body<T>, q: Exponent<f64>, beta: f64, n_samples: usize, seed: Seed) -> Result<CotypeReport> {
    let qv = match q {
        Exponent::Finite(v) if v >= 2.0 => Some(v),
        Exponent::Infinite => None,
        Exponent::Finite(v) => return Err(domain!("cotype exponent must be >= 2, got {v}")),
    };
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(domain!("beta must lie in (0, 1], got {beta}"));
    }
    if n_samples < 2 {
        return Err(domain!("need at least two samples"));
    }
    let n = body.dim();
    let vals: Vec<f64> = sphere_gauges(body, n_samples, seed.derive_str("cotype"))?.iter().map(|v| v.as_f64()).collect();
    let ns = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / ns;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (ns - 1.0);
    let bound = beta * (n as f64).powf(qv.map_or(0.0, |v| 1.0 / v) - 0.5);
    Ok(CotypeReport { n, q: qv, beta, m_estimate: mean, m_stderr: (var / ns).sqrt(), bound, fitted_c: mean / bound })
}
