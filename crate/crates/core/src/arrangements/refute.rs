//! Searches for sparse vectors on which a basis fails to be almost isometric.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use serde::Serialize;

use super::subspace::{ratio_extremes, DistortionSearch};
use crate::error::{domain, Error, Result};
use crate::normspace::Body;
use crate::rip_jl::{binomial, combinations};
use crate::rng::{per_item, Seed};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `‖Tx‖ < (1 − ε)|x|`
    Lower,
    /// `‖Tx‖ > (1 + ε)|x|`
    Upper,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocHilbertReport {
    pub k: usize,
    pub eps: f64,
    /// `C(n, k)`, saturating.
    pub supports_total: u128,
    pub supports_checked: usize,
    /// True when supports were subsampled because of the cap.
    pub partial: bool,
    pub lo: f64,
    pub hi: f64,
    /// Largest of `(1−ε)/lo − 1` and `hi/(1+ε) − 1`, floored at zero.
    pub worst_violation: f64,
    pub witness_support: Vec<usize>,
    /// Witness in full coordinates, unit Euclidean norm.
    pub witness: Vec<f64>,
    pub witness_side: Option<Side>,
    pub witness_ratio: f64,
}

/// Coordinate vectors and, for small `k`, all sign vectors of `ℝ^k`.
fn structured_candidates<T: Scalar>(k: usize) -> Vec<DVector<T>> {
    let mut out: Vec<DVector<T>> =
        (0..k).map(|i| DVector::from_fn(k, |j, _| if i == j { T::one() } else { T::zero() })).collect();
    if k <= 6 {
        for mask in 0..(1u32 << k) {
            out.push(DVector::from_fn(k, |j, _| if mask >> j & 1 == 1 { -T::one() } else { T::one() }));
        }
    }
    out
}

pub struct LocHilbertOptions {
    pub search: DistortionSearch,
    /// Exhaustive enumeration up to this many supports, sampling beyond.
    pub cap: usize,
}

impl Default for LocHilbertOptions {
    fn default() -> Self {
        LocHilbertOptions { search: DistortionSearch { n_samples: 200, restarts: 2, max_steps: 50 }, cap: 100_000 }
    }
}

/// Worst violation of `(1−ε)|a| ≤ ‖Basis·a‖ ≤ (1+ε)|a|` over `k`-sparse `a`.
pub fn loc_hilbert_check<T: Scalar>(
    body: &Body<T>,
    basis: &DMatrix<T>,
    k: usize,
    eps: f64,
    opts: &LocHilbertOptions,
    seed: Seed,
) -> Result<LocHilbertReport> {
    let n = body.dim();
    if basis.shape() != (n, n) {
        return Err(domain!("basis must be {n}x{n}, got {:?}", basis.shape()));
    }
    if k == 0 || k > n {
        return Err(domain!("sparsity must satisfy 1 <= k <= n, got {k}"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain!("eps must lie in (0, 1), got {eps}"));
    }
    let total = binomial(n, k);
    let partial = total > opts.cap as u128;
    let supports: Vec<Vec<usize>> = if partial {
        per_item(seed.derive_str("supports"), opts.cap, |_, rng| {
            let mut s = sample(rng, n, k).into_vec();
            s.sort_unstable();
            s
        })
    } else {
        combinations(n, k)
    };
    let body = body.canonical();
    let extra = structured_candidates::<T>(k);
    let results: Vec<Result<_>> = per_item(seed.derive_str("extremes"), supports.len(), |i, _| {
        let q = basis.select_columns(&supports[i]);
        ratio_extremes(&body, &q, &opts.search, &extra, seed.derive(i as u64))
    });
    let mut report = LocHilbertReport {
        k,
        eps,
        supports_total: total,
        supports_checked: supports.len(),
        partial,
        lo: f64::INFINITY,
        hi: 0.0,
        worst_violation: 0.0,
        witness_support: Vec::new(),
        witness: Vec::new(),
        witness_side: None,
        witness_ratio: f64::NAN,
    };
    for (s, r) in supports.iter().zip(results) {
        let b = r?;
        report.lo = report.lo.min(b.lo);
        report.hi = report.hi.max(b.hi);
        let lower = (1.0 - eps) / b.lo - 1.0;
        let upper = b.hi / (1.0 + eps) - 1.0;
        let (v, side, arg, ratio) =
            if lower >= upper { (lower, Side::Lower, &b.lo_arg, b.lo) } else { (upper, Side::Upper, &b.hi_arg, b.hi) };
        if v > report.worst_violation {
            let mut full = vec![0.0; n];
            for (&j, &c) in s.iter().zip(arg) {
                full[j] = c;
            }
            report.worst_violation = v;
            report.witness_support = s.clone();
            report.witness = full;
            report.witness_side = Some(side);
            report.witness_ratio = ratio;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct LinftyWitness {
    /// Unit vector with at most two nonzero entries.
    pub vector: Vec<f64>,
    /// `‖Tx‖_∞`
    pub image_norm: f64,
    pub side: Side,
}

/// Largest `ε` for which a 2-sparse witness is guaranteed: `(√2 − 1)^4`.
pub fn linfty_eps_limit() -> f64 {
    (2f64.sqrt() - 1.0).powi(4)
}

/// Finds a unit `x` among `e_j` and `(±e_j ± e_l)/√2` with `‖Tx‖_∞`
/// outside `[1−ε, 1+ε]`.
pub fn linfty_refute<T: Scalar>(t: &DMatrix<T>, eps: f64) -> Result<LinftyWitness> {
    let n = t.ncols();
    if t.nrows() != n || n < 2 {
        return Err(domain!("need a square matrix of order >= 2, got {:?}", t.shape()));
    }
    if !(eps > 0.0 && eps < linfty_eps_limit()) {
        return Err(domain!("eps must lie in (0, {}), got {eps}", linfty_eps_limit()));
    }
    let (lo, hi) = (T::lit(1.0 - eps), T::lit(1.0 + eps));
    let check = |x: DVector<T>| -> Option<LinftyWitness> {
        let v = (t * &x).amax();
        let side = if v < lo {
            Side::Lower
        } else if v > hi {
            Side::Upper
        } else {
            return None;
        };
        Some(LinftyWitness { vector: x.iter().map(|c| c.as_f64()).collect(), image_norm: v.as_f64(), side })
    };
    for j in 0..n {
        let x = DVector::from_fn(n, |i, _| if i == j { T::one() } else { T::zero() });
        if let Some(w) = check(x) {
            return Ok(w);
        }
    }
    let h = T::one() / T::lit(2.0).sqrt();
    for j in 0..n {
        for l in j + 1..n {
            for (sj, sl) in [(1.0, 1.0), (1.0, -1.0)] {
                let mut x = DVector::zeros(n);
                x[j] = h * T::lit(sj);
                x[l] = h * T::lit(sl);
                if let Some(w) = check(x) {
                    return Ok(w);
                }
            }
        }
    }
    Err(Error::Numerical("no 2-sparse witness found; the matrix is numerically invalid".into()))
}
