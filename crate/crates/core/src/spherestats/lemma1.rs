//! Ratio `M_t / b_t` of the hull bodies `K_t = conv(K ∪ t·B_2)`.

use nalgebra::DVector;
use serde::Serialize;

use super::{estimate_b, median_with_stderr, sample_sphere, BSearch};
use crate::error::{domain, Result};
use crate::normspace::{hull_gauges, Body};
use crate::rng::{samples, Seed};
use crate::scalar::{total_cmp, Scalar};

#[derive(Debug, Clone)]
pub struct Lemma1Options<T: Scalar> {
    /// `c'` inside `log(c'n/t²)`.
    pub c_prime: f64,
    /// Contact directions of the John position, used to certify `b_t`.
    pub contacts: Vec<DVector<T>>,
    pub restarts: usize,
}

impl<T: Scalar> Default for Lemma1Options<T> {
    fn default() -> Self {
        Lemma1Options { c_prime: 4.0, contacts: Vec::new(), restarts: 20 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma1Row {
    pub t: f64,
    /// Median of the hull gauge over the sphere.
    pub m_t: f64,
    pub m_t_stderr: f64,
    pub mean_t: f64,
    pub b_t: f64,
    pub b_certified: bool,
    pub ratio: f64,
    /// `t·sqrt(log(c'n/t²)/n)`.
    pub bound_unit: f64,
    pub fitted_c: Option<f64>,
    /// Set when `c'n/t² <= 1`.
    pub skipped: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma1Table {
    pub n: usize,
    pub n_samples: usize,
    pub rows: Vec<Lemma1Row>,
    /// Minimum of the per-row fitted constants.
    pub fitted_c: Option<f64>,
}

/// Evaluates every `t` of the grid on the same sphere samples, so `M_t`
/// and `t·M_t` are monotone sample by sample.
pub fn lemma1_ratio<T: Scalar>(
    body: &Body<T>,
    t_grid: &[f64],
    n_samples: usize,
    seed: Seed,
    opts: &Lemma1Options<T>,
) -> Result<Lemma1Table> {
    if n_samples == 0 {
        return Err(domain!("need at least one sample"));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t >= 1.0) || !t.is_finite()) {
        return Err(domain!("hull radius must satisfy t >= 1, got {t}"));
    }
    let inner = body.canonical();
    let n = inner.dim();
    let hulls: Vec<Body<T>> = t_grid.iter().map(|&t| Body::hull(inner.clone(), T::lit(t))).collect::<Result<_>>()?;
    let ts: Vec<T> = t_grid.iter().map(|&t| T::lit(t)).collect();
    let per_sample: Vec<Result<Vec<f64>>> = samples(seed.derive_str("lemma1"), n_samples, |rng| {
        let th = sample_sphere::<T, _>(n, rng)?;
        Ok(hull_gauges(&inner, &ts, &th)?.into_iter().map(|v| v.as_f64()).collect())
    });
    let per_sample: Vec<Vec<f64>> = per_sample.into_iter().collect::<Result<_>>()?;
    let nf = n as f64;
    let mut rows = Vec::with_capacity(t_grid.len());
    for (k, (&t, hull)) in t_grid.iter().zip(&hulls).enumerate() {
        let mut vals: Vec<f64> = per_sample.iter().map(|v| v[k]).collect();
        let mean_t = vals.iter().sum::<f64>() / vals.len() as f64;
        vals.sort_by(total_cmp);
        let (m_t, m_t_stderr) = median_with_stderr(&vals);
        let search = BSearch { contacts: opts.contacts.clone(), restarts: opts.restarts, max_steps: 100 };
        let b = estimate_b(hull, &search, seed.derive(k as u64))?;
        // A certified value is the exact maximum; larger samples are roundoff.
        let b_t = if b.certified { b.value.as_f64() } else { b.value.as_f64().max(*vals.last().unwrap()) };
        let ratio = m_t / b_t;
        let arg = opts.c_prime * nf / (t * t);
        let skipped = arg <= 1.0;
        let bound_unit = if skipped { f64::NAN } else { t * (arg.ln() / nf).sqrt() };
        rows.push(Lemma1Row {
            t,
            m_t,
            m_t_stderr,
            mean_t,
            b_t,
            b_certified: b.certified,
            ratio,
            bound_unit,
            fitted_c: (!skipped).then(|| ratio / bound_unit),
            skipped,
        });
    }
    let fitted_c = rows.iter().filter_map(|r| r.fitted_c).reduce(f64::min);
    Ok(Lemma1Table { n, n_samples, rows, fitted_c })
}
