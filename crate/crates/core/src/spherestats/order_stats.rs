//! Gaussian order statistics: how many of `m` samples land in
//! `[s·sqrt(ln m), 3·sqrt(ln m)]`.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::rng::{per_item, Seed};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Serialize)]
pub struct OrderStatsReport {
    pub m: usize,
    pub s: f64,
    pub trials: usize,
    pub c_prime: f64,
    /// `c'·m^{1−s²}`.
    pub threshold_count: f64,
    /// Fraction of trials whose count reached the threshold.
    pub frequency: f64,
    pub mean_count: f64,
    pub min_count: usize,
}

/// `c_upper` fixes the admissible range `(ln m)^{-1/2} <= s <= 1 − c_upper/ln m`.
pub fn order_stats_experiment(
    m: usize,
    s: f64,
    trials: usize,
    c_prime: f64,
    c_upper: f64,
    seed: Seed,
) -> Result<OrderStatsReport> {
    if trials == 0 {
        return Err(domain!("need at least one trial"));
    }
    if m < 3 {
        return Err(domain!("need m >= 3, got {m}"));
    }
    let lm = (m as f64).ln();
    let lo_s = lm.powf(-0.5);
    let hi_s = 1.0 - c_upper / lm;
    if !(s >= lo_s - 1e-12 && s <= hi_s + 1e-12) {
        return Err(domain!("s = {s} outside [{lo_s}, {hi_s}]"));
    }
    let lo = s * lm.sqrt();
    let hi = 3.0 * lm.sqrt();
    let threshold = c_prime * (m as f64).powf(1.0 - s * s);
    let counts = per_item(seed.derive_str("order-stats"), trials, |_, rng| {
        (0..m)
            .filter(|_| {
                let x = f64::standard_normal(rng);
                lo <= x && x <= hi
            })
            .count()
    });
    let hits = counts.iter().filter(|c| **c as f64 >= threshold).count();
    Ok(OrderStatsReport {
        m,
        s,
        trials,
        c_prime,
        threshold_count: threshold,
        frequency: hits as f64 / trials as f64,
        mean_count: counts.iter().sum::<usize>() as f64 / trials as f64,
        min_count: counts.iter().copied().min().unwrap_or(0),
    })
}
