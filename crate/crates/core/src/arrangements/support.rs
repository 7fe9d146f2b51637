//! Support-only measures of coefficient vectors.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// Number of exactly nonzero entries.
pub fn sparsity<T: Scalar>(a: &[T]) -> usize {
    a.iter().filter(|v| **v != T::zero()).count()
}

/// Support indicator of `a`.
pub fn support_indicator<T: Scalar>(a: &[T]) -> Vec<bool> {
    a.iter().map(|v| *v != T::zero()).collect()
}

/// Length of the shortest cyclic window of indices containing the support:
/// `n` minus the longest cyclic run of zeros.
pub fn cyclic_length<T: Scalar>(a: &[T]) -> usize {
    cyclic_length_of(&support_indicator(a))
}

pub fn cyclic_length_of(support: &[bool]) -> usize {
    let n = support.len();
    let Some(first) = support.iter().position(|b| *b) else {
        return 0;
    };
    // Walk once around the circle starting at a support index.
    let mut longest = 0;
    let mut run = 0;
    for step in 1..=n {
        if support[(first + step) % n] {
            longest = longest.max(run);
            run = 0;
        } else {
            run += 1;
        }
    }
    n - longest
}

/// Elias-gamma code of `k ≥ 1`: `⌊log₂ k⌋` zeros, then `k` in binary.
pub fn elias_gamma(k: usize) -> Vec<bool> {
    assert!(k >= 1, "Elias-gamma codes start at 1");
    let bits = usize::BITS - k.leading_zeros();
    let mut out = vec![false; bits as usize - 1];
    out.extend((0..bits).rev().map(|i| (k >> i) & 1 == 1));
    out
}

/// Run-length code of a bit string: its first symbol, then the Elias-gamma
/// code of every maximal run in order.
pub fn kol_encode_bits(support: &[bool]) -> Vec<bool> {
    let Some(&first) = support.first() else {
        return Vec::new();
    };
    let mut out = vec![first];
    let mut run = 0;
    let mut cur = first;
    for &b in support {
        if b == cur {
            run += 1;
        } else {
            out.extend(elias_gamma(run));
            cur = b;
            run = 1;
        }
    }
    out.extend(elias_gamma(run));
    out
}

/// Run-length code of the support indicator of `a`.
pub fn kol_encode<T: Scalar>(a: &[T]) -> Vec<bool> {
    kol_encode_bits(&support_indicator(a))
}

/// Description length in bits of the support of `a` under [`kol_encode`].
pub fn kol_proxy<T: Scalar>(a: &[T]) -> usize {
    kol_encode(a).len()
}

/// Renders a bit string as `'0'`/`'1'` characters.
pub fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityProfile {
    pub n: usize,
    pub nnz: usize,
    pub cyc: usize,
    pub kol_bits: usize,
    /// Sparsity, cyclic and description-length terms of the budget.
    pub d_terms: [f64; 3],
    pub d_raw: f64,
    pub c_prime: f64,
    /// `c_prime · d_raw`.
    pub d: f64,
}

/// Distortion budget of the support of `a`: the smallest of
/// `√nnz`, `√((cyc + ln n)/ln(1 + n/cyc))` and
/// `√((nnz + bits + ln n)/ln(1 + n/(nnz + bits)))`.
pub fn distortion_budget<T: Scalar>(a: &[T], c_prime: f64) -> Result<SparsityProfile> {
    profile_of(&support_indicator(a), c_prime)
}

pub fn profile_of(support: &[bool], c_prime: f64) -> Result<SparsityProfile> {
    let n = support.len();
    if n < 2 {
        return Err(domain!("distortion budget needs n >= 2, got {n}"));
    }
    if !(c_prime > 0.0) {
        return Err(domain!("c' must be positive, got {c_prime}"));
    }
    let nnz = support.iter().filter(|b| **b).count();
    let cyc = cyclic_length_of(support);
    let kol_bits = kol_encode_bits(support).len();
    let nf = n as f64;
    let ln_n = nf.ln();
    let term = |size: usize| {
        let s = size as f64;
        ((s + ln_n) / (1.0 + nf / s.max(1.0)).ln()).sqrt()
    };
    let d_terms = [(nnz as f64).sqrt(), term(cyc), term(nnz + kol_bits)];
    let d_raw = d_terms.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SparsityProfile { n, nnz, cyc, kol_bits, d_terms, d_raw, c_prime, d: c_prime * d_raw })
}

/// Indicator of a sorted index set in `{0, …, n−1}`.
pub fn indicator(n: usize, support: &[usize]) -> Result<Vec<bool>> {
    let mut out = vec![false; n];
    for w in support.windows(2) {
        if w[0] >= w[1] {
            return Err(domain!("support indices must be strictly increasing"));
        }
    }
    for &i in support {
        if i >= n {
            return Err(domain!("support index {i} out of range for n = {n}"));
        }
        out[i] = true;
    }
    Ok(out)
}
