//! Gauge, support and projection oracles for polytopes in facet or vertex form.

use nalgebra::DVector;

use super::body::Polytope;
use super::homotopy::{Homotopy, Segment};
use super::GaugeValue;
use crate::error::Result;
use crate::optimize::bisect_increasing;
use crate::scalar::Scalar;

/// `max_j |<d_j, x>|` with the maximizing signed direction.
pub(crate) fn max_abs_inner<T: Scalar>(poly: &Polytope<T>, x: &DVector<T>) -> (T, usize, T) {
    let c = poly.dirs.tr_mul(x);
    let mut best = (T::zero(), 0, T::one());
    for (j, v) in c.iter().enumerate() {
        if v.abs() > best.0 {
            best = (v.abs(), j, v.signum());
        }
    }
    best
}

pub(crate) fn facet_gauge<T: Scalar>(poly: &Polytope<T>, x: &DVector<T>) -> GaugeValue<T> {
    let (value, j, sign) = max_abs_inner(poly, x);
    let certificate = (value > T::zero()).then(|| poly.dirs.column(j) * sign);
    GaugeValue { value, certificate }
}

/// `min{‖μ‖₁ : Dμ = target}` with a dual certificate `y`, `‖Dᵀy‖_∞ = 1`.
pub(crate) fn basis_pursuit<T: Scalar>(poly: &Polytope<T>, target: &DVector<T>) -> Result<GaugeValue<T>> {
    let corr0 = poly.dirs.tr_mul(target);
    let segs = Homotopy::new(&poly.gram, corr0).collect()?;
    let Some(last) = segs.last() else {
        return Ok(GaugeValue { value: T::zero(), certificate: None });
    };
    let value = last.l1_at(T::zero());
    let m = poly.count();
    let coef = last.coefficients(last.gamma_hi, m);
    let r = target - &poly.dirs * coef;
    let y = r / last.gamma_hi;
    let scale = poly.dirs.tr_mul(&y).amax();
    let certificate = (scale > T::zero()).then(|| y / scale);
    Ok(GaugeValue { value, certificate })
}

/// Nearest point of `s·{|Dᵀu| ≤ 1}` to `x`.
pub(crate) fn facet_project<T: Scalar>(poly: &Polytope<T>, x: &DVector<T>, s: T) -> Result<DVector<T>> {
    let mut hom = Homotopy::new(&poly.gram, poly.dirs.tr_mul(x));
    if s >= hom.gamma0() {
        return Ok(x.clone());
    }
    while let Some(seg) = hom.next_segment()? {
        if seg.gamma_lo <= s {
            let lam = seg.coefficients(s, poly.count());
            return Ok(x - &poly.dirs * lam);
        }
    }
    Ok(DVector::zeros(x.len()))
}

/// Nearest point of `s·conv{±v_j}` to `x`.
pub(crate) fn vertex_project<T: Scalar>(poly: &Polytope<T>, x: &DVector<T>, s: T) -> Result<DVector<T>> {
    let mut hom = Homotopy::new(&poly.gram, poly.dirs.tr_mul(x));
    while let Some(seg) = hom.next_segment()? {
        if seg.l1_at(seg.gamma_lo) >= s {
            let g = seg.gamma_for_l1(s);
            return Ok(&poly.dirs * seg.coefficients(g, poly.count()));
        }
    }
    Ok(x.clone())
}

/// `‖μ‖₁` for the least-norm `μ` with `Dμ = x`, an upper bound on `h_K(x)`.
/// When it is at most `t|x|` the hull gauge is `|x|/t`.
pub(crate) fn ball_certified<T: Scalar>(poly: &Polytope<T>, x: &DVector<T>) -> T {
    (&poly.pinv * x).lp_norm(1)
}

/// Finds `δ` in `[0, width]` where the increasing `h` changes sign, or
/// `None` if `h` is still negative at `width`.
fn segment_root<T: Scalar>(width: T, h: impl Fn(T) -> T) -> Option<T> {
    if h(T::zero()) >= T::zero() {
        Some(T::zero())
    } else if h(width) < T::zero() {
        None
    } else {
        Some(bisect_increasing(h, T::zero(), width))
    }
}

/// Along a segment, `|Dλ|` grows at rate `(quad_lin + δ·quad_dd)/|Dλ|`.
fn growth_rate<T: Scalar>(seg: &Segment<T>, d: T) -> T {
    let q = seg.quad + T::lit(2.0) * d * seg.quad_lin + d * d * seg.quad_dd;
    if q <= T::tiny() {
        seg.quad_dd.max(T::zero()).sqrt()
    } else {
        (seg.quad_lin + d * seg.quad_dd) / q.sqrt()
    }
}

/// Hull gauge over a facet polytope. Returns the value, `s*`, and the
/// residual `x − P_{s*K}(x)`.
pub(crate) fn facet_hull<T: Scalar>(poly: &Polytope<T>, t: T, x: &DVector<T>) -> Result<(T, T, DVector<T>)> {
    let mut hom = Homotopy::new(&poly.gram, poly.dirs.tr_mul(x));
    let upper = hom.gamma0();
    let xn = x.norm();
    // With s = γ, P_{sK}(x) = x − Dλ(γ) and |Dλ|² = λᵀGλ. h = −t·dg/dγ
    // increases with δ = γ_hi − γ.
    while let Some(seg) = hom.next_segment()? {
        if let Some(d) = segment_root(seg.gamma_hi - seg.gamma_lo, |d| growth_rate(&seg, d) - t) {
            let g = (seg.gamma_hi - d).max(seg.gamma_lo);
            let r = &poly.dirs * seg.coefficients(g, poly.count());
            let value = (g + r.norm() / t).min(upper);
            return Ok((value, g, r));
        }
    }
    Ok((xn / t, T::zero(), x.clone()))
}

/// [`facet_hull`] values for several radii from one walk along the path.
/// Entries of `ts` where `skip` is set are left at zero.
pub(crate) fn facet_hull_values<T: Scalar>(
    poly: &Polytope<T>,
    ts: &[T],
    skip: &[bool],
    x: &DVector<T>,
) -> Result<Vec<T>> {
    let mut order: Vec<usize> = (0..ts.len()).filter(|&i| !skip[i]).collect();
    order.sort_by(|&a, &b| ts[a].partial_cmp(&ts[b]).expect("finite radii"));
    let mut out = vec![T::zero(); ts.len()];
    let mut hom = Homotopy::new(&poly.gram, poly.dirs.tr_mul(x));
    let upper = hom.gamma0();
    let xn = x.norm();
    let mut next = 0;
    // Roots for larger radii lie further along the path.
    while next < order.len() {
        let Some(seg) = hom.next_segment()? else { break };
        while let Some(&i) = order.get(next) {
            let t = ts[i];
            let Some(d) = segment_root(seg.gamma_hi - seg.gamma_lo, |d| growth_rate(&seg, d) - t) else { break };
            let g = (seg.gamma_hi - d).max(seg.gamma_lo);
            let r = &poly.dirs * seg.coefficients(g, poly.count());
            out[i] = (g + r.norm() / t).min(upper);
            next += 1;
        }
    }
    for &i in &order[next..] {
        out[i] = xn / ts[i];
    }
    Ok(out)
}

/// Hull gauge over a vertex polytope; same outputs as [`facet_hull`].
pub(crate) fn vertex_hull<T: Scalar>(poly: &Polytope<T>, t: T, x: &DVector<T>) -> Result<(T, T, DVector<T>)> {
    let mut hom = Homotopy::new(&poly.gram, poly.dirs.tr_mul(x));
    let x2 = x.norm_squared();
    let xn = x2.sqrt();
    let mut last = None;
    // Along the path s = ‖λ‖₁ grows with δ; h = t·dg/ds is increasing.
    while let Some(seg) = hom.next_segment()? {
        if seg.l1_slope > T::zero() {
            let h = |d: T| {
                let g = seg.gamma_hi - d;
                let dist = seg.residual_sq(g, x2).sqrt();
                if dist <= T::tiny() {
                    return -T::infinity();
                }
                let slope = (seg.quad_lin + d * seg.quad_dd - seg.lin_slope) / dist;
                t + slope / seg.l1_slope
            };
            if let Some(d) = segment_root(seg.gamma_hi - seg.gamma_lo, h) {
                let g = (seg.gamma_hi - d).max(seg.gamma_lo);
                let s = seg.l1_at(g);
                let r = x - &poly.dirs * seg.coefficients(g, poly.count());
                let value = (s + r.norm() / t).min(xn / t);
                return Ok((value, s, r));
            }
        }
        last = Some(seg);
    }
    let Some(seg) = last else {
        return Ok((T::zero(), T::zero(), DVector::zeros(x.len())));
    };
    let s = seg.l1_at(T::zero());
    let r = x - &poly.dirs * seg.coefficients(T::zero(), poly.count());
    Ok(((s + r.norm() / t).min(xn / t), s, r))
}
