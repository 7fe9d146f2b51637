//! Symmetric convex bodies as gauge, support-function and projection oracles.

mod body;
mod homotopy;
mod pnorm;
mod polyops;
mod spec;

use nalgebra::DVector;

pub use body::{Body, BodyKind, Exponent, LinearMap, Polytope, Weights};
pub use spec::{BodySpec, PSpec};

use crate::error::{domain, Error, Result};
use crate::optimize::golden_section;
use crate::scalar::Scalar;

/// Gauge value with an optional dual certificate `y` satisfying
/// `<x, y> = value · dual_gauge(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeValue<T: Scalar> {
    pub value: T,
    pub certificate: Option<DVector<T>>,
}

/// Minkowski functional `‖x‖_K = inf{λ >= 0 : x ∈ λK}`.
pub fn gauge<T: Scalar>(body: &Body<T>, x: &DVector<T>) -> Result<GaugeValue<T>> {
    body.check_point(x)?;
    gauge_impl(body, x, true)
}

/// Gauge without certificate; the fast path for Monte Carlo loops.
pub fn gauge_value<T: Scalar>(body: &Body<T>, x: &DVector<T>) -> Result<T> {
    body.check_point(x)?;
    Ok(gauge_impl(body, x, false)?.value)
}

/// Support function `h_K(y) = max{<x, y> : x ∈ K}`.
pub fn dual_gauge<T: Scalar>(body: &Body<T>, y: &DVector<T>) -> Result<T> {
    body.check_point(y)?;
    dual_impl(body, y)
}

/// Nearest point of `s·K` to `x` in the Euclidean norm.
pub fn euclid_project<T: Scalar>(body: &Body<T>, x: &DVector<T>, s: T) -> Result<DVector<T>> {
    body.check_point(x)?;
    if !(s > T::zero()) || !s.is_finite() {
        return Err(domain!("projection scale must be positive, got {s}"));
    }
    project_impl(&body.canonical(), x, s)
}

/// Gauge of `K_t = conv(K ∪ t·B_2)` at `x`, for `t >= 1`.
pub fn hull_gauge<T: Scalar>(inner: &Body<T>, t: T, x: &DVector<T>) -> Result<GaugeValue<T>> {
    inner.check_point(x)?;
    if !(t >= T::one()) || !t.is_finite() {
        return Err(domain!("hull radius must satisfy t >= 1, got {t}"));
    }
    hull_impl(&inner.canonical(), t, x, true)
}

impl<T: Scalar> Body<T> {
    pub fn gauge(&self, x: &DVector<T>) -> Result<GaugeValue<T>> {
        gauge(self, x)
    }

    pub fn gauge_value(&self, x: &DVector<T>) -> Result<T> {
        gauge_value(self, x)
    }

    pub fn dual_gauge(&self, y: &DVector<T>) -> Result<T> {
        dual_gauge(self, y)
    }

    pub fn project(&self, x: &DVector<T>, s: T) -> Result<DVector<T>> {
        euclid_project(self, x, s)
    }
}

fn gauge_impl<T: Scalar>(body: &Body<T>, x: &DVector<T>, cert: bool) -> Result<GaugeValue<T>> {
    match &body.kind {
        BodyKind::PNorm { p, weights } => Ok(if cert {
            pnorm::gauge(*p, weights, x)
        } else {
            GaugeValue { value: pnorm::gauge_value(*p, weights, x), certificate: None }
        }),
        BodyKind::Facets(poly) => Ok(if cert {
            polyops::facet_gauge(poly, x)
        } else {
            GaugeValue { value: polyops::max_abs_inner(poly, x).0, certificate: None }
        }),
        BodyKind::Vertices(poly) => polyops::basis_pursuit(poly, x),
        BodyKind::LinearImage { map, inner } => {
            let g = gauge_impl(inner, &(&map.inverse * x), cert)?;
            Ok(GaugeValue { value: g.value, certificate: g.certificate.map(|y| map.inverse.tr_mul(&y)) })
        }
        BodyKind::Hull { inner, t } => hull_impl(inner, *t, x, cert),
        BodyKind::IntersectBall { inner, rho } => {
            let g = gauge_impl(inner, x, cert)?;
            let xn = x.norm();
            let b = xn / *rho;
            if g.value >= b {
                Ok(g)
            } else {
                Ok(GaugeValue { value: b, certificate: cert.then(|| x / xn) })
            }
        }
    }
}

fn dual_impl<T: Scalar>(body: &Body<T>, y: &DVector<T>) -> Result<T> {
    match &body.kind {
        BodyKind::PNorm { p, weights } => Ok(pnorm::dual_value(*p, weights, y)),
        BodyKind::Facets(poly) => Ok(polyops::basis_pursuit(poly, y)?.value),
        BodyKind::Vertices(poly) => Ok(polyops::max_abs_inner(poly, y).0),
        BodyKind::LinearImage { map, inner } => dual_impl(inner, &map.matrix.tr_mul(y)),
        BodyKind::Hull { inner, t } => Ok(dual_impl(inner, y)?.max(*t * y.norm())),
        BodyKind::IntersectBall { inner, rho } => {
            // (K ∩ ρB)° = conv(K° ∪ ρ⁻¹B)
            Ok(hull_impl(&inner.polar().canonical(), T::one() / *rho, y, false)?.value)
        }
    }
}

fn project_impl<T: Scalar>(body: &Body<T>, x: &DVector<T>, s: T) -> Result<DVector<T>> {
    match &body.kind {
        BodyKind::PNorm { p, weights } => Ok(pnorm::project(*p, weights, x, s)),
        BodyKind::Facets(poly) => polyops::facet_project(poly, x, s),
        BodyKind::Vertices(poly) => polyops::vertex_project(poly, x, s),
        BodyKind::LinearImage { map, inner } if map.conformal.is_some() => {
            Ok(&map.matrix * project_impl(inner, &(&map.inverse * x), s)?)
        }
        _ => Err(Error::Unsupported(format!("euclidean projection onto {}", body.describe()))),
    }
}

/// Certificate `r/(t|r|)` from the residual at the optimal split, checked
/// against the pairing identity.
fn residual_certificate<T: Scalar>(
    inner: &Body<T>,
    t: T,
    x: &DVector<T>,
    value: T,
    s: T,
    r: DVector<T>,
) -> Result<Option<DVector<T>>> {
    let rn = r.norm();
    let y = if rn <= T::lit(1e-14) * x.norm() {
        gauge_impl(inner, x, true)?.certificate
    } else {
        Some(r / (t * rn))
    };
    let Some(y) = y else { return Ok(None) };
    let h = if s > T::lit(1e-9) * value && rn > T::zero() {
        // Normal cone at the projection: <r, u> = s·h_K(r).
        let u = x - y.clone() * (t * rn);
        u.dot(&y) / s
    } else {
        dual_impl(inner, &y)?
    };
    let dual = h.max(t * y.norm());
    Ok(((x.dot(&y) - value * dual).abs() <= T::lit(1e-8) * value).then_some(y))
}

/// Gauges of `conv(K ∪ t·B_2)` at `x` for every radius in `ts`, equal to
/// `Body::hull(inner, t).gauge_value(x)` for a canonical `inner`. Facet
/// polytopes share one path walk across the radii.
pub fn hull_gauges<T: Scalar>(inner: &Body<T>, ts: &[T], x: &DVector<T>) -> Result<Vec<T>> {
    inner.check_point(x)?;
    if let Some(t) = ts.iter().find(|t| !(**t >= T::one()) || !t.is_finite()) {
        return Err(domain!("hull radius must satisfy t >= 1, got {t}"));
    }
    let xn = x.norm();
    match &inner.kind {
        _ if xn == T::zero() => Ok(vec![T::zero(); ts.len()]),
        BodyKind::Facets(poly) => {
            let bound = polyops::ball_certified(poly, x);
            let skip: Vec<bool> = ts.iter().map(|&t| bound <= t * xn).collect();
            let mut out = polyops::facet_hull_values(poly, ts, &skip, x)?;
            for ((v, &t), s) in out.iter_mut().zip(ts).zip(&skip) {
                *v = if *s { xn / t } else { v.min(xn / t) };
            }
            Ok(out)
        }
        BodyKind::Hull { inner: k, t: t2 } => {
            let ts: Vec<T> = ts.iter().map(|t| t.max(*t2)).collect();
            hull_gauges(k, &ts, x)
        }
        _ => ts.iter().map(|&t| Ok(hull_impl(inner, t, x, false)?.value)).collect(),
    }
}

/// Hull gauge for a canonical inner body and any `t > 0`.
fn hull_impl<T: Scalar>(inner: &Body<T>, t: T, x: &DVector<T>, cert: bool) -> Result<GaugeValue<T>> {
    let xn = x.norm();
    if xn == T::zero() {
        return Ok(GaugeValue { value: T::zero(), certificate: None });
    }
    let (value, s, r) = match &inner.kind {
        BodyKind::PNorm { p, weights } => return Ok(pnorm::hull(*p, weights, t, x, cert)),
        BodyKind::Facets(poly) => {
            if polyops::ball_certified(poly, x) <= t * xn {
                return Ok(GaugeValue { value: xn / t, certificate: cert.then(|| x / (t * xn)) });
            }
            polyops::facet_hull(poly, t, x)?
        }
        BodyKind::Vertices(poly) => polyops::vertex_hull(poly, t, x)?,
        BodyKind::LinearImage { map, inner: k } if map.conformal.is_some() => {
            let c = map.conformal.unwrap();
            let g = hull_impl(k, t / c, &(&map.inverse * x), cert)?;
            return Ok(GaugeValue { value: g.value, certificate: g.certificate.map(|y| map.inverse.tr_mul(&y)) });
        }
        BodyKind::Hull { inner: k, t: t2 } => return hull_impl(k, t.max(*t2), x, cert),
        _ => {
            let upper = gauge_impl(inner, x, false)?.value;
            let mut err = None;
            let (s, g) = golden_section(
                |s: T| {
                    if s <= T::zero() {
                        return xn / t;
                    }
                    match project_impl(inner, x, s) {
                        Ok(u) => s + (x - u).norm() / t,
                        Err(e) => {
                            err = Some(e);
                            T::infinity()
                        }
                    }
                },
                T::zero(),
                upper,
                T::lit(1e-9),
            );
            if let Some(e) = err {
                return Err(e);
            }
            let value = g.min(upper);
            let r = if s > T::zero() { x - project_impl(inner, x, s)? } else { x.clone() };
            (value, s, r)
        }
    };
    let value = value.min(xn / t);
    let certificate = if cert { residual_certificate(inner, t, x, value, s, r)? } else { None };
    Ok(GaugeValue { value, certificate })
}
