//! Weighted p-norm oracles: `‖x‖ = (Σ |w_i x_i|^p)^{1/p}`.

use nalgebra::DVector;

use super::body::{Exponent, Weights};
use super::GaugeValue;
use crate::optimize::{bisect_increasing, illinois};
use crate::scalar::{total_cmp, Scalar};

/// Power with an integer fast path.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Pow<T> {
    Int(i32),
    Real(T),
}

impl<T: Scalar> Pow<T> {
    pub fn new(e: T) -> Self {
        if e.fract() == T::zero() && e.abs() <= T::lit(64.0) {
            Pow::Int(num_traits::ToPrimitive::to_i32(&e).expect("small integer exponent"))
        } else {
            Pow::Real(e)
        }
    }

    #[inline]
    pub fn apply(self, x: T) -> T {
        match self {
            Pow::Int(0) => T::one(),
            Pow::Int(1) => x,
            Pow::Int(2) => x * x,
            Pow::Int(k) => x.powi(k),
            Pow::Real(e) => x.powf(e),
        }
    }
}

/// `(Σ v_i^p)^{1/p}` for nonnegative `v_i`.
fn lp_of<T: Scalar>(p: Exponent<T>, n: usize, v: impl Fn(usize) -> T) -> T {
    match p {
        Exponent::Infinite => (0..n).fold(T::zero(), |m, i| m.max(v(i))),
        Exponent::Finite(p) if p == T::one() => (0..n).fold(T::zero(), |s, i| s + v(i)),
        Exponent::Finite(p) if p == T::lit(2.0) => (0..n).fold(T::zero(), |s, i| s + v(i) * v(i)).sqrt(),
        Exponent::Finite(p) => {
            let m = (0..n).fold(T::zero(), |m, i| m.max(v(i)));
            if m == T::zero() {
                return T::zero();
            }
            let pw = Pow::new(p);
            let s = (0..n).fold(T::zero(), |s, i| s + pw.apply(v(i) / m));
            m * s.powf(T::one() / p)
        }
    }
}

pub(crate) fn gauge_value<T: Scalar>(p: Exponent<T>, w: &Weights<T>, x: &DVector<T>) -> T {
    match w {
        Weights::Uniform(c) => *c * lp_of(p, x.len(), |i| x[i].abs()),
        Weights::PerCoord(wv) => lp_of(p, x.len(), |i| (wv[i] * x[i]).abs()),
    }
}

pub(crate) fn dual_value<T: Scalar>(p: Exponent<T>, w: &Weights<T>, y: &DVector<T>) -> T {
    let q = p.conjugate();
    match w {
        Weights::Uniform(c) => lp_of(q, y.len(), |i| y[i].abs()) / *c,
        Weights::PerCoord(wv) => lp_of(q, y.len(), |i| (y[i] / wv[i]).abs()),
    }
}

/// Gauge with a gradient certificate (dual norm one).
pub(crate) fn gauge<T: Scalar>(p: Exponent<T>, w: &Weights<T>, x: &DVector<T>) -> GaugeValue<T> {
    let value = gauge_value(p, w, x);
    if value == T::zero() {
        return GaugeValue { value, certificate: None };
    }
    let n = x.len();
    let y = match p {
        Exponent::Infinite => {
            let j = (0..n)
                .max_by(|&a, &b| total_cmp(&(w.get(a) * x[a]).abs(), &(w.get(b) * x[b]).abs()).then(b.cmp(&a)))
                .unwrap();
            let mut y = DVector::zeros(n);
            y[j] = w.get(j) * x[j].signum();
            y
        }
        Exponent::Finite(p) => {
            let pm1 = Pow::new(p - T::one());
            DVector::from_fn(n, |i, _| {
                let wi = w.get(i);
                let r = (wi * x[i]).abs() / value;
                if x[i] == T::zero() {
                    T::zero()
                } else {
                    wi * x[i].signum() * pm1.apply(r)
                }
            })
        }
    };
    GaugeValue { value, certificate: Some(y) }
}

/// Solves `u + κ u^{p−1} = a` for `u ∈ [0, a]`; `guess` seeds Newton.
#[inline]
pub(crate) fn coord_solve<T: Scalar>(a: T, kappa: T, p: T, pm1: Pow<T>, pm2: Pow<T>, guess: T) -> T {
    if a == T::zero() || kappa == T::zero() {
        return a;
    }
    let (mut lo, mut hi) = (T::zero(), a);
    let mut u = guess.clamp(T::zero(), a);
    if u == T::zero() {
        u = a * T::lit(0.5);
    }
    let eps = T::eps() * T::lit(4.0);
    for _ in 0..100 {
        let f = u + kappa * pm1.apply(u) - a;
        if f > T::zero() {
            hi = u;
        } else {
            lo = u;
        }
        let df = T::one() + kappa * (p - T::one()) * pm2.apply(u);
        let mut next = u - f / df;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = T::lit(0.5) * (lo + hi);
        }
        if (next - u).abs() <= eps * u.max(T::tiny()) || hi - lo <= eps * hi {
            return next;
        }
        u = next;
    }
    u
}

/// Coordinate magnitudes of the point of `s·K` nearest to `|x|` at multiplier `λ`.
struct MultiplierPath<'a, T: Scalar> {
    a: Vec<T>,
    w: &'a Weights<T>,
    p: T,
    pow_p: Pow<T>,
    pm1: Pow<T>,
    pm2: Pow<T>,
    wp: Vec<T>,
    u: Vec<T>,
}

impl<'a, T: Scalar> MultiplierPath<'a, T> {
    fn new(p: T, w: &'a Weights<T>, x: &DVector<T>) -> Self {
        let n = x.len();
        let pow_p = Pow::new(p);
        let a: Vec<T> = x.iter().map(|v| v.abs()).collect();
        MultiplierPath {
            wp: (0..n).map(|i| pow_p.apply(w.get(i))).collect(),
            u: a.clone(),
            a,
            w,
            p,
            pow_p,
            pm1: Pow::new(p - T::one()),
            pm2: Pow::new(p - T::lit(2.0)),
        }
    }

    /// Updates `u` for multiplier `λ` and returns `(s, |r|, <r, u>)` with
    /// `r = |x| − u`, computed as `κ u^{p−1}` to avoid cancellation.
    fn eval(&mut self, lambda: T) -> (T, T, T) {
        let mut sp = T::zero();
        let mut d2 = T::zero();
        let mut ru = T::zero();
        let mut m = T::zero();
        for i in 0..self.a.len() {
            let kappa = lambda * self.p * self.wp[i];
            let ui = coord_solve(self.a[i], kappa, self.p, self.pm1, self.pm2, self.u[i]);
            self.u[i] = ui;
            m = m.max(self.w.get(i) * ui);
            let r = (kappa * self.pm1.apply(ui)).min(self.a[i]);
            d2 += r * r;
            ru += r * ui;
        }
        if m > T::zero() {
            for i in 0..self.a.len() {
                sp += self.pow_p.apply(self.w.get(i) * self.u[i] / m);
            }
            (m * sp.powf(T::one() / self.p), d2.sqrt(), ru)
        } else {
            (T::zero(), d2.sqrt(), ru)
        }
    }

    /// Multiplier scale at which shrinkage becomes order one.
    fn scale(&self) -> T {
        let n = self.a.len();
        let rms = (self.a.iter().fold(T::zero(), |s, v| s + *v * *v) / T::from_usize_lossy(n)).sqrt();
        let wmean = (0..n).fold(T::zero(), |s, i| s + self.w.get(i)) / T::from_usize_lossy(n);
        T::one() / (self.p * self.pow_p.apply(wmean) * self.pm2.apply(rms))
    }

    fn signed_u(&self, x: &DVector<T>) -> DVector<T> {
        DVector::from_fn(x.len(), |i, _| self.u[i] * x[i].signum())
    }
}

/// Nearest point of `s·B_{p,w}` to `x`.
pub(crate) fn project<T: Scalar>(p: Exponent<T>, w: &Weights<T>, x: &DVector<T>, s: T) -> DVector<T> {
    if gauge_value(p, w, x) <= s {
        return x.clone();
    }
    match p {
        Exponent::Infinite => LinfProfile::new(w, x).project(x, s),
        Exponent::Finite(p) if p == T::one() => L1Profile::new(w, x).project(x, s),
        Exponent::Finite(p) if p == T::lit(2.0) && matches!(w, Weights::Uniform(_)) => {
            x * (s / gauge_value(Exponent::Finite(p), w, x))
        }
        Exponent::Finite(p) => {
            let mut path = MultiplierPath::new(p, w, x);
            let scale = path.scale().ln();
            let mut lo = scale;
            let mut hi = scale;
            while path.eval(lo.exp()).0 < s {
                lo -= T::lit(2.0);
            }
            while path.eval(hi.exp()).0 > s {
                hi += T::lit(2.0);
            }
            for _ in 0..200 {
                if hi - lo <= T::lit(1e-15) * (T::one() + hi.abs()) {
                    break;
                }
                let mid = T::lit(0.5) * (lo + hi);
                if path.eval(mid.exp()).0 > s {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // Land on the feasible side.
            path.eval(hi.exp());
            path.signed_u(x)
        }
    }
}

/// Distance profile `s ↦ dist(x, s·B_{∞,w})` after one sort.
pub(crate) struct LinfProfile<T> {
    keys: Vec<T>,
    s0: Vec<T>,
    s1: Vec<T>,
    s2: Vec<T>,
    w: Vec<T>,
}

impl<T: Scalar> LinfProfile<T> {
    pub fn new(w: &Weights<T>, x: &DVector<T>) -> Self {
        let n = x.len();
        let mut items: Vec<(T, T)> = (0..n).map(|i| ((w.get(i) * x[i]).abs(), T::one() / (w.get(i) * w.get(i)))).collect();
        items.sort_by(|a, b| total_cmp(&b.0, &a.0));
        let mut s0 = vec![T::zero(); n + 1];
        let mut s1 = vec![T::zero(); n + 1];
        let mut s2 = vec![T::zero(); n + 1];
        for (j, &(k, iw2)) in items.iter().enumerate() {
            s0[j + 1] = s0[j] + iw2;
            s1[j + 1] = s1[j] + k * iw2;
            s2[j + 1] = s2[j] + k * k * iw2;
        }
        LinfProfile {
            keys: items.iter().map(|v| v.0).collect(),
            s0,
            s1,
            s2,
            w: (0..n).map(|i| w.get(i)).collect(),
        }
    }

    pub fn upper(&self) -> T {
        self.keys.first().copied().unwrap_or(T::zero())
    }

    pub fn dist(&self, s: T) -> T {
        let j = self.keys.partition_point(|k| *k > s);
        (self.s2[j] - T::lit(2.0) * s * self.s1[j] + s * s * self.s0[j]).max(T::zero()).sqrt()
    }

    /// `d/ds dist(x, s·K)`.
    pub fn slope(&self, s: T) -> T {
        let j = self.keys.partition_point(|k| *k > s);
        let d = self.dist(s);
        if j == 0 || d == T::zero() {
            let j = self.keys.partition_point(|k| *k >= s);
            return -self.s0[j].sqrt();
        }
        (s * self.s0[j] - self.s1[j]) / d
    }

    pub fn project(&self, x: &DVector<T>, s: T) -> DVector<T> {
        DVector::from_fn(x.len(), |i, _| {
            let cap = s / self.w[i];
            x[i].clamp(-cap, cap)
        })
    }
}

/// Distance profile `s ↦ dist(x, s·B_{1,w})` after one sort.
pub(crate) struct L1Profile<T> {
    /// `s_j` at the breakpoints `τ = r_j`, nondecreasing.
    brk: Vec<T>,
    p: Vec<T>,
    q: Vec<T>,
    x2: Vec<T>,
    total_x2: T,
    w: Vec<T>,
}

impl<T: Scalar> L1Profile<T> {
    pub fn new(w: &Weights<T>, x: &DVector<T>) -> Self {
        let n = x.len();
        let mut items: Vec<(T, T, T)> = (0..n).map(|i| (x[i].abs() / w.get(i), w.get(i), x[i].abs())).collect();
        items.sort_by(|a, b| total_cmp(&b.0, &a.0));
        let mut p = vec![T::zero(); n + 1];
        let mut q = vec![T::zero(); n + 1];
        let mut x2 = vec![T::zero(); n + 1];
        let mut brk = vec![T::zero(); n + 1];
        for (j, &(_, wi, ai)) in items.iter().enumerate() {
            p[j + 1] = p[j] + wi * ai;
            q[j + 1] = q[j] + wi * wi;
            x2[j + 1] = x2[j] + ai * ai;
        }
        for j in 1..=n {
            let r = if j < n { items[j].0 } else { T::zero() };
            brk[j] = (p[j] - r * q[j]).max(brk[j - 1]);
        }
        L1Profile { brk, p, q, total_x2: x2[n], x2, w: (0..n).map(|i| w.get(i)).collect() }
    }

    pub fn upper(&self) -> T {
        *self.p.last().unwrap()
    }

    fn threshold(&self, s: T) -> (usize, T) {
        let n = self.brk.len() - 1;
        if n == 0 || s >= self.upper() {
            return (n, T::zero());
        }
        let j = self.brk.partition_point(|b| *b < s).clamp(1, n);
        (j, ((self.p[j] - s) / self.q[j]).max(T::zero()))
    }

    pub fn dist(&self, s: T) -> T {
        let (j, tau) = self.threshold(s);
        (tau * tau * self.q[j] + (self.total_x2 - self.x2[j])).max(T::zero()).sqrt()
    }

    /// `d/ds dist(x, s·K)`.
    pub fn slope(&self, s: T) -> T {
        let (j, tau) = self.threshold(s);
        let d = self.dist(s);
        if d == T::zero() {
            return -T::one() / self.q[j].sqrt();
        }
        -tau / d
    }

    pub fn project(&self, x: &DVector<T>, s: T) -> DVector<T> {
        let (_, tau) = self.threshold(s);
        DVector::from_fn(x.len(), |i, _| x[i].signum() * (x[i].abs() - tau * self.w[i]).max(T::zero()))
    }
}

/// Minimizer over `[0, upper]` of the convex `s + dist(s)/t` from the
/// slope of `dist`.
fn split_point<T: Scalar>(upper: T, t: T, slope: impl Fn(T) -> T) -> T {
    let dg = |s: T| T::one() + slope(s) / t;
    let top = upper * (T::one() - T::lit(1e-12));
    if dg(T::zero()) >= T::zero() {
        T::zero()
    } else if dg(top) <= T::zero() {
        upper
    } else {
        bisect_increasing(dg, T::zero(), top)
    }
}

/// Gauge of `conv(B_{p,w} ∪ t·B_2)` at `x`, with a certificate when asked.
pub(crate) fn hull<T: Scalar>(p: Exponent<T>, w: &Weights<T>, t: T, x: &DVector<T>, cert: bool) -> GaugeValue<T> {
    let xn = x.norm();
    if xn == T::zero() {
        return GaugeValue { value: T::zero(), certificate: None };
    }
    match (p, w) {
        (Exponent::Finite(p2), Weights::Uniform(c)) if p2 == T::lit(2.0) => {
            let r = (T::one() / *c).max(t);
            let y = cert.then(|| x / (xn * r));
            return GaugeValue { value: xn / r, certificate: y };
        }
        (Exponent::Infinite, _) => {
            let prof = LinfProfile::new(w, x);
            let s = split_point(prof.upper(), t, |s| prof.slope(s));
            let g = s + prof.dist(s) / t;
            return finish(p, w, t, x, s, g, cert, |s| prof.project(x, s));
        }
        (Exponent::Finite(p1), _) if p1 == T::one() => {
            let prof = L1Profile::new(w, x);
            let s = split_point(prof.upper(), t, |s| prof.slope(s));
            let g = s + prof.dist(s) / t;
            return finish(p, w, t, x, s, g, cert, |s| prof.project(x, s));
        }
        _ => {}
    }
    let Exponent::Finite(pv) = p else { unreachable!() };
    let upper = gauge_value(p, w, x);
    // Whole mass on the ball: y = x/(t|x|) is dual feasible.
    if dual_value(p, w, x) <= t * xn {
        return GaugeValue { value: xn / t, certificate: cert.then(|| x / (t * xn)) };
    }
    // Whole mass on the inner body: the gradient y has t|y| <= 1.
    if let Some(y) = gauge(p, w, x).certificate.filter(|y| t * y.norm() <= T::one()) {
        return GaugeValue { value: upper, certificate: cert.then_some(y) };
    }
    let mut path = MultiplierPath::new(pv, w, x);
    // ψ(z) = h_K(r)/|r| − t at λ = e^z is increasing and vanishes at the optimal split.
    let mut psi = |z: T| {
        let (s, d, ru) = path.eval(z.exp());
        if d == T::zero() || s == T::zero() {
            return if s == T::zero() { T::infinity() } else { -T::infinity() };
        }
        ru / (s * d) - t
    };
    let base = MultiplierPath::new(pv, w, x).scale().ln();
    let (mut lo, mut hi) = (base, base);
    let mut step = T::one();
    if psi(base) < T::zero() {
        loop {
            hi += step;
            if psi(hi) > T::zero() || step > T::lit(1e3) {
                break;
            }
            lo = hi;
            step += step;
        }
    } else {
        loop {
            lo -= step;
            if psi(lo) < T::zero() || step > T::lit(1e3) {
                break;
            }
            hi = lo;
            step += step;
        }
    }
    let (psi_lo, psi_hi) = (psi(lo), psi(hi));
    if psi_lo >= T::zero() {
        return finish(p, w, t, x, upper, upper, cert, |_| x.clone());
    }
    if psi_hi <= T::zero() {
        return finish(p, w, t, x, T::zero(), xn / t, cert, |_| DVector::zeros(x.len()));
    }
    let z = illinois(psi, lo, hi, T::lit(1e-13));
    let (s, d, _) = path.eval(z.exp());
    let u = path.signed_u(x);
    finish(p, w, t, x, s, s + d / t, cert, move |_| u.clone())
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Scalar>(
    p: Exponent<T>,
    w: &Weights<T>,
    t: T,
    x: &DVector<T>,
    s: T,
    g: T,
    cert: bool,
    project_at: impl FnOnce(T) -> DVector<T>,
) -> GaugeValue<T> {
    let upper = gauge_value(p, w, x);
    let xn = x.norm();
    let mut value = g.min(xn / t);
    let at_inner = upper <= value;
    value = value.min(upper);
    if !cert {
        return GaugeValue { value, certificate: None };
    }
    let y = if at_inner {
        gauge(p, w, x).certificate
    } else {
        let u = project_at(s);
        let r = x - u;
        let rn = r.norm();
        (rn > T::zero()).then(|| r / (t * rn))
    };
    let certificate = y.filter(|y| {
        let dual = dual_value(p, w, y).max(t * y.norm());
        (x.dot(y) - value * dual).abs() <= T::lit(1e-8) * value
    });
    GaugeValue { value, certificate }
}
