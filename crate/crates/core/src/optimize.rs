//! One-dimensional minimizers and root finders.

use crate::scalar::Scalar;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search on `[a, b]`; returns `(argmin, min)`.
pub fn golden_section<T: Scalar>(mut f: impl FnMut(T) -> T, a: T, b: T, tol: T) -> (T, T) {
    let r = T::lit(INV_PHI);
    let (mut a, mut b) = (a, b);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (b - a).abs() > tol && iters < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Sign change of a nondecreasing function with `f(lo) < 0 < f(hi)`,
/// bisected to full precision.
pub fn bisect_increasing<T: Scalar>(mut f: impl FnMut(T) -> T, mut lo: T, mut hi: T) -> T {
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if f(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    T::lit(0.5) * (lo + hi)
}

/// Root of a nondecreasing function bracketed by `f(lo) < 0 < f(hi)`,
/// by the Illinois variant of regula falsi.
pub fn illinois<T: Scalar>(mut f: impl FnMut(T) -> T, mut lo: T, mut hi: T, xtol: T) -> T {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    let mut side = 0i8;
    for _ in 0..200 {
        if hi - lo <= xtol {
            break;
        }
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = T::lit(0.5) * (lo + hi);
        }
        let fx = f(x);
        if fx == T::zero() {
            return x;
        }
        if fx < T::zero() {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= T::lit(0.5);
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= T::lit(0.5);
            }
            side = 1;
        }
    }
    T::lit(0.5) * (lo + hi)
}
