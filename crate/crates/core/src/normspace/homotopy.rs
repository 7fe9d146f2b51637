//! Lasso homotopy over a fixed dictionary.
//!
//! Traces `λ(γ) = argmin ½|x − Dλ|² + γ‖λ‖₁` from `γ₀ = ‖Dᵀx‖_∞` down to
//! `γ = 0` through its piecewise-linear segments. Only the Gram matrix and
//! the initial correlations `Dᵀx` enter the recursion.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One linear piece of the path, valid for `γ ∈ [gamma_lo, gamma_hi]`.
/// With `δ = gamma_hi − γ`, coefficients are `coef + δ·dir`.
#[derive(Debug, Clone)]
pub(crate) struct Segment<T> {
    pub gamma_hi: T,
    pub gamma_lo: T,
    pub coef: Vec<(usize, T)>,
    pub dir: Vec<(usize, T)>,
    /// `λᵀGλ = quad + 2δ·quad_lin + δ²·quad_dd`
    pub quad: T,
    pub quad_lin: T,
    pub quad_dd: T,
    /// `‖λ‖₁ = l1 + δ·l1_slope`
    pub l1: T,
    pub l1_slope: T,
    /// `<Dᵀx, λ> = lin + δ·lin_slope`
    pub lin: T,
    pub lin_slope: T,
}

impl<T: Scalar> Segment<T> {
    pub fn delta(&self, gamma: T) -> T {
        (self.gamma_hi - gamma).max(T::zero())
    }

    pub fn l1_at(&self, gamma: T) -> T {
        self.l1 + self.delta(gamma) * self.l1_slope
    }

    /// `|x − Dλ(γ)|²` given `|x|²`.
    pub fn residual_sq(&self, gamma: T, x_sq: T) -> T {
        let d = self.delta(gamma);
        let quad = self.quad + T::lit(2.0) * d * self.quad_lin + d * d * self.quad_dd;
        let lin = self.lin + d * self.lin_slope;
        (x_sq - T::lit(2.0) * lin + quad).max(T::zero())
    }

    pub fn coefficients(&self, gamma: T, m: usize) -> DVector<T> {
        let d = self.delta(gamma);
        let mut out = DVector::zeros(m);
        for &(j, c) in &self.coef {
            out[j] = c;
        }
        for &(j, v) in &self.dir {
            out[j] += d * v;
        }
        out
    }

    /// `γ` on this segment where `‖λ(γ)‖₁ = s`, assuming it is bracketed.
    pub fn gamma_for_l1(&self, s: T) -> T {
        if self.l1_slope <= T::zero() {
            return self.gamma_lo;
        }
        let d = (s - self.l1) / self.l1_slope;
        (self.gamma_hi - d).clamp(self.gamma_lo, self.gamma_hi)
    }
}

/// Growable Cholesky factor of the active Gram submatrix.
struct Chol<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> Chol<T> {
    fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let mut y = Vec::with_capacity(b.len());
        for (row, &bi) in self.rows.iter().zip(b) {
            let i = y.len();
            let s = row[..i].iter().zip(&y).fold(bi, |s, (r, v)| s - *r * *v);
            y.push(s / row[i]);
        }
        y
    }

    fn solve(&self, b: &[T]) -> Vec<T> {
        let mut y = self.solve_lower(b);
        let n = y.len();
        for i in (0..n).rev() {
            let row = &self.rows[i];
            let yi = y[i] / row[i];
            y[i] = yi;
            for (v, r) in y[..i].iter_mut().zip(&row[..i]) {
                *v -= *r * yi;
            }
        }
        y
    }

    /// Deletes row and column `idx` of the factored matrix, restoring the
    /// triangular shape with Givens rotations.
    fn remove(&mut self, idx: usize) {
        self.rows.remove(idx);
        let n = self.rows.len();
        for c in idx..n {
            let (a, b) = (self.rows[c][c], self.rows[c][c + 1]);
            let r = a.hypot(b);
            if r == T::zero() {
                self.rows[c].truncate(c + 1);
                continue;
            }
            let (cs, sn) = (a / r, b / r);
            for row in &mut self.rows[c..] {
                let (x, y) = (row[c], row[c + 1]);
                row[c] = cs * x + sn * y;
                row[c + 1] = cs * y - sn * x;
            }
            self.rows[c].truncate(c + 1);
        }
    }

    /// Appends a column; returns false if it is numerically dependent.
    fn push(&mut self, cross: &[T], diag: T) -> bool {
        let mut l = self.solve_lower(cross);
        let d = diag - l.iter().fold(T::zero(), |a, v| a + *v * *v);
        if !(d > T::lit(1e-10) * diag) {
            return false;
        }
        l.push(d.sqrt());
        self.rows.push(l);
        true
    }
}

pub(crate) struct Homotopy<'a, T: Scalar> {
    gram: &'a DMatrix<T>,
    c0: DVector<T>,
    corr: DVector<T>,
    coef: DVector<T>,
    active: Vec<usize>,
    signs: Vec<T>,
    chol: Chol<T>,
    excluded: Vec<bool>,
    in_active: Vec<bool>,
    last_dropped: Option<usize>,
    gamma: T,
    gamma0: T,
    quad: T,
    steps: usize,
    done: bool,
}

impl<'a, T: Scalar> Homotopy<'a, T> {
    /// `corr0 = Dᵀx`.
    pub fn new(gram: &'a DMatrix<T>, corr0: DVector<T>) -> Self {
        let m = corr0.len();
        let gamma0 = corr0.amax();
        Homotopy {
            gram,
            c0: corr0.clone(),
            corr: corr0,
            coef: DVector::zeros(m),
            active: Vec::new(),
            signs: Vec::new(),
            chol: Chol { rows: Vec::new() },
            excluded: vec![false; m],
            in_active: vec![false; m],
            last_dropped: None,
            gamma: gamma0,
            gamma0,
            quad: T::zero(),
            steps: 0,
            done: !(gamma0 > T::zero()),
        }
    }

    pub fn gamma0(&self) -> T {
        self.gamma0
    }

    fn tol(&self) -> T {
        T::lit(1e-12) * self.gamma0
    }

    fn try_add(&mut self, j: usize) {
        let cross: Vec<T> = self.active.iter().map(|&a| self.gram[(a, j)]).collect();
        if self.chol.push(&cross, self.gram[(j, j)]) {
            self.active.push(j);
            self.in_active[j] = true;
            self.signs.push(self.corr[j].signum());
        } else {
            self.excluded[j] = true;
        }
    }

    fn add_entering(&mut self) {
        let tol = self.tol() * T::lit(10.0);
        let cands: Vec<usize> = (0..self.coef.len())
            .filter(|&j| {
                !self.excluded[j]
                    && Some(j) != self.last_dropped
                    && !self.in_active[j]
                    && self.corr[j].abs() >= self.gamma - tol
            })
            .collect();
        for j in cands {
            self.try_add(j);
        }
    }

    /// Advances to the next breakpoint and returns the segment just traversed.
    pub fn next_segment(&mut self) -> Result<Option<Segment<T>>> {
        if self.done {
            return Ok(None);
        }
        let m = self.coef.len();
        self.steps += 1;
        if self.steps > 20 * m + 200 {
            return Err(Error::Numerical("lasso homotopy did not terminate".into()));
        }
        if self.active.is_empty() || self.steps == 1 {
            self.add_entering();
        }
        if self.active.is_empty() {
            return Err(Error::Numerical("lasso homotopy has no admissible column".into()));
        }
        let dir_a = self.chol.solve(&self.signs);
        // a = G[:, A] dir_A
        let mut a = DVector::<T>::zeros(m);
        for (k, &j) in self.active.iter().enumerate() {
            let col = self.gram.column(j);
            a.axpy(dir_a[k], &col, T::one());
        }
        let mut step = self.gamma;
        let mut event: Option<(bool, usize)> = None;
        let tol = self.tol();
        for j in 0..m {
            if self.excluded[j] || Some(j) == self.last_dropped || self.in_active[j] {
                continue;
            }
            let c = self.corr[j];
            for (num, den) in [(self.gamma - c, T::one() - a[j]), (self.gamma + c, T::one() + a[j])] {
                if den > T::lit(1e-12) {
                    let d = (num / den).max(T::zero());
                    if d < step - tol || (d < step && event.is_none()) {
                        step = d;
                        event = Some((true, j));
                    }
                }
            }
        }
        for (k, &j) in self.active.iter().enumerate() {
            let v = dir_a[k];
            if v != T::zero() && self.coef[j] * v < T::zero() {
                let d = -self.coef[j] / v;
                if d < step {
                    step = d.max(T::zero());
                    event = Some((false, j));
                }
            }
        }

        let coef: Vec<(usize, T)> = self.active.iter().map(|&j| (j, self.coef[j])).collect();
        let dir: Vec<(usize, T)> = self.active.iter().copied().zip(dir_a.iter().copied()).collect();
        let mut quad_lin = T::zero();
        let mut quad_dd = T::zero();
        let mut l1_slope = T::zero();
        let mut lin_slope = T::zero();
        let mut lin = T::zero();
        let mut l1 = T::zero();
        for (k, &j) in self.active.iter().enumerate() {
            // (Gλ)_j = c0_j − corr_j on the active set, and (G dir)_j = a_j = sign_j.
            quad_lin += dir_a[k] * (self.c0[j] - self.corr[j]);
            quad_dd += dir_a[k] * a[j];
            l1_slope += dir_a[k] * self.signs[k];
            lin_slope += dir_a[k] * self.c0[j];
            lin += self.coef[j] * self.c0[j];
            l1 += self.coef[j].abs();
        }
        let seg = Segment {
            gamma_hi: self.gamma,
            gamma_lo: (self.gamma - step).max(T::zero()),
            coef,
            dir,
            quad: self.quad,
            quad_lin,
            quad_dd,
            l1,
            l1_slope,
            lin,
            lin_slope,
        };

        for (k, &j) in self.active.iter().enumerate() {
            self.coef[j] += step * dir_a[k];
        }
        self.corr.axpy(-step, &a, T::one());
        self.quad += T::lit(2.0) * step * quad_lin + step * step * quad_dd;
        self.gamma = seg.gamma_lo;
        self.last_dropped = None;

        if self.gamma <= tol {
            self.gamma = T::zero();
            self.done = true;
            return Ok(Some(seg));
        }
        match event {
            Some((true, _)) => self.add_entering(),
            Some((false, j)) => {
                self.coef[j] = T::zero();
                let k = self.active.iter().position(|&a| a == j).expect("dropped column is active");
                self.active.remove(k);
                self.signs.remove(k);
                self.chol.remove(k);
                self.in_active[j] = false;
                self.last_dropped = Some(j);
                // Ties can make several columns enter at once.
                self.add_entering();
            }
            None => {}
        }
        Ok(Some(seg))
    }

    /// Runs the whole path.
    pub fn collect(mut self) -> Result<Vec<Segment<T>>> {
        let mut out = Vec::new();
        while let Some(s) = self.next_segment()? {
            out.push(s);
        }
        Ok(out)
    }
}
