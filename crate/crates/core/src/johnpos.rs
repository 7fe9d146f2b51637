//! John ellipsoids and John position.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::normspace::{Body, BodyKind, Exponent, LinearMap, Weights};
use crate::rng::{samples, Seed};
use crate::scalar::Scalar;

/// `{x : xᵀ A x <= 1}` for symmetric positive-definite `A`.
#[derive(Debug, Clone)]
pub struct Ellipsoid<T: Scalar> {
    pub shape: DMatrix<T>,
    pub logdet: T,
}

impl<T: Scalar> Ellipsoid<T> {
    pub fn new(shape: DMatrix<T>) -> Result<Self> {
        if !shape.is_square() {
            return Err(Error::Degenerate("ellipsoid shape must be square".into()));
        }
        let asym = (&shape - shape.transpose()).amax();
        if asym > T::lit(1e-12) * shape.amax() {
            return Err(Error::Degenerate("ellipsoid shape must be symmetric".into()));
        }
        let chol = shape
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Degenerate("ellipsoid shape must be positive definite".into()))?;
        let logdet = chol.l().diagonal().iter().fold(T::zero(), |s, d| s + d.ln()) * T::lit(2.0);
        Ok(Ellipsoid { shape, logdet })
    }

    pub fn dim(&self) -> usize {
        self.shape.nrows()
    }

    /// `sqrt(xᵀ A x)`.
    pub fn gauge(&self, x: &DVector<T>) -> T {
        x.dot(&(&self.shape * x)).max(T::zero()).sqrt()
    }
}

/// Result of [`mvee`].
#[derive(Debug, Clone)]
pub struct Mvee<T: Scalar> {
    pub ellipsoid: Ellipsoid<T>,
    /// Barycentric weights per input point; points with positive weight
    /// lie on the boundary at optimality.
    pub weights: DVector<T>,
    /// `max_i p_iᵀ X⁻¹ p_i / n` at termination, at most `1 + tol`.
    pub gap: T,
    pub iterations: usize,
}

fn inverse_spd<T: Scalar>(x: &DMatrix<T>) -> Result<DMatrix<T>> {
    let chol = x
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("points do not span the space".into()))?;
    Ok(chol.inverse())
}

fn moment<T: Scalar>(points: &DMatrix<T>, u: &DVector<T>) -> DMatrix<T> {
    let scaled = DMatrix::from_fn(points.nrows(), points.ncols(), |i, j| points[(i, j)] * u[j]);
    &scaled * points.transpose()
}

/// Minimum-volume origin-centred ellipsoid enclosing the columns of
/// `points` (and their negatives). Khachiyan iteration with away steps.
pub fn mvee<T: Scalar>(points: &DMatrix<T>, tol: T) -> Result<Mvee<T>> {
    let (n, m) = points.shape();
    if n == 0 || m == 0 {
        return Err(Error::Degenerate("empty point set".into()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite point".into()));
    }
    let mut u = DVector::from_element(m, T::one() / T::from_usize_lossy(m));
    let x0 = moment(points, &u);
    let eig = x0.clone().symmetric_eigen();
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if !(lo > T::lit(1e-12) * hi) {
        return Err(Error::Degenerate("points do not span the space".into()));
    }
    let nn = T::from_usize_lossy(n);
    let mut xinv = inverse_spd(&x0)?;
    let mut kappa = DVector::from_fn(m, |j, _| points.column(j).dot(&(&xinv * points.column(j))));
    let max_iter = 200_000 + 200 * m;
    let mut it = 0;
    loop {
        let (jmax, kmax) = kappa.argmax();
        if kmax <= (T::one() + tol) * nn || it >= max_iter {
            if kmax > (T::one() + tol) * nn {
                return Err(Error::Numerical(format!("mvee did not converge in {it} iterations")));
            }
            break;
        }
        // Away candidate: smallest κ among supported points.
        let mut jmin = jmax;
        let mut kmin = T::infinity();
        for j in 0..m {
            if u[j] > T::zero() && kappa[j] < kmin {
                kmin = kappa[j];
                jmin = j;
            }
        }
        let (j, beta) = if nn - kmin > kmax - nn {
            // log det increases all the way to dropping the point when κ ≤ 1.
            let floor = -u[jmin] / (T::one() - u[jmin]);
            let step = if kmin > T::one() { (kmin / nn - T::one()) / (kmin - T::one()) } else { floor };
            (jmin, step.max(floor))
        } else {
            (jmax, (kmax / nn - T::one()) / (kmax - T::one()))
        };
        if beta == T::zero() {
            break;
        }
        let kj = kappa[j];
        let pj = points.column(j);
        let w = &xinv * pj;
        let r = beta / (T::one() - beta);
        let c = r / (T::one() + r * kj);
        let scale = T::one() / (T::one() - beta);
        xinv.ger(-c, &w, &w, T::one());
        xinv *= scale;
        let q = points.tr_mul(&w);
        for i in 0..m {
            kappa[i] = scale * (kappa[i] - c * q[i] * q[i]);
        }
        u *= T::one() - beta;
        u[j] += beta;
        if u[j] < T::zero() || (beta < T::zero() && u[j] <= T::eps()) {
            u[j] = T::zero();
        }
        it += 1;
        if it % 200 == 0 {
            u /= u.sum();
            xinv = inverse_spd(&moment(points, &u))?;
            kappa = DVector::from_fn(m, |j, _| points.column(j).dot(&(&xinv * points.column(j))));
        }
    }
    u /= u.sum();
    let xinv = inverse_spd(&moment(points, &u))?;
    let kappa = DVector::from_fn(m, |j, _| points.column(j).dot(&(&xinv * points.column(j))));
    let kmax = kappa.max();
    let mut shape = xinv / kmax;
    shape = (&shape + shape.transpose()) * T::lit(0.5);
    Ok(Mvee { ellipsoid: Ellipsoid::new(shape)?, weights: u, gap: kmax / nn, iterations: it })
}

/// Contact points with John's decomposition of the identity.
#[derive(Debug, Clone)]
pub struct JohnCertificate<T: Scalar> {
    pub contacts: Vec<DVector<T>>,
    pub weights: Vec<T>,
}

impl<T: Scalar> JohnCertificate<T> {
    /// `‖Σ c_i v_i v_iᵀ − I‖_F`.
    pub fn decomposition_error(&self) -> T {
        let Some(n) = self.contacts.first().map(|v| v.len()) else {
            return T::infinity();
        };
        let mut s = DMatrix::<T>::identity(n, n) * -T::one();
        for (v, c) in self.contacts.iter().zip(&self.weights) {
            s.ger(*c, v, v, T::one());
        }
        s.norm()
    }
}

/// A body moved into John position: `body = map(original)`.
#[derive(Debug, Clone)]
pub struct JohnPosition<T: Scalar> {
    pub body: Body<T>,
    pub map: LinearMap<T>,
    pub certificate: JohnCertificate<T>,
}

/// Radius of the largest centred Euclidean ball inside the unit ball of `ℓ_p^n`.
pub fn analytic_john_radius<T: Scalar>(p: Exponent<T>, n: usize) -> T {
    let e = (p.reciprocal() - T::lit(0.5)).max(T::zero());
    T::from_usize_lossy(n).powf(-e)
}

/// Rows `0..n'` of a Sylvester Hadamard matrix of order `n' = 2^⌈log2 n⌉`,
/// truncated to their first `n` entries.
fn hadamard_rows<T: Scalar>(n: usize) -> Vec<DVector<T>> {
    let order = n.next_power_of_two();
    (0..order)
        .map(|k| DVector::from_fn(n, |i, _| if (k & i).count_ones() % 2 == 0 { T::one() } else { -T::one() }))
        .collect()
}

/// Maps a p-norm ball or a facet polytope into John position.
pub fn john_transform<T: Scalar>(body: &Body<T>) -> Result<JohnPosition<T>> {
    let canon = body.canonical();
    let n = canon.dim();
    match canon.kind() {
        BodyKind::PNorm { p, weights } => {
            let r = analytic_john_radius(*p, n);
            let d = DMatrix::from_fn(n, n, |i, j| if i == j { weights.get(i) / r } else { T::zero() });
            let map = LinearMap::new(d)?;
            let out = Body::weighted_pnorm(*p, Weights::Uniform(r), n)?;
            let (contacts, cw) = if p.reciprocal() <= T::lit(0.5) {
                let basis = (0..n).map(|i| DVector::from_fn(n, |k, _| if k == i { T::one() } else { T::zero() }));
                (basis.collect(), vec![T::one(); n])
            } else {
                let rows = hadamard_rows::<T>(n);
                let c = T::from_usize_lossy(n) / T::from_usize_lossy(rows.len());
                let norm = T::from_usize_lossy(n).sqrt();
                let len = rows.len();
                (rows.into_iter().map(|h| h / norm).collect(), vec![c; len])
            };
            Ok(JohnPosition { body: out, map, certificate: JohnCertificate { contacts, weights: cw } })
        }
        BodyKind::Facets(poly) => {
            let a = poly.directions();
            let sol = mvee(a, T::lit(1e-7))?;
            let eig = sol.ellipsoid.shape.clone().symmetric_eigen();
            let sqrt_a = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.sqrt()))
                * eig.eigenvectors.transpose();
            let inv_sqrt = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| T::one() / l.sqrt()))
                * eig.eigenvectors.transpose();
            let b = &sqrt_a * a;
            let kmax = sol.gap * T::from_usize_lossy(n);
            let mut contacts = Vec::new();
            let mut cw = Vec::new();
            for j in 0..b.ncols() {
                let len2 = b.column(j).norm_squared();
                if sol.weights[j] > T::zero() && len2 >= T::one() - T::lit(1e-6) {
                    contacts.push(b.column(j) / len2.sqrt());
                    cw.push(kmax * sol.weights[j] * len2);
                }
            }
            let map = LinearMap::new(inv_sqrt)?;
            let out = Body::facets(b)?;
            Ok(JohnPosition { body: out, map, certificate: JohnCertificate { contacts, weights: cw } })
        }
        BodyKind::LinearImage { map, inner } => {
            let jp = john_transform(inner)?;
            let composed = LinearMap::new(jp.map.matrix() * map.inverse())?;
            Ok(JohnPosition { map: composed, ..jp })
        }
        _ => Err(Error::Unsupported(format!("John position of {}", canon.describe()))),
    }
}

/// Outcome of sampling the John sandwich `B_2 ⊆ K ⊆ √n B_2`.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub samples: usize,
    pub min_gauge: f64,
    pub max_gauge: f64,
    /// Directions with gauge above `1` (ball not inside).
    pub upper_violations: usize,
    /// Directions with gauge below `n^{-1/2}` (body not inside `√n B_2`).
    pub lower_violations: usize,
    pub pass: bool,
}

pub fn verify_sandwich<T: Scalar>(body: &Body<T>, samples_n: usize, seed: Seed) -> Result<SandwichReport> {
    let body = body.canonical();
    let n = body.dim();
    let floor = T::one() / T::from_usize_lossy(n).sqrt() - T::lit(1e-9);
    let ceil = T::one() + T::lit(1e-9);
    let gauges: Vec<Result<T>> = samples(seed.derive_str("sandwich"), samples_n, |rng| {
        let th = crate::spherestats::sample_sphere::<T, _>(n, rng)?;
        body.gauge_value(&th)
    });
    let gauges: Vec<T> = gauges.into_iter().collect::<Result<_>>()?;
    let upper = gauges.iter().filter(|g| **g > ceil).count();
    let lower = gauges.iter().filter(|g| **g < floor).count();
    let min = gauges.iter().fold(f64::INFINITY, |m, g| m.min(g.as_f64()));
    let max = gauges.iter().fold(f64::NEG_INFINITY, |m, g| m.max(g.as_f64()));
    Ok(SandwichReport {
        samples: samples_n,
        min_gauge: min,
        max_gauge: max,
        upper_violations: upper,
        lower_violations: lower,
        pass: upper == 0 && lower == 0,
    })
}
