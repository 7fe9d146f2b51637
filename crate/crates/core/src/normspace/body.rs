use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

/// Exponent `p ∈ [1, ∞]` of a p-norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> Exponent<T> {
    pub fn new(p: T) -> Result<Self> {
        if !(p >= T::one()) {
            return Err(Error::InvalidBody(format!("p must be >= 1, got {p}")));
        }
        Ok(if p.is_finite() { Exponent::Finite(p) } else { Exponent::Infinite })
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> Self {
        match self {
            Exponent::Infinite => Exponent::Finite(T::one()),
            Exponent::Finite(p) if p == T::one() => Exponent::Infinite,
            Exponent::Finite(p) => Exponent::Finite(p / (p - T::one())),
        }
    }

    pub fn is(self, v: f64) -> bool {
        matches!(self, Exponent::Finite(p) if p == T::lit(v))
    }

    /// `1/p`, zero for `p = ∞`.
    pub fn reciprocal(self) -> T {
        match self {
            Exponent::Infinite => T::zero(),
            Exponent::Finite(p) => T::one() / p,
        }
    }
}

/// Coordinate weights of a weighted p-norm `(Σ |w_i x_i|^p)^{1/p}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Weights<T: Scalar> {
    Uniform(T),
    PerCoord(DVector<T>),
}

impl<T: Scalar> Weights<T> {
    #[inline]
    pub fn get(&self, i: usize) -> T {
        match self {
            Weights::Uniform(w) => *w,
            Weights::PerCoord(v) => v[i],
        }
    }

    pub fn max(&self) -> T {
        match self {
            Weights::Uniform(w) => *w,
            Weights::PerCoord(v) => v.max(),
        }
    }

    pub fn min(&self) -> T {
        match self {
            Weights::Uniform(w) => *w,
            Weights::PerCoord(v) => v.min(),
        }
    }

    pub fn reciprocal(&self) -> Self {
        match self {
            Weights::Uniform(w) => Weights::Uniform(T::one() / *w),
            Weights::PerCoord(v) => Weights::PerCoord(v.map(|x| T::one() / x)),
        }
    }

    fn scaled_by_coords(&self, dim: usize, f: impl Fn(usize) -> T) -> Self {
        Weights::PerCoord(DVector::from_fn(dim, |i, _| self.get(i) * f(i)))
    }

    fn simplify(self) -> Self {
        match self {
            Weights::PerCoord(v) if v.len() > 0 && v.iter().all(|x| *x == v[0]) => Weights::Uniform(v[0]),
            w => w,
        }
    }
}

/// Finitely many symmetric slabs `{x : |<a_j, x>| <= 1}` (facet form) or
/// the symmetric hull `conv{±v_j}` (vertex form). Directions are stored as
/// matrix columns together with their Gram matrix.
#[derive(Debug, Clone)]
pub struct Polytope<T: Scalar> {
    pub(crate) dirs: DMatrix<T>,
    pub(crate) gram: DMatrix<T>,
    /// `Dᵀ(DDᵀ)⁻¹`, the minimum-norm right inverse of the direction matrix.
    pub(crate) pinv: DMatrix<T>,
}

impl<T: Scalar> Polytope<T> {
    /// Drops zero columns and antipodal or repeated copies, then checks that
    /// the directions span the space.
    pub fn new(dirs: DMatrix<T>) -> Result<Self> {
        let n = dirs.nrows();
        if n == 0 {
            return Err(Error::InvalidBody("polytope in dimension 0".into()));
        }
        if dirs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBody("non-finite polytope direction".into()));
        }
        let mut keep: Vec<usize> = Vec::new();
        let norms: Vec<T> = dirs.column_iter().map(|c| c.norm()).collect();
        'outer: for j in 0..dirs.ncols() {
            if norms[j] == T::zero() {
                continue;
            }
            for &k in &keep {
                let cos = dirs.column(j).dot(&dirs.column(k)) / (norms[j] * norms[k]);
                if (cos.abs() - T::one()).abs() <= T::lit(1e-12)
                    && (norms[j] - norms[k]).abs() <= T::lit(1e-12) * norms[k]
                {
                    continue 'outer;
                }
            }
            keep.push(j);
        }
        let dirs = dirs.select_columns(&keep);
        if dirs.ncols() < n {
            return Err(Error::InvalidBody("polytope directions do not span the space".into()));
        }
        Self::from_dirs(dirs).ok_or_else(|| Error::InvalidBody("polytope directions do not span the space".into()))
    }

    pub(crate) fn from_dirs(dirs: DMatrix<T>) -> Option<Self> {
        let chol = (&dirs * dirs.transpose()).cholesky()?;
        let pinv = chol.solve(&dirs).transpose();
        let gram = dirs.transpose() * &dirs;
        Some(Polytope { dirs, gram, pinv })
    }

    pub fn dim(&self) -> usize {
        self.dirs.nrows()
    }

    /// Number of direction pairs after deduplication.
    pub fn count(&self) -> usize {
        self.dirs.ncols()
    }

    pub fn directions(&self) -> &DMatrix<T> {
        &self.dirs
    }
}

/// Invertible linear map with cached inverse and shape flags.
#[derive(Debug, Clone)]
pub struct LinearMap<T: Scalar> {
    pub(crate) matrix: DMatrix<T>,
    pub(crate) inverse: DMatrix<T>,
    /// `Some(c)` when the map is `c` times an orthogonal matrix.
    pub(crate) conformal: Option<T>,
    pub(crate) diagonal: bool,
}

impl<T: Scalar> LinearMap<T> {
    pub fn new(matrix: DMatrix<T>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidBody("linear map must be square".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBody("non-finite linear map".into()));
        }
        let n = matrix.nrows();
        let inverse = matrix
            .clone()
            .try_inverse()
            .filter(|inv| inv.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::InvalidBody("singular linear map".into()))?;
        let residual = (&matrix * &inverse - DMatrix::identity(n, n)).amax();
        if residual > T::lit(1e-8) {
            return Err(Error::InvalidBody("singular linear map".into()));
        }
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || matrix[(i, j)] == T::zero()));
        let mtm = matrix.transpose() * &matrix;
        let c2 = mtm.trace() / T::from_usize_lossy(n);
        let dev = (&mtm - DMatrix::identity(n, n) * c2).amax();
        let conformal = (dev <= T::lit(1e-12) * c2).then(|| c2.sqrt());
        Ok(LinearMap { matrix, inverse, conformal, diagonal })
    }

    pub fn scaling(n: usize, c: T) -> Result<Self> {
        Self::new(DMatrix::identity(n, n) * c)
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<T> {
        &self.inverse
    }

    pub fn compose(&self, inner: &LinearMap<T>) -> Result<Self> {
        LinearMap::new(&self.matrix * &inner.matrix)
    }

    pub(crate) fn inverse_transpose(&self) -> DMatrix<T> {
        self.inverse.transpose()
    }
}

#[derive(Debug, Clone)]
pub enum BodyKind<T: Scalar> {
    PNorm { p: Exponent<T>, weights: Weights<T> },
    Facets(Polytope<T>),
    Vertices(Polytope<T>),
    LinearImage { map: LinearMap<T>, inner: Box<Body<T>> },
    /// `conv(inner ∪ t·B_2)`; `inner` is stored in canonical form.
    Hull { inner: Box<Body<T>>, t: T },
    IntersectBall { inner: Box<Body<T>>, rho: T },
}

/// Origin-symmetric convex body given by its gauge and support oracles.
#[derive(Debug, Clone)]
pub struct Body<T: Scalar> {
    pub(crate) dim: usize,
    pub(crate) kind: BodyKind<T>,
}

impl<T: Scalar> Body<T> {
    pub fn pnorm(dim: usize, p: Exponent<T>) -> Result<Self> {
        Self::weighted_pnorm(p, Weights::Uniform(T::one()), dim)
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::pnorm(dim, Exponent::Finite(T::lit(2.0))).expect("valid euclidean ball")
    }

    pub fn cube(dim: usize) -> Self {
        Self::pnorm(dim, Exponent::Infinite).expect("valid cube")
    }

    pub fn cross_polytope(dim: usize) -> Self {
        Self::pnorm(dim, Exponent::Finite(T::one())).expect("valid cross-polytope")
    }

    pub fn weighted_pnorm(p: Exponent<T>, weights: Weights<T>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidBody("dimension must be positive".into()));
        }
        if let Exponent::Finite(p) = p {
            Exponent::new(p)?;
        }
        match &weights {
            Weights::Uniform(w) if !(*w > T::zero() && w.is_finite()) => {
                return Err(Error::InvalidBody("weights must be positive".into()))
            }
            Weights::PerCoord(v) => {
                if v.len() != dim {
                    return Err(Error::InvalidBody(format!(
                        "expected {dim} weights, got {}",
                        v.len()
                    )));
                }
                if v.iter().any(|w| !(*w > T::zero() && w.is_finite())) {
                    return Err(Error::InvalidBody("weights must be positive".into()));
                }
            }
            _ => {}
        }
        Ok(Body { dim, kind: BodyKind::PNorm { p, weights: weights.simplify() } })
    }

    /// `{x : |<a_j, x>| <= 1}` for the columns `a_j` of `normals`.
    pub fn facets(normals: DMatrix<T>) -> Result<Self> {
        let poly = Polytope::new(normals)?;
        Ok(Body { dim: poly.dim(), kind: BodyKind::Facets(poly) })
    }

    /// `conv{±v_j}` for the columns `v_j` of `points`.
    pub fn vertices(points: DMatrix<T>) -> Result<Self> {
        let poly = Polytope::new(points)?;
        Ok(Body { dim: poly.dim(), kind: BodyKind::Vertices(poly) })
    }

    pub fn linear_image(map: DMatrix<T>, inner: Body<T>) -> Result<Self> {
        if map.nrows() != inner.dim {
            return Err(Error::InvalidBody("linear map dimension mismatch".into()));
        }
        Ok(Body {
            dim: inner.dim,
            kind: BodyKind::LinearImage { map: LinearMap::new(map)?, inner: Box::new(inner) },
        })
    }

    pub(crate) fn from_map(map: LinearMap<T>, inner: Body<T>) -> Self {
        Body { dim: inner.dim, kind: BodyKind::LinearImage { map, inner: Box::new(inner) } }
    }

    /// `K_t = conv(inner ∪ t·B_2)` for `t >= 1`.
    pub fn hull(inner: Body<T>, t: T) -> Result<Self> {
        if !(t >= T::one()) || !t.is_finite() {
            return Err(domain!("hull radius must satisfy t >= 1, got {t}"));
        }
        Ok(Self::hull_any(inner, t))
    }

    /// Hull with an arbitrary positive radius; used for polar bodies.
    pub(crate) fn hull_any(inner: Body<T>, t: T) -> Self {
        let inner = inner.canonical();
        match inner.kind {
            BodyKind::Hull { inner: k, t: t2 } => {
                Body { dim: k.dim, kind: BodyKind::Hull { inner: k, t: t.max(t2) } }
            }
            _ => Body { dim: inner.dim, kind: BodyKind::Hull { inner: Box::new(inner), t } },
        }
    }

    /// `inner ∩ rho·B_2`.
    pub fn intersect_ball(inner: Body<T>, rho: T) -> Result<Self> {
        if !(rho > T::zero()) || !rho.is_finite() {
            return Err(domain!("ball radius must be positive, got {rho}"));
        }
        Ok(Body { dim: inner.dim, kind: BodyKind::IntersectBall { inner: Box::new(inner), rho } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &BodyKind<T> {
        &self.kind
    }

    /// Equivalent body with linear images folded into p-norm weights and
    /// polytope directions wherever possible.
    pub fn canonical(&self) -> Body<T> {
        match &self.kind {
            BodyKind::LinearImage { map, inner } => {
                let inner = inner.canonical();
                fold_linear(map, inner)
            }
            BodyKind::Hull { inner, t } => Body::hull_any((**inner).clone(), *t),
            BodyKind::IntersectBall { inner, rho } => {
                let inner = inner.canonical();
                match inner.kind {
                    BodyKind::IntersectBall { inner: k, rho: r2 } => Body {
                        dim: self.dim,
                        kind: BodyKind::IntersectBall { inner: k, rho: rho.min(r2) },
                    },
                    _ => Body {
                        dim: self.dim,
                        kind: BodyKind::IntersectBall { inner: Box::new(inner), rho: *rho },
                    },
                }
            }
            _ => self.clone(),
        }
    }

    /// Polar body `K° = {y : <x, y> <= 1 for all x in K}`.
    pub fn polar(&self) -> Body<T> {
        let dim = self.dim;
        match &self.kind {
            BodyKind::PNorm { p, weights } => Body {
                dim,
                kind: BodyKind::PNorm { p: p.conjugate(), weights: weights.reciprocal() },
            },
            BodyKind::Facets(poly) => Body { dim, kind: BodyKind::Vertices(poly.clone()) },
            BodyKind::Vertices(poly) => Body { dim, kind: BodyKind::Facets(poly.clone()) },
            BodyKind::LinearImage { map, inner } => {
                let m = LinearMap::new(map.inverse_transpose()).expect("inverse of invertible map");
                Body::from_map(m, inner.polar())
            }
            BodyKind::Hull { inner, t } => Body {
                dim,
                kind: BodyKind::IntersectBall { inner: Box::new(inner.polar()), rho: T::one() / *t },
            },
            BodyKind::IntersectBall { inner, rho } => Body::hull_any(inner.polar(), T::one() / *rho),
        }
    }

    /// Radius `r` with `r·B_2 ⊆ K`, when it follows from the structure.
    pub fn inradius_bound(&self) -> Option<T> {
        let n = T::from_usize_lossy(self.dim);
        match &self.kind {
            BodyKind::PNorm { p, weights } => {
                // ||x||_p <= n^{max(0, 1/p - 1/2)} |x|
                let e = (p.reciprocal() - T::lit(0.5)).max(T::zero());
                Some(T::one() / (weights.max() * n.powf(e)))
            }
            BodyKind::Facets(poly) => {
                let m = poly.dirs.column_iter().map(|c| c.norm()).fold(T::zero(), |a, b| a.max(b));
                Some(T::one() / m)
            }
            BodyKind::Vertices(_) => None,
            BodyKind::LinearImage { map, inner } => {
                let r = inner.inradius_bound()?;
                let smin = map.matrix.clone().singular_values().min();
                Some(r * smin)
            }
            BodyKind::Hull { inner, t } => Some(inner.inradius_bound().map_or(*t, |r| r.max(*t))),
            BodyKind::IntersectBall { inner, rho } => Some(inner.inradius_bound()?.min(*rho)),
        }
    }

    pub(crate) fn check_point(&self, x: &DVector<T>) -> Result<()> {
        if x.len() != self.dim {
            return Err(domain!("vector has length {}, body dimension is {}", x.len(), self.dim));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(domain!("non-finite input vector"));
        }
        Ok(())
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        match &self.kind {
            BodyKind::PNorm { p, weights } => {
                let p = match p {
                    Exponent::Infinite => "inf".to_string(),
                    Exponent::Finite(p) => format!("{p}"),
                };
                match weights {
                    Weights::Uniform(w) if *w == T::one() => format!("pnorm({p}, n={})", self.dim),
                    Weights::Uniform(w) => format!("pnorm({p}, n={}, w={w})", self.dim),
                    Weights::PerCoord(_) => format!("pnorm({p}, n={}, weighted)", self.dim),
                }
            }
            BodyKind::Facets(p) => format!("facets(n={}, m={})", self.dim, p.count()),
            BodyKind::Vertices(p) => format!("vertices(n={}, m={})", self.dim, p.count()),
            BodyKind::LinearImage { inner, .. } => format!("linear_image({})", inner.describe()),
            BodyKind::Hull { inner, t } => format!("hull({}, t={t})", inner.describe()),
            BodyKind::IntersectBall { inner, rho } => {
                format!("intersect_ball({}, rho={rho})", inner.describe())
            }
        }
    }
}

fn fold_linear<T: Scalar>(map: &LinearMap<T>, inner: Body<T>) -> Body<T> {
    let dim = inner.dim;
    match inner.kind {
        BodyKind::PNorm { p, weights } if map.diagonal => {
            // x ∈ D·B  ⇔  D⁻¹x ∈ B
            let w = weights.scaled_by_coords(dim, |i| map.inverse[(i, i)].abs()).simplify();
            Body { dim, kind: BodyKind::PNorm { p, weights: w } }
        }
        BodyKind::PNorm { p, weights } => match map.conformal {
            Some(c) if is_identity_up_to_scale(&map.matrix, c) => {
                let w = match weights {
                    Weights::Uniform(w) => Weights::Uniform(w / c),
                    Weights::PerCoord(v) => Weights::PerCoord(v / c),
                };
                Body { dim, kind: BodyKind::PNorm { p, weights: w } }
            }
            _ => Body::from_map(map.clone(), Body { dim, kind: BodyKind::PNorm { p, weights } }),
        },
        BodyKind::Facets(poly) => {
            let poly = Polytope::from_dirs(map.inverse_transpose() * &poly.dirs).expect("invertible image spans");
            Body { dim, kind: BodyKind::Facets(poly) }
        }
        BodyKind::Vertices(poly) => {
            let poly = Polytope::from_dirs(&map.matrix * &poly.dirs).expect("invertible image spans");
            Body { dim, kind: BodyKind::Vertices(poly) }
        }
        BodyKind::LinearImage { map: m2, inner: k } => match map.compose(&m2) {
            Ok(m) => fold_linear(&m, *k),
            Err(_) => Body::from_map(
                map.clone(),
                Body { dim, kind: BodyKind::LinearImage { map: m2, inner: k } },
            ),
        },
        BodyKind::Hull { inner: k, t } if map.conformal.is_some() => {
            let c = map.conformal.unwrap();
            Body::hull_any(fold_linear(map, *k), c * t)
        }
        BodyKind::IntersectBall { inner: k, rho } if map.conformal.is_some() => {
            let c = map.conformal.unwrap();
            Body { dim, kind: BodyKind::IntersectBall { inner: Box::new(fold_linear(map, *k)), rho: c * rho } }
        }
        kind => Body::from_map(map.clone(), Body { dim, kind }),
    }
}

fn is_identity_up_to_scale<T: Scalar>(m: &DMatrix<T>, c: T) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| {
        let target = if i == j { c } else { T::zero() };
        (m[(i, j)] - target).abs() <= T::lit(1e-14) * c
    }))
}
