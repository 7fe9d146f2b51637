//! JSON grammar for body specifications.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::body::{Body, Exponent, Weights};
use crate::error::{Error, Result};
use crate::rng::Seed;
use crate::scalar::Scalar;

/// Exponent as a JSON number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PSpec {
    Finite(f64),
    Named(InfName),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InfName {
    #[serde(rename = "inf")]
    Inf,
}

impl PSpec {
    pub const INF: PSpec = PSpec::Named(InfName::Inf);

    pub fn to_exponent<T: Scalar>(self) -> Result<Exponent<T>> {
        match self {
            PSpec::Named(InfName::Inf) => Ok(Exponent::Infinite),
            PSpec::Finite(p) => Exponent::new(T::lit(p)),
        }
    }
}

/// Serializable description of a [`Body`].
///
/// `john` places its inner body in John position; `random_polytope` draws
/// `facets` Haar-random unit facet normals from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Pnorm {
        p: PSpec,
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Polytope {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        facets: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vertices: Option<Vec<Vec<f64>>>,
    },
    LinearImage {
        matrix: Vec<Vec<f64>>,
        inner: Box<BodySpec>,
    },
    Hull {
        inner: Box<BodySpec>,
        t: f64,
    },
    IntersectBall {
        inner: Box<BodySpec>,
        rho: f64,
    },
    John {
        inner: Box<BodySpec>,
    },
    RandomPolytope {
        dim: usize,
        facets: usize,
        seed: u64,
    },
}

fn columns<T: Scalar>(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<T>> {
    let n = rows.first().map(|r| r.len()).unwrap_or(0);
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidBody(format!("{what} must be non-empty vectors of equal length")));
    }
    Ok(DMatrix::from_fn(n, rows.len(), |i, j| T::lit(rows[j][i])))
}

impl BodySpec {
    pub fn pnorm(p: PSpec, dim: usize) -> Self {
        BodySpec::Pnorm { p, dim, weights: None }
    }

    pub fn john(inner: BodySpec) -> Self {
        BodySpec::John { inner: Box::new(inner) }
    }

    pub fn hull(inner: BodySpec, t: f64) -> Self {
        BodySpec::Hull { inner: Box::new(inner), t }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidBody(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("body spec serializes")
    }

    /// Ambient dimension, if determined by the spec.
    pub fn dim(&self) -> Option<usize> {
        match self {
            BodySpec::Pnorm { dim, .. } | BodySpec::RandomPolytope { dim, .. } => Some(*dim),
            BodySpec::Polytope { facets, vertices } => {
                facets.as_ref().or(vertices.as_ref()).and_then(|v| v.first()).map(|r| r.len())
            }
            BodySpec::LinearImage { matrix, .. } => Some(matrix.len()),
            BodySpec::Hull { inner, .. } | BodySpec::IntersectBall { inner, .. } | BodySpec::John { inner } => {
                inner.dim()
            }
        }
    }

    /// Same spec in dimension `n`; fails for specs with explicit coordinates.
    pub fn with_dim(&self, n: usize) -> Result<Self> {
        let fixed = || Error::InvalidBody(format!("body with explicit coordinates cannot be resized to {n}"));
        Ok(match self {
            BodySpec::Pnorm { p, dim, weights } => {
                if weights.is_some() && *dim != n {
                    return Err(fixed());
                }
                BodySpec::Pnorm { p: *p, dim: n, weights: weights.clone() }
            }
            BodySpec::RandomPolytope { dim, facets, seed } => {
                // Keep the facet-to-dimension ratio.
                let m = (*facets * n).div_ceil((*dim).max(1)).max(n);
                BodySpec::RandomPolytope { dim: n, facets: m, seed: *seed }
            }
            BodySpec::Polytope { .. } | BodySpec::LinearImage { .. } => {
                if self.dim() != Some(n) {
                    return Err(fixed());
                }
                self.clone()
            }
            BodySpec::Hull { inner, t } => BodySpec::Hull { inner: Box::new(inner.with_dim(n)?), t: *t },
            BodySpec::IntersectBall { inner, rho } => {
                BodySpec::IntersectBall { inner: Box::new(inner.with_dim(n)?), rho: *rho }
            }
            BodySpec::John { inner } => BodySpec::John { inner: Box::new(inner.with_dim(n)?) },
        })
    }

    /// Builds the body (in canonical form).
    pub fn build<T: Scalar>(&self) -> Result<Body<T>> {
        Ok(self.build_raw::<T>()?.canonical())
    }

    fn build_raw<T: Scalar>(&self) -> Result<Body<T>> {
        match self {
            BodySpec::Pnorm { p, dim, weights } => {
                let w = match weights {
                    None => Weights::Uniform(T::one()),
                    Some(w) => Weights::PerCoord(DVector::from_iterator(w.len(), w.iter().map(|v| T::lit(*v)))),
                };
                Body::weighted_pnorm(p.to_exponent()?, w, *dim)
            }
            BodySpec::Polytope { facets, vertices } => match (facets, vertices) {
                (Some(f), None) => Body::facets(columns(f, "facets")?),
                (None, Some(v)) => Body::vertices(columns(v, "vertices")?),
                _ => Err(Error::InvalidBody("polytope needs exactly one of facets or vertices".into())),
            },
            BodySpec::LinearImage { matrix, inner } => {
                let n = matrix.len();
                if n == 0 || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidBody("linear map must be a square matrix".into()));
                }
                let m = DMatrix::from_fn(n, n, |i, j| T::lit(matrix[i][j]));
                Body::linear_image(m, inner.build_raw()?)
            }
            BodySpec::Hull { inner, t } => Body::hull(inner.build_raw()?, T::lit(*t))
                .map_err(|e| Error::InvalidBody(e.to_string())),
            BodySpec::IntersectBall { inner, rho } => Body::intersect_ball(inner.build_raw()?, T::lit(*rho))
                .map_err(|e| Error::InvalidBody(e.to_string())),
            BodySpec::John { inner } => Ok(crate::johnpos::john_transform(&inner.build_raw()?)?.body),
            BodySpec::RandomPolytope { dim, facets, seed } => {
                if *facets < *dim {
                    return Err(Error::InvalidBody("random polytope needs at least dim facets".into()));
                }
                let mut rng = Seed(*seed).rng();
                let mut a = DMatrix::<T>::zeros(*dim, *facets);
                for j in 0..*facets {
                    let v = crate::spherestats::sample_sphere::<T, _>(*dim, &mut rng)?;
                    a.set_column(j, &v);
                }
                Body::facets(a)
            }
        }
    }
}
