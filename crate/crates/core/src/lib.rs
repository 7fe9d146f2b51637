//! Executable convex-geometry oracles and Monte Carlo experiments around
//! Dvoretzky-type theorems: gauges of symmetric convex bodies, John
//! position, sphere statistics, sparsity-indexed distortion, and Gaussian
//! sketching operators.
//!
//! Every numeric routine is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`, with `*32` variants for `f32`.

pub mod arrangements;
pub mod error;
pub mod johnpos;
pub mod normspace;
mod optimize;
pub mod rip_jl;
pub mod rng;
pub mod scalar;
pub mod spherestats;

pub use error::{Error, Result};
pub use rng::Seed;
pub use scalar::Scalar;

pub type Body = normspace::Body<f64>;
pub type Body32 = normspace::Body<f32>;
pub type GaugeValue = normspace::GaugeValue<f64>;
pub type GaugeValue32 = normspace::GaugeValue<f32>;
pub type Ellipsoid = johnpos::Ellipsoid<f64>;
pub type Ellipsoid32 = johnpos::Ellipsoid<f32>;
pub type JohnPosition = johnpos::JohnPosition<f64>;
pub type JohnPosition32 = johnpos::JohnPosition<f32>;
pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;
