//! Adapted connections on manifolds with a `J² = ±Id` structure and a
//! compatible metric: symbolic structure fields, pointwise connection
//! coefficients, the canonical involution and projection, the first
//! canonical, Chern and skew-torsion connections, and a seeded invariant
//! suite that checks the identities relating them.
//!
//! The numeric core is generic over [`scalar::Real`]; the aliases below fix
//! it to `f64`, which is what the catalog, verifier and CLI use.

// Tolerance checks are written as `!(x <= tol)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod connections;
pub mod expr;
pub mod geometry;
pub mod linsolve;
pub mod scalar;
pub mod tensor;
pub mod verify;

pub use scalar::Real;

pub type Frame = geometry::PointFrame<f64>;
pub type Connection = connections::ConnectionCoeffs<f64>;
pub type ChernReport = connections::SolveReport<connections::ConnectionCoeffs<f64>>;
pub type SkewReport = connections::SolveReport<connections::TorsionForm<f64>>;
pub type TorsionForm = connections::TorsionForm<f64>;
pub type Metric = tensor::Metric2<f64>;
pub type Matrix = tensor::Matrix<f64>;
pub type Tensor12 = tensor::Tensor12<f64>;
pub type Tensor03 = tensor::Tensor03<f64>;
