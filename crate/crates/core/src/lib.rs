//! Magnetic trajectories on 2-step nilpotent Lie groups with left-invariant
//! metrics: closed forms for type-I forces, elliptic solutions for type-II
//! forces on H3, periodic orbits on H5, and an ODE oracle to check them.
//!
//! Everything numeric is generic over [`Real`]; the aliases below fix `f64`
//! or `f32`.

#![allow(clippy::needless_range_loop)]

pub mod closedform;
pub mod error;
pub mod h3_type2;
pub mod h5_type1;
pub mod linalg;
pub mod lorentz;
pub mod nilalgebra;
pub mod oracle;
pub mod quadrature;
pub mod scalar;
pub mod selftest;
pub mod specfun;

pub use error::{Error, Result};
pub use h3_type2::{PeriodicityReport, Verdict};
pub use oracle::{SampledCurve, Trajectory};
pub use scalar::Real;

pub type Algebra = nilalgebra::MetricNilAlgebra<f64>;
pub type Force = lorentz::LorentzForce<f64>;
pub type Matrix = linalg::Mat<f64>;
pub type TypeISolution = closedform::TypeISolution<f64>;
pub type Type2Trajectory = h3_type2::Type2TrajectoryH3<f64>;
pub type H5Trajectory = h5_type1::H5Trajectory<f64>;

pub type Algebra32 = nilalgebra::MetricNilAlgebra<f32>;
pub type Force32 = lorentz::LorentzForce<f32>;
pub type Matrix32 = linalg::Mat<f32>;
pub type TypeISolution32 = closedform::TypeISolution<f32>;
pub type Type2Trajectory32 = h3_type2::Type2TrajectoryH3<f32>;
pub type H5Trajectory32 = h5_type1::H5Trajectory<f32>;
