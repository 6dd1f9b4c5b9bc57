//! Numerical laboratory for the fractional Laplacian.
//!
//! * [`quadrature`]: principal-value and kernel integrals, tail masses.
//! * [`constructions`]: step functions, the mollified sequence `v_j` and the
//!   blow-up family `u_lambda`.
//! * [`limits`]: the split `A + E + F` and the limit constant `b`.
//! * [`harness`]: verification suites and reports.

pub mod constructions;
pub mod error;
pub mod exec;
pub mod harness;
pub mod limits;
pub mod quadrature;
pub mod specfun;

pub use error::{Error, Result};
pub use exec::Execution;
pub use quadrature::{fraclap_pv, Estimate, QuadConfig, ScalarField};
pub use specfun::FracParams;
