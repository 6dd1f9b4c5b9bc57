//! Numerical engine: principal-value evaluation of the fractional Laplacian,
//! tail integrals over ball complements and derivatives of kernel integrals.

pub mod field;
pub mod gauss;
pub mod kernel;
pub mod pv;
pub mod richardson;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

pub use field::{ScalarField, SmoothWindow, TailDescriptor};
pub use gauss::{Integral, Tolerance};
pub use kernel::{
    kernel_derivative_integral, kernel_integral, kernel_moments, tail_integral, DensityTail, DerivativeOrder,
    KernelDerivative, KernelMoments, RadialDensity,
};
pub use pv::{fraclap_pv, radial_fraclap};
pub use richardson::{richardson_derivative, richardson_gradient, richardson_hessian};

/// How the integral beyond the last structural radius is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarPolicy {
    /// Closed forms wherever the tail is known exactly and a closed form
    /// exists; mapped quadrature otherwise.
    #[default]
    AnalyticTail,
    /// Always substitute `rho = rho0 * tau^{-1/kappa}` and integrate on `(0, 1]`.
    MappedQuadrature,
}

/// Quadrature settings shared by every evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Upper bound for the radius of the symmetrized near-field ball.
    pub near_radius: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Bisections allowed per adaptive integral beyond the initial partition.
    pub max_subdiv: usize,
    pub far_policy: FarPolicy,
    /// Extrapolation levels for Richardson finite differences.
    pub richardson_steps: usize,
    pub execution: Execution,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            near_radius: 0.5,
            rel_tol: 1e-8,
            abs_tol: 1e-9,
            max_subdiv: 60,
            far_policy: FarPolicy::AnalyticTail,
            richardson_steps: 4,
            execution: Execution::Parallel,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.near_radius > 0.0) {
            return Err(Error::InvalidParameter("near_radius must be positive".into()));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if self.max_subdiv == 0 {
            return Err(Error::InvalidParameter("max_subdiv must be positive".into()));
        }
        Ok(())
    }

    /// Same settings with both tolerances multiplied by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self { rel_tol: self.rel_tol * factor, abs_tol: self.abs_tol * factor, ..*self }
    }

    pub fn with_execution(&self, execution: Execution) -> Self {
        Self { execution, ..*self }
    }

    pub fn tolerance(&self) -> Tolerance {
        Tolerance::new(self.abs_tol, self.rel_tol)
    }

    /// Combined tolerance budget `max(abs_tol, rel_tol |value|)` for a result.
    pub fn budget(&self, value: f64) -> f64 {
        self.tolerance().target(value)
    }
}

/// Value of a quadrature together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub err_est: f64,
}

impl Estimate {
    pub fn new(value: f64, err_est: f64) -> Self {
        Self { value, err_est }
    }
}
