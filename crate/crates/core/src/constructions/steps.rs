//! Two-level step functions: `W_lambda`, its rescaling `V_j` and `U_lambda`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{
    kernel_integral, DensityTail, Estimate, QuadConfig, RadialDensity, ScalarField, SmoothWindow, TailDescriptor,
};
use crate::specfun::FracParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepKind {
    /// `lambda` on `B_3`, `lambda + lambda^2` outside.
    W,
    /// `j^{-1} W_j(j^{-1/(2 sigma)} x)`: `1` on `B_{3 R_j}`, `1 + j` outside.
    V,
    /// `lambda` on `B_3`, `lambda + lambda^p` outside.
    U { p: f64 },
}

/// A piecewise-constant radial field with a single jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFamily {
    pub kind: StepKind,
    /// `lambda`, or `j` for the `V` kind.
    pub level: f64,
    pub n: usize,
    pub sigma: f64,
    pub inner_value: f64,
    pub outer_value: f64,
    /// Radius of the jump.
    pub radius: f64,
}

pub fn make_step_family(kind: StepKind, level: f64, params: &FracParams) -> Result<StepFamily> {
    if !(level > 0.0) {
        return Err(Error::InvalidParameter(format!("step level must be positive, got {level}")));
    }
    let (inner_value, outer_value, radius) = match kind {
        StepKind::W => (level, level + level * level, 3.0),
        StepKind::V => {
            if level < 1.0 {
                return Err(Error::InvalidParameter(format!("j must be at least 1, got {level}")));
            }
            (1.0, 1.0 + level, 3.0 * level.powf(1.0 / (2.0 * params.sigma)))
        }
        StepKind::U { p } => (level, level + level.powf(p), 3.0),
    };
    Ok(StepFamily { kind, level, n: params.n, sigma: params.sigma, inner_value, outer_value, radius })
}

impl StepFamily {
    /// `R_j = j^{1/(2 sigma)}` for the `V` kind, `1` otherwise.
    pub fn scale(&self) -> f64 {
        self.radius / 3.0
    }

    pub fn evaluate(&self, r: f64) -> f64 {
        if r <= self.radius {
            self.inner_value
        } else {
            self.outer_value
        }
    }

    pub fn field(&self) -> ScalarField {
        let (a, b, rad) = (self.inner_value, self.outer_value, self.radius);
        ScalarField::radial(
            self.n,
            move |r| if r <= rad { a } else { b },
            TailDescriptor::PowerLaw { coefficient: b, exponent: 0.0, onset: rad, exact: true },
        )
        .with_breaks(vec![rad])
        .with_window(SmoothWindow::Ball { radius: rad })
        .with_nonneg(a >= 0.0 && b >= 0.0)
        .with_label(match self.kind {
            StepKind::W => "step-w",
            StepKind::V => "step-v",
            StepKind::U { .. } => "step-u",
        })
    }

    /// `(-Delta)^sigma` of the step at the origin in closed form:
    /// `-c |S^{n-1}| (b - a) / (2 sigma radius^{2 sigma})`.
    pub fn fraclap_at_origin(&self, params: &FracParams) -> f64 {
        -params.c * params.sphere_area * (self.outer_value - self.inner_value)
            / (2.0 * params.sigma * self.radius.powf(2.0 * params.sigma))
    }
}

/// `K(x) = -c int_{B_3^c} |x - y|^{-n-2 sigma} dy` for `|x| < 3`, the
/// prescribed function of the `U_lambda` illustration.
pub fn step_prescribed_function(x: &[f64], params: &FracParams, cfg: &QuadConfig) -> Result<Estimate> {
    let density = RadialDensity::new(|_| 1.0, 3.0, 3.0).with_tail(DensityTail::Terms(vec![(1.0, 0.0)]));
    let v = kernel_integral(&density, x, params, cfg)?;
    Ok(Estimate::new(-params.c * v.value, params.c * v.err_est))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::fraclap_pv;
    use std::f64::consts::PI;

    #[test]
    fn v_step_constant_is_level_independent() {
        let p = FracParams::new(1, 0.5).unwrap();
        for j in [1.0, 10.0, 100.0] {
            let s = make_step_family(StepKind::V, j, &p).unwrap();
            assert!((s.fraclap_at_origin(&p) + 2.0 / (3.0 * PI)).abs() < 1e-15);
            let v = fraclap_pv(&s.field(), &[0.0], &p, &QuadConfig::default()).unwrap();
            assert!(((v.value + 2.0 / (3.0 * PI)) / v.value).abs() < 1e-9, "j={j}: {}", v.value);
        }
    }

    #[test]
    fn u_step_ratio_is_lambda_free() {
        let p = FracParams::new(2, 0.5).unwrap();
        let x = [0.7, -0.4];
        let k = step_prescribed_function(&x, &p, &QuadConfig::default()).unwrap().value;
        for lambda in [1.0, 10.0, 100.0] {
            let s = make_step_family(StepKind::U { p: 3.0 }, lambda, &p).unwrap();
            let v = fraclap_pv(&s.field(), &x, &p, &QuadConfig::default()).unwrap();
            let ratio = v.value / s.evaluate(0.7f64.hypot(0.4)).powf(3.0);
            assert!(((ratio - k) / k).abs() < 1e-7, "lambda={lambda}: {ratio} vs {k}");
        }
    }

    #[test]
    fn rejects_bad_levels() {
        let p = FracParams::new(1, 0.5).unwrap();
        assert!(make_step_family(StepKind::W, 0.0, &p).is_err());
        assert!(make_step_family(StepKind::V, 0.5, &p).is_err());
    }

    #[test]
    fn lower_branch_owns_the_jump() {
        let p = FracParams::new(1, 0.5).unwrap();
        let s = make_step_family(StepKind::W, 2.0, &p).unwrap();
        assert_eq!(s.evaluate(3.0), 2.0);
        assert_eq!(s.evaluate(3.0 + 1e-12), 6.0);
    }
}
