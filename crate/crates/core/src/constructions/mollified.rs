//! The smooth compactly supported family `w_lambda`, `f_lambda`, `beta` and
//! the rescaled sequence `v_j -> 1` whose fractional Laplacians tend to `-1`.

use serde::Serialize;

use super::cutoff::smooth_step;
use crate::error::{Error, Result};
use crate::quadrature::{
    fraclap_pv, kernel_integral, DensityTail, Estimate, QuadConfig, RadialDensity, ScalarField, TailDescriptor,
};
use crate::specfun::FracParams;

/// `w_lambda`: `lambda` on `B_3`, rising to `lambda + lambda^2` across
/// `3 < |x| <= 4`, flat up to `|x| = 6` and cut off to zero by `|x| = 7`.
pub fn make_w_lambda(lambda: f64, params: &FracParams) -> Result<ScalarField> {
    if !(lambda >= 1.0) {
        return Err(Error::InvalidParameter(format!("lambda must be at least 1, got {lambda}")));
    }
    let top = lambda + lambda * lambda;
    let profile = move |r: f64| {
        if r <= 3.0 {
            lambda
        } else if r <= 4.0 {
            lambda + lambda * lambda * smooth_step(r - 3.0)
        } else if r <= 6.0 {
            top
        } else {
            (1.0 - smooth_step(r - 6.0)) * top
        }
    };
    Ok(ScalarField::radial(params.n, profile, TailDescriptor::CompactSupport { radius: 7.0 })
        .with_breaks(vec![3.0, 4.0, 6.0, 7.0])
        .with_nonneg(true)
        .with_label("w-lambda"))
}

/// `lambda^{-2} (lambda - w_lambda)`, the density of `f_lambda` on `|x| < 3`;
/// `None` drops the `lambda^{-1}` terms (the limit density).
fn f_density(lambda: Option<f64>) -> RadialDensity {
    let inv = lambda.map_or(0.0, |l| 1.0 / l);
    let profile = move |s: f64| {
        if s <= 4.0 {
            -smooth_step(s - 3.0)
        } else if s <= 6.0 {
            -1.0
        } else {
            let phi = smooth_step(s - 6.0);
            -(1.0 - phi) + inv * phi
        }
    };
    let tail = if inv > 0.0 { DensityTail::Terms(vec![(inv, 0.0)]) } else { DensityTail::None };
    RadialDensity::new(profile, 3.0, 7.0).with_breaks(vec![4.0, 6.0]).with_tail(tail)
}

fn f_from_density(density: &RadialDensity, x: &[f64], params: &FracParams, cfg: &QuadConfig) -> Result<Estimate> {
    let local = QuadConfig { abs_tol: cfg.abs_tol / params.c, ..*cfg };
    let v = kernel_integral(density, x, params, &local)?;
    Ok(Estimate::new(params.c * v.value, params.c * v.err_est))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `f_lambda(x) = lambda^{-2} (-Delta)^sigma w_lambda(x)`.
///
/// Inside `B_3` the integrand is supported away from `x` and is integrated
/// directly; elsewhere the principal-value evaluator is used.
pub fn f_lambda(lambda: f64, x: &[f64], params: &FracParams, cfg: &QuadConfig) -> Result<Estimate> {
    if !(lambda >= 1.0) {
        return Err(Error::InvalidParameter(format!("lambda must be at least 1, got {lambda}")));
    }
    if norm(x) < 3.0 {
        return f_from_density(&f_density(Some(lambda)), x, params, cfg);
    }
    let w = make_w_lambda(lambda, params)?;
    let l2 = lambda * lambda;
    let v = fraclap_pv(&w, x, params, &cfg.tightened(1.0 / l2))?;
    Ok(Estimate::new(v.value / l2, v.err_est / l2))
}

/// Pointwise limit of `f_lambda` on `B_3`.
pub fn f_limit(x: &[f64], params: &FracParams, cfg: &QuadConfig) -> Result<Estimate> {
    if !(norm(x) < 3.0) {
        return Err(Error::PointOutsideBall { norm: norm(x), radius: 3.0 });
    }
    f_from_density(&f_density(None), x, params, cfg)
}

/// `c int_{B_6^c} phi(y) |x - y|^{-n-2 sigma} dy`, which bounds
/// `lambda |f_lambda - f_limit|` on `B_3`.
pub fn cutoff_tail_mass(x: &[f64], params: &FracParams, cfg: &QuadConfig) -> Result<Estimate> {
    let density =
        RadialDensity::new(|s| smooth_step(s - 6.0), 6.0, 7.0).with_tail(DensityTail::Terms(vec![(1.0, 0.0)]));
    f_from_density(&density, x, params, cfg)
}

/// `beta = (-f_limit(0))^{-1/(2 sigma)}`.
pub fn beta(params: &FracParams, cfg: &QuadConfig) -> Result<f64> {
    let f0 = f_limit(&vec![0.0; params.n], params, &cfg.tightened(1e-2))?.value;
    if !(f0 < 0.0) {
        return Err(Error::NonConvergent(format!("f_limit(0) = {f0} is not negative")));
    }
    Ok((-f0).powf(-1.0 / (2.0 * params.sigma)))
}

/// Member `v_j` of the sequence together with its scaling data.
#[derive(Debug, Clone, Serialize)]
pub struct MollifiedFamily {
    pub n: usize,
    pub sigma: f64,
    pub j: f64,
    pub beta: f64,
    /// `a = beta j^{-1/(2 sigma)}`, so that `v_j(x) = j^{-1} w_j(a x)`.
    pub scale: f64,
    /// `R_j = 1 / a`; `v_j = 1` on `B_{R_j}`.
    pub r_j: f64,
    #[serde(skip)]
    pub w: ScalarField,
    #[serde(skip)]
    pub v: ScalarField,
}

pub fn make_v_j(j: f64, params: &FracParams, cfg: &QuadConfig) -> Result<MollifiedFamily> {
    make_v_j_with_beta(j, beta(params, cfg)?, params)
}

/// As [`make_v_j`] with a precomputed `beta`.
pub fn make_v_j_with_beta(j: f64, beta: f64, params: &FracParams) -> Result<MollifiedFamily> {
    if !(j >= 1.0) {
        return Err(Error::InvalidParameter(format!("j must be at least 1, got {j}")));
    }
    let w = make_w_lambda(j, params)?;
    let scale = beta * j.powf(-1.0 / (2.0 * params.sigma));
    let v = w.dilated(scale).scaled(1.0 / j).with_label("v-j");
    Ok(MollifiedFamily { n: params.n, sigma: params.sigma, j, beta, scale, r_j: 1.0 / scale, w, v })
}

impl MollifiedFamily {
    /// `beta^{2 sigma} f_j(a x)`, the right-hand side of the scaling identity.
    pub fn scaled_f(&self, x: &[f64], params: &FracParams, cfg: &QuadConfig) -> Result<Estimate> {
        let y: Vec<f64> = x.iter().map(|v| v * self.scale).collect();
        let k = self.beta.powf(2.0 * self.sigma);
        let f = f_lambda(self.j, &y, params, &cfg.tightened(1.0 / k))?;
        Ok(Estimate::new(k * f.value, k * f.err_est))
    }

    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}
