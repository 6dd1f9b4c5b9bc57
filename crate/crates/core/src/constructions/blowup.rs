//! The blow-up family `u_lambda` with prescribed function
//! `K_lambda = (-Delta)^sigma u_lambda / u_lambda^p`, the choice of the outer
//! radius `R`, derivative bounds of `K_lambda` on `B_2` and the rescaling by
//! `delta0` that moves the critical point of `K_lambda` out of the unit ball.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::cutoff::smooth_step;
use crate::error::{Error, Result};
use crate::exec;
use crate::quadrature::kernel::{radial_moment, sphere_second_moments};
use crate::quadrature::{
    fraclap_pv, kernel_integral, kernel_moments, richardson_derivative, DensityTail, Estimate, QuadConfig,
    RadialDensity, ScalarField, TailDescriptor,
};
use crate::specfun::{weighted_tail_constant, FracParams};

/// Outcome of [`choose_r`]: the radius and the slack of both conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RChoice {
    pub r: f64,
    /// `gamma 6^{-2 sigma} / 2` minus the left side of the far-field condition.
    pub margin_a: f64,
    /// Left side minus `4^{-2 sigma - 3}` of the Hessian condition.
    pub margin_b: f64,
}

fn check_blowup_params(params: &FracParams, q: f64, lambda: f64) -> Result<()> {
    if !(lambda >= 1.0) {
        return Err(Error::InvalidParameter(format!("lambda must be at least 1, got {lambda}")));
    }
    if !(q > -2.0 * params.sigma) {
        return Err(Error::DivergentTail(format!("q = {q} must exceed -2 sigma = {}", -2.0 * params.sigma)));
    }
    Ok(())
}

/// Slack of the far-field condition that keeps `K_lambda` in its window.
pub fn condition_a_margin(params: &FracParams, p: f64, q: f64, lambda: f64, r: f64) -> Result<f64> {
    let ts = 2.0 * params.sigma;
    let g = params.gamma_tail;
    let gq = weighted_tail_constant(params.n, params.sigma, q)?;
    let k = 2f64.powf(params.kernel_exponent());
    let lhs = g * (r - 2.0).powf(-ts)
        + k * g * (lambda.powf(1.0 - p) + 1.0) * r.powf(-ts)
        + k * gq * lambda.powf(-p) * r.powf(-ts - q);
    Ok(g * 6f64.powf(-ts) / 2.0 - lhs)
}

/// Slack of the condition that keeps the Hessian of `K_lambda` at the origin
/// negative definite.
pub fn condition_b_margin(params: &FracParams, p: f64, lambda: f64, r: f64) -> f64 {
    let e = -2.0 * params.sigma - 2.0;
    4f64.powf(e) - (1.0 + lambda.powf(1.0 - p)) * r.powf(e) - 4f64.powf(e - 1.0)
}

/// Smallest `R > 9` satisfying both conditions, to absolute accuracy `tol`.
pub fn choose_r(params: &FracParams, p: f64, q: f64, lambda: f64, tol: f64) -> Result<RChoice> {
    check_blowup_params(params, q, lambda)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let holds = |r: f64| -> Result<bool> {
        Ok(condition_a_margin(params, p, q, lambda, r)? >= 0.0 && condition_b_margin(params, p, lambda, r) >= 0.0)
    };
    let finish = |r: f64| -> Result<RChoice> {
        Ok(RChoice {
            r,
            margin_a: condition_a_margin(params, p, q, lambda, r)?,
            margin_b: condition_b_margin(params, p, lambda, r),
        })
    };
    let mut lo = 9.0;
    if holds(lo)? {
        return finish(lo + tol);
    }
    let mut hi = 18.0;
    while !holds(hi)? {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NonConvergent("no admissible radius found".into()));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    finish(hi)
}

/// Numerical bounds on the derivatives of `K_lambda` over a `lambda` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeBounds {
    /// `max |grad K| + |hess K| + |grad^3 K|` over the `B_2` sample grid.
    pub c3: f64,
    /// `min` smallest eigenvalue of `-hess K(0)`.
    pub c4: f64,
    pub lambdas: Vec<f64>,
    pub c3_per_lambda: Vec<f64>,
    pub c4_per_lambda: Vec<f64>,
}

/// Blow-up family at one `lambda`. Constants are `None` until computed.
#[derive(Debug, Clone, Serialize)]
pub struct BlowupFamily {
    pub n: usize,
    pub sigma: f64,
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub r: f64,
    /// `3 c gamma`: lower window constant.
    pub c1: f64,
    /// `c gamma 6^{-2 sigma} / 2`: upper window constant.
    pub c2: f64,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub c5: Option<f64>,
    pub delta0: Option<f64>,
    #[serde(skip)]
    pub params: FracParams,
    #[serde(skip)]
    pub u_lambda: ScalarField,
    #[serde(skip)]
    pub u_tilde: Option<ScalarField>,
}

/// `u_lambda`: `lambda` on `B_3`, rising to `lambda + lambda^p` across
/// `3 < |x| <= 4`, flat up to `R`, then blended into `|x|^{-q}` by `R + 1`.
pub fn make_u_lambda(params: &FracParams, p: f64, q: f64, lambda: f64) -> Result<BlowupFamily> {
    check_blowup_params(params, q, lambda)?;
    let r = choose_r(params, p, q, lambda, 1e-9)?.r;
    let top = lambda + lambda.powf(p);
    let profile = move |s: f64| {
        if s <= 3.0 {
            lambda
        } else if s <= 4.0 {
            lambda + lambda.powf(p) * smooth_step(s - 3.0)
        } else if s <= r {
            top
        } else if s <= r + 1.0 {
            let phi = smooth_step(s - r);
            (1.0 - phi) * top + phi * s.powf(-q)
        } else {
            s.powf(-q)
        }
    };
    let u = ScalarField::radial(
        params.n,
        profile,
        TailDescriptor::PowerLaw { coefficient: 1.0, exponent: q, onset: r + 1.0, exact: true },
    )
    .with_breaks(vec![3.0, 4.0, r, r + 1.0])
    .with_nonneg(true)
    .with_label("u-lambda");
    let cg = params.c * params.gamma_tail;
    Ok(BlowupFamily {
        n: params.n,
        sigma: params.sigma,
        p,
        q,
        lambda,
        r,
        c1: 3.0 * cg,
        c2: cg * 6f64.powf(-2.0 * params.sigma) / 2.0,
        c3: None,
        c4: None,
        c5: None,
        delta0: None,
        params: *params,
        u_lambda: u,
        u_tilde: None,
    })
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl BlowupFamily {
    /// `c^{-1} K_lambda` on `B_3` is the kernel integral of this density.
    pub fn k_density(&self) -> RadialDensity {
        let (lambda, p, q, r) = (self.lambda, self.p, self.q, self.r);
        let a = lambda.powf(1.0 - p);
        let b = lambda.powf(-p);
        RadialDensity::new(
            move |s| {
                if s <= 4.0 {
                    -smooth_step(s - 3.0)
                } else if s <= r {
                    -1.0
                } else {
                    let phi = smooth_step(s - r);
                    a * phi + phi - 1.0 - b * phi * s.powf(-q)
                }
            },
            3.0,
            r + 1.0,
        )
        .with_breaks(vec![4.0, r])
        .with_tail(DensityTail::Terms(vec![(a, 0.0), (-b, q)]))
    }

    /// Densities of the four Hessian terms at the origin.
    fn e_densities(&self) -> [RadialDensity; 4] {
        let (lambda, p, q, r) = (self.lambda, self.p, self.q, self.r);
        let a = lambda.powf(1.0 - p);
        let b = lambda.powf(-p);
        [
            RadialDensity::new(|s| -smooth_step(s - 3.0), 3.0, 4.0),
            RadialDensity::new(|_| -1.0, 4.0, r),
            RadialDensity::new(move |s| a * smooth_step(s - r), r, r + 1.0)
                .with_tail(DensityTail::Terms(vec![(a, 0.0)])),
            RadialDensity::new(
                move |s| {
                    let phi = smooth_step(s - r);
                    -(1.0 - phi + b * phi * s.powf(-q))
                },
                r,
                r + 1.0,
            )
            .with_tail(DensityTail::Terms(vec![(-b, q)])),
        ]
    }

    /// `delta0^q u_lambda(delta0 (x + 4 e1))` once `delta0` is known.
    pub fn u_tilde(&self) -> Option<&ScalarField> {
        self.u_tilde.as_ref()
    }

    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

/// `K_lambda(x)` on `B_3` from the three integrals supported outside `B_3`.
pub fn k_lambda_b2(family: &BlowupFamily, x: &[f64], cfg: &QuadConfig) -> Result<Estimate> {
    let params = &family.params;
    let local = QuadConfig { abs_tol: cfg.abs_tol / params.c, ..*cfg };
    let v = kernel_integral(&family.k_density(), x, params, &local)?;
    Ok(Estimate::new(params.c * v.value, params.c * v.err_est))
}

/// `K_lambda(x) = (-Delta)^sigma u_lambda(x) / u_lambda(x)^p` by the general
/// principal-value evaluator.
pub fn k_lambda_general(family: &BlowupFamily, x: &[f64], cfg: &QuadConfig) -> Result<Estimate> {
    let up = family.u_lambda.evaluate(x).powf(family.p);
    let local = QuadConfig { abs_tol: cfg.abs_tol * up, ..*cfg };
    let v = fraclap_pv(&family.u_lambda, x, &family.params, &local)?;
    Ok(Estimate::new(v.value / up, v.err_est / up))
}

/// `K_lambda(x)`, using the fast path on `B_3`.
pub fn k_lambda_eval(family: &BlowupFamily, x: &[f64], cfg: &QuadConfig) -> Result<Estimate> {
    if norm(x) < 3.0 {
        k_lambda_b2(family, x, cfg)
    } else {
        k_lambda_general(family, x, cfg)
    }
}

/// Gradient and Hessian of `K_lambda` at `x` in `B_3`.
pub fn k_derivatives(family: &BlowupFamily, x: &[f64], cfg: &QuadConfig) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let params = &family.params;
    let local = QuadConfig { abs_tol: cfg.abs_tol / params.c, ..*cfg };
    let m = kernel_moments(&family.k_density(), x, params, &local)?;
    let c = params.c;
    Ok((
        m.gradient.iter().map(|v| c * v).collect(),
        m.hessian.iter().map(|row| row.iter().map(|v| c * v).collect()).collect(),
    ))
}

/// The four terms `E_l` with `hess K_lambda(0) = c (n + 2 sigma) sum_l E_l`,
/// each from its radial moment and a quadrature of `w_i w_j` over the sphere.
pub fn hessian_terms_at_origin(family: &BlowupFamily, cfg: &QuadConfig) -> Result<[Vec<Vec<f64>>; 4]> {
    let params = &family.params;
    let n = params.n;
    let m = params.kernel_exponent();
    let moments = sphere_second_moments(n)?;
    let dens = family.e_densities();
    let mut out: [Vec<Vec<f64>>; 4] = Default::default();
    for (slot, d) in out.iter_mut().zip(dens.iter()) {
        let radial = radial_moment(d, n, m + 2.0, cfg)?.value;
        *slot = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let delta = if i == j { params.sphere_area } else { 0.0 };
                        radial * ((m + 2.0) * moments[i][j] - delta)
                    })
                    .collect()
            })
            .collect();
    }
    Ok(out)
}

fn frobenius(rows: &[Vec<f64>]) -> f64 {
    rows.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Sample points of `B_2` used for derivative bounds: radii along `e1` and,
/// for `n >= 2`, along the diagonal.
pub fn b2_sample_grid(n: usize) -> Vec<Vec<f64>> {
    let radii = [0.0, 0.4, 0.8, 1.2, 1.6, 1.95];
    let mut pts = Vec::new();
    for &r in &radii {
        let mut x = vec![0.0; n];
        x[0] = r;
        pts.push(x);
        if n >= 2 && r > 0.0 {
            pts.push(vec![r / (n as f64).sqrt(); n]);
        }
    }
    pts
}

/// `|grad K| + |hess K| + |grad^3 K|` at `x`, third derivatives by Richardson
/// differences of the kernel Hessian.
pub fn derivative_sum(family: &BlowupFamily, x: &[f64], cfg: &QuadConfig) -> Result<f64> {
    let n = family.n;
    let (g, h) = k_derivatives(family, x, cfg)?;
    let mut third = 0.0;
    for k in 0..n {
        let failure = std::cell::RefCell::new(None);
        let d = richardson_derivative(
            |t| {
                let mut y = x.to_vec();
                y[k] += t;
                match k_derivatives(family, &y, cfg) {
                    Ok((_, hh)) => hh.into_iter().flatten().collect(),
                    Err(e) => {
                        *failure.borrow_mut() = Some(e);
                        vec![0.0; n * n]
                    }
                }
            },
            0.0,
            0.05,
            cfg.richardson_steps.min(4),
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        third += d.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(norm(&g) + frobenius(&h) + third.sqrt())
}

/// Smallest eigenvalue of `-hess K_lambda(0)`.
pub fn hessian_gap_at_origin(family: &BlowupFamily, cfg: &QuadConfig) -> Result<f64> {
    let n = family.n;
    let (_, h) = k_derivatives(family, &vec![0.0; n], cfg)?;
    let mat = DMatrix::from_fn(n, n, |i, j| -h[i][j]);
    let eig = SymmetricEigen::new(mat);
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// `c3` and `c4` over a grid of `lambda` values.
pub fn estimate_derivative_bounds(
    params: &FracParams,
    p: f64,
    q: f64,
    lambdas: &[f64],
    cfg: &QuadConfig,
) -> Result<DerivativeBounds> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("lambda grid is empty".into()));
    }
    let grid = b2_sample_grid(params.n);
    let mut c3s = Vec::new();
    let mut c4s = Vec::new();
    for &lambda in lambdas {
        let fam = make_u_lambda(params, p, q, lambda)?;
        let sums = exec::try_map(cfg.execution, &grid, |x| derivative_sum(&fam, x, cfg))?;
        c3s.push(sums.into_iter().fold(0.0, f64::max));
        c4s.push(hessian_gap_at_origin(&fam, cfg)?);
    }
    Ok(DerivativeBounds {
        c3: c3s.iter().copied().fold(0.0, f64::max),
        c4: c4s.iter().copied().fold(f64::INFINITY, f64::min),
        lambdas: lambdas.to_vec(),
        c3_per_lambda: c3s,
        c4_per_lambda: c4s,
    })
}

/// Sample points of the closed ball `B_{2 delta0}(4 delta0 e1)`.
pub fn shifted_ball_grid(n: usize, delta0: f64) -> Vec<Vec<f64>> {
    let mut center = vec![0.0; n];
    center[0] = 4.0 * delta0;
    let mut pts = vec![center.clone()];
    for frac in [0.5, 1.0] {
        for k in 0..n {
            for sgn in [1.0, -1.0] {
                let mut x = center.clone();
                x[k] += sgn * frac * 2.0 * delta0;
                pts.push(x);
            }
        }
        if n >= 2 {
            let d = frac * 2.0 * delta0 / (n as f64).sqrt();
            for sgn in [1.0, -1.0] {
                pts.push(center.iter().map(|c| c + sgn * d).collect());
            }
        }
    }
    pts
}

/// Sets `delta0 = min(1/8, c4 / (6 c3))` and `c5 = c4 delta0`, checks
/// `|grad K_lambda| >= c5` on the shifted ball and builds the rescaled field.
pub fn delta0_and_rescale(family: &BlowupFamily, bounds: &DerivativeBounds, cfg: &QuadConfig) -> Result<BlowupFamily> {
    if !(bounds.c3 > 0.0 && bounds.c4 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "derivative bounds must be positive (c3 = {}, c4 = {})",
            bounds.c3, bounds.c4
        )));
    }
    let n = family.n;
    let delta0 = (1.0 / 8.0f64).min(bounds.c4 / (6.0 * bounds.c3));
    let c5 = bounds.c4 * delta0;
    let grid = shifted_ball_grid(n, delta0);
    let grads = exec::try_map(cfg.execution, &grid, |x| k_derivatives(family, x, cfg).map(|(g, _)| norm(&g)))?;
    let min_grad = grads.into_iter().fold(f64::INFINITY, f64::min);
    if min_grad < c5 {
        return Err(Error::DeltaSearchFailed { min_grad, c5 });
    }
    let mut shift = vec![0.0; n];
    shift[0] = -4.0;
    let u_tilde =
        family.u_lambda.dilated(delta0).translated(&shift).scaled(delta0.powf(family.q)).with_label("u-tilde");
    Ok(BlowupFamily {
        c3: Some(bounds.c3),
        c4: Some(bounds.c4),
        c5: Some(c5),
        delta0: Some(delta0),
        u_tilde: Some(u_tilde),
        ..family.clone()
    })
}

fn rescaled_point(delta0: f64, x: &[f64]) -> Vec<f64> {
    let mut y: Vec<f64> = x.iter().map(|v| delta0 * v).collect();
    y[0] += 4.0 * delta0;
    y
}

fn require_delta0(family: &BlowupFamily) -> Result<f64> {
    family.delta0.ok_or_else(|| Error::InvalidParameter("delta0 has not been computed for this family".into()))
}

/// `K~_lambda(x) = delta0^{q + 2 sigma - p q} K_lambda(delta0 (x + 4 e1))`.
pub fn k_tilde(family: &BlowupFamily, x: &[f64], cfg: &QuadConfig) -> Result<Estimate> {
    let d = require_delta0(family)?;
    let k = d.powf(family.q + 2.0 * family.sigma - family.p * family.q);
    let v = k_lambda_eval(family, &rescaled_point(d, x), cfg)?;
    Ok(Estimate::new(k * v.value, k * v.err_est))
}

/// Gradient and Hessian of `K~_lambda` at `x`.
pub fn k_tilde_derivatives(family: &BlowupFamily, x: &[f64], cfg: &QuadConfig) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let d = require_delta0(family)?;
    let k = d.powf(family.q + 2.0 * family.sigma - family.p * family.q);
    let (g, h) = k_derivatives(family, &rescaled_point(d, x), cfg)?;
    Ok((
        g.iter().map(|v| k * d * v).collect(),
        h.iter().map(|row| row.iter().map(|v| k * d * d * v).collect()).collect(),
    ))
}

/// Both sides of `(-Delta)^sigma u~ = K~ u~^p` at `x`: the principal-value
/// evaluation of the rescaled field and the rescaled prescribed function.
pub fn rescaled_equation_sides(family: &BlowupFamily, x: &[f64], cfg: &QuadConfig) -> Result<(Estimate, Estimate)> {
    let ut =
        family.u_tilde.as_ref().ok_or_else(|| Error::InvalidParameter("rescaled field has not been built".into()))?;
    let kt = k_tilde(family, x, cfg)?;
    let up = ut.evaluate(x).powf(family.p);
    let rhs = Estimate::new(kt.value * up, kt.err_est * up);
    let local = QuadConfig { abs_tol: cfg.abs_tol.min(1e-2 * cfg.rel_tol * rhs.value.abs()), ..*cfg };
    let lhs = fraclap_pv(ut, x, &family.params, &local)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p1() -> FracParams {
        FracParams::new(1, 0.5).unwrap()
    }

    #[test]
    fn choose_r_reference_case() {
        let p = p1();
        let c = choose_r(&p, 1.0, 1.0, 1.0, 1e-9).unwrap();
        assert!(c.r > 100.0 && c.r <= 112.0, "{c:?}");
        assert!(c.margin_a >= 0.0 && c.margin_b >= 0.0);
        assert!(condition_a_margin(&p, 1.0, 1.0, 1.0, 100.0).unwrap() < 0.0);
        assert!(condition_a_margin(&p, 1.0, 1.0, 1.0, 112.0).unwrap() >= 0.0);
        let back = c.r - 1e-8;
        assert!(
            condition_a_margin(&p, 1.0, 1.0, 1.0, back).unwrap() < 0.0 || condition_b_margin(&p, 1.0, 1.0, back) < 0.0
        );
    }

    #[test]
    fn condition_b_alone_is_mild() {
        let p = p1();
        // R^3 >= 2 / (3 / 256)
        let edge = (2.0f64 * 256.0 / 3.0).cbrt();
        assert!(condition_b_margin(&p, 1.0, 1.0, edge * 1.001) > 0.0);
        assert!(condition_b_margin(&p, 1.0, 1.0, edge * 0.999) < 0.0);
    }

    #[test]
    fn u_lambda_branches() {
        let p = p1();
        let f = make_u_lambda(&p, 3.0, 1.0, 10.0).unwrap();
        let u = &f.u_lambda;
        assert_eq!(u.evaluate(&[2.5]), 10.0);
        assert_eq!(u.evaluate(&[-3.0]), 10.0);
        assert_eq!(u.evaluate(&[f.r / 2.0]), 1010.0);
        assert_eq!(u.evaluate(&[f.r]), 1010.0);
        let far = f.r + 1.5;
        assert!((u.evaluate(&[far]) * far - 1.0).abs() < 1e-15);
        assert!(make_u_lambda(&p, 3.0, -1.5, 1.0).is_err());
        assert!(make_u_lambda(&p, 3.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn fast_path_matches_general_path() {
        let p = p1();
        let cfg = QuadConfig::default();
        for lambda in [1.0, 10.0] {
            let f = make_u_lambda(&p, 3.0, 1.0, lambda).unwrap();
            for x in [0.0, 0.9, -1.7] {
                let a = k_lambda_b2(&f, &[x], &cfg).unwrap().value;
                let b = k_lambda_general(&f, &[x], &cfg).unwrap().value;
                assert!(((a - b) / a).abs() < 1e-7, "lambda={lambda} x={x}: {a} vs {b}");
                assert!(a >= -6.0 / PI && a <= -1.0 / (6.0 * PI));
            }
        }
    }

    #[test]
    fn hessian_terms_reproduce_hessian() {
        for n in [1, 2] {
            let p = FracParams::new(n, 0.5).unwrap();
            let cfg = QuadConfig::default();
            let f = make_u_lambda(&p, 3.0, 1.0, 10.0).unwrap();
            let e = hessian_terms_at_origin(&f, &cfg).unwrap();
            let (_, h) = k_derivatives(&f, &vec![0.0; n], &cfg).unwrap();
            let m = p.kernel_exponent();
            for i in 0..n {
                for j in 0..n {
                    let sum: f64 = e.iter().map(|t| t[i][j]).sum();
                    assert!((p.c * m * sum - h[i][j]).abs() < 1e-8 * h[0][0].abs());
                }
                let e2 = -p.ball_volume * (4f64.powf(-3.0) - f.r.powf(-3.0));
                assert!(((e[1][i][i] - e2) / e2).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rescaling_requires_delta0() {
        let f = make_u_lambda(&p1(), 3.0, 1.0, 1.0).unwrap();
        assert!(k_tilde(&f, &[0.0], &QuadConfig::default()).is_err());
    }

    #[test]
    fn delta_search_failure_is_reported() {
        let p = p1();
        let f = make_u_lambda(&p, 3.0, 1.0, 1.0).unwrap();
        let gap = hessian_gap_at_origin(&f, &QuadConfig::default()).unwrap();
        // an overstated c4 makes c5 unreachable
        let bounds = DerivativeBounds {
            c3: 1e-3,
            c4: 1e3 * gap,
            lambdas: vec![1.0],
            c3_per_lambda: vec![1e-3],
            c4_per_lambda: vec![1e3 * gap],
        };
        assert!(matches!(
            delta0_and_rescale(&f, &bounds, &QuadConfig::default()),
            Err(Error::DeltaSearchFailed { .. })
        ));
    }
}
