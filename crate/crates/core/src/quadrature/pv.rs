//! Principal-value evaluation of `(-Delta)^sigma u(x)`.
//!
//! Both evaluators work in polar coordinates about `x`. Along each direction
//! `w` the radial integrand is symmetrized,
//! `2u(x) - u(x + rho w) - u(x - rho w)`, which is `O(rho^2)` and removes the
//! principal value. The radial integral is split into
//!
//! * a near piece `[0, p1]` (with `p1 <= delta`) integrated after the
//!   substitution `rho = p1 s^{1/(2-2 sigma)}`, which makes the integrand
//!   bounded at the origin;
//! * a mid piece split exactly where the ray crosses a structural radius of
//!   the field (profile breaks, support edge, tail onset);
//! * a far piece beyond the last structural radius, in closed form when the
//!   tail is known exactly, otherwise by the substitution
//!   `rho = rho0 tau^{-1/kappa}` on `(0, 1]`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec;
use crate::specfun::FracParams;

use super::field::{ScalarField, TailDescriptor};
use super::gauss::{self, compensated_sum, Integral, Tolerance};
use super::{Estimate, FarPolicy, QuadConfig};

const MAX_DIM: usize = 8;
const NEAR_FLOOR: f64 = 1e-4;

/// How a ray integral is closed off.
#[derive(Debug, Clone, Copy)]
pub(crate) enum RayLimit {
    /// Integrate to infinity; `far_start` is where the far treatment begins.
    Whole { far_start: f64, far: FarPart },
    /// Stop at the exit distances from a ball, for sides `+w` and `-w`.
    Ball { exits: [f64; 2] },
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum FarPart {
    /// Closed-form value of `int_{far}^inf (u(x + rho w) + u(x - rho w)) rho^{-1-2 sigma}`.
    Closed(f64),
    /// Mapped quadrature with decay exponent `kappa = 2 sigma + q`.
    Mapped { kappa: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct RayPlan {
    pub g0: f64,
    pub near: f64,
    pub breaks: Vec<f64>,
    pub limit: RayLimit,
}

/// Positive distances `rho` with `|d + rho v| = r`, given `|d|^2 = dd` and
/// `d . v = dv` for a unit vector `v`.
pub(crate) fn sphere_crossings(dd: f64, dv: f64, r: f64, out: &mut Vec<f64>) {
    let disc = dv * dv - dd + r * r;
    if disc < 0.0 {
        return;
    }
    let sq = disc.sqrt();
    let q = -(dv + dv.signum() * sq);
    let (r1, r2) = if q != 0.0 { (q, (dd - r * r) / q) } else { (sq, -sq) };
    let floor = 1e-13 * (r + dd.sqrt());
    for root in [r1, r2] {
        if root > floor {
            out.push(root);
        }
    }
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
    v
}

/// `int_0^inf [2 g0 - u(+) - u(-)] rho^{-1-2 sigma} d rho` (or its restriction
/// to a ball) for one direction. `value(side, rho)` evaluates the field at
/// `x + side * rho * w`.
pub(crate) fn ray_integral<V>(value: &V, plan: &RayPlan, sigma: f64, tol: Tolerance, max_subdiv: usize) -> Integral
where
    V: Fn(f64, f64) -> f64,
{
    let ts = 2.0 * sigma;
    let g0 = plan.g0;
    let sym_end = match plan.limit {
        RayLimit::Whole { far_start, .. } => far_start,
        RayLimit::Ball { exits } => exits[0].min(exits[1]),
    };
    let first_break = plan.breaks.iter().copied().find(|&b| b > 0.0).unwrap_or(f64::INFINITY);
    let p1 = plan.near.min(first_break).min(sym_end);
    let piece_tol = Tolerance::new(tol.abs / 4.0, tol.rel);

    let mu = 1.0 / (2.0 - ts);
    let near_scale = p1.powf(-ts) * mu;
    let near_integrand = |s: f64| {
        let rho = p1 * s.powf(mu);
        (2.0 * g0 - value(1.0, rho) - value(-1.0, rho)) * near_scale * s.powf(-ts * mu - 1.0)
    };
    // Below s_c the second difference is taken as quadratic in rho, which
    // makes the transformed integrand constant and avoids rounding noise.
    let s_c = NEAR_FLOOR.powf(1.0 / mu);
    let floor = s_c * near_integrand(s_c);
    let rest = gauss::integrate(near_integrand, &[s_c, 1.0], piece_tol, max_subdiv);
    let near = Integral {
        value: rest.value + floor,
        error: rest.error + floor.abs() * NEAR_FLOOR * NEAR_FLOOR,
        evaluations: rest.evaluations + 1,
        converged: rest.converged,
    };

    let mid = if sym_end > p1 {
        let mut pts = vec![p1];
        pts.extend(plan.breaks.iter().copied().filter(|&b| b > p1 && b < sym_end));
        pts.push(sym_end);
        gauss::integrate(
            |rho| (2.0 * g0 - value(1.0, rho) - value(-1.0, rho)) * rho.powf(-1.0 - ts),
            &pts,
            piece_tol,
            max_subdiv,
        )
    } else {
        Integral::exact(0.0)
    };

    let mut parts = vec![near, mid];
    match plan.limit {
        RayLimit::Whole { far_start, far } => {
            parts.push(Integral::exact(2.0 * g0 * far_start.powf(-ts) / ts));
            let field_part = far_field(value, far_start, far, ts, piece_tol, max_subdiv);
            parts.push(Integral { value: -field_part.value, ..field_part });
        }
        RayLimit::Ball { exits } => {
            for (side, exit) in [(1.0, exits[0]), (-1.0, exits[1])] {
                if exit > sym_end {
                    let mut pts = vec![sym_end];
                    pts.extend(plan.breaks.iter().copied().filter(|&b| b > sym_end && b < exit));
                    pts.push(exit);
                    parts.push(gauss::integrate(
                        |rho| (g0 - value(side, rho)) * rho.powf(-1.0 - ts),
                        &pts,
                        piece_tol,
                        max_subdiv,
                    ));
                }
            }
        }
    }
    combine(&parts)
}

/// `int_{far_start}^inf (u(+) + u(-)) rho^{-1-2 sigma} d rho`.
fn far_field<V>(value: &V, far_start: f64, far: FarPart, ts: f64, tol: Tolerance, max_subdiv: usize) -> Integral
where
    V: Fn(f64, f64) -> f64,
{
    match far {
        FarPart::Closed(v) => Integral::exact(v),
        FarPart::Mapped { kappa } => {
            let pref = far_start.powf(-ts) / kappa;
            let r = gauss::integrate(
                |tau| {
                    let rho = far_start * tau.powf(-1.0 / kappa);
                    (value(1.0, rho) + value(-1.0, rho)) * tau.powf(ts / kappa - 1.0)
                },
                &[0.0, 1.0],
                Tolerance::new(tol.abs / pref.max(f64::MIN_POSITIVE), tol.rel),
                max_subdiv,
            );
            Integral { value: pref * r.value, error: pref * r.error, ..r }
        }
    }
}

/// One-sided tail `int_{exit}^inf u(x + side rho w) rho^{-1-2 sigma}` summed
/// over both sides; used for tail masses of fields that are not radial about
/// the origin.
pub(crate) fn ray_tail<V>(
    value: &V,
    exits: [f64; 2],
    breaks: &[f64],
    far_start: f64,
    far: FarPart,
    sigma: f64,
    tol: Tolerance,
    max_subdiv: usize,
) -> Integral
where
    V: Fn(f64, f64) -> f64,
{
    let ts = 2.0 * sigma;
    let piece_tol = Tolerance::new(tol.abs / 3.0, tol.rel);
    let mut parts = Vec::new();
    for (side, exit) in [(1.0, exits[0]), (-1.0, exits[1])] {
        if far_start > exit {
            let mut pts = vec![exit];
            pts.extend(breaks.iter().copied().filter(|&b| b > exit && b < far_start));
            pts.push(far_start);
            parts.push(gauss::integrate(|rho| value(side, rho) * rho.powf(-1.0 - ts), &pts, piece_tol, max_subdiv));
        }
    }
    parts.push(far_field(value, far_start, far, ts, piece_tol, max_subdiv));
    combine(&parts)
}

fn combine(parts: &[Integral]) -> Integral {
    Integral {
        value: compensated_sum(parts.iter().map(|p| p.value)),
        error: parts.iter().map(|p| p.error).sum(),
        evaluations: parts.iter().map(|p| p.evaluations).sum(),
        converged: parts.iter().all(|p| p.converged),
    }
}

/// Weighted sum of fields seen from a fixed point; supplies ray values,
/// structural crossings and the far-field treatment.
pub(crate) struct RaySource<'a> {
    terms: Vec<(&'a ScalarField, f64)>,
    x: Vec<f64>,
    offsets: Vec<Vec<f64>>,
    radii: Vec<Vec<f64>>,
}

impl<'a> RaySource<'a> {
    pub(crate) fn new(terms: Vec<(&'a ScalarField, f64)>, x: &[f64]) -> Self {
        let offsets = terms.iter().map(|(f, _)| x.iter().zip(f.anchor()).map(|(a, b)| a - b).collect()).collect();
        let radii = terms.iter().map(|(f, _)| f.split_radii()).collect();
        Self { terms, x: x.to_vec(), offsets, radii }
    }

    pub(crate) fn single(field: &'a ScalarField, x: &[f64]) -> Self {
        Self::new(vec![(field, 1.0)], x)
    }

    pub(crate) fn center_value(&self) -> f64 {
        self.terms.iter().map(|(f, w)| w * f.evaluate(&self.x)).sum()
    }

    pub(crate) fn value(&self, dir: &[f64], side: f64, rho: f64) -> f64 {
        let n = self.x.len();
        let mut buf = [0.0; MAX_DIM];
        for i in 0..n {
            buf[i] = self.x[i] + side * rho * dir[i];
        }
        self.terms.iter().map(|(f, w)| w * f.evaluate(&buf[..n])).sum()
    }

    /// Crossings of structural spheres along `x + rho dir` and `x - rho dir`.
    pub(crate) fn crossings(&self, dir: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        for (off, radii) in self.offsets.iter().zip(&self.radii) {
            let dd: f64 = off.iter().map(|v| v * v).sum();
            let dv: f64 = off.iter().zip(dir).map(|(a, b)| a * b).sum();
            for &r in radii {
                sphere_crossings(dd, dv, r, &mut out);
                sphere_crossings(dd, -dv, r, &mut out);
            }
        }
        sorted_unique(out)
    }

    /// Far-field start and treatment for a single-term source.
    pub(crate) fn far(
        &self,
        dir: &[f64],
        near: f64,
        crossings: &[f64],
        sigma: f64,
        policy: FarPolicy,
    ) -> (f64, FarPart) {
        let ts = 2.0 * sigma;
        let (field, weight) = self.terms[0];
        debug_assert_eq!(self.terms.len(), 1, "far field needs a single field");
        let off = &self.offsets[0];
        let dist = off.iter().map(|v| v * v).sum::<f64>().sqrt();
        let last = crossings.last().copied().unwrap_or(0.0);
        let tail = field.tail();
        if tail.is_exact() {
            let far_start = near.max(last);
            let part = match tail {
                TailDescriptor::CompactSupport { .. } => FarPart::Closed(0.0),
                TailDescriptor::PowerLaw { coefficient, exponent, .. } => {
                    let a = weight * coefficient;
                    if policy == FarPolicy::AnalyticTail && exponent == 0.0 {
                        FarPart::Closed(2.0 * a * far_start.powf(-ts) / ts)
                    } else if policy == FarPolicy::AnalyticTail && dist == 0.0 {
                        let k = ts + exponent;
                        FarPart::Closed(2.0 * a * far_start.powf(-k) / k)
                    } else {
                        FarPart::Mapped { kappa: ts + exponent }
                    }
                }
                TailDescriptor::Bounded { .. } => unreachable!("bounded tails are not exact"),
            };
            let _ = dir;
            (far_start, part)
        } else {
            let far_start = near.max(last).max(dist + tail.onset().max(1.0));
            (far_start, FarPart::Mapped { kappa: ts + tail.decay() })
        }
    }
}

/// Unit vector towards the field anchor (or `e1`) and the distance to it.
fn axis_towards(anchor: &[f64], x: &[f64]) -> (Vec<f64>, f64) {
    let v: Vec<f64> = anchor.iter().zip(x).map(|(a, b)| a - b).collect();
    let d = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    if d > 0.0 {
        (v.iter().map(|t| t / d).collect(), d)
    } else {
        let mut e = vec![0.0; x.len()];
        e[0] = 1.0;
        (e, 0.0)
    }
}

/// Orthonormal completion of a unit vector in R^2 or R^3.
fn complete_basis(axis: &[f64]) -> Vec<Vec<f64>> {
    match axis.len() {
        2 => vec![vec![-axis[1], axis[0]]],
        3 => {
            let helper = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let dot: f64 = helper.iter().zip(axis).map(|(a, b)| a * b).sum();
            let mut b1: Vec<f64> = helper.iter().zip(axis).map(|(h, a)| h - dot * a).collect();
            let nb = b1.iter().map(|t| t * t).sum::<f64>().sqrt();
            b1.iter_mut().for_each(|t| *t /= nb);
            let b2 = vec![
                axis[1] * b1[2] - axis[2] * b1[1],
                axis[2] * b1[0] - axis[0] * b1[2],
                axis[0] * b1[1] - axis[1] * b1[0],
            ];
            vec![b1, b2]
        }
        _ => Vec::new(),
    }
}

/// Polar angles (measured from `axis`) at which a ray from `x` is tangent
/// to a structural sphere of radius `r < dist` about the anchor.
fn tangency_angles(radii: &[f64], dist: f64, upper: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for &r in radii {
        if r < dist && r > 0.0 {
            let t = (r / dist).asin();
            out.push(t);
            out.push(PI - t);
        }
    }
    out.retain(|&t| t > 0.0 && t < upper);
    sorted_unique(out)
}

/// `int_{half sphere} J(w) dw` where `J` is computed per direction by `ray`.
pub(crate) fn half_sphere_integral<J>(
    n: usize,
    axis: &[f64],
    breaks: &[f64],
    tol: Tolerance,
    cfg: &QuadConfig,
    ray: J,
) -> Result<Integral>
where
    J: Fn(&[f64]) -> Integral + Sync + Send,
{
    match n {
        1 => Ok(ray(&[1.0])),
        2 => {
            let perp = &complete_basis(axis)[0];
            let mut pts = vec![0.0];
            pts.extend(breaks.iter().copied().filter(|&t| t > 0.0 && t < PI));
            pts.push(PI);
            let r = gauss::integrate_batched(
                |thetas| {
                    exec::map(cfg.execution, thetas, |&t| {
                        let (s, c) = t.sin_cos();
                        let dir = [c * axis[0] + s * perp[0], c * axis[1] + s * perp[1]];
                        let j = ray(&dir);
                        (j.value, j.error)
                    })
                },
                &pts,
                tol,
                cfg.max_subdiv,
            );
            Ok(r)
        }
        3 => {
            let basis = complete_basis(axis);
            let (b1, b2) = (&basis[0], &basis[1]);
            let mut pts = vec![0.0];
            pts.extend(breaks.iter().copied().filter(|&t| t > 0.0 && t < PI));
            pts.push(PI);
            let inner_tol = Tolerance::new(tol.abs / (10.0 * PI), tol.rel / 10.0);
            let r = gauss::integrate_batched(
                |thetas| {
                    exec::map(cfg.execution, thetas, |&t| {
                        let (st, ct) = t.sin_cos();
                        let inner = gauss::integrate_batched(
                            |phis| {
                                phis.iter()
                                    .map(|&p| {
                                        let (sp, cp) = p.sin_cos();
                                        let dir: Vec<f64> =
                                            (0..3).map(|i| ct * axis[i] + st * (cp * b1[i] + sp * b2[i])).collect();
                                        let j = ray(&dir);
                                        (j.value, j.error)
                                    })
                                    .collect()
                            },
                            &[0.0, PI],
                            inner_tol,
                            cfg.max_subdiv,
                        );
                        (st * inner.value, st * inner.error)
                    })
                },
                &pts,
                tol,
                cfg.max_subdiv,
            );
            Ok(r)
        }
        other => Err(Error::UnsupportedDimension(other)),
    }
}

fn half_sphere_measure(n: usize) -> f64 {
    match n {
        1 => 1.0,
        2 => PI,
        _ => 2.0 * PI,
    }
}

fn check_inputs(field: &ScalarField, x: &[f64], params: &FracParams, cfg: &QuadConfig) -> Result<f64> {
    cfg.validate()?;
    if field.dim() != params.n || x.len() != params.n {
        return Err(Error::InvalidParameter(format!(
            "dimension mismatch: field {}, point {}, params {}",
            field.dim(),
            x.len(),
            params.n
        )));
    }
    if params.n > MAX_DIM {
        return Err(Error::UnsupportedDimension(params.n));
    }
    field.tail().certify(params.sigma)?;
    let margin = field.window_margin(x);
    if !(margin > 0.0) {
        return Err(Error::NonSmoothPoint { margin });
    }
    Ok(cfg.near_radius.min(0.5 * margin))
}

fn finish(total: Integral, params: &FracParams, tol: Tolerance) -> Result<Estimate> {
    let value = params.c * total.value;
    let err_est = params.c * total.error;
    if !total.converged && total.error > tol.target(total.value) {
        return Err(Error::ToleranceNotMet { err_est, tolerance: params.c * tol.target(total.value) });
    }
    Ok(Estimate::new(value, err_est))
}

/// `(-Delta)^sigma u(x)` by symmetrized polar quadrature about `x`.
///
/// Works for any field in dimensions 1 to 3; radial fields in higher
/// dimensions are delegated to [`radial_fraclap`].
pub fn fraclap_pv(field: &ScalarField, x: &[f64], params: &FracParams, cfg: &QuadConfig) -> Result<Estimate> {
    let near = check_inputs(field, x, params, cfg)?;
    let n = params.n;
    if n > 3 {
        if field.is_radial() {
            return radial_fraclap(field, field.distance_to_anchor(x), params, cfg);
        }
        return Err(Error::UnsupportedDimension(n));
    }
    let src = RaySource::single(field, x);
    let g0 = src.center_value();
    let (axis, dist) = axis_towards(field.anchor(), x);
    let ang_breaks = tangency_angles(&field.split_radii(), dist, PI);
    let measure = half_sphere_measure(n);
    let outer = Tolerance::new(cfg.abs_tol / params.c, cfg.rel_tol);
    let inner = Tolerance::new(outer.abs / (10.0 * measure), cfg.rel_tol / 10.0);
    let sigma = params.sigma;
    let total = half_sphere_integral(n, &axis, &ang_breaks, outer, cfg, |dir| {
        let breaks = src.crossings(dir);
        let (far_start, far) = src.far(dir, near, &breaks, sigma, cfg.far_policy);
        let plan = RayPlan { g0, near, breaks, limit: RayLimit::Whole { far_start, far } };
        ray_integral(&|side, rho| src.value(dir, side, rho), &plan, sigma, inner, cfg.max_subdiv)
    })?;
    finish(total, params, outer)
}

/// `c int_{B_R} (g(x) - g(y)) |x - y|^{-n-2 sigma} dy` for `g = sum w_k u_k`,
/// `|x| < R`.
pub(crate) fn pv_ball_integral(
    terms: Vec<(&ScalarField, f64)>,
    x: &[f64],
    radius: f64,
    params: &FracParams,
    cfg: &QuadConfig,
) -> Result<Estimate> {
    let n = params.n;
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm >= radius {
        return Err(Error::PointOutsideBall { norm, radius });
    }
    let mut near = cfg.near_radius.min(0.5 * (radius - norm));
    for (f, _) in &terms {
        let margin = f.window_margin(x);
        if !(margin > 0.0) {
            return Err(Error::NonSmoothPoint { margin });
        }
        near = near.min(0.5 * margin);
    }
    let anchor = terms[0].0.anchor().to_vec();
    let radii: Vec<f64> = terms.iter().flat_map(|(f, _)| f.split_radii()).collect();
    let src = RaySource::new(terms, x);
    let g0 = src.center_value();
    let (axis, dist) = axis_towards(&anchor, x);
    let ang_breaks = tangency_angles(&radii, dist, PI);
    let measure = half_sphere_measure(n);
    let outer = Tolerance::new(cfg.abs_tol / params.c, cfg.rel_tol);
    let inner = Tolerance::new(outer.abs / (10.0 * measure), cfg.rel_tol / 10.0);
    let sigma = params.sigma;
    let xx = norm * norm;
    let total = half_sphere_integral(n, &axis, &ang_breaks, outer, cfg, |dir| {
        let mut breaks = src.crossings(dir);
        let xv: f64 = x.iter().zip(dir).map(|(a, b)| a * b).sum();
        let mut exits = [0.0; 2];
        for (k, dv) in [xv, -xv].into_iter().enumerate() {
            let mut e = Vec::new();
            sphere_crossings(xx, dv, radius, &mut e);
            exits[k] = e.into_iter().fold(0.0, f64::max);
        }
        breaks.retain(|&b| b < exits[0].max(exits[1]));
        let plan = RayPlan { g0, near, breaks, limit: RayLimit::Ball { exits } };
        ray_integral(&|side, rho| src.value(dir, side, rho), &plan, sigma, inner, cfg.max_subdiv)
    })?;
    finish(total, params, outer)
}

/// `c int_{|y| > R} u(y) |x - y|^{-n-2 sigma} dy` by rays from `x`.
pub(crate) fn ray_tail_integral(
    field: &ScalarField,
    x: &[f64],
    radius: f64,
    params: &FracParams,
    cfg: &QuadConfig,
) -> Result<Estimate> {
    let n = params.n;
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let src = RaySource::single(field, x);
    let (axis, dist) = axis_towards(field.anchor(), x);
    let ang_breaks = tangency_angles(&field.split_radii(), dist, PI);
    let measure = half_sphere_measure(n);
    let outer = Tolerance::new(cfg.abs_tol / params.c, cfg.rel_tol);
    let inner = Tolerance::new(outer.abs / (10.0 * measure), cfg.rel_tol / 10.0);
    let sigma = params.sigma;
    let xx = norm * norm;
    let total = half_sphere_integral(n, &axis, &ang_breaks, outer, cfg, |dir| {
        let breaks = src.crossings(dir);
        let xv: f64 = x.iter().zip(dir).map(|(a, b)| a * b).sum();
        let mut exits = [0.0; 2];
        for (k, dv) in [xv, -xv].into_iter().enumerate() {
            let mut e = Vec::new();
            sphere_crossings(xx, dv, radius, &mut e);
            exits[k] = e.into_iter().fold(0.0, f64::max);
        }
        let (far_start, far) = src.far(dir, exits[0].max(exits[1]), &breaks, sigma, cfg.far_policy);
        ray_tail(&|side, rho| src.value(dir, side, rho), exits, &breaks, far_start, far, sigma, inner, cfg.max_subdiv)
    })?;
    finish(total, params, outer)
}

/// Fast path for radial fields: `(-Delta)^sigma u` at distance `r` from the
/// anchor, reduced to an integral over the polar angle `theta` in
/// `[0, pi/2]` with weight `|S^{n-2}| sin^{n-2}(theta)` (or a two-sided line
/// integral when `n = 1`). The angular integral uses Gauss-Legendre rules whose
/// order doubles until two successive orders agree.
pub fn radial_fraclap(field: &ScalarField, r: f64, params: &FracParams, cfg: &QuadConfig) -> Result<Estimate> {
    let profile = field.profile_fn().ok_or(Error::NotRadial)?.clone();
    let n = params.n;
    let mut point = field.anchor().to_vec();
    point[0] += r;
    let near = check_inputs(field, &point, params, cfg)?;
    let g0 = profile(r);
    let radii = field.split_radii();
    let sigma = params.sigma;
    let tail = field.tail();
    let rr = r * r;

    let ray_at = |cos_t: f64, tol: Tolerance| -> Integral {
        let dv = r * cos_t;
        let mut breaks = Vec::new();
        for &rk in &radii {
            sphere_crossings(rr, dv, rk, &mut breaks);
            sphere_crossings(rr, -dv, rk, &mut breaks);
        }
        let breaks = sorted_unique(breaks);
        let last = breaks.last().copied().unwrap_or(0.0);
        let ts = 2.0 * sigma;
        let (far_start, far) = if tail.is_exact() {
            let far_start = near.max(last);
            let part = match tail {
                TailDescriptor::PowerLaw { coefficient, exponent, .. } => {
                    if cfg.far_policy == FarPolicy::AnalyticTail && exponent == 0.0 {
                        FarPart::Closed(2.0 * coefficient * far_start.powf(-ts) / ts)
                    } else if cfg.far_policy == FarPolicy::AnalyticTail && r == 0.0 {
                        let k = ts + exponent;
                        FarPart::Closed(2.0 * coefficient * far_start.powf(-k) / k)
                    } else {
                        FarPart::Mapped { kappa: ts + exponent }
                    }
                }
                _ => FarPart::Closed(0.0),
            };
            (far_start, part)
        } else {
            (near.max(last).max(r + tail.onset().max(1.0)), FarPart::Mapped { kappa: ts + tail.decay() })
        };
        let plan = RayPlan { g0, near, breaks, limit: RayLimit::Whole { far_start, far } };
        let value = |side: f64, rho: f64| profile((rr + 2.0 * side * rho * dv + rho * rho).max(0.0).sqrt());
        ray_integral(&value, &plan, sigma, tol, cfg.max_subdiv)
    };

    let outer = Tolerance::new(cfg.abs_tol / params.c, cfg.rel_tol);
    if n == 1 {
        return finish(ray_at(1.0, outer), params, outer);
    }
    let weight = params.equator_area();
    let inner = Tolerance::new(outer.abs / (10.0 * weight * PI), cfg.rel_tol / 10.0);
    let mut pts = vec![0.0];
    pts.extend(tangency_angles(&radii, r, PI / 2.0).into_iter().filter(|&t| t < PI / 2.0));
    pts.push(PI / 2.0);
    let seg_tol = Tolerance::new(outer.abs / (weight * pts.len() as f64), cfg.rel_tol);
    let mut parts = Vec::new();
    for w in pts.windows(2) {
        let seg = gauss::gauss_doubling_batched(
            |thetas| {
                exec::map(cfg.execution, thetas, |&t| {
                    let j = ray_at(t.cos(), inner);
                    let s = t.sin().powi(n as i32 - 2);
                    (s * j.value, s * j.error)
                })
            },
            w[0],
            w[1],
            seg_tol,
            8,
            1024,
        );
        parts.push(seg);
    }
    let total = combine(&parts);
    let total = Integral { value: weight * total.value, error: weight * total.error, ..total };
    finish(total, params, outer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::field::SmoothWindow;

    fn poisson(n: usize) -> ScalarField {
        ScalarField::radial(
            n,
            |r| 1.0 / (1.0 + r * r),
            TailDescriptor::PowerLaw { coefficient: 1.0, exponent: 2.0, onset: 1.0, exact: false },
        )
        .with_nonneg(true)
    }

    #[test]
    fn crossings_are_stable() {
        let mut out = Vec::new();
        sphere_crossings(0.0, 0.0, 3.0, &mut out);
        assert_eq!(out, vec![3.0]);
        out.clear();
        sphere_crossings(4.0, 1.0, 3.0, &mut out); // |d| = 2, d.v = 1
                                                   // rho^2 + 2 rho - 5 = 0
        assert!((out[0] - (-1.0 + 6f64.sqrt())).abs() < 1e-15);
        out.clear();
        sphere_crossings(100.0, -10.0, 1.0, &mut out); // passes through the ball
        out.sort_by(f64::total_cmp);
        assert!((out[0] - 9.0).abs() < 1e-12 && (out[1] - 11.0).abs() < 1e-12);
    }

    #[test]
    fn constant_field_is_zero() {
        for n in 1..=3 {
            let p = FracParams::new(n, 0.4).unwrap();
            let f = ScalarField::constant(n, 7.0);
            let x = vec![0.3; n];
            let v = fraclap_pv(&f, &x, &p, &QuadConfig::default()).unwrap();
            assert!(v.value.abs() < 1e-12, "n={n}: {v:?}");
        }
    }

    #[test]
    fn poisson_kernel_half_laplacian() {
        let p = FracParams::new(1, 0.5).unwrap();
        let f = poisson(1);
        for x in [0.0, 0.5, 2.0] {
            let v = fraclap_pv(&f, &[x], &p, &QuadConfig::default()).unwrap();
            let want = (1.0 - x * x) / (1.0 + x * x).powi(2);
            assert!(((v.value - want) / want).abs() < 1e-7, "x={x}: {} vs {want}", v.value);
        }
    }

    #[test]
    fn bubble_above_half() {
        for (n, s) in [(1usize, 0.75), (2, 0.75), (1, 0.9)] {
            let p = FracParams::new(n, s).unwrap();
            let e = 0.5 * (n as f64 - 2.0 * s);
            let f = ScalarField::radial(
                n,
                move |r| (1.0 + r * r).powf(-e),
                TailDescriptor::PowerLaw {
                    coefficient: 2f64.powf(e.abs()),
                    exponent: 2.0 * e,
                    onset: 1.0,
                    exact: false,
                },
            );
            let k = 2f64.powf(2.0 * s) * crate::specfun::gamma(0.5 * (n as f64 + 2.0 * s)) / crate::specfun::gamma(e);
            for t in [0.0, 0.7, 1.5] {
                let mut x = vec![0.0; n];
                x[0] = t;
                let v = fraclap_pv(&f, &x, &p, &QuadConfig::default()).unwrap().value;
                let want = k * (1.0 + t * t).powf(-0.5 * (n as f64 + 2.0 * s));
                assert!(((v - want) / want).abs() < 1e-7, "n={n} s={s} t={t}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn indicator_exterior_matches_closed_form() {
        for (n, s) in [(1, 0.5), (2, 0.3), (3, 0.7)] {
            let p = FracParams::new(n, s).unwrap();
            let f = ScalarField::radial(
                n,
                |r| if r <= 3.0 { 0.0 } else { 1.0 },
                TailDescriptor::PowerLaw { coefficient: 1.0, exponent: 0.0, onset: 3.0, exact: true },
            )
            .with_breaks(vec![3.0])
            .with_window(SmoothWindow::Ball { radius: 3.0 });
            let want = -p.c * p.sphere_area / (2.0 * s * 3f64.powf(2.0 * s));
            let mut x = vec![0.0; n];
            let v = fraclap_pv(&f, &x, &p, &QuadConfig::default()).unwrap();
            assert!(((v.value - want) / want).abs() < 1e-10, "n={n}");
            x[0] = 1.0;
            let off = fraclap_pv(&f, &x, &p, &QuadConfig::default()).unwrap();
            assert!(off.value < want, "moving towards the jump increases the magnitude");
            let rad = radial_fraclap(&f, 1.0, &p, &QuadConfig::default()).unwrap();
            assert!(((rad.value - off.value) / off.value).abs() < 1e-7, "n={n}: {rad:?} vs {off:?}");
        }
    }

    #[test]
    fn non_smooth_point_rejected() {
        let p = FracParams::new(1, 0.5).unwrap();
        let f = ScalarField::constant(1, 1.0).with_window(SmoothWindow::Ball { radius: 1.0 });
        assert!(matches!(fraclap_pv(&f, &[1.5], &p, &QuadConfig::default()), Err(Error::NonSmoothPoint { .. })));
    }

    #[test]
    fn divergent_tail_rejected() {
        let p = FracParams::new(1, 0.25).unwrap();
        let f = ScalarField::radial(
            1,
            |r| (1.0 + r).powf(0.6),
            TailDescriptor::PowerLaw { coefficient: 1.0, exponent: -0.6, onset: 1.0, exact: false },
        );
        assert!(matches!(fraclap_pv(&f, &[0.0], &p, &QuadConfig::default()), Err(Error::DivergentTail(_))));
    }

    #[test]
    fn radial_requires_profile() {
        let p = FracParams::new(2, 0.5).unwrap();
        let f = ScalarField::general(2, |x| x[0], TailDescriptor::Bounded { bound: 1.0 });
        assert_eq!(radial_fraclap(&f, 0.0, &p, &QuadConfig::default()), Err(Error::NotRadial));
    }

    #[test]
    fn exhausted_subdivisions_reported() {
        let p = FracParams::new(2, 0.5).unwrap();
        let f = poisson(2);
        let cfg = QuadConfig { rel_tol: 1e-15, abs_tol: 1e-18, max_subdiv: 1, ..QuadConfig::default() };
        assert!(matches!(fraclap_pv(&f, &[0.3, 0.1], &p, &cfg), Err(Error::ToleranceNotMet { .. })));
    }
}
