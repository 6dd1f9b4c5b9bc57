//! Integrals of a radial density against the kernel `|x - y|^{-n-2 sigma}`
//! and their derivatives in `x`.
//!
//! For a density `g(|y|)` supported in `|y| >= inner` and `|x| < inner` the
//! kernel is smooth, so derivatives are taken under the integral sign. In
//! polar coordinates about the origin with `t = |x|`, `e = x / t` and
//! `D = s^2 + t^2 - 2 s t cos(theta)`:
//!
//! ```text
//! I(x)       = int g(s) s^{n-1} A0(t, s) ds
//! grad I(x)  = int g(s) s^{n-1} A1(t, s) ds  e
//! hess I(x)  = Aee e e^T + Aperp (I - e e^T)
//! ```
//!
//! with `A0 = W int D^{-m/2} sin^{n-2}`, `W = |S^{n-2}|`, `m = n + 2 sigma`,
//! and `A1`, `Aee`, `Aperp` the corresponding angular averages of the first
//! and second kernel derivatives.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::specfun::FracParams;

use super::field::{ProfileFn, ScalarField, TailDescriptor};
use super::gauss::{self, compensated_sum, GaussLegendre, Integral, Tolerance};
use super::{pv, Estimate, QuadConfig};

/// Behaviour of a [`RadialDensity`] beyond its last break.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityTail {
    /// Zero beyond the onset.
    None,
    /// `sum a s^{-q}` beyond the onset, one `(a, q)` pair per term.
    Terms(Vec<(f64, f64)>),
    /// The profile itself, decaying at least like `s^{-decay}`.
    Profile { decay: f64 },
}

/// A density `g(|y|)` on `|y| >= inner`, piecewise smooth between `breaks`.
#[derive(Clone)]
pub struct RadialDensity {
    profile: ProfileFn,
    inner: f64,
    onset: f64,
    breaks: Vec<f64>,
    tail: DensityTail,
}

impl std::fmt::Debug for RadialDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialDensity")
            .field("inner", &self.inner)
            .field("onset", &self.onset)
            .field("breaks", &self.breaks)
            .field("tail", &self.tail)
            .finish()
    }
}

impl RadialDensity {
    /// Density equal to `profile` on `[inner, onset)` and zero beyond.
    pub fn new<P>(profile: P, inner: f64, onset: f64) -> Self
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { profile: Arc::new(profile), inner, onset: onset.max(inner), breaks: Vec::new(), tail: DensityTail::None }
    }

    /// Interior radii where the profile is not smooth.
    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        let mut b: Vec<f64> = breaks.into_iter().filter(|&r| r > self.inner && r < self.onset).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        self.breaks = b;
        self
    }

    pub fn with_tail(mut self, tail: DensityTail) -> Self {
        self.tail = tail;
        self
    }

    /// Restriction of a field radial about the origin to `|y| >= inner`.
    pub fn from_field(field: &ScalarField, inner: f64) -> Result<Self> {
        let profile = field.profile_fn().ok_or(Error::NotRadial)?.clone();
        if field.anchor().iter().any(|&a| a != 0.0) {
            return Err(Error::NotRadial);
        }
        let breaks = field.split_radii();
        let last = breaks.last().copied().unwrap_or(0.0);
        let (onset, tail) = match field.tail() {
            TailDescriptor::CompactSupport { radius } => (radius.max(inner), DensityTail::None),
            TailDescriptor::PowerLaw { coefficient, exponent, onset, exact: true } => {
                (onset.max(inner), DensityTail::Terms(vec![(coefficient, exponent)]))
            }
            t => (last.max(inner), DensityTail::Profile { decay: t.decay() }),
        };
        Ok(Self { profile: profile.clone(), inner, onset, breaks: Vec::new(), tail }.with_breaks(breaks))
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn evaluate(&self, s: f64) -> f64 {
        if s < self.inner {
            0.0
        } else if s < self.onset {
            (self.profile)(s)
        } else {
            match &self.tail {
                DensityTail::None => 0.0,
                DensityTail::Terms(terms) => terms.iter().map(|(a, q)| a * s.powf(-q)).sum(),
                DensityTail::Profile { .. } => (self.profile)(s),
            }
        }
    }

    fn pieces(&self) -> Vec<f64> {
        let mut pts = vec![self.inner];
        pts.extend(self.breaks.iter().copied());
        pts.push(self.onset);
        pts.dedup();
        pts
    }
}

/// Which derivative [`kernel_derivative_integral`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeOrder {
    Gradient,
    Hessian,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelDerivative {
    Gradient(Vec<f64>),
    Hessian(Vec<Vec<f64>>),
}

/// Value, gradient and Hessian of `x -> int g(|y|) |x - y|^{-n-2 sigma} dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMoments {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
    /// Sum of quadrature error estimates over all computed entries.
    pub err_est: f64,
}

#[derive(Clone, Copy)]
enum Quantity {
    A0,
    A1,
    Aee,
    Aperp,
}

/// Angular kernel averages at fixed `(t, s)`.
struct Angular {
    n: usize,
    m: f64,
    weight: f64,
    nodes: Vec<(f64, f64, f64)>,
}

impl Angular {
    fn new(n: usize, m: f64, weight: f64, order: usize) -> Self {
        let nodes = if n == 1 {
            Vec::new()
        } else {
            GaussLegendre::of_order(order)
                .mapped(0.0, PI)
                .map(|(th, w)| {
                    let (st, ct) = th.sin_cos();
                    (ct, st, w * st.powi(n as i32 - 2))
                })
                .collect()
        };
        Self { n, m, weight, nodes }
    }

    fn eval(&self, q: Quantity, t: f64, s: f64) -> f64 {
        let m = self.m;
        if self.n == 1 {
            return [t - s, t + s]
                .iter()
                .map(|&z| {
                    let a = z.abs();
                    match q {
                        Quantity::A0 => a.powf(-m),
                        Quantity::A1 => -m * z * a.powf(-m - 2.0),
                        Quantity::Aee => m * (m + 1.0) * a.powf(-m - 2.0),
                        Quantity::Aperp => 0.0,
                    }
                })
                .sum();
        }
        let nf = self.n as f64;
        let terms = self.nodes.iter().map(|&(ct, st, w)| {
            let d = s * s + t * t - 2.0 * s * t * ct;
            let base = d.powf(-0.5 * m);
            w * match q {
                Quantity::A0 => base,
                Quantity::A1 => -m * base / d * (t - s * ct),
                Quantity::Aee => {
                    let z = t - s * ct;
                    m * base / (d * d) * ((m + 2.0) * z * z - d)
                }
                Quantity::Aperp => m * base / (d * d) * ((m + 2.0) * s * s * st * st / (nf - 1.0) - d),
            }
        });
        self.weight * compensated_sum(terms)
    }
}

const ANGULAR_START: usize = 16;
const ANGULAR_MAX: usize = 1024;

/// Gauss-Legendre order in the polar angle, doubled until all four angular
/// averages agree at the hardest radius `s`.
fn angular_rule(n: usize, m: f64, weight: f64, t: f64, s: f64) -> Angular {
    if n == 1 || t == 0.0 {
        return Angular::new(n, m, weight, ANGULAR_START);
    }
    let all = |a: &Angular| [Quantity::A0, Quantity::A1, Quantity::Aee, Quantity::Aperp].map(|q| a.eval(q, t, s));
    let mut order = ANGULAR_START;
    let mut rule = Angular::new(n, m, weight, order);
    let mut prev = all(&rule);
    while order < ANGULAR_MAX {
        order *= 2;
        let next_rule = Angular::new(n, m, weight, order);
        let next = all(&next_rule);
        let scale = next.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let agree = prev.iter().zip(&next).all(|(a, b)| (a - b).abs() <= 1e-14 * scale);
        rule = next_rule;
        prev = next;
        if agree {
            break;
        }
    }
    rule
}

struct RadialIntegrator<'a> {
    density: &'a RadialDensity,
    params: &'a FracParams,
    t: f64,
    tol: Tolerance,
    max_subdiv: usize,
}

impl RadialIntegrator<'_> {
    fn integrate(&self, q: Quantity) -> Integral {
        let n = self.params.n;
        let m = self.params.kernel_exponent();
        let weight = self.params.equator_area();
        let t = self.t;
        let dens = self.density;
        let pts = dens.pieces();
        let mut parts = Vec::new();
        let npieces = (pts.len() + 2) as f64;
        let tol = Tolerance::new(self.tol.abs / npieces, self.tol.rel);
        for w in pts.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let rule = angular_rule(n, m, weight, t, w[0]);
            parts.push(gauss::integrate(
                |s| (dens.profile)(s) * s.powi(n as i32 - 1) * rule.eval(q, t, s),
                &[w[0], w[1]],
                tol,
                self.max_subdiv,
            ));
        }
        let onset = dens.onset;
        let rule = angular_rule(n, m, weight, t, onset);
        let two_sigma = 2.0 * self.params.sigma;
        let mapped = |kappa: f64, g: &dyn Fn(f64) -> f64| {
            let pref = onset / kappa;
            gauss::integrate(
                |tau| {
                    if tau <= 0.0 {
                        return 0.0;
                    }
                    let s = onset * tau.powf(-1.0 / kappa);
                    g(s) * s.powi(n as i32 - 1) * rule.eval(q, t, s) * pref * tau.powf(-1.0 / kappa - 1.0)
                },
                &[0.0, 1.0],
                tol,
                self.max_subdiv,
            )
        };
        match &dens.tail {
            DensityTail::None => {}
            DensityTail::Terms(terms) => {
                for &(a, qexp) in terms {
                    if a != 0.0 {
                        parts.push(mapped(two_sigma + qexp, &|s| a * s.powf(-qexp)));
                    }
                }
            }
            DensityTail::Profile { decay } => {
                let profile = dens.profile.clone();
                parts.push(mapped(two_sigma + decay, &move |s| profile(s)));
            }
        }
        Integral {
            value: compensated_sum(parts.iter().map(|p| p.value)),
            error: parts.iter().map(|p| p.error).sum(),
            evaluations: parts.iter().map(|p| p.evaluations).sum(),
            converged: parts.iter().all(|p| p.converged),
        }
    }
}

fn check_tail(density: &RadialDensity, sigma: f64) -> Result<()> {
    let bad = match &density.tail {
        DensityTail::None => None,
        DensityTail::Terms(terms) => terms.iter().find(|(_, q)| *q <= -2.0 * sigma).map(|t| t.1),
        DensityTail::Profile { decay } => (*decay <= -2.0 * sigma).then_some(*decay),
    };
    match bad {
        Some(q) => Err(Error::DivergentTail(format!("density decays like s^-{q}"))),
        None => Ok(()),
    }
}

fn prepare(density: &RadialDensity, x: &[f64], params: &FracParams, cfg: &QuadConfig) -> Result<(f64, Vec<f64>)> {
    cfg.validate()?;
    if x.len() != params.n {
        return Err(Error::InvalidParameter(format!("point has dimension {}, expected {}", x.len(), params.n)));
    }
    check_tail(density, params.sigma)?;
    let t = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if t >= density.inner {
        return Err(Error::SingularKernel { norm: t, inner: density.inner });
    }
    let mut e = vec![0.0; params.n];
    if t > 0.0 {
        e.iter_mut().zip(x).for_each(|(a, b)| *a = b / t);
    } else {
        e[0] = 1.0;
    }
    Ok((t, e))
}

fn finished(r: Integral, tol: Tolerance) -> Result<Integral> {
    if !r.converged && r.error > tol.target(r.value) {
        return Err(Error::ToleranceNotMet { err_est: r.error, tolerance: tol.target(r.value) });
    }
    Ok(r)
}

fn hessian_matrix(e: &[f64], aee: f64, aperp: f64) -> Vec<Vec<f64>> {
    let n = e.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let p = e[i] * e[j];
                    aee * p + aperp * (if i == j { 1.0 } else { 0.0 } - p)
                })
                .collect()
        })
        .collect()
}

fn compute(
    density: &RadialDensity,
    x: &[f64],
    params: &FracParams,
    cfg: &QuadConfig,
    want: &[Quantity],
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let (t, e) = prepare(density, x, params, cfg)?;
    let tol = cfg.tolerance();
    let integ = RadialIntegrator { density, params, t, tol, max_subdiv: cfg.max_subdiv };
    let mut vals = Vec::with_capacity(want.len());
    let mut err = 0.0;
    for &q in want {
        if params.n == 1 && matches!(q, Quantity::Aperp) {
            vals.push(0.0);
            continue;
        }
        let r = finished(integ.integrate(q), tol)?;
        err += r.error;
        vals.push(r.value);
    }
    Ok((vals, e, err))
}

/// Value, gradient and Hessian of `x -> int g(|y|) |x - y|^{-n-2 sigma} dy`
/// for `|x| < inner`.
pub fn kernel_moments(
    density: &RadialDensity,
    x: &[f64],
    params: &FracParams,
    cfg: &QuadConfig,
) -> Result<KernelMoments> {
    let (v, e, err_est) =
        compute(density, x, params, cfg, &[Quantity::A0, Quantity::A1, Quantity::Aee, Quantity::Aperp])?;
    Ok(KernelMoments {
        value: v[0],
        gradient: e.iter().map(|ei| v[1] * ei).collect(),
        hessian: hessian_matrix(&e, v[2], v[3]),
        err_est,
    })
}

/// `int g(|y|) |x - y|^{-n-2 sigma} dy` for `|x| < inner`.
pub fn kernel_integral(density: &RadialDensity, x: &[f64], params: &FracParams, cfg: &QuadConfig) -> Result<Estimate> {
    let (v, _, err) = compute(density, x, params, cfg, &[Quantity::A0])?;
    Ok(Estimate::new(v[0], err))
}

/// Gradient or Hessian of `x -> int g(|y|) |x - y|^{-n-2 sigma} dy`,
/// obtained by integrating the differentiated kernel.
pub fn kernel_derivative_integral(
    density: &RadialDensity,
    x: &[f64],
    order: DerivativeOrder,
    params: &FracParams,
    cfg: &QuadConfig,
) -> Result<KernelDerivative> {
    match order {
        DerivativeOrder::Gradient => {
            let (v, e, _) = compute(density, x, params, cfg, &[Quantity::A1])?;
            Ok(KernelDerivative::Gradient(e.iter().map(|ei| v[0] * ei).collect()))
        }
        DerivativeOrder::Hessian => {
            let (v, e, _) = compute(density, x, params, cfg, &[Quantity::Aee, Quantity::Aperp])?;
            Ok(KernelDerivative::Hessian(hessian_matrix(&e, v[0], v[1])))
        }
    }
}

/// `int_{S^{n-1}} w_i w_j dw` by quadrature in spherical coordinates.
pub(crate) fn sphere_second_moments(n: usize) -> Result<Vec<Vec<f64>>> {
    let order = 64;
    let dirs: Vec<(Vec<f64>, f64)> = match n {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => GaussLegendre::of_order(order).mapped(0.0, 2.0 * PI).map(|(p, w)| (vec![p.cos(), p.sin()], w)).collect(),
        3 => {
            let rule = GaussLegendre::of_order(order);
            let mut out = Vec::new();
            for (th, wt) in rule.mapped(0.0, PI) {
                for (ph, wp) in rule.mapped(0.0, 2.0 * PI) {
                    let (st, ct) = th.sin_cos();
                    out.push((vec![st * ph.cos(), st * ph.sin(), ct], wt * wp * st));
                }
            }
            out
        }
        other => return Err(Error::UnsupportedDimension(other)),
    };
    Ok((0..n).map(|i| (0..n).map(|j| compensated_sum(dirs.iter().map(|(d, w)| w * d[i] * d[j]))).collect()).collect())
}

/// Radial moment `int g(s) s^{n-1} s^{-k} ds` of a density.
pub(crate) fn radial_moment(density: &RadialDensity, n: usize, k: f64, cfg: &QuadConfig) -> Result<Estimate> {
    let pts = density.pieces();
    let tol = cfg.tolerance();
    let mut parts = Vec::new();
    for w in pts.windows(2) {
        if w[1] > w[0] {
            parts.push(gauss::integrate(
                |s| (density.profile)(s) * s.powf(n as f64 - 1.0 - k),
                &[w[0], w[1]],
                tol,
                cfg.max_subdiv,
            ));
        }
    }
    let onset = density.onset;
    let decay_of = |q: f64| k - n as f64 + q;
    match &density.tail {
        DensityTail::None => {}
        DensityTail::Terms(terms) => {
            for &(a, q) in terms {
                let e = decay_of(q);
                if e <= 0.0 {
                    return Err(Error::DivergentTail(format!("moment with exponent {e}")));
                }
                parts.push(Integral::exact(a * onset.powf(-e) / e));
            }
        }
        DensityTail::Profile { decay } => {
            let kappa = decay_of(*decay);
            if kappa <= 0.0 {
                return Err(Error::DivergentTail(format!("moment with exponent {kappa}")));
            }
            parts.push(gauss::integrate(
                |tau| {
                    if tau <= 0.0 {
                        return 0.0;
                    }
                    let s = onset * tau.powf(-1.0 / kappa);
                    (density.profile)(s) * s.powf(n as f64 - 1.0 - k) * onset / kappa * tau.powf(-1.0 / kappa - 1.0)
                },
                &[0.0, 1.0],
                tol,
                cfg.max_subdiv,
            ));
        }
    }
    let r = Integral {
        value: compensated_sum(parts.iter().map(|p| p.value)),
        error: parts.iter().map(|p| p.error).sum(),
        evaluations: 0,
        converged: parts.iter().all(|p| p.converged),
    };
    let r = finished(r, tol)?;
    Ok(Estimate::new(r.value, r.error))
}

/// `c int_{|y| > R} u(y) |x - y|^{-n-2 sigma} dy`.
///
/// Fields radial about the origin use the polar kernel reduction when `x` is
/// well inside the ball; everything else goes through ray quadrature from `x`.
pub fn tail_integral(
    field: &ScalarField,
    x: &[f64],
    radius: f64,
    params: &FracParams,
    cfg: &QuadConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    if field.dim() != params.n || x.len() != params.n {
        return Err(Error::InvalidParameter("dimension mismatch".into()));
    }
    field.tail().certify(params.sigma)?;
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm < radius) {
        return Err(Error::PointOutsideBall { norm, radius });
    }
    if norm <= 0.5 * radius {
        if let Ok(density) = RadialDensity::from_field(field, radius) {
            let tol = Tolerance::new(cfg.abs_tol / params.c, cfg.rel_tol);
            let local = QuadConfig { abs_tol: tol.abs, ..*cfg };
            let est = kernel_integral(&density, x, params, &local)?;
            return Ok(Estimate::new(params.c * est.value, params.c * est.err_est));
        }
    }
    if params.n > 3 {
        return Err(Error::UnsupportedDimension(params.n));
    }
    pv::ray_tail_integral(field, x, radius, params, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, s: f64) -> FracParams {
        FracParams::new(n, s).unwrap()
    }

    fn shell(inner: f64, outer: f64) -> RadialDensity {
        RadialDensity::new(|_| 1.0, inner, outer)
    }

    #[test]
    fn value_at_origin_matches_closed_form() {
        for (n, s) in [(1, 0.5), (2, 0.25), (3, 0.75)] {
            let p = params(n, s);
            let d = shell(3.0, 5.0).with_tail(DensityTail::Terms(vec![(2.0, 0.0)]));
            let v = kernel_integral(&d, &vec![0.0; n], &p, &QuadConfig::default()).unwrap();
            let ts = 2.0 * s;
            let want = p.sphere_area * ((3f64.powf(-ts) - 5f64.powf(-ts)) / ts + 2.0 * 5f64.powf(-ts) / ts);
            assert!(((v.value - want) / want).abs() < 1e-10, "n={n}: {} vs {want}", v.value);
        }
    }

    #[test]
    fn gradient_vanishes_at_origin() {
        let p = params(2, 0.5);
        let d = shell(3.0, 4.0).with_tail(DensityTail::Terms(vec![(1.0, 1.0)]));
        let KernelDerivative::Gradient(g) =
            kernel_derivative_integral(&d, &[0.0, 0.0], DerivativeOrder::Gradient, &p, &QuadConfig::default()).unwrap()
        else {
            panic!("wrong variant")
        };
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for n in 1..=3 {
            let p = params(n, 0.4);
            let d = RadialDensity::new(|s| (s - 3.0).sin() + 2.0, 3.0, 6.0)
                .with_breaks(vec![4.5])
                .with_tail(DensityTail::Terms(vec![(1.5, 0.5), (-0.5, 2.0)]));
            let cfg = QuadConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..QuadConfig::default() };
            let x: Vec<f64> = (0..n).map(|i| 0.7 - 0.4 * i as f64).collect();
            let mom = kernel_moments(&d, &x, &p, &cfg).unwrap();
            let f = |y: &[f64]| kernel_integral(&d, y, &p, &cfg).unwrap().value;
            let g = super::super::richardson_gradient(&f, &x, 0.1, 4);
            let h = super::super::richardson_hessian(&f, &x, 0.1, 4);
            for i in 0..n {
                assert!((g[i] - mom.gradient[i]).abs() < 1e-7 * mom.value, "n={n} grad");
                for j in 0..n {
                    assert!((h[i][j] - mom.hessian[i][j]).abs() < 1e-6 * mom.value, "n={n} hess");
                }
            }
        }
    }

    #[test]
    fn singular_kernel_rejected() {
        let p = params(1, 0.5);
        let d = shell(3.0, 4.0);
        assert!(matches!(kernel_integral(&d, &[3.0], &p, &QuadConfig::default()), Err(Error::SingularKernel { .. })));
    }

    #[test]
    fn sphere_moments_are_isotropic() {
        for n in 1..=3 {
            let p = params(n, 0.5);
            let m = sphere_second_moments(n).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { p.sphere_area / n as f64 } else { 0.0 };
                    assert!((m[i][j] - want).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn tail_of_constant() {
        for n in 1..=3 {
            let p = params(n, 0.3);
            let f = ScalarField::constant(n, 1.0);
            let r = 7.0;
            let v = tail_integral(&f, &vec![0.0; n], r, &p, &QuadConfig::default()).unwrap();
            let want = p.c * p.gamma_tail * r.powf(-0.6);
            assert!(((v.value - want) / want).abs() < 1e-10);
        }
    }

    #[test]
    fn tail_outside_ball_rejected() {
        let p = params(1, 0.5);
        let f = ScalarField::constant(1, 1.0);
        assert!(matches!(
            tail_integral(&f, &[2.0], 2.0, &p, &QuadConfig::default()),
            Err(Error::PointOutsideBall { .. })
        ));
    }
}
