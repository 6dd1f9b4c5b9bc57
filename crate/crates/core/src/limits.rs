//! Tail masses and the limit constant `b`.
//!
//! For nonnegative `u_i -> u` the difference of fractional Laplacians splits
//! as `A_i + E_i + F_i`: a ball part, a tail part of `u` and the tail mass
//! `F_i(x, R) = c int_{B_R^c} u_i(y) |x - y|^{-n-2 sigma} dy`. The constant
//! `b` is the iterated limit of `F_i(0, R)`, first in `i`, then in `R`.

use std::sync::Arc;

use serde::Serialize;

use crate::constructions::blowup::make_u_lambda;
use crate::constructions::mollified::{beta, make_v_j_with_beta};
use crate::error::{Error, Result};
use crate::exec;
use crate::quadrature::pv::pv_ball_integral;
use crate::quadrature::{fraclap_pv, tail_integral, Estimate, QuadConfig, ScalarField};
use crate::specfun::FracParams;

pub type MemberFn = Arc<dyn Fn(f64) -> Result<ScalarField> + Send + Sync>;

/// A sequence of nonnegative fields indexed by a positive real, with its
/// locally uniform limit.
#[derive(Clone)]
pub struct FunctionSequence {
    member: MemberFn,
    limit: Option<ScalarField>,
    label: String,
}

impl std::fmt::Debug for FunctionSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionSequence").field("label", &self.label).field("limit", &self.limit).finish()
    }
}

impl FunctionSequence {
    pub fn new<F>(member: F, limit: ScalarField, label: impl Into<String>) -> Self
    where
        F: Fn(f64) -> Result<ScalarField> + Send + Sync + 'static,
    {
        Self { member: Arc::new(member), limit: Some(limit), label: label.into() }
    }

    /// A sequence without a known limit field; only tail masses are available.
    pub fn without_limit<F>(member: F, label: impl Into<String>) -> Self
    where
        F: Fn(f64) -> Result<ScalarField> + Send + Sync + 'static,
    {
        Self { member: Arc::new(member), limit: None, label: label.into() }
    }

    /// Member `i`; rejects members not flagged nonnegative.
    pub fn member(&self, i: f64) -> Result<ScalarField> {
        let f = (self.member)(i)?;
        if !f.nonneg() {
            return Err(Error::InvalidParameter(format!("member {i} of {} is not nonnegative", self.label)));
        }
        Ok(f)
    }

    pub fn limit(&self) -> Option<&ScalarField> {
        self.limit.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The sequence `v_j -> 1`.
    pub fn mollified(params: &FracParams, cfg: &QuadConfig) -> Result<Self> {
        Ok(Self::mollified_with_beta(beta(params, cfg)?, params))
    }

    /// As [`Self::mollified`] with a precomputed `beta`.
    pub fn mollified_with_beta(beta: f64, params: &FracParams) -> Self {
        let p = *params;
        Self::new(
            move |j| make_v_j_with_beta(j, beta, &p).map(|f| f.v),
            ScalarField::constant(params.n, 1.0).with_nonneg(true),
            "v-j",
        )
    }

    /// The blow-up profiles `u_lambda` indexed by `lambda`.
    pub fn blowup(params: &FracParams, p: f64, q: f64) -> Self {
        let pp = *params;
        Self::without_limit(move |lambda| make_u_lambda(&pp, p, q, lambda).map(|f| f.u_lambda), "u-lambda")
    }

    /// The constant sequence `u_i = u`.
    pub fn constant(field: ScalarField) -> Self {
        let f = field.clone();
        Self::new(move |_| Ok(f.clone()), field, "constant")
    }
}

/// The three terms of the split and its check against the direct difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AefDecomposition {
    pub a: f64,
    pub e: f64,
    pub f: f64,
    /// `(-Delta)^sigma u(x) - (-Delta)^sigma u_i(x)` evaluated directly.
    pub direct: f64,
    /// `a + e + f - direct`.
    pub residual: f64,
    /// Sum of the tolerance budgets `max(abs_tol, rel_tol |v|)` of every
    /// quadrature entering the residual.
    pub tolerance: f64,
    /// Sum of the quadrature error estimates.
    pub err_est: f64,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `A_i(x, R) + E_i(x, R) + F_i(x, R)` for `R >= 2(|x| + 1)`.
pub fn aef_decompose(
    seq: &FunctionSequence,
    i: f64,
    x: &[f64],
    radius: f64,
    params: &FracParams,
    cfg: &QuadConfig,
) -> Result<AefDecomposition> {
    let required = 2.0 * (norm(x) + 1.0);
    if radius < required {
        return Err(Error::RadiusTooSmall { radius, required });
    }
    let u =
        seq.limit().ok_or_else(|| Error::InvalidParameter(format!("sequence {} has no limit field", seq.label())))?;
    let ui = seq.member(i)?;
    let a = pv_ball_integral(vec![(u, 1.0), (&ui, -1.0)], x, radius, params, cfg)?;
    let d = u.evaluate(x) - ui.evaluate(x);
    let one = ScalarField::constant(params.n, 1.0);
    let t = tail_integral(&one, x, radius, params, cfg)?;
    let tu = tail_integral(u, x, radius, params, cfg)?;
    let f = tail_integral(&ui, x, radius, params, cfg)?;
    let lu = fraclap_pv(u, x, params, cfg)?;
    let li = fraclap_pv(&ui, x, params, cfg)?;
    let e = d * t.value - tu.value;
    let direct = lu.value - li.value;
    let residual = a.value + e + f.value - direct;
    let pieces: [&Estimate; 6] = [&a, &t, &tu, &f, &lu, &li];
    let tolerance = pieces.iter().map(|p| cfg.budget(p.value)).sum::<f64>();
    let err_est = a.err_est + d.abs() * t.err_est + tu.err_est + f.err_est + lu.err_est + li.err_est;
    Ok(AefDecomposition { a: a.value, e, f: f.value, direct, residual, tolerance, err_est })
}

/// `F_i(x, R)` over a grid: rows are radii, columns indices.
pub fn tail_table(
    seq: &FunctionSequence,
    indices: &[f64],
    radii: &[f64],
    x: &[f64],
    params: &FracParams,
    cfg: &QuadConfig,
) -> Result<Vec<Vec<f64>>> {
    let members: Vec<ScalarField> = indices.iter().map(|&i| seq.member(i)).collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> = (0..radii.len()).flat_map(|r| (0..indices.len()).map(move |i| (r, i))).collect();
    let vals = exec::try_map(cfg.execution, &cells, |&(r, i)| {
        tail_integral(&members[i], x, radii[r], params, cfg).map(|e| e.value)
    })?;
    Ok(vals.chunks(indices.len()).map(|c| c.to_vec()).collect())
}

/// How a limit over a grid is read off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Extrapolation {
    /// The value at the largest grid point.
    LastValue,
    /// Eliminates an error term `C / i` using the last two grid points.
    RichardsonInverse,
    /// Eliminates an error term `C R^{-rate}` using the last two grid points.
    RichardsonPower { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BOptions {
    pub index_extrapolation: Extrapolation,
    pub radius_extrapolation: Extrapolation,
    /// Cauchy gate: last two values must differ by at most
    /// `cauchy_rel * |value|`.
    pub cauchy_rel: f64,
}

impl Default for BOptions {
    fn default() -> Self {
        Self {
            index_extrapolation: Extrapolation::LastValue,
            radius_extrapolation: Extrapolation::LastValue,
            cauchy_rel: 1e-2,
        }
    }
}

pub const DEFAULT_INDEX_GRID: [f64; 5] = [64.0, 256.0, 1024.0, 4096.0, 16384.0];
pub const DEFAULT_RADIUS_GRID: [f64; 4] = [10.0, 20.0, 40.0, 80.0];

fn extrapolate(grid: &[f64], vals: &[f64], how: Extrapolation) -> f64 {
    let k = vals.len();
    if k < 2 {
        return vals.last().copied().unwrap_or(f64::NAN);
    }
    let (g1, g2, v1, v2) = (grid[k - 2], grid[k - 1], vals[k - 2], vals[k - 1]);
    match how {
        Extrapolation::LastValue => v2,
        Extrapolation::RichardsonInverse => (g2 * v2 - g1 * v1) / (g2 - g1),
        Extrapolation::RichardsonPower { rate } => {
            let r = (g2 / g1).powf(rate);
            (r * v2 - v1) / (r - 1.0)
        }
    }
}

fn cauchy_ok(vals: &[f64], rel: f64) -> bool {
    match vals {
        [.., a, b] => (b - a).abs() <= rel * b.abs().max(f64::MIN_POSITIVE),
        _ => true,
    }
}

/// Per-point result of the iterated limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointLimit {
    pub x: Vec<f64>,
    /// `F_i(x, R)`: rows radii, columns indices.
    pub table: Vec<Vec<f64>>,
    /// Limit in `i` for each radius.
    pub index_limits: Vec<f64>,
    /// Cauchy gate in `i` for each radius.
    pub index_gates: Vec<bool>,
    pub radius_gate: bool,
    /// Limit in `R` of the index limits.
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BEstimate {
    /// Estimate at the first sample point (the origin by convention).
    pub b: f64,
    pub indices: Vec<f64>,
    pub radii: Vec<f64>,
    pub points: Vec<PointLimit>,
    /// `max |b(x) - b| / |b|` over the sample points.
    pub x_spread: f64,
    pub options: BOptions,
}

impl BEstimate {
    /// The `F(0, R)` table as CSV: one row per radius, one column per index.
    pub fn table_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["R".to_string()];
        header.extend(self.indices.iter().map(|i| format!("i={i}")));
        w.write_record(&header)?;
        if let Some(p) = self.points.first() {
            for (r, row) in self.radii.iter().zip(&p.table) {
                let mut rec = vec![format!("{r}")];
                rec.extend(row.iter().map(|v| format!("{v:.12e}")));
                w.write_record(&rec)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

fn increasing(v: &[f64]) -> bool {
    !v.is_empty() && v.windows(2).all(|w| w[1] > w[0])
}

/// Iterated limit `lim_R lim_i F_i(x, R)` at each sample point.
pub fn estimate_b(
    seq: &FunctionSequence,
    indices: &[f64],
    radii: &[f64],
    x_samples: &[Vec<f64>],
    params: &FracParams,
    cfg: &QuadConfig,
    opts: &BOptions,
) -> Result<BEstimate> {
    if !increasing(indices) || !increasing(radii) {
        return Err(Error::InvalidParameter("index and radius grids must be nonempty and increasing".into()));
    }
    if x_samples.is_empty() {
        return Err(Error::InvalidParameter("need at least one sample point".into()));
    }
    let rmin = radii[0];
    if let Some(x) = x_samples.iter().find(|x| !(norm(x) < rmin / 2.0)) {
        return Err(Error::PointOutsideBall { norm: norm(x), radius: rmin / 2.0 });
    }
    let mut points = Vec::new();
    for x in x_samples {
        let table = tail_table(seq, indices, radii, x, params, cfg)?;
        let index_limits: Vec<f64> =
            table.iter().map(|row| extrapolate(indices, row, opts.index_extrapolation)).collect();
        let index_gates: Vec<bool> = table.iter().map(|row| cauchy_ok(row, opts.cauchy_rel)).collect();
        if !index_gates.last().copied().unwrap_or(true) {
            let row = table.last().expect("nonempty table");
            return Err(Error::NonConvergent(format!(
                "F_i(x, {}) at x = {x:?} still moves by {:e} between the last two indices",
                radii[radii.len() - 1],
                (row[row.len() - 1] - row[row.len().saturating_sub(2)]).abs()
            )));
        }
        let radius_gate = cauchy_ok(&index_limits, opts.cauchy_rel);
        let b = extrapolate(radii, &index_limits, opts.radius_extrapolation);
        points.push(PointLimit { x: x.clone(), table, index_limits, index_gates, radius_gate, b });
    }
    let b0 = points[0].b;
    let x_spread = points.iter().map(|p| (p.b - b0).abs()).fold(0.0, f64::max) / b0.abs().max(f64::MIN_POSITIVE);
    Ok(BEstimate { b: b0, indices: indices.to_vec(), radii: radii.to_vec(), points, x_spread, options: *opts })
}

/// Both sides of the comparison between `F_i(x, R)` and `F_i(0, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sandwich {
    pub f_origin: f64,
    pub f_x: f64,
    pub lower: f64,
    pub upper: f64,
    /// `f_x - lower`
    pub margin_lower: f64,
    /// `upper - f_x`
    pub margin_upper: f64,
    pub holds: bool,
}

/// `(R/(R+|x|))^{n+2s} F(0,R) <= F(x,R) <= (R/(R-|x|))^{n+2s} F(0,R)`.
pub fn sandwich_check(
    seq: &FunctionSequence,
    i: f64,
    x: &[f64],
    radius: f64,
    params: &FracParams,
    cfg: &QuadConfig,
) -> Result<Sandwich> {
    let t = norm(x);
    if !(t < radius) {
        return Err(Error::PointOutsideBall { norm: t, radius });
    }
    let ui = seq.member(i)?;
    let f0 = tail_integral(&ui, &vec![0.0; params.n], radius, params, cfg)?;
    let fx = tail_integral(&ui, x, radius, params, cfg)?;
    let m = params.kernel_exponent();
    let lower = (radius / (radius + t)).powf(m) * f0.value;
    let upper = (radius / (radius - t)).powf(m) * f0.value;
    let slack = cfg.budget(f0.value) + cfg.budget(fx.value);
    let margin_lower = fx.value - lower;
    let margin_upper = upper - fx.value;
    Ok(Sandwich {
        f_origin: f0.value,
        f_x: fx.value,
        lower,
        upper,
        margin_lower,
        margin_upper,
        holds: margin_lower >= -slack && margin_upper >= -slack,
    })
}

/// `F(x, R)` along increasing radii, and whether it is nonnegative and
/// non-increasing within tolerance.
pub fn tail_monotonicity(
    field: &ScalarField,
    x: &[f64],
    radii: &[f64],
    params: &FracParams,
    cfg: &QuadConfig,
) -> Result<(Vec<f64>, bool)> {
    let vals = exec::try_map(cfg.execution, radii, |&r| tail_integral(field, x, r, params, cfg).map(|e| e.value))?;
    let ok = vals.iter().all(|&v| v >= -cfg.abs_tol) && vals.windows(2).all(|w| w[1] <= w[0] + cfg.budget(w[0]));
    Ok((vals, ok))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantSolution {
    /// `b^{1/p}`
    pub value: f64,
    /// `(-Delta)^sigma` of the constant, evaluated numerically.
    pub fraclap: f64,
    /// `fraclap - b + value^p`
    pub residual: f64,
    pub pass: bool,
}

/// Checks that the constant `b^{1/p}` solves `(-Delta)^sigma u - b = -u^p`.
pub fn constant_solution_check(b: f64, p: f64, params: &FracParams, cfg: &QuadConfig) -> Result<ConstantSolution> {
    if p == 0.0 {
        return Err(Error::InvalidParameter("p must be nonzero".into()));
    }
    if !(b > 0.0) {
        return Err(Error::InvalidParameter(format!("b must be positive, got {b}")));
    }
    let value = b.powf(1.0 / p);
    let field = ScalarField::constant(params.n, value);
    let x = vec![0.0; params.n];
    let lap = fraclap_pv(&field, &x, params, cfg)?.value;
    let residual = lap - b + value.powf(p);
    let pass = lap.abs() <= cfg.abs_tol && residual.abs() <= cfg.abs_tol + 4.0 * f64::EPSILON * b;
    Ok(ConstantSolution { value, fraclap: lap, residual, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::TailDescriptor;

    fn bump(n: usize) -> ScalarField {
        ScalarField::radial(
            n,
            |r| if r < 2.0 { (1.0 - r * r / 4.0).powi(3) } else { 0.0 },
            TailDescriptor::CompactSupport { radius: 2.0 },
        )
        .with_breaks(vec![2.0])
        .with_nonneg(true)
    }

    #[test]
    fn identical_members_give_no_ball_term() {
        let p = FracParams::new(1, 0.5).unwrap();
        let seq = FunctionSequence::constant(bump(1));
        let d = aef_decompose(&seq, 3.0, &[0.5], 4.0, &p, &QuadConfig::default()).unwrap();
        assert!(d.a.abs() < 1e-12);
        assert!((d.e + d.f).abs() < 1e-12);
        assert!(d.residual.abs() <= 2.0 * d.tolerance);
    }

    #[test]
    fn radius_must_dominate_point() {
        let p = FracParams::new(1, 0.5).unwrap();
        let seq = FunctionSequence::constant(bump(1));
        assert!(matches!(
            aef_decompose(&seq, 1.0, &[2.0], 5.0, &p, &QuadConfig::default()),
            Err(Error::RadiusTooSmall { .. })
        ));
    }

    #[test]
    fn compact_constant_sequence_has_zero_b() {
        let p = FracParams::new(1, 0.5).unwrap();
        let seq = FunctionSequence::constant(bump(1));
        let est = estimate_b(
            &seq,
            &[1.0, 2.0],
            &[10.0, 20.0],
            &[vec![0.0]],
            &p,
            &QuadConfig::default(),
            &BOptions::default(),
        )
        .unwrap();
        assert_eq!(est.b, 0.0);
    }

    #[test]
    fn sandwich_is_tight_at_origin() {
        let p = FracParams::new(2, 0.5).unwrap();
        let seq = FunctionSequence::constant(ScalarField::constant(2, 1.0));
        let s = sandwich_check(&seq, 1.0, &[0.0, 0.0], 5.0, &p, &QuadConfig::default()).unwrap();
        assert_eq!(s.lower, s.upper);
        assert!(s.holds);
    }

    #[test]
    fn constant_solution_arithmetic() {
        let p = FracParams::new(1, 0.5).unwrap();
        let c = constant_solution_check(16.0, 2.0, &p, &QuadConfig::default()).unwrap();
        assert_eq!(c.value, 4.0);
        assert!(c.pass);
        assert!(constant_solution_check(1.0, 0.0, &p, &QuadConfig::default()).is_err());
    }

    #[test]
    fn extrapolation_rules() {
        let g = [1.0, 2.0];
        assert_eq!(extrapolate(&g, &[3.0, 2.0], Extrapolation::LastValue), 2.0);
        // v = 1 + 2/i
        assert!((extrapolate(&g, &[3.0, 2.0], Extrapolation::RichardsonInverse) - 1.0).abs() < 1e-15);
        // v = 1 + R^{-1/2}
        let r = [4.0, 16.0];
        let v = [1.5, 1.25];
        assert!((extrapolate(&r, &v, Extrapolation::RichardsonPower { rate: 0.5 }) - 1.0).abs() < 1e-15);
    }
}
