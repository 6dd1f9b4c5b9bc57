//! Verification suites. Each returns a report; failures of individual
//! computations become failing checks rather than errors.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::config::{ExperimentConfig, Suite};
use super::report::{timed, Check, CheckRecord, CsvTable, ReportMeta, VerificationReport};
use crate::constructions::blowup::{b2_sample_grid, shifted_ball_grid};
use crate::constructions::{
    beta, choose_r, delta0_and_rescale, estimate_derivative_bounds, k_derivatives, k_lambda_eval, make_step_family,
    make_u_lambda, make_v_j_with_beta, rescaled_equation_sides, BlowupFamily, MollifiedFamily, RChoice, StepKind,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::limits::{
    aef_decompose, constant_solution_check, estimate_b, sandwich_check, tail_monotonicity, BEstimate, BOptions,
    FunctionSequence,
};
use crate::quadrature::{fraclap_pv, richardson_gradient, richardson_hessian, QuadConfig, ScalarField, TailDescriptor};
use crate::specfun::{gamma, FracParams};

const B_TOLERANCE: f64 = 0.05;
const B_SAMPLES: [f64; 3] = [0.0, 1.0, 2.0];
const THM12_SAMPLES: [f64; 3] = [0.0, 0.25, 0.5];
const BLOWUP_FACTOR: f64 = 10.0;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn axis(n: usize, t: f64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[0] = t;
    x
}

fn diagonal(n: usize, t: f64) -> Vec<f64> {
    vec![t / (n as f64).sqrt(); n]
}

fn meta(cfg: &ExperimentConfig, grids: &[(&str, &[f64])], with_pq: bool) -> ReportMeta {
    ReportMeta {
        suite: cfg.suite.to_string(),
        n: cfg.n,
        sigma: cfg.sigma,
        p: with_pq.then_some(cfg.p),
        q: with_pq.then_some(cfg.q),
        grids: grids.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect::<BTreeMap<_, _>>(),
        config_hash: cfg.hash(),
    }
}

/// `computed <= bound`, or a failed record when the computation errored.
fn upper(name: &str, cite: &str, res: (Result<f64>, f64), bound: f64) -> CheckRecord {
    match res {
        (Ok(v), ms) => Check::new(name, cite).at_most(v, bound, ms),
        (Err(e), ms) => Check::new(name, cite).failed(&e, ms),
    }
}

fn lower(name: &str, cite: &str, res: (Result<f64>, f64), bound: f64) -> CheckRecord {
    match res {
        (Ok(v), ms) => Check::new(name, cite).at_least(v, bound, ms),
        (Err(e), ms) => Check::new(name, cite).failed(&e, ms),
    }
}

/// Trend gate along a grid: non-increasing (strictly decreasing when
/// `strict`) with the last value at most `bound`.
fn trend(name: &str, cite: &str, res: (Result<Vec<f64>>, f64), bound: f64, strict: bool) -> CheckRecord {
    match res {
        (Ok(v), ms) => {
            let last = v.last().copied().unwrap_or(f64::NAN);
            let step = v.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
            let margin = (bound - last).min(step);
            let pass = margin >= 0.0 && (!strict || step > 0.0);
            Check::new(name, cite).record(
                json!(v),
                json!({ "final": bound, "trend": if strict { "decreasing" } else { "non-increasing" } }),
                pass,
                margin,
                ms,
            )
        }
        (Err(e), ms) => Check::new(name, cite).failed(&e, ms),
    }
}

fn config_failure(mut rep: VerificationReport, e: &Error) -> VerificationReport {
    rep.push(Check::new("configuration", "parameters of the suite are admissible").failed(e, 0.0));
    rep
}

/// Runs the suite selected by `cfg.suite`.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    Ok(match cfg.suite {
        Suite::Oracles => verify_oracles(cfg),
        Suite::Thm11B => verify_thm11(cfg),
        Suite::Thm12 => verify_thm12(cfg),
        Suite::Thm13 => verify_thm13(cfg),
    })
}

fn poisson(n: usize) -> ScalarField {
    ScalarField::radial(
        n,
        |r| 1.0 / (1.0 + r * r),
        TailDescriptor::PowerLaw { coefficient: 1.0, exponent: 2.0, onset: 1.0, exact: false },
    )
    .with_nonneg(true)
}

/// Quadrature trust anchors: constants, closed forms, scaling, translation
/// and the step family at the origin.
pub fn verify_oracles(cfg: &ExperimentConfig) -> VerificationReport {
    let mut rep = VerificationReport::new(meta(cfg, &[], false));
    let params = match cfg.params() {
        Ok(p) => p,
        Err(e) => return config_failure(rep, &e),
    };
    let q = cfg.quad;
    let n = params.n;

    rep.push(upper(
        "constant field",
        "constant functions are annihilated by the fractional Laplacian",
        timed(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let pts: Vec<Vec<f64>> =
                (0..cfg.oracle_points).map(|_| (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
            let f = ScalarField::constant(n, 1.0);
            let v = exec::try_map(q.execution, &pts, |x| fraclap_pv(&f, x, &params, &q).map(|e| e.value.abs()))?;
            Ok(max_of(v))
        }),
        1e-9,
    ));

    rep.push(upper(
        "poisson kernel",
        "half Laplacian of 1/(1+x^2) in one dimension is (1-x^2)/(1+x^2)^2",
        timed(|| {
            let p1 = FracParams::new(1, 0.5)?;
            let f = poisson(1);
            let errs = [0.0, 0.5, 2.0].iter().map(|&t| {
                let v = fraclap_pv(&f, &[t], &p1, &q)?.value;
                Ok(rel(v, (1.0 - t * t) / (1.0 + t * t).powi(2)))
            });
            errs.collect::<Result<Vec<_>>>().map(max_of)
        }),
        1e-6,
    ));

    let e = 0.5 * (n as f64 - 2.0 * params.sigma);
    if e.abs() > 1e-12 {
        rep.push(upper(
            "fractional bubble",
            "(1+|x|^2)^{-(n-2s)/2} is mapped to a multiple of (1+|x|^2)^{-(n+2s)/2}",
            timed(|| {
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
                let m = n as f64 + 2.0 * params.sigma;
                let k = 2f64.powf(2.0 * params.sigma) * gamma(0.5 * m) / gamma(e);
                let errs = [0.0, 0.7, 1.5].iter().map(|&t| {
                    let v = fraclap_pv(&f, &axis(n, t), &params, &q)?.value;
                    Ok(rel(v, k * (1.0 + t * t).powf(-0.5 * m)))
                });
                errs.collect::<Result<Vec<_>>>().map(max_of)
            }),
            1e-6,
        ));
    }

    rep.push(upper(
        "scaling identity",
        "the fractional Laplacian is homogeneous of degree 2 sigma under dilations",
        timed(|| {
            let mu = 2.0;
            let u = poisson(n);
            let um = u.dilated(mu);
            let pts = [axis(n, 0.3), diagonal(n, 0.7)];
            let errs = pts.iter().map(|x| {
                let lhs = fraclap_pv(&um, x, &params, &q)?.value;
                let mx: Vec<f64> = x.iter().map(|v| mu * v).collect();
                let rhs = mu.powf(2.0 * params.sigma) * fraclap_pv(&u, &mx, &params, &q)?.value;
                Ok(rel(lhs, rhs))
            });
            errs.collect::<Result<Vec<_>>>().map(max_of)
        }),
        1e-6,
    ));

    rep.push(upper(
        "translation identity",
        "the fractional Laplacian commutes with translations",
        timed(|| {
            let u = poisson(n);
            let h: Vec<f64> = [1.0, -0.5, 0.25][..n].to_vec();
            let uh = u.translated(&h);
            let pts = [axis(n, 0.4), diagonal(n, -1.1)];
            let errs = pts.iter().map(|x| {
                let lhs = fraclap_pv(&uh, x, &params, &q)?.value;
                let xh: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a - b).collect();
                let rhs = fraclap_pv(&u, &xh, &params, &q)?.value;
                Ok(rel(lhs, rhs))
            });
            errs.collect::<Result<Vec<_>>>().map(max_of)
        }),
        1e-6,
    ));

    rep.push(upper(
        "step family at the origin",
        "the rescaled steps V_j have the j-independent value -c |S^{n-1}| / (2 sigma 3^{2 sigma}) at 0",
        timed(|| {
            let want = -params.c * params.sphere_area / (2.0 * params.sigma * 3f64.powf(2.0 * params.sigma));
            let errs = [1.0, 10.0, 100.0].iter().map(|&j| {
                let f = make_step_family(StepKind::V, j, &params)?.field();
                Ok(rel(fraclap_pv(&f, &vec![0.0; n], &params, &q)?.value, want))
            });
            errs.collect::<Result<Vec<_>>>().map(max_of)
        }),
        1e-6,
    ));
    rep
}

/// `sup` over a fixed ball of `|v - 1|`, `|grad v|` and `|hess v|`.
fn c2_distance_to_one(v: &ScalarField, n: usize, q: &QuadConfig) -> f64 {
    let mut pts = Vec::new();
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        pts.push(axis(n, t));
        if n > 1 {
            pts.push(diagonal(n, t));
        }
    }
    let f = |x: &[f64]| v.evaluate(x);
    max_of(pts.iter().map(|x| {
        let g = richardson_gradient(f, x, 0.05, q.richardson_steps);
        let h = richardson_hessian(f, x, 0.05, q.richardson_steps);
        let hmax = max_of(h.iter().flatten().map(|v| v.abs()));
        (v.evaluate(x) - 1.0).abs().max(norm(&g)).max(hmax)
    }))
}

fn thm12_family(cfg: &ExperimentConfig, params: &FracParams) -> Result<(f64, Vec<MollifiedFamily>)> {
    let b = beta(params, &cfg.quad)?;
    let fams = cfg.j_grid.iter().map(|&j| make_v_j_with_beta(j, b, params)).collect::<Result<_>>()?;
    Ok((b, fams))
}

fn b_samples(cfg: &ExperimentConfig) -> Vec<Vec<f64>> {
    cfg.samples_or(&B_SAMPLES)
}

/// `estimate_b` on the mollified sequence with the configured grids.
pub fn run_estimate_b(cfg: &ExperimentConfig) -> Result<BEstimate> {
    cfg.validate()?;
    let params = cfg.params()?;
    let seq = FunctionSequence::mollified(&params, &cfg.quad)?;
    estimate_b(&seq, &cfg.index_grid, &cfg.radius_grid, &b_samples(cfg), &params, &cfg.quad, &BOptions::default())
}

fn b_table(est: &BEstimate) -> CsvTable {
    let mut header = vec!["R".to_string()];
    header.extend(est.indices.iter().map(|i| format!("i={i}")));
    let mut t = CsvTable { name: "tail_table".into(), header, rows: Vec::new() };
    if let Some(p) = est.points.first() {
        for (r, row) in est.radii.iter().zip(&p.table) {
            let mut rec = vec![*r];
            rec.extend(row);
            t.rows.push(rec);
        }
    }
    t
}

fn push_b_checks(rep: &mut VerificationReport, est: (Result<BEstimate>, f64)) -> Option<BEstimate> {
    match est {
        (Ok(e), ms) => {
            rep.push(Check::new("limit constant b", "the iterated tail-mass limit of v_j equals 1").at_most(
                (e.b - 1.0).abs(),
                B_TOLERANCE,
                ms,
            ));
            rep.push(Check::new("b independent of x", "lim_R F(x, R) = lim_R F(0, R) for every x").at_most(
                e.x_spread,
                B_TOLERANCE,
                0.0,
            ));
            rep.constants.b = Some(e.b);
            rep.tables.push(b_table(&e));
            Some(e)
        }
        (Err(err), ms) => {
            rep.push(Check::new("limit constant b", "the iterated tail-mass limit of v_j equals 1").failed(&err, ms));
            None
        }
    }
}

/// The mollified sequence: convergence to 1, fractional Laplacian tending to
/// -1, the scaling identity and the limit constant.
pub fn verify_thm12(cfg: &ExperimentConfig) -> VerificationReport {
    let mut rep = VerificationReport::new(meta(
        cfg,
        &[("j_grid", &cfg.j_grid), ("index_grid", &cfg.index_grid), ("radius_grid", &cfg.radius_grid)],
        false,
    ));
    let params = match cfg.params() {
        Ok(p) => p,
        Err(e) => return config_failure(rep, &e),
    };
    let q = cfg.quad;
    let n = params.n;
    let (b, fams) = match timed(|| thm12_family(cfg, &params)) {
        (Ok(v), _) => v,
        (Err(e), ms) => {
            rep.push(Check::new("mollified family", "beta = (-f(0))^{-1/(2 sigma)} is well defined").failed(&e, ms));
            return rep;
        }
    };
    rep.constants.beta = Some(b);
    let xs = cfg.samples_or(&THM12_SAMPLES);

    let c2 = timed(|| Ok(exec::map(q.execution, &fams, |f| c2_distance_to_one(&f.v, n, &q))));
    let c2_trace = c2.0.as_ref().ok().cloned();
    rep.push(trend("C2 convergence to 1", "v_j converges to 1 in C^2 on compact sets", c2, B_TOLERANCE, false));

    let sup = timed(|| {
        let cells: Vec<(usize, usize)> = (0..fams.len()).flat_map(|j| (0..xs.len()).map(move |k| (j, k))).collect();
        let vals = exec::try_map(q.execution, &cells, |&(j, k)| {
            fraclap_pv(&fams[j].v, &xs[k], &params, &q).map(|e| (e.value + 1.0).abs())
        })?;
        Ok(vals.chunks(xs.len()).map(|c| max_of(c.iter().copied())).collect::<Vec<_>>())
    });
    let sup_trace = sup.0.as_ref().ok().cloned();
    rep.push(trend(
        "fractional Laplacian tends to -1",
        "(-Delta)^sigma v_j(x) -> -1 for every x",
        sup,
        B_TOLERANCE,
        true,
    ));
    if let (Some(s), Some(c)) = (sup_trace, c2_trace) {
        let mut t = CsvTable::new("convergence_trace", &["j", "sup_fraclap_plus_one", "c2_distance"]);
        for ((f, a), b) in fams.iter().zip(s).zip(c) {
            t.rows.push(vec![f.j, a, b]);
        }
        rep.tables.push(t);
    }

    rep.push(upper(
        "scaling identity",
        "(-Delta)^sigma v_j(x) = beta^{2 sigma} f_j(beta j^{-1/(2 sigma)} x) inside B_{R_j}",
        timed(|| {
            let errs = fams.iter().flat_map(|f| [0.0, 0.5].map(|t| (f, axis(n, t * f.r_j)))).map(|(f, x)| {
                let lhs = fraclap_pv(&f.v, &x, &params, &q)?.value;
                Ok(rel(lhs, f.scaled_f(&x, &params, &q)?.value))
            });
            errs.collect::<Result<Vec<_>>>().map(max_of)
        }),
        1e-6,
    ));

    rep.push(upper(
        "v_j equals 1 on B_{R_j}",
        "v_j = 1 in B_{R_j}",
        timed(|| {
            Ok(max_of(
                fams.iter()
                    .flat_map(|f| [0.0, 0.5, 0.9, 0.999].map(|t| (f.v.evaluate(&diagonal(n, t * f.r_j)) - 1.0).abs())),
            ))
        }),
        0.0,
    ));

    let seq = FunctionSequence::mollified_with_beta(b, &params);
    let est = timed(|| {
        estimate_b(&seq, &cfg.index_grid, &cfg.radius_grid, &b_samples(cfg), &params, &q, &BOptions::default())
    });
    push_b_checks(&mut rep, est);
    rep
}

/// Machinery of the tail-mass limit on the mollified sequence.
pub fn verify_thm11(cfg: &ExperimentConfig) -> VerificationReport {
    let mut rep = VerificationReport::new(meta(
        cfg,
        &[("j_grid", &cfg.j_grid), ("index_grid", &cfg.index_grid), ("radius_grid", &cfg.radius_grid)],
        true,
    ));
    let params = match cfg.params() {
        Ok(p) => p,
        Err(e) => return config_failure(rep, &e),
    };
    let q = cfg.quad;
    let n = params.n;
    let b = match timed(|| beta(&params, &q)) {
        (Ok(b), _) => b,
        (Err(e), ms) => {
            rep.push(Check::new("mollified family", "beta = (-f(0))^{-1/(2 sigma)} is well defined").failed(&e, ms));
            return rep;
        }
    };
    rep.constants.beta = Some(b);
    let seq = FunctionSequence::mollified_with_beta(b, &params);
    let r0 = cfg.radius_grid[0];
    let radii = [r0, 2.0 * r0];
    let pts = [axis(n, 0.0), axis(n, 1.0)];

    let aef = timed(|| {
        let triples: Vec<(f64, usize, f64)> =
            cfg.j_grid.iter().flat_map(|&i| (0..pts.len()).flat_map(move |k| radii.map(|r| (i, k, r)))).collect();
        exec::try_map(q.execution, &triples, |&(i, k, r)| aef_decompose(&seq, i, &pts[k], r, &params, &q))
    });
    match aef {
        (Ok(ds), ms) => {
            let margin = ds.iter().map(|d| 2.0 * d.tolerance - d.residual.abs()).fold(f64::INFINITY, f64::min);
            let worst = max_of(ds.iter().map(|d| d.residual.abs()));
            rep.push(
                Check::new("A + E + F identity", "the difference of fractional Laplacians splits as A_i + E_i + F_i")
                    .record(
                        json!({ "max_residual": worst, "triples": ds.len() }),
                        json!("2 x summed quadrature tolerances"),
                        margin >= 0.0,
                        margin,
                        ms,
                    ),
            );
        }
        (Err(e), ms) => rep.push(
            Check::new("A + E + F identity", "the difference of fractional Laplacians splits as A_i + E_i + F_i")
                .failed(&e, ms),
        ),
    }

    let cite_a = "A_i(x, R) -> 0 as i -> infinity at fixed R";
    rep.push(upper(
        "ball term vanishes",
        cite_a,
        timed(|| {
            let last = *cfg.index_grid.last().expect("validated grid");
            Ok(aef_decompose(&seq, last, &pts[0], r0, &params, &q)?.a.abs())
        }),
        q.abs_tol,
    ));

    rep.push(upper(
        "tail term of the limit",
        "lim_i E_i(x, R) = -c int_{B_R^c} |x - y|^{-n-2 sigma} dy",
        timed(|| {
            let last = *cfg.index_grid.last().expect("validated grid");
            let errs = cfg.radius_grid.iter().map(|&r| {
                let e = aef_decompose(&seq, last, &pts[0], r, &params, &q)?.e;
                Ok(rel(e, -params.c * params.gamma_tail * r.powf(-2.0 * params.sigma)))
            });
            errs.collect::<Result<Vec<_>>>().map(max_of)
        }),
        1e-6,
    ));

    let mono = timed(|| {
        let mut margin = f64::INFINITY;
        let mut all = true;
        for &i in &cfg.index_grid {
            let f = seq.member(i)?;
            for x in &pts {
                let (vals, ok) = tail_monotonicity(&f, x, &cfg.radius_grid, &params, &q)?;
                all &= ok;
                margin = margin.min(vals.iter().copied().fold(f64::INFINITY, f64::min));
                for w in vals.windows(2) {
                    margin = margin.min(w[0] - w[1] + q.budget(w[0]));
                }
            }
        }
        Ok((all, margin))
    });
    let cite_f = "F_i(x, R) is nonnegative and non-increasing in R";
    rep.push(match mono {
        (Ok((ok, m)), ms) => Check::new("tail mass monotone", cite_f).record(json!(ok), json!(0.0), ok, m, ms),
        (Err(e), ms) => Check::new("tail mass monotone", cite_f).failed(&e, ms),
    });

    rep.push(lower(
        "sandwich bounds",
        "(R/(R+|x|))^{n+2s} F_i(0,R) <= F_i(x,R) <= (R/(R-|x|))^{n+2s} F_i(0,R) for nonnegative u_i",
        timed(|| {
            let s =
                exec::try_map(q.execution, &cfg.index_grid, |&i| sandwich_check(&seq, i, &pts[1], r0, &params, &q))?;
            Ok(s.iter().map(|s| s.margin_lower.min(s.margin_upper)).fold(f64::INFINITY, f64::min))
        }),
        0.0,
    ));

    let est = timed(|| {
        estimate_b(&seq, &cfg.index_grid, &cfg.radius_grid, &b_samples(cfg), &params, &q, &BOptions::default())
    });
    let est = push_b_checks(&mut rep, est);

    if let Some(e) = &est {
        let mut radii = cfg.radius_grid.clone();
        radii.push(2.0 * radii[radii.len() - 1]);
        rep.push(upper(
            "b stable under radius doubling",
            "b is a limit in R",
            timed(|| {
                let e2 =
                    estimate_b(&seq, &cfg.index_grid, &radii, &b_samples(cfg)[..1], &params, &q, &BOptions::default())?;
                Ok((e2.b - e.b).abs())
            }),
            B_TOLERANCE,
        ));
        let cite = "the positive constant b^{1/p} solves (-Delta)^sigma u - b = -u^p";
        rep.push(match timed(|| constant_solution_check(e.b, cfg.p, &params, &q)) {
            (Ok(c), ms) => Check::new("constant solution", cite).record(
                json!({ "value": c.value, "fraclap": c.fraclap, "residual": c.residual }),
                json!(q.abs_tol),
                c.pass,
                q.abs_tol - c.residual.abs().max(c.fraclap.abs()),
                ms,
            ),
            (Err(err), ms) => Check::new("constant solution", cite).failed(&err, ms),
        });
    }
    rep
}

struct LambdaRun {
    family: BlowupFamily,
    k_grid: Vec<(Vec<f64>, f64)>,
    grad0: Vec<f64>,
    hess0: Vec<Vec<f64>>,
    k0: f64,
    min_grad_shifted: f64,
    equation: Vec<f64>,
    decay: f64,
    min_ball: f64,
}

fn unit_ball_grid(n: usize) -> Vec<Vec<f64>> {
    let ts = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut out = Vec::new();
    match n {
        1 => out.extend(ts.iter().map(|&t| vec![t])),
        _ => {
            for &a in &ts {
                for &b in &ts {
                    let mut x = vec![0.0; n];
                    x[0] = a;
                    x[1] = b;
                    if norm(&x) <= 1.0 {
                        out.push(x);
                    }
                }
            }
            out.push(diagonal(n, 1.0));
        }
    }
    out
}

fn equation_points(n: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![axis(n, 0.0), axis(n, 0.5), axis(n, -0.5), axis(n, 0.9)];
    pts.push(if n > 1 { diagonal(n, 0.5) } else { axis(n, 0.25) });
    pts
}

fn run_lambda(family: BlowupFamily, q: &QuadConfig) -> Result<LambdaRun> {
    let n = family.n;
    let d0 = family.delta0.expect("rescaled family");
    let ut = family.u_tilde.clone().expect("rescaled family");
    let k_grid = b2_sample_grid(n)
        .into_iter()
        .map(|x| k_lambda_eval(&family, &x, q).map(|k| (x, k.value)))
        .collect::<Result<Vec<_>>>()?;
    let zero = vec![0.0; n];
    let k0 = k_lambda_eval(&family, &zero, q)?.value;
    let (grad0, hess0) = k_derivatives(&family, &zero, q)?;
    let min_grad_shifted = shifted_ball_grid(n, d0)
        .iter()
        .map(|x| k_derivatives(&family, x, q).map(|(g, _)| norm(&g)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let equation = equation_points(n)
        .iter()
        .map(|x| rescaled_equation_sides(&family, x, q).map(|(l, r)| rel(l.value, r.value)))
        .collect::<Result<Vec<_>>>()?;
    let far = axis(n, 1e4 * (family.r + 1.0) / d0);
    let decay = (norm(&far).powf(family.q) * ut.evaluate(&far) - 1.0).abs();
    let min_ball = unit_ball_grid(n).iter().map(|x| ut.evaluate(x)).fold(f64::INFINITY, f64::min);
    Ok(LambdaRun { family, k_grid, grad0, hess0, k0, min_grad_shifted, equation, decay, min_ball })
}

/// The blow-up family: window, derivative bounds, Hessian and gradient at the
/// origin, rescaling and the rescaled equation.
pub fn verify_thm13(cfg: &ExperimentConfig) -> VerificationReport {
    let mut rep = VerificationReport::new(meta(cfg, &[("lambda_grid", &cfg.lambda_grid)], true));
    let params = match cfg.params() {
        Ok(p) => p,
        Err(e) => return config_failure(rep, &e),
    };
    let q = cfg.quad;
    let n = params.n;
    let (p, qq) = (cfg.p, cfg.q);

    let (bounds, ms) = timed(|| estimate_derivative_bounds(&params, p, qq, &cfg.lambda_grid, &q));
    let bounds = match bounds {
        Ok(b) => b,
        Err(e) => {
            rep.push(
                Check::new("second derivatives bounded", "|D^2 K_lambda| <= c3 on B_2 uniformly in lambda")
                    .failed(&e, ms),
            );
            return rep;
        }
    };
    rep.push(Check::new("second derivatives bounded", "|D^2 K_lambda| <= c3 on B_2 uniformly in lambda").record(
        json!(bounds.c3_per_lambda),
        json!(bounds.c3),
        bounds.c3.is_finite() && bounds.c3 > 0.0,
        bounds.c3,
        ms,
    ));

    let (runs, ms) = timed(|| {
        exec::try_map(q.execution, &cfg.lambda_grid, |&lambda| {
            let fam = make_u_lambda(&params, p, qq, lambda)?;
            let fam = delta0_and_rescale(&fam, &bounds, &q)?;
            run_lambda(fam, &q)
        })
    });
    let runs = match runs {
        Ok(r) => r,
        Err(e) => {
            rep.push(
                Check::new("rescaled family", "delta0 = min(1/8, c4/(6 c3)) moves the critical point out of B_1")
                    .failed(&e, ms),
            );
            return rep;
        }
    };
    let per = ms / runs.len().max(1) as f64;
    let f0 = &runs[0].family;
    let (c1, c2) = (f0.c1, f0.c2);
    let c5 = f0.c5.unwrap_or(f64::NAN);
    let d0 = f0.delta0.unwrap_or(f64::NAN);
    rep.constants = crate::harness::report::Constants {
        r: Some(runs.iter().map(|r| r.family.r).collect()),
        beta: None,
        delta0: Some(d0),
        c1: Some(c1),
        c2: Some(c2),
        c3: Some(bounds.c3),
        c4: Some(bounds.c4),
        c5: Some(c5),
        b: None,
    };

    let ks: Vec<f64> = runs.iter().flat_map(|r| r.k_grid.iter().map(|(_, k)| *k)).collect();
    let kmin = ks.iter().copied().fold(f64::INFINITY, f64::min);
    let kmax = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let margin = (kmin + c1).min(-c2 - kmax);
    rep.push(
        Check::new(
            "K_lambda window on B_2",
            "-c1 <= K_lambda <= -c2 on B_2 with c1 = 3 c gamma, c2 = c gamma 6^{-2 sigma} / 2",
        )
        .record(
            json!({ "min": kmin, "max": kmax }),
            json!({ "lower": -c1, "upper": -c2 }),
            margin >= 0.0,
            margin,
            per,
        ),
    );

    let hbound =
        -(n as f64 + 2.0 * params.sigma) * params.c * params.ball_volume * 4f64.powf(-2.0 * params.sigma - 3.0);
    let diag_max = runs.iter().flat_map(|r| (0..n).map(move |i| r.hess0[i][i])).fold(f64::NEG_INFINITY, f64::max);
    rep.push(
        Check::new("Hessian diagonal at 0", "D_ii K_lambda(0) <= -(n + 2 sigma) c |B_1| 4^{-2 sigma - 3}")
            .at_most(diag_max, hbound, per),
    );
    if n > 1 {
        let off =
            max_of(runs.iter().flat_map(|r| {
                (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| r.hess0[i][j].abs()))
            }));
        rep.push(Check::new("Hessian off-diagonal at 0", "D_ij K_lambda(0) = 0 if i != j").at_most(off, 1e-6, per));
    }
    let grad_ratio = max_of(runs.iter().map(|r| norm(&r.grad0) / r.k0.abs()));
    rep.push(Check::new("gradient vanishes at 0", "grad K_lambda(0) = 0").at_most(grad_ratio, 1e-6, per));
    let min_grad = runs.iter().map(|r| r.min_grad_shifted).fold(f64::INFINITY, f64::min);
    rep.push(
        Check::new("gradient bounded below near 4 delta0 e1", "|grad K_lambda| >= c5 on B_{2 delta0}(4 delta0 e1)")
            .at_least(min_grad, c5, per),
    );
    let eq = max_of(runs.iter().flat_map(|r| r.equation.iter().copied()));
    rep.push(
        Check::new("rescaled equation", "(-Delta)^sigma u~_lambda = K~_lambda u~_lambda^p").at_most(eq, 1e-5, per),
    );
    let decay = max_of(runs.iter().map(|r| r.decay));
    rep.push(Check::new("decay at infinity", "|x|^q u~_lambda(x) -> 1 as |x| -> infinity").at_most(decay, 1e-3, 0.0));

    let mins: Vec<f64> = runs.iter().map(|r| r.min_ball).collect();
    let exact_err = max_of(runs.iter().map(|r| rel(r.min_ball, d0.powf(qq) * r.family.lambda)));
    rep.push(Check::new("minimum on the closed unit ball", "min over B_1 of u~_lambda = delta0^q lambda").at_most(
        exact_err,
        4.0 * f64::EPSILON,
        0.0,
    ));
    let step = mins.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let growth = mins.last().copied().unwrap_or(f64::NAN) / mins[0];
    let pass = step > 0.0 && growth >= BLOWUP_FACTOR;
    rep.push(
        Check::new("blow-up along the lambda grid", "min over B_1 of u~_lambda -> infinity as lambda -> infinity")
            .record(
                json!({ "minima": mins, "growth": growth }),
                json!({ "growth_at_least": BLOWUP_FACTOR, "trend": "increasing" }),
                pass,
                (growth - BLOWUP_FACTOR).min(step),
                0.0,
            ),
    );

    let mut t = CsvTable::new("k_lambda_samples", &["lambda", "x1", "x2", "K"]);
    for r in &runs {
        for (x, k) in &r.k_grid {
            t.rows.push(vec![r.family.lambda, x[0], x.get(1).copied().unwrap_or(0.0), *k]);
        }
    }
    rep.tables.push(t);
    rep
}

/// Smallest admissible outer radius of the blow-up family.
pub fn run_choose_r(cfg: &ExperimentConfig, lambda: f64) -> Result<RChoice> {
    let params = cfg.params()?;
    choose_r(&params, cfg.p, cfg.q, lambda, 1e-9)
}
