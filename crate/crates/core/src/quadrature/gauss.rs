//! One-dimensional quadrature rules: adaptive 7/15-point Gauss-Kronrod with
//! user breakpoints, and Gauss-Legendre rules of arbitrary order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::{Arc, OnceLock, RwLock};

// Kronrod abscissae, descending; odd positions (0-based 1, 3, 5) are the Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub(crate) const KRONROD_NODES: usize = 15;

/// Absolute/relative tolerance pair; a result is accepted when
/// `err <= max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

/// Outcome of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl Integral {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0, evaluations: 0, converged: true }
    }
}

/// Neumaier-compensated sum; order of `values` fixes the result bit for bit.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Kronrod nodes mapped onto `[a, b]`, in a fixed order.
pub(crate) fn kronrod_nodes(a: f64, b: f64) -> [f64; KRONROD_NODES] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [0.0; KRONROD_NODES];
    for i in 0..7 {
        out[2 * i] = c - h * XGK[i];
        out[2 * i + 1] = c + h * XGK[i];
    }
    out[14] = c;
    out
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    inner: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // largest error first; ties broken by position so the run is deterministic
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Applies the 15-point rule to `[a, b]` given the integrand values at
/// [`kronrod_nodes`]; `inner` carries per-node error estimates of nested
/// integrands.
fn panel(a: f64, b: f64, fv: &[f64], inner: &[f64]) -> Panel {
    let h = 0.5 * (b - a);
    let fc = fv[14];
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = (fc * WGK[7]).abs();
    let mut inner_err = inner[14] * WGK[7];
    for i in 0..7 {
        let pair = fv[2 * i] + fv[2 * i + 1];
        kron += WGK[i] * pair;
        res_abs += WGK[i] * (fv[2 * i].abs() + fv[2 * i + 1].abs());
        inner_err += WGK[i] * (inner[2 * i] + inner[2 * i + 1]);
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    let mean = 0.5 * kron;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for i in 0..7 {
        res_asc += WGK[i] * ((fv[2 * i] - mean).abs() + (fv[2 * i + 1] - mean).abs());
    }
    let value = kron * h;
    let res_abs = res_abs * h.abs();
    let res_asc = res_asc * h.abs();
    let mut err = ((kron - gauss) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Panel { a, b, value, error: err, inner: (inner_err * h).abs() }
}

/// Adaptive Gauss-Kronrod over the partition `points` (sorted, at least two
/// entries). The integrand is called with a batch of abscissae and returns a
/// `(value, inner_error)` pair per abscissa, which lets callers evaluate
/// expensive nested integrals in parallel.
pub fn integrate_batched<F>(f: F, points: &[f64], tol: Tolerance, max_subdiv: usize) -> Integral
where
    F: Fn(&[f64]) -> Vec<(f64, f64)>,
{
    assert!(points.len() >= 2, "need at least one interval");
    let spans: Vec<(f64, f64)> = points.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect();
    if spans.is_empty() {
        return Integral::exact(0.0);
    }
    let eval_panels = |spans: &[(f64, f64)]| -> Vec<Panel> {
        let xs: Vec<f64> = spans.iter().flat_map(|&(a, b)| kronrod_nodes(a, b)).collect();
        let ys = f(&xs);
        spans
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| {
                let chunk = &ys[k * KRONROD_NODES..(k + 1) * KRONROD_NODES];
                let fv: Vec<f64> = chunk.iter().map(|p| p.0).collect();
                let iv: Vec<f64> = chunk.iter().map(|p| p.1).collect();
                panel(a, b, &fv, &iv)
            })
            .collect()
    };

    let mut heap: BinaryHeap<Panel> = eval_panels(&spans).into_iter().collect();
    let mut evaluations = spans.len() * KRONROD_NODES;
    let totals = |heap: &BinaryHeap<Panel>| {
        let mut panels: Vec<&Panel> = heap.iter().collect();
        panels.sort_by(|p, q| p.a.total_cmp(&q.a));
        let value = compensated_sum(panels.iter().map(|p| p.value));
        let error = compensated_sum(panels.iter().map(|p| p.error + p.inner));
        (value, error)
    };

    let mut splits = 0;
    loop {
        let (value, error) = totals(&heap);
        if error <= tol.target(value) {
            return Integral { value, error, evaluations, converged: true };
        }
        if splits >= max_subdiv {
            return Integral { value, error, evaluations, converged: false };
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // interval exhausted at floating-point resolution
            heap.push(worst);
            let (value, error) = totals(&heap);
            return Integral { value, error, evaluations, converged: false };
        }
        for p in eval_panels(&[(worst.a, mid), (mid, worst.b)]) {
            heap.push(p);
        }
        evaluations += 2 * KRONROD_NODES;
        splits += 1;
    }
}

/// Sequential scalar version of [`integrate_batched`].
pub fn integrate<F>(f: F, points: &[f64], tol: Tolerance, max_subdiv: usize) -> Integral
where
    F: Fn(f64) -> f64,
{
    integrate_batched(|xs| xs.iter().map(|&x| (f(x), 0.0)).collect(), points, tol, max_subdiv)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(order: usize) -> Self {
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let nf = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Cached rule of the given order.
    pub fn of_order(order: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<RwLock<BTreeMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| RwLock::new(BTreeMap::new()));
        if let Some(rule) = cache.read().expect("rule cache poisoned").get(&order) {
            return rule.clone();
        }
        let rule = Arc::new(GaussLegendre::compute(order));
        cache.write().expect("rule cache poisoned").entry(order).or_insert(rule).clone()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + h * x, h * w))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed-order Gauss-Legendre on `[a, b]`, doubling the order from `start`
/// until two successive orders agree to `tol` or `max_order` is reached.
pub fn gauss_doubling<F>(f: F, a: f64, b: f64, tol: Tolerance, start: usize, max_order: usize) -> Integral
where
    F: Fn(f64) -> f64,
{
    gauss_doubling_batched(|xs| xs.iter().map(|&x| (f(x), 0.0)).collect(), a, b, tol, start, max_order)
}

/// Batched form of [`gauss_doubling`]; the integrand returns `(value,
/// inner_error)` per abscissa.
pub fn gauss_doubling_batched<F>(f: F, a: f64, b: f64, tol: Tolerance, start: usize, max_order: usize) -> Integral
where
    F: Fn(&[f64]) -> Vec<(f64, f64)>,
{
    let apply = |order: usize| {
        let rule = GaussLegendre::of_order(order);
        let (xs, ws): (Vec<f64>, Vec<f64>) = rule.mapped(a, b).unzip();
        let ys = f(&xs);
        let value = compensated_sum(ys.iter().zip(&ws).map(|(y, w)| w * y.0));
        let inner = compensated_sum(ys.iter().zip(&ws).map(|(y, w)| w.abs() * y.1));
        (value, inner)
    };
    let mut order = start.max(2);
    let (mut prev, _) = apply(order);
    let mut evaluations = order;
    loop {
        let next_order = order * 2;
        let (next, inner) = apply(next_order);
        evaluations += next_order;
        let diff = (next - prev).abs();
        let ok = diff <= tol.target(next);
        if ok || next_order >= max_order {
            return Integral { value: next, error: diff + inner, evaluations, converged: ok };
        }
        prev = next;
        order = next_order;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_exact_for_degree_22() {
        for k in 0..=22 {
            let r = integrate(|x: f64| x.powi(k), &[0.0, 1.0], Tolerance::new(1e-300, 0.0), 0);
            assert!((r.value - 1.0 / (k as f64 + 1.0)).abs() < 1e-15, "degree {k}");
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = integrate(|x: f64| x.powf(-0.5), &[0.0, 1.0], Tolerance::new(1e-12, 1e-12), 200);
        assert!(r.converged);
        assert!((r.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn breakpoints_capture_jumps() {
        let step = |x: f64| if x <= 0.3 { 1.0 } else { 5.0 };
        let r = integrate(step, &[0.0, 0.3, 1.0], Tolerance::new(1e-14, 1e-14), 0);
        assert!((r.value - (0.3 + 5.0 * 0.7)).abs() < 1e-14);
    }

    #[test]
    fn legendre_rules_integrate_polynomials() {
        for order in [2usize, 5, 16, 64, 200] {
            let rule = GaussLegendre::of_order(order);
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "order {order}: weight sum {s}");
            let deg = (2 * order - 1).min(30) as i32;
            let m: f64 = rule.mapped(0.0, 1.0).map(|(x, w)| w * x.powi(deg)).sum();
            assert!((m - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13, "order {order}");
        }
    }

    #[test]
    fn doubling_converges_on_smooth_periodic() {
        let r = gauss_doubling(
            |t: f64| 1.0 / (2.0 - t.cos()),
            0.0,
            std::f64::consts::PI,
            Tolerance::new(1e-15, 1e-15),
            8,
            1024,
        );
        assert!(r.converged);
        let exact = std::f64::consts::PI / 3f64.sqrt();
        assert!((r.value - exact).abs() < 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }
}
