//! Central differences with Richardson extrapolation.
//!
//! Each difference quotient has an error expansion in even powers of the
//! step; halving the step and eliminating `h^2, h^4, ...` in turn gives the
//! usual tableau with factors `4^k`.

fn extrapolate(mut rows: Vec<Vec<f64>>) -> Vec<f64> {
    let levels = rows.len();
    for k in 1..levels {
        let factor = 4f64.powi(k as i32);
        for i in (k..levels).rev() {
            let improved: Vec<f64> = rows[i]
                .iter()
                .zip(&rows[i - 1])
                .map(|(fine, coarse)| (factor * fine - coarse) / (factor - 1.0))
                .collect();
            rows[i] = improved;
        }
    }
    rows.pop().unwrap_or_default()
}

fn shifted(x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut y = x.to_vec();
    for &(i, d) in moves {
        y[i] += d;
    }
    y
}

/// Derivative of a vector-valued function of one variable at `t`.
pub fn richardson_derivative<F>(f: F, t: f64, h0: f64, steps: usize) -> Vec<f64>
where
    F: Fn(f64) -> Vec<f64>,
{
    let rows = (0..steps.max(1))
        .map(|k| {
            let h = h0 / 2f64.powi(k as i32);
            let (a, b) = (f(t + h), f(t - h));
            a.iter().zip(&b).map(|(p, m)| (p - m) / (2.0 * h)).collect()
        })
        .collect();
    extrapolate(rows)
}

/// Gradient of `f` at `x` with initial step `h0` and `steps` levels.
pub fn richardson_gradient<F>(f: F, x: &[f64], h0: f64, steps: usize) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    (0..x.len()).map(|i| richardson_derivative(|t| vec![f(&shifted(x, &[(i, t)]))], 0.0, h0, steps)[0]).collect()
}

/// Hessian of `f` at `x`; mixed entries use the four-point stencil.
pub fn richardson_hessian<F>(f: F, x: &[f64], h0: f64, steps: usize) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    let f0 = f(x);
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let rows = (0..steps.max(1))
                .map(|k| {
                    let h = h0 / 2f64.powi(k as i32);
                    let v = if i == j {
                        (f(&shifted(x, &[(i, h)])) - 2.0 * f0 + f(&shifted(x, &[(i, -h)]))) / (h * h)
                    } else {
                        (f(&shifted(x, &[(i, h), (j, h)]))
                            - f(&shifted(x, &[(i, h), (j, -h)]))
                            - f(&shifted(x, &[(i, -h), (j, h)]))
                            + f(&shifted(x, &[(i, -h), (j, -h)])))
                            / (4.0 * h * h)
                    };
                    vec![v]
                })
                .collect();
            let v = extrapolate(rows)[0];
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}
