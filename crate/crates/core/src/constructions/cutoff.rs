//! The smooth cutoff `eta` and the radial cutoffs built from it.

use serde::{Deserialize, Serialize};

/// Exponential smoothstep `eta(t) = g(t) / (g(t) + g(1 - t))` with
/// `g(t) = exp(-1/t)` for `t > 0` and `g = 0` otherwise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothStep;

impl SmoothStep {
    pub fn eval(&self, t: f64) -> f64 {
        smooth_step(t)
    }

    /// `x -> eta(|x| - start)` as a function of `r = |x|`.
    pub fn radial(&self, r: f64, start: f64) -> f64 {
        smooth_step(r - start)
    }
}

pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        1.0 / (1.0 + (1.0 / t - 1.0 / (1.0 - t)).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn symmetric_about_half() {
        for k in 1..100 {
            let t = k as f64 / 100.0;
            assert!((smooth_step(t) + smooth_step(1.0 - t) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn monotone_on_grid() {
        let vals: Vec<f64> = (0..=3000).map(|k| smooth_step(-1.0 + k as f64 / 1000.0)).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn derivatives_stay_bounded() {
        let h = 1e-3;
        let mut max = [0.0f64; 3];
        for k in 0..=3000 {
            let t = -1.0 + k as f64 / 1000.0;
            let f = |s: f64| smooth_step(t + s * h);
            let d1 = (f(1.0) - f(-1.0)) / (2.0 * h);
            let d2 = (f(1.0) - 2.0 * f(0.0) + f(-1.0)) / (h * h);
            let d3 = (f(2.0) - 2.0 * f(1.0) + 2.0 * f(-1.0) - f(-2.0)) / (2.0 * h * h * h);
            for (m, d) in max.iter_mut().zip([d1, d2, d3]) {
                *m = m.max(d.abs());
            }
        }
        assert!(max[0] < 5.0 && max[1] < 50.0 && max[2] < 500.0, "{max:?}");
    }
}
