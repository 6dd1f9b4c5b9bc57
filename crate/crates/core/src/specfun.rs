//! Closed-form constants: the gamma function, sphere and ball measures, the
//! normalization constant of the fractional Laplacian and the tail integrals
//! of its kernel over ball complements.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments (Lanczos, g = 7, with reflection below 1/2).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEFFS[0];
        for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} is outside (0, 1)")));
    }
    Ok(())
}

/// Surface measure of the unit sphere in R^n and volume of the unit ball.
pub fn sphere_measures(n: usize) -> Result<(f64, f64)> {
    check_dim(n)?;
    let area = match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0),
    };
    Ok((area, area / n as f64))
}

/// `c_{n,sigma} = 4^sigma sigma Gamma((n + 2 sigma)/2) / (pi^{n/2} Gamma(1 - sigma))`.
pub fn normalization_constant(n: usize, sigma: f64) -> Result<f64> {
    check_dim(n)?;
    check_sigma(sigma)?;
    let nf = n as f64;
    Ok(4f64.powf(sigma) * sigma * gamma((nf + 2.0 * sigma) / 2.0) / (PI.powf(nf / 2.0) * gamma(1.0 - sigma)))
}

/// Integral of `|y|^{-n-2 sigma}` over the complement of the unit ball.
pub fn tail_constant(n: usize, sigma: f64) -> Result<f64> {
    weighted_tail_constant(n, sigma, 0.0)
}

/// Integral of `|y|^{-n-2 sigma-q}` over the complement of the unit ball.
pub fn weighted_tail_constant(n: usize, sigma: f64, q: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if q <= -2.0 * sigma {
        return Err(Error::DivergentTail(format!("q = {q} must exceed -2 sigma = {}", -2.0 * sigma)));
    }
    let (area, _) = sphere_measures(n)?;
    Ok(area / (2.0 * sigma + q))
}

/// Integral of `|y|^{-n-2 sigma-q}` over `{|y| > r}`.
pub fn ball_complement_integral(n: usize, sigma: f64, r: f64, q: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("radius r = {r} must be positive")));
    }
    Ok(weighted_tail_constant(n, sigma, q)? * r.powf(-2.0 * sigma - q))
}

/// Dimension, order and the derived constants used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub n: usize,
    pub sigma: f64,
    /// `c_{n,sigma}`
    pub c: f64,
    /// `gamma_{n,sigma} = |S^{n-1}| / (2 sigma)`
    pub gamma_tail: f64,
    pub sphere_area: f64,
    pub ball_volume: f64,
}

impl FracParams {
    pub fn new(n: usize, sigma: f64) -> Result<Self> {
        let (sphere_area, ball_volume) = sphere_measures(n)?;
        Ok(Self {
            n,
            sigma,
            c: normalization_constant(n, sigma)?,
            gamma_tail: tail_constant(n, sigma)?,
            sphere_area,
            ball_volume,
        })
    }

    /// Kernel exponent `n + 2 sigma`.
    pub fn kernel_exponent(&self) -> f64 {
        self.n as f64 + 2.0 * self.sigma
    }

    /// `gamma~_{n,sigma,q}`
    pub fn weighted_tail(&self, q: f64) -> Result<f64> {
        weighted_tail_constant(self.n, self.sigma, q)
    }

    /// Measure of the unit sphere one dimension down, `|S^{n-2}|`, used by the
    /// polar-angle reduction. Undefined for `n = 1`.
    pub(crate) fn equator_area(&self) -> f64 {
        match self.n {
            1 => 0.0,
            2 => 2.0,
            _ => sphere_measures(self.n - 1).map(|m| m.0).unwrap_or(0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_reference_values() {
        let cases = [
            (0.5, PI.sqrt()),
            (1.0, 1.0),
            (1.5, 0.5 * PI.sqrt()),
            (5.0, 24.0),
            (10.0, 362_880.0),
            (0.25, 3.625_609_908_221_908_3),
            (0.75, 1.225_416_702_465_177_6),
            (1.25, 0.906_402_477_055_477_1),
            (0.1, 9.513_507_698_668_732),
            (19.5, 2.772_432_298_633_371_8e16),
        ];
        for (x, want) in cases {
            assert!(rel(gamma(x), want) < 1e-13, "gamma({x}) = {} vs {want}", gamma(x));
        }
    }

    #[test]
    fn sphere_measures_low_dimensions() {
        assert_eq!(sphere_measures(1).unwrap(), (2.0, 2.0));
        let (a, v) = sphere_measures(2).unwrap();
        assert!(rel(a, 2.0 * PI) < 1e-15 && rel(v, PI) < 1e-15);
        let (a, v) = sphere_measures(3).unwrap();
        assert!(rel(a, 4.0 * PI) < 1e-15 && rel(v, 4.0 * PI / 3.0) < 1e-15);
        let (a, _) = sphere_measures(4).unwrap();
        assert!(rel(a, 2.0 * PI * PI) < 1e-13);
        assert!(sphere_measures(0).is_err());
    }

    #[test]
    fn normalization_half_order() {
        assert!(rel(normalization_constant(1, 0.5).unwrap(), 1.0 / PI) < 1e-13);
        assert!(rel(normalization_constant(2, 0.5).unwrap(), 0.5 / PI) < 1e-13);
        assert!(normalization_constant(1, 1.0).is_err());
        assert!(normalization_constant(1, 0.0).is_err());
    }

    #[test]
    fn normalization_positive_and_smooth_on_grid() {
        for n in 1..=4 {
            let vals: Vec<f64> = (1..=9).map(|k| normalization_constant(n, k as f64 / 10.0).unwrap()).collect();
            assert!(vals.iter().all(|&c| c > 0.0));
            for (k, w) in vals.windows(2).enumerate() {
                let spacing = 0.1 / ((k + 1) as f64 / 10.0);
                assert!(rel(w[1], w[0]) < 10.0 * spacing, "{w:?}");
            }
        }
    }

    #[test]
    fn tail_constants() {
        assert!(rel(tail_constant(1, 0.5).unwrap(), 2.0) < 1e-15);
        assert_eq!(weighted_tail_constant(2, 0.3, 0.0).unwrap(), tail_constant(2, 0.3).unwrap());
        assert!(rel(tail_constant(3, 0.5).unwrap(), 4.0 * PI) < 1e-15);
        assert!(rel(weighted_tail_constant(3, 0.5, 1.0).unwrap(), 2.0 * PI) < 1e-15);
        assert!(matches!(weighted_tail_constant(1, 0.5, -1.0), Err(Error::DivergentTail(_))));
    }

    #[test]
    fn ball_complement_values() {
        assert!(rel(ball_complement_integral(1, 0.5, 3.0, 0.0).unwrap(), 2.0 / 3.0) < 1e-15);
        for (n, s, q) in [(1, 0.25, 0.0), (2, 0.5, 1.0), (3, 0.75, -0.5)] {
            let a = ball_complement_integral(n, s, 1.0, q).unwrap();
            let b = weighted_tail_constant(n, s, q).unwrap();
            assert!(rel(a, b) < 1e-14);
            assert!(ball_complement_integral(n, s, 2.0, q).unwrap() < a);
        }
        assert!(ball_complement_integral(1, 0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn params_invariants() {
        for n in 1..=3 {
            for s in [0.25, 0.5, 0.75] {
                let p = FracParams::new(n, s).unwrap();
                assert_eq!(p.gamma_tail * 2.0 * s, p.sphere_area);
                assert!(rel(p.ball_volume, p.sphere_area / n as f64) < 1e-15);
                assert!(p.c > 0.0);
            }
        }
    }
}
