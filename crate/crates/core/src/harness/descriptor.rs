//! Text descriptors for the fields the command line can evaluate.
//!
//! | descriptor | field |
//! |------------|-------|
//! | `constant:c` | `c` |
//! | `poisson` | `(1 + |x|^2)^{-1}` |
//! | `bubble` | `(1 + |x|^2)^{-(n - 2 sigma)/2}` |
//! | `indicator-exterior:r` | indicator of `|x| > r` |
//! | `step-w:lambda`, `step-v:j`, `step-u:lambda:p` | step functions |
//! | `w-lambda:lambda` | mollified step `w_lambda` |
//! | `v-j:j` | member `v_j` of the mollified sequence |
//! | `u-lambda:p:q:lambda` | blow-up profile `u_lambda` |

use crate::constructions::{make_step_family, make_u_lambda, make_v_j, make_w_lambda, StepKind};
use crate::error::{Error, Result};
use crate::quadrature::{QuadConfig, ScalarField, SmoothWindow, TailDescriptor};
use crate::specfun::FracParams;

fn arg(desc: &str, parts: &[&str], k: usize) -> Result<f64> {
    parts
        .get(k)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::InvalidParameter(format!("descriptor '{desc}' needs a numeric argument {k}")))
}

pub fn parse_field(desc: &str, params: &FracParams, cfg: &QuadConfig) -> Result<ScalarField> {
    let parts: Vec<&str> = desc.trim().split(':').collect();
    let n = params.n;
    let field = match parts[0] {
        "constant" => ScalarField::constant(n, arg(desc, &parts, 1)?),
        "poisson" => ScalarField::radial(
            n,
            |r| 1.0 / (1.0 + r * r),
            TailDescriptor::PowerLaw { coefficient: 1.0, exponent: 2.0, onset: 1.0, exact: false },
        )
        .with_nonneg(true)
        .with_label("poisson"),
        "bubble" => {
            let e = 0.5 * (n as f64 - 2.0 * params.sigma);
            ScalarField::radial(
                n,
                move |r| (1.0 + r * r).powf(-e),
                TailDescriptor::PowerLaw {
                    coefficient: 2f64.powf(e.abs()),
                    exponent: 2.0 * e,
                    onset: 1.0,
                    exact: false,
                },
            )
            .with_nonneg(true)
            .with_label("bubble")
        }
        "indicator-exterior" => {
            let r0 = arg(desc, &parts, 1)?;
            if !(r0 > 0.0) {
                return Err(Error::InvalidParameter("indicator radius must be positive".into()));
            }
            ScalarField::radial(
                n,
                move |r| if r <= r0 { 0.0 } else { 1.0 },
                TailDescriptor::PowerLaw { coefficient: 1.0, exponent: 0.0, onset: r0, exact: true },
            )
            .with_breaks(vec![r0])
            .with_window(SmoothWindow::Ball { radius: r0 })
            .with_nonneg(true)
            .with_label("indicator-exterior")
        }
        "step-w" => make_step_family(StepKind::W, arg(desc, &parts, 1)?, params)?.field(),
        "step-v" => make_step_family(StepKind::V, arg(desc, &parts, 1)?, params)?.field(),
        "step-u" => make_step_family(StepKind::U { p: arg(desc, &parts, 2)? }, arg(desc, &parts, 1)?, params)?.field(),
        "w-lambda" => make_w_lambda(arg(desc, &parts, 1)?, params)?,
        "v-j" => make_v_j(arg(desc, &parts, 1)?, params, cfg)?.v,
        "u-lambda" => {
            make_u_lambda(params, arg(desc, &parts, 1)?, arg(desc, &parts, 2)?, arg(desc, &parts, 3)?)?.u_lambda
        }
        other => return Err(Error::InvalidParameter(format!("unknown field descriptor '{other}'"))),
    };
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_descriptors() {
        let p = FracParams::new(1, 0.5).unwrap();
        let cfg = QuadConfig::default();
        assert_eq!(parse_field("constant:2.5", &p, &cfg).unwrap().evaluate(&[3.0]), 2.5);
        assert_eq!(parse_field("poisson", &p, &cfg).unwrap().evaluate(&[1.0]), 0.5);
        assert_eq!(parse_field("indicator-exterior:3", &p, &cfg).unwrap().evaluate(&[3.5]), 1.0);
        assert_eq!(parse_field("step-v:10", &p, &cfg).unwrap().evaluate(&[0.0]), 1.0);
        assert_eq!(parse_field("u-lambda:3:1:10", &p, &cfg).unwrap().evaluate(&[0.0]), 10.0);
        for bad in ["nope", "constant", "constant:x", "indicator-exterior:-1", "step-u:2"] {
            assert!(parse_field(bad, &p, &cfg).is_err(), "{bad}");
        }
    }
}
