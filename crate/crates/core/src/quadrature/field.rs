use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Far-field behaviour of a field, measured from its anchor point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailDescriptor {
    /// Vanishes for `|y - anchor| > radius`.
    CompactSupport { radius: f64 },
    /// `u(y) = coefficient * |y - anchor|^{-exponent}` beyond `onset` when
    /// `exact`, otherwise only `|u(y)| <= coefficient * |y - anchor|^{-exponent}`.
    PowerLaw { coefficient: f64, exponent: f64, onset: f64, exact: bool },
    /// `|u| <= bound` everywhere.
    Bounded { bound: f64 },
}

impl TailDescriptor {
    /// Checks that the tail keeps the field in `L_sigma`.
    pub fn certify(&self, sigma: f64) -> Result<()> {
        match *self {
            TailDescriptor::PowerLaw { exponent, .. } if exponent <= -2.0 * sigma => Err(Error::DivergentTail(
                format!("power-law exponent {exponent} must exceed -2 sigma = {}", -2.0 * sigma),
            )),
            TailDescriptor::CompactSupport { radius } if !(radius >= 0.0) => {
                Err(Error::DivergentTail(format!("support radius {radius} is not a radius")))
            }
            _ => Ok(()),
        }
    }

    /// Radius beyond which the descriptor applies.
    pub fn onset(&self) -> f64 {
        match *self {
            TailDescriptor::CompactSupport { radius } => radius,
            TailDescriptor::PowerLaw { onset, .. } => onset,
            TailDescriptor::Bounded { .. } => 0.0,
        }
    }

    /// True when the field is known in closed form beyond [`Self::onset`].
    pub fn is_exact(&self) -> bool {
        matches!(self, TailDescriptor::CompactSupport { .. } | TailDescriptor::PowerLaw { exact: true, .. })
    }

    /// Decay exponent `q` used by the mapped far-field substitution.
    pub(crate) fn decay(&self) -> f64 {
        match *self {
            TailDescriptor::PowerLaw { exponent, .. } => exponent,
            _ => 0.0,
        }
    }

    fn dilated(self, mu: f64) -> Self {
        match self {
            TailDescriptor::CompactSupport { radius } => TailDescriptor::CompactSupport { radius: radius / mu },
            TailDescriptor::PowerLaw { coefficient, exponent, onset, exact } => TailDescriptor::PowerLaw {
                coefficient: coefficient * mu.powf(-exponent),
                exponent,
                onset: onset / mu,
                exact,
            },
            b @ TailDescriptor::Bounded { .. } => b,
        }
    }

    fn scaled(self, k: f64) -> Self {
        match self {
            TailDescriptor::PowerLaw { coefficient, exponent, onset, exact } => {
                TailDescriptor::PowerLaw { coefficient: coefficient * k, exponent, onset, exact }
            }
            TailDescriptor::Bounded { bound } => TailDescriptor::Bounded { bound: bound * k.abs() },
            c @ TailDescriptor::CompactSupport { .. } => c,
        }
    }
}

/// Region (relative to the anchor) on which the field is smooth enough for a
/// pointwise fractional Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothWindow {
    Everywhere,
    Ball { radius: f64 },
    Exterior { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl SmoothWindow {
    /// Distance from a point at radius `r` to the window boundary; non-positive
    /// outside the window.
    pub fn margin(&self, r: f64) -> f64 {
        match *self {
            SmoothWindow::Everywhere => f64::INFINITY,
            SmoothWindow::Ball { radius } => radius - r,
            SmoothWindow::Exterior { radius } => r - radius,
            SmoothWindow::Annulus { inner, outer } => (r - inner).min(outer - r),
        }
    }

    fn dilated(self, mu: f64) -> Self {
        match self {
            SmoothWindow::Everywhere => SmoothWindow::Everywhere,
            SmoothWindow::Ball { radius } => SmoothWindow::Ball { radius: radius / mu },
            SmoothWindow::Exterior { radius } => SmoothWindow::Exterior { radius: radius / mu },
            SmoothWindow::Annulus { inner, outer } => SmoothWindow::Annulus { inner: inner / mu, outer: outer / mu },
        }
    }
}

#[derive(Clone)]
enum Shape {
    Radial { profile: ProfileFn, breaks: Vec<f64> },
    General { f: PointFn },
}

/// A real function on R^n together with the metadata the evaluators need:
/// anchor point, smooth window, tail descriptor and sign information.
///
/// Radial fields are given by a profile `r -> u` about the anchor and a list of
/// radii where the profile is not smooth (or switches branch); the quadrature
/// splits exactly at those radii.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    anchor: Vec<f64>,
    shape: Shape,
    window: SmoothWindow,
    tail: TailDescriptor,
    nonneg: bool,
    holder_margin: f64,
    label: String,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("anchor", &self.anchor)
            .field("radial", &self.is_radial())
            .field("breaks", &self.breaks())
            .field("window", &self.window)
            .field("tail", &self.tail)
            .field("nonneg", &self.nonneg)
            .finish()
    }
}

impl ScalarField {
    /// Radial field about the origin.
    pub fn radial<P>(dim: usize, profile: P, tail: TailDescriptor) -> Self
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            anchor: vec![0.0; dim],
            shape: Shape::Radial { profile: Arc::new(profile), breaks: Vec::new() },
            window: SmoothWindow::Everywhere,
            tail,
            nonneg: false,
            holder_margin: 1.0,
            label: String::from("radial"),
        }
    }

    /// Arbitrary field; tail and window are measured from the origin.
    pub fn general<F>(dim: usize, f: F, tail: TailDescriptor) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            anchor: vec![0.0; dim],
            shape: Shape::General { f: Arc::new(f) },
            window: SmoothWindow::Everywhere,
            tail,
            nonneg: false,
            holder_margin: 1.0,
            label: String::from("general"),
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self::radial(
            dim,
            move |_| value,
            TailDescriptor::PowerLaw { coefficient: value, exponent: 0.0, onset: 0.0, exact: true },
        )
        .with_nonneg(value >= 0.0)
        .with_label(format!("constant({value})"))
    }

    pub fn with_breaks(mut self, mut radii: Vec<f64>) -> Self {
        radii.retain(|r| *r > 0.0 && r.is_finite());
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        if let Shape::Radial { breaks, .. } = &mut self.shape {
            *breaks = radii;
        }
        self
    }

    pub fn with_window(mut self, window: SmoothWindow) -> Self {
        self.window = window;
        self
    }

    pub fn with_nonneg(mut self, nonneg: bool) -> Self {
        self.nonneg = nonneg;
        self
    }

    pub fn with_holder_margin(mut self, alpha: f64) -> Self {
        self.holder_margin = alpha;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn window(&self) -> SmoothWindow {
        self.window
    }

    pub fn tail(&self) -> TailDescriptor {
        self.tail
    }

    pub fn nonneg(&self) -> bool {
        self.nonneg
    }

    pub fn holder_margin(&self) -> f64 {
        self.holder_margin
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.shape, Shape::Radial { .. })
    }

    /// Radial profile about the anchor, if the field has one.
    pub fn profile(&self, r: f64) -> Option<f64> {
        match &self.shape {
            Shape::Radial { profile, .. } => Some(profile(r)),
            Shape::General { .. } => None,
        }
    }

    pub(crate) fn profile_fn(&self) -> Option<&ProfileFn> {
        match &self.shape {
            Shape::Radial { profile, .. } => Some(profile),
            Shape::General { .. } => None,
        }
    }

    /// Radii (about the anchor) where the profile is not smooth.
    pub fn breaks(&self) -> &[f64] {
        match &self.shape {
            Shape::Radial { breaks, .. } => breaks,
            Shape::General { .. } => &[],
        }
    }

    /// Every radius at which quadrature along a ray should split: profile
    /// breaks plus the tail onset when the tail is exact.
    pub(crate) fn split_radii(&self) -> Vec<f64> {
        let mut radii = self.breaks().to_vec();
        let onset = self.tail.onset();
        if self.tail.is_exact() && onset > 0.0 && !radii.contains(&onset) {
            radii.push(onset);
            radii.sort_by(f64::total_cmp);
        }
        radii
    }

    pub fn distance_to_anchor(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.anchor).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.shape {
            Shape::Radial { profile, .. } => profile(self.distance_to_anchor(x)),
            Shape::General { f } => f(x),
        }
    }

    /// Distance from `x` to the boundary of the smooth window.
    pub fn window_margin(&self, x: &[f64]) -> f64 {
        self.window.margin(self.distance_to_anchor(x))
    }

    /// `x -> u(x - shift)`.
    pub fn translated(&self, shift: &[f64]) -> Self {
        let mut out = self.clone();
        for (a, s) in out.anchor.iter_mut().zip(shift) {
            *a += s;
        }
        if let Shape::General { f } = &self.shape {
            let f = f.clone();
            let shift = shift.to_vec();
            out.shape = Shape::General {
                f: Arc::new(move |x: &[f64]| {
                    let y: Vec<f64> = x.iter().zip(&shift).map(|(a, s)| a - s).collect();
                    f(&y)
                }),
            };
        }
        out
    }

    /// `x -> u(mu x)`.
    pub fn dilated(&self, mu: f64) -> Self {
        assert!(mu > 0.0, "dilation factor must be positive");
        let mut out = self.clone();
        out.anchor = self.anchor.iter().map(|a| a / mu).collect();
        out.window = self.window.dilated(mu);
        out.tail = self.tail.dilated(mu);
        out.shape = match &self.shape {
            Shape::Radial { profile, breaks } => {
                let profile = profile.clone();
                Shape::Radial {
                    profile: Arc::new(move |r| profile(mu * r)),
                    breaks: breaks.iter().map(|b| b / mu).collect(),
                }
            }
            Shape::General { f } => {
                let f = f.clone();
                Shape::General {
                    f: Arc::new(move |x: &[f64]| {
                        let y: Vec<f64> = x.iter().map(|a| mu * a).collect();
                        f(&y)
                    }),
                }
            }
        };
        out
    }

    /// `x -> k u(x)`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.tail = self.tail.scaled(k);
        out.nonneg = if k >= 0.0 { self.nonneg } else { false };
        out.shape = match &self.shape {
            Shape::Radial { profile, breaks } => {
                let profile = profile.clone();
                Shape::Radial { profile: Arc::new(move |r| k * profile(r)), breaks: breaks.clone() }
            }
            Shape::General { f } => {
                let f = f.clone();
                Shape::General { f: Arc::new(move |x: &[f64]| k * f(x)) }
            }
        };
        out
    }
}
