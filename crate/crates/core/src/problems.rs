//! Test problems: 1-D β-log-concave targets and approximately convex
//! objectives built as a convex base plus a bounded perturbation.
//!
//! A log-density `φ + a·η` with `φ` concave and `|η| ≤ 1` is
//! `2a`-log-concave, which is where every target's `β` comes from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BodySpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Base1d {
    Constant,
    /// `-slope · x`.
    Linear { slope: f64 },
    /// `-curvature · (x - center)²`.
    Quadratic { center: f64, curvature: f64 },
    /// `-scale · |x - center|`.
    Abs { center: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Wiggle {
    None,
    Sine { freq: f64 },
    /// `sign(sin(freq · x))`: discontinuous, still bounded by one.
    Sign { freq: f64 },
}

impl Wiggle {
    fn at(self, t: f64) -> f64 {
        match self {
            Wiggle::None => 0.0,
            Wiggle::Sine { freq } => (freq * t).sin(),
            Wiggle::Sign { freq } => (freq * t).sin().signum(),
        }
    }
}

/// `log g = base + amplitude · wiggle` on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target1d {
    pub name: String,
    pub base: Base1d,
    #[serde(default = "no_wiggle")]
    pub perturbation: Wiggle,
    #[serde(default)]
    pub amplitude: f64,
    pub lo: f64,
    pub hi: f64,
}

fn no_wiggle() -> Wiggle {
    Wiggle::None
}

impl Target1d {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Config(format!("target {}: need lo < hi", self.name)));
        }
        if !(self.amplitude >= 0.0) {
            return Err(Error::Config(format!("target {}: amplitude must be >= 0", self.name)));
        }
        Ok(())
    }

    pub fn log_g(&self, x: f64) -> f64 {
        let base = match self.base {
            Base1d::Constant => 0.0,
            Base1d::Linear { slope } => -slope * x,
            Base1d::Quadratic { center, curvature } => -curvature * (x - center).powi(2),
            Base1d::Abs { center, scale } => -scale * (x - center).abs(),
        };
        base + self.amplitude * self.perturbation.at(x)
    }

    /// Log-concavity defect `2a`.
    pub fn beta(&self) -> f64 {
        match self.perturbation {
            Wiggle::None => 0.0,
            _ => 2.0 * self.amplitude,
        }
    }
}

/// The ten 1-D targets used for sampler verification, covering
/// `β ∈ {0, 0.05, 0.2, 0.5}`.
pub fn registry_1d() -> Vec<Target1d> {
    let t = |name: &str, base, perturbation, amplitude, lo, hi| Target1d {
        name: name.to_string(),
        base,
        perturbation,
        amplitude,
        lo,
        hi,
    };
    use Base1d::*;
    use Wiggle::{None as Flat, Sign, Sine};
    vec![
        t("uniform", Constant, Flat, 0.0, 0.0, 1.0),
        t("exp5", Linear { slope: 5.0 }, Flat, 0.0, 0.0, 1.0),
        t("gauss", Quadratic { center: 0.3, curvature: 8.0 }, Flat, 0.0, -1.0, 1.0),
        t("laplace_sine", Abs { center: 0.7, scale: 5.0 }, Sine { freq: 40.0 }, 0.025, 0.0, 1.0),
        t("exp5_sine", Linear { slope: 5.0 }, Sine { freq: 50.0 }, 0.025, 0.0, 1.0),
        t("quad_sign", Quadratic { center: 0.0, curvature: 4.0 }, Sign { freq: 30.0 }, 0.1, -2.0, 2.0),
        t("abs_sine", Abs { center: 0.0, scale: 3.0 }, Sine { freq: 30.0 }, 0.1, -1.0, 2.0),
        t("exp10_sine", Linear { slope: 10.0 }, Sine { freq: 20.0 }, 0.25, 0.0, 3.0),
        t("gauss_sign", Quadratic { center: 1.0, curvature: 2.0 }, Sign { freq: 40.0 }, 0.25, -1.0, 3.0),
        t("flat_sine", Constant, Sine { freq: 25.0 }, 0.25, 0.0, 1.0),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConvexBase {
    /// `scale · ‖x - center‖²`.
    Quadratic {
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default = "unit")]
        scale: f64,
    },
    /// `scale · ‖x - center‖₁`.
    L1 {
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default = "unit")]
        scale: f64,
    },
    /// `c · x`.
    Linear { coeffs: Vec<f64> },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Perturbation {
    None,
    /// `Π_k sin(freq · x_k)`.
    Sine { freq: f64 },
    /// `sign(Π_k sin(freq · x_k))`.
    Sign { freq: f64 },
    /// `sin(freq · ‖x - center‖)`.
    Radial { freq: f64 },
    /// `‖x - center‖ · sin(freq · ‖x - center‖)`: non-convexity that grows
    /// linearly away from the base's center.
    Growing { freq: f64 },
}

/// `F = f + amplitude · η` with convex `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub dim: usize,
    pub base: ConvexBase,
    #[serde(default = "flat")]
    pub perturbation: Perturbation,
    #[serde(default)]
    pub amplitude: f64,
}

fn flat() -> Perturbation {
    Perturbation::None
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl ObjectiveSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("objective dimension must be positive".into()));
        }
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::Config("perturbation amplitude must be >= 0".into()));
        }
        let bad = match &self.base {
            ConvexBase::Quadratic { center, scale } | ConvexBase::L1 { center, scale } => {
                center.as_ref().is_some_and(|c| c.len() != self.dim) || !(*scale >= 0.0)
            }
            ConvexBase::Linear { coeffs } => coeffs.len() != self.dim,
        };
        if bad {
            return Err(Error::Config("convex base parameters do not match the dimension".into()));
        }
        Ok(())
    }

    pub fn center(&self) -> Vec<f64> {
        match &self.base {
            ConvexBase::Quadratic { center, .. } | ConvexBase::L1 { center, .. } => {
                center.clone().unwrap_or_else(|| vec![0.0; self.dim])
            }
            ConvexBase::Linear { .. } => vec![0.0; self.dim],
        }
    }

    /// The hidden convex `f`.
    pub fn convex(&self, x: &[f64]) -> f64 {
        match &self.base {
            ConvexBase::Quadratic { center, scale } => {
                let c = center.as_deref();
                scale
                    * x.iter()
                        .enumerate()
                        .map(|(k, v)| (v - c.map_or(0.0, |c| c[k])).powi(2))
                        .sum::<f64>()
            }
            ConvexBase::L1 { center, scale } => {
                let c = center.as_deref();
                scale
                    * x.iter()
                        .enumerate()
                        .map(|(k, v)| (v - c.map_or(0.0, |c| c[k])).abs())
                        .sum::<f64>()
            }
            ConvexBase::Linear { coeffs } => coeffs.iter().zip(x).map(|(a, b)| a * b).sum(),
        }
    }

    /// `η(x)` with `|η| ≤ 1`, except `Growing`, where `|η| ≤ ‖x - center‖`.
    pub fn perturbation_at(&self, x: &[f64]) -> f64 {
        match self.perturbation {
            Perturbation::None => 0.0,
            Perturbation::Sine { freq } => x.iter().map(|v| (freq * v).sin()).product(),
            Perturbation::Sign { freq } => {
                x.iter().map(|v| (freq * v).sin()).product::<f64>().signum()
            }
            Perturbation::Radial { freq } | Perturbation::Growing { freq } => {
                let c = self.center();
                let d: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a - b).collect();
                let r = norm(&d);
                let s = (freq * r).sin();
                if matches!(self.perturbation, Perturbation::Growing { .. }) {
                    r * s
                } else {
                    s
                }
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.convex(x) + self.amplitude * self.perturbation_at(x)
    }

    /// Bound on `|F - f|∞`; `None` when it depends on the domain.
    pub fn non_convexity(&self) -> Option<f64> {
        match self.perturbation {
            Perturbation::None => Some(0.0),
            Perturbation::Growing { .. } => None,
            _ => Some(self.amplitude),
        }
    }

    /// `(min f, max f)` over a built-in body, where available in closed form.
    pub fn convex_range(&self, body: &BodySpec) -> Option<(f64, f64)> {
        let c = self.center();
        match (&self.base, body) {
            (ConvexBase::Quadratic { scale, .. }, BodySpec::Ball { radius, center, .. }) => {
                let bc = center.clone().unwrap_or_else(|| vec![0.0; self.dim]);
                let d: Vec<f64> = c.iter().zip(&bc).map(|(a, b)| a - b).collect();
                let off = norm(&d);
                let lo = (off - radius).max(0.0);
                Some((scale * lo * lo, scale * (off + radius).powi(2)))
            }
            (ConvexBase::Linear { coeffs }, BodySpec::Ball { radius, center, .. }) => {
                let bc = center.clone().unwrap_or_else(|| vec![0.0; self.dim]);
                let mid: f64 = coeffs.iter().zip(&bc).map(|(a, b)| a * b).sum();
                let r = norm(coeffs) * radius;
                Some((mid - r, mid + r))
            }
            (base, BodySpec::Box { .. }) => {
                let (lo, hi) = box_corners(body)?;
                let per_axis = |k: usize, g: &dyn Fn(f64) -> f64, conv: bool| -> (f64, f64) {
                    let (a, b) = (lo[k], hi[k]);
                    let ends = (g(a), g(b));
                    let mx = ends.0.max(ends.1);
                    let mn = if conv && c[k] > a && c[k] < b { g(c[k]) } else { ends.0.min(ends.1) };
                    (mn, mx)
                };
                let mut total = (0.0, 0.0);
                for k in 0..self.dim {
                    let (mn, mx) = match base {
                        ConvexBase::Quadratic { scale, .. } => {
                            per_axis(k, &|v| scale * (v - c[k]).powi(2), true)
                        }
                        ConvexBase::L1 { scale, .. } => per_axis(k, &|v| scale * (v - c[k]).abs(), true),
                        ConvexBase::Linear { coeffs } => per_axis(k, &|v| coeffs[k] * v, false),
                    };
                    total.0 += mn;
                    total.1 += mx;
                }
                Some(total)
            }
            _ => None,
        }
    }
}

fn box_corners(body: &BodySpec) -> Option<(Vec<f64>, Vec<f64>)> {
    match body {
        BodySpec::Box {
            dim,
            lo,
            hi,
            half_width,
        } => {
            let h = half_width.unwrap_or(1.0);
            Some((
                lo.clone().unwrap_or_else(|| vec![-h; *dim]),
                hi.clone().unwrap_or_else(|| vec![h; *dim]),
            ))
        }
        _ => None,
    }
}
