//! Closed-form Finsler metrics used as initial data and as oracles.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricFamily {
    /// `F = |y|`.
    Euclidean,
    /// `F = (y1^4 + y2^4 + c |y|^4)^(1/4)`, independent of `x`.
    MinkowskiQuartic { c: f64 },
    /// `F = e^u |y|` with `u = a cos x1 cos x2`.
    ConformalTorus { a: f64 },
    /// `F = |y| + b (cos x2 y1 + sin x1 y2)`; strongly convex for `|b| < 1/sqrt 2`.
    RandersTorus { b: f64 },
    /// Funk metric of the unit disk. Chart-restricted, flag curvature `-1/4`.
    FunkDisk,
    /// Round unit sphere in stereographic coordinates,
    /// `F = 2 |y| / (1 + |x|^2)`. Chart-restricted, flag curvature `1`.
    RoundSphere,
}

impl MetricFamily {
    pub const NAMES: [&'static str; 6] = [
        "euclidean",
        "minkowski-quartic",
        "conformal-torus",
        "randers-torus",
        "funk-disk",
        "round-sphere",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MetricFamily::Euclidean => "euclidean",
            MetricFamily::MinkowskiQuartic { .. } => "minkowski-quartic",
            MetricFamily::ConformalTorus { .. } => "conformal-torus",
            MetricFamily::RandersTorus { .. } => "randers-torus",
            MetricFamily::FunkDisk => "funk-disk",
            MetricFamily::RoundSphere => "round-sphere",
        }
    }

    /// Parameter names accepted by a family, in emission order.
    pub fn param_names(name: &str) -> Option<&'static [&'static str]> {
        match name {
            "euclidean" | "funk-disk" | "round-sphere" => Some(&[]),
            "minkowski-quartic" => Some(&["c"]),
            "conformal-torus" => Some(&["a"]),
            "randers-torus" => Some(&["b"]),
            _ => None,
        }
    }

    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            MetricFamily::MinkowskiQuartic { c } => vec![("c", c)],
            MetricFamily::ConformalTorus { a } => vec![("a", a)],
            MetricFamily::RandersTorus { b } => vec![("b", b)],
            _ => Vec::new(),
        }
    }

    /// Builds a family from its registry name and parameters. Missing
    /// parameters take the defaults `c = 1`, `a = 0.05`, `b = 0.3`.
    pub fn from_name(name: &str, params: &[(String, f64)]) -> Result<Self> {
        let allowed = Self::param_names(name)
            .ok_or_else(|| Error::Config(format!("unknown metric family `{name}`")))?;
        for (k, _) in params {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Config(format!(
                    "family `{name}` has no parameter `{k}`"
                )));
            }
        }
        let get = |key: &str, default: f64| {
            params
                .iter()
                .find(|(k, _)| k == key)
                .map_or(default, |(_, v)| *v)
        };
        let fam = match name {
            "euclidean" => MetricFamily::Euclidean,
            "minkowski-quartic" => MetricFamily::MinkowskiQuartic { c: get("c", 1.0) },
            "conformal-torus" => MetricFamily::ConformalTorus { a: get("a", 0.05) },
            "randers-torus" => MetricFamily::RandersTorus { b: get("b", 0.3) },
            "funk-disk" => MetricFamily::FunkDisk,
            "round-sphere" => MetricFamily::RoundSphere,
            _ => unreachable!(),
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MetricFamily::MinkowskiQuartic { c } if !(c > 0.0) => Err(Error::Config(format!(
                "minkowski-quartic needs c > 0, got {c}"
            ))),
            MetricFamily::RandersTorus { b } if !(b.abs() < std::f64::consts::FRAC_1_SQRT_2) => {
                Err(Error::Config(format!(
                    "randers-torus needs |b| < 1/sqrt(2), got {b}"
                )))
            }
            MetricFamily::ConformalTorus { a } if !a.is_finite() => Err(Error::Config(format!(
                "conformal-torus needs finite a, got {a}"
            ))),
            _ => Ok(()),
        }
    }

    /// Whether the family is globally defined on the periodic torus chart.
    pub fn on_torus(&self) -> bool {
        !matches!(self, MetricFamily::FunkDisk | MetricFamily::RoundSphere)
    }

    /// Whether `x` lies in the chart where the family is defined.
    pub fn in_chart(&self, x: [f64; 2]) -> bool {
        match self {
            MetricFamily::FunkDisk => x[0] * x[0] + x[1] * x[1] < 1.0,
            _ => true,
        }
    }

    /// Ambient Finsler function `F(x, y)`.
    pub fn norm(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let yy = y[0] * y[0] + y[1] * y[1];
        match *self {
            MetricFamily::Euclidean => yy.sqrt(),
            MetricFamily::MinkowskiQuartic { c } => {
                (y[0].powi(4) + y[1].powi(4) + c * yy * yy).powf(0.25)
            }
            MetricFamily::ConformalTorus { a } => (a * x[0].cos() * x[1].cos()).exp() * yy.sqrt(),
            MetricFamily::RandersTorus { b } => {
                yy.sqrt() + b * (x[1].cos() * y[0] + x[0].sin() * y[1])
            }
            MetricFamily::FunkDisk => {
                let xx = x[0] * x[0] + x[1] * x[1];
                let xy = x[0] * y[0] + x[1] * y[1];
                ((yy * (1.0 - xx) + xy * xy).sqrt() + xy) / (1.0 - xx)
            }
            MetricFamily::RoundSphere => 2.0 * yy.sqrt() / (1.0 + x[0] * x[0] + x[1] * x[1]),
        }
    }

    /// Restriction to the Euclidean unit circle, `phi(x, theta)`.
    pub fn phi(&self, x1: f64, x2: f64, theta: f64) -> f64 {
        self.norm([x1, x2], [theta.cos(), theta.sin()])
    }
}

impl fmt::Display for MetricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        for (k, v) in self.params() {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}
