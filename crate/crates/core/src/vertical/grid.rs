use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Node, Result};

/// Smallest admissible count along any grid axis.
pub const MIN_COUNT: usize = 8;

/// Chart nodes per axis on a pointwise patch. Two nested 5-point stencils
/// reach four nodes out from the centre.
pub const PATCH_NODES: usize = 9;

/// Node counts of the periodic chart `[0, 2pi)^2` and of the fiber circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub n_x1: usize,
    pub n_x2: usize,
    pub n_theta: usize,
}

impl GridSpec {
    pub fn new(n_x1: usize, n_x2: usize, n_theta: usize) -> Result<Self> {
        let spec = GridSpec {
            n_x1,
            n_x2,
            n_theta,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same count along every axis.
    pub fn cube(n: usize) -> Result<Self> {
        Self::new(n, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("n_x1", self.n_x1),
            ("n_x2", self.n_x2),
            ("n_theta", self.n_theta),
        ] {
            if n < MIN_COUNT {
                return Err(Error::Config(format!(
                    "{name} = {n} is below the minimum {MIN_COUNT}"
                )));
            }
        }
        if !self.n_theta.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "n_theta = {} must be even for spectral differentiation",
                self.n_theta
            )));
        }
        Ok(())
    }

    pub fn h_x1(&self) -> f64 {
        2.0 * PI / self.n_x1 as f64
    }

    pub fn h_x2(&self) -> f64 {
        2.0 * PI / self.n_x2 as f64
    }

    pub fn h_theta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn len(&self) -> usize {
        self.n_x1 * self.n_x2 * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.n_x1, self.n_x2, self.n_theta)
    }
}

/// How the chart axes are laid out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Chart {
    /// Periodic flat torus `[0, 2pi)^2`.
    Torus,
    /// Small non-periodic square of `PATCH_NODES^2` nodes centred on a query
    /// point, used for chart-restricted metrics evaluated pointwise.
    Patch { center: [f64; 2], h: f64 },
}

/// Orthonormal frame `e = (cos t, sin t)`, `m = (-sin t, cos t)` at each
/// fiber node.
#[derive(Debug, Clone)]
pub struct FiberFrame {
    theta: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl FiberFrame {
    pub fn new(n_theta: usize) -> Self {
        let theta: Vec<f64> = (0..n_theta)
            .map(|k| 2.0 * PI * k as f64 / n_theta as f64)
            .collect();
        let cos = theta.iter().map(|t| t.cos()).collect();
        let sin = theta.iter().map(|t| t.sin()).collect();
        FiberFrame { theta, cos, sin }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn theta(&self, k: usize) -> f64 {
        self.theta[k]
    }

    /// Unit radial vector; equals `y` on the Euclidean unit circle.
    #[inline]
    pub fn e(&self, k: usize) -> [f64; 2] {
        [self.cos[k], self.sin[k]]
    }

    /// Unit tangent to the fiber circle.
    #[inline]
    pub fn m(&self, k: usize) -> [f64; 2] {
        [-self.sin[k], self.cos[k]]
    }
}

/// Discretized sphere bundle: chart nodes times fiber angles, with the
/// precomputed frame and FFT plans shared by every derivative.
///
/// Samples are stored row-major as `(i1, i2, k)` so that each fiber circle is
/// a contiguous line of `n_theta` values.
#[derive(Clone)]
pub struct Grid {
    dims: [usize; 3],
    chart: Chart,
    h: [f64; 2],
    frame: FiberFrame,
    pub(crate) fft: Arc<dyn Fft<f64>>,
    pub(crate) ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dims", &self.dims)
            .field("chart", &self.chart)
            .field("h", &self.h)
            .finish()
    }
}

impl Grid {
    pub fn torus(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self::build(
            [spec.n_x1, spec.n_x2, spec.n_theta],
            Chart::Torus,
            [spec.h_x1(), spec.h_x2()],
        ))
    }

    pub fn patch(center: [f64; 2], h: f64, n_theta: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!(
                "patch spacing must be positive, got {h}"
            )));
        }
        if n_theta < MIN_COUNT || !n_theta.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "n_theta = {n_theta} must be even and at least {MIN_COUNT}"
            )));
        }
        Ok(Self::build(
            [PATCH_NODES, PATCH_NODES, n_theta],
            Chart::Patch { center, h },
            [h, h],
        ))
    }

    fn build(dims: [usize; 3], chart: Chart, h: [f64; 2]) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(dims[2]);
        let ifft = planner.plan_fft_inverse(dims[2]);
        Grid {
            dims,
            chart,
            h,
            frame: FiberFrame::new(dims[2]),
            fft,
            ifft,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn n_theta(&self) -> usize {
        self.dims[2]
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    /// Chart spacing along axis 0 or 1.
    pub fn h(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    pub fn h_theta(&self) -> f64 {
        2.0 * PI / self.dims[2] as f64
    }

    /// Smallest spacing over all three axes.
    pub fn h_min(&self) -> f64 {
        self.h[0].min(self.h[1]).min(self.h_theta())
    }

    pub fn frame(&self) -> &FiberFrame {
        &self.frame
    }

    /// Dimensions of a torus grid; `None` for a patch.
    pub fn spec(&self) -> Option<GridSpec> {
        match self.chart {
            Chart::Torus => Some(GridSpec {
                n_x1: self.dims[0],
                n_x2: self.dims[1],
                n_theta: self.dims[2],
            }),
            Chart::Patch { .. } => None,
        }
    }

    /// Chart coordinate of node `i` along `axis`.
    pub fn x(&self, axis: usize, i: usize) -> f64 {
        match self.chart {
            Chart::Torus => i as f64 * self.h[axis],
            Chart::Patch { center, h } => center[axis] + (i as f64 - (PATCH_NODES / 2) as f64) * h,
        }
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize, k: usize) -> usize {
        (i1 * self.dims[1] + i2) * self.dims[2] + k
    }

    #[inline]
    pub fn node(&self, idx: usize) -> Node {
        let k = idx % self.dims[2];
        let rest = idx / self.dims[2];
        Node {
            i1: rest / self.dims[1],
            i2: rest % self.dims[1],
            k,
        }
    }

    /// Fiber index of a flat sample index.
    #[inline]
    pub fn theta_index(&self, idx: usize) -> usize {
        idx % self.dims[2]
    }

    /// Index of the fiber line through the centre of a patch.
    pub fn center_line(&self) -> usize {
        let c = (self.dims[0] / 2, self.dims[1] / 2);
        self.index(c.0, c.1, 0)
    }

    /// Samples `f(x1, x2, theta)` at every node.
    pub fn sample(&self, f: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i1 in 0..self.dims[0] {
            let x1 = self.x(0, i1);
            for i2 in 0..self.dims[1] {
                let x2 = self.x(1, i2);
                for k in 0..self.dims[2] {
                    out.push(f(x1, x2, self.frame.theta(k)));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_rejects_small_and_odd_counts() {
        assert!(GridSpec::new(4, 16, 16).is_err());
        assert!(GridSpec::new(16, 16, 15).is_err());
        assert!(GridSpec::new(8, 8, 8).is_ok());
    }

    #[test]
    fn spacings_are_exact() {
        let s = GridSpec::new(16, 32, 64).unwrap();
        assert_eq!(s.h_x1(), 2.0 * PI / 16.0);
        assert_eq!(s.h_x2(), 2.0 * PI / 32.0);
        assert_eq!(s.h_theta(), 2.0 * PI / 64.0);
    }

    #[test]
    fn frame_is_orthonormal() {
        let fr = FiberFrame::new(64);
        for k in 0..fr.len() {
            let (e, m) = (fr.e(k), fr.m(k));
            assert!((e[0] * e[0] + e[1] * e[1] - 1.0).abs() < 1e-15);
            assert!((m[0] * m[0] + m[1] * m[1] - 1.0).abs() < 1e-15);
            assert!((e[0] * m[0] + e[1] * m[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn node_round_trips_index() {
        let g = Grid::torus(GridSpec::new(8, 10, 12).unwrap()).unwrap();
        for idx in [0, 1, 17, 500, g.len() - 1] {
            let n = g.node(idx);
            assert_eq!(g.index(n.i1, n.i2, n.k), idx);
        }
    }

    #[test]
    fn patch_is_centred() {
        let g = Grid::patch([0.2, -0.1], 0.01, 16).unwrap();
        assert!((g.x(0, PATCH_NODES / 2) - 0.2).abs() < 1e-15);
        assert!((g.x(1, PATCH_NODES / 2) + 0.1).abs() < 1e-15);
        assert!(g.spec().is_none());
    }
}
