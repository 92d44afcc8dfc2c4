//! Finsler structures, their fundamental tensor and the horizontal part of
//! the Cartan connection.

mod zoo;

pub use zoo::MetricFamily;

use crate::error::{Error, Node, Result};
use crate::vertical::{Grid, HomogeneousField, Slot};

const LL: [Slot; 2] = [Slot::Lower, Slot::Lower];

/// Restriction `phi = F(x, cos theta, sin theta)` of a Finsler function.
#[derive(Debug, Clone)]
pub struct FinslerField {
    phi: HomogeneousField,
    family: Option<MetricFamily>,
}

impl FinslerField {
    /// Wraps samples of `phi`, checking that they are finite and positive.
    pub fn new(grid: &Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Shape(format!(
                "phi has {} samples, grid has {}",
                samples.len(),
                grid.len()
            )));
        }
        if let Some(idx) = samples.iter().position(|v| !v.is_finite() || *v <= 0.0) {
            if !samples[idx].is_finite() {
                return Err(Error::NonFinite("phi"));
            }
            return Err(Error::NonPositive {
                node: grid.node(idx),
                value: samples[idx],
            });
        }
        Ok(FinslerField {
            phi: HomogeneousField::scalar(1, samples),
            family: None,
        })
    }

    /// Samples a zoo family on the grid.
    pub fn from_family(grid: &Grid, family: MetricFamily) -> Result<Self> {
        if !family.on_torus() && grid.spec().is_some() {
            return Err(Error::ChartRestricted(family.name().into()));
        }
        let mut f = Self::new(grid, grid.sample(|x1, x2, t| family.phi(x1, x2, t)))?;
        f.family = Some(family);
        Ok(f)
    }

    pub fn family(&self) -> Option<MetricFamily> {
        self.family
    }

    pub fn with_family(mut self, family: Option<MetricFamily>) -> Self {
        self.family = family;
        self
    }

    pub fn field(&self) -> &HomogeneousField {
        &self.phi
    }

    pub fn values(&self) -> &[f64] {
        self.phi.values()
    }

    /// `F^2` as a degree-2 scalar.
    pub fn squared(&self) -> HomogeneousField {
        HomogeneousField::scalar(2, self.values().iter().map(|p| p * p).collect())
    }

    /// `lambda * phi`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Config(format!(
                "scale factor must be positive, got {lambda}"
            )));
        }
        Ok(FinslerField {
            phi: self.phi.scaled(lambda),
            family: None,
        })
    }

    /// Minimum of `phi + phi_theta_theta` and where it occurs; positive
    /// exactly when the fundamental tensor is positive definite.
    pub fn convexity_margin(&self, grid: &Grid) -> (f64, Node) {
        let d2 = grid.theta_derivative_raw(self.values(), 2);
        let (idx, m) = self
            .values()
            .iter()
            .zip(&d2)
            .map(|(p, q)| p + q)
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |best, (i, v)| if v < best.1 { (i, v) } else { best },
            );
        (m, grid.node(idx))
    }

    /// Distinguished covector `l_i = dF/dy^i` (degree 0).
    pub fn distinguished_covector(&self, grid: &Grid) -> HomogeneousField {
        grid.y_derivative(&self.phi)
    }
}

/// Fundamental tensor `g_ij` with its pointwise inverse.
#[derive(Debug, Clone)]
pub struct MetricField {
    g: HomogeneousField,
    g_inv: HomogeneousField,
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
#[inline]
pub fn sym_eigenvalues(a: f64, b: f64, d: f64) -> [f64; 2] {
    let half_tr = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    [half_tr - r, half_tr + r]
}

impl MetricField {
    /// Inverts a symmetric `(0,2)` field by the 2x2 adjugate, failing at the
    /// worst non-positive-definite node.
    pub fn from_tensor(grid: &Grid, mut g: HomogeneousField) -> Result<Self> {
        g.require_slots(&LL)?;
        g.require_finite("metric")?;
        g.symmetrize();
        let (margin, idx) = min_eigenvalue_at(&g);
        if !(margin > 0.0) {
            return Err(Error::DegenerateMetric {
                node: grid.node(idx),
                margin,
            });
        }
        let n = g.len();
        let (g11, g12, g22) = (g.comp(&[0, 0]), g.comp(&[0, 1]), g.comp(&[1, 1]));
        let mut i11 = vec![0.0; n];
        let mut i12 = vec![0.0; n];
        let mut i22 = vec![0.0; n];
        for p in 0..n {
            let det = g11[p] * g22[p] - g12[p] * g12[p];
            i11[p] = g22[p] / det;
            i12[p] = -g12[p] / det;
            i22[p] = g11[p] / det;
        }
        let g_inv = HomogeneousField::from_components(
            g.degree(),
            vec![Slot::Upper, Slot::Upper],
            vec![i11, i12.clone(), i12, i22],
        )?;
        Ok(MetricField { g, g_inv })
    }

    pub fn tensor(&self) -> &HomogeneousField {
        &self.g
    }

    pub fn inverse(&self) -> &HomogeneousField {
        &self.g_inv
    }

    #[inline]
    pub fn at(&self, p: usize) -> [f64; 3] {
        [
            self.g.comp(&[0, 0])[p],
            self.g.comp(&[0, 1])[p],
            self.g.comp(&[1, 1])[p],
        ]
    }

    #[inline]
    pub fn inv_at(&self, p: usize) -> [f64; 3] {
        [
            self.g_inv.comp(&[0, 0])[p],
            self.g_inv.comp(&[0, 1])[p],
            self.g_inv.comp(&[1, 1])[p],
        ]
    }

    pub fn det(&self) -> Vec<f64> {
        (0..self.g.len())
            .map(|p| {
                let [a, b, d] = self.at(p);
                a * d - b * b
            })
            .collect()
    }

    /// Smallest eigenvalue over all nodes and the flat index where it occurs.
    pub fn min_eigenvalue(&self) -> (f64, usize) {
        min_eigenvalue_at(&self.g)
    }

    /// `g_ij y^i y^j` on the Euclidean unit circle (degree 2).
    pub fn quadratic_form(&self, grid: &Grid) -> Vec<f64> {
        let nt = grid.n_theta();
        (0..self.g.len())
            .map(|p| {
                let e = grid.frame().e(p % nt);
                let [a, b, d] = self.at(p);
                a * e[0] * e[0] + 2.0 * b * e[0] * e[1] + d * e[1] * e[1]
            })
            .collect()
    }
}

fn min_eigenvalue_at(g: &HomogeneousField) -> (f64, usize) {
    let (g11, g12, g22) = (g.comp(&[0, 0]), g.comp(&[0, 1]), g.comp(&[1, 1]));
    (0..g.len())
        .map(|p| sym_eigenvalues(g11[p], g12[p], g22[p])[0])
        .enumerate()
        .fold((f64::INFINITY, 0), |best, (i, v)| {
            if v < best.0 || v.is_nan() {
                (v, i)
            } else {
                best
            }
        })
}

/// `g_ij = 1/2 [F^2]_{y^i y^j}`.
pub fn fundamental_tensor(grid: &Grid, f: &FinslerField) -> Result<MetricField> {
    let hessian = vertical_hessian(grid, &f.squared()).scaled(0.5);
    MetricField::from_tensor(grid, hessian)
}

/// Second vertical derivative of a scalar, symmetrized.
pub fn vertical_hessian(grid: &Grid, f: &HomogeneousField) -> HomogeneousField {
    let mut h = grid.y_derivative(&grid.y_derivative(f));
    h.symmetrize();
    h
}

/// Nonlinear connection together with the Cartan horizontal coefficients.
#[derive(Debug, Clone)]
pub struct ConnectionField {
    /// `N[r][j] = dG^r/dy^j`, degree 1.
    n: HomogeneousField,
    /// `Gamma[i][j][k]`, degree 0, symmetric in `(j, k)`.
    gamma: HomogeneousField,
}

impl ConnectionField {
    pub fn nonlinear(&self) -> &HomogeneousField {
        &self.n
    }

    pub fn coefficients(&self) -> &HomogeneousField {
        &self.gamma
    }

    /// Connection with all coefficients zero; the horizontal derivative
    /// reduces to the plain chart derivative.
    pub fn flat(len: usize) -> Self {
        ConnectionField {
            n: HomogeneousField::zeros(1, vec![Slot::Upper, Slot::Lower], len),
            gamma: HomogeneousField::zeros(0, vec![Slot::Upper, Slot::Lower, Slot::Lower], len),
        }
    }
}

/// Horizontal derivative `delta_j f = df/dx^j - N^r_j df/dy^r`, appended as
/// a trailing lower slot.
pub fn delta_derivative(
    grid: &Grid,
    f: &HomogeneousField,
    n: &HomogeneousField,
) -> Result<HomogeneousField> {
    n.require_slots(&[Slot::Upper, Slot::Lower])?;
    let dy = grid.y_derivative(f);
    let mut slots = f.slots().to_vec();
    slots.push(Slot::Lower);
    let (n11, n12, n21, n22) = (
        n.comp(&[0, 0]),
        n.comp(&[0, 1]),
        n.comp(&[1, 0]),
        n.comp(&[1, 1]),
    );
    let mut comps = Vec::with_capacity(2 * f.n_components());
    for (c, pair) in f.components().iter().zip(dy.components().chunks(2)) {
        let (dy1, dy2) = (&pair[0], &pair[1]);
        let mut dx1 = grid.x_derivative_raw(c, 0, 1);
        let mut dx2 = grid.x_derivative_raw(c, 1, 1);
        for p in 0..c.len() {
            dx1[p] -= n11[p] * dy1[p] + n21[p] * dy2[p];
            dx2[p] -= n12[p] * dy1[p] + n22[p] * dy2[p];
        }
        comps.push(dx1);
        comps.push(dx2);
    }
    HomogeneousField::from_components(f.degree(), slots, comps)
}

/// Cartan horizontal coefficients in the coordinate frame,
/// `Gamma^i_jk = 1/2 g^is (delta_j g_sk + delta_k g_js - delta_s g_jk)`.
pub fn cartan_horizontal_coefficients(
    grid: &Grid,
    metric: &MetricField,
    n: &HomogeneousField,
) -> Result<ConnectionField> {
    // dg[s][k][j] = delta_j g_sk
    let dg = delta_derivative(grid, metric.tensor(), n)?;
    let len = dg.len();
    let mut gamma = HomogeneousField::zeros(0, vec![Slot::Upper, Slot::Lower, Slot::Lower], len);
    let ginv = metric.inverse();
    for (j, k) in [(0, 0), (0, 1), (1, 1)] {
        let lowered: [Vec<f64>; 2] = std::array::from_fn(|s| {
            let (a, b, c) = (
                dg.comp(&[s, k, j]),
                dg.comp(&[j, s, k]),
                dg.comp(&[j, k, s]),
            );
            (0..len).map(|p| 0.5 * (a[p] + b[p] - c[p])).collect()
        });
        for i in 0..2 {
            let (gi0, gi1) = (ginv.comp(&[i, 0]), ginv.comp(&[i, 1]));
            let v: Vec<f64> = (0..len)
                .map(|p| gi0[p] * lowered[0][p] + gi1[p] * lowered[1][p])
                .collect();
            if j != k {
                *gamma.comp_mut(&[i, k, j]) = v.clone();
            }
            *gamma.comp_mut(&[i, j, k]) = v;
        }
    }
    Ok(ConnectionField {
        n: n.clone(),
        gamma,
    })
}

/// `(nabla_k S)_ij = delta_k S_ij - Gamma^r_ki S_rj - Gamma^r_kj S_ir`,
/// returned with slot order `[k][i][j]`.
pub fn horizontal_covariant_derivative_02(
    grid: &Grid,
    s: &HomogeneousField,
    conn: &ConnectionField,
) -> Result<HomogeneousField> {
    s.require_slots(&LL)?;
    // ds[i][j][k] = delta_k S_ij
    let ds = delta_derivative(grid, s, &conn.n)?;
    let gam = &conn.gamma;
    let len = s.len();
    let mut out = HomogeneousField::zeros(s.degree(), vec![Slot::Lower; 3], len);
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let d = ds.comp(&[i, j, k]);
                let (gk0i, gk1i) = (gam.comp(&[0, k, i]), gam.comp(&[1, k, i]));
                let (gk0j, gk1j) = (gam.comp(&[0, k, j]), gam.comp(&[1, k, j]));
                let (s0j, s1j) = (s.comp(&[0, j]), s.comp(&[1, j]));
                let (si0, si1) = (s.comp(&[i, 0]), s.comp(&[i, 1]));
                let v: Vec<f64> = (0..len)
                    .map(|p| {
                        d[p] - gk0i[p] * s0j[p]
                            - gk1i[p] * s1j[p]
                            - gk0j[p] * si0[p]
                            - gk1j[p] * si1[p]
                    })
                    .collect();
                *out.comp_mut(&[k, i, j]) = v;
            }
        }
    }
    Ok(out)
}
