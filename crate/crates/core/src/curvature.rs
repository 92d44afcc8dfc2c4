//! Spray, nonlinear connection, reduced curvature and the Akbar-Zadeh Ricci
//! tensor of a sampled Finsler function.
//!
//! Every stage consumes and produces whole fields; the per-step dependency
//! chain is `phi -> g -> G -> N -> R -> Ric`.

use crate::error::{Error, Result};
use crate::geometry::{
    fundamental_tensor, vertical_hessian, FinslerField, MetricFamily, MetricField,
};
use crate::vertical::{Grid, HomogeneousField, Slot, PATCH_NODES};

/// Spray coefficients `G^i` (degree 2) and `N^i_j = dG^i/dy^j` (degree 1).
#[derive(Debug, Clone)]
pub struct SprayField {
    g: HomogeneousField,
    n: HomogeneousField,
}

impl SprayField {
    pub fn coefficients(&self) -> &HomogeneousField {
        &self.g
    }

    pub fn nonlinear_connection(&self) -> &HomogeneousField {
        &self.n
    }
}

/// Curvature of one Finsler function.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub metric: MetricField,
    pub spray: SprayField,
    /// `R^i_k`, degree 0.
    pub reduced: HomogeneousField,
    /// Trace `R^i_i`, degree 0.
    pub ric_scalar: HomogeneousField,
    /// `Ric_jk = [F^2 Ric / 2]_{y^j y^k}`, degree 0.
    pub ric_tensor: HomogeneousField,
}

/// `G^i = 1/4 g^ih ([F^2]_{y^h x^j} y^j - [F^2]_{x^h})`.
pub fn spray(grid: &Grid, f: &FinslerField, metric: &MetricField) -> Result<SprayField> {
    let f2 = f.squared();
    let len = grid.len();
    let dx = [
        grid.x_derivative_raw(f2.values(), 0, 1),
        grid.x_derivative_raw(f2.values(), 1, 1),
    ];
    // [F^2]_{y^h x^j} y^j = d/dy^h (y^j [F^2]_{x^j}) - [F^2]_{x^h}
    let (y1, y2) = (grid.y_component(0), grid.y_component(1));
    let radial: Vec<f64> = (0..len)
        .map(|p| y1[p] * dx[0][p] + y2[p] * dx[1][p])
        .collect();
    let d_radial = grid.y_derivative(&HomogeneousField::scalar(3, radial));
    let bracket: [Vec<f64>; 2] = std::array::from_fn(|h| {
        let dr = d_radial.comp(&[h]);
        (0..len).map(|p| dr[p] - 2.0 * dx[h][p]).collect()
    });
    let ginv = metric.inverse();
    let comps: Vec<Vec<f64>> = (0..2)
        .map(|i| {
            let (a, b) = (ginv.comp(&[i, 0]), ginv.comp(&[i, 1]));
            (0..len)
                .map(|p| 0.25 * (a[p] * bracket[0][p] + b[p] * bracket[1][p]))
                .collect()
        })
        .collect();
    let g = HomogeneousField::from_components(2, vec![Slot::Upper], comps)?;
    g.require_finite("spray")?;
    let n = grid.y_derivative(&g);
    Ok(SprayField { g, n })
}

/// Reduced curvature
/// `R^i_k = F^-2 (2 G^i_{x^k} - G^i_{x^j y^k} y^j + 2 G^j G^i_{y^j y^k} - G^i_{y^j} G^j_{y^k})`.
pub fn reduced_curvature(
    grid: &Grid,
    f: &FinslerField,
    spray: &SprayField,
) -> Result<HomogeneousField> {
    let len = grid.len();
    let (g, n) = (&spray.g, &spray.n);
    let dn = grid.y_derivative(n); // dn[i][j][k] = G^i_{y^j y^k}
    let (y1, y2) = (grid.y_component(0), grid.y_component(1));
    let phi = f.values();
    let mut out = HomogeneousField::zeros(0, vec![Slot::Upper, Slot::Lower], len);
    for i in 0..2 {
        let gi = g.comp(&[i]);
        let dx = [
            grid.x_derivative_raw(gi, 0, 1),
            grid.x_derivative_raw(gi, 1, 1),
        ];
        // G^i_{x^j y^k} y^j = d/dy^k (y^j G^i_{x^j}) - G^i_{x^k}
        let radial: Vec<f64> = (0..len)
            .map(|p| y1[p] * dx[0][p] + y2[p] * dx[1][p])
            .collect();
        let d_radial = grid.y_derivative(&HomogeneousField::scalar(3, radial));
        for k in 0..2 {
            let dr = d_radial.comp(&[k]);
            let (h0, h1) = (dn.comp(&[i, 0, k]), dn.comp(&[i, 1, k]));
            let (n_i0, n_i1) = (n.comp(&[i, 0]), n.comp(&[i, 1]));
            let (n_0k, n_1k) = (n.comp(&[0, k]), n.comp(&[1, k]));
            let (g0, g1) = (g.comp(&[0]), g.comp(&[1]));
            let v: Vec<f64> = (0..len)
                .map(|p| {
                    let mixed = dr[p] - dx[k][p];
                    let hess = 2.0 * (g0[p] * h0[p] + g1[p] * h1[p]);
                    let quad = n_i0[p] * n_0k[p] + n_i1[p] * n_1k[p];
                    (2.0 * dx[k][p] - mixed + hess - quad) / (phi[p] * phi[p])
                })
                .collect();
            *out.comp_mut(&[i, k]) = v;
        }
    }
    out.require_finite("reduced curvature")?;
    Ok(out)
}

/// Trace `R^i_i`.
pub fn ricci_scalar(reduced: &HomogeneousField) -> Result<HomogeneousField> {
    reduced.require_slots(&[Slot::Upper, Slot::Lower])?;
    let (a, b) = (reduced.comp(&[0, 0]), reduced.comp(&[1, 1]));
    Ok(HomogeneousField::scalar(
        0,
        a.iter().zip(b).map(|(x, y)| x + y).collect(),
    ))
}

/// `Ric_jk = [1/2 F^2 Ric]_{y^j y^k}`, symmetrized.
pub fn ricci_tensor(
    grid: &Grid,
    f: &FinslerField,
    ric: &HomogeneousField,
) -> Result<HomogeneousField> {
    if ric.rank() != 0 || ric.degree() != 0 {
        return Err(Error::RankMismatch {
            expected: "degree-0 scalar".into(),
            found: format!("{:?}", ric.slots()),
        });
    }
    let half: Vec<f64> = f
        .values()
        .iter()
        .zip(ric.values())
        .map(|(p, r)| 0.5 * p * p * r)
        .collect();
    Ok(vertical_hessian(grid, &HomogeneousField::scalar(2, half)))
}

/// Metric, spray and Ricci scalar; the part of the pipeline the Ricci flow
/// right-hand side needs.
pub fn scalar_pipeline(
    grid: &Grid,
    f: &FinslerField,
) -> Result<(MetricField, SprayField, HomogeneousField, HomogeneousField)> {
    let metric = fundamental_tensor(grid, f)?;
    let spray = spray(grid, f, &metric)?;
    let reduced = reduced_curvature(grid, f, &spray)?;
    let ric = ricci_scalar(&reduced)?;
    Ok((metric, spray, reduced, ric))
}

/// Full pipeline through the Ricci tensor.
pub fn curvature(grid: &Grid, f: &FinslerField) -> Result<CurvatureBundle> {
    let (metric, spray, reduced, ric_scalar) = scalar_pipeline(grid, f)?;
    let ric_tensor = ricci_tensor(grid, f, &ric_scalar)?;
    Ok(CurvatureBundle {
        metric,
        spray,
        reduced,
        ric_scalar,
        ric_tensor,
    })
}

/// Curvature on one fiber circle at an off-grid chart point.
#[derive(Debug, Clone)]
pub struct PointCurvature {
    pub x: [f64; 2],
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub det_g: Vec<f64>,
    /// `G^i` per fiber node.
    pub spray: [Vec<f64>; 2],
    /// `R^i_k` per fiber node, `[i][k]`.
    pub reduced: [[Vec<f64>; 2]; 2],
    pub ric_scalar: Vec<f64>,
    /// `Ric_11, Ric_12, Ric_22` per fiber node.
    pub ric_tensor: [Vec<f64>; 3],
}

/// Default chart spacing of the local stencil patch.
pub const POINTWISE_SPACING: f64 = 0.01;

/// Evaluates the pipeline at chart point `x` on a small patch with spacing
/// `h`, for families that need not live on the torus.
pub fn pointwise(
    family: MetricFamily,
    x: [f64; 2],
    n_theta: usize,
    h: f64,
) -> Result<PointCurvature> {
    let grid = Grid::patch(x, h, n_theta)?;
    let reach = h * (PATCH_NODES / 2) as f64;
    for corner in [[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]] {
        let c = [x[0] + corner[0] * reach, x[1] + corner[1] * reach];
        if !family.in_chart(c) {
            return Err(Error::Config(format!(
                "stencil around {x:?} leaves the chart of {}",
                family.name()
            )));
        }
    }
    let f = FinslerField::from_family(&grid, family)?;
    let cb = curvature(&grid, &f)?;
    let start = grid.center_line();
    let line = |v: &[f64]| v[start..start + n_theta].to_vec();
    Ok(PointCurvature {
        x,
        theta: (0..n_theta).map(|k| grid.frame().theta(k)).collect(),
        phi: line(f.values()),
        det_g: line(&cb.metric.det()),
        spray: std::array::from_fn(|i| line(cb.spray.g.comp(&[i]))),
        reduced: std::array::from_fn(|i| std::array::from_fn(|k| line(cb.reduced.comp(&[i, k])))),
        ric_scalar: line(cb.ric_scalar.values()),
        ric_tensor: [
            line(cb.ric_tensor.comp(&[0, 0])),
            line(cb.ric_tensor.comp(&[0, 1])),
            line(cb.ric_tensor.comp(&[1, 1])),
        ],
    })
}
