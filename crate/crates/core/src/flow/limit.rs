use crate::error::{Error, Node, Result};
use crate::geometry::{sym_eigenvalues, vertical_hessian};
use crate::vertical::{Grid, HomogeneousField};

use super::FlowRun;

/// `gbar = g(0) + int_0^T omega` with its reconstructed Finsler function.
#[derive(Debug, Clone)]
pub struct LimitMetric {
    pub gbar: HomogeneousField,
    /// `(gbar_ij y^i y^j)^(1/2)`; NaN where the quadratic form is not positive.
    pub fbar: Vec<f64>,
    /// `|1/2 [Fbar^2]_{y^k y^l} - gbar_kl|` per node, max over components.
    pub hessian_residual_field: Vec<f64>,
    pub hessian_residual: f64,
    /// Smallest eigenvalue of `gbar` and where it occurs.
    pub min_eigenvalue: f64,
    pub min_eigenvalue_node: Node,
}

impl LimitMetric {
    pub fn is_positive_definite(&self) -> bool {
        self.min_eigenvalue > 0.0
    }
}

/// Builds the limit metric from the accepted-step accumulator of a run.
/// An indefinite `gbar` is returned as is; callers audit it.
pub fn limit_metric(grid: &Grid, run: &FlowRun) -> Result<LimitMetric> {
    if run.snapshots.len() < 2 {
        return Err(Error::Config(format!(
            "limit needs at least 2 snapshots, run has {}",
            run.snapshots.len()
        )));
    }
    let g0 = &run.snapshots[0].g;
    if g0.len() != grid.len() {
        return Err(Error::Shape(format!(
            "run has {} samples per field, grid has {}",
            g0.len(),
            grid.len()
        )));
    }
    let mut gbar = g0.axpy(1.0, &run.omega_integral)?;
    gbar.symmetrize();
    let nt = grid.n_theta();
    let len = grid.len();
    let (a, b, d) = (gbar.comp(&[0, 0]), gbar.comp(&[0, 1]), gbar.comp(&[1, 1]));
    let quad: Vec<f64> = (0..len)
        .map(|p| {
            let e = grid.frame().e(p % nt);
            a[p] * e[0] * e[0] + 2.0 * b[p] * e[0] * e[1] + d[p] * e[1] * e[1]
        })
        .collect();
    let fbar = quad
        .iter()
        .map(|&q| if q > 0.0 { q.sqrt() } else { f64::NAN })
        .collect();
    let hessian = vertical_hessian(grid, &HomogeneousField::scalar(2, quad)).scaled(0.5);
    let hessian_residual_field: Vec<f64> = (0..len)
        .map(|p| {
            [[0, 0], [0, 1], [1, 1]]
                .iter()
                .map(|idx| (hessian.comp(idx)[p] - gbar.comp(idx)[p]).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let hessian_residual = hessian_residual_field.iter().copied().fold(0.0, f64::max);
    let (min_eigenvalue, at) = (0..len)
        .map(|p| sym_eigenvalues(a[p], b[p], d[p])[0])
        .enumerate()
        .fold((f64::INFINITY, 0), |best, (i, v)| {
            if v < best.0 || v.is_nan() {
                (v, i)
            } else {
                best
            }
        });
    Ok(LimitMetric {
        gbar,
        fbar,
        hessian_residual_field,
        hessian_residual,
        min_eigenvalue,
        min_eigenvalue_node: grid.node(at),
    })
}
