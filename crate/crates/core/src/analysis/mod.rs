//! Diagnostics along a flow: tensor norms, the `u_m` series and checkable
//! certificates for uniform equivalence, the connection difference, the
//! first-order commutation identity and the limit metric.

mod norm;

pub use norm::{tensor_norm, TensorNorm};

use std::fmt;

use crate::curvature::spray;
use crate::error::{Error, Node, Result};
use crate::flow::{FlowRun, LimitMetric, Snapshot};
use crate::geometry::{
    cartan_horizontal_coefficients, horizontal_covariant_derivative_02, sym_eigenvalues,
    ConnectionField, FinslerField, MetricField,
};
use crate::vertical::{Grid, HomogeneousField, Slot};

/// Where a certificate is tightest or most violated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub node: Node,
    pub t: f64,
}

/// A checked inequality. `pass` holds exactly when `residual <= tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub name: String,
    pub pass: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub witness: Option<Witness>,
}

impl Certificate {
    pub fn new(
        name: impl Into<String>,
        residual: f64,
        tolerance: f64,
        witness: Option<Witness>,
    ) -> Self {
        Certificate {
            name: name.into(),
            pass: residual <= tolerance,
            residual,
            tolerance,
            witness,
        }
    }

    /// One `key=value` record.
    pub fn record(&self) -> String {
        let witness = match self.witness {
            Some(w) => format!("{},{},{}@{:e}", w.node.i1, w.node.i2, w.node.k, w.t),
            None => "-".into(),
        };
        format!(
            "name={} pass={} residual={:e} tolerance={:e} witness={}",
            self.name, self.pass, self.residual, self.tolerance, witness
        )
    }

    /// Parses a line written by [`Certificate::record`].
    pub fn parse_record(line: &str) -> Option<Self> {
        let mut name = None;
        let mut pass = None;
        let mut residual = None;
        let mut tolerance = None;
        let mut witness = None;
        for tok in line.split_whitespace() {
            let (k, v) = tok.split_once('=')?;
            match k {
                "name" => name = Some(v.to_string()),
                "pass" => pass = v.parse().ok(),
                "residual" => residual = v.parse().ok(),
                "tolerance" => tolerance = v.parse().ok(),
                "witness" if v == "-" => witness = Some(None),
                "witness" => {
                    let (node, t) = v.split_once('@')?;
                    let idx: Vec<usize> = node
                        .split(',')
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .ok()?;
                    let [i1, i2, k] = idx[..] else { return None };
                    witness = Some(Some(Witness {
                        node: Node { i1, i2, k },
                        t: t.parse().ok()?,
                    }));
                }
                _ => return None,
            }
        }
        Some(Certificate {
            name: name?,
            pass: pass?,
            residual: residual?,
            tolerance: tolerance?,
            witness: witness?,
        })
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<24} residual {:>12.4e}  tol {:.1e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.residual,
            self.tolerance
        )?;
        if let Some(w) = self.witness {
            write!(f, "  at {} t={:.6}", w.node, w.t)?;
        }
        Ok(())
    }
}

/// Geometry recovered from a stored snapshot.
#[derive(Debug, Clone)]
pub struct SnapshotGeometry {
    pub metric: MetricField,
    pub connection: ConnectionField,
}

impl SnapshotGeometry {
    pub fn from_snapshot(grid: &Grid, snap: &Snapshot) -> Result<Self> {
        let metric = MetricField::from_tensor(grid, snap.g.clone())?;
        let phi = FinslerField::new(grid, snap.phi.clone())?;
        let sp = spray(grid, &phi, &metric)?;
        let connection = cartan_horizontal_coefficients(grid, &metric, sp.nonlinear_connection())?;
        Ok(SnapshotGeometry { metric, connection })
    }
}

/// `u0, u1` in the moving metric and `uhat0, uhat1` in the initial one, per
/// snapshot, with trapezoid integrals over snapshot times.
#[derive(Debug, Clone, Default)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub uhat0: Vec<f64>,
    pub uhat1: Vec<f64>,
    pub int_u0: Vec<f64>,
    pub int_uhat0: Vec<f64>,
}

fn trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        if i > 0 {
            acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        }
        out.push(acc);
    }
    out
}

pub fn norm_series(grid: &Grid, run: &FlowRun) -> Result<NormSeries> {
    let first = run
        .snapshots
        .first()
        .ok_or_else(|| Error::Config("run has no snapshots".into()))?;
    let base = SnapshotGeometry::from_snapshot(grid, first)?;
    let mut s = NormSeries::default();
    for snap in &run.snapshots {
        let geo = SnapshotGeometry::from_snapshot(grid, snap)?;
        let moving = horizontal_covariant_derivative_02(grid, &snap.omega, &geo.connection)?;
        let fixed = horizontal_covariant_derivative_02(grid, &snap.omega, &base.connection)?;
        s.times.push(snap.t);
        s.u0.push(tensor_norm(&snap.omega, &geo.metric)?.sup);
        s.u1.push(tensor_norm(&moving, &geo.metric)?.sup);
        s.uhat0.push(tensor_norm(&snap.omega, &base.metric)?.sup);
        s.uhat1.push(tensor_norm(&fixed, &base.metric)?.sup);
    }
    s.int_u0 = trapezoid(&s.times, &s.u0);
    s.int_uhat0 = trapezoid(&s.times, &s.uhat0);
    Ok(s)
}

/// Eigenvalues of the pencil `a - lambda b` for symmetric 2x2 `a`, `b` with
/// `b` positive definite, ascending. `b = L L^T` reduces the pencil to the
/// symmetric matrix `L^-1 a L^-T`, whose eigenvalues have a cancellation-free
/// closed form.
pub fn generalized_eigenvalues(a: [f64; 3], b: [f64; 3]) -> [f64; 2] {
    let l11 = b[0].sqrt();
    let l21 = b[1] / l11;
    let l22 = (b[2] - l21 * l21).sqrt();
    // rows of L^-1 = [[p, 0], [q, r]]
    let (p, q, r) = (1.0 / l11, -l21 / (l11 * l22), 1.0 / l22);
    let m11 = p * p * a[0];
    let m12 = p * (q * a[0] + r * a[1]);
    let m22 = q * q * a[0] + 2.0 * q * r * a[1] + r * r * a[2];
    sym_eigenvalues(m11, m12, m22)
}

fn worst(residual: &mut f64, witness: &mut Option<Witness>, value: f64, node: Node, t: f64) {
    if value > *residual || value.is_nan() || witness.is_none() {
        *residual = value;
        *witness = Some(Witness { node, t });
    }
}

/// Both eigenvalues of `g(t)` against `g(0)` lie in
/// `[exp(-L(t)) - tol, exp(L(t)) + tol]`, `L(t) = int_0^t u0`.
/// The residual is the largest signed excursion past the bounds.
pub fn uniform_equivalence_certificate(
    grid: &Grid,
    run: &FlowRun,
    tol: f64,
) -> Result<Certificate> {
    let g0 = &run
        .snapshots
        .first()
        .ok_or_else(|| Error::Config("run has no snapshots".into()))?
        .g;
    let mut residual = f64::NEG_INFINITY;
    let mut witness = None;
    let sym =
        |f: &HomogeneousField, p| [f.comp(&[0, 0])[p], f.comp(&[0, 1])[p], f.comp(&[1, 1])[p]];
    for snap in &run.snapshots {
        let lambda = run.int_u0_at(snap.t);
        let (lo, hi) = ((-lambda).exp(), lambda.exp());
        for p in 0..grid.len() {
            let [l1, l2] = generalized_eigenvalues(sym(&snap.g, p), sym(g0, p));
            let excess = (lo - l1).max(l2 - hi);
            worst(&mut residual, &mut witness, excess, grid.node(p), snap.t);
        }
    }
    Ok(Certificate::new(
        "uniform-equivalence",
        residual,
        tol,
        witness,
    ))
}

/// `Gamma^i_jk = 1/2 g^is ((Dg)_j,sk + (Dg)_k,js - (Dg)_s,jk)` with `D` the
/// background connection, and the sup mismatch against the difference of
/// the two sets of connection coefficients.
pub fn gamma_difference(
    grid: &Grid,
    metric: &MetricField,
    moving: &ConnectionField,
    background: &ConnectionField,
) -> Result<(HomogeneousField, f64, usize)> {
    // dg[k][i][j] = D_k g_ij
    let dg = horizontal_covariant_derivative_02(grid, metric.tensor(), background)?;
    let len = grid.len();
    let ginv = metric.inverse();
    let mut gamma = HomogeneousField::zeros(0, vec![Slot::Upper, Slot::Lower, Slot::Lower], len);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let v: Vec<f64> = (0..len)
                    .map(|p| {
                        (0..2)
                            .map(|s| {
                                let lowered = dg.comp(&[j, s, k])[p] + dg.comp(&[k, j, s])[p]
                                    - dg.comp(&[s, j, k])[p];
                                0.5 * ginv.comp(&[i, s])[p] * lowered
                            })
                            .sum()
                    })
                    .collect();
                *gamma.comp_mut(&[i, j, k]) = v;
            }
        }
    }
    let diff = moving
        .coefficients()
        .axpy(-1.0, background.coefficients())?;
    let (mut mismatch, mut at) = (0.0, 0);
    for (a, b) in gamma.components().iter().zip(diff.components()) {
        for p in 0..len {
            let e = (a[p] - b[p]).abs();
            if e > mismatch || e.is_nan() {
                mismatch = e;
                at = p;
            }
        }
    }
    Ok((gamma, mismatch, at))
}

fn snapshot_pair(
    grid: &Grid,
    run: &FlowRun,
    index: usize,
) -> Result<(SnapshotGeometry, SnapshotGeometry, usize)> {
    let n = run.snapshots.len();
    if index >= n {
        return Err(Error::Config(format!(
            "snapshot {index} out of range ({n} stored)"
        )));
    }
    let base = SnapshotGeometry::from_snapshot(grid, &run.snapshots[0])?;
    let geo = SnapshotGeometry::from_snapshot(grid, &run.snapshots[index])?;
    Ok((base, geo, index))
}

/// Connection difference at snapshot `index`, as a certificate.
pub fn gamma_difference_certificate(
    grid: &Grid,
    run: &FlowRun,
    index: usize,
    tol: f64,
) -> Result<Certificate> {
    let (base, geo, i) = snapshot_pair(grid, run, index)?;
    let (_, mismatch, at) = gamma_difference(grid, &geo.metric, &geo.connection, &base.connection)?;
    let w = Witness {
        node: grid.node(at),
        t: run.snapshots[i].t,
    };
    Ok(Certificate::new("gamma-difference", mismatch, tol, Some(w)))
}

/// Sup mismatch of `(nabla omega - D omega)_kij = -Gamma^r_ki omega_rj - Gamma^r_kj omega_ir`
/// at snapshot `index`.
pub fn commutation_residual(
    grid: &Grid,
    run: &FlowRun,
    index: usize,
    tol: f64,
) -> Result<Certificate> {
    let (base, geo, i) = snapshot_pair(grid, run, index)?;
    let snap = &run.snapshots[i];
    let (gamma, _, _) = gamma_difference(grid, &geo.metric, &geo.connection, &base.connection)?;
    let omega = &snap.omega;
    let moving = horizontal_covariant_derivative_02(grid, omega, &geo.connection)?;
    let fixed = horizontal_covariant_derivative_02(grid, omega, &base.connection)?;
    let mut residual = 0.0;
    let mut witness = None;
    for k in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                let (lhs_t, lhs_0) = (moving.comp(&[k, a, b]), fixed.comp(&[k, a, b]));
                for p in 0..grid.len() {
                    let rhs: f64 = (0..2)
                        .map(|r| {
                            -gamma.comp(&[r, k, a])[p] * omega.comp(&[r, b])[p]
                                - gamma.comp(&[r, k, b])[p] * omega.comp(&[a, r])[p]
                        })
                        .sum();
                    let e = (lhs_t[p] - lhs_0[p] - rhs).abs();
                    if e > residual || e.is_nan() || witness.is_none() {
                        residual = e;
                        witness = Some(Witness {
                            node: grid.node(p),
                            t: snap.t,
                        });
                    }
                }
            }
        }
    }
    Ok(Certificate::new("commutation-m1", residual, tol, witness))
}

/// `sup |g(t) - gbar|_g(0) <= int_t^T uhat0 + tol` at every snapshot.
/// The residual is the largest `lhs - rhs`.
pub fn cauchy_tail_certificate(
    grid: &Grid,
    run: &FlowRun,
    limit: &LimitMetric,
    tol: f64,
) -> Result<Certificate> {
    let first = run
        .snapshots
        .first()
        .ok_or_else(|| Error::Config("run has no snapshots".into()))?;
    let g0 = MetricField::from_tensor(grid, first.g.clone())?;
    let total = run.int_uhat0_at(run.final_time());
    let mut residual = f64::NEG_INFINITY;
    let mut witness = None;
    for snap in &run.snapshots {
        let gap = snap.g.axpy(-1.0, &limit.gbar)?;
        let n = tensor_norm(&gap, &g0)?;
        let excess = n.sup - (total - run.int_uhat0_at(snap.t));
        worst(
            &mut residual,
            &mut witness,
            excess,
            grid.node(n.argmax),
            snap.t,
        );
    }
    Ok(Certificate::new("cauchy-tail", residual, tol, witness))
}

/// `gbar` positive definite (residual `-min eigenvalue`, tolerance 0) and
/// the `Fbar` Hessian reconstruction residual.
pub fn limit_certificates(
    run: &FlowRun,
    limit: &LimitMetric,
    hessian_tol: f64,
) -> [Certificate; 2] {
    let t = run.final_time();
    [
        Certificate::new(
            "limit-positive-definite",
            -limit.min_eigenvalue,
            0.0,
            Some(Witness {
                node: limit.min_eigenvalue_node,
                t,
            }),
        ),
        Certificate::new("limit-hessian", limit.hessian_residual, hessian_tol, None),
    ]
}

/// Per-certificate tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub equivalence: f64,
    pub gamma: f64,
    pub commutation: f64,
    pub cauchy: f64,
    pub hessian: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            equivalence: 1e-3,
            gamma: 1e-6,
            commutation: 1e-6,
            cauchy: 1e-3,
            hessian: 1e-5,
        }
    }
}

impl Tolerances {
    /// Every tolerance set to `tol`.
    pub fn uniform(tol: f64) -> Self {
        Tolerances {
            equivalence: tol,
            gamma: tol,
            commutation: tol,
            cauchy: tol,
            hessian: tol,
        }
    }
}

/// The full certificate suite on a run. The connection certificates use the
/// middle snapshot.
pub fn verify_run(grid: &Grid, run: &FlowRun, tol: &Tolerances) -> Result<Vec<Certificate>> {
    let limit = crate::flow::limit_metric(grid, run)?;
    let mid = run.snapshots.len() / 2;
    let mut certs = vec![
        uniform_equivalence_certificate(grid, run, tol.equivalence)?,
        gamma_difference_certificate(grid, run, mid, tol.gamma)?,
        commutation_residual(grid, run, mid, tol.commutation)?,
        cauchy_tail_certificate(grid, run, &limit, tol.cauchy)?,
    ];
    certs.extend(limit_certificates(run, &limit, tol.hessian));
    Ok(certs)
}
