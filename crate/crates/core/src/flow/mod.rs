//! Time integration of `dg/dt = omega(t)` and of the Finslerian Ricci flow.
//!
//! The Ricci flow is advanced through its scalar form
//! `d(log F)/dt = -Ric`, i.e. `dphi/dt = -phi Ric(phi)`. Prescribed
//! deformations act on the metric directly and `phi` is recovered as
//! `(g_ij y^i y^j)^(1/2)`. Both use classical RK4 with a diffusive step cap.

mod limit;
mod persist;

pub use limit::{limit_metric, LimitMetric};
pub use persist::{load_run, save_run, SnapshotFormat};

use std::fmt;
use std::str::FromStr;

use crate::analysis::tensor_norm;
use crate::curvature::{reduced_curvature, ricci_scalar, ricci_tensor, spray, SprayField};
use crate::error::{Error, Result};
use crate::geometry::{
    cartan_horizontal_coefficients, fundamental_tensor, horizontal_covariant_derivative_02,
};
use crate::geometry::{FinslerField, MetricFamily, MetricField};
use crate::vertical::{Grid, HomogeneousField};

/// Closed-form deformation families for the prescribed mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Deformation {
    /// `omega = -2c g(0)`, so `g(t) = (1 - 2ct) g(0)`.
    Homothetic { c: f64 },
}

impl Deformation {
    /// `omega(t)`; degree-0 and symmetric whenever `g0` is.
    pub fn omega(&self, _t: f64, g0: &MetricField) -> HomogeneousField {
        match *self {
            Deformation::Homothetic { c } => g0.tensor().scaled(-2.0 * c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowMode {
    /// `omega = -2 Ric_g(t)`.
    Ricci,
    Prescribed(Deformation),
}

impl FlowMode {
    pub fn name(&self) -> &'static str {
        match self {
            FlowMode::Ricci => "ricci",
            FlowMode::Prescribed(Deformation::Homothetic { .. }) => "homothetic",
        }
    }
}

impl fmt::Display for FlowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowMode::Ricci => write!(f, "ricci"),
            FlowMode::Prescribed(Deformation::Homothetic { c }) => write!(f, "homothetic c={c}"),
        }
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ReachedHorizon,
    ConvexityLoss,
    CurvatureThreshold,
    NonFinite,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::ReachedHorizon => "reached T",
            StopReason::ConvexityLoss => "convexity loss",
            StopReason::CurvatureThreshold => "curvature threshold",
            StopReason::NonFinite => "non-finite",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StopReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reached T" => Ok(StopReason::ReachedHorizon),
            "convexity loss" => Ok(StopReason::ConvexityLoss),
            "curvature threshold" => Ok(StopReason::CurvatureThreshold),
            "non-finite" => Ok(StopReason::NonFinite),
            other => Err(Error::Config(format!("unknown stop reason `{other}`"))),
        }
    }
}

/// Step-size policy, stop thresholds and snapshot cadence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub horizon: f64,
    pub dt_max: f64,
    pub c_cfl: f64,
    pub eps_conv: f64,
    pub r_max: f64,
    pub snapshot_every: usize,
    /// Relative amplitude below which fiber Fourier modes of `phi` are
    /// dropped after every Ricci stage; 0 disables.
    pub theta_filter: f64,
}

impl FlowConfig {
    pub const DEFAULT_DT_MAX: f64 = 0.01;
    pub const DEFAULT_C_CFL: f64 = 0.25;
    pub const DEFAULT_EPS_CONV: f64 = 1e-6;
    pub const DEFAULT_R_MAX: f64 = 1e3;
    pub const DEFAULT_SNAPSHOT_EVERY: usize = 10;
    pub const DEFAULT_THETA_FILTER: f64 = 1e-13;

    pub fn new(horizon: f64) -> Self {
        FlowConfig {
            horizon,
            dt_max: Self::DEFAULT_DT_MAX,
            c_cfl: Self::DEFAULT_C_CFL,
            eps_conv: Self::DEFAULT_EPS_CONV,
            r_max: Self::DEFAULT_R_MAX,
            snapshot_every: Self::DEFAULT_SNAPSHOT_EVERY,
            theta_filter: Self::DEFAULT_THETA_FILTER,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("horizon", self.horizon),
            ("dt_max", self.dt_max),
            ("c_cfl", self.c_cfl),
            ("eps_conv", self.eps_conv),
            ("r_max", self.r_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.theta_filter >= 0.0 && self.theta_filter < 1.0) {
            return Err(Error::Config(format!(
                "theta_filter must lie in [0, 1), got {}",
                self.theta_filter
            )));
        }
        if self.snapshot_every == 0 {
            return Err(Error::Config("snapshot_every must be at least 1".into()));
        }
        Ok(())
    }

    /// `min(dt_max, c_cfl h_min^2 / (1 + sup|Ric|))`.
    pub fn dt(&self, h_min: f64, sup_ric: f64) -> f64 {
        self.dt_max
            .min(self.c_cfl * h_min * h_min / (1.0 + sup_ric))
    }
}

/// Geometry at one time level.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub phi: FinslerField,
    pub metric: MetricField,
    pub spray: SprayField,
    pub ric_scalar: HomogeneousField,
    pub omega: HomogeneousField,
    pub sup_ric: f64,
    /// Smallest eigenvalue of `g` over the grid.
    pub convexity_margin: f64,
    pub dt: f64,
    pub terminal: Option<StopReason>,
}

/// Failure to produce the next state.
#[derive(Debug, Clone)]
pub struct Terminal {
    pub reason: StopReason,
    pub detail: String,
}

fn classify(e: Error) -> Terminal {
    let reason = match e {
        Error::NonFinite(_) => StopReason::NonFinite,
        _ => StopReason::ConvexityLoss,
    };
    Terminal {
        reason,
        detail: e.to_string(),
    }
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(
        0.0,
        |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) },
    )
}

/// `phi = (g_ij y^i y^j)^(1/2)` on the unit circle.
fn phi_from_metric(grid: &Grid, g: &HomogeneousField) -> Result<FinslerField> {
    let nt = grid.n_theta();
    let (a, b, d) = (g.comp(&[0, 0]), g.comp(&[0, 1]), g.comp(&[1, 1]));
    let samples = (0..g.len())
        .map(|p| {
            let e = grid.frame().e(p % nt);
            (a[p] * e[0] * e[0] + 2.0 * b[p] * e[0] * e[1] + d[p] * e[1] * e[1]).sqrt()
        })
        .collect();
    FinslerField::new(grid, samples)
}

impl FlowState {
    /// Builds the state for `phi` at time `t`. In prescribed mode the metric
    /// is the advanced `g`; in Ricci mode it is the Hessian of `phi^2`.
    fn assemble(
        grid: &Grid,
        t: f64,
        phi: FinslerField,
        metric: Option<MetricField>,
        mode: FlowMode,
        g0: Option<&MetricField>,
        config: &FlowConfig,
    ) -> Result<Self> {
        let metric = match metric {
            Some(m) => m,
            None => fundamental_tensor(grid, &phi)?,
        };
        let spray = spray(grid, &phi, &metric)?;
        let reduced = reduced_curvature(grid, &phi, &spray)?;
        let ric_scalar = ricci_scalar(&reduced)?;
        let omega = match mode {
            FlowMode::Ricci => ricci_tensor(grid, &phi, &ric_scalar)?.scaled(-2.0),
            FlowMode::Prescribed(d) => d.omega(t, g0.unwrap_or(&metric)),
        };
        omega.require_finite("omega")?;
        let sup_ric = sup_abs(ric_scalar.values());
        let (convexity_margin, _) = metric.min_eigenvalue();
        let terminal = if !sup_ric.is_finite() {
            Some(StopReason::NonFinite)
        } else if convexity_margin <= config.eps_conv {
            Some(StopReason::ConvexityLoss)
        } else if sup_ric >= config.r_max {
            Some(StopReason::CurvatureThreshold)
        } else {
            None
        };
        Ok(FlowState {
            t,
            phi,
            metric,
            spray,
            ric_scalar,
            omega,
            sup_ric,
            convexity_margin,
            dt: 0.0,
            terminal,
        })
    }

    /// Initial state at `t = 0`.
    pub fn initial(
        grid: &Grid,
        phi: FinslerField,
        mode: FlowMode,
        config: &FlowConfig,
    ) -> Result<Self> {
        Self::assemble(grid, 0.0, phi, None, mode, None, config)
    }
}

/// Time derivative of the evolved unknown.
#[derive(Debug, Clone)]
pub enum Rhs {
    /// `dphi/dt` (Ricci mode).
    Phi(Vec<f64>),
    /// `dg/dt` (prescribed mode).
    Metric(HomogeneousField),
}

/// Right-hand side at `state`: `-phi Ric` in Ricci mode, `omega(t)` in
/// prescribed mode.
pub fn rhs(state: &FlowState, mode: FlowMode, g0: &MetricField) -> Result<Rhs> {
    if state.terminal == Some(StopReason::NonFinite) {
        return Err(Error::NonFinite("flow state"));
    }
    match mode {
        FlowMode::Ricci => {
            let v: Vec<f64> = state
                .phi
                .values()
                .iter()
                .zip(state.ric_scalar.values())
                .map(|(p, r)| -p * r)
                .collect();
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("ricci flow right-hand side"));
            }
            Ok(Rhs::Phi(v))
        }
        FlowMode::Prescribed(d) => Ok(Rhs::Metric(d.omega(state.t, g0))),
    }
}

fn ricci_rate(grid: &Grid, phi: &[f64]) -> std::result::Result<Vec<f64>, Terminal> {
    let f = FinslerField::new(grid, phi.to_vec()).map_err(classify)?;
    let metric = fundamental_tensor(grid, &f).map_err(classify)?;
    let sp = spray(grid, &f, &metric).map_err(classify)?;
    let ric =
        ricci_scalar(&reduced_curvature(grid, &f, &sp).map_err(classify)?).map_err(classify)?;
    Ok(phi.iter().zip(ric.values()).map(|(p, r)| -p * r).collect())
}

fn axpy(x: &[f64], s: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + s * b).collect()
}

fn filtered(grid: &Grid, v: Vec<f64>, threshold: f64) -> Vec<f64> {
    if threshold > 0.0 {
        grid.theta_filter(&v, threshold).0
    } else {
        v
    }
}

/// One RK4 step of size `dt`. Threshold violations of the new state are
/// recorded in `terminal`; failure to build it at all is a [`Terminal`].
pub fn step(
    grid: &Grid,
    state: &FlowState,
    dt: f64,
    mode: FlowMode,
    g0: &MetricField,
    config: &FlowConfig,
) -> std::result::Result<FlowState, Terminal> {
    if !(dt > 0.0) {
        return Err(Terminal {
            reason: StopReason::NonFinite,
            detail: format!("step size must be positive, got {dt}"),
        });
    }
    let t1 = state.t + dt;
    let family = state.phi.family();
    let mut next = match rhs(state, mode, g0).map_err(classify)? {
        Rhs::Phi(k1) => {
            let y = state.phi.values();
            let tau = config.theta_filter;
            let k2 = ricci_rate(grid, &filtered(grid, axpy(y, 0.5 * dt, &k1), tau))?;
            let k3 = ricci_rate(grid, &filtered(grid, axpy(y, 0.5 * dt, &k2), tau))?;
            let k4 = ricci_rate(grid, &filtered(grid, axpy(y, dt, &k3), tau))?;
            let phi: Vec<f64> = (0..y.len())
                .map(|p| y[p] + dt / 6.0 * (k1[p] + 2.0 * k2[p] + 2.0 * k3[p] + k4[p]))
                .collect();
            let phi = filtered(grid, phi, tau);
            let phi = FinslerField::new(grid, phi)
                .map_err(classify)?
                .with_family(family);
            FlowState::assemble(grid, t1, phi, None, mode, Some(g0), config).map_err(classify)?
        }
        Rhs::Metric(k1) => {
            let FlowMode::Prescribed(d) = mode else {
                unreachable!()
            };
            let k2 = d.omega(state.t + 0.5 * dt, g0);
            let k4 = d.omega(t1, g0);
            let g = state.metric.tensor();
            let g_next = g
                .axpy(dt / 6.0, &k1)
                .and_then(|g| g.axpy(dt / 3.0, &k2))
                .and_then(|g| g.axpy(dt / 3.0, &k2))
                .and_then(|g| g.axpy(dt / 6.0, &k4))
                .map_err(classify)?;
            let metric = MetricField::from_tensor(grid, g_next).map_err(classify)?;
            let phi = phi_from_metric(grid, metric.tensor())
                .map_err(classify)?
                .with_family(family);
            FlowState::assemble(grid, t1, phi, Some(metric), mode, Some(g0), config)
                .map_err(classify)?
        }
    };
    next.dt = dt;
    Ok(next)
}

/// Per-step diagnostics; one row of the series file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub sup_ric: f64,
    /// `sup |omega|_g(t)`.
    pub u0: f64,
    /// `sup |nabla omega|_g(t)`.
    pub u1: f64,
    /// Trapezoid `int_0^t u0`.
    pub int_u0: f64,
    pub convexity_margin: f64,
    /// `sup |omega|_g(0)`.
    pub uhat0: f64,
    /// Trapezoid `int_0^t uhat0`.
    pub int_uhat0: f64,
}

/// Stored time level.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub phi: Vec<f64>,
    pub g: HomogeneousField,
    pub omega: HomogeneousField,
}

/// Identifies what was integrated.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub grid: crate::vertical::GridSpec,
    pub mode: FlowMode,
    pub family: MetricFamily,
    pub config: FlowConfig,
}

/// A completed or terminated integration.
#[derive(Debug, Clone)]
pub struct FlowRun {
    pub meta: RunMeta,
    pub snapshots: Vec<Snapshot>,
    pub records: Vec<StepRecord>,
    /// Trapezoid `int_0^t_final omega` over accepted steps.
    pub omega_integral: HomogeneousField,
    pub stop: StopReason,
    pub detail: Option<String>,
}

impl FlowRun {
    pub fn final_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }

    /// `int_0^t u0` at an accepted-step time, interpolated linearly between
    /// records.
    pub fn int_u0_at(&self, t: f64) -> f64 {
        interpolate(&self.records, t, |r| r.int_u0)
    }

    pub fn int_uhat0_at(&self, t: f64) -> f64 {
        interpolate(&self.records, t, |r| r.int_uhat0)
    }

    pub fn initial_metric(&self, grid: &Grid) -> Result<MetricField> {
        let s = self
            .snapshots
            .first()
            .ok_or_else(|| Error::Config("run has no snapshots".into()))?;
        MetricField::from_tensor(grid, s.g.clone())
    }
}

fn interpolate(records: &[StepRecord], t: f64, key: impl Fn(&StepRecord) -> f64) -> f64 {
    match records.iter().position(|r| r.t >= t) {
        None => records.last().map_or(0.0, &key),
        Some(0) => key(&records[0]),
        Some(i) => {
            let (a, b) = (&records[i - 1], &records[i]);
            let w = (t - a.t) / (b.t - a.t);
            key(a) + w * (key(b) - key(a))
        }
    }
}

/// `u0`, `u1` and `uhat0` at a state.
pub fn state_norms(grid: &Grid, state: &FlowState, g0: &MetricField) -> Result<(f64, f64, f64)> {
    let u0 = tensor_norm(&state.omega, &state.metric)?.sup;
    let conn =
        cartan_horizontal_coefficients(grid, &state.metric, state.spray.nonlinear_connection())?;
    let dw = horizontal_covariant_derivative_02(grid, &state.omega, &conn)?;
    let u1 = tensor_norm(&dw, &state.metric)?.sup;
    let uhat0 = tensor_norm(&state.omega, g0)?.sup;
    Ok((u0, u1, uhat0))
}

fn record(
    grid: &Grid,
    state: &FlowState,
    g0: &MetricField,
    prev: Option<&StepRecord>,
) -> StepRecord {
    let (u0, u1, uhat0) = state_norms(grid, state, g0).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    let (int_u0, int_uhat0) = match prev {
        None => (0.0, 0.0),
        Some(p) => (
            p.int_u0 + 0.5 * state.dt * (p.u0 + u0),
            p.int_uhat0 + 0.5 * state.dt * (p.uhat0 + uhat0),
        ),
    };
    StepRecord {
        t: state.t,
        dt: state.dt,
        sup_ric: state.sup_ric,
        u0,
        u1,
        int_u0,
        convexity_margin: state.convexity_margin,
        uhat0,
        int_uhat0,
    }
}

fn snapshot(step: usize, state: &FlowState) -> Snapshot {
    Snapshot {
        step,
        t: state.t,
        phi: state.phi.values().to_vec(),
        g: state.metric.tensor().clone(),
        omega: state.omega.clone(),
    }
}

/// Integrates from `t = 0` toward the horizon.
///
/// Terminal states end the run and are reported through
/// [`FlowRun::stop`]; only an invalid initial state is an error.
pub fn run(grid: &Grid, phi0: FinslerField, mode: FlowMode, config: FlowConfig) -> Result<FlowRun> {
    run_with(grid, phi0, mode, config, |_| {})
}

/// [`run`] with a callback after every accepted step.
pub fn run_with(
    grid: &Grid,
    phi0: FinslerField,
    mode: FlowMode,
    config: FlowConfig,
    mut on_step: impl FnMut(&StepRecord),
) -> Result<FlowRun> {
    config.validate()?;
    let spec = grid
        .spec()
        .ok_or_else(|| Error::Config("flows run on the torus grid only".into()))?;
    let family = phi0.family().unwrap_or(MetricFamily::Euclidean);
    let mut state = FlowState::initial(grid, phi0, mode, &config)?;
    if let Some(t) = &state.terminal {
        return Err(Error::Config(format!(
            "initial state is terminal ({t}): sup|Ric| = {:e}, margin = {:e}",
            state.sup_ric, state.convexity_margin
        )));
    }
    let g0 = state.metric.clone();
    let first = record(grid, &state, &g0, None);
    on_step(&first);
    let mut records = vec![first];
    let mut snapshots = vec![snapshot(0, &state)];
    let mut omega_integral = HomogeneousField::zeros(0, state.omega.slots().to_vec(), grid.len());
    let mut detail = None;
    let h_min = grid.h_min();
    let horizon = config.horizon;
    let mut n_steps = 0;
    let stop = loop {
        if state.t >= horizon * (1.0 - 1e-12) {
            break StopReason::ReachedHorizon;
        }
        let dt = config.dt(h_min, state.sup_ric).min(horizon - state.t);
        match step(grid, &state, dt, mode, &g0, &config) {
            Ok(next) => {
                n_steps += 1;
                omega_integral = omega_integral
                    .axpy(0.5 * dt, &state.omega)
                    .and_then(|w| w.axpy(0.5 * dt, &next.omega))?;
                let rec = record(grid, &next, &g0, records.last());
                on_step(&rec);
                records.push(rec);
                state = next;
                let done = state.terminal.is_some() || state.t >= horizon * (1.0 - 1e-12);
                if done || n_steps % config.snapshot_every == 0 {
                    snapshots.push(snapshot(n_steps, &state));
                }
                if let Some(reason) = state.terminal {
                    break reason;
                }
            }
            Err(term) => {
                detail = Some(term.detail);
                if snapshots.last().map(|s| s.step) != Some(n_steps) {
                    snapshots.push(snapshot(n_steps, &state));
                }
                break term.reason;
            }
        }
    };
    Ok(FlowRun {
        meta: RunMeta {
            grid: spec,
            mode,
            family,
            config,
        },
        snapshots,
        records,
        omega_integral,
        stop,
        detail,
    })
}
