use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::{verify_run, Certificate, Tolerances};
use crate::curvature::{curvature, pointwise, POINTWISE_SPACING};
use crate::error::{Error, Result};
use crate::flow::{load_run, run_with, save_run, StopReason};
use crate::geometry::FinslerField;
use crate::vertical::Grid;

use super::Scenario;

pub const CURVATURE_HEADER: &str = "x1,x2,theta,phi,det_g,ric,ric11,ric12,ric22";
const CHART_LATTICE_HALF_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    CertificateFailed,
    NonFinite,
}

/// What a command produced: a human-readable summary and the exit status.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::CertificateFailed => 2,
            Status::NonFinite => 3,
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Curvature table of the scenario's initial metric, written to
/// `out/curvature.csv`. Torus families use the scenario grid; chart-restricted
/// families are evaluated pointwise on an `n_x1 x n_x2` lattice covering
/// `[-0.5, 0.5]^2`.
pub fn cmd_curvature(scenario: &Scenario, out: &Path) -> Result<Outcome> {
    create_dir(out)?;
    let mut csv = format!("{CURVATURE_HEADER}\n");
    let mut sup = 0.0f64;
    let fam = scenario.family;
    let mut row = |x: [f64; 2], theta: f64, vals: [f64; 6]| {
        sup = sup.max(vals[2].abs());
        let _ = writeln!(
            csv,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            x[0], x[1], theta, vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]
        );
    };
    if fam.on_torus() {
        let grid = Grid::torus(scenario.grid)?;
        let f = FinslerField::from_family(&grid, fam)?;
        let cb = curvature(&grid, &f)?;
        let det = cb.metric.det();
        let ric = cb.ric_scalar.values();
        let (r11, r12, r22) = (
            cb.ric_tensor.comp(&[0, 0]),
            cb.ric_tensor.comp(&[0, 1]),
            cb.ric_tensor.comp(&[1, 1]),
        );
        for p in 0..grid.len() {
            let node = grid.node(p);
            let x = [grid.x(0, node.i1), grid.x(1, node.i2)];
            row(
                x,
                grid.frame().theta(node.k),
                [f.values()[p], det[p], ric[p], r11[p], r12[p], r22[p]],
            );
        }
    } else {
        let (n1, n2) = (scenario.grid.n_x1, scenario.grid.n_x2);
        let w = CHART_LATTICE_HALF_WIDTH;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let x = [
                    -w + 2.0 * w * i1 as f64 / (n1 - 1) as f64,
                    -w + 2.0 * w * i2 as f64 / (n2 - 1) as f64,
                ];
                let pc = pointwise(fam, x, scenario.grid.n_theta, POINTWISE_SPACING)?;
                for k in 0..pc.theta.len() {
                    let [r11, r12, r22] = &pc.ric_tensor;
                    row(
                        x,
                        pc.theta[k],
                        [
                            pc.phi[k],
                            pc.det_g[k],
                            pc.ric_scalar[k],
                            r11[k],
                            r12[k],
                            r22[k],
                        ],
                    );
                }
            }
        }
    }
    let path = out.join("curvature.csv");
    write(&path, &csv)?;
    let status = if sup.is_finite() {
        Status::Ok
    } else {
        Status::NonFinite
    };
    let summary = format!("{fam}: sup|Ric| = {sup:.6e}\nwrote {}\n", path.display());
    Ok(Outcome { status, summary })
}

/// Integrates the scenario and writes the run directory, including a copy
/// of the scenario as `scenario.txt`.
pub fn cmd_flow(scenario: &Scenario, out: &Path) -> Result<Outcome> {
    let grid = Grid::torus(scenario.grid)?;
    let phi0 = FinslerField::from_family(&grid, scenario.family)?;
    let run = run_with(&grid, phi0, scenario.mode, scenario.flow, |_| {})?;
    save_run(&run, out, scenario.output.format)?;
    let mut copy = scenario.clone();
    copy.output.dir = Some(out.to_path_buf());
    write(&out.join("scenario.txt"), &copy.emit())?;
    let last = run.records.last().expect("a run records its initial state");
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "{} flow of {} on {}",
        scenario.mode, scenario.family, scenario.grid
    );
    let _ = writeln!(
        summary,
        "stop: {} at t = {:.6} after {} steps ({} snapshots)",
        run.stop,
        last.t,
        run.records.len() - 1,
        run.snapshots.len()
    );
    if let Some(d) = &run.detail {
        let _ = writeln!(summary, "detail: {d}");
    }
    let _ = writeln!(
        summary,
        "sup|Ric| = {:.6e}, int u0 = {:.6e}, margin = {:.6e}",
        last.sup_ric, last.int_u0, last.convexity_margin
    );
    let _ = writeln!(summary, "wrote {}", out.display());
    let status = if run.stop == StopReason::NonFinite {
        Status::NonFinite
    } else {
        Status::Ok
    };
    Ok(Outcome { status, summary })
}

fn run_tolerances(dir: &Path, tol: Option<f64>) -> Result<Tolerances> {
    if let Some(t) = tol {
        return Ok(Tolerances::uniform(t));
    }
    let path = dir.join("scenario.txt");
    if path.exists() {
        Ok(Scenario::load(&path)?.tolerances)
    } else {
        Ok(Tolerances::default())
    }
}

/// Runs the certificate suite on a run directory and writes
/// `certificates.txt`, one record per certificate.
pub fn cmd_verify(dir: &Path, tol: Option<f64>) -> Result<Outcome> {
    let run = load_run(dir)?;
    let tolerances = run_tolerances(dir, tol)?;
    let grid = Grid::torus(run.meta.grid)?;
    let certs = verify_run(&grid, &run, &tolerances)?;
    let records: String = certs.iter().map(|c| c.record() + "\n").collect();
    write(&dir.join("certificates.txt"), &records)?;
    let mut summary = String::new();
    for c in &certs {
        let _ = writeln!(summary, "{c}");
    }
    let failed = certs.iter().filter(|c| !c.pass).count();
    let _ = writeln!(
        summary,
        "{} of {} certificates pass",
        certs.len() - failed,
        certs.len()
    );
    let status = if run.stop == StopReason::NonFinite {
        Status::NonFinite
    } else if failed > 0 {
        Status::CertificateFailed
    } else {
        Status::Ok
    };
    Ok(Outcome { status, summary })
}

/// Series statistics, stop reason and certificate digest of a run directory,
/// written to `report.txt`.
pub fn cmd_report(dir: &Path) -> Result<Outcome> {
    let run = load_run(dir)?;
    let recs = &run.records;
    let mut s = String::new();
    let _ = writeln!(s, "run: {}", dir.display());
    let _ = writeln!(
        s,
        "flow: {} of {} on {}",
        run.meta.mode, run.meta.family, run.meta.grid
    );
    let _ = writeln!(
        s,
        "stop: {} at t = {:.6} (horizon {})",
        run.stop,
        run.final_time(),
        run.meta.config.horizon
    );
    if let Some(d) = &run.detail {
        let _ = writeln!(s, "detail: {d}");
    }
    let _ = writeln!(
        s,
        "accepted steps: {}, snapshots: {}",
        recs.len().saturating_sub(1),
        run.snapshots.len()
    );
    let steps: Vec<f64> = recs.iter().skip(1).map(|r| r.dt).collect();
    if !steps.is_empty() {
        let lo = steps.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = steps.iter().copied().fold(0.0, f64::max);
        let _ = writeln!(s, "dt: min {lo:.4e}, max {hi:.4e}");
    }
    let stat = |name: &str, f: &dyn Fn(&crate::flow::StepRecord) -> f64, s: &mut String| {
        let v: Vec<f64> = recs.iter().map(f).collect();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let last = v.last().copied().unwrap_or(f64::NAN);
        let _ = writeln!(
            s,
            "{name:<18} min {lo:>12.4e}  max {hi:>12.4e}  final {last:>12.4e}"
        );
    };
    stat("sup|Ric|", &|r| r.sup_ric, &mut s);
    stat("u0", &|r| r.u0, &mut s);
    stat("u1", &|r| r.u1, &mut s);
    stat("int u0", &|r| r.int_u0, &mut s);
    stat("int uhat0", &|r| r.int_uhat0, &mut s);
    stat("convexity margin", &|r| r.convexity_margin, &mut s);

    let mut status = if run.stop == StopReason::NonFinite {
        Status::NonFinite
    } else {
        Status::Ok
    };
    let cert_path = dir.join("certificates.txt");
    if cert_path.exists() {
        let text = fs::read_to_string(&cert_path).map_err(|e| Error::io(&cert_path, e))?;
        let certs: Vec<Certificate> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                Certificate::parse_record(l).ok_or_else(|| Error::RunDir {
                    path: cert_path.clone(),
                    message: format!("malformed certificate record `{l}`"),
                })
            })
            .collect::<Result<_>>()?;
        let failed: Vec<&Certificate> = certs.iter().filter(|c| !c.pass).collect();
        let _ = writeln!(
            s,
            "certificates: {} of {} pass",
            certs.len() - failed.len(),
            certs.len()
        );
        for c in &failed {
            let _ = writeln!(s, "  {c}");
        }
        if !failed.is_empty() && status == Status::Ok {
            status = Status::CertificateFailed;
        }
    } else {
        let _ = writeln!(s, "certificates: not verified");
    }
    write(&dir.join("report.txt"), &s)?;
    Ok(Outcome { status, summary: s })
}

/// Default run directory of a scenario: its `[output] dir`, else `run`.
pub fn default_out(scenario: &Scenario) -> PathBuf {
    scenario
        .output
        .dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("run"))
}
