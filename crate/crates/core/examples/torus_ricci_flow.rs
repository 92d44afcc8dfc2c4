//! Ricci flow of a conformal torus metric, saved to disk and checked against
//! the certificate suite.

use finsler_flow::analysis::{verify_run, Tolerances};
use finsler_flow::flow::{load_run, run_with, save_run, FlowConfig, FlowMode, SnapshotFormat};
use finsler_flow::geometry::{FinslerField, MetricFamily};
use finsler_flow::vertical::{Grid, GridSpec};

fn main() -> finsler_flow::Result<()> {
    let n = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(32);
    let grid = Grid::torus(GridSpec::cube(n)?)?;
    let phi = FinslerField::from_family(&grid, MetricFamily::ConformalTorus { a: 0.05 })?;
    let mut steps = 0;
    let r = run_with(&grid, phi, FlowMode::Ricci, FlowConfig::new(0.5), |s| {
        steps += 1;
        if steps % 25 == 0 {
            println!(
                "t = {:.4}  sup|Ric| = {:.4}  margin = {:.4}",
                s.t, s.sup_ric, s.convexity_margin
            );
        }
    })?;
    println!(
        "stop: {} at t = {:.4} after {} steps",
        r.stop,
        r.final_time(),
        r.records.len()
    );

    let dir = std::env::temp_dir().join("finsler-torus-example");
    save_run(&r, &dir, SnapshotFormat::Binary)?;
    let back = load_run(&dir)?;
    println!(
        "saved {} snapshots to {}\n",
        back.snapshots.len(),
        dir.display()
    );

    for cert in verify_run(&grid, &back, &Tolerances::default())? {
        println!("{cert}");
    }
    Ok(())
}
