//! Prescribed homothetic deformation `omega = -2c g(0)`: every quantity has a
//! closed form, so the whole pipeline can be checked exactly.

use finsler_flow::analysis::{norm_series, verify_run, Tolerances};
use finsler_flow::flow::{limit_metric, run, Deformation, FlowConfig, FlowMode};
use finsler_flow::geometry::{FinslerField, MetricFamily};
use finsler_flow::vertical::{Grid, GridSpec};

fn main() -> finsler_flow::Result<()> {
    let c = 0.1;
    let grid = Grid::torus(GridSpec::new(16, 16, 32)?)?;
    let phi = FinslerField::from_family(&grid, MetricFamily::RandersTorus { b: 0.3 })?;
    let mode = FlowMode::Prescribed(Deformation::Homothetic { c });
    let r = run(&grid, phi.clone(), mode, FlowConfig::new(2.0))?;
    println!("{} steps, stop: {}", r.records.len(), r.stop);

    let series = norm_series(&grid, &r)?;
    println!("\n    t      u0    closed form   uhat0");
    for (k, &t) in series.times.iter().enumerate().step_by(4) {
        let exact = 2.0 * c * 2f64.sqrt() / (1.0 - 2.0 * c * t);
        println!(
            "{t:6.3}  {:.6}  {exact:.6}   {:.6}",
            series.u0[k], series.uhat0[k]
        );
    }

    let limit = limit_metric(&grid, &r)?;
    let target = r.snapshots[0].g.scaled(1.0 - 2.0 * c * 2.0);
    let fbar_err = limit
        .fbar
        .iter()
        .zip(phi.values())
        .map(|(a, b)| (a - 0.6f64.sqrt() * b).abs())
        .fold(0.0, f64::max);
    println!(
        "\n|gbar - 0.6 g(0)|        {:.1e}",
        limit.gbar.max_abs_diff(&target)
    );
    println!("|Fbar - sqrt(0.6) F(0)|  {fbar_err:.1e}");
    println!("Hessian residual         {:.1e}\n", limit.hessian_residual);

    for cert in verify_run(&grid, &r, &Tolerances::default())? {
        println!("{cert}");
    }
    Ok(())
}
