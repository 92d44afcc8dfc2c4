//! Chart-restricted metrics are evaluated pointwise on a small patch: the
//! round sphere has Ricci scalar 1, the Funk disk -1/4.

use finsler_flow::curvature::{pointwise, POINTWISE_SPACING};
use finsler_flow::geometry::MetricFamily;

fn main() -> finsler_flow::Result<()> {
    let points = [[0.0, 0.0], [0.2, -0.1], [-0.35, 0.3], [0.1, 0.45]];
    for family in [MetricFamily::RoundSphere, MetricFamily::FunkDisk] {
        println!("{}", family.name());
        for x in points {
            let pc = pointwise(family, x, 32, POINTWISE_SPACING)?;
            let (lo, hi) = pc
                .ric_scalar
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            println!(
                "  x = ({:5.2}, {:5.2})  Ric in [{lo:.7}, {hi:.7}]",
                x[0], x[1]
            );
        }
    }
    Ok(())
}
