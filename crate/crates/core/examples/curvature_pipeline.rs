//! Spray, Ricci scalar and Ricci tensor of a conformally flat torus metric,
//! compared with the Gauss curvature of `e^(2u) delta`.

use finsler_flow::curvature::curvature;
use finsler_flow::geometry::{FinslerField, MetricFamily};
use finsler_flow::vertical::{Grid, GridSpec};

fn main() -> finsler_flow::Result<()> {
    let a = 0.05;
    let gauss =
        |x1: f64, x2: f64| 2.0 * a * (-2.0 * a * x1.cos() * x2.cos()).exp() * x1.cos() * x2.cos();
    for n in [16, 32, 64] {
        let grid = Grid::torus(GridSpec::new(n, n, 16)?)?;
        let f = FinslerField::from_family(&grid, MetricFamily::ConformalTorus { a })?;
        let cb = curvature(&grid, &f)?;
        let k = grid.sample(|x1, x2, _| gauss(x1, x2));
        let scale = k.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = cb
            .ric_scalar
            .values()
            .iter()
            .zip(&k)
            .map(|(r, k)| (r - k).abs())
            .fold(0.0, f64::max);
        // In two dimensions Ric_jk = K g_jk.
        let mut tensor_err = 0.0f64;
        for idx in [[0, 0], [0, 1], [1, 1]] {
            let g = cb.metric.tensor().comp(&idx);
            for p in 0..grid.len() {
                tensor_err = tensor_err.max((cb.ric_tensor.comp(&idx)[p] - k[p] * g[p]).abs());
            }
        }
        println!(
            "n = {n:>2}: |Ric - K|/|K| {:.2e}   |Ric_jk - K g_jk| {tensor_err:.2e}",
            err / scale
        );
    }
    Ok(())
}
