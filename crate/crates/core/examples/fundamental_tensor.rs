//! The fundamental tensor of a Randers metric, its convexity margin and the
//! Euler contraction `g(y, y) = F^2`.

use finsler_flow::geometry::{fundamental_tensor, sym_eigenvalues, FinslerField, MetricFamily};
use finsler_flow::vertical::{Grid, GridSpec};

fn main() -> finsler_flow::Result<()> {
    let grid = Grid::torus(GridSpec::cube(32)?)?;
    for b in [0.1, 0.3, 0.6] {
        let f = FinslerField::from_family(&grid, MetricFamily::RandersTorus { b })?;
        let g = fundamental_tensor(&grid, &f)?;
        let (margin, node) = f.convexity_margin(&grid);
        let f2 = f.squared();
        let euler = g
            .quadratic_form(&grid)
            .iter()
            .zip(f2.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let (lambda, at) = g.min_eigenvalue();
        println!(
            "b = {b}: min(phi + phi'') {margin:.4} at {node}, min eigenvalue of g {lambda:.4} at {}, \
             |g(y,y) - F^2| {euler:.1e}",
            grid.node(at)
        );
    }

    let f = FinslerField::from_family(&grid, MetricFamily::RandersTorus { b: 0.3 })?;
    let g = fundamental_tensor(&grid, &f)?;
    println!("\ntheta     g11      g12      g22      eigenvalues");
    for k in (0..grid.n_theta()).step_by(4) {
        let p = grid.index(5, 9, k);
        let [a, b, d] = g.at(p);
        let [l1, l2] = sym_eigenvalues(a, b, d);
        println!(
            "{:5.3}  {a:7.4}  {b:7.4}  {d:7.4}   {l1:.4} {l2:.4}",
            grid.frame().theta(k)
        );
    }
    Ok(())
}
