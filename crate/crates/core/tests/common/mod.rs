//! Oracles shared by the integration tests. Nothing here calls into the
//! library's derivative machinery: curvature is recomputed from the ambient
//! closed-form norm by nested central differences.

#![allow(dead_code)]

use finsler_flow::geometry::MetricFamily;
use finsler_flow::vertical::{Grid, GridSpec};

pub fn torus(n_x: usize, n_theta: usize) -> Grid {
    Grid::torus(GridSpec::new(n_x, n_x, n_theta).unwrap()).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Gauss curvature of `e^(2u) delta` with `u = a cos x1 cos x2`.
pub fn conformal_gauss_curvature(a: f64, x1: f64, x2: f64) -> f64 {
    2.0 * a * (-2.0 * a * x1.cos() * x2.cos()).exp() * x1.cos() * x2.cos()
}

type Point = [f64; 4];

/// Fourth-order central first derivative along coordinate `i`.
fn partial(f: &dyn Fn(Point) -> f64, z: Point, i: usize, h: f64) -> f64 {
    let at = |s: f64| {
        let mut w = z;
        w[i] += s;
        f(w)
    };
    (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h)
}

fn partial2(f: &dyn Fn(Point) -> f64, z: Point, i: usize, j: usize, h: f64) -> f64 {
    partial(&|w| partial(f, w, j, h), z, i, h)
}

const X: [usize; 2] = [0, 1];
const Y: [usize; 2] = [2, 3];
const INNER_STEP: f64 = 2e-3;

/// Spray `G^i` from nested differences of `F^2`.
fn spray_at(norm: &dyn Fn([f64; 2], [f64; 2]) -> f64, z: Point) -> [f64; 2] {
    let f2 = |w: Point| norm([w[0], w[1]], [w[2], w[3]]).powi(2);
    let h = INNER_STEP;
    let g = |i: usize, j: usize| 0.5 * partial2(&f2, z, Y[i], Y[j], h);
    let (a, b, d) = (g(0, 0), g(0, 1), g(1, 1));
    let det = a * d - b * b;
    let inv = [[d / det, -b / det], [-b / det, a / det]];
    let bracket: [f64; 2] = std::array::from_fn(|k| {
        let mixed: f64 = (0..2)
            .map(|j| z[Y[j]] * partial2(&f2, z, X[j], Y[k], h))
            .sum();
        mixed - partial(&f2, z, X[k], h)
    });
    std::array::from_fn(|i| 0.25 * (inv[i][0] * bracket[0] + inv[i][1] * bracket[1]))
}

fn ricci_with_step(norm: &dyn Fn([f64; 2], [f64; 2]) -> f64, z: Point, h: f64) -> f64 {
    let comp = |i: usize| move |w: Point| spray_at(norm, w)[i];
    let gz = spray_at(norm, z);
    let ny: [[f64; 2]; 2] =
        std::array::from_fn(|i| std::array::from_fn(|j| partial(&comp(i), z, Y[j], h)));
    let f2 = norm([z[0], z[1]], [z[2], z[3]]).powi(2);
    let mut trace = 0.0;
    for i in 0..2 {
        let gi = comp(i);
        let k = i;
        let dx = partial(&gi, z, X[k], h);
        let mixed: f64 = (0..2)
            .map(|j| z[Y[j]] * partial2(&gi, z, X[j], Y[k], h))
            .sum();
        let hess: f64 = (0..2)
            .map(|j| gz[j] * partial2(&gi, z, Y[j], Y[k], h))
            .sum();
        let quad: f64 = (0..2).map(|j| ny[i][j] * ny[j][k]).sum();
        trace += (2.0 * dx - mixed + 2.0 * hess - quad) / f2;
    }
    trace
}

/// Ricci scalar at `(x, y)` from the ambient norm, Richardson-extrapolated in
/// the outer step.
pub fn ricci_oracle(norm: &dyn Fn([f64; 2], [f64; 2]) -> f64, x: [f64; 2], y: [f64; 2]) -> f64 {
    let z = [x[0], x[1], y[0], y[1]];
    let h = 0.04;
    let coarse = ricci_with_step(norm, z, h);
    let fine = ricci_with_step(norm, z, h / 2.0);
    (16.0 * fine - coarse) / 15.0
}

pub fn family_ricci_oracle(family: MetricFamily, x: [f64; 2], theta: f64) -> f64 {
    ricci_oracle(&|x, y| family.norm(x, y), x, [theta.cos(), theta.sin()])
}

pub fn family_spray_oracle(family: MetricFamily, x: [f64; 2], theta: f64) -> [f64; 2] {
    spray_at(
        &|x, y| family.norm(x, y),
        [x[0], x[1], theta.cos(), theta.sin()],
    )
}

/// `|T|^2` of a `(0, rank)` tensor by explicit index loops.
pub fn brute_force_norm_lower(
    t: &dyn Fn(&[usize]) -> f64,
    rank: usize,
    g_inv: [[f64; 2]; 2],
) -> f64 {
    let total = 1usize << rank;
    let idx = |n: usize| -> Vec<usize> { (0..rank).map(|s| (n >> (rank - 1 - s)) & 1).collect() };
    let mut acc = 0.0;
    for a in 0..total {
        for b in 0..total {
            let (ia, ib) = (idx(a), idx(b));
            let w: f64 = (0..rank).map(|s| g_inv[ia[s]][ib[s]]).product();
            acc += t(&ia) * t(&ib) * w;
        }
    }
    acc.sqrt()
}

/// Ten chart points strictly inside the unit disk, spread over angles and
/// radii up to 0.5.
pub fn interior_points() -> Vec<[f64; 2]> {
    (0..10)
        .map(|i| {
            let r = 0.05 + 0.05 * i as f64;
            let a = 0.7 + 2.3 * i as f64;
            [r * a.cos(), r * a.sin()]
        })
        .collect()
}
