//! Library values against independent oracles and closed forms.

#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use finsler_flow::analysis::{norm_series, tensor_norm};
use finsler_flow::curvature::{curvature, pointwise, scalar_pipeline, POINTWISE_SPACING};
use finsler_flow::flow::{rhs, run, step, Deformation, FlowConfig, FlowMode, FlowState, Rhs};
use finsler_flow::geometry::{FinslerField, MetricFamily, MetricField};
use finsler_flow::vertical::HomogeneousField;

#[test]
fn ambient_oracle_reproduces_constant_curvatures() {
    for x in interior_points().into_iter().take(4) {
        for theta in [0.3, 2.0, 4.4] {
            let s = family_ricci_oracle(MetricFamily::RoundSphere, x, theta);
            let f = family_ricci_oracle(MetricFamily::FunkDisk, x, theta);
            assert!((s - 1.0).abs() < 1e-7, "sphere {s}");
            assert!((f + 0.25).abs() < 1e-6, "funk {f}");
        }
    }
    let a = 0.05;
    let k = family_ricci_oracle(MetricFamily::ConformalTorus { a }, [0.4, 1.1], 0.9);
    assert!(
        (k - conformal_gauss_curvature(a, 0.4, 1.1)).abs() < 1e-7,
        "{k} {}",
        conformal_gauss_curvature(a, 0.4, 1.1)
    );
}

#[test]
fn pointwise_curvature_matches_oracle_on_randers() {
    // Randers on the torus is not Riemannian; the oracle knows nothing of fibers.
    let fam = MetricFamily::RandersTorus { b: 0.3 };
    let pc = pointwise(fam, [0.7, -1.2], 64, POINTWISE_SPACING).unwrap();
    let mut worst = 0.0f64;
    for k in (0..64).step_by(7) {
        let oracle = family_ricci_oracle(fam, [0.7, -1.2], pc.theta[k]);
        worst = worst.max((pc.ric_scalar[k] - oracle).abs());
    }
    assert!(worst < 1e-5, "worst {worst}");
}

#[test]
fn funk_spray_is_projective() {
    // Funk: F_x = F F_y, so G^i = F y^i / 2.
    for x in interior_points().into_iter().take(5) {
        let pc = pointwise(MetricFamily::FunkDisk, x, 32, POINTWISE_SPACING).unwrap();
        for k in 0..32 {
            let y = [pc.theta[k].cos(), pc.theta[k].sin()];
            for i in 0..2 {
                assert!((pc.spray[i][k] - 0.5 * pc.phi[k] * y[i]).abs() < 1e-6);
            }
        }
        let o = family_spray_oracle(MetricFamily::FunkDisk, x, pc.theta[3]);
        assert!((o[0] - pc.spray[0][3]).abs() < 1e-6 && (o[1] - pc.spray[1][3]).abs() < 1e-6);
    }
}

#[test]
fn conformal_spray_is_levi_civita() {
    // G^i = (du . y) y^i - |y|^2 du^i / 2 for F = e^u |y|.
    let a = 0.05;
    let grid = torus(64, 32);
    let f = FinslerField::from_family(&grid, MetricFamily::ConformalTorus { a }).unwrap();
    let cb = curvature(&grid, &f).unwrap();
    let du = |x1: f64, x2: f64| [-a * x1.sin() * x2.cos(), -a * x1.cos() * x2.sin()];
    for i in 0..2 {
        let expected = grid.sample(|x1, x2, t| {
            let (y, g) = ([t.cos(), t.sin()], du(x1, x2));
            (g[0] * y[0] + g[1] * y[1]) * y[i] - 0.5 * g[i]
        });
        let err = max_abs_diff(cb.spray.coefficients().comp(&[i]), &expected);
        assert!(err < 1e-5 * a, "G^{i}: {err}");
    }
}

#[test]
fn ricci_rhs_at_start_is_minus_phi_k() {
    let a = 0.05;
    let grid = torus(64, 16);
    let cfg = FlowConfig::new(1.0);
    let phi = FinslerField::from_family(&grid, MetricFamily::ConformalTorus { a }).unwrap();
    let s0 = FlowState::initial(&grid, phi, FlowMode::Ricci, &cfg).unwrap();
    let Rhs::Phi(r) = rhs(&s0, FlowMode::Ricci, &s0.metric).unwrap() else {
        panic!("ricci mode advances phi")
    };
    let expected = grid.sample(|x1, x2, _| {
        -(a * x1.cos() * x2.cos()).exp() * conformal_gauss_curvature(a, x1, x2)
    });
    assert!(max_abs_diff(&r, &expected) < 1e-4 * max_abs(&expected));
}

#[test]
fn brute_force_tensor_norm() {
    let grid = torus(8, 8);
    let len = grid.len();
    let (g11, g12, g22) = (1.7, -0.35, 0.8);
    let metric = MetricField::from_tensor(
        &grid,
        HomogeneousField::symmetric_lower(0, vec![g11; len], vec![g12; len], vec![g22; len]),
    )
    .unwrap();
    let det = g11 * g22 - g12 * g12;
    let inv = [[g22 / det, -g12 / det], [-g12 / det, g11 / det]];
    let entries = [0.3, -1.1, 0.7, 2.0, -0.4, 0.9, 1.3, -0.6];
    let t = HomogeneousField::from_components(
        0,
        vec![finsler_flow::vertical::Slot::Lower; 3],
        entries.iter().map(|&v| vec![v; len]).collect(),
    )
    .unwrap();
    let oracle = brute_force_norm_lower(&|idx| entries[idx[0] * 4 + idx[1] * 2 + idx[2]], 3, inv);
    let n = tensor_norm(&t, &metric).unwrap();
    assert!((n.sup - oracle).abs() < 1e-13 * oracle);
}

#[test]
fn homothetic_norm_series_closed_forms() {
    let c = 0.1;
    let grid = torus(8, 16);
    let phi = FinslerField::from_family(&grid, MetricFamily::RandersTorus { b: 0.2 }).unwrap();
    let mut cfg = FlowConfig::new(1.0);
    cfg.dt_max = 0.05;
    let r = run(
        &grid,
        phi,
        FlowMode::Prescribed(Deformation::Homothetic { c }),
        cfg,
    )
    .unwrap();
    let s = norm_series(&grid, &r).unwrap();
    let root2 = 2f64.sqrt();
    for (k, &t) in s.times.iter().enumerate() {
        assert!((s.u0[k] - 2.0 * c * root2 / (1.0 - 2.0 * c * t)).abs() < 1e-12);
        assert!((s.uhat0[k] - 2.0 * c * root2).abs() < 1e-12);
        assert!(s.u1[k] < 1e-9 && s.uhat1[k] < 1e-9);
    }
    for rec in &r.records {
        assert!((rec.uhat0 - 2.0 * c * root2).abs() < 1e-12);
    }
}

#[test]
fn rk4_step_doubling_is_fourth_order() {
    let grid = torus(16, 16);
    let cfg = FlowConfig::new(1.0);
    let phi = FinslerField::from_family(&grid, MetricFamily::ConformalTorus { a: 0.3 }).unwrap();
    let s0 = FlowState::initial(&grid, phi, FlowMode::Ricci, &cfg).unwrap();
    let g0 = s0.metric.clone();
    let horizon = 0.005;
    let advance = |n: usize| {
        let mut s = s0.clone();
        for _ in 0..n {
            s = step(&grid, &s, horizon / n as f64, FlowMode::Ricci, &g0, &cfg).unwrap();
        }
        s.phi.values().to_vec()
    };
    let (p1, p2, p4) = (advance(1), advance(2), advance(4));
    let ratio = max_abs_diff(&p1, &p2) / max_abs_diff(&p2, &p4);
    assert!(ratio > 13.0 && ratio < 19.0, "ratio {ratio}");
}

#[test]
fn two_formulations_agree_on_the_torus() {
    // g(t) rebuilt from phi(t) against g(0) + int omega.
    let grid = torus(16, 16);
    let phi = FinslerField::from_family(&grid, MetricFamily::ConformalTorus { a: 0.3 }).unwrap();
    let gap = |dt_max: f64| {
        let mut cfg = FlowConfig::new(0.2);
        cfg.dt_max = dt_max;
        cfg.c_cfl = 10.0;
        let r = run(&grid, phi.clone(), FlowMode::Ricci, cfg).unwrap();
        let last = r.snapshots.last().unwrap();
        let rebuilt = r.snapshots[0].g.axpy(1.0, &r.omega_integral).unwrap();
        last.g.max_abs_diff(&rebuilt)
    };
    let (coarse, fine) = (gap(0.01), gap(0.005));
    assert!(coarse < 1e-4, "{coarse}");
    assert!(coarse / fine > 3.5, "{coarse} {fine}");
}

#[test]
fn ricci_scalar_scales_inversely_with_square() {
    let grid = torus(16, 32);
    let phi = FinslerField::from_family(&grid, MetricFamily::RandersTorus { b: 0.3 }).unwrap();
    let (_, _, _, r1) = scalar_pipeline(&grid, &phi).unwrap();
    for lambda in [0.5, 1.7, 3.0] {
        let (_, _, _, r2) = scalar_pipeline(&grid, &phi.scaled(lambda).unwrap()).unwrap();
        let scaled: Vec<f64> = r1.values().iter().map(|v| v / (lambda * lambda)).collect();
        assert!(max_abs_diff(r2.values(), &scaled) < 1e-9, "lambda {lambda}");
    }
}
