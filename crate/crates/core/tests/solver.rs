//! Newton path against the bracketed bisection solver, plus circuit invariants.

use dbmd_core::circuit::{
    newton, solve_operating_point, solve_operating_point_bracketed, transient_rhs,
};
use dbmd_core::{CircuitConfig, CircuitMode, Device, OperatingPoint, SolverSettings};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn agree(a: &OperatingPoint, b: &OperatingPoint, floor: f64) -> bool {
    (a.i - b.i).abs() <= 1e-9 * a.i.abs().max(b.i.abs()) + floor
}

#[test]
fn newton_matches_bisection_on_random_points() {
    let dev = Device::default();
    let cfg = CircuitConfig::default();
    let st = SolverSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2016);
    let mut fallbacks = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let e = rng.gen_range(-2.0..=3.0);
        let z = rng.gen_range(0.0..=1.0);
        let a = solve_operating_point(e, z, &cfg, &dev, &st, None).unwrap();
        let b = solve_operating_point_bracketed(e, z, &cfg, &dev, &st).unwrap();
        fallbacks += a.fallback as usize;
        if a.i != b.i {
            worst = worst.max((a.i - b.i).abs() / a.i.abs().max(b.i.abs()));
        }
        assert!(agree(&a, &b, 0.0), "e={e} z={z}: {:e} vs {:e}", a.i, b.i);
    }
    println!("worst relative current mismatch {worst:.2e}, {fallbacks} fallbacks");
    assert_eq!(fallbacks, 0, "Newton should converge from a cold start in the operating range");
}

#[test]
fn converged_points_satisfy_kvl_and_current_equality() {
    let dev = Device::default();
    let cfg = CircuitConfig::default();
    let st = SolverSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let e = rng.gen_range(-2.0..=3.0);
        let z = rng.gen_range(0.0..=1.0);
        let op = solve_operating_point(e, z, &cfg, &dev, &st, None).unwrap();
        let kvl = (e - cfg.source_resistance * op.i - op.u_s - op.u_e - op.u_t).abs();
        assert!(kvl <= st.rel_tol * e.abs() + 1e-12, "KVL {kvl:e} at e={e} z={z}");
        let i_s = dev.schottky(op.u_s, z).current;
        let i_e = op.u_e / dev.electrolyte_resistance(z);
        let i_t = dev.tunnel(op.u_t, z).unwrap().current;
        assert!((i_s - i_e).abs() <= st.abs_tol_current);
        assert!((i_s - i_t).abs() <= st.abs_tol_current);
        assert_eq!(op.u, op.u_s + op.u_e + op.u_t);
    }
}

#[test]
fn current_is_monotone_in_source_voltage() {
    let dev = Device::default();
    let cfg = CircuitConfig::default();
    let st = SolverSettings::default();
    for z in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let mut prev = f64::NEG_INFINITY;
        let mut warm: Option<OperatingPoint> = None;
        for k in 0..=500 {
            let e = -2.0 + 0.01 * k as f64;
            let op = solve_operating_point(e, z, &cfg, &dev, &st, warm.as_ref()).unwrap();
            assert!(op.i >= prev, "z={z}: i({e}) = {:e} < {prev:e}", op.i);
            prev = op.i;
            warm = Some(op);
        }
    }
}

#[test]
fn warm_start_does_not_change_the_solution() {
    let dev = Device::default();
    let cfg = CircuitConfig::default();
    let st = SolverSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let e = rng.gen_range(-2.0..=3.0);
        let z = rng.gen_range(0.0..=1.0);
        let other = solve_operating_point(rng.gen_range(-2.0..=3.0), rng.gen_range(0.0..=1.0), &cfg, &dev, &st, None)
            .unwrap();
        let cold = newton(e, z, &cfg, &dev, &st, None).unwrap();
        let warm = solve_operating_point(e, z, &cfg, &dev, &st, Some(&other)).unwrap();
        assert!(agree(&cold, &warm, 1e-15), "e={e} z={z}: {:e} vs {:e}", cold.i, warm.i);
    }
}

#[test]
fn bracketed_solver_is_deterministic() {
    let dev = Device::default();
    let cfg = CircuitConfig::default();
    let st = SolverSettings::default();
    let a = solve_operating_point_bracketed(2.2, 0.4, &cfg, &dev, &st).unwrap();
    let b = solve_operating_point_bracketed(2.2, 0.4, &cfg, &dev, &st).unwrap();
    assert_eq!(a, b);
}

#[test]
fn capacitive_mode_settles_on_the_quasi_static_point() {
    let dev = Device::default();
    let qs = CircuitConfig::default();
    let cap = CircuitConfig {
        c_e: 1e-12,
        c_t: 1e-12,
        mode: CircuitMode::Capacitive,
        ..CircuitConfig::default()
    };
    let st = SolverSettings::default();
    let rhs = |y: [f64; 2], e: f64, z: f64| {
        let (a, b, i) = transient_rhs(y[0], y[1], z, e, &cap, &dev).unwrap();
        ([a, b], i)
    };
    for (e, z) in [(2.5, 0.5), (-1.0, 1.0), (3.0, 0.2), (1.0, 0.9)] {
        let target = solve_operating_point(e, z, &qs, &dev, &st, None).unwrap();
        // Backward Euler with a geometrically growing step marches to the fixed point.
        let mut y = [0.0_f64, 0.0_f64];
        let mut dt = 1e-9;
        for _ in 0..120 {
            let y_old = y;
            for _ in 0..50 {
                let (f, _) = rhs(y, e, z);
                let g = [y[0] - y_old[0] - dt * f[0], y[1] - y_old[1] - dt * f[1]];
                let h = 1e-7;
                let (fa, _) = rhs([y[0] + h, y[1]], e, z);
                let (fb, _) = rhs([y[0], y[1] + h], e, z);
                let j = [
                    [1.0 - dt * (fa[0] - f[0]) / h, -dt * (fb[0] - f[0]) / h],
                    [-dt * (fa[1] - f[1]) / h, 1.0 - dt * (fb[1] - f[1]) / h],
                ];
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                let mut d = [
                    -(g[0] * j[1][1] - g[1] * j[0][1]) / det,
                    -(j[0][0] * g[1] - j[1][0] * g[0]) / det,
                ];
                let big = d[0].abs().max(d[1].abs());
                if big > 0.1 {
                    d = [d[0] * 0.1 / big, d[1] * 0.1 / big];
                }
                y = [y[0] + d[0], y[1] + d[1]];
                if big < 1e-13 {
                    break;
                }
            }
            dt = (dt * 1.5).min(1e3);
        }
        let (_, i) = rhs(y, e, z);
        assert!((i - target.i).abs() <= 1e-6 * target.i.abs(), "e={e} z={z}: {i:e} vs {:e}", target.i);
        assert!((y[0] - target.u_e).abs() < 1e-6 && (y[1] - target.u_t).abs() < 1e-6);
    }
}

#[test]
fn transient_rhs_golden_triple() {
    // Independent 60-digit scalar solve in tests/oracle/model_oracle.py.
    let dev = Device::default();
    let cap = CircuitConfig {
        c_e: 1e-12,
        c_t: 1e-12,
        mode: CircuitMode::Capacitive,
        ..CircuitConfig::default()
    };
    let (de, dt, i) = transient_rhs(0.0, 0.0, 1.0, 3.0, &cap, &dev).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
    assert!(close(i, 2.706753291556595954e-4), "{i:e}");
    assert!(close(de, 270675329.1556595954), "{de:e}");
    assert!(close(dt, 270675329.1556595954), "{dt:e}");
}
