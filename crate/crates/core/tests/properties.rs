use dbmd_core::circuit::solve_operating_point;
use dbmd_core::experiments::loop_metrics;
use dbmd_core::model::{reset_coupling, window};
use dbmd_core::simulator::integrate;
use dbmd_core::{
    CircuitConfig, Device, DeviceParameters, IntegratorSettings, SolverSettings, TimeSeries,
    WaveformSpec,
};
use proptest::prelude::*;

fn device() -> Device {
    Device::default()
}

proptest! {
    #[test]
    fn window_stays_between_offset_and_one(z in 0.0..=1.0f64) {
        let wp = DeviceParameters::default().window;
        let w = window(z, &wp).unwrap();
        prop_assert!(w >= wp.offset - 1e-15 && w <= 1.0 - wp.offset + 1e-15);
        let mirrored = window(1.0 - z, &wp).unwrap();
        prop_assert!((w - mirrored).abs() <= 1e-12);
    }

    #[test]
    fn schottky_current_has_the_sign_of_its_voltage(u in -2.0..2.5f64, z in 0.0..=1.0f64) {
        let i = device().schottky(u, z).current;
        prop_assert!(i == 0.0 || i.signum() == u.signum());
        prop_assert!(device().schottky(u, z).conductance > 0.0);
    }

    #[test]
    fn tunnel_current_is_odd(u in 0.0..3.0f64, z in 0.0..=1.0f64) {
        let d = device();
        let a = d.tunnel(u, z).unwrap().current;
        let b = d.tunnel(-u, z).unwrap().current;
        prop_assert_eq!(a, -b);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn reset_coupling_vanishes_for_positive_bias(u in 0.0..3.0f64, us in -2.0..2.5f64, z in 0.0..=1.0f64) {
        prop_assert_eq!(reset_coupling(u, us, z), 0.0);
    }

    #[test]
    fn zero_bias_drives_state_toward_equilibrium(z in 0.0..1.0f64) {
        // At e = 0 every region voltage is zero and only the Coulomb term acts.
        prop_assert!(device().state_rate(0.0, 0.0, 0.0, z).rate > 0.0);
    }

    #[test]
    fn operating_point_current_follows_source_sign(e in -2.0..3.0f64, z in 0.0..=1.0f64) {
        let op = solve_operating_point(e, z, &CircuitConfig::default(), &device(), &SolverSettings::default(), None).unwrap();
        prop_assert!(op.i == 0.0 || op.i.signum() == e.signum());
        prop_assert!(op.u.abs() <= e.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn state_stays_in_unit_interval(pos in 0.5..3.0f64, ratio in 0.2..1.0f64, z0 in 0.0..=1.0f64) {
        let st = IntegratorSettings { samples: 101, ..IntegratorSettings::default() };
        let spec = WaveformSpec::triangle(20.0, pos, -(pos * ratio).min(2.0));
        let ts = integrate(&device(), &CircuitConfig::default(), &spec, &st, z0).unwrap();
        prop_assert!(ts.samples.iter().all(|s| (0.0..=1.0).contains(&s.z)));
        prop_assert!(ts.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn loop_area_is_orientation_independent(pos in 1.0..3.0f64) {
        let st = IntegratorSettings { samples: 201, ..IntegratorSettings::default() };
        let spec = WaveformSpec::triangle(50.0, pos, -2.0 / 3.0 * pos);
        let ts = integrate(&device(), &CircuitConfig::default(), &spec, &st, 1.0).unwrap();
        let a = loop_metrics(&ts).unwrap();
        let mut rev = ts.samples.clone();
        rev.reverse();
        let b = loop_metrics(&TimeSeries::from_samples(rev)).unwrap();
        prop_assert!(a.loop_area >= 0.0);
        // Reversal changes the summation order; rounding is bounded by the size of the terms.
        prop_assert!((a.loop_area - b.loop_area).abs() <= 1e-12 * a.loop_area + 1e-10);
        prop_assert!((a.max_branch_ratio - b.max_branch_ratio).abs() <= 1e-12 * a.max_branch_ratio);
    }
}
