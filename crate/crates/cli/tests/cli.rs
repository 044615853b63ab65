use std::path::{Path, PathBuf};
use std::process::Command;

use dbmd_cli::config::{parse_params, write_params};
use dbmd_cli::csv_io::{read_series, write_dataset, write_series};
use dbmd_cli::svg::{render, PlotStyle};
use dbmd_core::experiments::run_hysteresis;
use dbmd_core::{
    CircuitConfig, Dataset, Device, DeviceParameters, IntegratorSettings, Sample, TimeSeries,
    WaveformSpec,
};
use proptest::prelude::*;

fn dbmd(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dbmd"))
        .current_dir(dir)
        .env_remove("DBMD_CONFIG")
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn shipped_default_file_parses_to_the_defaults() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../params/dbmd_default.params");
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(parse_params(&text).unwrap(), DeviceParameters::default());
    assert_eq!(text, write_params(&DeviceParameters::default()));
}

fn sample_strategy() -> impl Strategy<Value = Sample> {
    let f = || prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), Just(0.0), Just(-0.0)];
    (f(), f(), f(), f(), f(), f(), f(), 0.0..=1.0f64).prop_map(|(t, e, u, i, u_s, u_e, u_t, z)| Sample {
        t,
        e,
        u,
        i,
        u_s,
        u_e,
        u_t,
        z,
    })
}

proptest! {
    #[test]
    fn csv_roundtrip_is_exact(samples in prop::collection::vec(sample_strategy(), 0..20)) {
        let ts = TimeSeries::from_samples(samples);
        let back = read_series(&write_series(&ts)).unwrap();
        prop_assert_eq!(back.samples.len(), ts.samples.len());
        for (a, b) in back.samples.iter().zip(&ts.samples) {
            let bits = |s: &Sample| [s.t, s.e, s.u, s.i, s.u_s, s.u_e, s.u_t, s.z].map(f64::to_bits);
            prop_assert_eq!(bits(a), bits(b));
        }
    }
}

fn short_loop() -> TimeSeries {
    let st = IntegratorSettings {
        samples: 101,
        ..IntegratorSettings::default()
    };
    run_hysteresis(
        &Device::default(),
        &CircuitConfig::default(),
        &WaveformSpec::triangle(100.0, 3.0, -2.0),
        &st,
    )
    .unwrap()
    .0
}

#[test]
fn svg_is_deterministic_and_rejects_empty_series() {
    let ts = short_loop();
    let a = render(&ts, PlotStyle::Hysteresis).unwrap();
    assert_eq!(a, render(&ts, PlotStyle::Hysteresis).unwrap());
    assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
    assert_eq!(a.matches("<polyline").count(), 1);
    assert!(render(&TimeSeries::default(), PlotStyle::Step).is_err());
}

#[test]
fn hysteresis_command_writes_2000_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) = dbmd(
        dir.path(),
        &["hysteresis", "--peak-pos", "3", "--peak-neg", "-2", "--period", "100", "--out", "h.csv", "--plot", "h.svg"],
    );
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("max_branch_ratio"));
    let text = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,e,u,i,u_s,u_e,u_t,z"));
    assert_eq!(lines.count(), 2000);
    assert!(dir.path().join("h.svg").exists());
}

#[test]
fn step_command_covers_the_duration() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = dbmd(dir.path(), &["step", "--amplitude", "2.5", "--duration", "600", "--out", "s.csv"]);
    assert_eq!(code, 0, "{stderr}");
    let ts = read_series(&std::fs::read_to_string(dir.path().join("s.csv")).unwrap()).unwrap();
    assert_eq!(ts.first().unwrap().t, 0.0);
    assert_eq!(ts.last().unwrap().t, 600.0);
}

#[test]
fn sweep_creates_its_directory_and_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) = dbmd(dir.path(), &["--samples", "400", "sweep", "--peaks", "1.8,2.3,3", "--out-dir", "out"]);
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(stdout.lines().count(), 3);
    let out = dir.path().join("out");
    let names: Vec<_> = files_in(&out)
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["hysteresis_1.8.csv", "hysteresis_2.3.csv", "hysteresis_3.csv", "metrics.csv"]);
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 4);
}

#[test]
fn config_file_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.conf"), "samples = 50\nperiod = 40 s\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dbmd"))
        .current_dir(dir.path())
        .env("DBMD_CONFIG", "run.conf")
        .args(["hysteresis", "--out", "h.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let ts = read_series(&std::fs::read_to_string(dir.path().join("h.csv")).unwrap()).unwrap();
    assert_eq!(ts.len(), 50);
    assert_eq!(ts.last().unwrap().t, 40.0);
}

#[test]
fn parse_errors_exit_1_without_output() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.params"), "temperature = -5\n").unwrap();
    let (code, _, stderr) = dbmd(dir.path(), &["--params", "bad.params", "step", "--amplitude", "1", "--out", "s.csv"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("temperature") && stderr.contains("line 1"), "{stderr}");
    std::fs::write(dir.path().join("typo.conf"), "sampels = 10\n").unwrap();
    let (code, _, stderr) = dbmd(dir.path(), &["--config", "typo.conf", "step", "--amplitude", "1"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("sampels"), "{stderr}");
    let (code, _, _) = dbmd(dir.path(), &["step", "--bogus"]);
    assert_eq!(code, 1);
    let (code, _, _) = dbmd(dir.path(), &["step", "--amplitude", "7", "--out", "s.csv"]);
    assert_eq!(code, 1);
    let names: Vec<_> = files_in(dir.path()).into_iter().filter(|p| p.extension().map_or(false, |e| e == "csv")).collect();
    assert!(names.is_empty());
}

#[test]
fn integration_failure_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("strict.conf"), "error_tol = 1e-30\ndt_min = 0.01 s\ndt_init = 0.01 s\n").unwrap();
    let (code, _, stderr) = dbmd(
        dir.path(),
        &["--config", "strict.conf", "step", "--amplitude", "3", "--duration", "50", "--out", "s.csv"],
    );
    assert_eq!(code, 2, "{stderr}");
    assert!(!dir.path().join("s.csv").exists());
    assert_eq!(files_in(dir.path()).len(), 1);
}

#[test]
fn fit_recovers_a_parameter_and_flags_hopeless_fits() {
    let dir = tempfile::tempdir().unwrap();
    let st = IntegratorSettings {
        samples: 41,
        error_tol: 1e-7,
        ..IntegratorSettings::default()
    };
    let (ts, _) = run_hysteresis(
        &Device::default(),
        &CircuitConfig::default(),
        &WaveformSpec::triangle(20.0, 3.0, -2.0),
        &st,
    )
    .unwrap();
    let d = Dataset::from_series("h", &ts, 1e-12).unwrap();
    std::fs::write(dir.path().join("h.csv"), write_dataset(&d)).unwrap();
    std::fs::write(dir.path().join("fit.conf"), "samples = 41\nerror_tol = 1e-7\n").unwrap();
    std::fs::write(
        dir.path().join("good.fit"),
        "free.phi_s1 = 31 39 37.5\nrestarts = 1\nmax_evaluations = 80\ndatasets = h.csv\n",
    )
    .unwrap();
    let (code, stdout, stderr) = dbmd(
        dir.path(),
        &["--config", "fit.conf", "fit", "--spec", "good.fit", "--out", "fitted.params"],
    );
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("objective"));
    let fitted = parse_params(&std::fs::read_to_string(dir.path().join("fitted.params")).unwrap()).unwrap();
    assert!((fitted.schottky.phi_s1 - 35.0).abs() < 0.05, "{}", fitted.schottky.phi_s1);

    // An integer-valued parameter cannot move in continuous coordinates.
    std::fs::write(dir.path().join("stuck.fit"), "free.charge_number = 1 4 2\nrestarts = 1\n").unwrap();
    let (code, _, stderr) = dbmd(
        dir.path(),
        &["--config", "fit.conf", "fit", "--spec", "stuck.fit", "--data", "h.csv", "--out", "stuck.params"],
    );
    assert_eq!(code, 3, "{stderr}");
    assert!(!dir.path().join("stuck.params").exists());
}
