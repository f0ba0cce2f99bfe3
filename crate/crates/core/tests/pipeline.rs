use std::fs::{self, File};

use qicap::analysis::{fit_parameters, AnalyzerRegistry, FitOptions, FitParam};
use qicap::io::{
    load_config, read_measured_file, read_trace_file, write_measured_csv, write_trace_file,
};
use qicap::params::Branch;
use qicap::sweep::{simulate_trace, AxisKind, ValueUnit};
use qicap::units::AngularFrequency;
use qicap::Error;
use tempfile::TempDir;

#[test]
fn config_to_trace_file_and_back() {
    let dir = TempDir::new().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    fs::write(
        &cfg_path,
        "# two frequencies, mirrored branch\nfreqs_ghz = 8, 15\nbranch = 00-10\nsweep_start = -1.3\nsweep_stop = 0.2\nsweep_points = 1501\n",
    )
    .unwrap();
    let cfg = load_config(&cfg_path).unwrap();
    let traces = simulate_trace(&cfg.sweep, &cfg.params).unwrap();

    let csv = dir.path().join("traces.csv");
    write_trace_file(&traces, &csv).unwrap();
    let back = read_trace_file(&csv).unwrap();
    assert_eq!(back.len(), 2);
    for (a, b) in traces.iter().zip(&back) {
        assert_eq!(a.axis, b.axis);
        assert_eq!(a.values, b.values);
        assert_eq!(b.unit, ValueUnit::Farads);
        assert_eq!(b.meta.branch, Branch::ZeroZeroOneZero);
        assert!((a.meta.omega.0 / b.meta.omega.0 - 1.0).abs() < 1e-12);
    }

    let registry = AnalyzerRegistry::with_builtin();
    let envelope = registry.get("envelope").unwrap();
    let fresh = envelope.analyze(&traces, &cfg.params).unwrap();
    let reread = envelope.analyze(&back, &cfg.params).unwrap();
    assert_eq!(
        fresh.get("trace0_extrema").unwrap(),
        reread.get("trace0_extrema").unwrap()
    );
}

#[test]
fn measured_file_feeds_the_fit() {
    let dir = TempDir::new().unwrap();
    let cfg_path = dir.path().join("v.cfg");
    fs::write(
        &cfg_path,
        "sweep_axis = v_tg_volts\nsweep_start = 0.4405\nsweep_stop = 0.4745\nsweep_points = 1201\nfreqs_ghz = 11\n",
    )
    .unwrap();
    let cfg = load_config(&cfg_path).unwrap();
    let traces = simulate_trace(&cfg.sweep, &cfg.params).unwrap();

    let path = dir.path().join("measured.csv");
    write_measured_csv(&traces, File::create(&path).unwrap()).unwrap();
    let measured =
        read_measured_file(&path, AngularFrequency::from_ghz(1.0), Branch::default()).unwrap();
    assert_eq!(measured.len(), 1);
    assert_eq!(measured[0].meta.axis_kind, AxisKind::GateVoltage);
    assert!((measured[0].meta.omega.ghz() - 11.0).abs() < 1e-9);

    let mut init = cfg.params.clone();
    init.t2_ns = 0.050;
    let res = fit_parameters(&measured, &[FitParam::T2], &init, &FitOptions::default()).unwrap();
    assert!(res.converged);
    assert!(
        (res.params.t2_ns / cfg.params.t2_ns - 1.0).abs() < 1e-3,
        "{}",
        res.params.t2_ns
    );
}

#[test]
fn missing_files_are_io_errors() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("absent");
    assert!(matches!(load_config(&p), Err(Error::Io { .. })));
    assert!(matches!(read_trace_file(&p), Err(Error::Io { .. })));
}
