use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use tempfile::TempDir;

fn qicap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qicap"))
        .current_dir(dir)
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("spawn qicap")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(" = "))
        .unwrap_or_else(|| panic!("no `{key}` in\n{report}"))
        .to_string()
}

fn num(report: &str, key: &str) -> f64 {
    value(report, key).parse().unwrap()
}

/// (axis, norm, omega_ghz) rows of a trace CSV; gaps skipped.
fn rows(path: &Path) -> Vec<(f64, f64, String)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "axis_name,axis_value,c_pm_farads,c_pm_norm,omega_ghz,branch,gap_flag"
    );
    lines
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[6] == "0").then(|| {
                (
                    f[1].parse().unwrap(),
                    f[3].parse().unwrap(),
                    f[4].to_string(),
                )
            })
        })
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

const SIX: &str = "freqs_ghz = 4.72, 6.9, 8, 11, 15, 21\n";

#[test]
fn simulate_default_oscillates_then_decays() {
    let d = TempDir::new().unwrap();
    let o = qicap(d.path(), &["simulate", "--out", "sim.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(value(&s, "omega_ghz"), "11");
    assert!(num(&s, "sign_changes") >= 10.0);
    assert!(num(&s, "decay_slope_per_unit") < 0.0);
    let dv = num(&s, "delta_v_tg_volts");
    assert!((dv - 0.842e-3).abs() < 0.01e-3, "{dv}");

    let r = rows(&d.path().join("sim.csv"));
    let peak = r.iter().fold(0.0f64, |m, r| m.max(r.1.abs()));
    assert!((peak - 1.0).abs() < 1e-12);
    let tail: Vec<f64> = r
        .iter()
        .filter(|r| r.0 >= 1.05 && r.0 <= 1.5)
        .map(|r| r.1.abs())
        .collect();
    assert!(tail.len() > 10);
    assert!(tail.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn simulate_is_byte_identical() {
    let d = TempDir::new().unwrap();
    let a = qicap(d.path(), &["simulate", "--out", "a.csv"]);
    let b = qicap(d.path(), &["simulate", "--out", "b.csv"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(
        fs::read(d.path().join("a.csv")).unwrap(),
        fs::read(d.path().join("b.csv")).unwrap()
    );
}

#[test]
fn zero_coupling_gives_zero_trace_and_warns() {
    let d = TempDir::new().unwrap();
    let cfg = write(d.path(), "d0.cfg", "delta_uev = 0\n");
    let o = qicap(d.path(), &["simulate", "--config", &cfg, "--out", "z.csv"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("identically zero"), "{}", stderr(&o));
    let r = rows(&d.path().join("z.csv"));
    assert!(!r.is_empty());
    assert!(r.iter().all(|r| r.1 == 0.0));
}

#[test]
fn sweep_orders_traces_and_fringes_follow_inverse_frequency() {
    let d = TempDir::new().unwrap();
    let cfg = write(
        d.path(),
        "six.cfg",
        "freqs_ghz = 21, 4.72, 15, 6.9, 11, 8\nsweep_axis = v_tg_volts\nsweep_start = 0.44\nsweep_stop = 0.475\n",
    );
    let o = qicap(d.path(), &["sweep", "--config", &cfg, "--out", "six.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(value(&s, "traces"), "6");
    let ghz: Vec<f64> = (0..6)
        .map(|i| num(&s, &format!("trace{i}_omega_ghz")))
        .collect();
    assert_eq!(ghz, [4.72, 6.9, 8.0, 11.0, 15.0, 21.0]);
    let flips: Vec<f64> = (0..6)
        .map(|i| num(&s, &format!("trace{i}_sign_changes")))
        .collect();
    assert!(flips.windows(2).all(|w| w[1] < w[0]), "{flips:?}");

    let r = rows(&d.path().join("six.csv"));
    let mut groups: Vec<String> = r.iter().map(|r| r.2.clone()).collect();
    groups.dedup();
    assert_eq!(groups, ["4.72", "6.9", "8", "11", "15", "21"]);
}

#[test]
fn single_frequency_sweep_matches_simulate() {
    let d = TempDir::new().unwrap();
    let a = qicap(d.path(), &["simulate", "--out", "a.csv"]);
    let b = qicap(d.path(), &["sweep", "--out", "b.csv"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(
        fs::read(d.path().join("a.csv")).unwrap(),
        fs::read(d.path().join("b.csv")).unwrap()
    );
}

#[test]
fn fourier_analysis_reports_period_law() {
    let d = TempDir::new().unwrap();
    let cfg = write(
        d.path(),
        "six.cfg",
        &format!("{SIX}sweep_axis = v_tg_volts\nsweep_start = 0.44\nsweep_stop = 0.475\n"),
    );
    assert!(
        qicap(d.path(), &["sweep", "--config", &cfg, "--out", "six.csv"])
            .status
            .success()
    );
    let o = qicap(
        d.path(),
        &[
            "analyze", "--mode", "fourier", "--config", &cfg, "six.csv", "--out", "f.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(value(&s, "mode"), "fourier");
    assert!(num(&s, "period_slope_v_per_ghz") > 0.0);
    assert!(num(&s, "alpha_minus") > 0.0);
    let table = fs::read_to_string(d.path().join("f.csv")).unwrap();
    assert!(table.starts_with("omega_ghz,"));
    assert_eq!(table.lines().count(), 7);
}

#[test]
fn envelope_analysis_recovers_dephasing_times() {
    let d = TempDir::new().unwrap();
    assert!(qicap(d.path(), &["simulate", "--out", "sim.csv"])
        .status
        .success());
    let o = qicap(d.path(), &["analyze", "--mode", "envelope", "sim.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    let t2 = num(&s, "trace0_t2_ps");
    let tr = num(&s, "trace0_tr_ps");
    assert!((t2 - 35.0).abs() < 3.5, "{t2}");
    assert!((tr - 30.0).abs() < 3.0, "{tr}");
}

#[test]
fn p2p_on_log_grid_peaks_near_ten_ghz() {
    let d = TempDir::new().unwrap();
    let f: Vec<String> = (0..25)
        .map(|i| format!("{}", 2.0 * (25.0f64 / 2.0).powf(i as f64 / 24.0)))
        .collect();
    let cfg = write(
        d.path(),
        "grid.cfg",
        &format!(
            "freqs_ghz = {}\nsweep_start = 0\nsweep_stop = 1\nsweep_points = 801\n",
            f.join(", ")
        ),
    );
    assert!(
        qicap(d.path(), &["sweep", "--config", &cfg, "--out", "g.csv"])
            .status
            .success()
    );
    let o = qicap(
        d.path(),
        &["analyze", "--mode", "p2p", "--config", &cfg, "g.csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(value(&s, "non_monotone"), "true");
    let f_max = num(&s, "max_omega_ghz");
    assert!((8.0..=13.0).contains(&f_max), "{f_max}");
}

#[test]
fn p2p_on_one_trace_explains_what_is_missing() {
    let d = TempDir::new().unwrap();
    assert!(qicap(d.path(), &["simulate", "--out", "sim.csv"])
        .status
        .success());
    let o = qicap(d.path(), &["analyze", "--mode", "p2p", "sim.csv"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("freqs_ghz list"), "{}", stderr(&o));
}

fn fit_inputs(d: &Path) -> String {
    let cfg = write(
        d,
        "fit.cfg",
        "t1_ns = 70\nt2_ps = 45\ntr_ps = 22\nsweep_start = 0.02\nsweep_stop = 1.3\nsweep_points = 401\n",
    );
    assert!(qicap(d, &["simulate", "--out", "truth.csv"])
        .status
        .success());
    cfg
}

#[test]
fn fit_recovers_simulated_trace() {
    let d = TempDir::new().unwrap();
    let cfg = fit_inputs(d.path());
    let o = qicap(
        d.path(),
        &[
            "fit",
            "--config",
            &cfg,
            "truth.csv",
            "--seed",
            "7",
            "--out",
            "fit.txt",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(value(&s, "converged"), "true");
    assert_eq!(value(&s, "seed"), "7");
    for (k, v) in [("t1_ns", 50.0), ("t2_ps", 35.0), ("tr_ps", 30.0)] {
        assert!((num(&s, k) / v - 1.0).abs() < 0.01, "{k}\n{s}");
        assert!(num(&s, &format!("{k}_uncertainty")).is_finite());
    }
    assert_eq!(fs::read_to_string(d.path().join("fit.txt")).unwrap(), s);
    let again = qicap(
        d.path(),
        &["fit", "--config", &cfg, "truth.csv", "--seed", "7"],
    );
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn fit_reads_measured_phase_files() {
    let d = TempDir::new().unwrap();
    let axis =
        "sweep_axis = v_tg_volts\nsweep_start = 0.44\nsweep_stop = 0.4748\nsweep_points = 801\n";
    let truth = write(d.path(), "truth.cfg", axis);
    let cfg = write(d.path(), "v.cfg", &format!("{axis}t2_ps = 45\n"));
    assert!(qicap(
        d.path(),
        &["simulate", "--config", &truth, "--out", "v.csv"]
    )
    .status
    .success());
    let mut measured = String::from("v_tg_volts,phase_norm\n");
    for (v, c, _) in rows(&d.path().join("v.csv")) {
        measured.push_str(&format!("{v},{}\n", -c));
    }
    write(d.path(), "m.csv", &measured);
    let o = qicap(
        d.path(),
        &["fit", "--config", &cfg, "m.csv", "--mask", "t2_ps"],
    );
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let t2 = num(&stdout(&o), "t2_ps");
    assert!((t2 - 35.0).abs() < 0.35, "{t2}");
}

#[test]
fn fit_exit_codes() {
    let d = TempDir::new().unwrap();
    let cfg = fit_inputs(d.path());
    let o = qicap(
        d.path(),
        &["fit", "--config", &cfg, "truth.csv", "--mask", ""],
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let o = qicap(d.path(), &["fit", "--config", &cfg, "missing.csv"]);
    assert_eq!(o.status.code(), Some(2));

    let capped = write(
        d.path(),
        "cap.cfg",
        "t1_ns = 70\nt2_ps = 45\nfit_max_iter = 2\n",
    );
    let o = qicap(d.path(), &["fit", "--config", &capped, "truth.csv"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert_eq!(value(&stdout(&o), "converged"), "false");
}

#[test]
fn verify_names_each_check_and_fails_loudly() {
    let d = TempDir::new().unwrap();
    let t = Instant::now();
    let o = qicap(d.path(), &["verify", "--out", "verify.txt"]);
    assert!(t.elapsed().as_secs_f64() < 60.0);
    let s = stdout(&o);
    let lines: Vec<&str> = s
        .lines()
        .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
        .collect();
    assert_eq!(lines.len(), num(&s, "checks") as usize);
    assert!(lines.iter().all(|l| l.contains("tolerance = ")));
    let failed: Vec<&str> = lines
        .iter()
        .filter(|l| l.starts_with("FAIL"))
        .map(|l| l.split_whitespace().nth(1).unwrap())
        .collect();
    assert_eq!(failed.len(), num(&s, "failed") as usize);
    if failed.is_empty() {
        assert!(o.status.success());
    } else {
        assert_eq!(o.status.code(), Some(3));
        for name in &failed {
            assert!(stderr(&o).contains(name));
        }
    }
    assert_eq!(fs::read_to_string(d.path().join("verify.txt")).unwrap(), s);
}

#[test]
fn usage_and_io_errors() {
    let d = TempDir::new().unwrap();
    assert_eq!(qicap(d.path(), &[]).status.code(), Some(1));
    assert_eq!(qicap(d.path(), &["bogus"]).status.code(), Some(1));
    assert_eq!(
        qicap(d.path(), &["analyze", "--mode", "wavelet", "x.csv"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(qicap(d.path(), &["--help"]).status.code(), Some(0));

    let o = qicap(d.path(), &["simulate", "--out", "no/such/dir/x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("does not exist"));

    let bad = write(d.path(), "bad.cfg", "colour = blue\n");
    let o = qicap(d.path(), &["simulate", "--config", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"));
    let o = qicap(d.path(), &["simulate", "--config", "absent.cfg"]);
    assert_eq!(o.status.code(), Some(2));

    let bounds = write(d.path(), "t1.cfg", "t1_ns = -1\n");
    assert_eq!(
        qicap(d.path(), &["simulate", "--config", &bounds])
            .status
            .code(),
        Some(1)
    );

    write(d.path(), "broken.csv", "axis_name,axis_value,c_pm_farads,c_pm_norm,omega_ghz,branch,gap_flag\neps_reduced,zero,,,11,01-11,0\n");
    let o = qicap(d.path(), &["analyze", "--mode", "envelope", "broken.csv"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
