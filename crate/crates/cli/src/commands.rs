use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use qicap::analysis::{fit_parameters, reduced_detuning, AnalyzerRegistry, FitParam};
use qicap::capacitance::voltage_period;
use qicap::io::{self, Config};
use qicap::sweep::{simulate_trace, Trace};
use qicap::verify::{CheckRegistry, VerifyContext};
use qicap::Error;

pub enum CliError {
    Core(Error),
    Usage(String),
    NotConverged,
    /// Names of failed verify checks.
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::NotConverged => 4,
            CliError::Check(_) => 3,
            CliError::Core(e) => match e {
                Error::InvalidArgument(_)
                | Error::Parse { .. }
                | Error::UnknownKey(_)
                | Error::Invariant { .. }
                | Error::UnknownStrategy { .. } => 1,
                Error::Io { .. } | Error::MalformedRow { .. } => 2,
                Error::DivisionByZero(_)
                | Error::Domain { .. }
                | Error::Degenerate(_)
                | Error::NumericRange(_)
                | Error::InsufficientData(_)
                | Error::Resource(_) => 3,
            },
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::NotConverged => write!(f, "fit did not converge"),
            CliError::Check(names) => write!(f, "failed check(s): {names}"),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| {
        Error::Io {
            path: path.into(),
            source: e,
        }
        .into()
    })
}

fn write_traces(traces: &[Trace], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => io::write_trace_file(traces, p)?,
        None => io::write_trace_csv(traces, std::io::stdout().lock())?,
    }
    Ok(())
}

/// Report goes to stdout, or to stderr when the data itself went there.
fn print_summary(text: &str, data_on_stdout: bool) {
    if data_on_stdout {
        eprint!("{text}");
    } else {
        print!("{text}");
    }
}

fn sign_changes(x: &[f64], t: &Trace, window: (f64, f64)) -> usize {
    let mut last = 0.0f64;
    let mut n = 0;
    for (xi, v) in x.iter().zip(&t.values) {
        let Some(v) = *v else { continue };
        if *xi < window.0 || *xi > window.1 || v == 0.0 {
            continue;
        }
        if last != 0.0 && (last > 0.0) != (v > 0.0) {
            n += 1;
        }
        last = v;
    }
    n
}

/// Least-squares slope of ln|C| against eps0/A in the window.
fn decay_slope(x: &[f64], t: &Trace, window: (f64, f64)) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(&t.values)
        .filter_map(|(&xi, v)| {
            let v = (*v)?;
            (xi >= window.0 && xi <= window.1 && v != 0.0).then(|| (xi, v.abs().ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn trace_summary(t: &Trace, cfg: &Config, prefix: &str) -> Result<Vec<(String, String)>> {
    let p = &cfg.params;
    let x = reduced_detuning(t, p)?;
    let peak = t
        .values
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let flips = sign_changes(&x, t, (0.0, 1.0));
    let slope = decay_slope(&x, t, (1.05, 1.5));
    let k = |s: &str| format!("{prefix}{s}");
    Ok(vec![
        (k("omega_ghz"), io::format_ghz(t.meta.omega)),
        (k("branch"), t.meta.branch.label().into()),
        (k("points"), t.len().to_string()),
        (k("gaps"), t.gap_count().to_string()),
        (k("peak_farads"), peak.to_string()),
        (
            k("delta_v_tg_volts"),
            voltage_period(t.meta.omega, p.alpha_minus())?
                .volts()
                .to_string(),
        ),
        (k("sign_changes"), flips.to_string()),
        (k("oscillations"), (flips / 2).to_string()),
        (
            k("decay_slope_per_unit"),
            slope.map_or_else(|| "n/a".into(), |s| s.to_string()),
        ),
    ])
}

fn warn_zero_coupling(cfg: &Config) {
    if cfg.params.delta.0 == 0.0 {
        log::warn!("delta_uev = 0: the tunnel coupling vanishes and the trace is identically zero");
    }
}

pub fn simulate(cfg: &Config, out: Option<&Path>) -> Result<()> {
    warn_zero_coupling(cfg);
    let mut spec = cfg.sweep.clone();
    if spec.frequencies.len() > 1 {
        log::warn!(
            "simulate uses the first of {} configured frequencies; run sweep for all",
            spec.frequencies.len()
        );
        spec.frequencies.truncate(1);
    }
    let traces = simulate_trace(&spec, &cfg.params)?;
    write_traces(&traces, out)?;
    let summary = trace_summary(&traces[0], cfg, "")?;
    print_summary(&io::format_report(&summary), out.is_none());
    Ok(())
}

pub fn sweep(cfg: &Config, out: Option<&Path>) -> Result<()> {
    warn_zero_coupling(cfg);
    let traces = simulate_trace(&cfg.sweep, &cfg.params)?;
    write_traces(&traces, out)?;
    let mut summary = vec![("traces".to_string(), traces.len().to_string())];
    for (i, t) in traces.iter().enumerate() {
        summary.extend(trace_summary(t, cfg, &format!("trace{i}_"))?);
    }
    print_summary(&io::format_report(&summary), out.is_none());
    Ok(())
}

fn is_measured_file(path: &Path) -> Result<bool> {
    let f = File::open(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    let mut header = String::new();
    BufReader::new(f)
        .read_line(&mut header)
        .map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
    Ok(header.split(',').any(|h| h.trim() == "phase_norm"))
}

fn load_traces(path: &Path, cfg: &Config) -> Result<Vec<Trace>> {
    if is_measured_file(path)? {
        let omega = *cfg
            .sweep
            .frequencies
            .first()
            .ok_or_else(|| CliError::Usage("freqs_ghz is empty".into()))?;
        Ok(io::read_measured_file(path, omega, cfg.sweep.branch)?)
    } else {
        Ok(io::read_trace_file(path)?)
    }
}

fn guidance(mode: &str) -> &'static str {
    match mode {
        "fourier" => "the fringe pattern needs at least four periods inside the window; widen the sweep or raise the frequency",
        "envelope" => "the envelope needs at least three extrema; sweep across eps0/A in [0, 1] with enough points per fringe",
        "p2p" => "peak-to-peak analysis needs two or more frequencies; generate the input with sweep and a freqs_ghz list",
        _ => "",
    }
}

pub fn analyze(cfg: &Config, mode: &str, input: &Path, out: Option<&Path>) -> Result<()> {
    let registry = AnalyzerRegistry::with_builtin();
    let analyzer = registry.get(mode)?;
    let traces = load_traces(input, cfg)?;
    let report = match analyzer.analyze(&traces, &cfg.params) {
        Ok(r) => r,
        Err(Error::InsufficientData(m)) => {
            return Err(Error::InsufficientData(format!("{m} ({})", guidance(mode))).into())
        }
        Err(e) => return Err(e.into()),
    };
    let mut entries = vec![("mode".to_string(), mode.to_string())];
    entries.extend(report.entries.iter().cloned());
    print!("{}", io::format_report(&entries));
    if let Some(p) = out {
        io::write_table_csv(&report.table, create(p)?)?;
    }
    Ok(())
}

fn parse_mask(s: &str) -> Result<Vec<FitParam>> {
    let mask = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<FitParam>())
        .collect::<qicap::Result<Vec<_>>>()
        .map_err(|e| CliError::Usage(format!("--mask: {e}")))?;
    Ok(mask)
}

pub fn fit(
    cfg: &Config,
    input: &Path,
    mask: Option<&str>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<()> {
    let mask = match mask {
        Some(s) => parse_mask(s)?,
        None => cfg.fit.mask.clone(),
    };
    if mask.is_empty() {
        return Err(CliError::Usage(
            "fit mask is empty; free at least one parameter".into(),
        ));
    }
    let mut opts = cfg.fit.options.clone();
    if let Some(s) = seed {
        opts = opts.with_seed(s);
    }
    let traces = load_traces(input, cfg)?;
    let res = fit_parameters(&traces, &mask, &cfg.params, &opts)?;

    let mut e: Vec<(String, String)> = vec![
        ("converged".into(), res.converged.to_string()),
        ("objective".into(), res.objective.to_string()),
        ("residual_norm".into(), res.residual_norm.to_string()),
        ("residual_count".into(), res.residual_count.to_string()),
        ("iterations".into(), res.iterations.to_string()),
        ("evaluations".into(), res.evaluations.to_string()),
        ("seed".into(), opts.simplex.seed.to_string()),
        ("traces".into(), traces.len().to_string()),
    ];
    for est in &res.estimates {
        let s = est.param.display_scale();
        let key = est.param.key();
        e.push((key.into(), (est.value * s).to_string()));
        e.push((
            format!("{key}_uncertainty"),
            (est.uncertainty * s).to_string(),
        ));
    }
    for w in &res.warnings {
        e.push(("warning".into(), w.clone()));
    }
    let text = io::format_report(&e);
    print!("{text}");
    if let Some(p) = out {
        io::write_text(p, &text)?;
    }
    if res.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged)
    }
}

pub fn verify(out: Option<&Path>) -> Result<()> {
    let ctx = VerifyContext::default();
    let registry = CheckRegistry::with_builtin();
    let started = Instant::now();
    let outcomes = registry.run_all(&ctx);
    log::info!("verify took {:.2} s", started.elapsed().as_secs_f64());

    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    let mut text = String::new();
    for o in &outcomes {
        text.push_str(&format!(
            "{} {:<width$}  error = {:.3e}  tolerance = {:.1e}  {}\n",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.error,
            o.tolerance,
            o.detail,
        ));
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name.as_str())
        .collect();
    text.push_str(&format!(
        "checks = {}\nfailed = {}\n",
        outcomes.len(),
        failed.len()
    ));
    print!("{text}");
    std::io::stdout().flush().ok();
    if let Some(p) = out {
        io::write_text(p, &text)?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failed.join(", ")))
    }
}
