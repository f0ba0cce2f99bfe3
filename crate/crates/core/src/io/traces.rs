//! CSV files for simulated traces and measured phase data.

use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::Branch;
use crate::sweep::{AxisKind, Trace, TraceMeta, ValueUnit};
use crate::units::AngularFrequency;

pub const TRACE_COLUMNS: [&str; 7] = [
    "axis_name",
    "axis_value",
    "c_pm_farads",
    "c_pm_norm",
    "omega_ghz",
    "branch",
    "gap_flag",
];

/// Largest |normalised phase| accepted from measured files.
pub const PHASE_SANITY_BAND: f64 = 1.5;

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::MalformedRow {
            path: path.to_path_buf(),
            row,
            message: format!("{other:?}"),
        },
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    // + 0.0 turns -0 into 0
    v.map(|x| (x + 0.0).to_string()).unwrap_or_default()
}

/// Frequency in GHz rounded to 1 Hz, so 2 pi round trips print cleanly.
pub fn format_ghz(omega: AngularFrequency) -> String {
    ((omega.ghz() * 1e9).round() / 1e9).to_string()
}

/// Writes traces one after another; frequencies and branches label the groups.
pub fn write_trace_csv<W: std::io::Write>(traces: &[Trace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| Error::invalid(format!("writing trace csv: {e}"));
    w.write_record(TRACE_COLUMNS).map_err(io_err)?;
    for t in traces {
        t.validate()?;
        let peak = t
            .values
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let sign = if t.unit == ValueUnit::PhaseNormalized {
            -1.0
        } else {
            1.0
        };
        for (x, v) in t.axis.iter().zip(&t.values) {
            let farads = match t.unit {
                ValueUnit::Farads => *v,
                _ => None,
            };
            let norm = v.map(|v| if peak > 0.0 { sign * v / peak } else { 0.0 });
            w.write_record([
                t.meta.axis_kind.label().to_string(),
                x.to_string(),
                fmt_opt(farads),
                fmt_opt(norm),
                format_ghz(t.meta.omega),
                t.meta.branch.label().to_string(),
                if v.is_none() { "1".into() } else { "0".into() },
            ])
            .map_err(io_err)?;
        }
    }
    w.flush()
        .map_err(|e| Error::invalid(format!("writing trace csv: {e}")))?;
    Ok(())
}

pub fn write_trace_file(traces: &[Trace], path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace_csv(traces, f)
}

struct Row {
    line: usize,
    axis: f64,
    farads: Option<f64>,
    norm: Option<f64>,
    gap: bool,
}

fn parse_opt(s: &str, what: &str, path: &Path, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|_| Error::MalformedRow {
        path: path.to_path_buf(),
        row: line,
        message: format!("{what}: `{s}` is not a number"),
    })
}

fn finish_group(
    path: &Path,
    kind: AxisKind,
    omega: AngularFrequency,
    branch: Branch,
    rows: Vec<Row>,
) -> Result<Trace> {
    if let Some(w) = rows.windows(2).find(|w| !(w[1].axis > w[0].axis)) {
        return Err(Error::MalformedRow {
            path: path.to_path_buf(),
            row: w[1].line,
            message: "axis is not strictly increasing".into(),
        });
    }
    let farads = rows.iter().filter(|r| !r.gap).all(|r| r.farads.is_some());
    let mut values = Vec::with_capacity(rows.len());
    for r in &rows {
        let v = if r.gap {
            None
        } else if farads {
            r.farads
        } else {
            Some(r.norm.ok_or_else(|| Error::MalformedRow {
                path: path.to_path_buf(),
                row: r.line,
                message: "no value in c_pm_farads or c_pm_norm and gap_flag = 0".into(),
            })?)
        };
        values.push(v);
    }
    Ok(Trace {
        axis: rows.iter().map(|r| r.axis).collect(),
        values,
        unit: if farads {
            ValueUnit::Farads
        } else {
            ValueUnit::Normalized
        },
        meta: TraceMeta::new(omega, branch, kind),
    })
}

/// Reads a trace CSV; consecutive rows with the same frequency and branch form one trace.
pub fn read_trace_csv<R: std::io::Read>(input: R, path: &Path) -> Result<Vec<Trace>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MalformedRow {
                path: path.to_path_buf(),
                row: 1,
                message: format!("missing column `{name}`"),
            })
    };
    let idx: Vec<usize> = TRACE_COLUMNS
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;

    let mut traces = Vec::new();
    let mut current: Option<(AxisKind, AngularFrequency, String, Branch, Vec<Row>)> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| rec.get(idx[i]).unwrap_or("");
        let bad = |message: String| Error::MalformedRow {
            path: path.to_path_buf(),
            row: line,
            message,
        };
        let kind: AxisKind = field(0).parse().map_err(|e: Error| bad(e.to_string()))?;
        let axis = parse_opt(field(1), "axis_value", path, line)?
            .ok_or_else(|| bad("axis_value is empty".into()))?;
        let farads = parse_opt(field(2), "c_pm_farads", path, line)?;
        let norm = parse_opt(field(3), "c_pm_norm", path, line)?;
        let omega_str = field(4).to_string();
        let ghz = parse_opt(&omega_str, "omega_ghz", path, line)?
            .ok_or_else(|| bad("omega_ghz is empty".into()))?;
        if !(ghz > 0.0) {
            return Err(bad(format!("omega_ghz = {ghz} must be > 0")));
        }
        let branch: Branch = field(5).parse().map_err(|e: Error| bad(e.to_string()))?;
        let gap = match field(6) {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("gap_flag must be 0 or 1, got `{other}`"))),
        };
        let row = Row {
            line,
            axis,
            farads,
            norm,
            gap,
        };
        match &mut current {
            Some((k, _, o, b, rows)) if *o == omega_str && *b == branch => {
                if *k != kind {
                    return Err(bad("axis_name changes within a trace".into()));
                }
                rows.push(row);
            }
            _ => {
                if let Some((k, w, _, b, rows)) = current.take() {
                    traces.push(finish_group(path, k, w, b, rows)?);
                }
                current = Some((
                    kind,
                    AngularFrequency::from_ghz(ghz),
                    omega_str,
                    branch,
                    vec![row],
                ));
            }
        }
    }
    if let Some((k, w, _, b, rows)) = current.take() {
        traces.push(finish_group(path, k, w, b, rows)?);
    }
    if traces.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{} has a header but no data rows",
            path.display()
        )));
    }
    Ok(traces)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<Trace>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace_csv(f, path)
}

/// Reads measured normalised phase against top-gate voltage.
///
/// Columns `v_tg_volts`, `phase_norm` and optionally `omega_ghz`; files
/// without a frequency column use `default_omega`. Decreasing voltage
/// sweeps are reversed.
pub fn read_measured_csv<R: std::io::Read>(
    input: R,
    path: &Path,
    default_omega: AngularFrequency,
    branch: Branch,
) -> Result<Vec<Trace>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let missing = |name: &str| Error::MalformedRow {
        path: path.to_path_buf(),
        row: 1,
        message: format!("missing column `{name}`"),
    };
    let iv = find("v_tg_volts").ok_or_else(|| missing("v_tg_volts"))?;
    let ip = find("phase_norm").ok_or_else(|| missing("phase_norm"))?;
    let iw = find("omega_ghz");

    // (omega string, omega, rows of (line, v, phase))
    let mut groups: Vec<(String, AngularFrequency, Vec<(usize, f64, f64)>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| Error::MalformedRow {
            path: path.to_path_buf(),
            row: line,
            message,
        };
        let v = parse_opt(rec.get(iv).unwrap_or(""), "v_tg_volts", path, line)?
            .ok_or_else(|| bad("v_tg_volts is empty".into()))?;
        let ph = parse_opt(rec.get(ip).unwrap_or(""), "phase_norm", path, line)?
            .ok_or_else(|| bad("phase_norm is empty".into()))?;
        if !(ph.abs() <= PHASE_SANITY_BAND) {
            return Err(bad(format!(
                "phase_norm = {ph} outside the sanity band [-{PHASE_SANITY_BAND}, {PHASE_SANITY_BAND}]"
            )));
        }
        let (key, omega) = match iw {
            Some(i) => {
                let s = rec.get(i).unwrap_or("").to_string();
                let g = parse_opt(&s, "omega_ghz", path, line)?
                    .ok_or_else(|| bad("omega_ghz is empty".into()))?;
                if !(g > 0.0) {
                    return Err(bad(format!("omega_ghz = {g} must be > 0")));
                }
                (s, AngularFrequency::from_ghz(g))
            }
            None => (String::new(), default_omega),
        };
        match groups.last_mut() {
            Some((k, _, rows)) if *k == key => rows.push((line, v, ph)),
            _ => {
                if groups.iter().any(|(k, _, _)| *k == key) {
                    return Err(bad(format!("frequency group {key} GHz is not contiguous")));
                }
                groups.push((key, omega, vec![(line, v, ph)]));
            }
        }
    }
    if groups.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{} has a header but no data rows",
            path.display()
        )));
    }
    groups
        .into_iter()
        .map(|(_, omega, mut rows)| {
            if rows.len() >= 2 && rows[1].1 < rows[0].1 {
                rows.reverse();
            }
            if let Some(w) = rows.windows(2).find(|w| !(w[1].1 > w[0].1)) {
                return Err(Error::MalformedRow {
                    path: path.to_path_buf(),
                    row: w[1].0.max(w[0].0),
                    message: "v_tg_volts is not strictly monotone".into(),
                });
            }
            Ok(Trace {
                axis: rows.iter().map(|r| r.1).collect(),
                values: rows.iter().map(|r| Some(r.2)).collect(),
                unit: ValueUnit::PhaseNormalized,
                meta: TraceMeta::new(omega, branch, AxisKind::GateVoltage),
            })
        })
        .collect()
}

pub fn read_measured_file(
    path: &Path,
    default_omega: AngularFrequency,
    branch: Branch,
) -> Result<Vec<Trace>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_measured_csv(f, path, default_omega, branch)
}

/// Measured-format CSV (v_tg_volts, phase_norm, omega_ghz) for gate-voltage traces.
pub fn write_measured_csv<W: std::io::Write>(traces: &[Trace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::invalid(format!("writing measured csv: {e}"));
    w.write_record(["v_tg_volts", "phase_norm", "omega_ghz"])
        .map_err(err)?;
    for t in traces {
        if t.meta.axis_kind != AxisKind::GateVoltage {
            return Err(Error::invalid("measured files need a gate-voltage axis"));
        }
        let peak = t
            .values
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let sign = if t.unit == ValueUnit::PhaseNormalized {
            1.0
        } else {
            -1.0
        };
        for (x, v) in t.samples() {
            let ph = if peak > 0.0 { sign * v / peak } else { 0.0 };
            w.write_record([x.to_string(), ph.to_string(), format_ghz(t.meta.omega)])
                .map_err(err)?;
        }
    }
    w.flush()
        .map_err(|e| Error::invalid(format!("writing measured csv: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use crate::sweep::{simulate_trace, SweepSpec};

    fn p() -> &'static Path {
        Path::new("mem.csv")
    }

    fn round_trip(traces: &[Trace]) -> Vec<Trace> {
        let mut buf = Vec::new();
        write_trace_csv(traces, &mut buf).unwrap();
        read_trace_csv(buf.as_slice(), p()).unwrap()
    }

    #[test]
    fn simulated_traces_round_trip() {
        let spec = SweepSpec {
            n_points: 301,
            frequencies: vec![
                AngularFrequency::from_ghz(6.9),
                AngularFrequency::from_ghz(11.0),
            ],
            ..SweepSpec::default()
        };
        let traces = simulate_trace(&spec, &ModelParams::device_defaults()).unwrap();
        let back = round_trip(&traces);
        assert_eq!(back.len(), 2);
        for (a, b) in traces.iter().zip(&back) {
            assert_eq!(a.axis, b.axis);
            assert_eq!(a.values, b.values);
            assert_eq!(b.unit, ValueUnit::Farads);
            assert!((a.meta.omega.0 - b.meta.omega.0).abs() <= 1e-12 * a.meta.omega.0);
            assert_eq!(a.meta.branch, b.meta.branch);
            assert!(b.gap_count() > 0);
        }
    }

    #[test]
    fn header_only_is_error() {
        let text = TRACE_COLUMNS.join(",") + "\n";
        assert!(matches!(
            read_trace_csv(text.as_bytes(), p()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn two_frequency_fixture() {
        let text = "\
axis_name,axis_value,c_pm_farads,c_pm_norm,omega_ghz,branch,gap_flag
eps_reduced,0.1,,0.5,5,01-11,0
eps_reduced,0.2,,-1,5,01-11,0
eps_reduced,0.1,,1,8,01-11,0
eps_reduced,0.2,,,8,01-11,1
eps_reduced,0.3,,0.25,8,01-11,0
";
        let t = read_trace_csv(text.as_bytes(), p()).unwrap();
        assert_eq!(t.len(), 2);
        assert!((t[0].meta.omega.ghz() - 5.0).abs() < 1e-12);
        assert!((t[1].meta.omega.ghz() - 8.0).abs() < 1e-12);
        assert_eq!(t[1].values, vec![Some(1.0), None, Some(0.25)]);
        assert_eq!(t[0].unit, ValueUnit::Normalized);
    }

    #[test]
    fn malformed_rows_name_the_row() {
        let text = "\
axis_name,axis_value,c_pm_farads,c_pm_norm,omega_ghz,branch,gap_flag
eps_reduced,0.1,,0.5,5,01-11,0
eps_reduced,abc,,0.5,5,01-11,0
";
        match read_trace_csv(text.as_bytes(), p()) {
            Err(Error::MalformedRow { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        let short = "axis_name,axis_value,c_pm_farads,c_pm_norm,omega_ghz,branch,gap_flag\neps_reduced,0.1\n";
        assert!(matches!(
            read_trace_csv(short.as_bytes(), p()),
            Err(Error::MalformedRow { row: 2, .. })
        ));
        let unsorted = "\
axis_name,axis_value,c_pm_farads,c_pm_norm,omega_ghz,branch,gap_flag
eps_reduced,0.2,,0.5,5,01-11,0
eps_reduced,0.1,,0.5,5,01-11,0
";
        assert!(matches!(
            read_trace_csv(unsorted.as_bytes(), p()),
            Err(Error::MalformedRow { row: 3, .. })
        ));
    }

    #[test]
    fn measured_file_parsing() {
        let text = "v_tg_volts,phase_norm\n0.48,0.1\n0.47,-0.5\n0.46,1.0\n";
        let t = read_measured_csv(
            text.as_bytes(),
            p(),
            AngularFrequency::from_ghz(11.0),
            Branch::ZeroZeroOneZero,
        )
        .unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].axis, vec![0.46, 0.47, 0.48]);
        assert_eq!(t[0].values, vec![Some(1.0), Some(-0.5), Some(0.1)]);
        assert_eq!(t[0].unit, ValueUnit::PhaseNormalized);

        let zigzag = "v_tg_volts,phase_norm\n0.46,0.1\n0.48,-0.5\n0.47,1.0\n";
        assert!(read_measured_csv(
            zigzag.as_bytes(),
            p(),
            AngularFrequency::from_ghz(11.0),
            Branch::default()
        )
        .is_err());
        let wild = "v_tg_volts,phase_norm\n0.46,0.1\n0.48,-3\n";
        assert!(matches!(
            read_measured_csv(
                wild.as_bytes(),
                p(),
                AngularFrequency::from_ghz(11.0),
                Branch::default()
            ),
            Err(Error::MalformedRow { row: 3, .. })
        ));
        let multi =
            "v_tg_volts,phase_norm,omega_ghz\n0.46,0.1,5\n0.47,0.2,5\n0.46,0.3,8\n0.47,0.4,8\n";
        let t = read_measured_csv(
            multi.as_bytes(),
            p(),
            AngularFrequency::from_ghz(11.0),
            Branch::default(),
        )
        .unwrap();
        assert_eq!(t.len(), 2);
        assert!((t[1].meta.omega.ghz() - 8.0).abs() < 1e-12);
        assert!(read_measured_csv(
            "v_tg_volts,phase_norm\n".as_bytes(),
            p(),
            AngularFrequency::from_ghz(1.0),
            Branch::default()
        )
        .is_err());
    }

    #[test]
    fn measured_writer_round_trips() {
        let spec = SweepSpec {
            axis: AxisKind::GateVoltage,
            start: 0.464,
            stop: 0.474,
            n_points: 101,
            ..SweepSpec::default()
        };
        let t = simulate_trace(&spec, &ModelParams::device_defaults()).unwrap();
        let mut buf = Vec::new();
        write_measured_csv(&t, &mut buf).unwrap();
        let back = read_measured_csv(
            buf.as_slice(),
            p(),
            AngularFrequency::from_ghz(1.0),
            Branch::default(),
        )
        .unwrap();
        let peak = t[0]
            .values
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in t[0].samples().zip(back[0].samples()) {
            assert_eq!(a.0, b.0);
            assert!((-a.1 / peak - b.1).abs() < 1e-15);
        }
    }
}
