use std::collections::BTreeMap;

use crate::analysis::envelope::{envelope, fit_envelope};
use crate::analysis::fourier::fourier_peak;
use crate::analysis::p2p::{peak_to_peak_vs_frequency, DEFAULT_P2P_WINDOW};
use crate::analysis::{period_law, restrict_to_window};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::sweep::{AxisKind, Trace};

/// Column-oriented numeric table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// Flat key = value summary plus a table of derived values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, String)>,
    pub table: Table,
}

impl Report {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

pub trait Analyzer: Send + Sync {
    fn name(&self) -> &str;
    fn analyze(&self, traces: &[Trace], params: &ModelParams) -> Result<Report>;
}

/// Fourier-peak period per trace and, on gate-voltage axes, the
/// period-vs-frequency line and the coupling difference it implies.
#[derive(Debug, Clone, Copy)]
pub struct FourierAnalyzer {
    /// Reduced-detuning window analysed.
    pub window: (f64, f64),
}

impl Default for FourierAnalyzer {
    fn default() -> Self {
        FourierAnalyzer { window: (0.0, 1.0) }
    }
}

impl Analyzer for FourierAnalyzer {
    fn name(&self) -> &str {
        "fourier"
    }

    fn analyze(&self, traces: &[Trace], params: &ModelParams) -> Result<Report> {
        let mut r = Report {
            table: Table::new(&[
                "omega_ghz",
                "peak_per_unit",
                "period",
                "half_bin",
                "periods",
                "dc_flag",
            ]),
            ..Report::default()
        };
        let mut periods = Vec::new();
        for t in traces {
            let w = restrict_to_window(t, params, self.window)?;
            let peak = fourier_peak(&w).map_err(|e| match e {
                Error::InsufficientData(m) => Error::InsufficientData(format!(
                    "trace at {:.4} GHz: {m}; widen the sweep or use a higher drive frequency",
                    t.meta.omega.ghz()
                )),
                other => other,
            })?;
            r.table.rows.push(vec![
                t.meta.omega.ghz(),
                peak.position,
                peak.period(),
                peak.uncertainty,
                peak.periods,
                if peak.dc_dominated { 1.0 } else { 0.0 },
            ]);
            periods.push((t.meta.omega, peak.period()));
        }
        r.push("traces", traces.len());
        r.push(
            "window_eps_reduced",
            format!("{} {}", self.window.0, self.window.1),
        );
        let voltage = traces
            .iter()
            .all(|t| t.meta.axis_kind == AxisKind::GateVoltage);
        if voltage && periods.len() >= 2 {
            let (line, alpha) = period_law(&periods)?;
            // volts per GHz for readability
            r.push(
                "period_slope_v_per_ghz",
                line.slope * 2.0 * std::f64::consts::PI,
            );
            r.push("period_r2", line.r_squared);
            r.push("alpha_minus", alpha);
        } else if !voltage {
            r.push("note", "alpha_minus needs gate-voltage traces");
        }
        Ok(r)
    }
}

/// Upper and lower envelopes, optionally with the (T2, T_R) fit.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnvelopeAnalyzer {
    pub fit: bool,
}

impl Analyzer for EnvelopeAnalyzer {
    fn name(&self) -> &str {
        "envelope"
    }

    fn analyze(&self, traces: &[Trace], params: &ModelParams) -> Result<Report> {
        let mut r = Report {
            table: Table::new(&["omega_ghz", "axis", "upper", "lower"]),
            ..Report::default()
        };
        for (k, t) in traces.iter().enumerate() {
            let e = envelope(t).map_err(|e| match e {
                Error::InsufficientData(m) => Error::InsufficientData(format!(
                    "trace at {:.4} GHz: {m}; the trace must oscillate",
                    t.meta.omega.ghz()
                )),
                other => other,
            })?;
            let g = t.meta.omega.ghz();
            for i in 0..e.axis.len() {
                r.table
                    .rows
                    .push(vec![g, e.axis[i], e.upper[i], e.lower[i]]);
            }
            r.push(&format!("trace{k}_omega_ghz"), g);
            r.push(&format!("trace{k}_extrema"), e.extrema);
            if self.fit {
                let p = t.meta.params.as_ref().unwrap_or(params);
                let f = fit_envelope(t, p)?;
                r.push(&format!("trace{k}_t2_ps"), f.t2_ns * 1e3);
                r.push(&format!("trace{k}_tr_ps"), f.t_r_ns * 1e3);
                r.push(&format!("trace{k}_fit_residual"), f.residual);
                r.push(&format!("trace{k}_fit_converged"), f.converged);
            }
        }
        Ok(r)
    }
}

/// Peak-to-peak amplitude against frequency.
#[derive(Debug, Clone, Copy)]
pub struct P2pAnalyzer {
    pub window: (f64, f64),
}

impl Default for P2pAnalyzer {
    fn default() -> Self {
        P2pAnalyzer {
            window: DEFAULT_P2P_WINDOW,
        }
    }
}

impl Analyzer for P2pAnalyzer {
    fn name(&self) -> &str {
        "p2p"
    }

    fn analyze(&self, traces: &[Trace], params: &ModelParams) -> Result<Report> {
        let pts = peak_to_peak_vs_frequency(traces, params, self.window)?;
        let mut r = Report {
            table: Table::new(&["omega_ghz", "peak_to_peak"]),
            ..Report::default()
        };
        for p in &pts {
            r.table.rows.push(vec![p.omega.ghz(), p.amplitude]);
        }
        let best = pts
            .iter()
            .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
            .expect("at least two points");
        let rising = pts.windows(2).any(|w| w[1].amplitude > w[0].amplitude);
        let falling = pts.windows(2).any(|w| w[1].amplitude < w[0].amplitude);
        r.push("points", pts.len());
        r.push("max_omega_ghz", best.omega.ghz());
        r.push("max_peak_to_peak", best.amplitude);
        r.push("non_monotone", rising && falling);
        Ok(r)
    }
}

pub struct AnalyzerRegistry {
    analyzers: BTreeMap<String, Box<dyn Analyzer>>,
}

impl Default for AnalyzerRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

impl AnalyzerRegistry {
    pub fn empty() -> Self {
        AnalyzerRegistry {
            analyzers: BTreeMap::new(),
        }
    }

    pub fn with_builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(FourierAnalyzer::default()));
        r.register(Box::new(EnvelopeAnalyzer { fit: true }));
        r.register(Box::new(P2pAnalyzer::default()));
        r
    }

    pub fn register(&mut self, a: Box<dyn Analyzer>) {
        self.analyzers.insert(a.name().to_string(), a);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Analyzer> {
        self.analyzers
            .get(name)
            .map(|a| a.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "analysis mode",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&str> {
        self.analyzers.keys().map(String::as_str).collect()
    }
}
