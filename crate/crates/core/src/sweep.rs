//! Traces of the parametric capacitance over detuning or gate-voltage grids.

use std::fmt;
use std::str::FromStr;

use crate::capacitance::parametric_capacitance;
use crate::error::{Error, Result};
use crate::params::{Branch, ModelParams};
use crate::units::{detuning_from_voltage, AngularFrequency, Energy, Voltage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AxisKind {
    /// eps0 / A, dimensionless.
    #[default]
    DetuningReduced,
    /// eps0 in ueV.
    DetuningAbsolute,
    /// Top-gate voltage in volts.
    GateVoltage,
}

impl AxisKind {
    /// Column label used in CSV files and configs.
    pub fn label(self) -> &'static str {
        match self {
            AxisKind::DetuningReduced => "eps_reduced",
            AxisKind::DetuningAbsolute => "eps_uev",
            AxisKind::GateVoltage => "v_tg_volts",
        }
    }

    pub fn is_detuning(self) -> bool {
        !matches!(self, AxisKind::GateVoltage)
    }
}

impl fmt::Display for AxisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AxisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "eps_reduced" | "detuning-reduced" | "reduced" => Ok(AxisKind::DetuningReduced),
            "eps_uev" | "detuning-absolute" | "absolute" => Ok(AxisKind::DetuningAbsolute),
            "v_tg_volts" | "gate-voltage" | "voltage" => Ok(AxisKind::GateVoltage),
            other => Err(Error::invalid(format!(
                "unknown sweep axis `{other}` (expected eps_reduced, eps_uev or v_tg_volts)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: AxisKind,
    pub start: f64,
    pub stop: f64,
    pub n_points: usize,
    pub frequencies: Vec<AngularFrequency>,
    pub branch: Branch,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            axis: AxisKind::DetuningReduced,
            start: -1.2,
            stop: 1.5,
            n_points: 2001,
            frequencies: vec![AngularFrequency::from_ghz(11.0)],
            branch: Branch::default(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::Invariant {
                key: "sweep_points".into(),
                bound: format!("must be >= 2 (got {})", self.n_points),
            });
        }
        if !(self.start < self.stop) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Invariant {
                key: "sweep_start".into(),
                bound: format!("need start < stop (got {} .. {})", self.start, self.stop),
            });
        }
        if self.frequencies.is_empty() {
            return Err(Error::Invariant {
                key: "freqs_ghz".into(),
                bound: "at least one frequency required".into(),
            });
        }
        if let Some(bad) = self
            .frequencies
            .iter()
            .find(|w| !(w.0 > 0.0 && w.0.is_finite()))
        {
            return Err(Error::Invariant {
                key: "freqs_ghz".into(),
                bound: format!("frequencies must be > 0 (got {} GHz)", bad.ghz()),
            });
        }
        Ok(())
    }

    /// Grid points, written so that negating start and stop negates the grid exactly.
    pub fn grid(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.n_points)
    }
}

pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let m = (n - 1) as f64;
    (0..n)
        .map(|i| (start * (m - i as f64) + stop * i as f64) / m)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValueUnit {
    /// Parametric capacitance in farads.
    #[default]
    Farads,
    /// Capacitance divided by its largest magnitude.
    Normalized,
    /// Resonator phase shift divided by its largest magnitude (opposite sign to capacitance).
    PhaseNormalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub omega: AngularFrequency,
    pub branch: Branch,
    pub axis_kind: AxisKind,
    /// Parameters the trace was generated from, absent for measured data.
    pub params: Option<ModelParams>,
}

impl TraceMeta {
    pub fn new(omega: AngularFrequency, branch: Branch, axis_kind: AxisKind) -> Self {
        TraceMeta {
            omega,
            branch,
            axis_kind,
            params: None,
        }
    }
}

/// One sampled curve. `None` marks a point where the model is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub axis: Vec<f64>,
    pub values: Vec<Option<f64>>,
    pub unit: ValueUnit,
    pub meta: TraceMeta,
}

impl Trace {
    pub fn validate(&self) -> Result<()> {
        if self.axis.len() != self.values.len() {
            return Err(Error::invalid(format!(
                "trace axis has {} points but {} values",
                self.axis.len(),
                self.values.len()
            )));
        }
        if let Some(i) = self.axis.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(format!(
                "trace axis not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    /// Non-gap samples as (axis, value) pairs.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.axis
            .iter()
            .zip(&self.values)
            .filter_map(|(&x, v)| v.map(|v| (x, v)))
    }

    pub fn gap_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

/// Converts an axis value to offset detuning.
pub fn axis_to_detuning(kind: AxisKind, x: f64, params: &ModelParams) -> Result<Energy> {
    match kind {
        AxisKind::DetuningReduced => Ok(Energy(x * params.amplitude.0)),
        AxisKind::DetuningAbsolute => Ok(Energy(x)),
        AxisKind::GateVoltage => detuning_from_voltage(Voltage(x), params.alpha_minus(), params.v0),
    }
}

/// Model values on an arbitrary axis; domain failures become gaps.
pub fn evaluate_on_axis(
    axis: AxisKind,
    grid: &[f64],
    params: &ModelParams,
    omega: AngularFrequency,
    branch: Branch,
) -> Result<Vec<Option<f64>>> {
    grid.iter()
        .map(|&x| {
            let eps0 = axis_to_detuning(axis, x, params)?;
            match parametric_capacitance(eps0, params, omega, branch) {
                Ok(c) => Ok(Some(c)),
                Err(Error::Domain { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// One trace per frequency, ordered by ascending frequency.
pub fn simulate_trace(spec: &SweepSpec, params: &ModelParams) -> Result<Vec<Trace>> {
    spec.validate()?;
    params.validate()?;
    let grid = spec.grid();
    let mut freqs = spec.frequencies.clone();
    freqs.sort_by(|a, b| a.0.total_cmp(&b.0));
    freqs
        .into_iter()
        .map(|omega| {
            let values = evaluate_on_axis(spec.axis, &grid, params, omega, spec.branch)?;
            let gaps = values.iter().filter(|v| v.is_none()).count();
            if gaps > 0 {
                log::debug!(
                    "{gaps} of {} points at {:.3} GHz fall outside the reservoir-factor domain",
                    grid.len(),
                    omega.ghz()
                );
            }
            Ok(Trace {
                axis: grid.clone(),
                values,
                unit: ValueUnit::Farads,
                meta: TraceMeta {
                    omega,
                    branch: spec.branch,
                    axis_kind: spec.axis,
                    params: Some(params.clone()),
                },
            })
        })
        .collect()
}

/// Reflects a detuning trace about eps = 0 onto the other exchange branch.
pub fn mirror_branch(t: &Trace) -> Result<Trace> {
    if !t.meta.axis_kind.is_detuning() {
        return Err(Error::invalid(
            "mirror_branch needs a detuning axis; gate-voltage traces have no symmetry point",
        ));
    }
    let mut out = t.clone();
    out.axis = t.axis.iter().rev().map(|x| -x).collect();
    out.values = t.values.iter().rev().copied().collect();
    out.meta.branch = t.meta.branch.mirrored();
    Ok(out)
}
