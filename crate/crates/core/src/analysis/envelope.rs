//! Upper and lower envelopes of an oscillating trace and a fit of the
//! decoherence and reservoir times to the envelope shape.

use crate::analysis::optimize::{grid_scan, log_axis, nelder_mead, SimplexOptions};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::sweep::{evaluate_on_axis, Trace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub value: f64,
    pub is_max: bool,
}

/// Local extrema, refined by a parabola through each extremal sample and its neighbours.
pub fn find_extrema(x: &[f64], y: &[f64]) -> Vec<Extremum> {
    let mut out = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
        let is_max = b > a && b >= c;
        let is_min = b < a && b <= c;
        if !(is_max || is_min) {
            continue;
        }
        let denom = a - 2.0 * b + c;
        let (mut xe, mut ve) = (x[i], b);
        if denom != 0.0 {
            let s = (0.5 * (a - c) / denom).clamp(-1.0, 1.0);
            ve = b - 0.25 * (a - c) * s;
            let h = if s >= 0.0 {
                x[i + 1] - x[i]
            } else {
                x[i] - x[i - 1]
            };
            xe = x[i] + s * h;
        }
        out.push(Extremum {
            x: xe,
            value: ve,
            is_max,
        });
    }
    out
}

fn interpolate(knots: &[(f64, f64)], x: f64) -> f64 {
    match knots {
        [] => 0.0,
        [(_, v)] => *v,
        _ => {
            if x <= knots[0].0 {
                return knots[0].1;
            }
            let last = knots[knots.len() - 1];
            if x >= last.0 {
                return last.1;
            }
            let j = knots.partition_point(|k| k.0 <= x).max(1);
            let (x0, y0) = knots[j - 1];
            let (x1, y1) = knots[j];
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeFit {
    pub t2_ns: f64,
    pub t_r_ns: f64,
    /// Sum of squared envelope residuals at the optimum.
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    pub axis: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    pub extrema: usize,
    pub fit: Option<EnvelopeFit>,
}

impl EnvelopeResult {
    /// Half the distance between the envelopes.
    pub fn amplitude(&self) -> Vec<f64> {
        self.upper
            .iter()
            .zip(&self.lower)
            .map(|(u, l)| 0.5 * (u - l))
            .collect()
    }
}

/// Envelopes through the local maxima and minima of the non-gap samples.
pub fn envelope(t: &Trace) -> Result<EnvelopeResult> {
    let (x, y): (Vec<f64>, Vec<f64>) = t.samples().unzip();
    let ext = find_extrema(&x, &y);
    if ext.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} local extrema found; the envelope needs at least 3",
            ext.len()
        )));
    }
    let maxima: Vec<(f64, f64)> = ext
        .iter()
        .filter(|e| e.is_max)
        .map(|e| (e.x, e.value))
        .collect();
    let minima: Vec<(f64, f64)> = ext
        .iter()
        .filter(|e| !e.is_max)
        .map(|e| (e.x, e.value))
        .collect();
    let (upper, lower) = x
        .iter()
        .map(|&xi| {
            let u = if maxima.is_empty() {
                f64::NEG_INFINITY
            } else {
                interpolate(&maxima, xi)
            };
            let l = if minima.is_empty() {
                f64::INFINITY
            } else {
                interpolate(&minima, xi)
            };
            let (u, l) = (u.max(l), u.min(l));
            // a missing side mirrors the other about zero
            match (u.is_finite(), l.is_finite()) {
                (true, true) => (u, l),
                (true, false) => (u, -u),
                _ => (-l, l),
            }
        })
        .unzip();
    Ok(EnvelopeResult {
        axis: x,
        upper,
        lower,
        extrema: ext.len(),
        fit: None,
    })
}

fn normalised_amplitude(e: &EnvelopeResult) -> Option<Vec<f64>> {
    let a = e.amplitude();
    let peak = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (peak > 0.0).then(|| a.into_iter().map(|v| v / peak).collect())
}

/// Bounds for the envelope fit, in ns.
pub const ENVELOPE_FIT_BOUNDS: (f64, f64) = (1e-3, 1.0);

/// Fits T2 and T_R so that the model envelope matches the trace envelope.
/// All other parameters are taken from `params`; the trace's own frequency,
/// branch and axis are used.
pub fn fit_envelope(t: &Trace, params: &ModelParams) -> Result<EnvelopeFit> {
    let data = envelope(t)?;
    let target = normalised_amplitude(&data)
        .ok_or_else(|| Error::Degenerate("trace envelope is identically zero".into()))?;
    let axis = data.axis.clone();
    let kind = t.meta.axis_kind;
    let (omega, branch) = (t.meta.omega, t.meta.branch);

    let objective = |theta: &[f64]| -> f64 {
        let (t2, tr) = (theta[0].exp(), theta[1].exp());
        let (lo, hi) = ENVELOPE_FIT_BOUNDS;
        if !(lo..=hi).contains(&t2) || !(lo..=hi).contains(&tr) {
            return f64::INFINITY;
        }
        let mut p = params.clone();
        p.t2_ns = t2;
        p.t_r_ns = tr;
        let Ok(values) = evaluate_on_axis(kind, &axis, &p, omega, branch) else {
            return f64::INFINITY;
        };
        let model = Trace {
            axis: axis.clone(),
            values,
            unit: t.unit,
            meta: t.meta.clone(),
        };
        let Some(amp) = envelope(&model)
            .ok()
            .as_ref()
            .and_then(normalised_amplitude)
        else {
            return f64::INFINITY;
        };
        if amp.len() != target.len() {
            return f64::INFINITY;
        }
        amp.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum()
    };

    let (lo, hi) = ENVELOPE_FIT_BOUNDS;
    let grid = log_axis(lo, hi, 4.0);
    let (start, _) = grid_scan(objective, &[grid.clone(), grid]);
    let res = nelder_mead(objective, &start, &SimplexOptions::default());
    Ok(EnvelopeFit {
        t2_ns: res.x[0].exp(),
        t_r_ns: res.x[1].exp(),
        residual: res.fx,
        converged: res.converged,
    })
}

/// [`envelope`] plus the (T2, T_R) fit.
pub fn envelope_with_fit(t: &Trace, params: &ModelParams) -> Result<EnvelopeResult> {
    let mut e = envelope(t)?;
    e.fit = Some(fit_envelope(t, params)?);
    Ok(e)
}
