//! Observables extracted from traces and the fits behind them.

pub mod envelope;
pub mod fit;
pub mod fourier;
pub mod optimize;
pub mod p2p;
mod registry;

pub use envelope::{envelope, envelope_with_fit, fit_envelope, EnvelopeFit, EnvelopeResult};
pub use fit::{
    fit_amplitude_curve, fit_parameters, FitOptions, FitParam, FitResult, ParamEstimate,
};
pub use fourier::{fourier_peak, SpectrumPeak};
pub use p2p::{peak_to_peak, peak_to_peak_vs_frequency, AmplitudePoint, DEFAULT_P2P_WINDOW};
pub use registry::{
    Analyzer, AnalyzerRegistry, EnvelopeAnalyzer, FourierAnalyzer, P2pAnalyzer, Report, Table,
};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::sweep::{axis_to_detuning, Trace};
use crate::units::{hbar, AngularFrequency, VOLTS_PER_UEV};

/// Reduced detuning eps0 / A of each axis point, mapped onto the (01)-(11) cycle.
pub fn reduced_detuning(t: &Trace, params: &ModelParams) -> Result<Vec<f64>> {
    let p = t.meta.params.as_ref().unwrap_or(params);
    t.axis
        .iter()
        .map(|&x| {
            let e = axis_to_detuning(t.meta.axis_kind, x, p)?;
            Ok(t.meta.branch.canonical_detuning(e).0 / p.amplitude.0)
        })
        .collect()
}

/// Keeps the samples whose reduced detuning lies in `window`.
pub fn restrict_to_window(t: &Trace, params: &ModelParams, window: (f64, f64)) -> Result<Trace> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::invalid(format!("empty window [{lo}, {hi}]")));
    }
    let x = reduced_detuning(t, params)?;
    let keep: Vec<usize> = (0..t.len()).filter(|&i| x[i] >= lo && x[i] <= hi).collect();
    let mut out = t.clone();
    out.axis = keep.iter().map(|&i| t.axis[i]).collect();
    out.values = keep.iter().map(|&i| t.values[i]).collect();
    Ok(out)
}

/// Straight line y = slope * x through the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OriginLine {
    pub slope: f64,
    /// 1 - SS_res / SS_tot, SS_tot taken about the mean of y.
    pub r_squared: f64,
}

pub fn fit_line_through_origin(x: &[f64], y: &[f64]) -> Result<OriginLine> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "line fit needs at least 2 paired points (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all abscissae are zero".into()));
    }
    let slope = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    Ok(OriginLine { slope, r_squared })
}

/// alpha_minus implied by a voltage-period slope dV/domega (volts per rad/ns).
pub fn alpha_minus_from_period_slope(slope: f64) -> Result<f64> {
    if !(slope > 0.0) {
        return Err(Error::invalid(format!("period slope {slope} must be > 0")));
    }
    Ok(std::f64::consts::PI * hbar() * VOLTS_PER_UEV / (2.0 * std::f64::consts::SQRT_2 * slope))
}

/// Periods in volts against angular frequency, fitted through the origin.
pub fn period_law(periods: &[(AngularFrequency, f64)]) -> Result<(OriginLine, f64)> {
    let x: Vec<f64> = periods.iter().map(|p| p.0 .0).collect();
    let y: Vec<f64> = periods.iter().map(|p| p.1).collect();
    let line = fit_line_through_origin(&x, &y)?;
    let alpha = alpha_minus_from_period_slope(line.slope)?;
    Ok((line, alpha))
}
