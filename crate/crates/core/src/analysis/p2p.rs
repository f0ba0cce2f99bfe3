use crate::analysis::restrict_to_window;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::sweep::Trace;
use crate::units::AngularFrequency;

/// Oscillatory window in eps0 / A used for peak-to-peak amplitudes.
pub const DEFAULT_P2P_WINDOW: (f64, f64) = (0.1, 0.95);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudePoint {
    pub omega: AngularFrequency,
    pub amplitude: f64,
}

/// max - min of the samples inside `window` (reduced detuning).
pub fn peak_to_peak(t: &Trace, params: &ModelParams, window: (f64, f64)) -> Result<f64> {
    let w = restrict_to_window(t, params, window)?;
    let mut it = w.samples().map(|s| s.1);
    let first = it.next().ok_or_else(|| {
        Error::InsufficientData(format!(
            "trace at {:.4} GHz has no samples in eps0/A window [{}, {}]",
            t.meta.omega.ghz(),
            window.0,
            window.1
        ))
    })?;
    let (lo, hi) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(hi - lo)
}

/// Peak-to-peak amplitude per trace, sorted by frequency.
pub fn peak_to_peak_vs_frequency(
    traces: &[Trace],
    params: &ModelParams,
    window: (f64, f64),
) -> Result<Vec<AmplitudePoint>> {
    if traces.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} trace(s); an amplitude-vs-frequency curve needs at least 2",
            traces.len()
        )));
    }
    let mut out = traces
        .iter()
        .map(|t| {
            Ok(AmplitudePoint {
                omega: t.meta.omega,
                amplitude: peak_to_peak(t, params, window)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.omega.0.total_cmp(&b.omega.0));
    if let Some(w) = out.windows(2).find(|w| w[0].omega == w[1].omega) {
        return Err(Error::invalid(format!(
            "two traces share the frequency {} GHz",
            w[0].omega.ghz()
        )));
    }
    Ok(out)
}
