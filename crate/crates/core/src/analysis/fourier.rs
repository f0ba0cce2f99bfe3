//! Dominant period of an oscillatory trace from its discrete spectrum.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::sweep::Trace;

/// Fewest oscillation periods accepted in the analysed window.
pub const MIN_PERIODS: f64 = 4.0;

const SPACING_TOLERANCE: f64 = 1e-9;
const REFINE_STEPS: i32 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPeak {
    /// Cycles per axis unit.
    pub position: f64,
    /// Amplitude of the matching sinusoid.
    pub magnitude: f64,
    /// Half the width of one frequency bin.
    pub uncertainty: f64,
    /// Periods of the peak frequency inside the window.
    pub periods: f64,
    /// Set when the mean outweighs the oscillating part.
    pub dc_dominated: bool,
}

impl SpectrumPeak {
    /// Period in axis units.
    pub fn period(&self) -> f64 {
        1.0 / self.position
    }
}

/// Non-gap samples on a uniform grid, linearly resampled if the spacing varies.
fn uniform_samples(t: &Trace) -> Result<(f64, f64, Vec<f64>)> {
    let (x, y): (Vec<f64>, Vec<f64>) = t.samples().unzip();
    let n = x.len();
    if n < 8 {
        return Err(Error::InsufficientData(format!(
            "{n} samples; the spectrum needs at least 8"
        )));
    }
    let dx = (x[n - 1] - x[0]) / (n - 1) as f64;
    if !(dx > 0.0) {
        return Err(Error::invalid("trace axis must be increasing"));
    }
    let uniform = x
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dx).abs() <= SPACING_TOLERANCE * dx);
    if uniform {
        return Ok((x[0], dx, y));
    }
    log::debug!("non-uniform axis; resampling {n} points linearly");
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let xi = x[0] + dx * i as f64;
        while j + 2 < n && x[j + 1] < xi {
            j += 1;
        }
        let s = ((xi - x[j]) / (x[j + 1] - x[j])).clamp(0.0, 1.0);
        out.push(y[j] + s * (y[j + 1] - y[j]));
    }
    Ok((x[0], dx, out))
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// |sum y_k exp(-2 pi i f k)| for a frequency `f` in cycles per sample.
fn dtft_magnitude(y: &[f64], f: f64) -> f64 {
    let step = Complex::from_polar(1.0, -2.0 * PI * f);
    let mut phase = Complex::new(1.0, 0.0);
    let mut acc = Complex::new(0.0, 0.0);
    for (k, &v) in y.iter().enumerate() {
        if k % 64 == 0 {
            phase = Complex::from_polar(1.0, -2.0 * PI * f * k as f64);
        }
        acc += phase * v;
        phase *= step;
    }
    acc.norm()
}

/// Strongest non-DC spectral line of `t`.
///
/// The mean is removed and a Hann window applied; the peak bin of an
/// exact-length FFT is refined on a 1/16-bin grid and then by a parabola
/// through the log magnitudes.
pub fn fourier_peak(t: &Trace) -> Result<SpectrumPeak> {
    let (_, dx, y) = uniform_samples(t)?;
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let spread = centred.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if spread <= 1e-12 * mean.abs() || spread == 0.0 {
        return Err(Error::InsufficientData(
            "trace is constant; its spectrum is pure DC".into(),
        ));
    }
    let w = hann(n);
    let wsum: f64 = w.iter().sum();
    let windowed: Vec<f64> = centred.iter().zip(&w).map(|(a, b)| a * b).collect();

    let mut buf: Vec<Complex<f64>> = windowed.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let (kmax, _) = buf[1..=half]
        .iter()
        .enumerate()
        .map(|(i, c)| (i + 1, c.norm()))
        .fold(
            (1, -1.0),
            |acc, (k, m)| if m > acc.1 { (k, m) } else { acc },
        );

    let nf = n as f64;
    let fine = |j: i32| {
        let f = (kmax as f64 + j as f64 / REFINE_STEPS as f64) / nf;
        dtft_magnitude(&windowed, f)
    };
    let lo = if kmax == 1 { 0 } else { -REFINE_STEPS };
    let mut best = (0, fine(0));
    for j in lo..=REFINE_STEPS {
        let m = fine(j);
        if m > best.1 {
            best = (j, m);
        }
    }
    let (j, m0) = best;
    let (mm, mp) = (fine(j - 1), fine(j + 1));
    let (a, b, c) = (
        mm.max(1e-300).ln(),
        m0.max(1e-300).ln(),
        mp.max(1e-300).ln(),
    );
    let denom = a - 2.0 * b + c;
    let shift = if denom < 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let bins = kmax as f64 + (j as f64 + shift) / REFINE_STEPS as f64;
    let peak_mag = (b - 0.25 * (a - c) * shift).exp();

    let position = bins / (nf * dx);
    let span = nf * dx;
    let periods = position * span;
    if periods < MIN_PERIODS {
        return Err(Error::InsufficientData(format!(
            "only {periods:.2} periods of the dominant line in the window; need at least {MIN_PERIODS}"
        )));
    }
    let dc = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().abs();
    let dc_dominated = dc > peak_mag;
    if dc_dominated {
        log::warn!(
            "spectrum is dominated by its DC component; peak at {position:.6e} may be unreliable"
        );
    }
    Ok(SpectrumPeak {
        position,
        magnitude: 2.0 * peak_mag / wsum,
        uncertainty: 0.5 / span,
        periods,
        dc_dominated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Branch;
    use crate::sweep::{linspace, AxisKind, TraceMeta, ValueUnit};
    use crate::units::AngularFrequency;
    use proptest::prelude::*;

    fn trace(axis: Vec<f64>, f: impl Fn(f64) -> f64) -> Trace {
        Trace {
            values: axis.iter().map(|&x| Some(f(x))).collect(),
            axis,
            unit: ValueUnit::Farads,
            meta: TraceMeta::new(
                AngularFrequency::from_ghz(11.0),
                Branch::default(),
                AxisKind::GateVoltage,
            ),
        }
    }

    #[test]
    fn recovers_cosine_period() {
        let period = 0.84e-3;
        for (periods, n, offset) in [
            (10.0, 1001, 0.0),
            (10.0, 777, 0.3),
            (13.7, 2000, 1.1),
            (4.5, 300, 0.0),
        ] {
            let axis = linspace(0.47, 0.47 + periods * period, n);
            let t = trace(axis, |v| 3.0 * (2.0 * PI * v / period + offset).cos());
            let p = fourier_peak(&t).unwrap();
            assert!(
                (p.position * period - 1.0).abs() < 0.005,
                "{periods} periods: {}",
                p.position * period
            );
            assert!(!p.dc_dominated);
            assert!(
                (p.uncertainty - 0.5 / (periods * period * n as f64 / (n - 1) as f64)).abs()
                    < 1e-6 / period
            );
        }
    }

    #[test]
    fn constant_trace_rejected() {
        let t = trace(linspace(0.0, 1.0, 100), |_| 2.5);
        assert!(matches!(fourier_peak(&t), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn too_few_periods_rejected() {
        let t = trace(linspace(0.0, 2.5, 200), |x| (2.0 * PI * x).cos());
        assert!(matches!(fourier_peak(&t), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn offset_cosine_flags_dc() {
        let t = trace(linspace(0.0, 10.0, 500), |x| 100.0 + (2.0 * PI * x).cos());
        let p = fourier_peak(&t).unwrap();
        assert!(p.dc_dominated);
        assert!((p.position - 1.0).abs() < 0.005);
    }

    #[test]
    fn gaps_and_irregular_spacing_are_resampled() {
        let axis: Vec<f64> = (0..600)
            .map(|i| {
                let u = i as f64 / 599.0;
                12.0 * (u + 0.05 * u * u)
            })
            .collect();
        let mut t = trace(axis, |x| (2.0 * PI * x / 1.3).sin());
        t.values[100] = None;
        let p = fourier_peak(&t).unwrap();
        assert!((p.period() / 1.3 - 1.0).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn positive_scaling_keeps_position(scale in 1e-20f64..1e20, period in 0.05f64..0.2) {
            let axis = linspace(0.0, 1.0, 400);
            let a = trace(axis.clone(), |x| (2.0 * PI * x / period).cos() * (1.0 + x));
            let b = trace(axis, |x| scale * (2.0 * PI * x / period).cos() * (1.0 + x));
            let (pa, pb) = (fourier_peak(&a).unwrap(), fourier_peak(&b).unwrap());
            prop_assert!((pa.position - pb.position).abs() <= 1e-9 * pa.position);
        }
    }
}
