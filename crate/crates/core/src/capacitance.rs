//! Parametric capacitance of the driven double dot, its sinusoidal limit and
//! the conversion to a resonator phase shift.

use std::f64::consts::{PI, SQRT_2};

use crate::dynamics::{reservoir_prob, AiryFactors, RateParams, RelaxationParams};
use crate::error::{Error, Result};
use crate::params::{Branch, ModelParams};
use crate::sweep::{Trace, ValueUnit};
use crate::units::{AngularFrequency, Energy, Voltage, ELEMENTARY_CHARGE, VOLTS_PER_UEV};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateCouplings {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl GateCouplings {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self> {
        let c = GateCouplings { alpha1, alpha2 };
        c.validate()?;
        Ok(c)
    }

    pub fn from_plus_minus(alpha_plus: f64, alpha_minus: f64) -> Result<Self> {
        Self::new(alpha_plus - alpha_minus, alpha_plus + alpha_minus)
    }

    pub fn alpha_plus(&self) -> f64 {
        0.5 * (self.alpha2 + self.alpha1)
    }

    pub fn alpha_minus(&self) -> f64 {
        0.5 * (self.alpha2 - self.alpha1)
    }

    pub fn validate(&self) -> Result<()> {
        for (key, a) in [("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Invariant {
                    key: key.into(),
                    bound: format!("must lie in (0, 1) (got {a})"),
                });
            }
        }
        if self.alpha_minus().abs() > 0.5 * self.alpha_plus() {
            log::warn!(
                "alpha_minus = {} is not small compared with alpha_plus = {}",
                self.alpha_minus(),
                self.alpha_plus()
            );
        }
        Ok(())
    }
}

/// Circuit capacitances in farads plus the resonator quality factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    pub c_g1: f64,
    pub c_g2: f64,
    pub c_m: f64,
    pub c_d: f64,
    pub q_factor: f64,
    /// Parasitic capacitance to ground.
    pub c_p: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        CircuitParams {
            c_g1: 20e-18,
            c_g2: 25e-18,
            c_m: 2e-18,
            c_d: 30e-18,
            q_factor: 40.0,
            c_p: 660e-15,
        }
    }
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        let caps = [
            ("c_g1_af", self.c_g1),
            ("c_g2_af", self.c_g2),
            ("c_m_af", self.c_m),
            ("c_d_af", self.c_d),
            ("c_p_ff", self.c_p),
            ("q_factor", self.q_factor),
        ];
        for (key, c) in caps {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Invariant {
                    key: key.into(),
                    bound: format!("must be > 0 (got {c})"),
                });
            }
        }
        if self.c_m > 0.1 * self.c_g2.min(self.c_d) {
            log::warn!(
                "C_m is not small compared with C_G2 and C_D: weak-coupling limit questionable"
            );
        }
        Ok(())
    }
}

/// State-independent capacitance C_G2 / (C_G2 + C_D), scaled by C_G2.
pub fn geometric_capacitance(c: &CircuitParams) -> f64 {
    c.c_g2 / (c.c_g2 + c.c_d) * c.c_g2
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GammaFactor(pub f64);

/// gamma = T1 pi zeta^2 Delta^2 / (hbar^2 omega) exp(-t1 / T2).
pub fn gamma_factor(
    eps0: Energy,
    rate: &RateParams,
    rel: &RelaxationParams,
) -> Result<GammaFactor> {
    rate.validate()?;
    rel.validate()?;
    let f = AiryFactors::new(eps0, rate)?;
    Ok(gamma_from_factors(&f, rel.t1_ns))
}

fn gamma_from_factors(f: &AiryFactors, t1_ns: f64) -> GammaFactor {
    GammaFactor(2.0 * t1_ns * f.prefactor * f.decoherence)
}

/// 2 e^2 alpha_- alpha_+ zeta / (hbar omega), in farads.
fn capacitance_scale(params: &ModelParams, zeta: f64, omega: AngularFrequency) -> f64 {
    let c = &params.couplings;
    let hw_volts = omega.photon_energy().0 * VOLTS_PER_UEV;
    2.0 * ELEMENTARY_CHARGE * c.alpha_minus() * c.alpha_plus() * zeta / hw_volts
}

/// Parametric capacitance in farads at offset detuning `eps0`.
pub fn parametric_capacitance(
    eps0: Energy,
    params: &ModelParams,
    omega: AngularFrequency,
    branch: Branch,
) -> Result<f64> {
    let rate = params.rate_params(omega)?;
    let rel = params.relaxation();
    rel.validate()?;
    let e = branch.canonical_detuning(eps0);
    let pr = reservoir_prob(e, &params.reservoir(), params.amplitude, omega).map_err(|err| {
        match err {
            // report the caller's detuning, not the mirrored one
            Error::Domain { reason, .. } => Error::Domain {
                eps0: eps0.0,
                reason,
            },
            other => other,
        }
    })?;
    let f = AiryFactors::new(e, &rate)?;
    let gamma = gamma_from_factors(&f, rel.t1_ns).0;
    let sat = 1.0 + gamma * f.ai * f.ai;
    Ok(capacitance_scale(params, f.zeta, omega) * pr * gamma * f.ai_prime * f.ai / (sat * sat))
}

/// Top-gate voltage period pi hbar omega / (2 sqrt(2) e alpha_minus).
pub fn voltage_period(omega: AngularFrequency, alpha_minus: f64) -> Result<Voltage> {
    if alpha_minus == 0.0 {
        return Err(Error::DivisionByZero("alpha_minus = 0"));
    }
    if !(alpha_minus > 0.0) {
        return Err(Error::invalid(format!(
            "alpha_minus = {alpha_minus} must be > 0"
        )));
    }
    let hw_volts = omega.photon_energy().0 * VOLTS_PER_UEV;
    Ok(Voltage(PI * hw_volts / (2.0 * SQRT_2 * alpha_minus)))
}

/// Envelope C_pm^0 of the oscillatory region (eps0 < A), farads.
///
/// Uses the oscillatory asymptotics of Ai and Ai' and maximises the
/// saturated kernel over one fringe phase.
pub fn sinusoid_envelope(
    eps0: Energy,
    params: &ModelParams,
    omega: AngularFrequency,
    branch: Branch,
) -> Result<f64> {
    let rate = params.rate_params(omega)?;
    let e = branch.canonical_detuning(eps0);
    let f = AiryFactors::new(e, &rate)?;
    if f.u >= 0.0 {
        return Err(Error::Domain {
            eps0: eps0.0,
            reason: "sinusoidal limit only holds for eps0 < A".into(),
        });
    }
    let pr = reservoir_prob(e, &params.reservoir(), params.amplitude, omega)?;
    let gamma = gamma_from_factors(&f, params.t1_ns).0;
    // Ai ~ sin(theta) / (sqrt(pi) |u|^1/4), Ai' ~ -|u|^1/4 cos(theta) / sqrt(pi)
    let b = gamma / (PI * (-f.u).sqrt());
    let kernel = |theta: f64| {
        let (s, c) = theta.sin_cos();
        let d = 1.0 + b * s * s;
        (s * c).abs() / (d * d)
    };
    let mut best = 0.0f64;
    let n = 2000;
    for i in 0..=n {
        best = best.max(kernel(0.5 * PI * i as f64 / n as f64));
    }
    Ok(capacitance_scale(params, f.zeta, omega) * pr * gamma / PI * best)
}

/// Sinusoidal reduction C_pm ~ C_pm^0 cos(2 pi (V_TG - V_ref) / dV_TG).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidModel {
    pub amplitude: f64,
    pub period: Voltage,
    pub reference: Voltage,
}

impl SinusoidModel {
    /// Amplitude taken from [`sinusoid_envelope`] at the detuning `v_tg` maps to.
    pub fn at_voltage(
        v_tg: Voltage,
        params: &ModelParams,
        omega: AngularFrequency,
        branch: Branch,
    ) -> Result<Self> {
        let eps0 = crate::units::detuning_from_voltage(v_tg, params.alpha_minus(), params.v0)?;
        Ok(SinusoidModel {
            amplitude: sinusoid_envelope(eps0, params, omega, branch)?,
            period: voltage_period(omega, params.alpha_minus())?,
            reference: Voltage(0.0),
        })
    }
}

pub fn capacitance_sinusoid(v_tg: Voltage, model: &SinusoidModel) -> f64 {
    model.amplitude * (2.0 * PI * (v_tg.0 - model.reference.0) / model.period.0).cos()
}

/// Resonator phase shift -2 Q C_pm / C_p in radians.
pub fn phase_shift(c_pm: f64, c: &CircuitParams) -> f64 {
    -2.0 * c.q_factor * c_pm / c.c_p
}

/// Divides every sample by the largest |value|; gaps stay gaps.
pub fn normalize_trace(t: &Trace) -> Result<Trace> {
    let peak = t
        .values
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if t.values.iter().flatten().next().is_none() {
        return Err(Error::Degenerate("trace has no samples".into()));
    }
    if peak == 0.0 || !peak.is_finite() {
        return Err(Error::Degenerate(format!(
            "cannot normalise trace at {:.4} GHz: max |value| = {peak}",
            t.meta.omega.ghz()
        )));
    }
    let mut out = t.clone();
    for v in out.values.iter_mut().flatten() {
        *v /= peak;
    }
    out.unit = ValueUnit::Normalized;
    Ok(out)
}
