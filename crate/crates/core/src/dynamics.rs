//! Driven two-level dynamics: LZSM transition rate, stationary occupation
//! and exchange with the reservoir.
//!
//! The relaxation branch is the low-temperature one: only downward
//! relaxation at rate 1/T1 is kept.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::specfun::{airy, bessel_j_all};
use crate::units::{AngularFrequency, Energy, HBAR_UEV_NS};

/// Extra sidebands kept beyond A / (hbar omega) in the Bessel sum.
pub const SIDEBAND_MARGIN: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    /// Tunnel coupling.
    pub delta: Energy,
    /// Drive amplitude.
    pub amplitude: Energy,
    pub omega: AngularFrequency,
    /// Coherence time T2 in ns.
    pub t2_ns: f64,
}

impl RateParams {
    pub fn new(
        delta: Energy,
        amplitude: Energy,
        omega: AngularFrequency,
        t2_ns: f64,
    ) -> Result<Self> {
        let p = RateParams {
            delta,
            amplitude,
            omega,
            t2_ns,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.0 >= 0.0 && self.delta.0.is_finite()) {
            return Err(Error::invalid(format!(
                "delta = {} must be >= 0",
                self.delta
            )));
        }
        if !(self.amplitude.0 > 0.0 && self.amplitude.0.is_finite()) {
            return Err(Error::invalid(format!(
                "amplitude = {} must be > 0",
                self.amplitude
            )));
        }
        if !(self.omega.0 > 0.0 && self.omega.0.is_finite()) {
            return Err(Error::invalid(format!(
                "omega = {} must be > 0",
                self.omega.0
            )));
        }
        if !(self.t2_ns > 0.0) {
            return Err(Error::invalid(format!(
                "t2 = {} ns must be > 0",
                self.t2_ns
            )));
        }
        Ok(())
    }

    /// Number of photons spanned by the drive, A / (hbar omega).
    pub fn photon_number(&self) -> f64 {
        self.amplitude.0 / self.omega.photon_energy().0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationState {
    pub p_g: f64,
    pub p_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirParams {
    /// Detuning of the (01)-(11) crossing.
    pub eps_hat: Energy,
    /// QD-reservoir relaxation time in ns.
    pub t_r_ns: f64,
}

impl ReservoirParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_r_ns > 0.0) {
            return Err(Error::invalid(format!(
                "T_R = {} ns must be > 0",
                self.t_r_ns
            )));
        }
        if !self.eps_hat.0.is_finite() {
            return Err(Error::invalid("eps_hat must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationParams {
    /// Charge relaxation time in ns.
    pub t1_ns: f64,
}

impl RelaxationParams {
    pub fn gamma1(&self) -> f64 {
        1.0 / self.t1_ns
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1_ns > 0.0 && self.t1_ns.is_finite()) {
            return Err(Error::invalid(format!(
                "T1 = {} ns must be > 0",
                self.t1_ns
            )));
        }
        Ok(())
    }
}

/// zeta = (2 hbar omega / A)^(1/3).
pub fn zeta(amplitude: Energy, omega: AngularFrequency) -> Result<f64> {
    if amplitude.0 == 0.0 {
        return Err(Error::DivisionByZero("drive amplitude A = 0"));
    }
    Ok((2.0 * omega.photon_energy().0 / amplitude.0).cbrt())
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Time spent after the first passage, t1 = 2 [pi - asin(eps0 / A)] / omega,
/// in ns. The arcsine argument is clamped to [-1, 1] outside the swept
/// region.
pub fn first_passage_time(eps0: Energy, amplitude: Energy, omega: AngularFrequency) -> f64 {
    let s = clamp_unit(eps0.0 / amplitude.0);
    2.0 * (PI - s.asin()) / omega.0
}

/// d t1 / d eps0 in ns/ueV; zero in the clamped region.
fn first_passage_time_slope(eps0: Energy, amplitude: Energy, omega: AngularFrequency) -> f64 {
    let s = eps0.0 / amplitude.0;
    if s.abs() >= 1.0 {
        return 0.0;
    }
    -2.0 / (omega.0 * amplitude.0 * (1.0 - s * s).sqrt())
}

/// Shared factors of the Airy-form rate. The rate is
/// `prefactor * ai^2 * decoherence`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryFactors {
    pub zeta: f64,
    /// pi Delta^2 zeta^2 / (2 hbar^2 omega), in 1/ns.
    pub prefactor: f64,
    /// Airy argument zeta (eps0 - A) / (hbar omega).
    pub u: f64,
    pub ai: f64,
    pub ai_prime: f64,
    /// exp(-t1 / T2).
    pub decoherence: f64,
    /// d u / d eps0 in 1/ueV.
    pub du_deps: f64,
    /// d t1 / d eps0 in ns/ueV.
    pub dt1_deps: f64,
}

impl AiryFactors {
    pub fn new(eps0: Energy, p: &RateParams) -> Result<Self> {
        let hw = p.omega.photon_energy().0;
        let zeta = zeta(p.amplitude, p.omega)?;
        let u = zeta * (eps0.0 - p.amplitude.0) / hw;
        let (ai, ai_prime) = airy(u);
        let t1 = first_passage_time(eps0, p.amplitude, p.omega);
        Ok(AiryFactors {
            zeta,
            prefactor: PI * p.delta.0 * p.delta.0 * zeta * zeta
                / (2.0 * HBAR_UEV_NS * HBAR_UEV_NS * p.omega.0),
            u,
            ai,
            ai_prime,
            decoherence: (-t1 / p.t2_ns).exp(),
            du_deps: zeta / hw,
            dt1_deps: first_passage_time_slope(eps0, p.amplitude, p.omega),
        })
    }

    pub fn rate(&self) -> f64 {
        self.prefactor * self.ai * self.ai * self.decoherence
    }

    /// d W / d eps0 in 1/(ns ueV), including the slope of the decoherence
    /// factor through t1.
    pub fn rate_slope(&self, t2_ns: f64) -> f64 {
        let d_airy = 2.0 * self.ai * self.ai_prime * self.du_deps;
        let d_decoh = -self.dt1_deps / t2_ns;
        self.prefactor * self.decoherence * (d_airy + self.ai * self.ai * d_decoh)
    }
}

/// LZSM rate in the Airy (large photon number) form, 1/ns.
pub fn lzsm_rate_airy(eps0: Energy, p: &RateParams) -> Result<f64> {
    p.validate()?;
    Ok(AiryFactors::new(eps0, p)?.rate())
}

/// Bessel-sum rate together with a bound on the truncated tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRate {
    pub rate: f64,
    /// Upper bound on the contribution of the omitted sidebands, 1/ns.
    pub tail_bound: f64,
    pub max_order: usize,
}

/// Squared Bessel weights J_n^2(A / hbar omega) for n = 0..=N, with the
/// default truncation N = ceil(A / hbar omega) + SIDEBAND_MARGIN.
pub fn sideband_weights(p: &RateParams) -> Result<Vec<f64>> {
    let z = p.photon_number();
    let nmax = z.ceil() as usize + SIDEBAND_MARGIN;
    Ok(bessel_j_all(nmax, z)?.into_iter().map(|j| j * j).collect())
}

/// Rate from the photon-sideband sum with Lorentzian lines of half-width
/// hbar / T2 centred at n hbar omega, 1/ns.
pub fn lzsm_rate_bessel_sum(eps0: Energy, p: &RateParams) -> Result<SeriesRate> {
    p.validate()?;
    let weights = sideband_weights(p)?;
    Ok(bessel_sum_with_weights(eps0, p, &weights))
}

pub(crate) fn bessel_sum_with_weights(eps0: Energy, p: &RateParams, weights: &[f64]) -> SeriesRate {
    let hw = p.omega.photon_energy().0;
    let width = HBAR_UEV_NS / p.t2_ns;
    let line = |n: f64| {
        let d = eps0.0 - n * hw;
        width / (d * d + width * width)
    };
    let mut sum = weights[0] * line(0.0);
    let mut captured = weights[0];
    for (n, &w) in weights.iter().enumerate().skip(1) {
        let nf = n as f64;
        sum += w * (line(nf) + line(-nf));
        captured += 2.0 * w;
    }
    let scale = p.delta.0 * p.delta.0 / (2.0 * HBAR_UEV_NS);
    SeriesRate {
        rate: scale * sum,
        tail_bound: scale * (1.0 - captured).max(0.0) / width,
        max_order: weights.len() - 1,
    }
}

/// Stationary occupation of the rate equation with upward rate W and
/// relaxation Gamma1: P_g = 1 - W / (2 W + Gamma1).
pub fn stationary_pg(w: f64, gamma1: f64) -> Result<OccupationState> {
    if !(w >= 0.0 && gamma1 >= 0.0) || !w.is_finite() || !gamma1.is_finite() {
        return Err(Error::invalid(format!(
            "rates must be finite and >= 0 (W = {w}, Gamma1 = {gamma1})"
        )));
    }
    if w == 0.0 && gamma1 == 0.0 {
        return Err(Error::Degenerate(
            "W = Gamma1 = 0: stationary state undefined".into(),
        ));
    }
    let p_e = w / (2.0 * w + gamma1);
    Ok(OccupationState {
        p_g: 1.0 - p_e,
        p_e,
    })
}

fn reservoir_argument(eps0: Energy, r: &ReservoirParams, amplitude: Energy) -> Result<f64> {
    let s = (r.eps_hat.0 - eps0.0) / amplitude.0;
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::Domain {
            eps0: eps0.0,
            reason: format!(
                "reservoir crossing unreachable: (eps_hat - eps0) / A = {s} outside [-1, 1]"
            ),
        });
    }
    Ok(s)
}

/// Probability of tunnelling to the reservoir during one cycle.
pub fn reservoir_prob(
    eps0: Energy,
    r: &ReservoirParams,
    amplitude: Energy,
    omega: AngularFrequency,
) -> Result<f64> {
    r.validate()?;
    let s = reservoir_argument(eps0, r, amplitude)?;
    let t_r = (PI - 2.0 * s.asin()) / omega.0;
    Ok(-(-t_r / r.t_r_ns).exp_m1())
}

fn reservoir_prob_slope(
    eps0: Energy,
    r: &ReservoirParams,
    amplitude: Energy,
    omega: AngularFrequency,
) -> Result<f64> {
    let s = reservoir_argument(eps0, r, amplitude)?;
    if s.abs() == 1.0 {
        return Err(Error::Domain {
            eps0: eps0.0,
            reason: "reservoir probability not differentiable at the edge of its domain".into(),
        });
    }
    let survive = 1.0 - reservoir_prob(eps0, r, amplitude, omega)?;
    Ok(survive * 2.0 / (r.t_r_ns * omega.0 * amplitude.0 * (1.0 - s * s).sqrt()))
}

/// Occupation of the (11) state after the double passage.
pub fn p11(
    eps0: Energy,
    p: &RateParams,
    rel: &RelaxationParams,
    r: &ReservoirParams,
) -> Result<f64> {
    p11_with(&crate::rate::AiryRate, eps0, p, rel, r)
}

/// [`p11`] with an explicit rate model.
pub fn p11_with(
    model: &dyn crate::rate::RateModel,
    eps0: Energy,
    p: &RateParams,
    rel: &RelaxationParams,
    r: &ReservoirParams,
) -> Result<f64> {
    rel.validate()?;
    let pr = reservoir_prob(eps0, r, p.amplitude, p.omega)?;
    let w = model.rate(eps0, p)?;
    Ok(pr * stationary_pg(w, rel.gamma1())?.p_g)
}

/// d P11 / d eps0 with both the reservoir and the rate term, 1/ueV.
pub fn dp11_deps_full(
    eps0: Energy,
    p: &RateParams,
    rel: &RelaxationParams,
    r: &ReservoirParams,
) -> Result<f64> {
    p.validate()?;
    rel.validate()?;
    let f = AiryFactors::new(eps0, p)?;
    let w = f.rate();
    let dw = f.rate_slope(p.t2_ns);
    let g1 = rel.gamma1();
    let pr = reservoir_prob(eps0, r, p.amplitude, p.omega)?;
    let dpr = reservoir_prob_slope(eps0, r, p.amplitude, p.omega)?;
    let denom = 2.0 * w + g1;
    Ok(dpr * (1.0 - w / denom) - pr * g1 * dw / (denom * denom))
}

/// Rate-term-only approximation, -P_R T1 W' / (1 + 2 W T1)^2, valid as
/// eps0 approaches the reservoir crossing.
pub fn dp11_deps_approx(
    eps0: Energy,
    p: &RateParams,
    rel: &RelaxationParams,
    r: &ReservoirParams,
) -> Result<f64> {
    p.validate()?;
    rel.validate()?;
    let f = AiryFactors::new(eps0, p)?;
    let w = f.rate();
    let dw = f.rate_slope(p.t2_ns);
    let pr = reservoir_prob(eps0, r, p.amplitude, p.omega)?;
    let t1 = rel.t1_ns;
    let d = 1.0 + 2.0 * w * t1;
    Ok(-pr * t1 * dw / (d * d))
}
