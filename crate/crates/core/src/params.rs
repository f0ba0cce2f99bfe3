use std::fmt;
use std::str::FromStr;

use crate::capacitance::{CircuitParams, GateCouplings};
use crate::dynamics::{RateParams, RelaxationParams, ReservoirParams};
use crate::error::{Error, Result};
use crate::units::{AngularFrequency, Energy, Voltage};

/// Which reservoir-exchange cycle the drive performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Branch {
    /// (01)-(11) exchange, reservoir crossing at +eps_hat.
    #[default]
    ZeroOneOneOne,
    /// (00)-(10) exchange, reservoir crossing at -eps_hat.
    ZeroZeroOneZero,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::ZeroOneOneOne => "01-11",
            Branch::ZeroZeroOneZero => "00-10",
        }
    }

    /// Maps a detuning onto the equivalent point of the (01)-(11) cycle.
    /// The (00)-(10) cycle is its mirror image about eps = 0.
    pub fn canonical_detuning(self, eps0: Energy) -> Energy {
        match self {
            Branch::ZeroOneOneOne => eps0,
            Branch::ZeroZeroOneZero => Energy(-eps0.0),
        }
    }

    pub fn mirrored(self) -> Branch {
        match self {
            Branch::ZeroOneOneOne => Branch::ZeroZeroOneZero,
            Branch::ZeroZeroOneZero => Branch::ZeroOneOneOne,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "01-11" | "(01)-(11)" => Ok(Branch::ZeroOneOneOne),
            "00-10" | "(00)-(10)" => Ok(Branch::ZeroZeroOneZero),
            other => Err(Error::invalid(format!(
                "unknown branch `{other}` (expected 01-11 or 00-10)"
            ))),
        }
    }
}

/// Everything the capacitance model needs apart from the drive frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub delta: Energy,
    pub amplitude: Energy,
    pub eps_hat: Energy,
    pub couplings: GateCouplings,
    /// Anticrossing top-gate voltage V_TG^0.
    pub v0: Voltage,
    pub circuit: CircuitParams,
    pub t1_ns: f64,
    pub t2_ns: f64,
    pub t_r_ns: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams::device_defaults()
    }
}

impl ModelParams {
    /// Fitted device values (T1 = 50 ns, T2 = 35 ps, T_R = 30 ps,
    /// alpha_minus = 0.06, A = eps_hat = 1.35 meV, V_TG^0 = 0.475 V) with a
    /// 5 ueV tunnel coupling.
    pub fn device_defaults() -> Self {
        ModelParams {
            delta: Energy(5.0),
            amplitude: Energy::from_mev(1.35),
            eps_hat: Energy::from_mev(1.35),
            couplings: GateCouplings::new(0.40, 0.52).expect("valid default couplings"),
            v0: Voltage(0.475),
            circuit: CircuitParams::default(),
            t1_ns: 50.0,
            t2_ns: 0.035,
            t_r_ns: 0.030,
        }
    }

    pub fn rate_params(&self, omega: AngularFrequency) -> Result<RateParams> {
        RateParams::new(self.delta, self.amplitude, omega, self.t2_ns)
    }

    pub fn relaxation(&self) -> RelaxationParams {
        RelaxationParams { t1_ns: self.t1_ns }
    }

    pub fn reservoir(&self) -> ReservoirParams {
        ReservoirParams {
            eps_hat: self.eps_hat,
            t_r_ns: self.t_r_ns,
        }
    }

    pub fn alpha_minus(&self) -> f64 {
        self.couplings.alpha_minus()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("t1_ns", self.t1_ns),
            ("t2_ps", self.t2_ns),
            ("tr_ps", self.t_r_ns),
            ("a_mev", self.amplitude.0),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invariant {
                    key: key.into(),
                    bound: format!("must be > 0 (got {v})"),
                });
            }
        }
        if !(self.delta.0 >= 0.0 && self.delta.0.is_finite()) {
            return Err(Error::Invariant {
                key: "delta_uev".into(),
                bound: format!("must be >= 0 (got {})", self.delta.0),
            });
        }
        if self.eps_hat.0.abs() > self.amplitude.0 {
            log::warn!(
                "|eps_hat| = {} exceeds A = {}: the drive never reaches the reservoir crossing at eps0 = 0",
                self.eps_hat,
                self.amplitude
            );
        }
        self.couplings.validate()?;
        self.circuit.validate()?;
        Ok(())
    }
}
