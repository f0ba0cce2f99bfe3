//! Unit system and physical constants.
//!
//! Energies are carried in micro-electron-volts, times in nanoseconds,
//! angular frequencies in rad/ns and voltages in volts. Capacitances leave
//! the model in farads.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Reduced Planck constant in ueV ns.
pub const HBAR_UEV_NS: f64 = 0.658_211_956_9;

/// Elementary charge in coulombs.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Volts per (ueV / e).
pub const VOLTS_PER_UEV: f64 = 1e-6;

pub fn hbar() -> f64 {
    HBAR_UEV_NS
}

/// Energy in ueV.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Energy(pub f64);

impl Energy {
    pub fn from_mev(mev: f64) -> Self {
        Energy(mev * 1e3)
    }

    pub fn uev(self) -> f64 {
        self.0
    }

    pub fn mev(self) -> f64 {
        self.0 * 1e-3
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ueV", self.0)
    }
}

/// Angular frequency in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AngularFrequency(pub f64);

impl AngularFrequency {
    /// From an ordinary frequency in GHz (omega = 2 pi f).
    pub fn from_ghz(f_ghz: f64) -> Self {
        AngularFrequency(2.0 * PI * f_ghz)
    }

    pub fn rad_per_ns(self) -> f64 {
        self.0
    }

    pub fn ghz(self) -> f64 {
        self.0 / (2.0 * PI)
    }

    /// Photon energy hbar * omega.
    pub fn photon_energy(self) -> Energy {
        Energy(HBAR_UEV_NS * self.0)
    }
}

/// Voltage in volts.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Voltage(pub f64);

impl Voltage {
    pub fn volts(self) -> f64 {
        self.0
    }
}

fn check_alpha_minus(alpha_minus: f64) -> Result<()> {
    if alpha_minus == 0.0 {
        return Err(Error::DivisionByZero("alpha_minus = 0"));
    }
    if !(alpha_minus > 0.0 && alpha_minus < 1.0) {
        return Err(Error::invalid(format!(
            "alpha_minus = {alpha_minus} outside (0, 1)"
        )));
    }
    Ok(())
}

/// Detuning induced by the top gate: eps = -2 e alpha_minus (V - V0).
pub fn detuning_from_voltage(v: Voltage, alpha_minus: f64, v0: Voltage) -> Result<Energy> {
    if !v.0.is_finite() || !v0.0.is_finite() || !alpha_minus.is_finite() {
        return Err(Error::invalid("non-finite voltage or coupling"));
    }
    check_alpha_minus(alpha_minus)?;
    Ok(Energy(-2.0 * alpha_minus * (v.0 - v0.0) / VOLTS_PER_UEV))
}

/// Inverse of [`detuning_from_voltage`].
pub fn voltage_from_detuning(eps: Energy, alpha_minus: f64, v0: Voltage) -> Result<Voltage> {
    if !eps.0.is_finite() || !v0.0.is_finite() || !alpha_minus.is_finite() {
        return Err(Error::invalid("non-finite detuning or coupling"));
    }
    check_alpha_minus(alpha_minus)?;
    Ok(Voltage(v0.0 - eps.0 * VOLTS_PER_UEV / (2.0 * alpha_minus)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_offset_maps_to_zero_detuning() {
        let e = detuning_from_voltage(Voltage(0.475), 0.06, Voltage(0.475)).unwrap();
        assert_eq!(e.uev(), 0.0);
    }

    #[test]
    fn one_millivolt_below_anticrossing_is_120_uev() {
        let e = detuning_from_voltage(Voltage(0.474), 0.06, Voltage(0.475)).unwrap();
        assert!((e.uev() - 120.0).abs() < 1e-9, "{e}");
        let v = voltage_from_detuning(Energy(120.0), 0.06, Voltage(0.475)).unwrap();
        assert!((v.volts() - 0.474).abs() < 1e-15);
        let v = voltage_from_detuning(Energy(0.0), 0.06, Voltage(0.475)).unwrap();
        assert_eq!(v.volts(), 0.475);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            detuning_from_voltage(Voltage(f64::NAN), 0.06, Voltage(0.475)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            voltage_from_detuning(Energy(1.0), 0.0, Voltage(0.475)),
            Err(Error::DivisionByZero(_))
        ));
        assert!(detuning_from_voltage(Voltage(0.4), 1.5, Voltage(0.475)).is_err());
    }

    #[test]
    fn photon_energy_at_11_ghz() {
        let hw = AngularFrequency::from_ghz(11.0).photon_energy().uev();
        assert!((hw - 0.658_211_956_9 * 2.0 * PI * 11.0).abs() < 1e-12);
        assert!((hw - 45.5).abs() < 0.05);
        let hw2 = AngularFrequency::from_ghz(22.0).photon_energy().uev();
        assert!((hw2 - 2.0 * hw).abs() < 1e-12);
        assert_eq!(AngularFrequency(1.0).photon_energy().uev(), hbar());
    }

    proptest! {
        #[test]
        fn round_trip_identity(v in 0.0f64..2.0, am in 0.001f64..0.999, v0 in 0.1f64..1.0) {
            let e = detuning_from_voltage(Voltage(v), am, Voltage(v0)).unwrap();
            let back = voltage_from_detuning(e, am, Voltage(v0)).unwrap();
            prop_assert!((back.volts() - v).abs() <= 1e-12 * v.abs().max(v0.abs()));
        }

        #[test]
        fn antisymmetric_about_anticrossing(x in -0.1f64..0.1, am in 0.01f64..0.5) {
            let v0 = 0.475;
            let up = detuning_from_voltage(Voltage(v0 + x), am, Voltage(v0)).unwrap().uev();
            let dn = detuning_from_voltage(Voltage(v0 - x), am, Voltage(v0)).unwrap().uev();
            prop_assert!((up + dn).abs() <= 1e-9 * up.abs().max(1.0));
        }

        #[test]
        fn strictly_decreasing_in_voltage(v in 0.0f64..1.0, dv in 1e-6f64..0.1) {
            let a = detuning_from_voltage(Voltage(v), 0.06, Voltage(0.475)).unwrap().uev();
            let b = detuning_from_voltage(Voltage(v + dv), 0.06, Voltage(0.475)).unwrap().uev();
            prop_assert!(b < a);
        }
    }
}
