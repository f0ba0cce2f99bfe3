//! Interchangeable LZSM rate models, looked up by name.

use std::collections::BTreeMap;
use std::fmt;

use crate::dynamics::{lzsm_rate_airy, lzsm_rate_bessel_sum, RateParams};
use crate::error::{Error, Result};
use crate::units::Energy;

pub trait RateModel: Send + Sync {
    fn name(&self) -> &str;

    /// Transition rate W(eps0) in 1/ns.
    fn rate(&self, eps0: Energy, p: &RateParams) -> Result<f64>;
}

impl fmt::Debug for dyn RateModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RateModel({})", self.name())
    }
}

/// Closed-form Airy rate with the exp(-t1/T2) decoherence factor.
#[derive(Debug, Default, Clone, Copy)]
pub struct AiryRate;

impl RateModel for AiryRate {
    fn name(&self) -> &str {
        "airy"
    }

    fn rate(&self, eps0: Energy, p: &RateParams) -> Result<f64> {
        lzsm_rate_airy(eps0, p)
    }
}

/// Photon-sideband sum over squared Bessel weights.
#[derive(Debug, Default, Clone, Copy)]
pub struct BesselSumRate;

impl RateModel for BesselSumRate {
    fn name(&self) -> &str {
        "bessel-sum"
    }

    fn rate(&self, eps0: Energy, p: &RateParams) -> Result<f64> {
        Ok(lzsm_rate_bessel_sum(eps0, p)?.rate)
    }
}

pub struct RateModelRegistry {
    models: BTreeMap<String, Box<dyn RateModel>>,
}

impl Default for RateModelRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

impl RateModelRegistry {
    pub fn empty() -> Self {
        RateModelRegistry {
            models: BTreeMap::new(),
        }
    }

    /// Airy, Bessel-sum and the quadrature oracle.
    pub fn with_builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(AiryRate));
        r.register(Box::new(BesselSumRate));
        r.register(Box::new(crate::oracle::QuadratureRate::default()));
        r
    }

    /// Adds or replaces a model under its own name.
    pub fn register(&mut self, model: Box<dyn RateModel>) {
        self.models.insert(model.name().to_string(), model);
    }

    pub fn get(&self, name: &str) -> Result<&dyn RateModel> {
        self.models
            .get(name)
            .map(|m| m.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "rate model",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&str> {
        self.models.keys().map(String::as_str).collect()
    }
}
