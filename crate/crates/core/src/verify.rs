//! Named cross-checks between production code and independent oracles.

use crate::dynamics::{
    dp11_deps_full, lzsm_rate_bessel_sum, p11, stationary_pg, AiryFactors, RelaxationParams,
};
use crate::error::{Error, Result};
use crate::oracle::{finite_difference, integrate_rate_equation, numeric_rate_integral};
use crate::params::ModelParams;
use crate::rate::RateModelRegistry;
use crate::specfun::{airy, bessel_j, bessel_j_all, BesselOrder};
use crate::units::{AngularFrequency, Energy};

/// Gamma(1/3) and Gamma(2/3).
const GAMMA_ONE_THIRD: f64 = 2.678_938_534_707_747_6;
const GAMMA_TWO_THIRDS: f64 = 1.354_117_939_426_400_4;

/// Window of reduced detuning on which the Airy and sideband rates are compared.
pub const RATE_WINDOW: (f64, f64) = (0.1, 0.95);
/// Smallest A / (hbar omega) at which the Airy rate is expected to hold.
pub const MIN_PHOTON_NUMBER: f64 = 10.0;

pub type AiryFn = fn(f64) -> (f64, f64);

/// Inputs shared by all checks. Swap `rates` entries or `airy` to inject faults.
pub struct VerifyContext {
    pub params: ModelParams,
    pub omega: AngularFrequency,
    pub rates: RateModelRegistry,
    pub airy: AiryFn,
}

impl Default for VerifyContext {
    fn default() -> Self {
        VerifyContext {
            params: ModelParams::device_defaults(),
            omega: AngularFrequency::from_ghz(11.0),
            rates: RateModelRegistry::with_builtin(),
            airy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Largest deviation found, in the check's own measure.
    pub error: f64,
    pub tolerance: f64,
    pub detail: String,
}

pub trait Check: Send + Sync {
    fn name(&self) -> &str;
    fn tolerance(&self) -> f64;
    /// Largest deviation and a short description of what was compared.
    fn measure(&self, ctx: &VerifyContext) -> Result<(f64, String)>;

    fn run(&self, ctx: &VerifyContext) -> CheckOutcome {
        let tol = self.tolerance();
        match self.measure(ctx) {
            Ok((err, detail)) => CheckOutcome {
                name: self.name().into(),
                passed: err <= tol,
                error: err,
                tolerance: tol,
                detail,
            },
            Err(e) => CheckOutcome {
                name: self.name().into(),
                passed: false,
                error: f64::NAN,
                tolerance: tol,
                detail: format!("error: {e}"),
            },
        }
    }
}

pub struct BesselNormalization;

impl Check for BesselNormalization {
    fn name(&self) -> &str {
        "bessel-normalization"
    }
    fn tolerance(&self) -> f64 {
        1e-10
    }
    fn measure(&self, _: &VerifyContext) -> Result<(f64, String)> {
        let mut worst: f64 = 0.0;
        for z in [1.0, 5.0, 20.0, 50.0, 100.0] {
            let j = bessel_j_all(z as usize + 60, z)?;
            let s = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
            worst = worst.max((s - 1.0).abs());
        }
        Ok((
            worst,
            "|sum_n J_n(z)^2 - 1| for z in {1, 5, 20, 50, 100}".into(),
        ))
    }
}

pub struct BesselRecurrence;

impl Check for BesselRecurrence {
    fn name(&self) -> &str {
        "bessel-recurrence"
    }
    fn tolerance(&self) -> f64 {
        1e-12
    }
    fn measure(&self, _: &VerifyContext) -> Result<(f64, String)> {
        let mut worst: f64 = 0.0;
        for z in [0.5, 7.0, 30.0, 120.0] {
            let j = bessel_j_all(z as usize + 60, z)?;
            let scale = j.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for n in 1..j.len() - 1 {
                let r = j[n - 1] + j[n + 1] - 2.0 * n as f64 / z * j[n];
                worst = worst.max(r.abs() / scale);
            }
        }
        Ok((
            worst,
            "J_(n-1) + J_(n+1) - 2n/z J_n, relative to max |J_n|".into(),
        ))
    }
}

pub struct AiryOrigin;

impl Check for AiryOrigin {
    fn name(&self) -> &str {
        "airy-origin"
    }
    fn tolerance(&self) -> f64 {
        1e-14
    }
    fn measure(&self, ctx: &VerifyContext) -> Result<(f64, String)> {
        let (ai, aip) = (ctx.airy)(0.0);
        let ai_want = 1.0 / (3f64.powf(2.0 / 3.0) * GAMMA_TWO_THIRDS);
        let aip_want = -1.0 / (3f64.cbrt() * GAMMA_ONE_THIRD);
        let err = ((ai - ai_want) / ai_want)
            .abs()
            .max(((aip - aip_want) / aip_want).abs());
        Ok((
            err,
            "Ai(0), Ai'(0) against their Gamma-function values".into(),
        ))
    }
}

pub struct AiryEquation;

impl Check for AiryEquation {
    fn name(&self) -> &str {
        "airy-ode"
    }
    fn tolerance(&self) -> f64 {
        1e-6
    }
    fn measure(&self, ctx: &VerifyContext) -> Result<(f64, String)> {
        let h = 3e-4;
        let mut worst: f64 = 0.0;
        for i in 0..=400 {
            let x = -12.0 + 20.0 * i as f64 / 400.0;
            let second = ((ctx.airy)(x + h).1 - (ctx.airy)(x - h).1) / (2.0 * h);
            let first = ((ctx.airy)(x + h).0 - (ctx.airy)(x - h).0) / (2.0 * h);
            let (ai, aip) = (ctx.airy)(x);
            worst = worst.max((second - x * ai).abs()).max((first - aip).abs());
        }
        Ok((
            worst,
            "Ai'' = x Ai and d Ai/dx = Ai' by centred differences on [-12, 8]".into(),
        ))
    }
}

/// Zeros of Ai in [lo, hi] (lo < hi <= 0), in increasing order.
fn airy_zeros(f: AiryFn, lo: f64, hi: f64) -> Vec<f64> {
    let n = ((hi - lo) * 200.0).ceil() as usize + 1;
    let mut out = Vec::new();
    let mut prev = (lo, f(lo).0);
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let v = f(x).0;
        if prev.1 != 0.0 && prev.1.signum() != v.signum() {
            let (mut a, mut b) = (prev.0, x);
            let fa_sign = prev.1.signum();
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if f(m).0.signum() == fa_sign {
                    a = m;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
        prev = (x, v);
    }
    out
}

/// True if `u` lies closer than a quarter of the local zero spacing to a zero of Ai.
fn near_airy_zero(u: f64, zeros: &[f64]) -> bool {
    if zeros.len() < 2 {
        return false;
    }
    let k = zeros.partition_point(|&z| z < u).clamp(1, zeros.len() - 1);
    let (a, b) = (zeros[k - 1], zeros[k]);
    let d = (u - a).abs().min((b - u).abs());
    d < 0.25 * (b - a)
}

pub struct AiryVsSidebandRate;

impl Check for AiryVsSidebandRate {
    fn name(&self) -> &str {
        "airy-vs-bessel-rate"
    }
    fn tolerance(&self) -> f64 {
        0.05
    }
    fn measure(&self, ctx: &VerifyContext) -> Result<(f64, String)> {
        let p = ctx.params.rate_params(ctx.omega)?;
        if p.photon_number() < MIN_PHOTON_NUMBER {
            return Err(Error::invalid(format!(
                "A / hbar omega = {:.2} is below {MIN_PHOTON_NUMBER}",
                p.photon_number()
            )));
        }
        let airy_model = ctx.rates.get("airy")?;
        let a = p.amplitude.0;
        let u_of = |x: f64| -> Result<f64> { Ok(AiryFactors::new(Energy(x * a), &p)?.u) };
        let (u_lo, u_hi) = (u_of(RATE_WINDOW.0)?, u_of(RATE_WINDOW.1)?);
        let zeros = airy_zeros(ctx.airy, u_lo - 2.0, u_hi.min(-1.0) + 0.5);
        let mut worst: f64 = 0.0;
        let mut compared = 0;
        for i in 0..=400 {
            let x = RATE_WINDOW.0 + (RATE_WINDOW.1 - RATE_WINDOW.0) * i as f64 / 400.0;
            if near_airy_zero(u_of(x)?, &zeros) {
                continue;
            }
            let e = Energy(x * a);
            let w_airy = airy_model.rate(e, &p)?;
            let w_sum = lzsm_rate_bessel_sum(e, &p)?.rate;
            worst = worst.max((w_airy - w_sum).abs() / w_sum.abs());
            compared += 1;
        }
        Ok((
            worst,
            format!(
                "max relative gap over {compared} points, eps0/A in [{}, {}], A/hbar omega = {:.1}",
                RATE_WINDOW.0,
                RATE_WINDOW.1,
                p.photon_number()
            ),
        ))
    }
}

/// Turning-point form J_n(n + t n^(1/3)) ~ (2/n)^(1/3) Ai(-2^(1/3) t),
/// the large-order limit behind the Airy rate.
pub struct BesselTurningPoint;

impl Check for BesselTurningPoint {
    fn name(&self) -> &str {
        "bessel-airy-turning-point"
    }
    fn tolerance(&self) -> f64 {
        // the first correction is n^(-2/3) times a coefficient that is about 2
        // at |t| = 3; the scaled error converges to that value as n grows
        3.0
    }
    fn measure(&self, ctx: &VerifyContext) -> Result<(f64, String)> {
        // error measured in units of n^(-2/3)
        let mut worst: f64 = 0.0;
        for n in [100i64, 1000, 10_000] {
            let nf = n as f64;
            let c = (2.0 / nf).cbrt();
            for i in 0..=60 {
                let t = -3.0 + 6.0 * i as f64 / 60.0;
                let z = nf + t * nf.cbrt();
                let j = bessel_j(BesselOrder::new(n)?, z)?;
                let approx = c * (ctx.airy)(-(2f64.cbrt()) * t).0;
                worst = worst.max((j - approx).abs() / c * nf.powf(2.0 / 3.0));
            }
        }
        Ok((
            worst,
            "|J_n - turning-point Airy form| / (2/n)^(1/3) * n^(2/3), n in {100, 1000, 10000}"
                .into(),
        ))
    }
}

pub struct OdeVsStationary;

impl Check for OdeVsStationary {
    fn name(&self) -> &str {
        "ode-vs-stationary"
    }
    fn tolerance(&self) -> f64 {
        1e-8
    }
    fn measure(&self, ctx: &VerifyContext) -> Result<(f64, String)> {
        let p = ctx.params.rate_params(ctx.omega)?;
        let g1 = ctx.params.relaxation().gamma1();
        let model = ctx.rates.get("airy")?;
        let mut worst: f64 = 0.0;
        for x in [0.2, 0.5, 0.8, 0.99, 1.1] {
            let w = model.rate(Energy(x * p.amplitude.0), &p)?;
            let t_end = 100.0 / (2.0 * w + g1);
            let ode = integrate_rate_equation(w, g1, 1.0, t_end)?;
            let want = stationary_pg(w, g1)?.p_g;
            worst = worst.max((ode.final_state.p_g - want).abs());
        }
        Ok((
            worst,
            "RK4 final P_g after 100 relaxation times vs the stationary value".into(),
        ))
    }
}

pub struct DerivativeVsDifference;

impl Check for DerivativeVsDifference {
    fn name(&self) -> &str {
        "fd-vs-closed-form"
    }
    fn tolerance(&self) -> f64 {
        1e-6
    }
    fn measure(&self, ctx: &VerifyContext) -> Result<(f64, String)> {
        let p = ctx.params.rate_params(ctx.omega)?;
        let rel: RelaxationParams = ctx.params.relaxation();
        let r = ctx.params.reservoir();
        let f = |x: f64| p11(Energy(x), &p, &rel, &r);
        let h = 1e-3;
        let a = ctx.params.eps_hat.0;
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        for i in 0..200 {
            let e = a * (0.02 + 0.96 * i as f64 / 199.0);
            let exact = dp11_deps_full(Energy(e), &p, &rel, &r)?;
            let fd = finite_difference(f, e, h)?;
            let curvature =
                (finite_difference(f, e + 0.05, h)? - finite_difference(f, e - 0.05, h)?).abs()
                    / 0.1;
            if exact.abs() < 1e-3 * curvature.max(1e-12) {
                continue;
            }
            checked += 1;
            worst = worst.max((fd - exact).abs() / exact.abs());
        }
        Ok((
            worst,
            format!("relative gap at {checked} points away from stationary points"),
        ))
    }
}

pub struct QuadratureVsSidebandSum;

impl Check for QuadratureVsSidebandSum {
    fn name(&self) -> &str {
        "quadrature-vs-bessel-sum"
    }
    fn tolerance(&self) -> f64 {
        1e-6
    }
    fn measure(&self, ctx: &VerifyContext) -> Result<(f64, String)> {
        let p = ctx.params.rate_params(ctx.omega)?;
        let mut worst: f64 = 0.0;
        for x in [0.13, 0.5, 0.87, 1.05] {
            let e = Energy(x * p.amplitude.0);
            let q = numeric_rate_integral(e, &p, 40.0 * p.t2_ns)?.rate;
            let s = lzsm_rate_bessel_sum(e, &p)?.rate;
            worst = worst.max((q - s).abs() / s.abs());
        }
        Ok((
            worst,
            "time-domain quadrature vs photon-sideband sum".into(),
        ))
    }
}

pub struct CheckRegistry {
    checks: Vec<Box<dyn Check>>,
}

impl Default for CheckRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

impl CheckRegistry {
    pub fn empty() -> Self {
        CheckRegistry { checks: Vec::new() }
    }

    pub fn with_builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(BesselNormalization));
        r.register(Box::new(BesselRecurrence));
        r.register(Box::new(AiryOrigin));
        r.register(Box::new(AiryEquation));
        r.register(Box::new(BesselTurningPoint));
        r.register(Box::new(AiryVsSidebandRate));
        r.register(Box::new(QuadratureVsSidebandSum));
        r.register(Box::new(OdeVsStationary));
        r.register(Box::new(DerivativeVsDifference));
        r
    }

    /// Appends a check, replacing any existing one with the same name in place.
    pub fn register(&mut self, c: Box<dyn Check>) {
        match self.checks.iter().position(|x| x.name() == c.name()) {
            Some(i) => self.checks[i] = c,
            None => self.checks.push(c),
        }
    }

    pub fn names(&self) -> Vec<&str> {
        self.checks.iter().map(|c| c.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn Check> {
        self.checks
            .iter()
            .find(|c| c.name() == name)
            .map(|c| c.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "check",
                name: name.into(),
                available: self.names().join(", "),
            })
    }

    pub fn run_all(&self, ctx: &VerifyContext) -> Vec<CheckOutcome> {
        self.checks
            .iter()
            .map(|c| {
                let out = c.run(ctx);
                log::info!("{} {}", out.name, if out.passed { "pass" } else { "FAIL" });
                out
            })
            .collect()
    }
}
