//! Brute-force validators. These deliberately use different machinery from
//! the closed forms they check: time-domain quadrature instead of the
//! Lorentzian sum, an ODE integrator instead of the stationary formula and
//! finite differences instead of analytic derivatives.

use crate::dynamics::{sideband_weights, stationary_pg, OccupationState, RateParams};
use crate::error::{Error, Result};
use crate::rate::RateModel;
use crate::units::{Energy, HBAR_UEV_NS};

/// Hard cap on integrator steps.
pub const MAX_ODE_STEPS: u64 = 100_000_000;

const MAX_STORED_SAMPLES: usize = 10_000;

#[derive(Debug, Clone)]
pub struct OdeResult {
    pub times: Vec<f64>,
    pub p_g: Vec<f64>,
    pub final_state: OccupationState,
    pub steps: u64,
    /// Largest |p_g + p_e - 1| seen over all steps.
    pub max_norm_drift: f64,
}

/// Integrates dP_g/dt = (W + Gamma1) P_e - W P_g, dP_e/dt = -dP_g/dt with
/// fixed-step RK4, carrying both populations.
pub fn integrate_rate_equation(w: f64, gamma1: f64, p_g0: f64, t_end: f64) -> Result<OdeResult> {
    if !(w >= 0.0 && gamma1 >= 0.0) {
        return Err(Error::invalid("rates must be >= 0"));
    }
    if !(0.0..=1.0).contains(&p_g0) {
        return Err(Error::invalid(format!("p_g0 = {p_g0} outside [0, 1]")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::invalid("t_end must be finite and >= 0"));
    }
    let k = 2.0 * w + gamma1;
    let h_max = if k > 0.0 { 0.01 / k } else { t_end.max(1.0) };
    let steps = if t_end == 0.0 {
        0.0
    } else {
        (t_end / h_max).ceil().max(1.0)
    };
    if steps > MAX_ODE_STEPS as f64 {
        return Err(Error::Resource(format!(
            "{steps} integrator steps exceed {MAX_ODE_STEPS}"
        )));
    }
    let steps = steps as u64;
    let h = if steps > 0 { t_end / steps as f64 } else { 0.0 };
    let stride = (steps / MAX_STORED_SAMPLES as u64).max(1);

    let rhs = |g: f64, e: f64| {
        let flow = (w + gamma1) * e - w * g;
        (flow, -flow)
    };
    let (mut g, mut e) = (p_g0, 1.0 - p_g0);
    let mut times = vec![0.0];
    let mut traj = vec![g];
    let mut drift: f64 = 0.0;
    for i in 1..=steps {
        let (k1g, k1e) = rhs(g, e);
        let (k2g, k2e) = rhs(g + 0.5 * h * k1g, e + 0.5 * h * k1e);
        let (k3g, k3e) = rhs(g + 0.5 * h * k2g, e + 0.5 * h * k2e);
        let (k4g, k4e) = rhs(g + h * k3g, e + h * k3e);
        g += h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
        e += h / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e);
        drift = drift.max((g + e - 1.0).abs());
        if i % stride == 0 || i == steps {
            times.push(i as f64 * h);
            traj.push(g);
        }
    }
    Ok(OdeResult {
        times,
        p_g: traj,
        final_state: OccupationState { p_g: g, p_e: e },
        steps,
        max_norm_drift: drift,
    })
}

/// Closed-form solution of the same linear ODE.
pub fn analytic_rate_solution(w: f64, gamma1: f64, p_g0: f64, t: f64) -> Result<f64> {
    let inf = stationary_pg(w, gamma1)?.p_g;
    Ok(inf + (p_g0 - inf) * (-(2.0 * w + gamma1) * t).exp())
}

/// Time-domain quadrature result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub rate: f64,
    /// Bound on the part of the integral beyond t_max, 1/ns.
    pub tail_bound: f64,
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut wts = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        wts[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, wts)
}

/// W = Delta^2 / (2 hbar^2) * int_0^t_max e^{-t/T2} sum_n J_n^2 cos((eps0 - n hbar w) t / hbar) dt
/// by composite Gauss-Legendre quadrature.
pub fn numeric_rate_integral(eps0: Energy, p: &RateParams, t_max: f64) -> Result<QuadratureResult> {
    p.validate()?;
    if !(t_max >= 20.0 * p.t2_ns) {
        return Err(Error::invalid(format!(
            "t_max = {t_max} ns shorter than 20 T2 = {} ns",
            20.0 * p.t2_ns
        )));
    }
    let weights = sideband_weights(p)?;
    let hw = p.omega.photon_energy().0;
    let nmax = weights.len() as f64;
    // fastest angular frequency present, rad/ns
    let fastest = (eps0.0.abs() + nmax * hw) / HBAR_UEV_NS + 1.0 / p.t2_ns;
    let panel = 2.0 / fastest;
    let panels = (t_max / panel).ceil() as usize;
    let panel = t_max / panels as f64;
    let (nodes, node_w) = gauss_legendre(12);

    let mut integral = 0.0;
    for k in 0..panels {
        let a = k as f64 * panel;
        for (x, wq) in nodes.iter().zip(&node_w) {
            let t = a + 0.5 * panel * (x + 1.0);
            let mut s = weights[0] * (eps0.0 * t / HBAR_UEV_NS).cos();
            for (n, &jn2) in weights.iter().enumerate().skip(1) {
                let nf = n as f64 * hw;
                s += jn2
                    * (((eps0.0 - nf) * t / HBAR_UEV_NS).cos()
                        + ((eps0.0 + nf) * t / HBAR_UEV_NS).cos());
            }
            integral += 0.5 * panel * wq * (-t / p.t2_ns).exp() * s;
        }
    }
    let scale = p.delta.0 * p.delta.0 / (2.0 * HBAR_UEV_NS * HBAR_UEV_NS);
    Ok(QuadratureResult {
        rate: scale * integral,
        tail_bound: scale * p.t2_ns * (-t_max / p.t2_ns).exp(),
    })
}

/// Quadrature oracle as a rate model.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureRate {
    /// Integration window in units of T2.
    pub window_t2: f64,
}

impl Default for QuadratureRate {
    fn default() -> Self {
        QuadratureRate { window_t2: 40.0 }
    }
}

impl RateModel for QuadratureRate {
    fn name(&self) -> &str {
        "quadrature"
    }

    fn rate(&self, eps0: Energy, p: &RateParams) -> Result<f64> {
        Ok(numeric_rate_integral(eps0, p, self.window_t2 * p.t2_ns)?.rate)
    }
}

/// Centred difference (f(x + h) - f(x - h)) / 2h.
pub fn finite_difference<F>(f: F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::invalid(format!("step h = {h} must be > 0")));
    }
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// One Richardson step over h and h/2.
pub fn finite_difference_richardson<F>(f: F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let coarse = finite_difference(&f, x, h)?;
    let fine = finite_difference(&f, x, 0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{
        dp11_deps_full, lzsm_rate_bessel_sum, p11, RelaxationParams, ReservoirParams,
    };
    use crate::units::AngularFrequency;

    #[test]
    fn relaxation_only_trajectory() {
        let g1 = 0.02;
        let r = integrate_rate_equation(0.0, g1, 0.3, 100.0 * 50.0).unwrap();
        for (t, pg) in r.times.iter().zip(&r.p_g) {
            let want = 1.0 - 0.7 * (-g1 * t).exp();
            assert!((pg - want).abs() < 1e-10, "t = {t}");
        }
        assert!((r.final_state.p_g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_stays_put() {
        let (w, g1) = (0.3, 0.02);
        let pg = stationary_pg(w, g1).unwrap().p_g;
        let r = integrate_rate_equation(w, g1, pg, 200.0).unwrap();
        for v in &r.p_g {
            assert!((v - pg).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_rates_relax_to_two_thirds() {
        let r = integrate_rate_equation(0.02, 0.02, 0.0, 100.0 * 50.0).unwrap();
        assert!((r.final_state.p_g - 2.0 / 3.0).abs() < 1e-8);
        assert!(r.max_norm_drift < 1e-12);
    }

    #[test]
    fn numeric_and_analytic_trajectories_agree() {
        let (w, g1) = (0.07, 0.02);
        let r = integrate_rate_equation(w, g1, 0.9, 300.0).unwrap();
        for (t, pg) in r.times.iter().zip(&r.p_g) {
            let a = analytic_rate_solution(w, g1, 0.9, *t).unwrap();
            assert!((pg - a).abs() < 1e-10);
        }
    }

    #[test]
    fn integrator_step_cap() {
        assert!(matches!(
            integrate_rate_equation(1e6, 0.0, 0.5, 1e6),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((int - 2.0 / 23.0).abs() < 1e-14);
    }

    fn rate_params(delta: f64, amp: f64) -> RateParams {
        RateParams::new(
            Energy(delta),
            Energy(amp),
            AngularFrequency::from_ghz(11.0),
            0.035,
        )
        .unwrap()
    }

    #[test]
    fn quadrature_without_coupling_is_zero() {
        let q = numeric_rate_integral(Energy(100.0), &rate_params(0.0, 1350.0), 0.8).unwrap();
        assert_eq!(q.rate, 0.0);
    }

    #[test]
    fn quadrature_single_sideband_is_lorentzian() {
        let p = rate_params(5.0, 1e-9);
        let gamma = HBAR_UEV_NS / p.t2_ns;
        for eps in [0.0, 12.0, -40.0] {
            let q = numeric_rate_integral(Energy(eps), &p, 60.0 * p.t2_ns).unwrap();
            let want = 25.0 / (2.0 * HBAR_UEV_NS) * gamma / (eps * eps + gamma * gamma);
            assert!((q.rate - want).abs() < 1e-7 * want, "{} vs {want}", q.rate);
        }
    }

    #[test]
    fn quadrature_matches_sideband_sum() {
        let p = rate_params(5.0, 1350.0);
        for x in [0.2, 0.5, 0.83] {
            let e = Energy(x * 1350.0);
            let q = numeric_rate_integral(e, &p, 40.0 * p.t2_ns).unwrap();
            let s = lzsm_rate_bessel_sum(e, &p).unwrap().rate;
            assert!((q.rate - s).abs() < 1e-6 * s, "x = {x}: {} vs {s}", q.rate);
            assert!(q.tail_bound < 1e-6 * s);
        }
    }

    #[test]
    fn quadrature_converges_in_window() {
        let p = rate_params(5.0, 1350.0);
        let e = Energy(0.4 * 1350.0);
        let s = lzsm_rate_bessel_sum(e, &p).unwrap().rate;
        let errs: Vec<f64> = [20.0, 25.0, 30.0, 40.0]
            .iter()
            .map(|m| (numeric_rate_integral(e, &p, m * p.t2_ns).unwrap().rate - s).abs())
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0] || w[1] < 1e-12 * s);
        }
        assert!(numeric_rate_integral(e, &p, 10.0 * p.t2_ns).is_err());
    }

    #[test]
    fn finite_difference_basics() {
        let id = finite_difference(|x| Ok(x), 2.0, 0.25).unwrap();
        assert_eq!(id, 1.0);
        let sq = finite_difference(|x| Ok(x * x), 3.0, 1e-3).unwrap();
        assert!((sq - 6.0).abs() < 1e-9);
        let cube = finite_difference_richardson(|x| Ok(x * x * x), 2.0, 1e-2).unwrap();
        assert!((cube - 12.0).abs() < 1e-9);
        assert!(finite_difference(|x| Ok(x), 0.0, 0.0).is_err());
    }

    #[test]
    fn finite_difference_checks_p11_slope() {
        let p = rate_params(5.0, 1350.0);
        let rel = RelaxationParams { t1_ns: 50.0 };
        let r = ReservoirParams {
            eps_hat: Energy(1350.0),
            t_r_ns: 0.030,
        };
        let e = 0.5 * 1350.0;
        let fd = finite_difference(|x| p11(Energy(x), &p, &rel, &r), e, 1e-3).unwrap();
        let exact = dp11_deps_full(Energy(e), &p, &rel, &r).unwrap();
        assert!((fd - exact).abs() < 1e-6 * exact.abs(), "{fd} vs {exact}");
    }
}
