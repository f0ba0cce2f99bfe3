//! Least-squares extraction of model parameters from normalised traces.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::analysis::optimize::{grid_scan, log_axis, nelder_mead, SimplexOptions};
use crate::analysis::p2p::{AmplitudePoint, DEFAULT_P2P_WINDOW};
use crate::capacitance::GateCouplings;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::sweep::{evaluate_on_axis, linspace, AxisKind, Trace, ValueUnit};
use crate::units::Energy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FitParam {
    T1,
    T2,
    TR,
    AlphaMinus,
    Delta,
    AlphaPlus,
}

impl FitParam {
    pub const ALL: [FitParam; 6] = [
        FitParam::T1,
        FitParam::T2,
        FitParam::TR,
        FitParam::AlphaMinus,
        FitParam::Delta,
        FitParam::AlphaPlus,
    ];

    /// Config/report key, with its display unit.
    pub fn key(self) -> &'static str {
        match self {
            FitParam::T1 => "t1_ns",
            FitParam::T2 => "t2_ps",
            FitParam::TR => "tr_ps",
            FitParam::AlphaMinus => "alpha_minus",
            FitParam::Delta => "delta_uev",
            FitParam::AlphaPlus => "alpha_plus",
        }
    }

    /// Factor from the internal unit to the display unit.
    pub fn display_scale(self) -> f64 {
        match self {
            FitParam::T2 | FitParam::TR => 1e3,
            _ => 1.0,
        }
    }

    /// Default search range in internal units.
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            FitParam::T1 => (1.0, 1000.0),
            FitParam::T2 | FitParam::TR => (1e-3, 1.0),
            FitParam::AlphaMinus => (0.01, 0.3),
            FitParam::Delta => (0.1, 100.0),
            FitParam::AlphaPlus => (0.05, 0.9),
        }
    }

    pub fn get(self, p: &ModelParams) -> f64 {
        match self {
            FitParam::T1 => p.t1_ns,
            FitParam::T2 => p.t2_ns,
            FitParam::TR => p.t_r_ns,
            FitParam::AlphaMinus => p.couplings.alpha_minus(),
            FitParam::Delta => p.delta.0,
            FitParam::AlphaPlus => p.couplings.alpha_plus(),
        }
    }

    pub fn set(self, p: &mut ModelParams, v: f64) -> Result<()> {
        match self {
            FitParam::T1 => p.t1_ns = v,
            FitParam::T2 => p.t2_ns = v,
            FitParam::TR => p.t_r_ns = v,
            FitParam::Delta => p.delta = Energy(v),
            FitParam::AlphaMinus => {
                p.couplings = couplings(p.couplings.alpha_plus(), v)?;
            }
            FitParam::AlphaPlus => {
                p.couplings = couplings(v, p.couplings.alpha_minus())?;
            }
        }
        Ok(())
    }
}

fn couplings(plus: f64, minus: f64) -> Result<GateCouplings> {
    let (a1, a2) = (plus - minus, plus + minus);
    if !(a1 > 0.0 && a1 < 1.0 && a2 > 0.0 && a2 < 1.0) {
        return Err(Error::invalid(format!(
            "alpha_plus = {plus}, alpha_minus = {minus} put a gate coupling outside (0, 1)"
        )));
    }
    Ok(GateCouplings {
        alpha1: a1,
        alpha2: a2,
    })
}

impl fmt::Display for FitParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for FitParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        FitParam::ALL
            .into_iter()
            .find(|p| p.key() == s)
            .ok_or_else(|| {
                let keys: Vec<_> = FitParam::ALL.iter().map(|p| p.key()).collect();
                Error::invalid(format!(
                    "unknown fit parameter `{s}` (expected one of {})",
                    keys.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Search ranges in internal units; parameters not listed use their defaults.
    pub bounds: Vec<(FitParam, (f64, f64))>,
    pub grid_per_decade: f64,
    pub simplex: SimplexOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            bounds: Vec::new(),
            grid_per_decade: 4.0,
            simplex: SimplexOptions::default(),
        }
    }
}

impl FitOptions {
    pub fn bounds_for(&self, p: FitParam) -> (f64, f64) {
        self.bounds
            .iter()
            .find(|(q, _)| *q == p)
            .map(|(_, b)| *b)
            .unwrap_or_else(|| p.default_bounds())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.simplex.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamEstimate {
    pub param: FitParam,
    /// Internal units.
    pub value: f64,
    /// One standard deviation from the local curvature; infinite if not identifiable.
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    pub estimates: Vec<ParamEstimate>,
    /// Sum of squared residuals.
    pub objective: f64,
    /// sqrt(objective).
    pub residual_norm: f64,
    pub residual_count: usize,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
    /// Best objective after each simplex iteration.
    pub history: Vec<f64>,
}

impl FitResult {
    pub fn estimate(&self, p: FitParam) -> Option<&ParamEstimate> {
        self.estimates.iter().find(|e| e.param == p)
    }
}

fn validate_mask(mask: &[FitParam]) -> Result<()> {
    if mask.is_empty() {
        return Err(Error::invalid(
            "fit mask is empty; free at least one parameter",
        ));
    }
    let mut sorted = mask.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != mask.len() {
        return Err(Error::invalid("fit mask lists a parameter twice"));
    }
    Ok(())
}

/// Generic driver: minimises the sum of squared `residuals` over the free
/// parameters in log space.
pub fn fit_residuals<R>(
    residuals: R,
    mask: &[FitParam],
    init: &ModelParams,
    opts: &FitOptions,
) -> Result<FitResult>
where
    R: Fn(&ModelParams) -> Result<Vec<f64>>,
{
    validate_mask(mask)?;
    let bounds: Vec<(f64, f64)> = mask.iter().map(|&p| opts.bounds_for(p)).collect();
    for (&p, &(lo, hi)) in mask.iter().zip(&bounds) {
        let v = p.get(init);
        if !(lo > 0.0 && lo < hi) {
            return Err(Error::Invariant {
                key: format!("{}_bounds", p.key()),
                bound: format!("need 0 < lo < hi (got {lo} .. {hi})"),
            });
        }
        if !(lo..=hi).contains(&v) {
            return Err(Error::Invariant {
                key: p.key().into(),
                bound: format!(
                    "initial value {} outside fit bounds [{}, {}]",
                    v * p.display_scale(),
                    lo * p.display_scale(),
                    hi * p.display_scale()
                ),
            });
        }
    }
    let r0 = residuals(init)?;
    let count = r0.len();
    if count == 0 {
        return Err(Error::InsufficientData("no data points to fit".into()));
    }

    // theta_i = ln(value_i / initial_i), so theta = 0 reproduces init exactly
    let base: Vec<f64> = mask.iter().map(|&p| p.get(init)).collect();
    let apply = |theta: &[f64]| -> Option<ModelParams> {
        let mut p = init.clone();
        for (((&q, &t), &(lo, hi)), &b) in mask.iter().zip(theta).zip(&bounds).zip(&base) {
            let v = b * t.exp();
            if !(lo..=hi).contains(&v) {
                return None;
            }
            q.set(&mut p, v).ok()?;
        }
        Some(p)
    };
    let objective = |theta: &[f64]| -> f64 {
        let Some(p) = apply(theta) else {
            return f64::INFINITY;
        };
        match residuals(&p) {
            Ok(r) if r.len() == count => r.iter().map(|v| v * v).sum(),
            _ => f64::INFINITY,
        }
    };

    let theta0 = vec![0.0; mask.len()];
    let f0 = objective(&theta0);
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .zip(&base)
        .map(|(&(lo, hi), &b)| {
            log_axis(lo, hi, opts.grid_per_decade)
                .into_iter()
                .map(|t| (t - b.ln()).clamp((lo / b).ln(), (hi / b).ln()))
                .collect()
        })
        .collect();
    let grid_size: usize = axes.iter().map(Vec::len).product();
    log::debug!("grid scan over {grid_size} points");
    let (g_best, g_val) = grid_scan(objective, &axes);
    let start = if f0 <= g_val { theta0 } else { g_best };

    let res = nelder_mead(objective, &start, &opts.simplex);
    let params = apply(&res.x).expect("simplex optimum lies inside the bounds");
    let mut warnings = Vec::new();
    if !res.converged {
        warnings.push(format!(
            "simplex did not converge within {} iterations",
            opts.simplex.max_iterations
        ));
    }

    let (sd, ident) = curvature_uncertainty(&residuals, mask, &params, res.fx, count)?;
    warnings.extend(ident);
    for w in &warnings {
        log::warn!("{w}");
    }
    let estimates = mask
        .iter()
        .zip(sd)
        .map(|(&p, s)| ParamEstimate {
            param: p,
            value: p.get(&params),
            uncertainty: s,
        })
        .collect();
    Ok(FitResult {
        params,
        estimates,
        objective: res.fx,
        residual_norm: res.fx.sqrt(),
        residual_count: count,
        iterations: res.iterations,
        evaluations: res.evaluations + grid_size + 1,
        converged: res.converged,
        warnings,
        history: res.history,
    })
}

/// Standard deviations from (J^T J)^-1 with J taken in log parameters, plus
/// identifiability warnings.
fn curvature_uncertainty<R>(
    residuals: &R,
    mask: &[FitParam],
    at: &ModelParams,
    ssr: f64,
    count: usize,
) -> Result<(Vec<f64>, Vec<String>)>
where
    R: Fn(&ModelParams) -> Result<Vec<f64>>,
{
    let n = mask.len();
    let h = 1e-4f64;
    let mut jac = DMatrix::<f64>::zeros(count, n);
    for (j, &p) in mask.iter().enumerate() {
        let v = p.get(at);
        let mut plus = at.clone();
        let mut minus = at.clone();
        let col = (|| -> Result<Vec<f64>> {
            p.set(&mut plus, v * h.exp())?;
            p.set(&mut minus, v * (-h).exp())?;
            let (rp, rm) = (residuals(&plus)?, residuals(&minus)?);
            Ok(rp
                .iter()
                .zip(&rm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect())
        })();
        if let Ok(col) = col {
            if col.len() == count {
                for (i, c) in col.into_iter().enumerate() {
                    jac[(i, j)] = c;
                }
            }
        }
    }
    let mut warnings = Vec::new();
    let norms: Vec<f64> = (0..n).map(|j| jac.column(j).norm()).collect();
    let top = norms.iter().cloned().fold(0.0f64, f64::max);
    for (j, &nj) in norms.iter().enumerate() {
        if nj <= 1e-9 * top || nj == 0.0 {
            warnings.push(format!(
                "{} has no measurable effect on the normalised residuals and is not identifiable",
                mask[j]
            ));
        }
    }
    let jtj = jac.transpose() * &jac;
    let mut corr = jtj.clone();
    for a in 0..n {
        for b in 0..n {
            let d = (jtj[(a, a)] * jtj[(b, b)]).sqrt();
            corr[(a, b)] = if d > 0.0 { jtj[(a, b)] / d } else { 0.0 };
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            // covariance of the fitted parameters is anti-correlated when the columns align
            if corr[(a, b)].abs() > 0.9999 {
                warnings.push(format!(
                    "{} and {} are nearly collinear (|corr| = {:.6}); only a combination is identifiable",
                    mask[a],
                    mask[b],
                    corr[(a, b)].abs()
                ));
            }
        }
    }
    let dof = count.saturating_sub(n).max(1) as f64;
    let sigma2 = ssr / dof;
    let sd = match jtj.clone().try_inverse() {
        Some(inv) if norms.iter().all(|&v| v > 1e-9 * top) => mask
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let var = sigma2 * inv[(j, j)];
                if var >= 0.0 {
                    p.get(at) * var.sqrt()
                } else {
                    f64::INFINITY
                }
            })
            .collect(),
        _ => vec![f64::INFINITY; n],
    };
    Ok((sd, warnings))
}

/// Max |value| over present samples.
fn peak(values: &[Option<f64>]) -> f64 {
    values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Scaled model minus normalised data at every sample present in the data.
///
/// Each trace gets its own non-negative model scale, chosen by linear least
/// squares, so the data peak (noise included) does not set the amplitude.
pub fn trace_residuals(traces: &[Trace], p: &ModelParams) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for t in traces {
        let model = evaluate_on_axis(t.meta.axis_kind, &t.axis, p, t.meta.omega, t.meta.branch)?;
        let (pm, pd) = (peak(&model), peak(&t.values));
        let sign = if t.unit == ValueUnit::PhaseNormalized {
            -1.0
        } else {
            1.0
        };
        let pairs: Vec<(f64, f64)> = model
            .iter()
            .zip(&t.values)
            .filter_map(|(m, d)| {
                let d = (*d)?;
                let m = match m {
                    Some(m) if pm > 0.0 => sign * m / pm,
                    _ => 0.0,
                };
                Some((m, if pd > 0.0 { d / pd } else { 0.0 }))
            })
            .collect();
        let mm: f64 = pairs.iter().map(|(m, _)| m * m).sum();
        let md: f64 = pairs.iter().map(|(m, d)| m * d).sum();
        let scale = if mm > 0.0 { (md / mm).max(0.0) } else { 0.0 };
        out.extend(pairs.iter().map(|(m, d)| scale * m - d));
    }
    Ok(out)
}

/// Fits the masked parameters to one or more traces.
pub fn fit_parameters(
    measured: &[Trace],
    mask: &[FitParam],
    init: &ModelParams,
    opts: &FitOptions,
) -> Result<FitResult> {
    if measured.is_empty() {
        return Err(Error::InsufficientData("no traces to fit".into()));
    }
    for t in measured {
        t.validate()?;
    }
    fit_residuals(|p| trace_residuals(measured, p), mask, init, opts)
}

/// Model peak-to-peak amplitude at each frequency, over the default window.
pub fn model_amplitudes(points: &[AmplitudePoint], p: &ModelParams, n: usize) -> Result<Vec<f64>> {
    let axis = linspace(DEFAULT_P2P_WINDOW.0, DEFAULT_P2P_WINDOW.1, n);
    points
        .iter()
        .map(|pt| {
            let v = evaluate_on_axis(
                AxisKind::DetuningReduced,
                &axis,
                p,
                pt.omega,
                Default::default(),
            )?;
            let (lo, hi) = v
                .iter()
                .flatten()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                    (lo.min(x), hi.max(x))
                });
            Ok(if hi >= lo { hi - lo } else { 0.0 })
        })
        .collect()
}

/// Fits an amplitude-vs-frequency curve; both curves are divided by their maxima.
pub fn fit_amplitude_curve(
    points: &[AmplitudePoint],
    mask: &[FitParam],
    init: &ModelParams,
    opts: &FitOptions,
) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least two amplitude points".into(),
        ));
    }
    let dmax = points.iter().fold(0.0f64, |m, p| m.max(p.amplitude.abs()));
    if dmax == 0.0 {
        return Err(Error::Degenerate("all amplitudes are zero".into()));
    }
    fit_residuals(
        |p| {
            let m = model_amplitudes(points, p, 801)?;
            let mmax = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            Ok(m.iter()
                .zip(points)
                .map(|(m, d)| if mmax > 0.0 { m / mmax } else { 0.0 } - d.amplitude / dmax)
                .collect())
        },
        mask,
        init,
        opts,
    )
}

/// Adds N(0, (rel_sigma * max|value|)^2) noise to every sample.
pub fn with_gaussian_noise(t: &Trace, rel_sigma: f64, seed: u64) -> Result<Trace> {
    let scale = peak(&t.values);
    let normal = Normal::new(0.0, rel_sigma * scale)
        .map_err(|e| Error::invalid(format!("noise level {rel_sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = t.clone();
    for v in out.values.iter_mut().flatten() {
        *v += normal.sample(&mut rng);
    }
    Ok(out)
}
