//! Flat `key = value` configuration files.
//!
//! Every key carries its unit in the name. Omitted keys take the fitted
//! device values; unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::analysis::{FitOptions, FitParam};
use crate::capacitance::GateCouplings;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::sweep::SweepSpec;
use crate::units::{AngularFrequency, Energy, Voltage};

/// Keys accepted in a config file.
pub const KNOWN_KEYS: &[&str] = &[
    "delta_uev",
    "alpha1",
    "alpha2",
    "alpha_minus",
    "alpha_plus",
    "eps_hat_mev",
    "vtg0_v",
    "c_g1_af",
    "c_g2_af",
    "c_m_af",
    "c_d_af",
    "q_factor",
    "c_p_ff",
    "a_mev",
    "freqs_ghz",
    "branch",
    "t1_ns",
    "t2_ps",
    "tr_ps",
    "sweep_axis",
    "sweep_start",
    "sweep_stop",
    "sweep_points",
    "fit_mask",
    "fit_seed",
    "fit_max_iter",
    "t1_ns_bounds",
    "t2_ps_bounds",
    "tr_ps_bounds",
    "alpha_minus_bounds",
    "delta_uev_bounds",
    "alpha_plus_bounds",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub mask: Vec<FitParam>,
    pub options: FitOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            mask: vec![FitParam::T1, FitParam::T2, FitParam::TR],
            options: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub params: ModelParams,
    pub sweep: SweepSpec,
    pub fit: FitConfig,
}

struct Entry {
    line: usize,
    value: String,
}

struct Parsed {
    path: PathBuf,
    entries: BTreeMap<String, Entry>,
}

impl Parsed {
    fn err(&self, key: &str, message: String) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.entries.get(key).map_or(0, |e| e.line),
            message,
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.parse::<f64>()
            .map(Some)
            .map_err(|_| self.err(key, format!("`{key}` expects a number, got `{v}`")))
    }

    fn floats(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| self.err(key, format!("`{key}` expects numbers, got `{s}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn integer(&self, key: &str) -> Result<Option<u64>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.parse::<u64>().map(Some).map_err(|_| {
            self.err(
                key,
                format!("`{key}` expects a non-negative integer, got `{v}`"),
            )
        })
    }
}

fn parse_entries(text: &str, path: &Path) -> Result<Parsed> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let key = k.trim().to_string();
        let value = v.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: "empty key or value".into(),
            });
        }
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::UnknownKey(key));
        }
        if let Some(prev) = entries.get(&key) {
            let prev: &Entry = prev;
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("`{key}` already set on line {}", prev.line),
            });
        }
        entries.insert(key, Entry { line, value });
    }
    Ok(Parsed {
        path: path.to_path_buf(),
        entries,
    })
}

fn couplings(p: &Parsed) -> Result<Option<GateCouplings>> {
    let a1 = p.float("alpha1")?;
    let a2 = p.float("alpha2")?;
    let am = p.float("alpha_minus")?;
    let ap = p.float("alpha_plus")?;
    if (a1.is_some() || a2.is_some()) && (am.is_some() || ap.is_some()) {
        return Err(p.err(
            if am.is_some() {
                "alpha_minus"
            } else {
                "alpha_plus"
            },
            "give either alpha1/alpha2 or alpha_minus/alpha_plus, not both".into(),
        ));
    }
    let d = ModelParams::device_defaults().couplings;
    let c = if a1.is_some() || a2.is_some() {
        GateCouplings {
            alpha1: a1.unwrap_or(d.alpha1),
            alpha2: a2.unwrap_or(d.alpha2),
        }
    } else if am.is_some() || ap.is_some() {
        let plus = ap.unwrap_or(d.alpha_plus());
        let minus = am.unwrap_or(d.alpha_minus());
        if minus == 0.0 {
            return Err(Error::Invariant {
                key: "alpha_minus".into(),
                bound: "must be non-zero (the voltage period diverges)".into(),
            });
        }
        GateCouplings {
            alpha1: plus - minus,
            alpha2: plus + minus,
        }
    } else {
        return Ok(None);
    };
    Ok(Some(c))
}

/// Parses config text; `path` is only used in diagnostics.
pub fn parse_config(text: &str, path: &Path) -> Result<Config> {
    let p = parse_entries(text, path)?;
    let mut cfg = Config::default();
    let m = &mut cfg.params;

    if let Some(v) = p.float("delta_uev")? {
        m.delta = Energy(v);
    }
    if let Some(c) = couplings(&p)? {
        m.couplings = c;
    }
    if let Some(v) = p.float("a_mev")? {
        m.amplitude = Energy::from_mev(v);
        m.eps_hat = m.amplitude;
    }
    if let Some(v) = p.float("eps_hat_mev")? {
        m.eps_hat = Energy::from_mev(v);
    }
    if let Some(v) = p.float("vtg0_v")? {
        m.v0 = Voltage(v);
    }
    let c = &mut m.circuit;
    for (key, slot, scale) in [
        ("c_g1_af", &mut c.c_g1, 1e-18),
        ("c_g2_af", &mut c.c_g2, 1e-18),
        ("c_m_af", &mut c.c_m, 1e-18),
        ("c_d_af", &mut c.c_d, 1e-18),
        ("c_p_ff", &mut c.c_p, 1e-15),
        ("q_factor", &mut c.q_factor, 1.0),
    ] {
        if let Some(v) = p.float(key)? {
            *slot = v * scale;
        }
    }
    if let Some(v) = p.float("t1_ns")? {
        m.t1_ns = v;
    }
    if let Some(v) = p.float("t2_ps")? {
        m.t2_ns = v * 1e-3;
    }
    if let Some(v) = p.float("tr_ps")? {
        m.t_r_ns = v * 1e-3;
    }

    let s = &mut cfg.sweep;
    if let Some(v) = p.floats("freqs_ghz")? {
        s.frequencies = v.into_iter().map(AngularFrequency::from_ghz).collect();
    }
    if let Some(v) = p.raw("branch") {
        s.branch = v
            .parse()
            .map_err(|e: Error| p.err("branch", e.to_string()))?;
    }
    if let Some(v) = p.raw("sweep_axis") {
        s.axis = v
            .parse()
            .map_err(|e: Error| p.err("sweep_axis", e.to_string()))?;
    }
    if let Some(v) = p.float("sweep_start")? {
        s.start = v;
    }
    if let Some(v) = p.float("sweep_stop")? {
        s.stop = v;
    }
    if let Some(v) = p.integer("sweep_points")? {
        s.n_points = v as usize;
    }

    let f = &mut cfg.fit;
    if let Some(v) = p.raw("fit_mask") {
        f.mask = v
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<FitParam>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| p.err("fit_mask", e.to_string()))?;
    }
    if let Some(v) = p.integer("fit_seed")? {
        f.options.simplex.seed = v;
    }
    if let Some(v) = p.integer("fit_max_iter")? {
        f.options.simplex.max_iterations = v as usize;
    }
    for param in FitParam::ALL {
        let key = format!("{}_bounds", param.key());
        if let Some(v) = p.floats(&key)? {
            if v.len() != 2 {
                return Err(p.err(&key, format!("`{key}` expects two numbers `lo hi`")));
            }
            let s = param.display_scale();
            let (lo, hi) = (v[0] / s, v[1] / s);
            if !(lo > 0.0 && lo < hi) {
                return Err(Error::Invariant {
                    key,
                    bound: format!("need 0 < lo < hi (got {} {})", v[0], v[1]),
                });
            }
            f.options.bounds.push((param, (lo, hi)));
        }
    }

    cfg.params.validate()?;
    cfg.sweep.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Branch;

    fn parse(text: &str) -> Result<Config> {
        parse_config(text, Path::new("test.cfg"))
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse("").unwrap();
        assert_eq!(c.params, ModelParams::device_defaults());
        assert_eq!(c.params.t1_ns, 50.0);
        assert_eq!(c.params.t2_ns, 0.035);
        assert_eq!(c.params.t_r_ns, 0.030);
        assert!((c.params.alpha_minus() - 0.06).abs() < 1e-15);
        assert_eq!(c.params.amplitude, Energy(1350.0));
        assert_eq!(c.params.v0, Voltage(0.475));
        assert_eq!(c.sweep, SweepSpec::default());
    }

    #[test]
    fn negative_t2_names_key() {
        match parse("t2_ps = -1") {
            Err(Error::Invariant { key, .. }) => assert_eq!(key, "t2_ps"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(parse("foo = 1"), Err(Error::UnknownKey(k)) if k == "foo"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse("# comment\n\nt1_ns = fifty\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse("t1_ns = 5\nt1_ns = 6") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse("t1_ns 5") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn full_file() {
        let text = "\
delta_uev = 3   # coupling
alpha1 = 0.3
alpha2 = 0.5
a_mev = 1.2
vtg0_v = 0.5
q_factor = 60
c_p_ff = 500
freqs_ghz = 4.72, 6.9 8
branch = 00-10
t1_ns = 20
t2_ps = 40
tr_ps = 25
sweep_axis = v_tg_volts
sweep_start = 0.45
sweep_stop = 0.5
sweep_points = 11
fit_mask = t1_ns alpha_minus
fit_seed = 9
t1_ns_bounds = 2 500
t2_ps_bounds = 5 500
";
        let c = parse(text).unwrap();
        assert_eq!(c.params.delta, Energy(3.0));
        assert!((c.params.alpha_minus() - 0.1).abs() < 1e-15);
        assert_eq!(c.params.eps_hat, Energy(1200.0));
        assert_eq!(c.params.circuit.q_factor, 60.0);
        assert!((c.params.circuit.c_p - 500e-15).abs() < 1e-27);
        assert_eq!(c.sweep.frequencies.len(), 3);
        assert_eq!(c.sweep.branch, Branch::ZeroZeroOneZero);
        assert_eq!(c.sweep.n_points, 11);
        assert_eq!(c.fit.mask, vec![FitParam::T1, FitParam::AlphaMinus]);
        assert_eq!(c.fit.options.simplex.seed, 9);
        assert_eq!(c.fit.options.bounds_for(FitParam::T2), (0.005, 0.5));
        assert!((c.params.t2_ns - 0.04).abs() < 1e-15);
    }

    #[test]
    fn eps_hat_independent_of_amplitude() {
        let c = parse("a_mev = 1.0\neps_hat_mev = 0.8").unwrap();
        assert_eq!(c.params.amplitude, Energy(1000.0));
        assert!((c.params.eps_hat.0 - 800.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_coupling_styles_rejected() {
        assert!(parse("alpha1 = 0.3\nalpha_minus = 0.05").is_err());
        assert!(matches!(
            parse("alpha1 = 1.2"),
            Err(Error::Invariant { .. })
        ));
        assert!(matches!(
            parse("alpha_minus = 0"),
            Err(Error::Invariant { .. })
        ));
    }

    #[test]
    fn sweep_invariants_checked() {
        assert!(matches!(
            parse("sweep_points = 1"),
            Err(Error::Invariant { .. })
        ));
        assert!(matches!(
            parse("sweep_start = 2\nsweep_stop = 1"),
            Err(Error::Invariant { .. })
        ));
        assert!(matches!(
            parse("freqs_ghz = 5, -2"),
            Err(Error::Invariant { .. })
        ));
        assert!(parse("t1_ns_bounds = 10").is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_config(Path::new("/nonexistent/dir/x.cfg")),
            Err(Error::Io { .. })
        ));
    }
}
