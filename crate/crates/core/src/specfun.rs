//! Bessel functions of the first kind (integer order) and the Airy function.
//!
//! Bessel values come from Miller's downward recurrence normalised with
//! `J_0 + 2 sum J_2k = 1`. The Airy function uses its Maclaurin series near
//! the origin and the standard large-argument expansions outside.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// Largest Bessel order the recurrence will allocate for.
pub const MAX_BESSEL_ORDER: i64 = 100_000;

/// Largest |z| accepted by the Bessel evaluator.
pub const MAX_BESSEL_ARGUMENT: f64 = 1.0e5;

/// Ai(0) = 3^(-2/3) / Gamma(2/3).
pub const AIRY_AI_0: f64 = 0.355_028_053_887_817_24;
/// -Ai'(0) = 3^(-1/3) / Gamma(1/3).
pub const AIRY_AIP_0_NEG: f64 = 0.258_819_403_792_806_8;

const AIRY_SERIES_POS_LIMIT: f64 = 5.0;
const AIRY_SERIES_NEG_LIMIT: f64 = -7.0;

const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BesselOrder(pub i64);

impl BesselOrder {
    pub fn new(n: i64) -> Result<Self> {
        if n.abs() > MAX_BESSEL_ORDER {
            return Err(Error::NumericRange(format!(
                "Bessel order {n} exceeds {MAX_BESSEL_ORDER}"
            )));
        }
        Ok(BesselOrder(n))
    }
}

fn check_bessel_argument(z: f64) -> Result<()> {
    if !z.is_finite() || z.abs() > MAX_BESSEL_ARGUMENT {
        return Err(Error::NumericRange(format!(
            "Bessel argument {z} outside [-{MAX_BESSEL_ARGUMENT}, {MAX_BESSEL_ARGUMENT}]"
        )));
    }
    Ok(())
}

/// J_0(z) ..= J_nmax(z) for z >= 0.
pub fn bessel_j_all(nmax: usize, z: f64) -> Result<Vec<f64>> {
    check_bessel_argument(z)?;
    if nmax as i64 > MAX_BESSEL_ORDER {
        return Err(Error::NumericRange(format!(
            "Bessel order {nmax} exceeds {MAX_BESSEL_ORDER}"
        )));
    }
    if z < 0.0 {
        return Err(Error::invalid("bessel_j_all expects z >= 0"));
    }
    let mut out = vec![0.0; nmax + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }

    let top = (nmax as f64).max(z.ceil());
    let mut start = (top + 40.0 + 10.0 * top.sqrt()) as usize;
    start += start % 2;

    let two_over_z = 2.0 / z;
    let mut j_next = 0.0; // J_{k+1}
    let mut j_cur = 1.0; // J_k, k = start
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        if k <= nmax {
            out[k] = j_cur;
        }
        if k % 2 == 0 {
            norm += 2.0 * j_cur;
        }
        let j_prev = k as f64 * two_over_z * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > RESCALE_ABOVE {
            j_cur *= RESCALE_BY;
            j_next *= RESCALE_BY;
            norm *= RESCALE_BY;
            for v in out.iter_mut().skip(k.min(nmax + 1)) {
                *v *= RESCALE_BY;
            }
        }
    }
    out[0] = j_cur;
    norm += j_cur;
    for v in &mut out {
        *v /= norm;
    }
    Ok(out)
}

/// Bessel function of the first kind J_n(z) for integer n and real z.
pub fn bessel_j(n: BesselOrder, z: f64) -> Result<f64> {
    check_bessel_argument(z)?;
    let order = n.0.unsigned_abs() as usize;
    let table = bessel_j_all(order, z.abs())?;
    let mut v = table[order];
    // J_{-n} = (-1)^n J_n and J_n(-z) = (-1)^n J_n(z)
    let odd = order % 2 == 1;
    if odd && (n.0 < 0) != (z < 0.0) {
        v = -v;
    }
    Ok(v)
}

/// Ai(x) and Ai'(x) together.
pub fn airy(x: f64) -> (f64, f64) {
    if x.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    if x > AIRY_SERIES_POS_LIMIT {
        airy_asymptotic_pos(x)
    } else if x < AIRY_SERIES_NEG_LIMIT {
        airy_asymptotic_neg(-x)
    } else {
        airy_maclaurin(x)
    }
}

pub fn airy_ai(x: f64) -> f64 {
    airy(x).0
}

pub fn airy_ai_prime(x: f64) -> f64 {
    airy(x).1
}

fn airy_maclaurin(x: f64) -> (f64, f64) {
    let x3 = x * x * x;
    // f, g and their derivatives, Ai = c1 f - c2 g
    let mut a = 1.0;
    let mut b = x;
    let mut d = x * x / 2.0;
    let mut e = 1.0;
    let (mut f, mut g, mut fp, mut gp) = (a, b, d, e);
    for k in 1..200 {
        let kf = k as f64;
        a *= x3 / ((3.0 * kf) * (3.0 * kf - 1.0));
        b *= x3 / ((3.0 * kf + 1.0) * (3.0 * kf));
        e *= x3 / ((3.0 * kf) * (3.0 * kf - 2.0));
        if k >= 2 {
            d *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf - 3.0));
            fp += d;
        }
        f += a;
        g += b;
        gp += e;
        let small = 1e-18;
        if a.abs() <= small * f.abs().max(1.0)
            && b.abs() <= small * g.abs().max(1.0)
            && d.abs() <= small * fp.abs().max(1.0)
            && e.abs() <= small * gp.abs().max(1.0)
        {
            break;
        }
    }
    (
        AIRY_AI_0 * f - AIRY_AIP_0_NEG * g,
        AIRY_AI_0 * fp - AIRY_AIP_0_NEG * gp,
    )
}

/// Coefficients u_k, v_k of the large-argument expansions, truncated where
/// the terms u_k / xi^k stop decreasing.
fn asymptotic_coefficients(xi: f64) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![1.0];
    let mut v = vec![1.0];
    let mut last = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        let uk = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
            / ((2.0 * kf - 1.0) * 216.0 * kf);
        let term = uk / xi.powi(k as i32);
        if term >= last || term < 1e-17 {
            break;
        }
        last = term;
        u.push(uk);
        v.push(-(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * uk);
    }
    (u, v)
}

fn airy_asymptotic_pos(x: f64) -> (f64, f64) {
    let xi = 2.0 / 3.0 * x * x.sqrt();
    let (u, v) = asymptotic_coefficients(xi);
    let mut su = 0.0;
    let mut sv = 0.0;
    let mut p = 1.0;
    for k in 0..u.len() {
        su += p * u[k];
        sv += p * v[k];
        p *= -1.0 / xi;
    }
    let x4 = x.sqrt().sqrt();
    let pref = (-xi).exp() / (2.0 * PI.sqrt());
    (pref / x4 * su, -pref * x4 * sv)
}

fn airy_asymptotic_neg(z: f64) -> (f64, f64) {
    let xi = 2.0 / 3.0 * z * z.sqrt();
    let (u, v) = asymptotic_coefficients(xi);
    let (mut ue, mut uo, mut ve, mut vo) = (0.0, 0.0, 0.0, 0.0);
    let mut p = 1.0;
    for k in 0..u.len() {
        // (-1)^(k/2) xi^-k split by parity of k
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            ue += sign * u[k] * p;
            ve += sign * v[k] * p;
        } else {
            uo += sign * u[k] * p;
            vo += sign * v[k] * p;
        }
        p /= xi;
    }
    let theta = xi + FRAC_PI_4;
    let (s, c) = theta.sin_cos();
    let z4 = z.sqrt().sqrt();
    let rpi = PI.sqrt();
    (
        (s * ue - c * uo) / (rpi * z4),
        -z4 / rpi * (c * ve + s * vo),
    )
}
