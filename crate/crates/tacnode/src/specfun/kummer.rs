//! Confluent hypergeometric functions `M(a, 1, z)` and `U(a, 1, z)` for
//! complex `a` and `z`.
//!
//! Method map (principal branches, `|arg z| <= pi`):
//!
//! | function | region | method |
//! |---|---|---|
//! | `U` | `|z| >= 40` | asymptotic series in `1/z` |
//! | `U` | `|z| < 40`, `|arg z| <= 11 pi/12` | trapezoid rule on a rotated Laplace integral, downward recurrence in `a` when `Re a < 1` |
//! | `U` | `|z| < 40`, near the cut | connection formula through `M` |
//! | `M` | `Re z < 0` | Kummer transformation `M(a,z) = e^z M(1-a,-z)` |
//! | `M` | `|z| - Re z <= 10`, `|z| < 40` | Maclaurin series |
//! | `M` | otherwise | connection formula through two `U`'s |
//!
//! The `_scaled` variants return `e^{-z/2}` times the function so that the
//! exponential growth of `M` never overflows.

use super::gamma::{gamma, rgamma};
use crate::{Error, Result, C64};
use std::f64::consts::PI;

const ASYM_RADIUS: f64 = 40.0;
const SERIES_LOSS: f64 = 10.0;
const CUT_ANGLE: f64 = 11.0 * PI / 12.0;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn check(v: C64, what: &str, a: C64, z: C64) -> Result<C64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::Convergence {
            what: format!("{what}(a={a}, z={z}) is not finite"),
            delta: f64::INFINITY,
            tol: 0.0,
        })
    }
}

// Maclaurin series of M(a, 1, z)
fn m_series(a: C64, z: C64) -> C64 {
    let mut t = c(1.0);
    let mut s = c(1.0);
    for k in 0..2000 {
        let kf = k as f64;
        t *= (a + kf) * z / ((kf + 1.0) * (kf + 1.0));
        s += t;
        if t.norm() < 1e-17 * s.norm() && kf > z.norm() {
            break;
        }
    }
    s
}

// e^{extra} U(a, 1, z) from the asymptotic series; ln z supplied by the caller
// so that rotated arguments keep their intended branch
fn u_asym(a: C64, z: C64, lnz: C64, extra: C64) -> C64 {
    let mut t = c(1.0);
    let mut s = c(1.0);
    let mut last = f64::INFINITY;
    for k in 0..200 {
        let kf = k as f64;
        let nt = t * (a + kf) * (a + kf) / (-(kf + 1.0) * z);
        let m = nt.norm();
        if m > last {
            break;
        }
        last = m;
        t = nt;
        s += t;
        if m < 1e-17 * s.norm() {
            break;
        }
    }
    (extra - a * lnz).exp() * s
}

// U(a, 1, r e^{i phi}) for 1 <= Re a, |phi| < pi, via
// U = e^{-i phi a}/Gamma(a) int exp(-r e^u + a u) (1 + e^{u - i phi})^{-a} du
fn u_quad(a: C64, r: f64, phi: f64) -> C64 {
    let d = (PI - phi.abs()).min(PI / 2.0);
    let h = 2.0 * PI * d / 38.0;
    let umin = -40.0 / a.re;
    let umax = ((45.0 + 5.0 * a.norm()) / r).ln() + 0.5;
    let n = ((umax - umin) / h).ceil() as usize;
    let rot = C64::from_polar(1.0, -phi);
    let mut s = c(0.0);
    for j in 0..=n {
        let u = umin + j as f64 * h;
        let eu = u.exp();
        s += (a * u - r * eu).exp() * (c(1.0) + rot * eu).powc(-a);
    }
    (C64::new(0.0, -phi) * a).exp() * rgamma(a) * s * h
}

// e^{extra} U(a, 1, r e^{i phi}) away from the cut, any complex a
fn u_regular(a: C64, r: f64, phi: f64, extra: C64) -> C64 {
    let z = C64::from_polar(r, phi);
    if r >= ASYM_RADIUS {
        let lnz = C64::new(r.ln(), phi);
        return u_asym(a, z, lnz, extra);
    }
    let e = extra.exp();
    if a.re >= 1.0 {
        return u_quad(a, r, phi) * e;
    }
    // U(a) = (2a + 1 + z) U(a+1) - (a+1)^2 U(a+2), stable downward
    let n = (1.0 - a.re).ceil() as usize;
    let top = a + n as f64;
    let mut u1 = u_quad(top + 1.0, r, phi); // U(top+1)
    let mut u0 = u_quad(top, r, phi); // U(top)
    for k in (0..n).rev() {
        let b = a + k as f64;
        let next = (b * 2.0 + 1.0 + z) * u0 - (b + 1.0) * (b + 1.0) * u1;
        u1 = u0;
        u0 = next;
    }
    u0 * e
}

fn sign_im(z: C64) -> f64 {
    if z.im < 0.0 {
        -1.0
    } else {
        1.0
    }
}

// e^{extra} U(a, 1, z) anywhere in the cut plane
fn u_any(a: C64, z: C64, extra: C64) -> C64 {
    let r = z.norm();
    let phi = z.arg();
    if r >= ASYM_RADIUS || phi.abs() <= CUT_ANGLE {
        return u_regular(a, r, phi, extra);
    }
    // U(a,z) = Gamma(1-a) e^{-s pi i a} [M(a,z) - e^{-s pi i (1-a)} e^z U(1-a, z e^{-s pi i})/Gamma(a)]
    let s = sign_im(z);
    let one = c(1.0);
    let m = m_scaled_any(a, z) * (z * 0.5 + extra).exp();
    let rot = u_regular(one - a, r, phi - s * PI, z + extra);
    let br = m - (C64::new(0.0, -s * PI) * (one - a)).exp() * rot * rgamma(a);
    gamma(one - a) * (C64::new(0.0, -s * PI) * a).exp() * br
}

// e^{-z/2} M(a, 1, z)
fn m_scaled_any(a: C64, z: C64) -> C64 {
    if z.re < 0.0 {
        return m_scaled_any(c(1.0) - a, -z);
    }
    let r = z.norm();
    if r < ASYM_RADIUS && r - z.re <= SERIES_LOSS {
        return m_series(a, z) * (-z * 0.5).exp();
    }
    // M = e^{s pi i a} U(a,z)/Gamma(1-a) + e^{-s pi i (1-a)} e^z U(1-a, z e^{-s pi i})/Gamma(a)
    let s = sign_im(z);
    let one = c(1.0);
    let phi = z.arg();
    let t1 = (C64::new(0.0, s * PI) * a).exp() * u_regular(a, r, phi, -z * 0.5) * rgamma(one - a);
    let t2 = (C64::new(0.0, -s * PI) * (one - a)).exp()
        * u_regular(one - a, r, phi - s * PI, z * 0.5)
        * rgamma(a);
    t1 + t2
}

/// `e^{-z/2} M(a, 1, z)`.
pub fn kummer_m_scaled(a: C64, z: C64) -> Result<C64> {
    check(m_scaled_any(a, z), "M", a, z)
}

/// `M(a, 1, z)`.
pub fn kummer_m(a: C64, z: C64) -> Result<C64> {
    check(m_scaled_any(a, z) * (z * 0.5).exp(), "M", a, z)
}

/// `e^{-z/2} U(a, 1, z)`, principal branch (cut along `z <= 0`).
pub fn kummer_u_scaled(a: C64, z: C64) -> Result<C64> {
    if z.norm() == 0.0 {
        return Err(Error::Domain("U(a, 1, z) is singular at z = 0".into()));
    }
    check(u_any(a, z, -z * 0.5), "U", a, z)
}

/// `U(a, 1, z)`, principal branch.
pub fn kummer_u(a: C64, z: C64) -> Result<C64> {
    if z.norm() == 0.0 {
        return Err(Error::Domain("U(a, 1, z) is singular at z = 0".into()));
    }
    check(u_any(a, z, c(0.0)), "U", a, z)
}

/// `e^{-z/2} U(a, 1, r e^{i phi})` with the argument `phi` taken literally,
/// so `|phi|` may slightly exceed `pi` (analytic continuation across the cut).
pub fn kummer_u_scaled_polar(a: C64, r: f64, phi: f64) -> Result<C64> {
    let z = C64::from_polar(r, phi);
    if r >= ASYM_RADIUS {
        return check(u_asym(a, z, C64::new(r.ln(), phi), -z * 0.5), "U", a, z);
    }
    if phi.abs() <= CUT_ANGLE {
        return check(u_regular(a, r, phi, -z * 0.5), "U", a, z);
    }
    Err(Error::Domain(format!(
        "polar U evaluation at arg {phi} needs |z| >= {ASYM_RADIUS} or |arg| <= 11pi/12"
    )))
}
