//! Complex Gamma, reciprocal Gamma and digamma.
//!
//! Everything goes through an upward shift to `Re z >= SHIFT` followed by the
//! Stirling series, which is accurate to a few ulps there.

use crate::{Error, Result, C64};
use std::f64::consts::PI;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SHIFT: f64 = 16.0;

// B_{2k} for k = 1..8
const BERN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

fn stirling_ln(z: C64) -> C64 {
    let half_ln_2pi = 0.5 * (2.0 * PI).ln();
    let mut s = (z - 0.5) * z.ln() - z + half_ln_2pi;
    let zi = z.inv();
    let zi2 = zi * zi;
    let mut p = zi;
    for (k, b) in BERN.iter().enumerate() {
        let k2 = 2.0 * (k as f64 + 1.0);
        s += p * (*b / (k2 * (k2 - 1.0)));
        p *= zi2;
    }
    s
}

fn shift_count(z: C64) -> usize {
    if z.re >= SHIFT {
        0
    } else {
        (SHIFT - z.re).ceil() as usize
    }
}

/// Continuous branch of `ln Gamma(z)` for `Re z > 0` (matches the standard
/// `loggamma`).  For `Re z <= 0` the value is `ln Gamma` up to a multiple of
/// `2 pi i`.
pub fn ln_gamma(z: C64) -> C64 {
    let n = shift_count(z);
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..n {
        acc += (z + k as f64).ln();
    }
    stirling_ln(z + n as f64) - acc
}

/// `1/Gamma(z)`, an entire function.
pub fn rgamma(z: C64) -> C64 {
    if z.re < -20.0 {
        // reflection: 1/Gamma(z) = Gamma(1-z) sin(pi z)/pi
        return gamma(C64::new(1.0, 0.0) - z) * (z * PI).sin() / PI;
    }
    let n = shift_count(z);
    let mut prod = C64::new(1.0, 0.0);
    for k in 0..n {
        prod *= z + k as f64;
    }
    prod * (-stirling_ln(z + n as f64)).exp()
}

/// `Gamma(z)`; infinite at the poles.
pub fn gamma(z: C64) -> C64 {
    if z.re < -20.0 {
        let s = (z * PI).sin();
        return C64::new(PI, 0.0) / (s * gamma(C64::new(1.0, 0.0) - z));
    }
    let r = rgamma(z);
    if r == C64::new(0.0, 0.0) {
        C64::new(f64::INFINITY, 0.0)
    } else {
        r.inv()
    }
}

/// Real Gamma function.
pub fn gamma_real(x: f64) -> f64 {
    gamma(C64::new(x, 0.0)).re
}

/// Digamma `psi(z)`.
pub fn digamma(z: C64) -> C64 {
    let n = shift_count(z);
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..n {
        acc += (z + k as f64).inv();
    }
    let w = z + n as f64;
    let wi2 = (w * w).inv();
    let mut s = w.ln() - 0.5 * w.inv();
    let mut p = wi2;
    for (k, b) in BERN.iter().enumerate() {
        let k2 = 2.0 * (k as f64 + 1.0);
        s -= p * (*b / k2);
        p *= wi2;
    }
    s - acc
}

/// The thinning exponent `beta = ln(1 - gamma)/(2 pi i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta {
    pub value: C64,
}

impl Beta {
    /// Build from a thinning parameter `gamma` in `[0, 1)`.
    pub fn from_gamma(gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Domain(format!(
                "thinning parameter {gamma} outside [0, 1)"
            )));
        }
        // ln(1-gamma) is real and <= 0, so beta = i * (-ln(1-gamma))/(2 pi)
        let y = -(1.0 - gamma).ln() / (2.0 * PI);
        Ok(Self {
            value: C64::new(0.0, y),
        })
    }

    /// `beta = i nu`, the parametrisation used for counting statistics.
    pub fn from_nu(nu: f64) -> Self {
        Self {
            value: C64::new(0.0, nu),
        }
    }

    pub fn new(value: C64) -> Self {
        Self { value }
    }

    pub fn imaginary(y: f64) -> Self {
        Self::from_nu(y)
    }

    pub fn is_imaginary(&self) -> bool {
        self.value.re == 0.0
    }

    /// `gamma = 1 - e^{2 pi i beta}`.
    pub fn gamma(&self) -> C64 {
        C64::new(1.0, 0.0) - (C64::new(0.0, 2.0 * PI) * self.value).exp()
    }
}

/// `(|Gamma(1+beta)|, |Gamma(1-beta)|, arg Gamma(1+beta))` for imaginary beta.
pub fn gamma_line(beta: Beta) -> Result<(f64, f64, f64)> {
    if !beta.is_imaginary() {
        return Err(Error::Domain(format!(
            "gamma_line needs Re beta = 0, got {}",
            beta.value
        )));
    }
    let one = C64::new(1.0, 0.0);
    let lp = ln_gamma(one + beta.value);
    let lm = ln_gamma(one - beta.value);
    Ok((lp.re.exp(), lm.re.exp(), lp.im))
}
