//! `ln(G(1+beta) G(1-beta))` on the imaginary axis.
//!
//! With `w = beta^2` the Maclaurin series of `ln G(1+z)` collapses to
//!
//! ```text
//! ln(G(1+z)G(1-z)) = -(1+gamma_E) w - sum_{m>=2} zeta(2m-1) w^m / m
//! ```
//!
//! The `1 + 2^{-n} + 3^{-n}` part of each zeta value is summed in closed form
//! (`-ln(1-w/k^2)`-type sums); what is left converges like `(|w|/16)^m`.

use super::gamma::{Beta, EULER_GAMMA};
use crate::{Error, Result};
use std::sync::OnceLock;

const ZETA_TABLE: usize = 64;

/// Riemann zeta at an integer `n >= 2` via Euler-Maclaurin with sixteen leading
/// terms.
pub fn zeta_int(n: u32) -> f64 {
    assert!(n >= 2, "zeta_int needs n >= 2");
    let nf = n as f64;
    if n > 60 {
        return 1.0 + 2f64.powf(-nf) + 3f64.powf(-nf);
    }
    const N: f64 = 16.0;
    // B_{2j}/(2j)!
    const C: [f64; 6] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1_209_600.0,
        1.0 / 47_900_160.0,
        -691.0 / 1_307_674_368_000.0,
    ];
    let mut tail = N.powf(1.0 - nf) / (nf - 1.0) + 0.5 * N.powf(-nf);
    let mut rising = nf; // (n)_{2j-1}
    let mut pw = N.powf(-nf - 1.0);
    for (j, c) in C.iter().enumerate() {
        tail += c * rising * pw;
        let a = nf + 2.0 * j as f64 + 1.0;
        rising *= a * (a + 1.0);
        pw /= N * N;
    }
    // smallest terms first
    let mut s = tail;
    for k in (2..16).rev() {
        s += (k as f64).powf(-nf);
    }
    s + 1.0
}

fn zeta_odd_table() -> &'static [f64; ZETA_TABLE] {
    static T: OnceLock<[f64; ZETA_TABLE]> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = [0.0; ZETA_TABLE];
        // t[m] = zeta(2m-1) - 1 - 2^{1-2m} - 3^{1-2m}, m >= 2
        for (m, v) in t.iter_mut().enumerate().skip(2) {
            let n = 2 * m as u32 - 1;
            let nf = n as f64;
            *v = zeta_int(n) - 1.0 - 2f64.powf(-nf) - 3f64.powf(-nf);
        }
        t
    })
}

// sum_{m>=2} x^m/m = -ln(1-x) - x, for real x < 1
fn log_tail(x: f64) -> f64 {
    -(-x).ln_1p() - x
}

/// `ln(G(1+beta)G(1-beta))` for purely imaginary `beta` with `|beta| < 1`.
pub fn barnes_g_log_product(beta: Beta) -> Result<f64> {
    if !beta.is_imaginary() {
        return Err(Error::Domain(format!(
            "Barnes product needs Re beta = 0, got {}",
            beta.value
        )));
    }
    let y = beta.value.im;
    if y.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "|Im beta| = {} >= 1: series diverges",
            y.abs()
        )));
    }
    let w = -y * y;
    // closed-form part: sum_m (1 + 2^{1-2m} + 3^{1-2m}) w^m/m
    let closed = log_tail(w) + 2.0 * log_tail(w / 4.0) + 3.0 * log_tail(w / 9.0);
    let t = zeta_odd_table();
    let mut rest = 0.0;
    let mut wm = w;
    for (m, tm) in t.iter().enumerate().skip(2) {
        wm *= w;
        let term = tm * wm / m as f64;
        rest += term;
        if term.abs() < 1e-18 * rest.abs().max(1e-300) {
            break;
        }
    }
    Ok(-(1.0 + EULER_GAMMA) * w - closed - rest)
}
