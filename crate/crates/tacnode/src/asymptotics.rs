//! Closed-form large gap expansions of `F = ln D` and of the Hamiltonian,
//! plus the counting statistics of the (thinned) process.

use crate::kernel::TacnodeParams;
use crate::specfun::gamma::ln_gamma;
use crate::specfun::{barnes_g_log_product, Beta, EULER_GAMMA};
use crate::{Error, Result, C64};
use serde::Serialize;
use std::f64::consts::PI;

/// Width of the band below `gamma = 1` where the branch choice is ambiguous.
pub const BRANCH_AMBIGUITY: f64 = 1e-12;

/// Options for [`f_expansion`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticOptions {
    /// The undetermined constant of the `gamma = 1` expansion.
    pub c: f64,
    /// Number of leading terms kept (counted from the largest power of `s`).
    pub include_orders: usize,
}

impl Default for AsymptoticOptions {
    fn default() -> Self {
        Self {
            c: 0.0,
            include_orders: usize::MAX,
        }
    }
}

impl AsymptoticOptions {
    pub fn validate(&self) -> Result<()> {
        if self.include_orders == 0 {
            return Err(Error::Domain("include_orders must be at least 1".into()));
        }
        Ok(())
    }
}

/// Which expansion was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Thinned,
    Unthinned,
}

/// A truncated expansion with its remainder order and caveats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expansion {
    pub value: f64,
    pub branch: Branch,
    /// The remainder is `O(s^error_exponent)`.
    pub error_exponent: f64,
    /// `true` when the value is only defined up to the user-supplied constant.
    pub offset_only: bool,
    pub warnings: Vec<String>,
}

/// Counting statistics of the number of particles in `(-s, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountingStats {
    pub mu: f64,
    pub sigma2: f64,
    pub var_const: f64,
    pub clt_bound: f64,
}

/// Bound on the Kolmogorov distance constant of the central limit theorem.
pub const CLT_BOUND: f64 = 3.0 * std::f64::consts::SQRT_2 / (2.0 * PI);

fn check_imag(z: C64, what: &str) -> Result<f64> {
    if z.im.abs() > 1e-12 * (1.0 + z.re.abs()) {
        return Err(Error::Internal(format!(
            "{what} has imaginary residue {:e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// `theta(s; r, s_par) = (2r/3) s^{3/2} - 2 s_par s + (3 i beta/2) ln s
/// + i beta ln(8 (r - s_par/s)) + arg Gamma(1 + beta)`.
pub fn theta_phase(s: f64, r: f64, s_par: f64, beta: Beta) -> Result<C64> {
    let inner = r - s_par / s;
    if !(s > 0.0) || !(inner > 0.0) {
        return Err(Error::Domain(format!(
            "phase needs s > 0 and r - s_par/s > 0, got s = {s}, r = {r}, s_par = {s_par}"
        )));
    }
    let b = beta.value;
    let i = C64::new(0.0, 1.0);
    let arg_gamma = ln_gamma(C64::new(1.0, 0.0) + b).im;
    Ok(C64::new(2.0 * r / 3.0 * s.powf(1.5) - 2.0 * s_par * s + arg_gamma, 0.0)
        + i * b * (1.5 * s.ln() + (8.0 * inner).ln()))
}

fn branch_of(params: &TacnodeParams) -> Result<(Branch, Vec<String>)> {
    params.validate()?;
    let mut warnings = Vec::new();
    if params.gamma == 1.0 {
        return Ok((Branch::Unthinned, warnings));
    }
    if 1.0 - params.gamma < BRANCH_AMBIGUITY {
        warnings.push(format!(
            "gamma = 1 - {:e}: beta diverges logarithmically, thinned branch used",
            1.0 - params.gamma
        ));
    }
    Ok((Branch::Thinned, warnings))
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::Domain(format!("expansions need s > 1, got {s}")));
    }
    Ok(())
}

fn sum_leading(terms: &[f64], keep: usize) -> f64 {
    terms.iter().take(keep).sum()
}

// Thinned branch of F for an arbitrary imaginary beta (also used for beta = -i nu).
fn f_thinned(s: f64, params: &TacnodeParams, beta: Beta, keep: usize) -> Result<f64> {
    let b = beta.value;
    let i = C64::new(0.0, 1.0);
    let (r1, r2, s1, s2) = (params.r1, params.r2, params.s1, params.s2);
    let t1 = check_imag(b * i * (4.0 * (r1 + r2) / 3.0) * s.powf(1.5), "s^{3/2} term")?;
    let t2 = check_imag(-b * i * (4.0 * (s1 + s2)) * s.sqrt(), "s^{1/2} term")?;
    let t3 = check_imag(-3.0 * b * b * s.ln(), "log term")?;
    let g = if b == C64::new(0.0, 0.0) {
        0.0
    } else {
        barnes_g_log_product(beta)?
    };
    let t4 = check_imag(2.0 * g - b * b * (64.0 * r1 * r2).ln(), "constant term")?;
    Ok(sum_leading(&[t1, t2, t3, t4], keep))
}

/// Large gap expansion of `F(s; gamma)`.
pub fn f_expansion(s: f64, params: &TacnodeParams, opts: &AsymptoticOptions) -> Result<Expansion> {
    check_s(s)?;
    opts.validate()?;
    let (branch, warnings) = branch_of(params)?;
    let (r1, r2, s1, s2) = (params.r1, params.r2, params.s1, params.s2);
    match branch {
        Branch::Unthinned => {
            let terms = [
                -(r1 * r1 + r2 * r2) * s.powi(3) / 12.0,
                (r1 * s1 + r2 * s2) * s * s / 2.0,
                -(s1 * s1 + s2 * s2) * s,
                -s.ln() / 4.0,
                opts.c,
            ];
            Ok(Expansion {
                value: sum_leading(&terms, opts.include_orders),
                branch,
                error_exponent: -1.0,
                offset_only: true,
                warnings,
            })
        }
        Branch::Thinned => {
            let beta = Beta::from_gamma(params.gamma)?;
            Ok(Expansion {
                value: f_thinned(s, params, beta, opts.include_orders)?,
                branch,
                error_exponent: -0.5,
                offset_only: false,
                warnings,
            })
        }
    }
}

/// Large-s expansion of the Hamiltonian `H = dF/ds`.
pub fn h_expansion(s: f64, params: &TacnodeParams) -> Result<Expansion> {
    check_s(s)?;
    let (branch, warnings) = branch_of(params)?;
    let (r1, r2, s1, s2) = (params.r1, params.r2, params.s1, params.s2);
    match branch {
        Branch::Unthinned => Ok(Expansion {
            value: -(r1 * r1 + r2 * r2) * s * s / 4.0 + (r1 * s1 + r2 * s2) * s
                - s1 * s1
                - s2 * s2
                - 1.0 / (4.0 * s),
            branch,
            error_exponent: -2.0,
            offset_only: false,
            warnings,
        }),
        Branch::Thinned => {
            let beta = Beta::from_gamma(params.gamma)?;
            let b = beta.value;
            let i = C64::new(0.0, 1.0);
            let v = if b == C64::new(0.0, 0.0) {
                C64::new(0.0, 0.0)
            } else {
                let th1 = theta_phase(s, r1, s1, beta)?;
                let th2 = theta_phase(s, r2, s2, beta)?;
                2.0 * i * b * (r1 + r2) * s.sqrt() - 2.0 * i * b * (s1 + s2) / s.sqrt()
                    - (3.0 * b * b + i * b / 2.0 * ((2.0 * th1).cos() + (2.0 * th2).cos())) / s
            };
            Ok(Expansion {
                value: check_imag(v, "H expansion")?,
                branch,
                error_exponent: -1.5,
                offset_only: false,
                warnings,
            })
        }
    }
}

/// Mean, variance and variance constant of the counting function.
pub fn counting_stats(s: f64, params: &TacnodeParams) -> Result<CountingStats> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("counting statistics need s > 0, got {s}")));
    }
    params.validate()?;
    let (r1, r2, s1, s2) = (params.r1, params.r2, params.s1, params.s2);
    Ok(CountingStats {
        mu: 2.0 * (r1 + r2) * s.powf(1.5) / (3.0 * PI) - 2.0 * (s1 + s2) * s.sqrt() / PI,
        sigma2: 3.0 * s.ln() / (2.0 * PI * PI),
        var_const: (2.0 + 2.0 * EULER_GAMMA + (64.0 * r1 * r2).ln()) / (2.0 * PI * PI),
        clt_bound: CLT_BOUND,
    })
}

/// Mean and variance extracted from the thinned expansion by finite
/// differences in `nu`, where `gamma(nu) = 1 - e^{-2 pi nu}` (so `beta = i nu`).
pub fn generating_check(
    s: f64,
    params: &TacnodeParams,
    nu: f64,
    opts: &AsymptoticOptions,
) -> Result<(f64, f64)> {
    check_s(s)?;
    opts.validate()?;
    params.validate()?;
    if !(nu > 0.0 && nu <= 1e-2) {
        return Err(Error::Domain(format!("nu = {nu} outside (0, 1e-2]")));
    }
    let f = |k: f64| f_thinned(s, params, Beta::imaginary(k * nu), opts.include_orders);
    let (fm2, fm1, f0, fp1, fp2) = (f(-2.0)?, f(-1.0)?, f(0.0)?, f(1.0)?, f(2.0)?);
    let d1 = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * nu);
    let d2 = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * nu * nu);
    Ok((-d1 / (2.0 * PI), d2 / (4.0 * PI * PI)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn theta_examples() {
        let b0 = Beta::imaginary(0.0);
        assert!((theta_phase(1.0, 1.0, 0.0, b0).unwrap() - C64::new(2.0 / 3.0, 0.0)).norm() < 1e-15);
        let want = 2.0 / 3.0 * 2f64.powf(1.5) - 2.0;
        assert!((theta_phase(2.0, 1.0, 0.5, b0).unwrap().re - want).abs() < 1e-14);
        assert!((want + 0.11438).abs() < 1e-5);
        assert!(theta_phase(0.5, 1.0, 0.6, b0).is_err());
        let t = theta_phase(3.0, 1.0, 0.2, Beta::imaginary(0.1)).unwrap();
        assert!(t.im.abs() < 1e-15);
    }

    #[test]
    fn f_examples() {
        let o = AsymptoticOptions::default();
        assert_eq!(f_expansion(5.0, &TacnodeParams::symmetric(0.0), &o).unwrap().value, 0.0);
        let v = f_expansion(2.0, &TacnodeParams::symmetric(1.0), &o).unwrap().value;
        assert!(close(v, -8.0 / 6.0 - 2f64.ln() / 4.0, 1e-15));
        assert!((v + 1.50662).abs() < 1e-5);
        let p = TacnodeParams::symmetric(0.5);
        let mut prev = f64::INFINITY;
        for k in 2..40 {
            let v = f_expansion(k as f64, &p, &o).unwrap().value;
            assert!(v < prev);
            prev = v;
        }
        assert!(f_expansion(1.0, &p, &o).is_err());
    }

    #[test]
    fn h_examples() {
        assert_eq!(h_expansion(5.0, &TacnodeParams::symmetric(0.0)).unwrap().value, 0.0);
        let v = h_expansion(2.0, &TacnodeParams::symmetric(1.0)).unwrap().value;
        assert!(close(v, -2.125, 1e-15));
    }

    #[test]
    fn derivative_consistency_unthinned() {
        let p = TacnodeParams { r1: 1.2, r2: 0.8, s1: 0.3, s2: -0.1, tau: 0.0, gamma: 1.0 };
        let o = AsymptoticOptions::default();
        let (s, h) = (10.0, 1e-3);
        let fd = (f_expansion(s + h, &p, &o).unwrap().value - f_expansion(s - h, &p, &o).unwrap().value) / (2.0 * h);
        let hv = h_expansion(s, &p).unwrap().value;
        assert!((fd - hv).abs() <= 1e-6 * hv.abs());
    }

    #[test]
    fn counting_examples() {
        let p = TacnodeParams::symmetric(0.5);
        let c = counting_stats(1.0, &p).unwrap();
        assert!(close(c.mu, 4.0 / (3.0 * PI), 1e-15));
        assert_eq!(c.sigma2, 0.0);
        assert!((c.var_const - 0.370_496_836_345_108_7).abs() < 1e-14);
        assert!((c.clt_bound - 0.67524).abs() < 1e-5);
    }

    #[test]
    fn generating() {
        let p = TacnodeParams::symmetric(0.5);
        let o = AsymptoticOptions::default();
        let (mu, s2) = generating_check(100.0, &p, 1e-4, &o).unwrap();
        let c = counting_stats(100.0, &p).unwrap();
        assert!((mu - c.mu).abs() <= 1e-3 * c.mu);
        assert!((s2 - c.sigma2 - c.var_const).abs() <= 1e-2);
    }

    #[test]
    fn swap_invariance() {
        let p = TacnodeParams { r1: 1.2, r2: 0.8, s1: 0.3, s2: -0.1, tau: 0.0, gamma: 0.4 };
        let o = AsymptoticOptions::default();
        for s in [2.0, 7.0] {
            assert_eq!(f_expansion(s, &p, &o).unwrap().value, f_expansion(s, &p.swapped(), &o).unwrap().value);
        }
    }
}
