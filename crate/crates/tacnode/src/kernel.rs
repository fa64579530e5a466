//! The Airy kernel, the tacnode kernel and the thinned gap probability
//! `F(s; gamma) = ln det(I - gamma K_tac)` on `(-s, s)`.
//!
//! # Kernel representation
//!
//! For `r1 = r2 = 1`, `s1 = s2 = sigma/2` and `tau = 0` the tacnode kernel is
//! written with Airy resolvents on the half-line `[sigma, inf)`:
//!
//! ```text
//! e_pm(x)(v) = Ai(v + x) pm Ai(v - x)
//! T(v, v')   = 2^{-1/3} Ai(2^{-1/3} (v + v'))
//! K(x, y)    = 1/2 <e_+(x), (I + T)^{-1} e_+(y)> + 1/2 <e_-(x), (I - T)^{-1} e_-(y)>
//! ```
//!
//! with all inner products on `L^2(sigma, inf)`.  General `r1 = r2 = r`,
//! `s1 = s2` follows from the scaling `K_r(x, y) = l K_1(l x, l y)` with
//! `l = r^{2/3}` and `s1 -> s1 r^{-1/3}`.  Other parameter regimes are
//! rejected with [`Error::Unsupported`].
//!
//! The half-line is truncated at `sigma + l*window + cut`, where `window`
//! bounds `|x|, |y|`; beyond that every Airy factor is below `Ai(cut)`.

use crate::quad::{build_grid_on, checked_lu, fredholm_log_det, log_det_positive, trace_powers, Domain, GapResult};
use crate::specfun::airy::{ai, airy_ai_pair};
use crate::{Error, Result};
use nalgebra::{DMatrix, LU, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Parameters of the tacnode kernel plus the thinning `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TacnodeParams {
    pub r1: f64,
    pub r2: f64,
    pub s1: f64,
    pub s2: f64,
    pub tau: f64,
    pub gamma: f64,
}

impl Default for TacnodeParams {
    fn default() -> Self {
        Self::symmetric(0.5)
    }
}

impl TacnodeParams {
    /// `r1 = r2 = 1`, `s1 = s2 = tau = 0`.
    pub fn symmetric(gamma: f64) -> Self {
        Self {
            r1: 1.0,
            r2: 1.0,
            s1: 0.0,
            s2: 0.0,
            tau: 0.0,
            gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.r1, self.r2, self.s1, self.s2, self.tau, self.gamma];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("parameters must be finite".into()));
        }
        if !(self.r1 > 0.0 && self.r2 > 0.0) {
            return Err(Error::Domain(format!(
                "need r1, r2 > 0, got r1 = {}, r2 = {}",
                self.r1, self.r2
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Domain(format!("gamma = {} outside [0, 1]", self.gamma)));
        }
        Ok(())
    }

    /// `(r1, s1) <-> (r2, s2)`.
    pub fn swapped(&self) -> Self {
        Self {
            r1: self.r2,
            r2: self.r1,
            s1: self.s2,
            s2: self.s1,
            ..*self
        }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..*self }
    }

    pub fn is_symmetric(&self) -> bool {
        self.r1 == self.r2 && self.s1 == self.s2
    }
}

/// How the Airy kernel is evaluated on (or very near) the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagonalPolicy {
    /// Closed-form limit `Ai'(x)^2 - x Ai(x)^2`.
    Analytic,
    /// `(4 K(h/2) - K(h))/3` from symmetric offsets, `h = 1e-5 (1 + |x|)`.
    Richardson,
}

/// Discretisation of the inner Airy operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEvalConfig {
    /// Length of the inner interval beyond `sigma + window` (upper truncation).
    pub airy_domain_cut: f64,
    /// Gauss-Legendre nodes on the inner interval.
    pub airy_nodes: usize,
    pub diagonal_offset_policy: DiagonalPolicy,
}

impl Default for KernelEvalConfig {
    fn default() -> Self {
        Self {
            airy_domain_cut: 16.0,
            airy_nodes: 128,
            diagonal_offset_policy: DiagonalPolicy::Analytic,
        }
    }
}

impl KernelEvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.airy_nodes < 32 {
            return Err(Error::Domain(format!(
                "airy_nodes = {} must be >= 32",
                self.airy_nodes
            )));
        }
        if !(self.airy_domain_cut.is_finite() && self.airy_domain_cut > 0.0) {
            return Err(Error::Domain(format!(
                "airy_domain_cut = {} must be finite and positive",
                self.airy_domain_cut
            )));
        }
        Ok(())
    }
}

fn raw_airy_kernel(x: f64, y: f64) -> f64 {
    let (ax, apx) = airy_ai_pair(x).expect("Airy argument in range");
    if (x - y).abs() < 1e-8 * (1.0 + x.abs()) {
        let m = 0.5 * (x + y);
        let (a, ap) = airy_ai_pair(m).expect("Airy argument in range");
        return ap * ap - m * a * a;
    }
    let (ay, apy) = airy_ai_pair(y).expect("Airy argument in range");
    (ax * apy - apx * ay) / (x - y)
}

/// Airy kernel `(Ai(x)Ai'(y) - Ai'(x)Ai(y))/(x - y)`.
pub fn airy_kernel(x: f64, y: f64) -> f64 {
    raw_airy_kernel(x, y)
}

/// Airy kernel with an explicit diagonal policy.
pub fn airy_kernel_with(x: f64, y: f64, policy: DiagonalPolicy) -> f64 {
    match policy {
        DiagonalPolicy::Analytic => raw_airy_kernel(x, y),
        DiagonalPolicy::Richardson => {
            if (x - y).abs() >= 1e-8 * (1.0 + x.abs()) {
                return raw_airy_kernel(x, y);
            }
            let m = 0.5 * (x + y);
            let h = 1e-5 * (1.0 + m.abs());
            let k1 = raw_airy_kernel(m - h, m + h);
            let k2 = raw_airy_kernel(m - 0.5 * h, m + 0.5 * h);
            (4.0 * k2 - k1) / 3.0
        }
    }
}

fn check_supported(params: &TacnodeParams) -> Result<()> {
    params.validate()?;
    if !params.is_symmetric() {
        return Err(Error::Unsupported(format!(
            "kernel mapping is only available for r1 = r2, s1 = s2 (got r1 = {}, r2 = {}, s1 = {}, s2 = {})",
            params.r1, params.r2, params.s1, params.s2
        )));
    }
    if params.tau != 0.0 {
        return Err(Error::Unsupported(format!(
            "kernel mapping is only available for tau = 0 (got {})",
            params.tau
        )));
    }
    Ok(())
}

/// Factorised inner Airy operator for one `(window, params, cfg)`; shared
/// read-only by all kernel evaluations.
pub struct TacnodeResolvent {
    scale: f64,
    nodes: Vec<f64>,
    sqrt_w: Vec<f64>,
    plus: LU<f64, Dyn, Dyn>,
    minus: LU<f64, Dyn, Dyn>,
}

impl TacnodeResolvent {
    /// Cache valid for `|x|, |y| <= window`.
    pub fn new(params: &TacnodeParams, window: f64, cfg: &KernelEvalConfig) -> Result<Self> {
        check_supported(params)?;
        cfg.validate()?;
        let r = params.r1;
        let scale = r.powf(2.0 / 3.0);
        let sigma = 2.0 * params.s1 * r.powf(-1.0 / 3.0);
        let upper = sigma + scale * window.abs() + cfg.airy_domain_cut;
        if sigma < -1.0e3 {
            return Err(Error::Domain(format!("inner cut {sigma} too far left")));
        }
        let c = 2f64.powf(-1.0 / 3.0);
        let grid = build_grid_on(
            |u, v| Ok(c * ai(c * (u + v))),
            Domain::Interval { a: sigma, b: upper },
            cfg.airy_nodes,
        )?;
        let m = grid.order;
        let id = DMatrix::<f64>::identity(m, m);
        let plus = checked_lu(&id + &grid.sym_matrix, "inner operator I + T")?;
        let minus = checked_lu(&id - &grid.sym_matrix, "inner operator I - T")?;
        let sqrt_w = grid.weights.iter().map(|w| w.sqrt()).collect();
        Ok(Self {
            scale,
            nodes: grid.nodes,
            sqrt_w,
            plus,
            minus,
        })
    }

    // columns e_pm(l x_j), weighted
    fn e_matrices(&self, xs: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let m = self.nodes.len();
        let cols: Vec<(Vec<f64>, Vec<f64>)> = xs
            .par_iter()
            .map(|&x| {
                let lx = self.scale * x;
                let mut p = vec![0.0; m];
                let mut q = vec![0.0; m];
                for k in 0..m {
                    let a = ai(self.nodes[k] + lx);
                    let b = ai(self.nodes[k] - lx);
                    p[k] = (a + b) * self.sqrt_w[k];
                    q[k] = (a - b) * self.sqrt_w[k];
                }
                (p, q)
            })
            .collect();
        let ep = DMatrix::from_fn(m, xs.len(), |k, j| cols[j].0[k]);
        let em = DMatrix::from_fn(m, xs.len(), |k, j| cols[j].1[k]);
        (ep, em)
    }

    /// `K(x_i, y_j)` for all pairs.
    pub fn kernel_matrix(&self, xs: &[f64], ys: &[f64]) -> DMatrix<f64> {
        let (epx, emx) = self.e_matrices(xs);
        let (epy, emy) = if xs == ys {
            (epx.clone(), emx.clone())
        } else {
            self.e_matrices(ys)
        };
        let sp = self.plus.solve(&epy).expect("factorisation checked");
        let sm = self.minus.solve(&emy).expect("factorisation checked");
        (epx.transpose() * sp + emx.transpose() * sm) * (0.5 * self.scale)
    }

    /// Single kernel value.
    pub fn kernel(&self, x: f64, y: f64) -> f64 {
        self.kernel_matrix(&[x], &[y])[(0, 0)]
    }
}

/// `K_tac(x, y)`; independent of `params.gamma`.
pub fn tacnode_kernel(x: f64, y: f64, params: &TacnodeParams, cfg: &KernelEvalConfig) -> Result<f64> {
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::Domain("kernel arguments must be finite".into()));
    }
    let res = TacnodeResolvent::new(params, x.abs().max(y.abs()), cfg)?;
    let v = res.kernel(x, y);
    if !v.is_finite() {
        return Err(Error::NonFinite { x, y });
    }
    Ok(v)
}

/// Symmetrised Nystrom matrix of `K_tac` on `(-s, s)` with `n` nodes.
pub fn tacnode_grid(s: f64, params: &TacnodeParams, n: usize, cfg: &KernelEvalConfig) -> Result<crate::quad::KernelGrid> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("s = {s} must be positive")));
    }
    let res = TacnodeResolvent::new(params, s, cfg)?;
    let domain = Domain::symmetric(s);
    let (nodes, weights) = domain.rule(n)?;
    let k = res.kernel_matrix(&nodes, &nodes);
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let mut a = DMatrix::from_fn(n, n, |i, j| sw[i] * k[(i, j)] * sw[j]);
    // exact symmetry; the two triangles differ only by rounding
    a = (&a + a.transpose()) * 0.5;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Internal("non-finite tacnode matrix entry".into()));
    }
    Ok(crate::quad::KernelGrid {
        half_width: s,
        order: n,
        nodes,
        weights,
        sym_matrix: a,
        domain,
    })
}

fn log_det_on(s: f64, params: &TacnodeParams, n: usize, cfg: &KernelEvalConfig) -> Result<GapResult> {
    let grid = tacnode_grid(s, params, n, cfg)?;
    fredholm_log_det(&grid, params.gamma)
}

/// `F(s; gamma)` with the outer grid doubled from `n` to `2n`; the result
/// carries the finer value and `|F(n) - F(2n)|`.
pub fn gap_log_probability(s: f64, params: &TacnodeParams, n: usize, cfg: &KernelEvalConfig) -> Result<GapResult> {
    params.validate()?;
    if n < 16 {
        return Err(Error::Domain(format!("outer order {n} must be >= 16")));
    }
    if !(s > 0.0) {
        return Err(Error::Domain(format!("s = {s} must be positive")));
    }
    if params.gamma == 0.0 {
        check_supported(params)?;
        return Ok(GapResult {
            log_det: 0.0,
            gamma: 0.0,
            s,
            order_used: n,
            doubling_delta: 0.0,
        });
    }
    let coarse = log_det_on(s, params, n, cfg)?;
    let mut fine = log_det_on(s, params, 2 * n, cfg)?;
    fine.doubling_delta = (fine.log_det - coarse.log_det).abs();
    fine.s = s;
    Ok(fine)
}

/// `(ln det, -sum_{m<=3} gamma^m tr(K^m)/m, |difference|)` for small `s`.
pub fn small_s_series_check(
    s: f64,
    params: &TacnodeParams,
    n: usize,
    cfg: &KernelEvalConfig,
) -> Result<(f64, f64, f64)> {
    if !(s > 0.0 && s <= 0.1) {
        return Err(Error::Domain(format!("small-s check needs 0 < s <= 0.1, got {s}")));
    }
    params.validate()?;
    let g = params.gamma;
    if g == 0.0 {
        return Ok((0.0, 0.0, 0.0));
    }
    let grid = tacnode_grid(s, params, n, cfg)?;
    let n_ = grid.order;
    let ld = log_det_positive(DMatrix::identity(n_, n_) - &grid.sym_matrix * g, "I - gamma K")?;
    let tp = trace_powers(&grid, 3)?;
    let series: f64 = -tp
        .iter()
        .enumerate()
        .map(|(k, t)| g.powi(k as i32 + 1) * t / (k as f64 + 1.0))
        .sum::<f64>();
    Ok((ld, series, (ld - series).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn airy_kernel_origin() {
        let k = airy_kernel(0.0, 0.0);
        assert!((k - 0.258_819_403_792_806_8f64.powi(2)).abs() < 1e-15);
        assert!((k - 0.066_987_483).abs() < 1e-9);
    }

    #[test]
    fn airy_kernel_near_diagonal() {
        for x in [-2.0, 0.0, 2.0] {
            let d = (airy_kernel(x, x + 1e-6) - airy_kernel(x, x)).abs();
            assert!(d <= 1e-5, "x = {x}: {d}");
            let r = airy_kernel_with(x, x, DiagonalPolicy::Richardson);
            assert!((r - airy_kernel(x, x)).abs() < 1e-8);
        }
    }

    #[test]
    fn unsupported_regimes() {
        let cfg = KernelEvalConfig::default();
        let mut p = TacnodeParams::symmetric(0.5);
        p.r2 = 2.0;
        assert!(matches!(tacnode_kernel(0.1, 0.2, &p, &cfg), Err(Error::Unsupported(_))));
        let mut p = TacnodeParams::symmetric(0.5);
        p.tau = 0.3;
        assert!(matches!(tacnode_kernel(0.1, 0.2, &p, &cfg), Err(Error::Unsupported(_))));
        let bad = KernelEvalConfig {
            airy_nodes: 8,
            ..cfg
        };
        assert!(tacnode_kernel(0.1, 0.2, &TacnodeParams::symmetric(0.5), &bad).is_err());
    }

    #[test]
    fn gamma_zero_is_exactly_zero() {
        let cfg = KernelEvalConfig::default();
        for s in [1.0, 2.0] {
            let r = gap_log_probability(s, &TacnodeParams::symmetric(0.0), 16, &cfg).unwrap();
            assert_eq!(r.log_det, 0.0);
        }
    }
}
