//! Nystrom discretisation of integral operators and Fredholm determinants.
//!
//! An operator `K` on `L^2(domain)` is replaced by the symmetrised matrix
//! `A_ij = sqrt(w_i) K(x_i, x_j) sqrt(w_j)` built from a Gauss-Legendre rule,
//! so that `det(I - gamma K) ~ det(I - gamma A)`.

use crate::specfun::legendre::gauss_legendre_rule;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen, LU};
use rayon::prelude::*;

/// Default decay length for the half-line map.
pub const HALF_LINE_SCALE: f64 = 4.0;

/// Integration domain of the operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `(a, b)`, mapped affinely.
    Interval { a: f64, b: f64 },
    /// `(a, inf)`, mapped by `x = a + L (1 + t)/(1 - t)`.
    HalfLine { a: f64, scale: f64 },
}

impl Domain {
    pub fn symmetric(s: f64) -> Self {
        Domain::Interval { a: -s, b: s }
    }

    pub fn half_line(a: f64) -> Self {
        Domain::HalfLine {
            a,
            scale: HALF_LINE_SCALE,
        }
    }

    /// Nodes and weights of an `n`-point rule on this domain.
    pub fn rule(&self, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let r = gauss_legendre_rule(n)?;
        Ok(match *self {
            Domain::Interval { a, b } => r.mapped(a, b),
            Domain::HalfLine { a, scale } => r
                .nodes
                .iter()
                .zip(&r.weights)
                .map(|(t, w)| {
                    let d = 1.0 - t;
                    (a + scale * (1.0 + t) / d, w * 2.0 * scale / (d * d))
                })
                .unzip(),
        })
    }
}

/// Discretised symmetrised kernel.
#[derive(Debug, Clone)]
pub struct KernelGrid {
    /// `s` for the interval `(-s, s)`; half the length for other intervals,
    /// infinite for a half-line.
    pub half_width: f64,
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub sym_matrix: DMatrix<f64>,
    pub domain: Domain,
}

/// `F = ln det(I - gamma K)` with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapResult {
    pub log_det: f64,
    pub gamma: f64,
    pub s: f64,
    pub order_used: usize,
    /// `|F(n) - F(2n)|`; zero when no doubling was requested.
    pub doubling_delta: f64,
}

/// Build the grid for `kernel` on `(-s, s)` with `n` nodes.
pub fn build_grid<K>(kernel: K, s: f64, n: usize) -> Result<KernelGrid>
where
    K: Fn(f64, f64) -> f64 + Sync,
{
    if !(s > 0.0) {
        return Err(Error::Domain(format!("half width {s} must be positive")));
    }
    if n < 2 {
        return Err(Error::Domain(format!("grid order {n} must be >= 2")));
    }
    build_grid_on(|x, y| Ok(kernel(x, y)), Domain::symmetric(s), n)
}

/// Build the grid for a fallible kernel on an arbitrary domain.
pub fn build_grid_on<K>(kernel: K, domain: Domain, n: usize) -> Result<KernelGrid>
where
    K: Fn(f64, f64) -> Result<f64> + Sync,
{
    let (nodes, weights) = domain.rule(n)?;
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    // row-major, one row per task
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (x, y) = (nodes[i], nodes[j]);
                    let k = kernel(x, y)?;
                    if !k.is_finite() {
                        return Err(Error::NonFinite { x, y });
                    }
                    Ok(sw[i] * k * sw[j])
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let sym_matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let half_width = match domain {
        Domain::Interval { a, b } => 0.5 * (b - a),
        Domain::HalfLine { .. } => f64::INFINITY,
    };
    Ok(KernelGrid {
        half_width,
        order: n,
        nodes,
        weights,
        sym_matrix,
        domain,
    })
}

fn pivot_floor(m: &DMatrix<f64>) -> f64 {
    64.0 * f64::EPSILON * m.amax().max(1.0) * m.nrows() as f64
}

/// LU factorisation that rejects numerically singular matrices.
pub fn checked_lu(m: DMatrix<f64>, what: &str) -> Result<LU<f64, Dyn, Dyn>> {
    let floor = pivot_floor(&m);
    let lu = m.lu();
    let u = lu.u();
    for i in 0..u.nrows() {
        if u[(i, i)].abs() <= floor {
            return Err(Error::BoundaryDegenerate(format!(
                "{what}: pivot {i} is {:e}, operator is numerically singular",
                u[(i, i)]
            )));
        }
    }
    Ok(lu)
}

/// `ln det(M)` for a matrix expected to have positive determinant.
pub fn log_det_positive(m: DMatrix<f64>, what: &str) -> Result<f64> {
    let lu = checked_lu(m, what)?;
    let u = lu.u();
    let mut sign = lu.p().determinant::<f64>();
    let mut acc = 0.0;
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        if d < 0.0 {
            sign = -sign;
        }
        acc += d.abs().ln();
    }
    if sign < 0.0 {
        return Err(Error::BoundaryDegenerate(format!(
            "{what}: determinant is negative, eigenvalue of gamma K exceeds 1"
        )));
    }
    Ok(acc)
}

/// `ln det(I - gamma A)` on a grid.
pub fn fredholm_log_det(grid: &KernelGrid, gamma: f64) -> Result<GapResult> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!("gamma = {gamma} outside [0, 1]")));
    }
    let log_det = if gamma == 0.0 {
        0.0
    } else {
        let n = grid.order;
        let m = DMatrix::identity(n, n) - &grid.sym_matrix * gamma;
        log_det_positive(m, "I - gamma K")?
    };
    Ok(GapResult {
        log_det,
        gamma,
        s: grid.half_width,
        order_used: grid.order,
        doubling_delta: 0.0,
    })
}

/// Fredholm determinant at `n` and `2n` nodes; returns the finer value with
/// the change as `doubling_delta`.
pub fn fredholm_log_det_doubled<K>(kernel: K, domain: Domain, n: usize, gamma: f64) -> Result<GapResult>
where
    K: Fn(f64, f64) -> Result<f64> + Sync,
{
    let coarse = fredholm_log_det(&build_grid_on(&kernel, domain, n)?, gamma)?;
    let mut fine = fredholm_log_det(&build_grid_on(&kernel, domain, 2 * n)?, gamma)?;
    fine.doubling_delta = (fine.log_det - coarse.log_det).abs();
    Ok(fine)
}

/// `tr(A^m)` for `m = 1..=m_max`.
pub fn trace_powers(grid: &KernelGrid, m_max: usize) -> Result<Vec<f64>> {
    if m_max < 1 {
        return Err(Error::Domain("m_max must be >= 1".into()));
    }
    let a = &grid.sym_matrix;
    let mut p = a.clone();
    let mut out = Vec::with_capacity(m_max);
    out.push(p.trace());
    for _ in 1..m_max {
        p = &p * a;
        out.push(p.trace());
    }
    Ok(out)
}

/// `(I - gamma K)^{-1} rhs` in node coordinates.
pub fn resolvent_apply(grid: &KernelGrid, gamma: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = grid.order;
    if rhs.len() != n {
        return Err(Error::Domain(format!(
            "rhs has length {}, grid has {n} nodes",
            rhs.len()
        )));
    }
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let m = DMatrix::identity(n, n) - &grid.sym_matrix * gamma;
    let b = DVector::from_fn(n, |i, _| sw[i] * rhs[i]);
    let lu = checked_lu(m, "I - gamma K")?;
    let sol = lu.solve(&b).ok_or_else(|| {
        Error::BoundaryDegenerate("I - gamma K is singular on this grid".into())
    })?;
    Ok((0..n).map(|i| sol[i] / sw[i]).collect())
}

/// Eigenvalues of the symmetrised matrix, ascending.
pub fn eigenvalues(grid: &KernelGrid) -> Vec<f64> {
    let a = &grid.sym_matrix;
    let s = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::airy_kernel;

    #[test]
    fn rank_one_constant() {
        let g = build_grid(|_, _| 0.5, 1.0, 8).unwrap();
        assert!((g.sym_matrix.trace() - 1.0).abs() < 1e-14);
        assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for gamma in [0.1, 0.5, 0.9] {
            let r = fredholm_log_det(&g, gamma).unwrap();
            assert!((r.log_det - (1.0 - gamma).ln()).abs() < 1e-12);
        }
        let tp = trace_powers(&g, 5).unwrap();
        assert!(tp.iter().all(|t| (t - 1.0).abs() < 1e-13));
        let ev = eigenvalues(&g);
        assert!((ev[7] - 1.0).abs() < 1e-13 && ev[0].abs() < 1e-13);
    }

    #[test]
    fn zero_kernel_and_gamma() {
        let g = build_grid(|_, _| 0.0, 2.0, 6).unwrap();
        assert!(g.sym_matrix.iter().all(|v| *v == 0.0));
        assert_eq!(trace_powers(&g, 3).unwrap(), vec![0.0; 3]);
        let g = build_grid(|x, y| (x * y).cos(), 1.0, 6).unwrap();
        assert_eq!(fredholm_log_det(&g, 0.0).unwrap().log_det, 0.0);
    }

    #[test]
    fn singular_at_gamma_one() {
        let g = build_grid(|_, _| 0.5, 1.0, 8).unwrap();
        match fredholm_log_det(&g, 1.0) {
            Err(Error::BoundaryDegenerate(_)) => {}
            other => panic!("expected boundary-degenerate, got {other:?}"),
        }
        assert!(matches!(
            resolvent_apply(&g, 1.0, &[1.0; 8]),
            Err(Error::BoundaryDegenerate(_))
        ));
    }

    #[test]
    fn resolvent_rank_one() {
        let g = build_grid(|_, _| 0.5, 1.0, 8).unwrap();
        let r = resolvent_apply(&g, 0.0, &[3.0; 8]).unwrap();
        assert!(r.iter().all(|v| *v == 3.0));
        let r = resolvent_apply(&g, 0.6, &[1.0; 8]).unwrap();
        assert!(r.iter().all(|v| (v - 2.5).abs() < 1e-13));
    }

    #[test]
    fn non_finite_reported() {
        let e = build_grid(|x, _| if x > 0.5 { f64::NAN } else { 1.0 }, 1.0, 8).unwrap_err();
        assert!(matches!(e, Error::NonFinite { .. }));
    }

    #[test]
    fn airy_trace_matches_direct_sum() {
        let g = build_grid_on(|x, y| Ok(airy_kernel(x, y)), Domain::half_line(0.0), 60).unwrap();
        let direct: f64 = g
            .nodes
            .iter()
            .zip(&g.weights)
            .map(|(x, w)| w * airy_kernel(*x, *x))
            .sum();
        assert!((g.sym_matrix.trace() - direct).abs() < 1e-14);
    }
}
