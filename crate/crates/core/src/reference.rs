//! Classical ground truth: direct solve, point Gauss-Seidel and 2-norm
//! condition number estimates.

use crate::error::{Error, Result};
use crate::linalg::{power_iteration, LinearSystem, LuFactor};
use crate::solver::{relative_error, residual, IterationRecord, IterationTrace};

/// Dense Gaussian elimination with partial pivoting.
pub fn direct_solve(system: &LinearSystem) -> Result<Vec<f64>> {
    LuFactor::new(&system.a.to_dense())?.solve(&system.b)
}

/// Element-wise Gauss-Seidel from `x = 0`.
pub fn classical_gauss_seidel(
    system: &LinearSystem,
    tolerance: f64,
    max_iters: usize,
    exact_solution: Option<&[f64]>,
) -> Result<IterationTrace> {
    let n = system.dim();
    let diag: Vec<f64> = (0..n).map(|i| system.a.get(i, i)).collect();
    if let Some(i) = diag.iter().position(|&d| d == 0.0) {
        return Err(Error::ZeroDiagonal(i));
    }
    let mut x = vec![0.0; n];
    let mut trace = IterationTrace::default();
    for k in 1..=max_iters {
        for i in 0..n {
            let off: f64 = system
                .a
                .row(i)
                .iter()
                .filter(|&&(j, _)| j != i)
                .map(|&(j, v)| v * x[j])
                .sum();
            x[i] = (system.b[i] - off) / diag[i];
        }
        let res = residual(system, &x)?;
        trace.absolute_residual = res.absolute;
        trace.records.push(IterationRecord {
            k,
            x: x.clone(),
            residual: res.value,
            relative_error: exact_solution.map(|e| relative_error(&x, e)).transpose()?,
            block_energies: Vec::new(),
            clipped_blocks: Vec::new(),
            halfwidth_max: 0.0,
        });
        if res.value <= tolerance {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionEstimate {
    pub kappa: f64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// Both power iterations met their stopping criterion.
    pub converged: bool,
}

/// `sigma_max / sigma_min` from power iteration on `A^T A` and on
/// `(A^T A)^-1` (through the LU factors of `A`).
pub fn condition_number(system: &LinearSystem) -> Result<ConditionEstimate> {
    let a = system.a.to_dense();
    let lu = LuFactor::new(&a)?;
    let n = system.dim();
    let top = power_iteration(n, |v| a.transpose_mul_vec(&a.mul_vec(v)?))?;
    let inv = power_iteration(n, |v| lu.solve(&lu.solve_transpose(v)?))?;
    let sigma_max = top.value.sqrt();
    let sigma_min = 1.0 / inv.value.sqrt();
    Ok(ConditionEstimate {
        kappa: sigma_max / sigma_min,
        sigma_max,
        sigma_min,
        converged: top.converged && inv.converged,
    })
}
