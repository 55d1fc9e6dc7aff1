//! Dense symmetric eigendecomposition and the eigenvalue-count bound M0.
//!
//! M0 is the negative-eigenvalue budget of the monotonicity test: the number
//! of eigenvalues of the background pencil `K x = theta M_1 x` below
//! `omega^2 rho`, read off as the negative-pivot count of `K - omega^2 M` by
//! Sylvester's law.

use nalgebra::DMatrix;

use crate::fem::AssembledSystem;
use crate::linsolve::{self, LinSolveError};

/// Default relative tolerance below which an eigenvalue counts as zero.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// All eigenvalues of a (nearly) symmetric dense matrix, ascending, counted
/// with multiplicity. The input is symmetrized first.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let sym = 0.5 * (a + a.transpose());
    let mut eigs: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(f64::total_cmp);
    eigs
}

/// Number of eigenvalues below `-rel_tol * scale`.
pub fn count_negative(eigs: &[f64], scale: f64, rel_tol: f64) -> usize {
    let threshold = -rel_tol * scale;
    eigs.iter().filter(|&&v| v < threshold).count()
}

/// Spectral norm estimate for [`count_negative`] thresholds: the largest
/// eigenvalue magnitude.
pub fn spectral_scale(eigs: &[f64]) -> f64 {
    eigs.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

/// Result of the M0 computation.
#[derive(Debug, Clone, Copy)]
pub struct M0Result {
    pub m0: usize,
    /// True when the pencil had (numerically) zero pivots, i.e. omega sits on
    /// a discrete eigenfrequency; the count then excludes the zeros.
    pub at_resonance: bool,
}

/// Count the eigenvalues of the background system below the shift
/// `omega^2 rho` (the theoretical negative-eigenvalue budget of the
/// monotonicity test), as the negative inertia of `K - omega^2 M`.
pub fn compute_m0(
    system: &AssembledSystem,
    omega: f64,
    zero_pivot_rel: f64,
) -> Result<M0Result, LinSolveError> {
    let pencil = system.pencil_reduced(omega);
    let inertia = linsolve::inertia(&pencil, zero_pivot_rel)?;
    Ok(M0Result {
        m0: inertia.n_neg,
        at_resonance: inertia.n_zero > 0,
    })
}
