//! Discrete Neumann-to-Dirichlet matrices.
//!
//! For loads g_1 .. g_m the matrix entry (i, j) is the boundary pairing of
//! the displacement due to g_i with g_j. With piecewise-constant tractions
//! and trilinear traces that pairing is exactly `f_j^T u_i`, where `f_j` is
//! the assembled load vector and `(K - omega^2 M) u_i = f_i`, so no second
//! surface quadrature is needed and symmetry is inherited from the solver.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::fem::{assemble_load, AssembledSystem, FemError};
use crate::linsolve::{factor_symmetric, LinSolveError};
use crate::mesh::{BoundaryLoadSet, Mesh};

/// Relative Frobenius asymmetry beyond which an NtD matrix is rejected.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum NtdError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Solve(#[from] LinSolveError),
    #[error("NtD matrix asymmetry {rel:.3e} exceeds {SYMMETRY_TOL:.1e}")]
    Asymmetry { rel: f64 },
    #[error("mesh fingerprint does not match the assembled system")]
    MeshMismatch,
}

/// Discrete NtD matrix with provenance.
#[derive(Debug, Clone)]
pub struct NtDMatrix {
    /// Symmetrized m x m pairing matrix, N*m per unit load-coefficient pair.
    pub entries: DMatrix<f64>,
    /// Angular frequency (rad/s) used in the pencil.
    pub omega: f64,
    /// Hash of the coefficient field this map was computed for.
    pub field_fingerprint: u64,
    /// Hash of the boundary load set.
    pub loadset_fingerprint: u64,
    /// Relative Frobenius asymmetry before symmetrization.
    pub raw_asymmetry: f64,
}

impl NtDMatrix {
    pub fn m(&self) -> usize {
        self.entries.nrows()
    }
}

/// Assembled load vectors restricted to the free dofs, one column per load.
pub fn load_matrix(
    mesh: &Mesh,
    system: &AssembledSystem,
    loads: &BoundaryLoadSet,
) -> Result<DMatrix<f64>, NtdError> {
    if mesh.fingerprint() != system.mesh_fingerprint {
        return Err(NtdError::MeshMismatch);
    }
    let nf = system.ndof_free();
    let mut f = DMatrix::zeros(nf, loads.m());
    for (c, load) in loads.loads.iter().enumerate() {
        let full = assemble_load(mesh, load)?;
        f.set_column(c, &system.reduce_vec(&full));
    }
    Ok(f)
}

/// NtD matrix from a precomputed reduced load matrix.
pub fn ntd_from_loads(
    system: &AssembledSystem,
    load_mat: &DMatrix<f64>,
    loadset_fingerprint: u64,
    omega: f64,
    zero_pivot_rel: f64,
) -> Result<NtDMatrix, NtdError> {
    let pencil = system.pencil_reduced(omega);
    let factorization = factor_symmetric(&pencil, zero_pivot_rel)?;
    let solutions = factorization.solve_many(load_mat)?;
    let raw = load_mat.transpose() * solutions;

    let norm = raw.norm();
    let asym = (&raw - raw.transpose()).norm();
    let rel = if norm > 0.0 { asym / norm } else { 0.0 };
    if rel > SYMMETRY_TOL {
        return Err(NtdError::Asymmetry { rel });
    }
    let entries = 0.5 * (&raw + raw.transpose());

    Ok(NtDMatrix {
        entries,
        omega,
        field_fingerprint: system.field_fingerprint,
        loadset_fingerprint,
        raw_asymmetry: rel,
    })
}

/// Compute the NtD matrix for an assembled coefficient field at frequency
/// omega. One factorization serves all m right-hand sides.
pub fn ntd_matrix(
    mesh: &Mesh,
    system: &AssembledSystem,
    loads: &BoundaryLoadSet,
    omega: f64,
    zero_pivot_rel: f64,
) -> Result<NtDMatrix, NtdError> {
    let f = load_matrix(mesh, system, loads)?;
    ntd_from_loads(system, &f, loads.fingerprint(), omega, zero_pivot_rel)
}
