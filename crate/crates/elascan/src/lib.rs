//! Monotonicity-based inclusion detection for time-harmonic linear
//! elasticity.
//!
//! The library solves the Navier equation on a voxelized cube with mixed
//! traction/displacement boundary conditions, assembles discrete
//! Neumann-to-Dirichlet (NtD) matrices for families of surface load patches,
//! and reconstructs the outer support of material inhomogeneities by
//! counting negative eigenvalues of NtD differences against an eigenvalue
//! budget obtained from matrix inertia.
//!
//! The pieces compose in pipeline order:
//!
//! * [`mesh`] — structured hexahedral voxelizations, boundary tagging,
//!   surface load patches;
//! * [`materials`] — piecewise-constant coefficient fields (lambda, mu, rho),
//!   box inclusions, test coefficients;
//! * [`fem`] — trilinear element matrices, global assembly, load vectors;
//! * [`linsolve`] — band LDL^T factorization with inertia readout;
//! * [`ntd`] — discrete NtD matrices with provenance fingerprints;
//! * [`spectral`] — dense symmetric eigensolves, negative-eigenvalue counts,
//!   and the budget M0;
//! * [`monotonicity`] — the per-block test and the cover sweep;
//! * [`reconstruct`] — verdicts to voxel masks, cavity filling;
//! * [`verify`] — manufactured-solution and wavelength oracles;
//! * [`scenario`] / [`cli`] / [`export`] — scenario files, command
//!   implementations, and file outputs.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod cli;
pub mod export;
pub mod fem;
pub mod fingerprint;
pub mod linsolve;
pub mod materials;
pub mod mesh;
pub mod monotonicity;
pub mod ntd;
pub mod reconstruct;
pub mod scenario;
pub mod spectral;
pub mod verify;

pub use fem::{assemble, AssembledSystem};
pub use linsolve::{factor_symmetric, Factorization, Inertia};
pub use materials::{MaterialField, TestBlock};
pub use mesh::{build_load_patches, build_structured_hex_mesh, tag_boundary, Mesh};
pub use monotonicity::{sweep, test_block, SweepContext, SweepResult};
pub use ntd::{ntd_matrix, NtDMatrix};
pub use reconstruct::{assemble_mask, fill_cavities, VoxelMask};
pub use scenario::Scenario;
pub use spectral::{compute_m0, count_negative, sym_eigenvalues};
pub use verify::{convergence_study, wavelengths, ManufacturedCase};
