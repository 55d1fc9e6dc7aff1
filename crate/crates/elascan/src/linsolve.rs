//! Direct solver for the symmetric (generally indefinite) systems
//! `(K - omega^2 M) u = f`: an LDL^T factorization in band storage with
//! pivot-sign inertia readout and iteratively refined solves.
//!
//! The factorization does not pivot for stability; this is the classical
//! Sturm-sequence arrangement for shifted FEM pencils, where the inertia of
//! `A - sigma B` is read from the signs of D (Sylvester's law). Pivots whose
//! magnitude falls below `zero_pivot_rel * max|diag(A)|` are counted as zero
//! and flag the factorization as singular; solving such a system reports a
//! suspected resonance.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;
use rayon::prelude::*;
use thiserror::Error;

/// Relative zero-pivot threshold (against `max|diag|`).
pub const DEFAULT_ZERO_PIVOT_REL: f64 = 1e-12;
/// Relative residual target for [`Factorization::solve`].
pub const DEFAULT_SOLVE_TOL: f64 = 1e-10;
const MAX_REFINE_STEPS: usize = 8;

#[derive(Debug, Error)]
pub enum LinSolveError {
    #[error("matrix is structurally singular (row {0} has no entries)")]
    StructurallySingular(usize),
    #[error(
        "near-zero pivot at index {index} (|{pivot:.3e}| <= {tolerance:.3e}); \
         the shift may sit on a resonance frequency"
    )]
    ResonanceSuspected {
        index: usize,
        pivot: f64,
        tolerance: f64,
    },
    #[error("iterative refinement stalled at relative residual {achieved:.3e}")]
    ResidualNotConverged { achieved: f64 },
    #[error("matrix must be square, got {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// Eigenvalue sign counts of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub n_neg: usize,
    pub n_zero: usize,
    pub n_pos: usize,
}

/// Band LDL^T factors of a sparse symmetric matrix.
pub struct Factorization {
    n: usize,
    bandwidth: usize,
    /// Lower factor in row-major band layout: row `i` occupies
    /// `band[i*(b+1) .. (i+1)*(b+1)]`, column `j` at offset `j - i + b`.
    band: Vec<f64>,
    diag: Vec<f64>,
    inertia: Inertia,
    zero_tolerance: f64,
    first_zero_pivot: Option<(usize, f64)>,
    /// Original matrix, kept for residual computation.
    matrix: CsrMatrix<f64>,
}

/// Dot product with four independent accumulators (fixed order, so results
/// are reproducible run to run).
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().min(b.len());
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let chunks = len / 4;
    for c in 0..chunks {
        let i = 4 * c;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..len {
        tail += a[i] * b[i];
    }
    (s0 + s1) + (s2 + s3) + tail
}

/// Sparse matrix-vector product `A x` with a fixed accumulation order.
pub fn spmv(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(a.nrows());
    for (i, row) in a.row_iter().enumerate() {
        let mut s = 0.0;
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            s += v * x[j];
        }
        y[i] = s;
    }
    y
}

/// Factor a sparse symmetric matrix as L D L^T in band storage.
pub fn factor_symmetric(
    a: &CsrMatrix<f64>,
    zero_pivot_rel: f64,
) -> Result<Factorization, LinSolveError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinSolveError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }

    let mut bandwidth = 0usize;
    let mut max_diag = 0.0f64;
    for (i, j, &v) in a.triplet_iter() {
        bandwidth = bandwidth.max(i.abs_diff(j));
        if i == j {
            max_diag = max_diag.max(v.abs());
        }
    }
    for i in 0..n {
        if a.row(i).nnz() == 0 {
            return Err(LinSolveError::StructurallySingular(i));
        }
    }
    let zero_tolerance = if max_diag > 0.0 {
        zero_pivot_rel * max_diag
    } else {
        f64::MIN_POSITIVE
    };

    let b = bandwidth;
    let stride = b + 1;
    let mut band = vec![0.0f64; n * stride];
    // copy the lower triangle of A into band storage
    for (i, j, &v) in a.triplet_iter() {
        if j <= i {
            band[i * stride + (j + b - i)] = v;
        }
    }

    let mut diag = vec![0.0f64; n];
    let mut scaled = vec![0.0f64; stride]; // s[j-lo] = L[i,j] * D[j]
    let mut inertia = Inertia {
        n_neg: 0,
        n_zero: 0,
        n_pos: 0,
    };
    let mut first_zero_pivot = None;

    for i in 0..n {
        let lo = i.saturating_sub(b);
        let row_base = i * stride + b - i; // band[row_base + j] = entry (i, j)
        for j in lo..i {
            let jlo = j.saturating_sub(b);
            let start = lo.max(jlo);
            let lrow_base = j * stride + b - j;
            let s = if j > start {
                dot(
                    &scaled[(start - lo)..(j - lo)],
                    &band[(lrow_base + start)..(lrow_base + j)],
                )
            } else {
                0.0
            };
            let val = band[row_base + j] - s;
            band[row_base + j] = val / diag[j];
            scaled[j - lo] = val;
        }
        let s = if i > lo {
            dot(
                &scaled[..(i - lo)],
                &band[(row_base + lo)..(row_base + i)],
            )
        } else {
            0.0
        };
        let mut d = band[row_base + i] - s;
        if d.abs() <= zero_tolerance {
            inertia.n_zero += 1;
            if first_zero_pivot.is_none() {
                first_zero_pivot = Some((i, d));
            }
            // perturb so the remaining pivots stay finite; the factorization
            // is marked singular and refuses to solve
            d = if d < 0.0 {
                -zero_tolerance
            } else {
                zero_tolerance
            };
        } else if d < 0.0 {
            inertia.n_neg += 1;
        } else {
            inertia.n_pos += 1;
        }
        diag[i] = d;
        band[row_base + i] = 1.0;
    }

    Ok(Factorization {
        n,
        bandwidth: b,
        band,
        diag,
        inertia,
        zero_tolerance,
        first_zero_pivot,
        matrix: a.clone(),
    })
}

impl Factorization {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Negative / zero / positive pivot counts (= eigenvalue inertia by
    /// Sylvester's law of inertia).
    pub fn inertia(&self) -> Inertia {
        self.inertia
    }

    pub fn is_singular(&self) -> bool {
        self.inertia.n_zero > 0
    }

    fn check_regular(&self) -> Result<(), LinSolveError> {
        if let Some((index, pivot)) = self.first_zero_pivot {
            return Err(LinSolveError::ResonanceSuspected {
                index,
                pivot,
                tolerance: self.zero_tolerance,
            });
        }
        Ok(())
    }

    /// One triangular solve pass `x = (L D L^T)^{-1} rhs`, no refinement.
    fn solve_once(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let (n, b) = (self.n, self.bandwidth);
        let stride = b + 1;
        let mut x: Vec<f64> = rhs.as_slice().to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(b);
            let row_base = i * stride + b - i;
            if i > lo {
                let s = dot(&self.band[(row_base + lo)..(row_base + i)], &x[lo..i]);
                x[i] -= s;
            }
        }
        for i in 0..n {
            x[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let lo = i.saturating_sub(b);
            let row_base = i * stride + b - i;
            let xi = x[i];
            if xi != 0.0 {
                for j in lo..i {
                    x[j] -= self.band[row_base + j] * xi;
                }
            }
        }
        DVector::from_vec(x)
    }

    /// Solve to the given relative residual, refining iteratively.
    pub fn solve_with_tol(
        &self,
        rhs: &DVector<f64>,
        tol: f64,
    ) -> Result<DVector<f64>, LinSolveError> {
        self.check_regular()?;
        let rhs_norm = rhs.norm();
        if rhs_norm == 0.0 {
            return Ok(DVector::zeros(self.n));
        }
        let mut x = self.solve_once(rhs);
        let mut best_res = f64::INFINITY;
        for _ in 0..MAX_REFINE_STEPS {
            let r = rhs - spmv(&self.matrix, &x);
            let rel = r.norm() / rhs_norm;
            if rel <= tol {
                return Ok(x);
            }
            if rel >= best_res {
                return Err(LinSolveError::ResidualNotConverged { achieved: rel });
            }
            best_res = rel;
            x += self.solve_once(&r);
        }
        let rel = (rhs - spmv(&self.matrix, &x)).norm() / rhs_norm;
        if rel <= tol {
            Ok(x)
        } else {
            Err(LinSolveError::ResidualNotConverged { achieved: rel })
        }
    }

    /// Solve `A x = rhs` to the default residual target.
    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>, LinSolveError> {
        self.solve_with_tol(rhs, DEFAULT_SOLVE_TOL)
    }

    /// Solve one system per column of `rhs`, in parallel. Column order in the
    /// result matches the input, so the output is schedule-independent.
    pub fn solve_many(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>, LinSolveError> {
        self.check_regular()?;
        let cols: Vec<DVector<f64>> = (0..rhs.ncols())
            .into_par_iter()
            .map(|c| self.solve_with_tol(&rhs.column(c).into_owned(), DEFAULT_SOLVE_TOL))
            .collect::<Result<_, _>>()?;
        let mut out = DMatrix::zeros(rhs.nrows(), rhs.ncols());
        for (c, col) in cols.iter().enumerate() {
            out.set_column(c, col);
        }
        Ok(out)
    }
}

/// Inertia of a sparse symmetric matrix via one factorization.
pub fn inertia(
    a: &CsrMatrix<f64>,
    zero_pivot_rel: f64,
) -> Result<Inertia, LinSolveError> {
    Ok(factor_symmetric(a, zero_pivot_rel)?.inertia())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra_sparse::CooMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn csr_from_dense(d: &DMatrix<f64>) -> CsrMatrix<f64> {
        let mut coo = CooMatrix::new(d.nrows(), d.ncols());
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                if d[(i, j)] != 0.0 {
                    coo.push(i, j, d[(i, j)]);
                }
            }
        }
        CsrMatrix::from(&coo)
    }

    #[test]
    fn identity_inertia_and_solve() {
        let a = csr_from_dense(&DMatrix::identity(3, 3));
        let f = factor_symmetric(&a, DEFAULT_ZERO_PIVOT_REL).unwrap();
        assert_eq!(
            f.inertia(),
            Inertia {
                n_neg: 0,
                n_zero: 0,
                n_pos: 3
            }
        );
        let rhs = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let x = f.solve(&rhs).unwrap();
        assert_relative_eq!(x, rhs, max_relative = 1e-14);
    }

    #[test]
    fn signed_diagonal_inertia() {
        // diag(2, -1, 0) with the zero kept as a structural entry
        let mut coo = CooMatrix::new(3, 3);
        coo.push(0, 0, 2.0);
        coo.push(1, 1, -1.0);
        coo.push(2, 2, 0.0);
        let a = CsrMatrix::from(&coo);
        let f = factor_symmetric(&a, DEFAULT_ZERO_PIVOT_REL).unwrap();
        assert_eq!(
            f.inertia(),
            Inertia {
                n_neg: 1,
                n_zero: 1,
                n_pos: 1
            }
        );
        assert!(f.is_singular());
        let err = f.solve(&DVector::from_element(3, 1.0));
        assert!(matches!(err, Err(LinSolveError::ResonanceSuspected { .. })));
    }

    #[test]
    fn random_inertia_matches_dense_eigendecomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..20 {
            let n = 50;
            let mut d = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = rng.gen_range(-1.0..1.0);
                    d[(i, j)] = v;
                    d[(j, i)] = v;
                }
            }
            let eig = d.clone().symmetric_eigenvalues();
            let scale: f64 = eig.amax();
            let expect = Inertia {
                n_neg: eig.iter().filter(|&&v| v < -1e-10 * scale).count(),
                n_zero: eig.iter().filter(|&&v| v.abs() <= 1e-10 * scale).count(),
                n_pos: eig.iter().filter(|&&v| v > 1e-10 * scale).count(),
            };
            let got = factor_symmetric(&csr_from_dense(&d), DEFAULT_ZERO_PIVOT_REL)
                .unwrap()
                .inertia();
            assert_eq!(got, expect, "trial {trial}");
        }
    }

    #[test]
    fn random_solve_reaches_residual_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 80;
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
            d[(i, i)] += 2.0; // keep comfortably regular
        }
        let a = csr_from_dense(&d);
        let f = factor_symmetric(&a, DEFAULT_ZERO_PIVOT_REL).unwrap();
        let rhs = DVector::from_fn(n, |i, _| (i as f64 * 0.37).sin());
        let x = f.solve(&rhs).unwrap();
        let rel = (&rhs - spmv(&a, &x)).norm() / rhs.norm();
        assert!(rel <= DEFAULT_SOLVE_TOL, "residual {rel}");
    }

    #[test]
    fn structurally_singular_detected() {
        let mut coo = CooMatrix::new(3, 3);
        coo.push(0, 0, 1.0);
        coo.push(2, 2, 1.0);
        let a = CsrMatrix::from(&coo);
        assert!(matches!(
            factor_symmetric(&a, DEFAULT_ZERO_PIVOT_REL),
            Err(LinSolveError::StructurallySingular(1))
        ));
    }

    #[test]
    fn spd_stiffness_recovers_ones() {
        use crate::materials::background;
        use crate::mesh::{build_structured_hex_mesh, tag_boundary, CubeSide};
        let mesh = build_structured_hex_mesh(2, 1.0).unwrap();
        let mesh = tag_boundary(mesh, &[CubeSide::ZMin]).unwrap();
        let field = background(6e5, 6e3, 3e3, &mesh).unwrap();
        let sys = crate::fem::assemble(&mesh, &field).unwrap();
        let k = sys.stiffness_reduced();
        let f = factor_symmetric(&k, DEFAULT_ZERO_PIVOT_REL).unwrap();
        let i = f.inertia();
        assert_eq!((i.n_neg, i.n_zero), (0, 0));
        assert_eq!(i.n_pos, k.nrows());
        let ones = DVector::from_element(k.nrows(), 1.0);
        let rhs = &k * &ones;
        let x = f.solve(&rhs).unwrap();
        assert!((x - ones).amax() <= 1e-10);
    }

    #[test]
    fn shift_at_eigenvalue_flags_resonance() {
        use crate::materials::background;
        use crate::mesh::{build_structured_hex_mesh, tag_boundary, CubeSide};
        let mesh = build_structured_hex_mesh(2, 1.0).unwrap();
        let mesh = tag_boundary(mesh, &[CubeSide::ZMin]).unwrap();
        let field = background(6e5, 6e3, 3e3, &mesh).unwrap();
        let sys = crate::fem::assemble(&mesh, &field).unwrap();
        let k = sys.stiffness_reduced();
        let m = sys.mass_reduced();
        // dense generalized eigenvalue oracle: K v = theta M v
        let kd = DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| {
            k.get_entry(i, j).map_or(0.0, |e| e.into_value())
        });
        let md = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
            m.get_entry(i, j).map_or(0.0, |e| e.into_value())
        });
        let chol = md.cholesky().unwrap();
        let l_inv = chol.l().try_inverse().unwrap();
        let transformed = &l_inv * kd * l_inv.transpose();
        let theta1 = transformed.symmetric_eigenvalues().min();
        // pencil K - theta1 * M is singular up to eigensolve accuracy
        let n = k.nrows();
        let mut coo = CooMatrix::new(n, n);
        for (i, j, &v) in k.triplet_iter() {
            coo.push(i, j, v);
        }
        for (i, j, &v) in m.triplet_iter() {
            coo.push(i, j, -theta1 * v);
        }
        let pencil = CsrMatrix::from(&coo);
        let f = factor_symmetric(&pencil, 1e-8).unwrap();
        assert!(f.is_singular());
        let err = f.solve(&DVector::from_element(n, 1.0));
        assert!(matches!(err, Err(LinSolveError::ResonanceSuspected { .. })));
    }
}
