//! Trilinear (8-node) hexahedral finite elements for linear elasticity:
//! element stiffness and consistent mass, global assembly, Neumann load
//! vectors, and Dirichlet reduction by dof elimination.
//!
//! The energy form is `int 2 mu strain(u):strain(v) + lambda div(u) div(v)`;
//! the mass form is `int rho u . v`. Quadrature is 2x2x2 Gauss, exact for
//! both integrands on the uniform elements produced by [`crate::mesh`].

use std::collections::HashMap;

use nalgebra::{DVector, Matrix3, SMatrix, Vector3};
use nalgebra_sparse::CsrMatrix;
use thiserror::Error;

use crate::materials::MaterialField;
use crate::mesh::{FaceTag, Mesh, PatchLoad};

pub type Matrix24 = SMatrix<f64, 24, 24>;
type Matrix6x24 = SMatrix<f64, 6, 24>;
type Matrix3x24 = SMatrix<f64, 3, 24>;
type Matrix3x8 = SMatrix<f64, 3, 8>;

const GAUSS_G: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)
const MIN_DET_J: f64 = 1e-14;

/// Local corner coordinates in the reference cube, VTK order.
const XI: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

#[derive(Debug, Error)]
pub enum FemError {
    #[error("degenerate element Jacobian (det = {0:.3e})")]
    DegenerateJacobian(f64),
    #[error("load patch face {0} is not on the Neumann boundary")]
    LoadOnDirichletFace(usize),
    #[error("material field has {field} elements but the mesh has {mesh}")]
    FieldSizeMismatch { field: usize, mesh: usize },
}

pub(crate) fn gauss_points() -> [Vector3<f64>; 8] {
    XI.map(|c| Vector3::new(c[0] * GAUSS_G, c[1] * GAUSS_G, c[2] * GAUSS_G))
}

/// Trilinear shape functions at a reference point.
pub(crate) fn shape_functions(p: &Vector3<f64>) -> [f64; 8] {
    let mut n = [0.0; 8];
    for (a, s) in XI.iter().enumerate() {
        n[a] = 0.125 * (1.0 + s[0] * p.x) * (1.0 + s[1] * p.y) * (1.0 + s[2] * p.z);
    }
    n
}

/// Derivatives of the shape functions w.r.t. reference coordinates, 3x8.
fn shape_gradients(p: &Vector3<f64>) -> Matrix3x8 {
    let mut g = Matrix3x8::zeros();
    for (a, s) in XI.iter().enumerate() {
        g[(0, a)] = 0.125 * s[0] * (1.0 + s[1] * p.y) * (1.0 + s[2] * p.z);
        g[(1, a)] = 0.125 * (1.0 + s[0] * p.x) * s[1] * (1.0 + s[2] * p.z);
        g[(2, a)] = 0.125 * (1.0 + s[0] * p.x) * (1.0 + s[1] * p.y) * s[2];
    }
    g
}

/// Isotropic elasticity matrix in Voigt order (xx, yy, zz, xy, yz, zx) with
/// engineering shear strains.
fn elasticity_matrix(lambda: f64, mu: f64) -> SMatrix<f64, 6, 6> {
    let mut d = SMatrix::<f64, 6, 6>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            d[(i, j)] = lambda;
        }
        d[(i, i)] += 2.0 * mu;
        d[(i + 3, i + 3)] = mu;
    }
    d
}

/// Corner coordinates of one element, rows = corners.
pub fn element_coords(mesh: &Mesh, element: usize) -> SMatrix<f64, 8, 3> {
    let mut coords = SMatrix::<f64, 8, 3>::zeros();
    for (a, &node) in mesh.elements[element].iter().enumerate() {
        let x = mesh.nodes[node];
        coords[(a, 0)] = x.x;
        coords[(a, 1)] = x.y;
        coords[(a, 2)] = x.z;
    }
    coords
}

/// Element stiffness for the elastic energy form, 24x24 symmetric.
pub fn element_stiffness(
    coords: &SMatrix<f64, 8, 3>,
    lambda: f64,
    mu: f64,
) -> Result<Matrix24, FemError> {
    let d = elasticity_matrix(lambda, mu);
    let mut ke = Matrix24::zeros();
    for p in gauss_points() {
        let g = shape_gradients(&p);
        let jac: Matrix3<f64> = g * coords;
        let det = jac.determinant();
        if det <= MIN_DET_J {
            return Err(FemError::DegenerateJacobian(det));
        }
        let jinv = jac.try_inverse().ok_or(FemError::DegenerateJacobian(det))?;
        let gp = jinv * g;
        let mut b = Matrix6x24::zeros();
        for a in 0..8 {
            let (dx, dy, dz) = (gp[(0, a)], gp[(1, a)], gp[(2, a)]);
            let c = 3 * a;
            b[(0, c)] = dx;
            b[(1, c + 1)] = dy;
            b[(2, c + 2)] = dz;
            b[(3, c)] = dy;
            b[(3, c + 1)] = dx;
            b[(4, c + 1)] = dz;
            b[(4, c + 2)] = dy;
            b[(5, c)] = dz;
            b[(5, c + 2)] = dx;
        }
        ke += det * (b.transpose() * d * b);
    }
    Ok(0.5 * (ke + ke.transpose()))
}

/// Consistent element mass for the form `int rho u . v`, 24x24 symmetric.
pub fn element_mass(coords: &SMatrix<f64, 8, 3>, rho: f64) -> Result<Matrix24, FemError> {
    let mut me = Matrix24::zeros();
    for p in gauss_points() {
        let n = shape_functions(&p);
        let g = shape_gradients(&p);
        let det = (g * coords).determinant();
        if det <= MIN_DET_J {
            return Err(FemError::DegenerateJacobian(det));
        }
        let mut nm = Matrix3x24::zeros();
        for a in 0..8 {
            nm[(0, 3 * a)] = n[a];
            nm[(1, 3 * a + 1)] = n[a];
            nm[(2, 3 * a + 2)] = n[a];
        }
        me += (det * rho) * (nm.transpose() * nm);
    }
    Ok(0.5 * (me + me.transpose()))
}

/// Global stiffness and mass with Dirichlet bookkeeping.
///
/// `k` and `m` share one sparsity pattern, so pencil values can be combined
/// row by row.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub k: CsrMatrix<f64>,
    pub m: CsrMatrix<f64>,
    /// Constrained (Dirichlet) dof indices, sorted.
    pub constrained_dofs: Vec<usize>,
    /// Unconstrained dof indices, sorted.
    pub free_dofs: Vec<usize>,
    full_to_free: Vec<Option<usize>>,
    pub mesh_fingerprint: u64,
    pub field_fingerprint: u64,
}

impl AssembledSystem {
    pub fn ndof_full(&self) -> usize {
        self.k.nrows()
    }

    pub fn ndof_free(&self) -> usize {
        self.free_dofs.len()
    }

    /// Reduced pencil `K - omega^2 M` on the free dofs.
    pub fn pencil_reduced(&self, omega: f64) -> CsrMatrix<f64> {
        let w2 = omega * omega;
        self.combine_reduced(|k, m| k - w2 * m)
    }

    /// Reduced stiffness on the free dofs.
    pub fn stiffness_reduced(&self) -> CsrMatrix<f64> {
        self.combine_reduced(|k, _| k)
    }

    /// Reduced mass on the free dofs.
    pub fn mass_reduced(&self) -> CsrMatrix<f64> {
        self.combine_reduced(|_, m| m)
    }

    fn combine_reduced(&self, f: impl Fn(f64, f64) -> f64) -> CsrMatrix<f64> {
        let nf = self.free_dofs.len();
        let mut row_offsets = Vec::with_capacity(nf + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for &row in &self.free_dofs {
            let kr = self.k.row(row);
            let mr = self.m.row(row);
            debug_assert_eq!(kr.col_indices(), mr.col_indices());
            for ((&col, &kv), &mv) in kr
                .col_indices()
                .iter()
                .zip(kr.values())
                .zip(mr.values())
            {
                if let Some(rc) = self.full_to_free[col] {
                    col_indices.push(rc);
                    values.push(f(kv, mv));
                }
            }
            row_offsets.push(col_indices.len());
        }
        CsrMatrix::try_from_csr_data(nf, nf, row_offsets, col_indices, values)
            .expect("reduced CSR data is valid by construction")
    }

    /// Restrict a full dof vector to the free dofs.
    pub fn reduce_vec(&self, full: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.free_dofs.len(), self.free_dofs.iter().map(|&d| full[d]))
    }

    /// Scatter a free-dof vector back to full size with zeros on Gamma_D.
    pub fn expand_vec(&self, reduced: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(self.full_to_free.len());
        for (r, &d) in self.free_dofs.iter().enumerate() {
            full[d] = reduced[r];
        }
        full
    }
}

/// Deterministic CSR accumulation: stable sort by (row, col), then sum
/// duplicates in insertion order.
fn csr_from_triplets(
    n: usize,
    mut triplets: Vec<(usize, usize, f64)>,
) -> CsrMatrix<f64> {
    triplets.sort_by_key(|&(r, c, _)| (r, c));
    let mut row_offsets = vec![0usize; n + 1];
    let mut col_indices = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut last: Option<(usize, usize)> = None;
    for (r, c, v) in triplets {
        if last == Some((r, c)) {
            *values.last_mut().unwrap() += v;
        } else {
            col_indices.push(c);
            values.push(v);
            row_offsets[r + 1] = col_indices.len();
            last = Some((r, c));
        }
    }
    // make offsets cumulative over empty rows
    for r in 0..n {
        if row_offsets[r + 1] < row_offsets[r] {
            row_offsets[r + 1] = row_offsets[r];
        }
    }
    CsrMatrix::try_from_csr_data(n, n, row_offsets, col_indices, values)
        .expect("triplet CSR data is valid by construction")
}

/// Assemble global stiffness and mass for a coefficient field.
///
/// Element matrices are cached by coefficient value, which the piecewise
/// constant fields make effective. The scatter order is fixed, so repeated
/// assembly of the same inputs is bit-identical and `K` equals its transpose
/// exactly.
pub fn assemble(mesh: &Mesh, field: &MaterialField) -> Result<AssembledSystem, FemError> {
    if field.len() != mesh.elements.len() {
        return Err(FemError::FieldSizeMismatch {
            field: field.len(),
            mesh: mesh.elements.len(),
        });
    }
    let ndof = 3 * mesh.nodes.len();
    let mut ke_cache: HashMap<(u64, u64), Matrix24> = HashMap::new();
    let mut me_cache: HashMap<u64, Matrix24> = HashMap::new();

    let ne = mesh.elements.len();
    let mut k_triplets = Vec::with_capacity(ne * 24 * 24);
    let mut m_triplets = Vec::with_capacity(ne * 24 * 24);
    for e in 0..ne {
        let (lambda, mu, rho) = (field.lambda[e], field.mu[e], field.rho[e]);
        let coords = element_coords(mesh, e);
        let ke = match ke_cache.entry((lambda.to_bits(), mu.to_bits())) {
            std::collections::hash_map::Entry::Occupied(o) => *o.get(),
            std::collections::hash_map::Entry::Vacant(v) => {
                *v.insert(element_stiffness(&coords, lambda, mu)?)
            }
        };
        let me = match me_cache.entry(rho.to_bits()) {
            std::collections::hash_map::Entry::Occupied(o) => *o.get(),
            std::collections::hash_map::Entry::Vacant(v) => {
                *v.insert(element_mass(&coords, rho)?)
            }
        };
        let nodes = &mesh.elements[e];
        let dofs: Vec<usize> = nodes.iter().flat_map(|&n| [3 * n, 3 * n + 1, 3 * n + 2]).collect();
        for i in 0..24 {
            for j in 0..24 {
                k_triplets.push((dofs[i], dofs[j], ke[(i, j)]));
                m_triplets.push((dofs[i], dofs[j], me[(i, j)]));
            }
        }
    }
    let k = csr_from_triplets(ndof, k_triplets);
    let m = csr_from_triplets(ndof, m_triplets);

    let mut constrained = vec![false; ndof];
    for node in mesh.dirichlet_nodes() {
        for c in 0..3 {
            constrained[3 * node + c] = true;
        }
    }
    let constrained_dofs: Vec<usize> = (0..ndof).filter(|&d| constrained[d]).collect();
    let free_dofs: Vec<usize> = (0..ndof).filter(|&d| !constrained[d]).collect();
    let mut full_to_free = vec![None; ndof];
    for (r, &d) in free_dofs.iter().enumerate() {
        full_to_free[d] = Some(r);
    }

    Ok(AssembledSystem {
        k,
        m,
        constrained_dofs,
        free_dofs,
        full_to_free,
        mesh_fingerprint: mesh.fingerprint(),
        field_fingerprint: field.fingerprint(),
    })
}

/// Load vector for constant tractions on individual boundary faces.
///
/// Exact surface quadrature against the trilinear traces: each corner node of
/// a face receives `t * area / 4`.
pub fn assemble_face_tractions(
    mesh: &Mesh,
    tractions: &[(usize, Vector3<f64>)],
) -> Result<DVector<f64>, FemError> {
    let mut f = DVector::zeros(3 * mesh.nodes.len());
    for &(face_idx, t) in tractions {
        let face = &mesh.boundary_faces[face_idx];
        if face.tag != FaceTag::Neumann {
            return Err(FemError::LoadOnDirichletFace(face_idx));
        }
        let w = face.area / 4.0;
        for node in mesh.face_nodes(face) {
            for c in 0..3 {
                f[3 * node + c] += w * t[c];
            }
        }
    }
    Ok(f)
}

/// Load vector (full dof numbering, N) for one patch load.
pub fn assemble_load(mesh: &Mesh, load: &PatchLoad) -> Result<DVector<f64>, FemError> {
    let tractions: Vec<(usize, Vector3<f64>)> = load
        .face_indices
        .iter()
        .map(|&f| (f, load.traction))
        .collect();
    assemble_face_tractions(mesh, &tractions)
}

/// Consistent load vector for a body force field: element-wise 2x2x2 Gauss
/// quadrature of `f . N_a`.
pub fn assemble_body_force(
    mesh: &Mesh,
    f: impl Fn(Vector3<f64>) -> Vector3<f64>,
) -> Result<DVector<f64>, FemError> {
    let mut out = DVector::zeros(3 * mesh.nodes.len());
    for e in 0..mesh.elements.len() {
        let coords = element_coords(mesh, e);
        for p in gauss_points() {
            let n = shape_functions(&p);
            let g = shape_gradients(&p);
            let det = (g * coords).determinant();
            if det <= MIN_DET_J {
                return Err(FemError::DegenerateJacobian(det));
            }
            let mut x = Vector3::zeros();
            for a in 0..8 {
                for c in 0..3 {
                    x[c] += n[a] * coords[(a, c)];
                }
            }
            let fv = f(x);
            for (a, &node) in mesh.elements[e].iter().enumerate() {
                for c in 0..3 {
                    out[3 * node + c] += det * n[a] * fv[c];
                }
            }
        }
    }
    Ok(out)
}

/// L^2 norm of `u_h - exact` over the mesh, with `u_h` the trilinear
/// interpolant of the full nodal vector.
pub fn l2_error(
    mesh: &Mesh,
    u_full: &DVector<f64>,
    exact: impl Fn(Vector3<f64>) -> Vector3<f64>,
) -> f64 {
    let mut acc = 0.0;
    for e in 0..mesh.elements.len() {
        let coords = element_coords(mesh, e);
        for p in gauss_points() {
            let n = shape_functions(&p);
            let g = shape_gradients(&p);
            let det = (g * coords).determinant();
            let mut x = Vector3::zeros();
            let mut uh = Vector3::zeros();
            for (a, &node) in mesh.elements[e].iter().enumerate() {
                for c in 0..3 {
                    x[c] += n[a] * coords[(a, c)];
                    uh[c] += n[a] * u_full[3 * node + c];
                }
            }
            acc += det * (uh - exact(x)).norm_squared();
        }
    }
    acc.sqrt()
}

/// Restrict a square CSR matrix to the given sorted index set.
pub fn restrict_csr(a: &CsrMatrix<f64>, keep: &[usize]) -> CsrMatrix<f64> {
    let mut map = vec![None; a.nrows()];
    for (r, &d) in keep.iter().enumerate() {
        map[d] = Some(r);
    }
    let nk = keep.len();
    let mut row_offsets = Vec::with_capacity(nk + 1);
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    row_offsets.push(0);
    for &row in keep {
        let r = a.row(row);
        for (&col, &v) in r.col_indices().iter().zip(r.values()) {
            if let Some(rc) = map[col] {
                col_indices.push(rc);
                values.push(v);
            }
        }
        row_offsets.push(col_indices.len());
    }
    CsrMatrix::try_from_csr_data(nk, nk, row_offsets, col_indices, values)
        .expect("restricted CSR data is valid by construction")
}

/// Nodal samples of a vector field, as a full dof vector.
pub fn nodal_field(mesh: &Mesh, f: impl Fn(Vector3<f64>) -> Vector3<f64>) -> DVector<f64> {
    let mut u = DVector::zeros(3 * mesh.nodes.len());
    for (n, &x) in mesh.nodes.iter().enumerate() {
        let v = f(x);
        for c in 0..3 {
            u[3 * n + c] = v[c];
        }
    }
    u
}
