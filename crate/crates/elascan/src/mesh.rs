//! Structured hexahedral meshes of a box with tagged boundary faces and
//! surface load patches.
//!
//! Node ordering is lexicographic with x fastest: node `(i, j, k)` has index
//! `i + (n+1)*j + (n+1)^2*k`. Elements follow the same scheme on the `n^3`
//! cell grid. The eight local corners of an element use the usual VTK
//! hexahedron order: the four corners of the bottom (`z-`) face
//! counterclockwise, then the top face.

use nalgebra::Vector3;
use thiserror::Error;

use crate::fingerprint::Fingerprint;

/// Local corner offsets `(di, dj, dk)` in VTK hexahedron order.
pub const CORNER_OFFSETS: [(usize, usize, usize); 8] = [
    (0, 0, 0),
    (1, 0, 0),
    (1, 1, 0),
    (0, 1, 0),
    (0, 0, 1),
    (1, 0, 1),
    (1, 1, 1),
    (0, 1, 1),
];

/// Local face numbering: 0:-x 1:+x 2:-y 3:+y 4:-z 5:+z.
/// Each entry lists the local corner indices of that face.
pub const FACE_CORNERS: [[usize; 4]; 6] = [
    [0, 3, 7, 4], // -x
    [1, 2, 6, 5], // +x
    [0, 1, 5, 4], // -y
    [3, 2, 6, 7], // +y
    [0, 1, 2, 3], // -z
    [4, 5, 6, 7], // +z
];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh subdivision n={0} is too coarse (need n >= 2)")]
    TooCoarse(usize),
    #[error("edge length must be positive, got {0}")]
    NonPositiveEdge(f64),
    #[error("Dirichlet selector covers the whole boundary; the Neumann part must be nonempty")]
    EmptyNeumannBoundary,
    #[error("patches per edge p={p} does not divide the mesh subdivision n={n}")]
    MisalignedPatches { p: usize, n: usize },
    #[error("load patch touches a Dirichlet face (face index {0})")]
    PatchOnDirichlet(usize),
}

/// One side of the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CubeSide {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl CubeSide {
    pub const ALL: [CubeSide; 6] = [
        CubeSide::XMin,
        CubeSide::XMax,
        CubeSide::YMin,
        CubeSide::YMax,
        CubeSide::ZMin,
        CubeSide::ZMax,
    ];

    /// Outward unit normal of this side.
    pub fn normal(self) -> Vector3<f64> {
        match self {
            CubeSide::XMin => Vector3::new(-1.0, 0.0, 0.0),
            CubeSide::XMax => Vector3::new(1.0, 0.0, 0.0),
            CubeSide::YMin => Vector3::new(0.0, -1.0, 0.0),
            CubeSide::YMax => Vector3::new(0.0, 1.0, 0.0),
            CubeSide::ZMin => Vector3::new(0.0, 0.0, -1.0),
            CubeSide::ZMax => Vector3::new(0.0, 0.0, 1.0),
        }
    }

    /// Two in-plane unit tangents, in ascending axis order.
    pub fn tangents(self) -> [Vector3<f64>; 2] {
        match self {
            CubeSide::XMin | CubeSide::XMax => {
                [Vector3::new(0.0, 1.0, 0.0), Vector3::new(0.0, 0.0, 1.0)]
            }
            CubeSide::YMin | CubeSide::YMax => {
                [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 0.0, 1.0)]
            }
            CubeSide::ZMin | CubeSide::ZMax => {
                [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0)]
            }
        }
    }

    fn local_face(self) -> usize {
        match self {
            CubeSide::XMin => 0,
            CubeSide::XMax => 1,
            CubeSide::YMin => 2,
            CubeSide::YMax => 3,
            CubeSide::ZMin => 4,
            CubeSide::ZMax => 5,
        }
    }
}

/// Boundary-condition tag of an exterior face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceTag {
    Dirichlet,
    Neumann,
}

/// One exterior element face.
#[derive(Debug, Clone)]
pub struct BoundaryFace {
    /// Owning element index.
    pub element: usize,
    /// Local face number (see [`FACE_CORNERS`]).
    pub local_face: usize,
    pub tag: FaceTag,
    /// Outward unit normal.
    pub normal: Vector3<f64>,
    /// Face area in m^2.
    pub area: f64,
    /// Side of the box this face lies on.
    pub side: CubeSide,
}

/// Uniform hexahedral voxelization of a cube `[0, L]^3`.
#[derive(Debug, Clone)]
pub struct Mesh {
    /// Subdivisions per axis.
    pub n_axis: usize,
    /// Box edge length in meters.
    pub extent: f64,
    /// Node coordinates, `(n+1)^3` entries.
    pub nodes: Vec<Vector3<f64>>,
    /// Node indices per element, `n^3` entries in VTK corner order.
    pub elements: Vec<[usize; 8]>,
    /// All exterior faces, grouped side by side in [`CubeSide::ALL`] order,
    /// each side in (a, b) lexicographic order with the lower in-plane axis
    /// fastest.
    pub boundary_faces: Vec<BoundaryFace>,
    /// For each side, the `n^2` indices into `boundary_faces`.
    side_faces: Vec<Vec<usize>>,
}

impl Mesh {
    /// Element edge length `L / n`.
    pub fn h(&self) -> f64 {
        self.extent / self.n_axis as f64
    }

    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        let m = self.n_axis + 1;
        i + m * j + m * m * k
    }

    pub fn element_index(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.n_axis;
        i + n * j + n * n * k
    }

    /// Inverse of [`Mesh::element_index`].
    pub fn element_coords(&self, e: usize) -> (usize, usize, usize) {
        let n = self.n_axis;
        (e % n, (e / n) % n, e / (n * n))
    }

    /// Global node indices of the four corners of a boundary face.
    pub fn face_nodes(&self, face: &BoundaryFace) -> [usize; 4] {
        let corners = &self.elements[face.element];
        FACE_CORNERS[face.local_face].map(|c| corners[c])
    }

    /// Indices into `boundary_faces` for one side, in-plane a-fastest.
    pub fn side_face_indices(&self, side: CubeSide) -> &[usize] {
        &self.side_faces[side.local_face()]
    }

    /// True if every face of the given side is Neumann-tagged.
    pub fn side_is_neumann(&self, side: CubeSide) -> bool {
        self.side_face_indices(side)
            .iter()
            .all(|&f| self.boundary_faces[f].tag == FaceTag::Neumann)
    }

    /// Dirichlet-constrained node indices (nodes on any Dirichlet face).
    pub fn dirichlet_nodes(&self) -> Vec<usize> {
        let mut fixed = vec![false; self.nodes.len()];
        for face in &self.boundary_faces {
            if face.tag == FaceTag::Dirichlet {
                for node in self.face_nodes(face) {
                    fixed[node] = true;
                }
            }
        }
        fixed
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
            .collect()
    }

    /// Header metadata for legacy-VTK structured-points output.
    pub fn vtk_structured_points_header(&self) -> VtkStructuredPoints {
        VtkStructuredPoints {
            dimensions: [self.n_axis + 1; 3],
            origin: [0.0; 3],
            spacing: [self.h(); 3],
        }
    }

    /// Content hash over dimensions and tagging.
    pub fn fingerprint(&self) -> u64 {
        let mut fp = Fingerprint::new();
        fp.push_u64(self.n_axis as u64);
        fp.push_f64(self.extent);
        for face in &self.boundary_faces {
            fp.push_u64(match face.tag {
                FaceTag::Dirichlet => 1,
                FaceTag::Neumann => 2,
            });
        }
        fp.finish()
    }
}

/// Dimensions, origin and spacing of the node lattice in VTK
/// structured-points form.
#[derive(Debug, Clone, Copy)]
pub struct VtkStructuredPoints {
    pub dimensions: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
}

/// Build the uniform voxelization of the cube `[0, L]^3` with all exterior
/// faces initially Neumann-tagged.
pub fn build_structured_hex_mesh(n: usize, edge_length: f64) -> Result<Mesh, MeshError> {
    if n < 2 {
        return Err(MeshError::TooCoarse(n));
    }
    if !(edge_length > 0.0) {
        return Err(MeshError::NonPositiveEdge(edge_length));
    }
    let m = n + 1;
    let h = edge_length / n as f64;

    let mut nodes = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                nodes.push(Vector3::new(i as f64 * h, j as f64 * h, k as f64 * h));
            }
        }
    }

    let nid = |i: usize, j: usize, k: usize| i + m * j + m * m * k;
    let mut elements = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                elements.push(CORNER_OFFSETS.map(|(di, dj, dk)| nid(i + di, j + dj, k + dk)));
            }
        }
    }

    let eid = |i: usize, j: usize, k: usize| i + n * j + n * n * k;
    let mut boundary_faces = Vec::with_capacity(6 * n * n);
    let mut side_faces = vec![Vec::with_capacity(n * n); 6];
    for side in CubeSide::ALL {
        let lf = side.local_face();
        for b in 0..n {
            for a in 0..n {
                // (a, b) are the in-plane cell coordinates in ascending axis order
                let element = match side {
                    CubeSide::XMin => eid(0, a, b),
                    CubeSide::XMax => eid(n - 1, a, b),
                    CubeSide::YMin => eid(a, 0, b),
                    CubeSide::YMax => eid(a, n - 1, b),
                    CubeSide::ZMin => eid(a, b, 0),
                    CubeSide::ZMax => eid(a, b, n - 1),
                };
                side_faces[lf].push(boundary_faces.len());
                boundary_faces.push(BoundaryFace {
                    element,
                    local_face: lf,
                    tag: FaceTag::Neumann,
                    normal: side.normal(),
                    area: h * h,
                    side,
                });
            }
        }
    }

    Ok(Mesh {
        n_axis: n,
        extent: edge_length,
        nodes,
        elements,
        boundary_faces,
        side_faces,
    })
}

/// Re-tag the boundary: the listed sides become Dirichlet, everything else
/// Neumann. An empty list yields a pure Neumann problem.
pub fn tag_boundary(mut mesh: Mesh, dirichlet_sides: &[CubeSide]) -> Result<Mesh, MeshError> {
    if CubeSide::ALL.iter().all(|s| dirichlet_sides.contains(s)) {
        return Err(MeshError::EmptyNeumannBoundary);
    }
    for face in &mut mesh.boundary_faces {
        face.tag = if dirichlet_sides.contains(&face.side) {
            FaceTag::Dirichlet
        } else {
            FaceTag::Neumann
        };
    }
    Ok(mesh)
}

/// Traction directions applied per patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadDirections {
    /// One normal traction per patch.
    Normal,
    /// Normal plus both tangential tractions per patch.
    Full,
}

/// One boundary load: a constant traction on a square patch of faces.
#[derive(Debug, Clone)]
pub struct PatchLoad {
    /// Indices into `mesh.boundary_faces`; all faces of one patch.
    pub face_indices: Vec<usize>,
    /// Constant traction vector in N/m^2.
    pub traction: Vector3<f64>,
    pub label: String,
}

/// Ordered family of patch loads g_1 .. g_m.
#[derive(Debug, Clone)]
pub struct BoundaryLoadSet {
    pub loads: Vec<PatchLoad>,
}

impl BoundaryLoadSet {
    pub fn m(&self) -> usize {
        self.loads.len()
    }

    /// Content hash over patch faces and tractions.
    pub fn fingerprint(&self) -> u64 {
        let mut fp = Fingerprint::new();
        fp.push_u64(self.loads.len() as u64);
        for load in &self.loads {
            fp.push_u64(load.face_indices.len() as u64);
            for &f in &load.face_indices {
                fp.push_u64(f as u64);
            }
            for c in 0..3 {
                fp.push_f64(load.traction[c]);
            }
        }
        fp.finish()
    }

    /// Exact L^2(Gamma_N) inner product of two piecewise-constant loads:
    /// sum of face area times traction dot product over shared faces.
    pub fn l2_inner(&self, mesh: &Mesh, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.loads[i], &self.loads[j]);
        let dot = a.traction.dot(&b.traction);
        if dot == 0.0 {
            return 0.0;
        }
        let set: std::collections::HashSet<usize> = a.face_indices.iter().copied().collect();
        b.face_indices
            .iter()
            .filter(|f| set.contains(f))
            .map(|&f| mesh.boundary_faces[f].area * dot)
            .sum()
    }
}

/// Divide every fully-Neumann side of the box into `p x p` square patches
/// and emit one constant traction load per patch and direction.
///
/// Patch ordering: sides in [`CubeSide::ALL`] order, patches per side in
/// (a, b) lexicographic order, directions normal-then-tangential.
pub fn build_load_patches(
    mesh: &Mesh,
    patches_per_edge: usize,
    magnitude: f64,
    directions: LoadDirections,
) -> Result<BoundaryLoadSet, MeshError> {
    let n = mesh.n_axis;
    let p = patches_per_edge;
    if p == 0 || n % p != 0 {
        return Err(MeshError::MisalignedPatches { p, n });
    }
    let s = n / p;

    let mut loads = Vec::new();
    for side in CubeSide::ALL {
        if !mesh.side_is_neumann(side) {
            continue;
        }
        let faces = mesh.side_face_indices(side);
        for pb in 0..p {
            for pa in 0..p {
                let mut face_indices = Vec::with_capacity(s * s);
                for b in pb * s..(pb + 1) * s {
                    for a in pa * s..(pa + 1) * s {
                        face_indices.push(faces[a + n * b]);
                    }
                }
                let dirs: Vec<(Vector3<f64>, &str)> = match directions {
                    LoadDirections::Normal => vec![(side.normal(), "n")],
                    LoadDirections::Full => {
                        let [t1, t2] = side.tangents();
                        vec![(side.normal(), "n"), (t1, "t1"), (t2, "t2")]
                    }
                };
                for (dir, tag) in dirs {
                    loads.push(PatchLoad {
                        face_indices: face_indices.clone(),
                        traction: magnitude * dir,
                        label: format!("{side:?}[{pa},{pb}]{tag}"),
                    });
                }
            }
        }
    }
    Ok(BoundaryLoadSet { loads })
}
