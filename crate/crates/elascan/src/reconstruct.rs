//! Outer-support reconstruction from sweep verdicts: the union of inside
//! blocks, with internal cavities filled.
//!
//! Cavity filling uses 6-connectivity on the cover grid: false components of
//! the mask not reaching the grid boundary are flipped to true.

use crate::monotonicity::SweepResult;

/// Boolean voxel grid aligned with a sweep cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelMask {
    pub dims: [usize; 3],
    /// x-fastest storage, index `i + dims[0]*j + dims[0]*dims[1]*k`.
    pub data: Vec<bool>,
}

impl VoxelMask {
    pub fn new(dims: [usize; 3]) -> Self {
        VoxelMask {
            dims,
            data: vec![false; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * j + self.dims[0] * self.dims[1] * k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.data[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: bool) {
        let idx = self.index(i, j, k);
        self.data[idx] = v;
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Indices of true voxels.
    pub fn true_indices(&self) -> Vec<usize> {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| v.then_some(i))
            .collect()
    }
}

/// Mask of the blocks whose verdict was inside. Invalid blocks stay false.
pub fn assemble_mask(sweep: &SweepResult) -> VoxelMask {
    let b = sweep.cover.blocks_per_edge;
    let mut mask = VoxelMask::new([b, b, b]);
    for result in &sweep.results {
        if let Some(v) = result.verdict() {
            if v.inside {
                let [i, j, k] = v.coords;
                mask.set(i, j, k, true);
            }
        }
    }
    mask
}

/// Fill internal cavities: 6-connected false components that do not touch
/// the grid boundary become true. Idempotent; never clears a voxel.
pub fn fill_cavities(mask: &VoxelMask) -> VoxelMask {
    let [nx, ny, nz] = mask.dims;
    let total = nx * ny * nz;
    if total == 0 {
        return mask.clone();
    }

    // label the false voxels reachable from the boundary via BFS
    let mut outside = vec![false; total];
    let mut queue = std::collections::VecDeque::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let on_boundary = i == 0
                    || j == 0
                    || k == 0
                    || i == nx - 1
                    || j == ny - 1
                    || k == nz - 1;
                let idx = mask.index(i, j, k);
                if on_boundary && !mask.data[idx] && !outside[idx] {
                    outside[idx] = true;
                    queue.push_back((i, j, k));
                }
            }
        }
    }
    while let Some((i, j, k)) = queue.pop_front() {
        let mut visit = |ni: usize, nj: usize, nk: usize, mask: &VoxelMask| {
            let idx = mask.index(ni, nj, nk);
            if !mask.data[idx] && !outside[idx] {
                outside[idx] = true;
                queue.push_back((ni, nj, nk));
            }
        };
        if i > 0 {
            visit(i - 1, j, k, mask);
        }
        if i + 1 < nx {
            visit(i + 1, j, k, mask);
        }
        if j > 0 {
            visit(i, j - 1, k, mask);
        }
        if j + 1 < ny {
            visit(i, j + 1, k, mask);
        }
        if k > 0 {
            visit(i, j, k - 1, mask);
        }
        if k + 1 < nz {
            visit(i, j, k + 1, mask);
        }
    }

    let mut out = mask.clone();
    for idx in 0..total {
        if !out.data[idx] && !outside[idx] {
            out.data[idx] = true;
        }
    }
    out
}
