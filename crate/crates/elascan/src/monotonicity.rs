//! The per-block monotonicity test and the cover sweep.
//!
//! For a candidate block B the test compares the measured NtD matrix against
//! the NtD matrix of the background bumped by alpha on B, counts the negative
//! eigenvalues N_B of the difference, and classifies B as inside when
//! N_B <= M-tilde.

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::fem::{assemble, FemError};
use crate::materials::{test_coefficients, MaterialError, TestBlock};
use crate::mesh::{BoundaryLoadSet, Mesh};
use crate::ntd::{load_matrix, ntd_from_loads, NtDMatrix, NtdError};
use crate::spectral::{count_negative, spectral_scale, sym_eigenvalues};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("test block alpha must satisfy |alpha| != 0")]
    ZeroAlpha,
    #[error("NtD matrix fingerprints do not match the sweep context")]
    FingerprintMismatch,
    #[error("cover of {blocks} blocks per edge does not divide the mesh (n = {n})")]
    CoverMisaligned { blocks: usize, n: usize },
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Ntd(#[from] NtdError),
}

/// Homogeneous background coefficients.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct BackgroundCoefficients {
    pub lambda0: f64,
    pub mu0: f64,
    pub rho0: f64,
}

/// Shared, immutable inputs of one sweep: the mesh, the load family, and the
/// reduced load vectors (identical for every test block).
pub struct SweepContext<'a> {
    pub mesh: &'a Mesh,
    pub loads: &'a BoundaryLoadSet,
    pub background: BackgroundCoefficients,
    pub zero_pivot_rel: f64,
    load_mat: DMatrix<f64>,
    loadset_fingerprint: u64,
}

impl<'a> SweepContext<'a> {
    pub fn new(
        mesh: &'a Mesh,
        loads: &'a BoundaryLoadSet,
        background: BackgroundCoefficients,
        zero_pivot_rel: f64,
    ) -> Result<Self, SweepError> {
        // the free-dof reduction depends only on the mesh tagging, so any
        // field on this mesh yields the same load matrix
        let base = crate::materials::background(
            background.lambda0,
            background.mu0,
            background.rho0,
            mesh,
        )?;
        let system = assemble(mesh, &base)?;
        let load_mat = load_matrix(mesh, &system, loads)?;
        Ok(SweepContext {
            mesh,
            loads,
            background,
            zero_pivot_rel,
            load_mat,
            loadset_fingerprint: loads.fingerprint(),
        })
    }

    /// NtD matrix of an arbitrary coefficient field under this context's
    /// loads (used for the measured data and for test fields alike).
    pub fn ntd_for_field(
        &self,
        field: &crate::materials::MaterialField,
        omega: f64,
    ) -> Result<NtDMatrix, SweepError> {
        let system = assemble(self.mesh, field)?;
        Ok(ntd_from_loads(
            &system,
            &self.load_mat,
            self.loadset_fingerprint,
            omega,
            self.zero_pivot_rel,
        )?)
    }
}

/// Outcome of one block test.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TestVerdict {
    pub block_index: usize,
    /// Cover grid coordinates of the block.
    pub coords: [usize; 3],
    /// Negative eigenvalue count of `NtD_test - NtD_measured` (minimum over
    /// the alpha variations that were run).
    pub n_negative: usize,
    /// Threshold the verdict used.
    pub m_tilde: usize,
    /// `n_negative <= m_tilde`.
    pub inside: bool,
    /// Alpha realizing the minimal count.
    pub alpha: [f64; 3],
    pub omega: f64,
}

/// A block whose test failed (e.g. a resonant test pencil); the sweep
/// continues past it.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct InvalidBlock {
    pub block_index: usize,
    pub coords: [usize; 3],
    pub reason: String,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub enum BlockResult {
    Verdict(TestVerdict),
    Invalid(InvalidBlock),
}

impl BlockResult {
    pub fn verdict(&self) -> Option<&TestVerdict> {
        match self {
            BlockResult::Verdict(v) => Some(v),
            BlockResult::Invalid(_) => None,
        }
    }
}

/// Disjoint axis-aligned cover tiling the cube with `blocks_per_edge^3`
/// equal blocks aligned to the element grid.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct CoverGrid {
    pub blocks_per_edge: usize,
}

impl CoverGrid {
    pub fn num_blocks(&self) -> usize {
        self.blocks_per_edge.pow(3)
    }

    pub fn coords_of(&self, index: usize) -> [usize; 3] {
        let b = self.blocks_per_edge;
        [index % b, (index / b) % b, index / (b * b)]
    }

    pub fn index_of(&self, coords: [usize; 3]) -> usize {
        let b = self.blocks_per_edge;
        coords[0] + b * coords[1] + b * b * coords[2]
    }

    /// Elements per block edge on a given mesh.
    pub fn elements_per_block(&self, mesh: &Mesh) -> Result<usize, SweepError> {
        if self.blocks_per_edge == 0 || mesh.n_axis % self.blocks_per_edge != 0 {
            return Err(SweepError::CoverMisaligned {
                blocks: self.blocks_per_edge,
                n: mesh.n_axis,
            });
        }
        Ok(mesh.n_axis / self.blocks_per_edge)
    }

    /// The test block occupying cover cell `coords` with the given alpha.
    pub fn block_at(
        &self,
        mesh: &Mesh,
        coords: [usize; 3],
        alpha: [f64; 3],
    ) -> Result<TestBlock, SweepError> {
        let s = self.elements_per_block(mesh)?;
        Ok(TestBlock {
            bbox: crate::materials::ElementBox::new(
                [coords[0] * s, coords[1] * s, coords[2] * s],
                [
                    (coords[0] + 1) * s,
                    (coords[1] + 1) * s,
                    (coords[2] + 1) * s,
                ],
            ),
            alpha,
        })
    }
}

/// Which alpha triples the sweep tries per block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaVariations {
    /// The single full-bound triple (the published experiment).
    FullBound,
    /// Every nonempty subset of the three coefficients at its bound, the
    /// rest zero; N_B is the minimum over the seven variants.
    Subsets,
}

fn alpha_variants(bound: [f64; 3], variations: AlphaVariations) -> Vec<[f64; 3]> {
    match variations {
        AlphaVariations::FullBound => vec![bound],
        AlphaVariations::Subsets => (1u8..8)
            .map(|mask| {
                let mut a = [0.0; 3];
                for (j, aj) in a.iter_mut().enumerate() {
                    if mask & (1 << j) != 0 {
                        *aj = bound[j];
                    }
                }
                a
            })
            .collect(),
    }
}

/// Run the monotonicity test for one block against the measured NtD matrix.
pub fn test_block(
    ctx: &SweepContext,
    measured: &NtDMatrix,
    block: &TestBlock,
    m_tilde: usize,
    rel_tol: f64,
) -> Result<TestVerdict, SweepError> {
    if block.alpha.iter().all(|&a| a == 0.0) {
        return Err(SweepError::ZeroAlpha);
    }
    if measured.loadset_fingerprint != ctx.loadset_fingerprint {
        return Err(SweepError::FingerprintMismatch);
    }
    let field = test_coefficients(
        ctx.background.lambda0,
        ctx.background.mu0,
        ctx.background.rho0,
        block,
        ctx.mesh,
    )?;
    let test_ntd = ctx.ntd_for_field(&field, measured.omega)?;
    let diff = &test_ntd.entries - &measured.entries;
    let eigs = sym_eigenvalues(&diff);
    let n_negative = count_negative(&eigs, spectral_scale(&eigs), rel_tol);
    Ok(TestVerdict {
        block_index: 0,
        coords: [0; 3],
        n_negative,
        m_tilde,
        inside: n_negative <= m_tilde,
        alpha: block.alpha,
        omega: measured.omega,
    })
}

/// Result of sweeping a cover of test blocks.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SweepResult {
    pub cover: CoverGrid,
    pub omega: f64,
    pub m_tilde: usize,
    pub alpha_bound: [f64; 3],
    /// Theoretical eigenvalue budget at this frequency, when computed.
    #[serde(default)]
    pub m0: Option<usize>,
    /// One entry per cover block, ordered by block index.
    pub results: Vec<BlockResult>,
}

impl SweepResult {
    /// Eigencount vector over the valid blocks, ordered by block index.
    pub fn eigencounts(&self) -> Vec<usize> {
        self.results
            .iter()
            .filter_map(|r| r.verdict().map(|v| v.n_negative))
            .collect()
    }

    pub fn inside_indices(&self) -> Vec<usize> {
        self.results
            .iter()
            .filter_map(|r| r.verdict())
            .filter(|v| v.inside)
            .map(|v| v.block_index)
            .collect()
    }
}

/// Sweep every block of the cover, in parallel, collecting per-block verdicts
/// in block-index order. Erroring blocks are reported and skipped.
pub fn sweep(
    ctx: &SweepContext,
    measured: &NtDMatrix,
    cover: CoverGrid,
    alpha_bound: [f64; 3],
    variations: AlphaVariations,
    m_tilde: usize,
    rel_tol: f64,
) -> Result<SweepResult, SweepError> {
    // surface cover misalignment before spawning work
    cover.elements_per_block(ctx.mesh)?;
    let variants = alpha_variants(alpha_bound, variations);

    let results: Vec<BlockResult> = (0..cover.num_blocks())
        .into_par_iter()
        .map(|index| {
            let coords = cover.coords_of(index);
            let mut best: Option<TestVerdict> = None;
            for &alpha in &variants {
                let block = match cover.block_at(ctx.mesh, coords, alpha) {
                    Ok(b) => b,
                    Err(e) => {
                        return BlockResult::Invalid(InvalidBlock {
                            block_index: index,
                            coords,
                            reason: e.to_string(),
                        })
                    }
                };
                match test_block(ctx, measured, &block, m_tilde, rel_tol) {
                    Ok(v) => {
                        if best
                            .as_ref()
                            .map_or(true, |b| v.n_negative < b.n_negative)
                        {
                            best = Some(v);
                        }
                    }
                    Err(e) => {
                        return BlockResult::Invalid(InvalidBlock {
                            block_index: index,
                            coords,
                            reason: e.to_string(),
                        })
                    }
                }
            }
            let mut verdict = best.expect("at least one alpha variant");
            verdict.block_index = index;
            verdict.coords = coords;
            BlockResult::Verdict(verdict)
        })
        .collect();

    Ok(SweepResult {
        cover,
        omega: measured.omega,
        m_tilde,
        alpha_bound,
        m0: None,
        results,
    })
}

/// Re-threshold an existing sweep with a different M-tilde; counts are
/// threshold independent, so no solves are repeated.
pub fn apply_mtilde(result: &mut SweepResult, m_tilde: usize) {
    result.m_tilde = m_tilde;
    for r in &mut result.results {
        if let BlockResult::Verdict(v) = r {
            v.m_tilde = m_tilde;
            v.inside = v.n_negative <= m_tilde;
        }
    }
}

/// Suggested threshold from an eigencount distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MtildeSuggestion {
    pub value: usize,
    /// False when the counts show no gap to separate inside from outside.
    pub separated: bool,
    /// The (low, high) edges of the largest gap, when one exists.
    pub gap: Option<(usize, usize)>,
}

/// Pick M-tilde at the largest gap between sorted distinct counts; the low
/// cluster is the inside candidate set. Ties break toward the smaller value.
pub fn suggest_mtilde(counts: &[usize]) -> MtildeSuggestion {
    let mut distinct: Vec<usize> = counts.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return MtildeSuggestion {
            value: distinct.first().copied().unwrap_or(0),
            separated: false,
            gap: None,
        };
    }
    let mut best = (0usize, 0usize, 0usize); // (gap, low, high)
    for w in distinct.windows(2) {
        let gap = w[1] - w[0];
        if gap > best.0 {
            best = (gap, w[0], w[1]);
        }
    }
    MtildeSuggestion {
        value: best.1,
        separated: true,
        gap: Some((best.1, best.2)),
    }
}
