//! Piecewise-constant coefficient fields (lambda, mu, rho) on the element
//! grid: homogeneous backgrounds, box inclusions, and test coefficients for
//! candidate blocks.

use thiserror::Error;

use crate::fingerprint::Fingerprint;
use crate::mesh::Mesh;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("material value must be strictly positive: {name} = {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("inclusion box {0:?} does not fit the element grid (n = {1})")]
    BoxOutOfRange(ElementBox, usize),
    #[error("coefficient {name} becomes non-positive ({value}) inside an inclusion")]
    DrivenNonPositive { name: &'static str, value: f64 },
    #[error("density bound exceeded: alpha_3 = {alpha3} must stay below rho_0 = {rho0}")]
    DensityBound { alpha3: f64, rho0: f64 },
}

/// Axis-aligned element-index box, half-open per axis: `lo[a] <= i < hi[a]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ElementBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl ElementBox {
    pub fn new(lo: [usize; 3], hi: [usize; 3]) -> Self {
        ElementBox { lo, hi }
    }

    pub fn contains(&self, i: usize, j: usize, k: usize) -> bool {
        let c = [i, j, k];
        (0..3).all(|a| self.lo[a] <= c[a] && c[a] < self.hi[a])
    }

    pub fn is_valid_for(&self, n: usize) -> bool {
        (0..3).all(|a| self.lo[a] < self.hi[a] && self.hi[a] <= n)
    }

    pub fn num_elements(&self) -> usize {
        (0..3).map(|a| self.hi[a] - self.lo[a]).product()
    }
}

/// A box inclusion perturbing the background: lambda and mu increase, rho
/// decreases by the given deltas on the box (a negative `delta_rho` models a
/// density increase).
#[derive(Debug, Clone, Copy)]
pub struct InclusionSpec {
    pub bbox: ElementBox,
    pub delta_lambda: f64,
    pub delta_mu: f64,
    pub delta_rho: f64,
}

/// A candidate test block with its coefficient bumps alpha = (a1, a2, a3):
/// lambda and mu raised by a1, a2 and rho lowered by a3 on the block.
#[derive(Debug, Clone, Copy)]
pub struct TestBlock {
    pub bbox: ElementBox,
    pub alpha: [f64; 3],
}

/// Per-element coefficient values. All three fields are strictly positive
/// everywhere by construction.
#[derive(Debug, Clone)]
pub struct MaterialField {
    /// First Lame parameter per element, Pa.
    pub lambda: Vec<f64>,
    /// Shear modulus per element, Pa.
    pub mu: Vec<f64>,
    /// Density per element, kg/m^3.
    pub rho: Vec<f64>,
}

impl MaterialField {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Content hash over all element values.
    pub fn fingerprint(&self) -> u64 {
        let mut fp = Fingerprint::new();
        fp.push_u64(self.lambda.len() as u64);
        for field in [&self.lambda, &self.mu, &self.rho] {
            for &v in field {
                fp.push_f64(v);
            }
        }
        fp.finish()
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), MaterialError> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(MaterialError::NonPositive { name, value })
    }
}

/// Constant background field (lambda_0, mu_0, rho_0).
pub fn background(
    lambda0: f64,
    mu0: f64,
    rho0: f64,
    mesh: &Mesh,
) -> Result<MaterialField, MaterialError> {
    check_positive("lambda", lambda0)?;
    check_positive("mu", mu0)?;
    check_positive("rho", rho0)?;
    let ne = mesh.elements.len();
    Ok(MaterialField {
        lambda: vec![lambda0; ne],
        mu: vec![mu0; ne],
        rho: vec![rho0; ne],
    })
}

/// Overlay box inclusions on a field: lambda += delta_lambda, mu += delta_mu,
/// rho -= delta_rho on each box. Fails if any coefficient leaves L-infinity-plus.
pub fn apply_inclusions(
    field: &MaterialField,
    specs: &[InclusionSpec],
    mesh: &Mesh,
) -> Result<MaterialField, MaterialError> {
    let n = mesh.n_axis;
    for spec in specs {
        if !spec.bbox.is_valid_for(n) {
            return Err(MaterialError::BoxOutOfRange(spec.bbox, n));
        }
    }
    let mut out = field.clone();
    for spec in specs {
        for k in spec.bbox.lo[2]..spec.bbox.hi[2] {
            for j in spec.bbox.lo[1]..spec.bbox.hi[1] {
                for i in spec.bbox.lo[0]..spec.bbox.hi[0] {
                    let e = mesh.element_index(i, j, k);
                    out.lambda[e] += spec.delta_lambda;
                    out.mu[e] += spec.delta_mu;
                    out.rho[e] -= spec.delta_rho;
                }
            }
        }
    }
    for (name, values) in [
        ("lambda", &out.lambda),
        ("mu", &out.mu),
        ("rho", &out.rho),
    ] {
        if let Some(&bad) = values.iter().find(|v| **v <= 0.0) {
            return Err(MaterialError::DrivenNonPositive { name, value: bad });
        }
    }
    Ok(out)
}

/// Test coefficients for a candidate block: background plus the alpha bump
/// restricted to the block.
pub fn test_coefficients(
    lambda0: f64,
    mu0: f64,
    rho0: f64,
    block: &TestBlock,
    mesh: &Mesh,
) -> Result<MaterialField, MaterialError> {
    let [a1, a2, a3] = block.alpha;
    if a3 >= rho0 {
        return Err(MaterialError::DensityBound { alpha3: a3, rho0 });
    }
    let base = background(lambda0, mu0, rho0, mesh)?;
    apply_inclusions(
        &base,
        &[InclusionSpec {
            bbox: block.bbox,
            delta_lambda: a1,
            delta_mu: a2,
            delta_rho: a3,
        }],
        mesh,
    )
}
