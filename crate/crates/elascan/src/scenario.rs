//! Scenario files: a versioned TOML description of the domain, background
//! material, inclusions, boundary loads, test cover, and frequencies.
//!
//! Inclusion geometry is given in cover-block coordinates, so one scenario
//! drives every mesh resolution whose subdivision the cover divides; block
//! boxes always land exactly on element boundaries.
//!
//! ```toml
//! version = 1
//! name = "two inclusions"
//!
//! [domain]
//! edge_length = 1.0          # m
//! mesh_n = 10                # subdivisions per axis
//! dirichlet = ["zmin"]       # box sides held fixed; may be empty
//!
//! [background]               # Pa, Pa, kg/m^3
//! lambda0 = 6e5
//! mu0 = 6e3
//! rho0 = 3e3
//!
//! [loads]
//! patches_per_edge = 5
//! magnitude = 100.0          # N/m^2
//! directions = "normal"      # or "full" (normal + two tangential)
//!
//! [cover]
//! blocks_per_edge = 5
//!
//! [[inclusions]]             # half-open block ranges on the cover grid
//! lo = [1, 1, 1]
//! hi = [3, 3, 3]
//! delta_lambda = 1.4e6       # added to lambda0
//! delta_mu = 1.4e4           # added to mu0
//! delta_rho = 2e3            # subtracted from rho0
//!
//! [test]
//! alpha = [1.4e6, 1.4e4, 2e3]
//!
//! [frequencies]
//! omegas = [0.0, 10.0]
//! ```

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fingerprint::Fingerprint;
use crate::materials::{apply_inclusions, background, InclusionSpec, MaterialError};
use crate::materials::{ElementBox, MaterialField};
use crate::mesh::{
    build_load_patches, build_structured_hex_mesh, tag_boundary, BoundaryLoadSet, CubeSide,
    LoadDirections, Mesh, MeshError,
};
use crate::monotonicity::{AlphaVariations, BackgroundCoefficients, CoverGrid};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported scenario version {0} (expected 1)")]
    Version(u32),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Material(#[from] MaterialError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    pub edge_length: f64,
    pub mesh_n: usize,
    #[serde(default = "default_dirichlet")]
    pub dirichlet: Vec<CubeSide>,
}

fn default_dirichlet() -> Vec<CubeSide> {
    vec![CubeSide::ZMin]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadSpec {
    pub patches_per_edge: usize,
    #[serde(default = "default_magnitude")]
    pub magnitude: f64,
    #[serde(default = "default_directions")]
    pub directions: LoadDirections,
}

fn default_magnitude() -> f64 {
    100.0
}

fn default_directions() -> LoadDirections {
    LoadDirections::Normal
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoverSpec {
    pub blocks_per_edge: usize,
}

/// Box inclusion in cover-block coordinates, half-open ranges.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InclusionBlock {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
    #[serde(default)]
    pub delta_lambda: f64,
    #[serde(default)]
    pub delta_mu: f64,
    #[serde(default)]
    pub delta_rho: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestSpec {
    pub alpha: [f64; 3],
    #[serde(default)]
    pub alpha_subsets: bool,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_zero_pivot_rel")]
    pub zero_pivot_rel: f64,
}

fn default_rel_tol() -> f64 {
    crate::spectral::DEFAULT_REL_TOL
}

fn default_zero_pivot_rel() -> f64 {
    crate::linsolve::DEFAULT_ZERO_PIVOT_REL
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrequencySpec {
    pub omegas: Vec<f64>,
}

/// A-priori coefficient bounds, needed only when an inclusion raises the
/// density (the eigenvalue budget must then be computed with `rho_max`).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundsSpec {
    pub rho_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub version: u32,
    #[serde(default)]
    pub name: String,
    pub domain: DomainSpec,
    pub background: BackgroundCoefficients,
    pub loads: LoadSpec,
    pub cover: CoverSpec,
    #[serde(default)]
    pub inclusions: Vec<InclusionBlock>,
    pub test: TestSpec,
    pub frequencies: FrequencySpec,
    #[serde(default)]
    pub bounds: Option<BoundsSpec>,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.version != 1 {
            return Err(ScenarioError::Version(self.version));
        }
        let n = self.domain.mesh_n;
        let b = self.cover.blocks_per_edge;
        if b == 0 || n % b != 0 {
            return Err(ScenarioError::Invalid(format!(
                "cover blocks_per_edge = {b} must divide mesh_n = {n}"
            )));
        }
        if self.loads.patches_per_edge == 0 || n % self.loads.patches_per_edge != 0 {
            return Err(ScenarioError::Invalid(format!(
                "patches_per_edge = {} must divide mesh_n = {n}",
                self.loads.patches_per_edge
            )));
        }
        for inc in &self.inclusions {
            for a in 0..3 {
                if inc.lo[a] >= inc.hi[a] || inc.hi[a] > b {
                    return Err(ScenarioError::Invalid(format!(
                        "inclusion block range {:?}..{:?} does not fit the {b}^3 cover",
                        inc.lo, inc.hi
                    )));
                }
            }
        }
        let raises_density = self.inclusions.iter().any(|i| i.delta_rho < 0.0);
        if raises_density && self.bounds.is_none() {
            return Err(ScenarioError::Invalid(
                "an inclusion raises the density; [bounds] rho_max is required \
                 to compute a valid eigenvalue budget"
                    .into(),
            ));
        }
        if let Some(bounds) = self.bounds {
            let rho_peak = self
                .inclusions
                .iter()
                .map(|i| self.background.rho0 - i.delta_rho)
                .fold(self.background.rho0, f64::max);
            if bounds.rho_max < rho_peak {
                return Err(ScenarioError::Invalid(format!(
                    "rho_max = {} is below the peak density {rho_peak}",
                    bounds.rho_max
                )));
            }
        }
        Ok(())
    }

    /// Build the tagged mesh, optionally overriding the subdivision count.
    /// Cover alignment is only needed (and only checked) by sweeps, so
    /// refinement sequences for budget tables may use any subdivision.
    pub fn build_mesh(&self, mesh_n: Option<usize>) -> Result<Mesh, ScenarioError> {
        let n = mesh_n.unwrap_or(self.domain.mesh_n);
        let mesh = build_structured_hex_mesh(n, self.domain.edge_length)?;
        Ok(tag_boundary(mesh, &self.domain.dirichlet)?)
    }

    pub fn build_loads(
        &self,
        mesh: &Mesh,
        patches: Option<usize>,
        directions: Option<LoadDirections>,
    ) -> Result<BoundaryLoadSet, ScenarioError> {
        Ok(build_load_patches(
            mesh,
            patches.unwrap_or(self.loads.patches_per_edge),
            self.loads.magnitude,
            directions.unwrap_or(self.loads.directions),
        )?)
    }

    pub fn cover_grid(&self) -> CoverGrid {
        CoverGrid {
            blocks_per_edge: self.cover.blocks_per_edge,
        }
    }

    pub fn alpha_variations(&self) -> AlphaVariations {
        if self.test.alpha_subsets {
            AlphaVariations::Subsets
        } else {
            AlphaVariations::FullBound
        }
    }

    /// Inclusions converted from block coordinates to element ranges.
    pub fn inclusion_specs(&self, mesh: &Mesh) -> Result<Vec<InclusionSpec>, ScenarioError> {
        let s = mesh.n_axis / self.cover.blocks_per_edge;
        Ok(self
            .inclusions
            .iter()
            .map(|inc| InclusionSpec {
                bbox: ElementBox::new(
                    [inc.lo[0] * s, inc.lo[1] * s, inc.lo[2] * s],
                    [inc.hi[0] * s, inc.hi[1] * s, inc.hi[2] * s],
                ),
                delta_lambda: inc.delta_lambda,
                delta_mu: inc.delta_mu,
                delta_rho: inc.delta_rho,
            })
            .collect())
    }

    /// The coefficient field with all inclusions applied.
    pub fn phantom_field(&self, mesh: &Mesh) -> Result<MaterialField, ScenarioError> {
        let base = background(
            self.background.lambda0,
            self.background.mu0,
            self.background.rho0,
            mesh,
        )?;
        Ok(apply_inclusions(&base, &self.inclusion_specs(mesh)?, mesh)?)
    }

    /// Density to use when computing the eigenvalue budget: `rho_max` when
    /// declared, the background density otherwise.
    pub fn budget_density(&self) -> f64 {
        self.bounds
            .map(|b| b.rho_max)
            .unwrap_or(self.background.rho0)
    }

    /// Cover blocks lying inside some inclusion.
    pub fn inside_blocks(&self) -> HashSet<[usize; 3]> {
        let mut set = HashSet::new();
        for inc in &self.inclusions {
            for k in inc.lo[2]..inc.hi[2] {
                for j in inc.lo[1]..inc.hi[1] {
                    for i in inc.lo[0]..inc.hi[0] {
                        set.insert([i, j, k]);
                    }
                }
            }
        }
        set
    }

    /// Hash of the parsed scenario content.
    pub fn fingerprint(&self) -> u64 {
        let mut fp = Fingerprint::new();
        let canonical = toml::to_string(self).unwrap_or_default();
        fp.push_bytes(canonical.as_bytes());
        fp.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = r#"
version = 1
name = "two inclusions"

[domain]
edge_length = 1.0
mesh_n = 10
dirichlet = ["zmin"]

[background]
lambda0 = 6e5
mu0 = 6e3
rho0 = 3e3

[loads]
patches_per_edge = 5
magnitude = 100.0
directions = "normal"

[cover]
blocks_per_edge = 5

[[inclusions]]
lo = [1, 1, 1]
hi = [3, 3, 3]
delta_lambda = 1.4e6
delta_mu = 1.4e4
delta_rho = 2e3

[[inclusions]]
lo = [3, 3, 1]
hi = [4, 4, 4]
delta_lambda = 1.4e6
delta_mu = 1.4e4
delta_rho = 2e3

[test]
alpha = [1.4e6, 1.4e4, 2e3]

[frequencies]
omegas = [0.0, 10.0]
"#;

    #[test]
    fn reference_scenario_parses() {
        let s = Scenario::from_toml_str(REFERENCE).unwrap();
        assert_eq!(s.domain.mesh_n, 10);
        assert_eq!(s.cover.blocks_per_edge, 5);
        assert_eq!(s.inside_blocks().len(), 8 + 3);
        assert_eq!(s.test.rel_tol, 1e-10);
        assert_eq!(s.budget_density(), 3e3);
    }

    #[test]
    fn parse_errors_carry_position() {
        let bad = REFERENCE.replace("mesh_n = 10", "mesh_n = \"ten\"");
        let err = Scenario::from_toml_str(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "no location in: {msg}");
    }

    #[test]
    fn misaligned_cover_rejected() {
        let bad = REFERENCE.replace("mesh_n = 10", "mesh_n = 9");
        assert!(matches!(
            Scenario::from_toml_str(&bad),
            Err(ScenarioError::Invalid(_))
        ));
    }

    #[test]
    fn density_increase_requires_rho_max() {
        let bad = REFERENCE.replace("delta_rho = 2e3", "delta_rho = -2e3");
        let err = Scenario::from_toml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("rho_max"));
        let good = format!("{bad}\n[bounds]\nrho_max = 5e3\n");
        let s = Scenario::from_toml_str(&good).unwrap();
        assert_eq!(s.budget_density(), 5e3);
    }

    #[test]
    fn phantom_field_places_inclusions() {
        let s = Scenario::from_toml_str(REFERENCE).unwrap();
        let mesh = s.build_mesh(None).unwrap();
        let field = s.phantom_field(&mesh).unwrap();
        // element (3,3,3) lies in block (1,1,1) -> inside the first inclusion
        let inside = mesh.element_index(3, 3, 3);
        assert_eq!(field.lambda[inside], 2e6);
        // element (0,0,0) lies in block (0,0,0) -> outside
        let outside = mesh.element_index(0, 0, 0);
        assert_eq!(field.lambda[outside], 6e5);
    }

    #[test]
    fn mesh_override_is_free_of_cover_constraints() {
        // budget tables refine with sizes the cover need not divide; the
        // sweep itself still rejects misaligned covers
        let s = Scenario::from_toml_str(REFERENCE).unwrap();
        assert!(s.build_mesh(Some(15)).is_ok());
        assert!(s.build_mesh(Some(12)).is_ok());
        let mesh = s.build_mesh(Some(12)).unwrap();
        assert!(s.cover_grid().elements_per_block(&mesh).is_err());
    }

    #[test]
    fn version_guard() {
        let bad = REFERENCE.replace("version = 1", "version = 2");
        assert!(matches!(
            Scenario::from_toml_str(&bad),
            Err(ScenarioError::Version(2))
        ));
    }
}
