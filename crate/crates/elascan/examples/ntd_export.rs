//! Compute a Neumann-to-Dirichlet matrix, cross-check its negative-eigenvalue
//! count against matrix inertia, and export it as CSV with provenance.

use std::path::Path;

use elascan::export::write_ntd_csv;
use elascan::linsolve::factor_symmetric;
use elascan::spectral::{count_negative, spectral_scale};
use elascan::{assemble, ntd_matrix, sym_eigenvalues, Scenario};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

fn main() {
    let scenario_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/two_inclusions.toml");
    let scenario = Scenario::from_path(&scenario_path).expect("scenario parses");
    let omega = 10.0;

    let mesh = scenario.build_mesh(Some(5)).unwrap();
    let loads = scenario.build_loads(&mesh, None, None).unwrap();
    let field = scenario.phantom_field(&mesh).unwrap();
    let system = assemble(&mesh, &field).unwrap();
    let ntd = ntd_matrix(&mesh, &system, &loads, omega, scenario.test.zero_pivot_rel).unwrap();
    println!(
        "NtD: m = {}, omega = {omega}, field {:016x}, loads {:016x}",
        ntd.m(),
        ntd.field_fingerprint,
        ntd.loadset_fingerprint
    );

    // two routes to the same count: dense eigenvalues vs LDL^T inertia
    let eigs = sym_eigenvalues(&ntd.entries);
    let by_eig = count_negative(&eigs, spectral_scale(&eigs), scenario.test.rel_tol);
    let mut coo = CooMatrix::new(ntd.m(), ntd.m());
    for i in 0..ntd.m() {
        for j in 0..ntd.m() {
            coo.push(i, j, ntd.entries[(i, j)]);
        }
    }
    let by_inertia = factor_symmetric(&CsrMatrix::from(&coo), scenario.test.zero_pivot_rel)
        .unwrap()
        .inertia()
        .n_neg;
    println!("negative eigenvalues: {by_eig} (dense eig) vs {by_inertia} (inertia)");

    let out = Path::new("target").join("ntd.csv");
    write_ntd_csv(&out, &ntd).unwrap();
    println!("wrote {} (+ .meta.json sidecar)", out.display());
}
