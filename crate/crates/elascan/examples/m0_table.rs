//! Eigenvalue budget M0 per frequency and its behavior under mesh
//! refinement. M0 is the inertia count of K - omega^2 M for the homogeneous
//! background with the bottom face fixed.

use elascan::materials::background;
use elascan::{assemble, compute_m0, Scenario};
use std::path::Path;

fn main() {
    let scenario_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/homogeneous.toml");
    let scenario = Scenario::from_path(&scenario_path).expect("scenario parses");
    let bg = scenario.background;

    println!("{:>6} {:>8} {:>8} {:>8}", "n", "omega=0", "omega=10", "omega=50");
    for n in [5, 10, 15] {
        let mesh = scenario.build_mesh(Some(n)).unwrap();
        let field = background(bg.lambda0, bg.mu0, bg.rho0, &mesh).unwrap();
        let system = assemble(&mesh, &field).unwrap();
        let mut row = format!("{n:>6}");
        for omega in [0.0, 10.0, 50.0] {
            let r = compute_m0(&system, omega, scenario.test.zero_pivot_rel).unwrap();
            row.push_str(&format!(" {:>8}", r.m0));
        }
        println!("{row}");
    }
    println!();
    println!("M0(omega = 0) = 0: the constrained stiffness is positive definite.");
    println!("At omega = 10 the count settles near 22 under refinement; at");
    println!("omega = 50 the shear spectrum below the shift keeps filling in as");
    println!("the mesh resolves it, so the count keeps growing.");
}
