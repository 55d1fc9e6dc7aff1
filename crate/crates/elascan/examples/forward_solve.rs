//! Forward solve: displacement of the two-inclusion cube under one surface
//! load patch, exported as a legacy-VTK structured-points file.

use std::path::Path;

use elascan::export::write_vtk_displacement;
use elascan::linsolve::factor_symmetric;
use elascan::{assemble, Scenario};

fn main() {
    let scenario_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/two_inclusions.toml");
    let scenario = Scenario::from_path(&scenario_path).expect("scenario parses");
    let omega = 10.0;

    let mesh = scenario.build_mesh(None).unwrap();
    let loads = scenario.build_loads(&mesh, None, None).unwrap();
    let field = scenario.phantom_field(&mesh).unwrap();
    let system = assemble(&mesh, &field).unwrap();
    println!(
        "mesh n = {}, {} dofs ({} free), m = {} loads",
        mesh.n_axis,
        system.ndof_full(),
        system.ndof_free(),
        loads.m()
    );

    let pencil = system.pencil_reduced(omega);
    let factorization = factor_symmetric(&pencil, scenario.test.zero_pivot_rel).unwrap();
    let load_index = 62; // middle patch of the top face family
    let rhs = elascan::fem::assemble_load(&mesh, &loads.loads[load_index]).unwrap();
    let u = factorization.solve(&system.reduce_vec(&rhs)).unwrap();
    let u_full = system.expand_vec(&u);
    println!(
        "solved load {load_index} at omega = {omega} rad/s; |u|_max = {:.4e} m",
        u_full.amax()
    );

    let out = Path::new("target").join("forward_displacement.vtk");
    write_vtk_displacement(&out, &mesh, &u_full, "displacement").unwrap();
    println!("wrote {}", out.display());
}
