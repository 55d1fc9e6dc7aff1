//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured values. Run with
//!
//! ```text
//! cargo test -p elascan --test acceptance -- --nocapture --test-threads 1
//! ```
//!
//! The sweeps (criteria 3 and 4) factor 126 systems of ~3.6k dofs each and
//! take a few minutes on a desktop.
//!
//! Criterion 2's omega = 50 clause asserts the published budget of 90 +/- 5
//! at the finest feasible mesh. Measured budgets keep growing under
//! refinement (hundreds at n = 16) because the shear spectrum below that
//! shift is dense, so the clause fails; the assertion message carries the
//! measured sequence. All other criteria pass.

use std::collections::HashSet;
use std::path::Path;

use elascan::fem::{assemble_face_tractions, nodal_field};
use elascan::linsolve::{factor_symmetric, DEFAULT_ZERO_PIVOT_REL};
use elascan::materials::background;
use elascan::mesh::{CubeSide, FaceTag};
use elascan::monotonicity::{
    apply_mtilde, suggest_mtilde, sweep, AlphaVariations, SweepContext,
};
use elascan::ntd::ntd_matrix;
use elascan::reconstruct::{assemble_mask, fill_cavities, VoxelMask};
use elascan::spectral::{count_negative, spectral_scale, sym_eigenvalues};
use elascan::verify::{convergence_study, wavelengths, ManufacturedCase};
use elascan::{assemble, compute_m0, Scenario};
use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TABLE_BG: (f64, f64, f64) = (6e5, 6e3, 3e3);

fn reference_scenario() -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/two_inclusions.toml");
    Scenario::from_path(&path).unwrap()
}

#[test]
fn criterion_1_wavelength_reproduction() {
    let w10 = wavelengths(TABLE_BG.0, TABLE_BG.1, TABLE_BG.2, 10.0).unwrap();
    let w50 = wavelengths(TABLE_BG.0, TABLE_BG.1, TABLE_BG.2, 50.0).unwrap();
    let checks = [
        (w10.l_p, 9.0),
        (w10.l_s, 0.9),
        (w50.l_p, 1.79),
        (w50.l_s, 0.18),
    ];
    let ok = checks.iter().all(|(got, want)| (got - want).abs() / want <= 0.02);
    println!(
        "criterion 1 (wavelengths): {} — omega=10: l_p={:.4}/9, l_s={:.4}/0.9; \
         omega=50: l_p={:.4}/1.79, l_s={:.4}/0.18 (2% window)",
        if ok { "PASS" } else { "FAIL" },
        w10.l_p,
        w10.l_s,
        w50.l_p,
        w50.l_s
    );
    assert!(ok);
}

fn m0_at(n: usize, omega: f64) -> usize {
    let scenario = reference_scenario();
    let mesh = scenario.build_mesh(Some(n)).unwrap();
    let field = background(TABLE_BG.0, TABLE_BG.1, TABLE_BG.2, &mesh).unwrap();
    let system = assemble(&mesh, &field).unwrap();
    compute_m0(&system, omega, DEFAULT_ZERO_PIVOT_REL).unwrap().m0
}

#[test]
fn criterion_2_budget_stationary_and_omega10() {
    let m0_zero = m0_at(10, 0.0);
    let seq: Vec<usize> = [8, 12, 16].iter().map(|&n| m0_at(n, 10.0)).collect();
    let stabilized = seq[1] == seq[2];
    let near_paper = seq[2].abs_diff(24) <= 2;
    let ok = m0_zero == 0 && stabilized && near_paper;
    println!(
        "criterion 2 (M0, omega=0 and omega=10): {} — M0(0)={m0_zero} (want 0 exactly); \
         M0(10) over n=8,12,16: {seq:?} (stabilized, within 24±2)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert_eq!(m0_zero, 0);
    assert!(stabilized, "M0(10) sequence {seq:?} did not stabilize");
    assert!(near_paper, "stabilized M0(10) = {} not within 24±2", seq[2]);
}

#[test]
fn criterion_2_budget_omega50_published_value() {
    // finest mesh that factors in minutes on a desktop
    let m0_coarse = m0_at(10, 50.0);
    let m0_fine = m0_at(16, 50.0);
    let ok = m0_fine.abs_diff(90) <= 5;
    println!(
        "criterion 2 (M0, omega=50): {} — measured M0 = {m0_coarse} (n=10), {m0_fine} (n=16); \
         published value 90±5",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(
        ok,
        "M0(50) = {m0_fine} at n=16 (and {m0_coarse} at n=10) vs published 90±5. The count of \
         mixed-problem eigenvalues below omega^2*rho0 grows under refinement toward its \
         continuum value (~1.5e3 by Weyl asymptotics: the shear wavelength at omega=50 is \
         0.18 m on a 1 m cube), so the published budget is reachable only on the original \
         undisclosed coarse discretization, not at the finest feasible mesh."
    );
}

struct SweepOutcome {
    result: elascan::SweepResult,
    inside: HashSet<[usize; 3]>,
    max_inside: usize,
    min_outside: usize,
}

fn run_reference_sweep(omega: f64) -> SweepOutcome {
    let scenario = reference_scenario();
    let mesh = scenario.build_mesh(None).unwrap();
    assert!(mesh.n_axis >= 10);
    let loads = scenario.build_loads(&mesh, None, None).unwrap();
    assert!(loads.m() >= 125);
    let ctx = SweepContext::new(&mesh, &loads, scenario.background, scenario.test.zero_pivot_rel)
        .unwrap();
    let field = scenario.phantom_field(&mesh).unwrap();
    let measured = ctx.ntd_for_field(&field, omega).unwrap();
    let result = sweep(
        &ctx,
        &measured,
        scenario.cover_grid(),
        scenario.test.alpha,
        AlphaVariations::FullBound,
        0,
        scenario.test.rel_tol,
    )
    .unwrap();
    let inside = scenario.inside_blocks();
    let mut max_inside = 0usize;
    let mut min_outside = usize::MAX;
    for r in &result.results {
        let v = r.verdict().expect("every block tests cleanly");
        if inside.contains(&v.coords) {
            max_inside = max_inside.max(v.n_negative);
        } else {
            min_outside = min_outside.min(v.n_negative);
        }
    }
    SweepOutcome {
        result,
        inside,
        max_inside,
        min_outside,
    }
}

#[test]
fn criterion_3_stationary_separation() {
    let t0 = std::time::Instant::now();
    let out = run_reference_sweep(0.0);
    let ok = out.max_inside == 0 && out.min_outside >= 1;
    println!(
        "criterion 3 (stationary separation, n=10, m=125): {} — inside N_B all {}, \
         outside N_B in {}..{} ({}s)",
        if ok { "PASS" } else { "FAIL" },
        out.max_inside,
        out.min_outside,
        out.result.eigencounts().iter().max().unwrap(),
        t0.elapsed().as_secs()
    );
    assert_eq!(out.max_inside, 0, "inside blocks must have exactly zero negatives");
    assert!(out.min_outside >= 1, "outside blocks must have at least one negative");
}

#[test]
fn criterion_4_time_harmonic_separation_and_reconstruction() {
    let t0 = std::time::Instant::now();
    let mut out = run_reference_sweep(10.0);
    let separated = out.max_inside < out.min_outside;

    let suggestion = suggest_mtilde(&out.result.eigencounts());
    apply_mtilde(&mut out.result, suggestion.value);
    let mask = assemble_mask(&out.result);
    let filled = fill_cavities(&mask);
    let mut expected = VoxelMask::new(filled.dims);
    for b in &out.inside {
        expected.set(b[0], b[1], b[2], true);
    }
    let exact = filled == expected;

    println!(
        "criterion 4 (omega=10 separation + reconstruction): {} — max inside N_B = {}, \
         min outside N_B = {}, auto M-tilde = {}, reconstruction {} the phantom ({}s)",
        if separated && exact { "PASS" } else { "FAIL" },
        out.max_inside,
        out.min_outside,
        suggestion.value,
        if exact { "equals" } else { "differs from" },
        t0.elapsed().as_secs()
    );
    assert!(
        separated,
        "need strict separation: max inside {} vs min outside {}",
        out.max_inside, out.min_outside
    );
    assert!(exact, "reconstruction must equal the phantom block set");
}

#[test]
fn criterion_5_counts_respect_the_budget() {
    let scenario = reference_scenario();
    let mesh = scenario.build_mesh(None).unwrap();
    let loads = scenario.build_loads(&mesh, None, None).unwrap();
    let ctx = SweepContext::new(&mesh, &loads, scenario.background, scenario.test.zero_pivot_rel)
        .unwrap();
    let field = scenario.phantom_field(&mesh).unwrap();
    let omega = 10.0;
    let measured = ctx.ntd_for_field(&field, omega).unwrap();

    // budget at the same discretization
    let bg_field = background(TABLE_BG.0, TABLE_BG.1, TABLE_BG.2, &mesh).unwrap();
    let bg_system = assemble(&mesh, &bg_field).unwrap();
    let m0 = compute_m0(&bg_system, omega, scenario.test.zero_pivot_rel)
        .unwrap()
        .m0;

    let cover = scenario.cover_grid();
    let mut worst = 0usize;
    for coords in scenario.inside_blocks() {
        let block = cover.block_at(&mesh, coords, scenario.test.alpha).unwrap();
        let verdict =
            elascan::test_block(&ctx, &measured, &block, m0, scenario.test.rel_tol).unwrap();
        worst = worst.max(verdict.n_negative);
        assert!(
            verdict.n_negative <= m0,
            "inside block {coords:?}: N_B = {} exceeds M0 = {m0}",
            verdict.n_negative
        );
    }
    println!(
        "criterion 5 (N_B <= M0 for inside blocks): PASS — max inside N_B = {worst} vs M0 = {m0} \
         at omega = {omega}, n = {}",
        mesh.n_axis
    );
}

#[test]
fn criterion_6a_rigid_body_kernel() {
    let mesh = elascan::build_structured_hex_mesh(2, 1.0).unwrap();
    let field = background(TABLE_BG.0, TABLE_BG.1, TABLE_BG.2, &mesh).unwrap();
    let sys = assemble(&mesh, &field).unwrap();
    let kd = DMatrix::from_fn(sys.k.nrows(), sys.k.ncols(), |i, j| {
        sys.k.get_entry(i, j).map_or(0.0, |e| e.into_value())
    });
    let eigs = sym_eigenvalues(&kd);
    let scale = spectral_scale(&eigs);
    let nulls = eigs.iter().filter(|&&v| v.abs() <= 1e-10 * scale).count();

    let rigid_fields: [Box<dyn Fn(Vector3<f64>) -> Vector3<f64>>; 6] = [
        Box::new(|_| Vector3::new(1.0, 0.0, 0.0)),
        Box::new(|_| Vector3::new(0.0, 1.0, 0.0)),
        Box::new(|_| Vector3::new(0.0, 0.0, 1.0)),
        Box::new(|x| Vector3::new(0.0, -x.z, x.y)),
        Box::new(|x| Vector3::new(x.z, 0.0, -x.x)),
        Box::new(|x| Vector3::new(-x.y, x.x, 0.0)),
    ];
    let mut max_residual = 0.0f64;
    for f in rigid_fields {
        let u = nodal_field(&mesh, f);
        let ku = elascan::linsolve::spmv(&sys.k, &u);
        max_residual = max_residual.max(ku.norm() / (scale * u.norm()));
    }
    let ok = nulls == 6 && max_residual <= 1e-10;
    println!(
        "criterion 6a (rigid kernel): {} — {nulls} null modes, max relative residual {max_residual:.2e}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert_eq!(nulls, 6);
    assert!(max_residual <= 1e-10);
}

#[test]
fn criterion_6b_patch_test() {
    // tractions of a constant-stress field with u = 0 on the clamped bottom:
    // the trilinear solution reproduces the linear field to solver precision
    let mesh = elascan::build_structured_hex_mesh(3, 1.0).unwrap();
    let mesh = elascan::tag_boundary(mesh, &[CubeSide::ZMin]).unwrap();
    let (lambda, mu) = (TABLE_BG.0, TABLE_BG.1);
    let (a, b, c) = (0.3e-3, -0.2e-3, 0.5e-3);
    let exact = |x: Vector3<f64>| Vector3::new(a * x.z, b * x.z, c * x.z);
    // stress of the linear field
    let sigma = nalgebra::Matrix3::new(
        lambda * c,
        0.0,
        mu * a,
        0.0,
        lambda * c,
        mu * b,
        mu * a,
        mu * b,
        (lambda + 2.0 * mu) * c,
    );
    let tractions: Vec<(usize, Vector3<f64>)> = mesh
        .boundary_faces
        .iter()
        .enumerate()
        .filter(|(_, f)| f.tag == FaceTag::Neumann)
        .map(|(idx, f)| (idx, sigma * f.normal))
        .collect();
    let rhs_full = assemble_face_tractions(&mesh, &tractions).unwrap();

    let field = background(lambda, mu, TABLE_BG.2, &mesh).unwrap();
    let sys = assemble(&mesh, &field).unwrap();
    let k = sys.stiffness_reduced();
    let fact = factor_symmetric(&k, DEFAULT_ZERO_PIVOT_REL).unwrap();
    let sol = fact.solve(&sys.reduce_vec(&rhs_full)).unwrap();
    let u_full = sys.expand_vec(&sol);
    let u_exact = nodal_field(&mesh, exact);
    let err = (&u_full - &u_exact).amax() / u_exact.amax();
    let ok = err <= 1e-10;
    println!(
        "criterion 6b (patch test): {} — max nodal deviation {err:.2e} (tolerance 1e-10)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_6c_ntd_symmetry_and_stationary_definiteness() {
    let mesh = elascan::build_structured_hex_mesh(4, 1.0).unwrap();
    let mesh = elascan::tag_boundary(mesh, &[CubeSide::ZMin]).unwrap();
    let loads =
        elascan::build_load_patches(&mesh, 2, 100.0, elascan::mesh::LoadDirections::Full).unwrap();
    let field = background(TABLE_BG.0, TABLE_BG.1, TABLE_BG.2, &mesh).unwrap();
    let sys = assemble(&mesh, &field).unwrap();

    let ntd0 = ntd_matrix(&mesh, &sys, &loads, 0.0, DEFAULT_ZERO_PIVOT_REL).unwrap();
    let ntd10 = ntd_matrix(&mesh, &sys, &loads, 10.0, DEFAULT_ZERO_PIVOT_REL).unwrap();
    let sym_ok = ntd0.raw_asymmetry <= 1e-10 && ntd10.raw_asymmetry <= 1e-10;

    let eigs = sym_eigenvalues(&ntd0.entries);
    let pd_ok = eigs[0] > 0.0;
    println!(
        "criterion 6c (NtD symmetry + stationary definiteness): {} — asymmetry {:.2e}/{:.2e}, \
         smallest stationary eigenvalue {:.3e}",
        if sym_ok && pd_ok { "PASS" } else { "FAIL" },
        ntd0.raw_asymmetry,
        ntd10.raw_asymmetry,
        eigs[0]
    );
    assert!(sym_ok);
    assert!(pd_ok);
}

#[test]
fn criterion_6d_stationary_monotonicity_psd() {
    let mesh = elascan::build_structured_hex_mesh(4, 1.0).unwrap();
    let mesh = elascan::tag_boundary(mesh, &[CubeSide::ZMin]).unwrap();
    let loads =
        elascan::build_load_patches(&mesh, 2, 100.0, elascan::mesh::LoadDirections::Normal)
            .unwrap();
    let soft = background(TABLE_BG.0, TABLE_BG.1, TABLE_BG.2, &mesh).unwrap();
    let block = elascan::TestBlock {
        bbox: elascan::materials::ElementBox::new([1, 0, 1], [3, 2, 4]),
        alpha: [1.4e6, 1.4e4, 0.0],
    };
    let stiff = elascan::materials::test_coefficients(
        TABLE_BG.0, TABLE_BG.1, TABLE_BG.2, &block, &mesh,
    )
    .unwrap();
    let ntd_soft = ntd_matrix(
        &mesh,
        &assemble(&mesh, &soft).unwrap(),
        &loads,
        0.0,
        DEFAULT_ZERO_PIVOT_REL,
    )
    .unwrap();
    let ntd_stiff = ntd_matrix(
        &mesh,
        &assemble(&mesh, &stiff).unwrap(),
        &loads,
        0.0,
        DEFAULT_ZERO_PIVOT_REL,
    )
    .unwrap();
    let diff = &ntd_soft.entries - &ntd_stiff.entries;
    let eigs = sym_eigenvalues(&diff);
    let scale = spectral_scale(&eigs);
    let ok = eigs[0] >= -1e-9 * scale;
    println!(
        "criterion 6d (stationary monotonicity PSD): {} — most negative eigenvalue {:.3e} \
         at scale {:.3e}",
        if ok { "PASS" } else { "FAIL" },
        eigs[0],
        scale
    );
    assert!(ok);
}

#[test]
fn criterion_6e_inertia_matches_dense_eigensolves() {
    // 100 random symmetric matrices
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut agree = 0;
    for _ in 0..100 {
        let n = 50;
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
        }
        let eigs = sym_eigenvalues(&d);
        let scale = spectral_scale(&eigs);
        let by_eig = count_negative(&eigs, scale, 1e-10);
        let mut coo = nalgebra_sparse::CooMatrix::new(n, n);
        for i in 0..n {
            for j in 0..n {
                coo.push(i, j, d[(i, j)]);
            }
        }
        let by_inertia = factor_symmetric(&nalgebra_sparse::CsrMatrix::from(&coo), 1e-12)
            .unwrap()
            .inertia()
            .n_neg;
        if by_eig == by_inertia {
            agree += 1;
        }
    }

    // and the coarse-mesh pencil
    let mesh = elascan::build_structured_hex_mesh(3, 1.0).unwrap();
    let mesh = elascan::tag_boundary(mesh, &[CubeSide::ZMin]).unwrap();
    let field = background(TABLE_BG.0, TABLE_BG.1, TABLE_BG.2, &mesh).unwrap();
    let sys = assemble(&mesh, &field).unwrap();
    let pencil = sys.pencil_reduced(10.0);
    let by_inertia = factor_symmetric(&pencil, DEFAULT_ZERO_PIVOT_REL)
        .unwrap()
        .inertia()
        .n_neg;
    let pd = DMatrix::from_fn(pencil.nrows(), pencil.ncols(), |i, j| {
        pencil.get_entry(i, j).map_or(0.0, |e| e.into_value())
    });
    let eigs = sym_eigenvalues(&pd);
    let by_eig = count_negative(&eigs, spectral_scale(&eigs), 1e-10);

    let ok = agree == 100 && by_eig == by_inertia;
    println!(
        "criterion 6e (inertia vs dense eig): {} — {agree}/100 random matrices agree, \
         pencil counts {by_inertia} (inertia) vs {by_eig} (eig)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert_eq!(agree, 100);
    assert_eq!(by_eig, by_inertia);
}

#[test]
fn criterion_6f_manufactured_convergence() {
    // force oracle at 50 random interior points
    let case = ManufacturedCase::new(TABLE_BG.0, TABLE_BG.1, TABLE_BG.2, 10.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut max_rel = 0.0f64;
    for _ in 0..50 {
        let x = Vector3::new(
            rng.gen_range(0.05..0.95),
            rng.gen_range(0.05..0.95),
            rng.gen_range(0.05..0.95),
        );
        let exact = case.body_force(x);
        let fd = case.body_force_fd(x, 1e-4);
        max_rel = max_rel.max((exact - fd).norm() / exact.norm().max(fd.norm()));
    }
    let force_ok = max_rel <= 1e-6;

    // L2 rate on a shear-dominated material (lambda/mu = 100 locks; ledger)
    let rate_case = ManufacturedCase::new(6e3, 6e3, 3e3, 0.0, 1.0);
    let rows = convergence_study(&rate_case, &[4, 8, 16]).unwrap();
    let orders: Vec<f64> = rows.iter().filter_map(|r| r.observed_order).collect();
    let order_ok = !orders.is_empty() && orders.iter().all(|&o| (1.7..=2.3).contains(&o));
    let decreasing = rows.windows(2).all(|w| w[1].l2_error < w[0].l2_error);

    let ok = force_ok && order_ok && decreasing;
    println!(
        "criterion 6f (manufactured solution): {} — FD oracle max rel {max_rel:.2e}, \
         L2 orders {:?} (window [1.7, 2.3]), errors decreasing: {decreasing}",
        if ok { "PASS" } else { "FAIL" },
        orders.iter().map(|o| (o * 1e3).round() / 1e3).collect::<Vec<_>>()
    );
    assert!(force_ok, "FD oracle deviation {max_rel:.3e}");
    assert!(order_ok, "orders {orders:?}");
    assert!(decreasing);
}

#[test]
fn criterion_6g_cavity_filling() {
    // independent component labeling: DFS over false voxels
    fn oracle(mask: &VoxelMask) -> VoxelMask {
        let [nx, ny, nz] = mask.dims;
        let mut out = mask.clone();
        let mut seen = vec![false; nx * ny * nz];
        for start in 0..nx * ny * nz {
            if mask.data[start] || seen[start] {
                continue;
            }
            let mut stack = vec![start];
            let mut component = Vec::new();
            let mut touches = false;
            seen[start] = true;
            while let Some(idx) = stack.pop() {
                component.push(idx);
                let (i, j, k) = (
                    idx % nx,
                    (idx / nx) % ny,
                    idx / (nx * ny),
                );
                if i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1 {
                    touches = true;
                }
                let mut push = |ni: isize, nj: isize, nk: isize| {
                    if ni < 0 || nj < 0 || nk < 0 {
                        return;
                    }
                    let (ni, nj, nk) = (ni as usize, nj as usize, nk as usize);
                    if ni >= nx || nj >= ny || nk >= nz {
                        return;
                    }
                    let nidx = ni + nx * nj + nx * ny * nk;
                    if !mask.data[nidx] && !seen[nidx] {
                        seen[nidx] = true;
                        stack.push(nidx);
                    }
                };
                let (i, j, k) = (i as isize, j as isize, k as isize);
                push(i - 1, j, k);
                push(i + 1, j, k);
                push(i, j - 1, k);
                push(i, j + 1, k);
                push(i, j, k - 1);
                push(i, j, k + 1);
            }
            if !touches {
                for idx in component {
                    out.data[idx] = true;
                }
            }
        }
        out
    }

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut all_match = true;
    let mut all_idempotent = true;
    for trial in 0..50 {
        let mut mask = VoxelMask::new([8, 8, 8]);
        let density = 0.15 + 0.7 * (trial as f64 / 50.0);
        for v in mask.data.iter_mut() {
            *v = rng.gen_bool(density);
        }
        let filled = fill_cavities(&mask);
        all_match &= filled == oracle(&mask);
        all_idempotent &= fill_cavities(&filled) == filled;
        // filling never clears
        assert!(mask
            .data
            .iter()
            .zip(&filled.data)
            .all(|(before, after)| !before || *after));
    }
    let ok = all_match && all_idempotent;
    println!(
        "criterion 6g (cavity filling): {} — 50/50 random masks match the flood-fill oracle, \
         idempotent: {all_idempotent}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(all_match);
    assert!(all_idempotent);
}
