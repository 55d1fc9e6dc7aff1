//! Manufactured-solution convergence study: second-order L2 rates for the
//! trilinear discretization on full-Dirichlet problems.

use elascan::{convergence_study, ManufacturedCase};

fn main() {
    // shear-dominated material; see the verify module docs for the
    // volumetric-locking caveat at large lambda/mu ratios
    let case = ManufacturedCase::new(6e3, 6e3, 3e3, 0.0, 1.0);
    let rows = convergence_study(&case, &[4, 8, 16]).unwrap();
    println!("{:>4} {:>10} {:>14} {:>8}", "n", "h", "L2 error", "order");
    for r in &rows {
        println!(
            "{:>4} {:>10.4} {:>14.6e} {:>8}",
            r.n,
            r.h,
            r.l2_error,
            r.observed_order
                .map(|o| format!("{o:.3}"))
                .unwrap_or_else(|| "-".into())
        );
    }

    println!("\nsame study, background material (lambda/mu = 100, locking regime):");
    let case = ManufacturedCase::new(6e5, 6e3, 3e3, 0.0, 1.0);
    let rows = convergence_study(&case, &[4, 8, 16]).unwrap();
    for r in &rows {
        println!(
            "{:>4} {:>10.4} {:>14.6e} {:>8}",
            r.n,
            r.h,
            r.l2_error,
            r.observed_order
                .map(|o| format!("{o:.3}"))
                .unwrap_or_else(|| "-".into())
        );
    }
}
