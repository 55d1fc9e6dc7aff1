//! File outputs: legacy-VTK structured points, eigencount and NtD CSVs,
//! Matrix Market matrix dumps, and convergence reports.
//!
//! All floating-point output is written with 17 significant digits so files
//! round-trip bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;

use crate::mesh::Mesh;
use crate::monotonicity::SweepResult;
use crate::ntd::NtDMatrix;
use crate::reconstruct::VoxelMask;
use crate::verify::ConvergenceRow;

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Legacy-VTK structured points file with one vector field on the node
/// lattice (used for displacement exports).
pub fn write_vtk_displacement(
    path: &Path,
    mesh: &Mesh,
    u_full: &DVector<f64>,
    field_name: &str,
) -> io::Result<()> {
    let hdr = mesh.vtk_structured_points_header();
    let [nx, ny, nz] = hdr.dimensions;
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("displacement field\n");
    s.push_str("ASCII\n");
    s.push_str("DATASET STRUCTURED_POINTS\n");
    let _ = writeln!(s, "DIMENSIONS {nx} {ny} {nz}");
    let _ = writeln!(
        s,
        "ORIGIN {} {} {}",
        fmt_f64(hdr.origin[0]),
        fmt_f64(hdr.origin[1]),
        fmt_f64(hdr.origin[2])
    );
    let _ = writeln!(
        s,
        "SPACING {} {} {}",
        fmt_f64(hdr.spacing[0]),
        fmt_f64(hdr.spacing[1]),
        fmt_f64(hdr.spacing[2])
    );
    let _ = writeln!(s, "POINT_DATA {}", nx * ny * nz);
    let _ = writeln!(s, "VECTORS {field_name} double");
    // VTK structured points iterate x fastest, matching the node numbering
    for node in 0..nx * ny * nz {
        let _ = writeln!(
            s,
            "{} {} {}",
            fmt_f64(u_full[3 * node]),
            fmt_f64(u_full[3 * node + 1]),
            fmt_f64(u_full[3 * node + 2])
        );
    }
    fs::write(path, s)
}

/// Legacy-VTK structured points file with a 0/1 scalar per cover block
/// (used for reconstruction masks).
pub fn write_vtk_mask(path: &Path, mask: &VoxelMask, spacing: f64) -> io::Result<()> {
    let [nx, ny, nz] = mask.dims;
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("reconstructed outer support\n");
    s.push_str("ASCII\n");
    s.push_str("DATASET STRUCTURED_POINTS\n");
    // point dims are cell dims + 1 so the mask renders as cell data
    let _ = writeln!(s, "DIMENSIONS {} {} {}", nx + 1, ny + 1, nz + 1);
    s.push_str("ORIGIN 0 0 0\n");
    let _ = writeln!(
        s,
        "SPACING {} {} {}",
        fmt_f64(spacing),
        fmt_f64(spacing),
        fmt_f64(spacing)
    );
    let _ = writeln!(s, "CELL_DATA {}", nx * ny * nz);
    s.push_str("SCALARS mask int 1\n");
    s.push_str("LOOKUP_TABLE default\n");
    for &v in &mask.data {
        let _ = writeln!(s, "{}", v as u8);
    }
    fs::write(path, s)
}

/// Eigencount CSV: one row per cover block in block-index order. Invalid
/// blocks carry an empty count and the error text.
pub fn write_eigencount_csv(path: &Path, sweep: &SweepResult) -> io::Result<()> {
    let mut s = String::from("block_index,i,j,k,n_negative,verdict\n");
    for r in &sweep.results {
        match r {
            crate::monotonicity::BlockResult::Verdict(v) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    v.block_index,
                    v.coords[0],
                    v.coords[1],
                    v.coords[2],
                    v.n_negative,
                    if v.inside { "inside" } else { "outside" }
                );
            }
            crate::monotonicity::BlockResult::Invalid(inv) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},,invalid: {}",
                    inv.block_index,
                    inv.coords[0],
                    inv.coords[1],
                    inv.coords[2],
                    inv.reason.replace(',', ";")
                );
            }
        }
    }
    fs::write(path, s)
}

/// Block list CSV for a reconstruction mask.
pub fn write_mask_csv(path: &Path, mask: &VoxelMask) -> io::Result<()> {
    let mut s = String::from("i,j,k,inside\n");
    let [nx, ny, nz] = mask.dims;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let _ = writeln!(s, "{i},{j},{k},{}", mask.get(i, j, k) as u8);
            }
        }
    }
    fs::write(path, s)
}

/// NtD matrix as row-major CSV with 17 significant digits, plus a JSON
/// sidecar with frequency, size, and provenance fingerprints.
pub fn write_ntd_csv(path: &Path, ntd: &NtDMatrix) -> io::Result<()> {
    let m = ntd.m();
    let mut s = String::new();
    for i in 0..m {
        let row: Vec<String> = (0..m).map(|j| fmt_f64(ntd.entries[(i, j)])).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    fs::write(path, s)?;

    let sidecar = serde_json::json!({
        "omega": ntd.omega,
        "m": m,
        "field_fingerprint": format!("{:016x}", ntd.field_fingerprint),
        "loadset_fingerprint": format!("{:016x}", ntd.loadset_fingerprint),
        "raw_asymmetry": ntd.raw_asymmetry,
    });
    let meta_path = path.with_extension("meta.json");
    fs::write(meta_path, serde_json::to_string_pretty(&sidecar)?)
}

/// Read an NtD CSV back into a dense matrix.
pub fn read_ntd_csv(path: &Path) -> io::Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
        })
        .collect::<io::Result<_>>()?;
    let m = rows.len();
    let mut out = DMatrix::zeros(m, m);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != m {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("row {i} has {} entries, expected {m}", row.len()),
            ));
        }
        for (j, &v) in row.iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Matrix Market coordinate export (symmetric, lower triangle, 1-based).
pub fn write_matrix_market(path: &Path, a: &CsrMatrix<f64>, comment: &str) -> io::Result<()> {
    let mut s = String::new();
    s.push_str("%%MatrixMarket matrix coordinate real symmetric\n");
    for line in comment.lines() {
        let _ = writeln!(s, "% {line}");
    }
    let lower: Vec<(usize, usize, f64)> = a
        .triplet_iter()
        .filter(|&(i, j, _)| j <= i)
        .map(|(i, j, &v)| (i, j, v))
        .collect();
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), lower.len());
    for (i, j, v) in lower {
        let _ = writeln!(s, "{} {} {}", i + 1, j + 1, fmt_f64(v));
    }
    fs::write(path, s)
}

/// Convergence report CSV.
pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> io::Result<()> {
    let mut s = String::from("n,h,l2_error,observed_order\n");
    for r in rows {
        let order = r
            .observed_order
            .map(|o| fmt_f64(o))
            .unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{}", r.n, fmt_f64(r.h), fmt_f64(r.l2_error), order);
    }
    fs::write(path, s)
}
