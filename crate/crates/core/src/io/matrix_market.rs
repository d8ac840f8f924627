//! Coordinate-format (Matrix Market) export of sparse matrices.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::solvers::CsrMatrix;

pub fn write_matrix_market_to(out: &mut impl Write, a: &CsrMatrix) -> std::io::Result<()> {
    let (r, c) = a.shape();
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{r} {c} {}", a.nnz())?;
    for i in 0..r {
        for (j, v) in a.row(i) {
            writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
        }
    }
    Ok(())
}

pub fn write_matrix_market(path: &Path, a: &CsrMatrix) -> Result<()> {
    let mut w = super::create(path)?;
    write_matrix_market_to(&mut w, a)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
