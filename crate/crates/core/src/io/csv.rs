//! CSV tables: header row, `.` decimals, LF line endings.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub fn write_csv_to<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(r) = rows.iter().find(|r| r.len() != header.len()) {
        return Err(Error::InvalidArgument(format!(
            "row with {} fields for a {}-column header",
            r.len(),
            header.len()
        )));
    }
    let w = super::create(path)?;
    write_csv_to(w, header, rows).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Internal(format!("csv: {other:?}")),
    })
}
