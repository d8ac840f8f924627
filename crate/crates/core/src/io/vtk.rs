//! Legacy ASCII VTK unstructured grids with cell-centred vector fields.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::Vec3;

/// VTK cell type of a linear tetrahedron.
pub const VTK_TETRA: u8 = 10;

pub struct CellVectors<'a> {
    pub name: &'a str,
    pub values: &'a [Vec3],
}

/// Writes the mesh with one VECTORS block per field.
pub fn write_vtk_to(out: &mut impl Write, mesh: &Mesh, fields: &[CellVectors<'_>], title: &str) -> std::io::Result<()> {
    let nt = mesh.num_tets();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.num_nodes())?;
    for p in &mesh.nodes {
        writeln!(out, "{:e} {:e} {:e}", p[0], p[1], p[2])?;
    }
    writeln!(out, "CELLS {} {}", nt, 5 * nt)?;
    for t in &mesh.tets {
        writeln!(out, "4 {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "{VTK_TETRA}")?;
    }
    if !fields.is_empty() {
        writeln!(out, "CELL_DATA {nt}")?;
    }
    for f in fields {
        writeln!(out, "VECTORS {} double", f.name)?;
        for v in f.values {
            writeln!(out, "{:e} {:e} {:e}", v[0], v[1], v[2])?;
        }
    }
    Ok(())
}

pub fn write_vtk(path: &Path, mesh: &Mesh, fields: &[CellVectors<'_>], title: &str) -> Result<()> {
    for f in fields {
        if f.values.len() != mesh.num_tets() {
            return Err(Error::InvalidArgument(format!(
                "field `{}` has {} values for {} cells",
                f.name,
                f.values.len(),
                mesh.num_tets()
            )));
        }
        if f.name.is_empty() || f.name.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("bad VTK field name `{}`", f.name)));
        }
    }
    let mut w = super::create(path)?;
    write_vtk_to(&mut w, mesh, fields, title)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_background_mesh, BoxDomain};

    #[test]
    fn single_cube_layout() {
        let m = build_background_mesh(1, BoxDomain::symmetric_unit()).unwrap();
        let vals = vec![Vec3::new(1.0, 2.0, 3.0); 5];
        let mut buf = Vec::new();
        write_vtk_to(&mut buf, &m, &[CellVectors { name: "u", values: &vals }], "cube").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert!(lines.contains(&"POINTS 8 double"));
        assert!(lines.contains(&"CELLS 5 25"));
        assert_eq!(lines.iter().filter(|l| **l == "10").count(), 5);
        assert!(lines.contains(&"VECTORS u double"));
    }

    #[test]
    fn rejects_mismatched_field() {
        let m = build_background_mesh(1, BoxDomain::symmetric_unit()).unwrap();
        let vals = vec![Vec3::zeros(); 3];
        let dir = std::env::temp_dir().join("ife3d-vtk-mismatch.vtk");
        assert!(write_vtk(&dir, &m, &[CellVectors { name: "u", values: &vals }], "x").is_err());
    }
}
