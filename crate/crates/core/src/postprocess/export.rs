use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{EcmError, Result};
use crate::geometry::{Mesh, Region};
use crate::postprocess::SignatureRecord;

pub const CSV_HEADER: [&str; 6] = ["t", "Q_per_A", "Rz", "Ra", "V_dis", "V_co"];

/// Writes the series in SI units. An empty series gives a header-only file.
pub fn write_csv(path: &Path, records: &[SignatureRecord]) -> Result<()> {
    let err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => EcmError::io(path, io),
        other => EcmError::io(path, std::io::Error::other(format!("{other:?}"))),
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(CSV_HEADER).map_err(err)?;
    for r in records {
        w.write_record([r.t, r.q_per_a, r.rz, r.ra, r.v_dis, r.v_co].map(|x| x.to_string())).map_err(err)?;
    }
    w.flush().map_err(|e| EcmError::io(path, e))
}

/// Nodal and per-cell values for one snapshot.
pub struct VtkFields<'a> {
    pub v: &'a [f64],
    pub theta: &'a [f64],
    /// Mean dissolution level per element.
    pub d: &'a [f64],
}

/// Legacy VTK 3.0 ASCII unstructured grid with hexahedral cells.
pub fn write_vtk(path: &Path, title: &str, mesh: &Mesh, fields: &VtkFields) -> Result<()> {
    let (nn, ne) = (mesh.n_nodes(), mesh.n_elements());
    if fields.v.len() != nn || fields.theta.len() != nn || fields.d.len() != ne {
        return Err(EcmError::InvalidInput("snapshot field lengths do not match the mesh".into()));
    }
    let file = File::create(path).map_err(|e| EcmError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let body = (|| -> std::io::Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "{}", title.lines().next().unwrap_or("ecm"))?;
        writeln!(w, "ASCII\nDATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {nn} double")?;
        for p in &mesh.nodes {
            writeln!(w, "{} {} {}", p[0], p[1], p[2])?;
        }
        writeln!(w, "CELLS {ne} {}", 9 * ne)?;
        for c in &mesh.elements {
            writeln!(w, "8 {} {} {} {} {} {} {} {}", c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7])?;
        }
        writeln!(w, "CELL_TYPES {ne}")?;
        for _ in 0..ne {
            writeln!(w, "12")?;
        }
        writeln!(w, "CELL_DATA {ne}\nSCALARS d double 1\nLOOKUP_TABLE default")?;
        for d in fields.d {
            writeln!(w, "{d}")?;
        }
        writeln!(w, "SCALARS region int 1\nLOOKUP_TABLE default")?;
        for r in &mesh.regions {
            writeln!(w, "{}", (*r == Region::Electrolyte) as u8)?;
        }
        writeln!(w, "POINT_DATA {nn}")?;
        for (name, values) in [("v", fields.v), ("theta", fields.theta)] {
            writeln!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
            for x in values {
                writeln!(w, "{x}")?;
            }
        }
        w.flush()
    })();
    body.map_err(|e| EcmError::io(path, e))
}
