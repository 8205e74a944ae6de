//! CSV tables, nodal field dumps and legacy VTK files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use geneo_core::fem::FemProblem;
use serde::Serialize;

use crate::LabError;

fn create(path: &Path) -> Result<BufWriter<File>, LabError> {
    Ok(BufWriter::new(
        File::create(path).map_err(LabError::io(path))?,
    ))
}

pub fn write_records<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), LabError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(LabError::io(path))?;
    Ok(())
}

/// Table with `", "` separators, e.g. `Contrast, 2 EV, 4 EV`.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), LabError> {
    let mut w = create(path)?;
    let io = LabError::io(path);
    let mut body = header.join(", ");
    body.push('\n');
    for r in rows {
        body.push_str(&r.join(", "));
        body.push('\n');
    }
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(io)
}

pub fn format_contrast(c: f64) -> String {
    format!("{c:e}")
}

pub fn format_kappa(k: Option<f64>) -> String {
    match k {
        Some(k) => format!("{k:.2}"),
        None => "nan".into(),
    }
}

/// One `x,y,value` row per dof, in dof order.
pub fn write_field_csv(path: &Path, problem: &FemProblem, values: &[f64]) -> Result<(), LabError> {
    let mut w = create(path)?;
    let mut body = String::from("x,y,value\n");
    for (g, v) in values.iter().enumerate() {
        let (x, y) = problem.dof_coords(g);
        body.push_str(&format!("{x},{y},{v}\n"));
    }
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(LabError::io(path))
}

/// Legacy ASCII structured grid with the field as point data: scalars for
/// Darcy, `(u_x, u_y, 0)` vectors for elasticity.
pub fn write_vtk(
    path: &Path,
    problem: &FemProblem,
    name: &str,
    values: &[f64],
) -> Result<(), LabError> {
    let mesh = &problem.mesh;
    let nodes = mesh.num_nodes();
    let comps = problem.dofs.components();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str(&format!("{name}\nASCII\nDATASET STRUCTURED_GRID\n"));
    s.push_str(&format!("DIMENSIONS {} {} 1\n", mesh.nx + 1, mesh.ny + 1));
    s.push_str(&format!("POINTS {nodes} double\n"));
    for n in 0..nodes {
        let (x, y) = mesh.node_coords(n);
        s.push_str(&format!("{x} {y} 0\n"));
    }
    s.push_str(&format!("POINT_DATA {nodes}\n"));
    if comps == 1 {
        s.push_str(&format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n"));
        for v in values {
            s.push_str(&format!("{v}\n"));
        }
    } else {
        s.push_str(&format!("VECTORS {name} double\n"));
        for n in 0..nodes {
            let ux = values[problem.dofs.dof(n, 0)];
            let uy = values[problem.dofs.dof(n, 1)];
            s.push_str(&format!("{ux} {uy} 0\n"));
        }
    }
    let mut w = create(path)?;
    w.write_all(s.as_bytes())
        .and_then(|_| w.flush())
        .map_err(LabError::io(path))
}
