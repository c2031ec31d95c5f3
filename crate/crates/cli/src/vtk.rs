use std::fmt::Write as _;

use dlsfem::fields::COMPONENTS;
use dlsfem::mesh::Mesh;

/// Legacy ASCII VTK with one polygon per cell and the element unknowns
/// (barycenter values) as cell data.
pub fn cell_data_vtk(mesh: &Mesh, w: &[f64]) -> String {
    let mut s = String::new();
    let n = mesh.num_cells();
    s.push_str("# vtk DataFile Version 3.0\ndlsfem solution\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.vertices().len());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:e} {:e} 0", v[0], v[1]);
    }
    let size: usize = mesh.cells().iter().map(|c| c.len() + 1).sum();
    let _ = writeln!(s, "CELLS {n} {size}");
    for c in mesh.cells() {
        let ids: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{} {}", c.len(), ids.join(" "));
    }
    let _ = writeln!(s, "CELL_TYPES {n}");
    for _ in 0..n {
        s.push_str("7\n");
    }
    let _ = writeln!(s, "CELL_DATA {n}");
    for (c, name) in ["sigma_xx", "sigma_xy", "sigma_yy"].iter().enumerate() {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for k in 0..n {
            let _ = writeln!(s, "{:e}", w[COMPONENTS * k + c]);
        }
    }
    s.push_str("VECTORS displacement double\n");
    for k in 0..n {
        let _ = writeln!(s, "{:e} {:e} 0", w[COMPONENTS * k + 3], w[COMPONENTS * k + 4]);
    }
    s
}
