use serde::Serialize;

use super::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellQuality {
    /// Cell diameter `h_K`.
    pub diameter: f64,
    /// Inscribed radius `ρ_K`.
    pub inradius: f64,
    /// Shape ratio `h_K / ρ_K`.
    pub shape_ratio: f64,
    /// Smallest `(h_e / 2) / ρ_K` over the faces of the cell.
    pub min_face_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub cells: Vec<CellQuality>,
    pub max_shape_ratio: f64,
    pub min_face_ratio: f64,
}

/// Shape-regularity diagnostics for every cell.
pub fn quality_metrics(mesh: &Mesh) -> QualityReport {
    let cells: Vec<CellQuality> = (0..mesh.num_cells())
        .map(|c| {
            let g = mesh.geometry(c);
            let min_face_ratio = mesh
                .cell_faces(c)
                .iter()
                .map(|&f| 0.5 * mesh.face(f).length / g.inradius)
                .fold(f64::INFINITY, f64::min);
            CellQuality {
                diameter: g.diameter,
                inradius: g.inradius,
                shape_ratio: g.diameter / g.inradius,
                min_face_ratio,
            }
        })
        .collect();
    let max_shape_ratio = cells.iter().map(|q| q.shape_ratio).fold(0.0, f64::max);
    let min_face_ratio = cells.iter().map(|q| q.min_face_ratio).fold(f64::INFINITY, f64::min);
    QualityReport {
        cells,
        max_shape_ratio,
        min_face_ratio,
    }
}
