use super::Mesh;
use crate::{Error, Result};

/// Structured triangulation of the unit square.
///
/// The square is divided into `n × n` squares, each cut along its
/// lower-left to upper-right diagonal. The mesh records `1/n` as its nominal
/// size; the largest cell diameter is `√2/n`.
pub fn generate_unit_square_triangular(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid parameter n must be positive".into()));
    }
    let stride = n + 1;
    let mut vertices = Vec::with_capacity(stride * stride);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = j * stride + i;
            let v10 = v00 + 1;
            let v01 = v00 + stride;
            let v11 = v01 + 1;
            cells.push(vec![v00, v10, v11]);
            cells.push(vec![v00, v11, v01]);
        }
    }
    Ok(Mesh::from_polygons(vertices, cells)?.with_nominal_h(1.0 / n as f64))
}
