//! Two-dimensional polygonal meshes.
//!
//! A [`Mesh`] is built from a vertex list and counterclockwise convex
//! polygons. Construction derives the face list, face adjacency, outward
//! normals, per-cell geometry and a fan sub-triangulation used for
//! quadrature. Meshes are immutable once built; boundary classification
//! returns a new mesh.

mod generate;
mod io;
mod quality;
mod voronoi;

use std::collections::HashMap;

use crate::{Error, Point, Result};

pub use generate::generate_unit_square_triangular;
pub use io::{BoundarySpec, MeshFile};
pub use quality::{quality_metrics, CellQuality, QualityReport};
pub use voronoi::{clipped_voronoi_cells, generate_voronoi_polygonal, voronoi_mesh_from_seeds};

/// Relative tolerance for collinearity and on-boundary tests.
pub(crate) const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }

    pub fn diameter(&self) -> f64 {
        distance(self.min, self.max)
    }

}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceKind {
    Interior,
    Dirichlet,
    Neumann,
}

/// An edge of the mesh.
///
/// `normal` is the unit outward normal of `cells.0`; for interior faces it
/// is the negated outward normal of the second cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Endpoints, in the counterclockwise order of the first adjacent cell.
    pub vertices: [usize; 2],
    pub cells: (usize, Option<usize>),
    pub normal: Point,
    pub length: f64,
    pub midpoint: Point,
    pub kind: FaceKind,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.cells.1.is_none()
    }

    /// The cell across this face from `cell`, if any.
    pub fn neighbor_of(&self, cell: usize) -> Option<usize> {
        match self.cells {
            (a, Some(b)) if a == cell => Some(b),
            (a, Some(b)) if b == cell => Some(a),
            _ => None,
        }
    }

    /// Outward unit normal as seen from `cell`.
    pub fn outward_normal(&self, cell: usize) -> Point {
        if self.cells.0 == cell {
            self.normal
        } else {
            [-self.normal[0], -self.normal[1]]
        }
    }
}

/// Derived per-cell geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGeometry {
    /// Area centroid; used as the collocation point of the element.
    pub barycenter: Point,
    pub area: f64,
    /// Largest vertex-to-vertex distance.
    pub diameter: f64,
    /// Radius of the largest inscribed circle.
    pub inradius: f64,
    /// Fan triangulation from the first vertex, counterclockwise.
    pub triangles: Vec<[Point; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    faces: Vec<Face>,
    cell_faces: Vec<Vec<usize>>,
    cell_neighbors: Vec<Vec<usize>>,
    geometry: Vec<CellGeometry>,
    domain: BoundingBox,
    nominal_h: Option<f64>,
    neumann_rule: Option<BoundaryRule>,
}

impl Mesh {
    /// Builds a mesh from vertices and convex polygons.
    ///
    /// Polygons given clockwise are reoriented. All boundary faces start as
    /// [`FaceKind::Dirichlet`].
    pub fn from_polygons(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Mesh> {
        if cells.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }
        let domain = bounding_box(&vertices)?;
        let scale = domain.diameter();
        let tol = GEOM_TOL * scale;

        let mut cells = cells;
        for (c, cell) in cells.iter_mut().enumerate() {
            if cell.len() < 3 {
                return Err(Error::InvalidMesh(format!("cell {c} has fewer than 3 vertices")));
            }
            if let Some(&v) = cell.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "cell {c} references vertex {v} out of range"
                )));
            }
            let pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
            let area = signed_area(&pts);
            if area.abs() <= tol * tol {
                return Err(Error::InvalidMesh(format!("cell {c} has zero area")));
            }
            if area < 0.0 {
                cell.reverse();
            }
            let pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
            if !is_convex(&pts, tol) {
                return Err(Error::InvalidMesh(format!("cell {c} is not convex")));
            }
        }

        let mut faces: Vec<Face> = Vec::new();
        let mut cell_faces: Vec<Vec<usize>> = Vec::with_capacity(cells.len());
        let mut edge_to_face: HashMap<(usize, usize), usize> = HashMap::new();
        for (c, cell) in cells.iter().enumerate() {
            let mut local = Vec::with_capacity(cell.len());
            for i in 0..cell.len() {
                let a = cell[i];
                let b = cell[(i + 1) % cell.len()];
                if a == b {
                    return Err(Error::InvalidMesh(format!("cell {c} repeats vertex {a}")));
                }
                let key = (a.min(b), a.max(b));
                match edge_to_face.get(&key) {
                    Some(&f) => {
                        let face = &mut faces[f];
                        if face.cells.1.is_some() {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({a}, {b}) is shared by more than two cells"
                            )));
                        }
                        if face.vertices != [b, a] {
                            return Err(Error::InvalidMesh(format!(
                                "cells {} and {c} traverse edge ({a}, {b}) in the same direction",
                                face.cells.0
                            )));
                        }
                        face.cells.1 = Some(c);
                        face.kind = FaceKind::Interior;
                        local.push(f);
                    }
                    None => {
                        let pa = vertices[a];
                        let pb = vertices[b];
                        let length = distance(pa, pb);
                        if length <= tol {
                            return Err(Error::InvalidMesh(format!(
                                "cell {c} has a degenerate edge ({a}, {b})"
                            )));
                        }
                        let normal = [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length];
                        let f = faces.len();
                        faces.push(Face {
                            vertices: [a, b],
                            cells: (c, None),
                            normal,
                            length,
                            midpoint: [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])],
                            kind: FaceKind::Dirichlet,
                        });
                        edge_to_face.insert(key, f);
                        local.push(f);
                    }
                }
            }
            cell_faces.push(local);
        }

        // a conforming mesh has every boundary vertex on exactly two boundary
        // faces; hanging nodes leave unmatched edges meeting at a vertex
        let mut boundary_degree: HashMap<usize, usize> = HashMap::new();
        for face in faces.iter().filter(|f| f.is_boundary()) {
            for v in face.vertices {
                *boundary_degree.entry(v).or_insert(0) += 1;
            }
        }
        let mut odd: Vec<usize> = boundary_degree
            .iter()
            .filter(|&(_, &d)| d != 2)
            .map(|(&v, _)| v)
            .collect();
        if !odd.is_empty() {
            odd.sort();
            return Err(Error::InvalidMesh(format!(
                "non-conforming mesh: boundary edges do not form simple loops at vertex {}",
                odd[0]
            )));
        }

        let geometry: Vec<CellGeometry> = cells
            .iter()
            .map(|cell| cell_geometry(&cell.iter().map(|&v| vertices[v]).collect::<Vec<_>>()))
            .collect();

        let cell_neighbors = cell_faces
            .iter()
            .enumerate()
            .map(|(c, fs)| fs.iter().filter_map(|&f| faces[f].neighbor_of(c)).collect())
            .collect();

        Ok(Mesh {
            vertices,
            cells,
            faces,
            cell_faces,
            cell_neighbors,
            geometry,
            domain,
            nominal_h: None,
            neumann_rule: None,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> &Face {
        &self.faces[f]
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Face ids of `cell`, in counterclockwise edge order.
    pub fn cell_faces(&self, cell: usize) -> &[usize] {
        &self.cell_faces[cell]
    }

    /// Face-adjacent cells of `cell`.
    pub fn neighbors(&self, cell: usize) -> &[usize] {
        &self.cell_neighbors[cell]
    }

    pub fn geometry(&self, cell: usize) -> &CellGeometry {
        &self.geometry[cell]
    }

    pub fn barycenter(&self, cell: usize) -> Point {
        self.geometry[cell].barycenter
    }

    pub fn cell_points(&self, cell: usize) -> Vec<Point> {
        self.cells[cell].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn domain(&self) -> BoundingBox {
        self.domain
    }

    /// Largest cell diameter.
    pub fn h_max(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter).fold(0.0, f64::max)
    }

    /// Grid parameter `1/n` for structured meshes.
    pub fn nominal_h(&self) -> Option<f64> {
        self.nominal_h
    }

    pub(crate) fn with_nominal_h(mut self, h: f64) -> Self {
        self.nominal_h = Some(h);
        self
    }

    /// The textual rule this mesh was classified with, if any.
    pub fn neumann_rule(&self) -> Option<&BoundaryRule> {
        self.neumann_rule.as_ref()
    }

    pub fn count_faces(&self, kind: FaceKind) -> usize {
        self.faces.iter().filter(|f| f.kind == kind).count()
    }

    /// Marks boundary faces whose midpoint satisfies `is_neumann` as Neumann
    /// and all other boundary faces as Dirichlet.
    pub fn classify_boundary<F>(&self, is_neumann: F) -> Result<Mesh>
    where
        F: Fn(Point) -> bool,
    {
        let mut mesh = self.clone();
        for face in mesh.faces.iter_mut().filter(|f| f.is_boundary()) {
            face.kind = if is_neumann(face.midpoint) {
                FaceKind::Neumann
            } else {
                FaceKind::Dirichlet
            };
        }
        if mesh.count_faces(FaceKind::Dirichlet) == 0 {
            return Err(Error::EmptyDirichlet);
        }
        mesh.neumann_rule = None;
        Ok(mesh)
    }

    pub fn classify_with_rule(&self, rule: &BoundaryRule) -> Result<Mesh> {
        let tol = GEOM_TOL * self.domain.diameter();
        let mut mesh = self.classify_boundary(|p| rule.matches(p, tol))?;
        mesh.neumann_rule = Some(rule.clone());
        Ok(mesh)
    }

    /// Marks exactly the listed boundary faces (by endpoint pair) as Neumann.
    pub fn classify_with_faces(&self, neumann: &[[usize; 2]]) -> Result<Mesh> {
        let mut keys = std::collections::HashSet::new();
        for &[a, b] in neumann {
            keys.insert((a.min(b), a.max(b)));
        }
        let mut mesh = self.clone();
        let mut found = 0;
        for face in mesh.faces.iter_mut().filter(|f| f.is_boundary()) {
            let [a, b] = face.vertices;
            if keys.contains(&(a.min(b), a.max(b))) {
                face.kind = FaceKind::Neumann;
                found += 1;
            } else {
                face.kind = FaceKind::Dirichlet;
            }
        }
        if found != keys.len() {
            return Err(Error::InvalidMesh(format!(
                "{} listed Neumann faces are not boundary faces",
                keys.len() - found
            )));
        }
        if mesh.count_faces(FaceKind::Dirichlet) == 0 {
            return Err(Error::EmptyDirichlet);
        }
        mesh.neumann_rule = None;
        Ok(mesh)
    }
}

/// Simple textual boundary predicates: `none`, `all`, `x==c`, `y==c`.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryRule {
    None,
    All,
    XEquals(f64),
    YEquals(f64),
}

impl BoundaryRule {
    pub fn parse(text: &str) -> Result<BoundaryRule> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        match compact.as_str() {
            "none" | "never" => return Ok(BoundaryRule::None),
            "all" | "always" => return Ok(BoundaryRule::All),
            _ => {}
        }
        let parse_value = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad boundary rule `{text}`")))
        };
        if let Some(v) = compact.strip_prefix("x==") {
            Ok(BoundaryRule::XEquals(parse_value(v)?))
        } else if let Some(v) = compact.strip_prefix("y==") {
            Ok(BoundaryRule::YEquals(parse_value(v)?))
        } else {
            Err(Error::InvalidArgument(format!("bad boundary rule `{text}`")))
        }
    }

    pub fn matches(&self, p: Point, tol: f64) -> bool {
        match *self {
            BoundaryRule::None => false,
            BoundaryRule::All => true,
            BoundaryRule::XEquals(x) => (p[0] - x).abs() <= tol,
            BoundaryRule::YEquals(y) => (p[1] - y).abs() <= tol,
        }
    }
}

impl std::fmt::Display for BoundaryRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryRule::None => write!(f, "none"),
            BoundaryRule::All => write!(f, "all"),
            BoundaryRule::XEquals(x) => write!(f, "x=={x}"),
            BoundaryRule::YEquals(y) => write!(f, "y=={y}"),
        }
    }
}

pub(crate) fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn bounding_box(points: &[Point]) -> Result<BoundingBox> {
    if points.is_empty() {
        return Err(Error::InvalidMesh("mesh has no vertices".into()));
    }
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for p in points {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        for k in 0..2 {
            min[k] = min[k].min(p[k]);
            max[k] = max[k].max(p[k]);
        }
    }
    Ok(BoundingBox { min, max })
}

/// Shoelace formula; positive for counterclockwise polygons.
pub(crate) fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    0.5 * (0..n)
        .map(|i| {
            let p = pts[i];
            let q = pts[(i + 1) % n];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

pub(crate) fn polygon_centroid(pts: &[Point]) -> Point {
    let n = pts.len();
    let o = pts[0];
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = [pts[i][0] - o[0], pts[i][1] - o[1]];
        let q = [pts[(i + 1) % n][0] - o[0], pts[(i + 1) % n][1] - o[1]];
        let cross = p[0] * q[1] - q[0] * p[1];
        a += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    [o[0] + cx / (3.0 * a), o[1] + cy / (3.0 * a)]
}

fn is_convex(pts: &[Point], tol: f64) -> bool {
    let n = pts.len();
    (0..n).all(|i| {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        let r = pts[(i + 2) % n];
        let cross = (q[0] - p[0]) * (r[1] - q[1]) - (q[1] - p[1]) * (r[0] - q[0]);
        cross >= -tol * (distance(p, q) + distance(q, r))
    })
}

fn cell_geometry(pts: &[Point]) -> CellGeometry {
    let area = signed_area(pts);
    let barycenter = polygon_centroid(pts);
    let mut diameter: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            diameter = diameter.max(distance(pts[i], pts[j]));
        }
    }
    let triangles = (1..pts.len() - 1).map(|i| [pts[0], pts[i], pts[i + 1]]).collect();
    CellGeometry {
        barycenter,
        area,
        diameter,
        inradius: chebyshev_radius(pts),
        triangles,
    }
}

/// Radius of the largest circle inside a convex polygon.
///
/// The optimal circle touches at least three edge lines (or two parallel
/// ones), so every triple of edges is tried and the largest feasible radius
/// kept.
pub(crate) fn chebyshev_radius(pts: &[Point]) -> f64 {
    let n = pts.len();
    let lines: Vec<(Point, f64)> = (0..n)
        .map(|i| {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            let len = distance(a, b);
            let normal = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
            (normal, normal[0] * a[0] + normal[1] * a[1])
        })
        .collect();
    let scale = pts.iter().map(|&p| distance(p, pts[0])).fold(0.0, f64::max);
    let slack = 1e-10 * scale;
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let rows = [lines[i], lines[j], lines[k]];
                let m = nalgebra::Matrix3::new(
                    rows[0].0[0], rows[0].0[1], 1.0,
                    rows[1].0[0], rows[1].0[1], 1.0,
                    rows[2].0[0], rows[2].0[1], 1.0,
                );
                let rhs = nalgebra::Vector3::new(rows[0].1, rows[1].1, rows[2].1);
                let Some(sol) = m.lu().solve(&rhs) else { continue };
                let (x, r) = ([sol[0], sol[1]], sol[2]);
                if !r.is_finite() || r <= best {
                    continue;
                }
                let feasible = lines
                    .iter()
                    .all(|(nrm, c)| nrm[0] * x[0] + nrm[1] * x[1] + r <= c + slack);
                if feasible {
                    best = r;
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square_cell() -> Mesh {
        Mesh::from_polygons(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn single_square_geometry() {
        let mesh = unit_square_cell();
        let g = mesh.geometry(0);
        assert_relative_eq!(g.area, 1.0);
        assert_relative_eq!(g.barycenter[0], 0.5);
        assert_relative_eq!(g.barycenter[1], 0.5);
        assert_relative_eq!(g.inradius, 0.5, epsilon = 1e-14);
        assert_relative_eq!(g.diameter, 2f64.sqrt());
        assert_eq!(mesh.num_faces(), 4);
        assert_eq!(mesh.count_faces(FaceKind::Dirichlet), 4);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let mesh = Mesh::from_polygons(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![vec![3, 2, 1, 0]],
        )
        .unwrap();
        assert!(signed_area(&mesh.cell_points(0)) > 0.0);
        // outward normal of the bottom edge points down
        let bottom = mesh
            .faces()
            .iter()
            .find(|f| f.midpoint[1] == 0.0)
            .unwrap();
        assert_relative_eq!(bottom.normal[1], -1.0);
    }

    #[test]
    fn rejects_nonconvex_cells() {
        let err = Mesh::from_polygons(
            vec![[0.0, 0.0], [1.0, 0.0], [0.3, 0.3], [0.0, 1.0]],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
    }

    #[test]
    fn rejects_hanging_nodes() {
        // left cell split into two; right cell does not see the middle vertex
        let vertices = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [2.0, 0.0],
            [2.0, 1.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [1.0, 0.5],
            [0.0, 0.5],
        ];
        let cells = vec![vec![0, 1, 6, 7], vec![7, 6, 4, 5], vec![1, 2, 3, 4]];
        let err = Mesh::from_polygons(vertices, cells).unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)), "{err}");
    }

    #[test]
    fn rejects_overlapping_cells() {
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let cells = vec![vec![0, 1, 2], vec![0, 1, 2, 3]];
        assert!(Mesh::from_polygons(vertices, cells).is_err());
    }

    #[test]
    fn boundary_rule_parsing() {
        assert_eq!(BoundaryRule::parse("x == 1").unwrap(), BoundaryRule::XEquals(1.0));
        assert_eq!(BoundaryRule::parse("y==0.5").unwrap(), BoundaryRule::YEquals(0.5));
        assert_eq!(BoundaryRule::parse("never").unwrap(), BoundaryRule::None);
        assert!(BoundaryRule::parse("z==1").is_err());
        let rule = BoundaryRule::XEquals(1.0);
        assert_eq!(BoundaryRule::parse(&rule.to_string()).unwrap(), rule);
    }

    #[test]
    fn chebyshev_radius_of_right_triangle() {
        // inradius of a right triangle with legs a, b: (a + b - c) / 2
        let r = chebyshev_radius(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_relative_eq!(r, (2.0 - 2f64.sqrt()) / 2.0, epsilon = 1e-14);
    }
}
