//! Assembly of the discrete least-squares system.
//!
//! The functional is a sum of squared residuals:
//!
//! - on each cell, `‖Aσ − ε(u)‖² + ‖∇·σ + f‖²`;
//! - on each interior face, `(1/h_e)(‖u⁺ − u⁻‖² + ‖σ⁺n − σ⁻n‖²)`;
//! - on each Dirichlet face, `(1/h_e)‖u − g‖²`;
//! - on each Neumann face, `(1/h_e)‖σn − h‖²`.
//!
//! At every quadrature point the residual is affine in the local unknowns,
//! `r = B w − d`. Stacking `√weight · B` over the points of a cell or face
//! gives a matrix `S` with local contribution `SᵀS` to the system matrix,
//! `Sᵀd` to the right-hand side and `|d|²` to `c_data`, so that
//! `J_h(w) = wᵀAw − 2bᵀw + c_data`.
//!
//! `h_e` is the face length, which cancels against the length factor of the
//! face quadrature.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::elasticity::{compliance_apply, ManufacturedSolution, MaterialParams, SymTensor2};
use crate::fields::{DiscreteFields, DisplacementField, StressField, COMPONENTS};
use crate::mesh::{FaceKind, Mesh};
use crate::quadrature::{LineRule, TriangleRule};
use crate::reconstruct::ReconstructionSpace;
use crate::sparse::CsrMatrix;
use crate::{Error, Point, Result};

/// Five consecutive unknowns per element, ordered `σ₁₁, σ₁₂, σ₂₂, u₁, u₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    num_elements: usize,
}

impl DofMap {
    pub const SXX: usize = 0;
    pub const SXY: usize = 1;
    pub const SYY: usize = 2;
    pub const U1: usize = 3;
    pub const U2: usize = 4;

    pub fn new(num_elements: usize) -> Self {
        DofMap { num_elements }
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn len(&self) -> usize {
        COMPONENTS * self.num_elements
    }

    pub fn is_empty(&self) -> bool {
        self.num_elements == 0
    }

    pub fn index(&self, element: usize, component: usize) -> usize {
        debug_assert!(element < self.num_elements && component < COMPONENTS);
        COMPONENTS * element + component
    }

    /// Inverse of [`DofMap::index`].
    pub fn locate(&self, dof: usize) -> (usize, usize) {
        (dof / COMPONENTS, dof % COMPONENTS)
    }
}

/// Average and jump `u⁺⊗n⁺ + u⁻⊗n⁻` of a vector across a face with `n⁻ = −n⁺`.
pub fn jump_average_vector(up: Point, um: Point, np: Point) -> (Point, [[f64; 2]; 2]) {
    let avg = [0.5 * (up[0] + um[0]), 0.5 * (up[1] + um[1])];
    let d = [up[0] - um[0], up[1] - um[1]];
    (avg, [[d[0] * np[0], d[0] * np[1]], [d[1] * np[0], d[1] * np[1]]])
}

/// Average and jump `u⊗n` of a vector on a boundary face.
pub fn jump_average_vector_boundary(u: Point, n: Point) -> (Point, [[f64; 2]; 2]) {
    (u, [[u[0] * n[0], u[0] * n[1]], [u[1] * n[0], u[1] * n[1]]])
}

/// Average and jump `σ⁺n⁺ + σ⁻n⁻` of a symmetric tensor across a face.
pub fn jump_average_tensor(sp: &SymTensor2, sm: &SymTensor2, np: Point) -> (SymTensor2, Point) {
    let avg = 0.5 * (*sp + *sm);
    let (a, b) = (sp.dot_vec(np), sm.dot_vec(np));
    (avg, [a[0] - b[0], a[1] - b[1]])
}

/// Average and jump `σn` of a tensor on a boundary face.
pub fn jump_average_tensor_boundary(s: &SymTensor2, n: Point) -> (SymTensor2, Point) {
    (*s, s.dot_vec(n))
}

/// Quadrature degrees used for degree-`m` assembly: `(volume, face)`.
pub fn assembly_degrees(m: usize) -> (usize, usize) {
    (2 * m, 2 * m + 1)
}

/// The assembled system `A w = b` together with `c_data = J_h(0)`.
#[derive(Debug, Clone)]
pub struct DlsSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
    pub c_data: f64,
}

impl DlsSystem {
    /// `wᵀAw − 2bᵀw + c_data`.
    pub fn functional_from_form(&self, w: &[f64]) -> f64 {
        self.matrix.quad_form(w) - 2.0 * crate::sparse::dot(&self.rhs, w) + self.c_data
    }
}

#[derive(Debug, Clone, Copy)]
enum Item {
    Cell(usize),
    Face(usize),
}

struct Local {
    elements: Vec<usize>,
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
    c: f64,
}

/// Element lists coupled by one integration item.
fn item_elements(mesh: &Mesh, space: &ReconstructionSpace, item: Item) -> Vec<usize> {
    match item {
        Item::Cell(k) => space.bases[k].members.clone(),
        Item::Face(f) => {
            let face = mesh.face(f);
            let mut list = space.bases[face.cells.0].members.clone();
            if let Some(k) = face.cells.1 {
                for &e in &space.bases[k].members {
                    if !list.contains(&e) {
                        list.push(e);
                    }
                }
            }
            list
        }
    }
}

struct Rows {
    /// `nrows × ncols`, row-major per point block.
    s: Vec<f64>,
    d: Vec<f64>,
    ncols: usize,
}

impl Rows {
    fn new(ncols: usize) -> Self {
        Rows { s: Vec::new(), d: Vec::new(), ncols }
    }

    fn push(&mut self, data: f64) -> usize {
        self.s.extend(std::iter::repeat_n(0.0, self.ncols));
        self.d.push(data);
        self.d.len() - 1
    }

    fn set(&mut self, row: usize, col: usize, v: f64) {
        self.s[row * self.ncols + col] += v;
    }

    fn finish(self, elements: Vec<usize>) -> Local {
        let nrows = self.d.len();
        let s = DMatrix::from_row_slice(nrows, self.ncols, &self.s);
        let d = DVector::from_vec(self.d);
        let m = s.tr_mul(&s);
        let matrix = 0.5 * (&m + m.transpose());
        Local { elements, rhs: s.tr_mul(&d), c: d.norm_squared(), matrix }
    }
}

fn local_contribution(
    mesh: &Mesh,
    space: &ReconstructionSpace,
    data: &dyn ManufacturedSolution,
    params: &MaterialParams,
    rules: &(TriangleRule, LineRule),
    item: Item,
) -> Local {
    let elements = item_elements(mesh, space, item);
    let mut rows = Rows::new(COMPONENTS * elements.len());
    let col = |local: usize, c: usize| COMPONENTS * local + c;
    match item {
        Item::Cell(k) => {
            let basis = &space.bases[k];
            let ns = basis.members.len();
            let (mut v, mut gx, mut gy) = (vec![0.0; ns], vec![0.0; ns], vec![0.0; ns]);
            let kappa = params.trace_factor();
            let s = 0.5 / params.mu;
            let (a_diag, a_off) = ((1.0 - kappa) * s, -kappa * s);
            for (p, w) in rules.0.on_triangles(&mesh.geometry(k).triangles) {
                let sw = w.sqrt();
                basis.eval_into(p, &mut v, &mut gx, &mut gy);
                let f = data.body_force(p);
                let r = [
                    rows.push(0.0),
                    rows.push(0.0),
                    rows.push(0.0),
                    rows.push(-sw * f[0]),
                    rows.push(-sw * f[1]),
                ];
                for j in 0..ns {
                    let (phi, dx, dy) = (sw * v[j], sw * gx[j], sw * gy[j]);
                    rows.set(r[0], col(j, DofMap::SXX), a_diag * phi);
                    rows.set(r[0], col(j, DofMap::SYY), a_off * phi);
                    rows.set(r[0], col(j, DofMap::U1), -dx);
                    rows.set(r[1], col(j, DofMap::SXY), SQRT_2 * s * phi);
                    rows.set(r[1], col(j, DofMap::U1), -0.5 * SQRT_2 * dy);
                    rows.set(r[1], col(j, DofMap::U2), -0.5 * SQRT_2 * dx);
                    rows.set(r[2], col(j, DofMap::SXX), a_off * phi);
                    rows.set(r[2], col(j, DofMap::SYY), a_diag * phi);
                    rows.set(r[2], col(j, DofMap::U2), -dy);
                    rows.set(r[3], col(j, DofMap::SXX), dx);
                    rows.set(r[3], col(j, DofMap::SXY), dy);
                    rows.set(r[4], col(j, DofMap::SXY), dx);
                    rows.set(r[4], col(j, DofMap::SYY), dy);
                }
            }
        }
        Item::Face(f) => {
            let face = mesh.face(f);
            let n = face.normal;
            let a = mesh.vertices()[face.vertices[0]];
            let b = mesh.vertices()[face.vertices[1]];
            let points: Vec<(Point, f64)> = rules
                .1
                .points
                .iter()
                .zip(&rules.1.weights)
                .map(|(&t, &w)| ([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], w))
                .collect();
            let sides: Vec<(usize, f64)> = match face.cells {
                (kp, Some(km)) => vec![(kp, 1.0), (km, -1.0)],
                (kp, None) => vec![(kp, 1.0)],
            };
            let with_u = face.kind != FaceKind::Neumann;
            let with_sigma = face.kind != FaceKind::Dirichlet;
            for (p, w) in points {
                let sw = w.sqrt();
                let (du, ds) = match face.kind {
                    FaceKind::Interior => ([0.0; 2], [0.0; 2]),
                    FaceKind::Dirichlet => (data.dirichlet_data(p), [0.0; 2]),
                    FaceKind::Neumann => ([0.0; 2], data.neumann_data(p, n)),
                };
                let ru = with_u.then(|| [rows.push(sw * du[0]), rows.push(sw * du[1])]);
                let rs = with_sigma.then(|| [rows.push(sw * ds[0]), rows.push(sw * ds[1])]);
                for &(k, sign) in &sides {
                    let basis = &space.bases[k];
                    let ns = basis.members.len();
                    let (mut v, mut gx, mut gy) = (vec![0.0; ns], vec![0.0; ns], vec![0.0; ns]);
                    basis.eval_into(p, &mut v, &mut gx, &mut gy);
                    for (j, &e) in basis.members.iter().enumerate() {
                        let l = elements.iter().position(|&x| x == e).expect("member is in the item list");
                        let phi = sign * sw * v[j];
                        if let Some(ru) = ru {
                            rows.set(ru[0], col(l, DofMap::U1), phi);
                            rows.set(ru[1], col(l, DofMap::U2), phi);
                        }
                        if let Some(rs) = rs {
                            rows.set(rs[0], col(l, DofMap::SXX), phi * n[0]);
                            rows.set(rs[0], col(l, DofMap::SXY), phi * n[1]);
                            rows.set(rs[1], col(l, DofMap::SXY), phi * n[0]);
                            rows.set(rs[1], col(l, DofMap::SYY), phi * n[1]);
                        }
                    }
                }
            }
        }
    }
    rows.finish(elements)
}

/// Sorted element-level sparsity rows: `a` couples with `b` whenever both
/// appear in the element list of one cell or face.
fn element_pattern(mesh: &Mesh, space: &ReconstructionSpace) -> Vec<Vec<u32>> {
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); mesh.num_cells()];
    let items = (0..mesh.num_cells())
        .map(Item::Cell)
        .chain((0..mesh.num_faces()).filter(|&f| !mesh.face(f).is_boundary()).map(Item::Face));
    for item in items {
        let list = item_elements(mesh, space, item);
        for &a in &list {
            rows[a].extend(list.iter().map(|&b| b as u32));
        }
    }
    rows.par_iter_mut().for_each(|r| {
        r.sort_unstable();
        r.dedup();
    });
    rows
}

fn scalar_structure(pattern: &[Vec<u32>]) -> (Vec<usize>, Vec<u32>) {
    let mut row_ptr = Vec::with_capacity(COMPONENTS * pattern.len() + 1);
    row_ptr.push(0);
    let total: usize = pattern.iter().map(|r| COMPONENTS * COMPONENTS * r.len()).sum();
    let mut col_idx = Vec::with_capacity(total);
    for row in pattern {
        for _ in 0..COMPONENTS {
            for &b in row {
                for c in 0..COMPONENTS as u32 {
                    col_idx.push(COMPONENTS as u32 * b + c);
                }
            }
            row_ptr.push(col_idx.len());
        }
    }
    (row_ptr, col_idx)
}

/// Assembles the system for the exact data of `data` on the boundary
/// classification stored in `mesh`.
pub fn assemble_system(mesh: &Mesh, space: &ReconstructionSpace, data: &dyn ManufacturedSolution) -> Result<DlsSystem> {
    if space.num_elements() != mesh.num_cells() {
        return Err(Error::InvalidArgument("reconstruction space does not match the mesh".into()));
    }
    if mesh.count_faces(FaceKind::Dirichlet) == 0 {
        return Err(Error::EmptyDirichlet);
    }
    let n = COMPONENTS * mesh.num_cells();
    if n > u32::MAX as usize {
        return Err(Error::InvalidArgument("too many unknowns for 32-bit column indices".into()));
    }
    let params = data.params();
    let (qv, qf) = assembly_degrees(space.degree);
    let rules = (TriangleRule::new(qv), LineRule::new(qf));

    let pattern = element_pattern(mesh, space);
    let (row_ptr, col_idx) = scalar_structure(&pattern);
    let nnz = col_idx.len();
    let mut matrix = CsrMatrix::from_parts(n, n, row_ptr, col_idx, vec![0.0; nnz])?;
    let mut rhs = vec![0.0; n];
    let mut c_data = 0.0;

    let items: Vec<Item> = (0..mesh.num_cells()).map(Item::Cell).chain((0..mesh.num_faces()).map(Item::Face)).collect();
    for chunk in items.chunks(256) {
        let locals: Vec<Local> = chunk
            .par_iter()
            .map(|&item| local_contribution(mesh, space, data, &params, &rules, item))
            .collect();
        for local in locals {
            scatter(&mut matrix, &mut rhs, &pattern, &local);
            c_data += local.c;
        }
    }
    Ok(DlsSystem { matrix, rhs, dofs: DofMap::new(mesh.num_cells()), c_data })
}

fn scatter(matrix: &mut CsrMatrix, rhs: &mut [f64], pattern: &[Vec<u32>], local: &Local) {
    let (row_ptr, values) = matrix.structure_and_values_mut();
    for (ia, &ea) in local.elements.iter().enumerate() {
        let prow = &pattern[ea];
        for ca in 0..COMPONENTS {
            rhs[COMPONENTS * ea + ca] += local.rhs[COMPONENTS * ia + ca];
        }
        for (ib, &eb) in local.elements.iter().enumerate() {
            let pos = prow.binary_search(&(eb as u32)).expect("coupling is in the sparsity pattern");
            for ca in 0..COMPONENTS {
                let base = row_ptr[COMPONENTS * ea + ca] + COMPONENTS * pos;
                for cb in 0..COMPONENTS {
                    values[base + cb] += local.matrix[(COMPONENTS * ia + ca, COMPONENTS * ib + cb)];
                }
            }
        }
    }
}

/// `J_h` of the discrete fields, evaluated pointwise from the fields
/// themselves rather than from the assembled matrix.
pub fn evaluate_functional(
    mesh: &Mesh,
    space: &ReconstructionSpace,
    fields: &DiscreteFields,
    data: &dyn ManufacturedSolution,
) -> f64 {
    let params = data.params();
    let (qv, qf) = assembly_degrees(space.degree);
    let tri = TriangleRule::new(qv);
    let line = LineRule::new(qf);
    let cells: f64 = (0..mesh.num_cells())
        .into_par_iter()
        .map(|k| {
            tri.on_triangles(&mesh.geometry(k).triangles)
                .into_iter()
                .map(|(p, w)| {
                    let r = compliance_apply(&fields.stress(k, p), &params) - fields.strain(k, p);
                    let div = fields.divergence(k, p);
                    let f = data.body_force(p);
                    w * (r.norm_sq() + (div[0] + f[0]).powi(2) + (div[1] + f[1]).powi(2))
                })
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let faces: f64 = (0..mesh.num_faces())
        .into_par_iter()
        .map(|fi| {
            let face = mesh.face(fi);
            let a = mesh.vertices()[face.vertices[0]];
            let b = mesh.vertices()[face.vertices[1]];
            let n = face.normal;
            let kp = face.cells.0;
            line.on_segment(a, b)
                .into_iter()
                .map(|(p, w)| {
                    let w = w / face.length;
                    let sq = |v: Point| v[0] * v[0] + v[1] * v[1];
                    w * match face.cells.1 {
                        Some(km) => {
                            let (_, ju) = jump_average_vector(fields.displacement(kp, p), fields.displacement(km, p), n);
                            let (_, js) = jump_average_tensor(&fields.stress(kp, p), &fields.stress(km, p), n);
                            ju.iter().flatten().map(|x| x * x).sum::<f64>() + sq(js)
                        }
                        None if face.kind == FaceKind::Dirichlet => {
                            let u = fields.displacement(kp, p);
                            let g = data.dirichlet_data(p);
                            sq([u[0] - g[0], u[1] - g[1]])
                        }
                        None => {
                            let (_, js) = jump_average_tensor_boundary(&fields.stress(kp, p), n);
                            let h = data.neumann_data(p, n);
                            sq([js[0] - h[0], js[1] - h[1]])
                        }
                    }
                })
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    cells + faces
}
