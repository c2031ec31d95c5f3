//! Constrained least-squares patch reconstruction.
//!
//! For element `K` with patch `S(K)` and collocation points `I_K` (the
//! barycenters of the patch members, `x_K` first), the reconstruction of a
//! value vector `v` is the polynomial `p` of degree `m` minimizing
//! `Σ_{x ∈ I_K} |p(x) − v(x)|²` subject to `p(x_K) = v(x_K)`.
//!
//! Polynomials are expanded in the monomials `((x − x_K)/h_K)^a ((y − y_K)/h_K)^b`.
//! Every non-constant monomial vanishes at `x_K`, so the constraint fixes the
//! constant coefficient and the remaining coefficients solve an unconstrained
//! problem on the other `#S(K) − 1` points. That problem is solved through an
//! SVD pseudo-inverse, which also yields the condition number.
//!
//! Because the fit is linear in `v`, it is stored once per element as a dense
//! `dim P_m × #S(K)` coefficient matrix whose column `j` is the local
//! polynomial of the basis function attached to the `j`-th patch member.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::mesh::Mesh;
use crate::patch::{build_all_patches, default_patch_size, polynomial_dim, ElementPatch};
use crate::quadrature::TriangleRule;
use crate::{Error, Point, Result};

/// Condition number above which a patch is treated as not unisolvent.
pub const UNISOLVENCE_THRESHOLD: f64 = 1e12;

/// Centered and scaled monomials of total degree at most `degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis {
    pub degree: usize,
    pub center: Point,
    pub scale: f64,
    /// Exponents `(a, b)` in graded lexicographic order: `1, x, y, x², xy, y², …`.
    pub exponents: Vec<(usize, usize)>,
}

impl MonomialBasis {
    pub fn new(degree: usize, center: Point, scale: f64) -> Self {
        let mut exponents = Vec::with_capacity(polynomial_dim(degree));
        for t in 0..=degree {
            for a in (0..=t).rev() {
                exponents.push((a, t - a));
            }
        }
        MonomialBasis { degree, center, scale, exponents }
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    fn local(&self, p: Point) -> (f64, f64) {
        ((p[0] - self.center[0]) / self.scale, (p[1] - self.center[1]) / self.scale)
    }

    fn powers(&self, t: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.degree + 1);
        let mut v = 1.0;
        for _ in 0..=self.degree {
            out.push(v);
            v *= t;
        }
        out
    }

    pub fn eval(&self, p: Point) -> Vec<f64> {
        let (xi, eta) = self.local(p);
        let (px, py) = (self.powers(xi), self.powers(eta));
        self.exponents.iter().map(|&(a, b)| px[a] * py[b]).collect()
    }

    /// Values and physical-coordinate gradients of every monomial at `p`.
    pub fn eval_with_gradients(&self, p: Point) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (xi, eta) = self.local(p);
        let (px, py) = (self.powers(xi), self.powers(eta));
        let inv = 1.0 / self.scale;
        let n = self.dim();
        let (mut v, mut gx, mut gy) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for &(a, b) in &self.exponents {
            v.push(px[a] * py[b]);
            gx.push(if a > 0 { a as f64 * px[a - 1] * py[b] * inv } else { 0.0 });
            gy.push(if b > 0 { b as f64 * px[a] * py[b - 1] * inv } else { 0.0 });
        }
        (v, gx, gy)
    }

    /// `Σ c_i φ_i(p)`.
    pub fn eval_poly(&self, coefficients: &[f64], p: Point) -> f64 {
        self.eval(p).iter().zip(coefficients).map(|(a, b)| a * b).sum()
    }
}

/// Outcome of the unisolvence check on one patch.
#[derive(Debug, Clone, PartialEq)]
pub struct UnisolvenceReport {
    pub element: usize,
    pub degree: usize,
    /// Ratio of extreme singular values of the reduced design matrix.
    pub condition: f64,
    /// Why the patch fails, or `None` if it is unisolvent.
    pub failure: Option<String>,
}

impl UnisolvenceReport {
    pub fn is_unisolvent(&self) -> bool {
        self.failure.is_none()
    }

    fn into_result(self) -> Result<Self> {
        match self.failure {
            None => Ok(self),
            Some(reason) => Err(Error::Unisolvence {
                element: self.element,
                degree: self.degree,
                reason,
            }),
        }
    }
}

/// The `(#S − 1) × (dim − 1)` matrix of non-constant monomials at the
/// non-constraint collocation points.
fn reduced_design(points: &[Point], basis: &MonomialBasis) -> DMatrix<f64> {
    let rows = points.len().saturating_sub(1);
    let cols = basis.dim() - 1;
    let mut a = DMatrix::zeros(rows, cols);
    for (i, &p) in points.iter().skip(1).enumerate() {
        let v = basis.eval(p);
        for j in 0..cols {
            a[(i, j)] = v[j + 1];
        }
    }
    a
}

/// SVD pseudo-inverse of the reduced design matrix with its condition report.
fn reduced_pseudo_inverse(
    element: usize,
    points: &[Point],
    basis: &MonomialBasis,
) -> (Option<DMatrix<f64>>, UnisolvenceReport) {
    let dim = basis.dim();
    let mut report = UnisolvenceReport {
        element,
        degree: basis.degree,
        condition: 1.0,
        failure: None,
    };
    if points.len() < dim {
        report.condition = f64::INFINITY;
        report.failure = Some(format!(
            "{} collocation points cannot determine the {dim} coefficients of a degree {} polynomial",
            points.len(),
            basis.degree
        ));
        return (None, report);
    }
    if dim == 1 {
        return (Some(DMatrix::zeros(0, points.len() - 1)), report);
    }
    let a = reduced_design(points, basis);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    report.condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if report.condition > UNISOLVENCE_THRESHOLD {
        report.failure = Some(format!(
            "reduced design matrix is numerically rank deficient (condition {:.3e})",
            report.condition
        ));
        return (None, report);
    }
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let inv_s = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / s));
    (Some(v_t.transpose() * inv_s * u.transpose()), report)
}

/// Condition report for fitting degree `degree` on `patch`. The monomials are
/// scaled by the largest distance from the constraint point to the other
/// collocation points.
pub fn check_unisolvence(patch: &ElementPatch, degree: usize) -> UnisolvenceReport {
    let center = patch.points[0];
    let radius = patch
        .points
        .iter()
        .map(|&p| crate::mesh::distance(p, center))
        .fold(0.0, f64::max);
    let basis = MonomialBasis::new(degree, center, if radius > 0.0 { radius } else { 1.0 });
    reduced_pseudo_inverse(patch.center, &patch.points, &basis).1
}

/// Constrained least-squares fit of `values` (ordered as `patch.points`).
/// The basis must be centered at the constraint point `patch.points[0]`.
pub fn fit_constrained_ls(patch: &ElementPatch, basis: &MonomialBasis, values: &[f64]) -> Result<DVector<f64>> {
    if values.len() != patch.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} collocation values, got {}",
            patch.len(),
            values.len()
        )));
    }
    let (pinv, report) = reduced_pseudo_inverse(patch.center, &patch.points, basis);
    report.into_result()?;
    let pinv = pinv.expect("unisolvent patch has a pseudo-inverse");
    let g0 = values[0];
    let rhs = DVector::from_iterator(values.len() - 1, values[1..].iter().map(|&v| v - g0));
    let reduced = pinv * rhs;
    let mut out = DVector::zeros(basis.dim());
    out[0] = g0;
    out.rows_mut(1, basis.dim() - 1).copy_from(&reduced);
    Ok(out)
}

/// Reconstruction operator of one element.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionBasis {
    pub element: usize,
    /// Patch members; column `j` of `coefficients` belongs to `members[j]`.
    pub members: Vec<usize>,
    pub monomials: MonomialBasis,
    /// `dim P_m × #S(K)`; first row is `e₁ᵀ`.
    pub coefficients: DMatrix<f64>,
    pub condition: f64,
}

impl ReconstructionBasis {
    pub fn degree(&self) -> usize {
        self.monomials.degree
    }

    /// Coefficients with respect to the unscaled monomials
    /// `(x − x_K)^a (y − y_K)^b`.
    pub fn unscaled_coefficients(&self) -> DMatrix<f64> {
        let mut c = self.coefficients.clone();
        for (i, &(a, b)) in self.monomials.exponents.iter().enumerate() {
            let f = self.monomials.scale.powi(-((a + b) as i32));
            c.row_mut(i).scale_mut(f);
        }
        c
    }

    /// Local polynomial coefficients for collocation values in member order.
    pub fn apply(&self, values: &[f64]) -> DVector<f64> {
        &self.coefficients * DVector::from_column_slice(values)
    }

    /// Values and gradients of the member basis functions at `p`, written
    /// into slices of length `#S(K)`.
    pub fn eval_into(&self, p: Point, value: &mut [f64], grad_x: &mut [f64], grad_y: &mut [f64]) {
        let (v, gx, gy) = self.monomials.eval_with_gradients(p);
        let c = &self.coefficients;
        for j in 0..c.ncols() {
            let col = c.column(j);
            let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
            for i in 0..c.nrows() {
                let cij = col[i];
                a += cij * v[i];
                b += cij * gx[i];
                d += cij * gy[i];
            }
            value[j] = a;
            grad_x[j] = b;
            grad_y[j] = d;
        }
    }
}

/// Reconstruction operator of `patch` for degree `degree`, using the cell
/// diameter as monomial scale.
pub fn build_basis_matrix(mesh: &Mesh, patch: &ElementPatch, degree: usize) -> Result<ReconstructionBasis> {
    let k = patch.center;
    let monomials = MonomialBasis::new(degree, mesh.barycenter(k), mesh.geometry(k).diameter);
    let (pinv, report) = reduced_pseudo_inverse(k, &patch.points, &monomials);
    let report = report.into_result()?;
    let pinv = pinv.expect("unisolvent patch has a pseudo-inverse");
    let (dim, ns) = (monomials.dim(), patch.len());
    let mut coefficients = DMatrix::zeros(dim, ns);
    coefficients[(0, 0)] = 1.0;
    for i in 1..dim {
        let row = pinv.row(i - 1);
        coefficients[(i, 0)] = -row.sum();
        for j in 1..ns {
            coefficients[(i, j)] = row[j - 1];
        }
    }
    Ok(ReconstructionBasis {
        element: k,
        members: patch.members.clone(),
        monomials,
        coefficients,
        condition: report.condition,
    })
}

/// Values and gradients of every member basis function at a set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTable {
    /// `#S(K) × #points`.
    pub values: DMatrix<f64>,
    pub grad_x: DMatrix<f64>,
    pub grad_y: DMatrix<f64>,
}

pub fn evaluate_basis(basis: &ReconstructionBasis, points: &[Point]) -> BasisTable {
    let ns = basis.members.len();
    let mut table = BasisTable {
        values: DMatrix::zeros(ns, points.len()),
        grad_x: DMatrix::zeros(ns, points.len()),
        grad_y: DMatrix::zeros(ns, points.len()),
    };
    let (mut v, mut gx, mut gy) = (vec![0.0; ns], vec![0.0; ns], vec![0.0; ns]);
    for (q, &p) in points.iter().enumerate() {
        basis.eval_into(p, &mut v, &mut gx, &mut gy);
        table.values.column_mut(q).copy_from_slice(&v);
        table.grad_x.column_mut(q).copy_from_slice(&gx);
        table.grad_y.column_mut(q).copy_from_slice(&gy);
    }
    table
}

/// Patches and reconstruction operators of every element for one degree.
#[derive(Debug, Clone)]
pub struct ReconstructionSpace {
    pub degree: usize,
    pub threshold: usize,
    pub patches: Vec<ElementPatch>,
    pub bases: Vec<ReconstructionBasis>,
}

impl ReconstructionSpace {
    /// Uses the default patch size for `degree`.
    pub fn new(mesh: &Mesh, degree: usize) -> Result<Self> {
        Self::with_threshold(mesh, degree, default_patch_size(degree)?)
    }

    pub fn with_threshold(mesh: &Mesh, degree: usize, threshold: usize) -> Result<Self> {
        let patches = build_all_patches(mesh, threshold)?;
        let bases = patches
            .par_iter()
            .map(|p| build_basis_matrix(mesh, p, degree))
            .collect::<Result<Vec<_>>>()?;
        Ok(ReconstructionSpace { degree, threshold, patches, bases })
    }

    pub fn num_elements(&self) -> usize {
        self.bases.len()
    }

    /// Reconstructs from one scalar value per element (global element order).
    pub fn reconstruct_values(&self, values: &[f64]) -> PiecewisePolynomial {
        let coefficients = self
            .bases
            .iter()
            .map(|b| {
                let local: Vec<f64> = b.members.iter().map(|&k| values[k]).collect();
                b.apply(&local)
            })
            .collect();
        PiecewisePolynomial {
            monomials: self.bases.iter().map(|b| b.monomials.clone()).collect(),
            coefficients,
        }
    }
}

/// Piecewise polynomial in the local monomial bases of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolynomial {
    pub monomials: Vec<MonomialBasis>,
    pub coefficients: Vec<DVector<f64>>,
}

impl PiecewisePolynomial {
    pub fn eval(&self, element: usize, p: Point) -> f64 {
        self.monomials[element].eval_poly(self.coefficients[element].as_slice(), p)
    }
}

/// `Rg`: samples `g` at the barycenters and reconstructs on every element.
pub fn reconstruct_function<G>(mesh: &Mesh, space: &ReconstructionSpace, g: G) -> PiecewisePolynomial
where
    G: Fn(Point) -> f64,
{
    let values: Vec<f64> = (0..mesh.num_cells()).map(|k| g(mesh.barycenter(k))).collect();
    space.reconstruct_values(&values)
}

/// Sample points covering the cells of `patch`: barycenters, vertices and
/// interior points of each sub-triangle.
fn patch_sample_grid(mesh: &Mesh, patch: &ElementPatch) -> Vec<Point> {
    let rule = TriangleRule::new(6);
    let mut out = patch.points.clone();
    for &k in &patch.members {
        out.extend(mesh.cell_points(k));
        out.extend(rule.on_triangles(&mesh.geometry(k).triangles).into_iter().map(|(p, _)| p));
    }
    out
}

/// Sampled lower bound for `Λ(m, S(K))`, the largest ratio of the max of a
/// degree-`m` polynomial over the patch cells to its max over `I_K`.
///
/// The first sample is the constant polynomial, so the estimate is at least
/// one. Samples are drawn from a fixed stream, so the sample set for `n`
/// is a prefix of the set for any larger `n`.
pub fn estimate_lambda(mesh: &Mesh, patch: &ElementPatch, degree: usize, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples < 100 {
        return Err(Error::InvalidArgument(format!("estimate_lambda needs at least 100 samples, got {n_samples}")));
    }
    let k = patch.center;
    let basis = MonomialBasis::new(degree, mesh.barycenter(k), mesh.geometry(k).diameter);
    let grid: Vec<Vec<f64>> = patch_sample_grid(mesh, patch).iter().map(|&p| basis.eval(p)).collect();
    let nodes: Vec<Vec<f64>> = patch.points.iter().map(|&p| basis.eval(p)).collect();
    let max_abs = |table: &[Vec<f64>], c: &[f64]| {
        table
            .iter()
            .map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(0.0, f64::max)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 1.0;
    for s in 0..n_samples {
        let c: Vec<f64> = if s == 0 {
            let mut c = vec![0.0; basis.dim()];
            c[0] = 1.0;
            c
        } else {
            (0..basis.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let denom = max_abs(&nodes, &c);
        if denom > 0.0 {
            best = best.max(max_abs(&grid, &c) / denom);
        }
    }
    Ok(best)
}
