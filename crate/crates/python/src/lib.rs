//! Python bindings: meshes, patches, reconstruction diagnostics, single
//! solves and convergence studies.

use dlsfem::analysis::{self, ConvergenceConfig, MeshKind};
use dlsfem::elasticity::{Example1Solution, ManufacturedSolution, MaterialParams, PolynomialSolution};
use dlsfem::mesh::{self, BoundaryRule};
use dlsfem::patch::{build_patch, default_patch_size};
use dlsfem::reconstruct::{check_unisolvence, estimate_lambda as lambda_estimate};
use dlsfem::solver::{Preconditioner, SolverOptions};
use dlsfem::{Error, ErrorKind};
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e.kind() {
        ErrorKind::Validation => PyValueError::new_err(e.to_string()),
        ErrorKind::Numerical => PyArithmeticError::new_err(e.to_string()),
        ErrorKind::Io => PyOSError::new_err(e.to_string()),
    }
}

fn preconditioner(name: &str) -> PyResult<Preconditioner> {
    Ok(match name {
        "jacobi" => Preconditioner::Jacobi,
        "block-jacobi" => Preconditioner::BlockJacobi,
        "block-sgs" => Preconditioner::BlockSgs,
        "block-ic0" => Preconditioner::BlockIc0,
        other => return Err(PyValueError::new_err(format!("unknown preconditioner `{other}`"))),
    })
}

fn solver_options(tol: f64, max_iter: Option<usize>, pc: &str) -> PyResult<SolverOptions> {
    Ok(SolverOptions { tol, max_iter, preconditioner: preconditioner(pc)? })
}

/// A polygonal mesh with classified boundary faces.
#[pyclass(frozen)]
struct Mesh(mesh::Mesh);

#[pymethods]
impl Mesh {
    /// Structured `n × n` triangulation of the unit square.
    #[staticmethod]
    #[pyo3(signature = (n, neumann_rule = "x==1"))]
    fn unit_square(n: usize, neumann_rule: &str) -> PyResult<Mesh> {
        let m = mesh::generate_unit_square_triangular(n).map_err(to_py)?;
        Ok(Mesh(m.classify_with_rule(&BoundaryRule::parse(neumann_rule).map_err(to_py)?).map_err(to_py)?))
    }

    /// Clipped Voronoi mesh of `n` random seeds after `lloyd` smoothing steps.
    #[staticmethod]
    #[pyo3(signature = (n, lloyd = 20, seed = 7, neumann_rule = "x==1"))]
    fn voronoi(n: usize, lloyd: usize, seed: u64, neumann_rule: &str) -> PyResult<Mesh> {
        let m = mesh::generate_voronoi_polygonal(n, lloyd, seed).map_err(to_py)?;
        Ok(Mesh(m.classify_with_rule(&BoundaryRule::parse(neumann_rule).map_err(to_py)?).map_err(to_py)?))
    }

    #[staticmethod]
    fn from_polygons(vertices: Vec<[f64; 2]>, cells: Vec<Vec<usize>>) -> PyResult<Mesh> {
        Ok(Mesh(mesh::Mesh::from_polygons(vertices, cells).map_err(to_py)?))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Mesh> {
        Ok(Mesh(mesh::Mesh::from_json(text).map_err(to_py)?))
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(to_py)
    }

    /// A copy whose boundary faces matching `rule` carry traction data.
    fn classify(&self, rule: &str) -> PyResult<Mesh> {
        Ok(Mesh(self.0.classify_with_rule(&BoundaryRule::parse(rule).map_err(to_py)?).map_err(to_py)?))
    }

    #[getter]
    fn num_cells(&self) -> usize {
        self.0.num_cells()
    }

    #[getter]
    fn num_faces(&self) -> usize {
        self.0.num_faces()
    }

    #[getter]
    fn h_max(&self) -> f64 {
        self.0.h_max()
    }

    fn vertices(&self) -> Vec<[f64; 2]> {
        self.0.vertices().to_vec()
    }

    fn cells(&self) -> Vec<Vec<usize>> {
        self.0.cells().to_vec()
    }

    fn areas(&self) -> Vec<f64> {
        (0..self.0.num_cells()).map(|k| self.0.geometry(k).area).collect()
    }

    fn barycenters(&self) -> Vec<[f64; 2]> {
        (0..self.0.num_cells()).map(|k| self.0.barycenter(k)).collect()
    }

    fn neighbors(&self, cell: usize) -> PyResult<Vec<usize>> {
        self.check(cell)?;
        Ok(self.0.neighbors(cell).to_vec())
    }

    fn __repr__(&self) -> String {
        format!("Mesh(cells={}, faces={})", self.0.num_cells(), self.0.num_faces())
    }
}

impl Mesh {
    fn check(&self, cell: usize) -> PyResult<()> {
        match cell < self.0.num_cells() {
            true => Ok(()),
            false => Err(PyValueError::new_err(format!("cell {cell} out of range"))),
        }
    }
}

/// Patch of element `cell` for degree `degree`: members sorted by distance,
/// the number of layers grown, and the condition number of the fit.
#[pyfunction]
fn patch(mesh: &Mesh, cell: usize, degree: usize) -> PyResult<(Vec<usize>, usize, f64)> {
    mesh.check(cell)?;
    let p = build_patch(&mesh.0, cell, default_patch_size(degree).map_err(to_py)?).map_err(to_py)?;
    let condition = check_unisolvence(&p, degree).condition;
    Ok((p.members, p.layers, condition))
}

/// Sampled estimate of the stability constant of the patch of `cell`.
#[pyfunction]
#[pyo3(signature = (mesh, cell, degree, samples = 200, seed = 1))]
fn estimate_lambda(mesh: &Mesh, cell: usize, degree: usize, samples: usize, seed: u64) -> PyResult<f64> {
    mesh.check(cell)?;
    let p = build_patch(&mesh.0, cell, default_patch_size(degree).map_err(to_py)?).map_err(to_py)?;
    lambda_estimate(&mesh.0, &p, degree, samples, seed).map_err(to_py)
}

/// Result of one solve: element unknowns `w[5K + c]` ordered
/// `σ₁₁, σ₁₂, σ₂₂, u₁, u₂`, solver statistics and errors.
#[pyclass(frozen, get_all)]
struct Solution {
    values: Vec<f64>,
    iterations: usize,
    relative_residual: f64,
    method: String,
    jh: f64,
    jh_sqrt: f64,
    l2_sigma: f64,
    l2_u: f64,
    energy_sigma: f64,
    energy_u: f64,
}

#[pymethods]
impl Solution {
    fn __repr__(&self) -> String {
        format!(
            "Solution(dofs={}, iterations={}, jh_sqrt={:e}, l2_sigma={:e}, l2_u={:e})",
            self.values.len(),
            self.iterations,
            self.jh_sqrt,
            self.l2_sigma,
            self.l2_u
        )
    }
}

/// Solves the smooth example (`"example1"`) or the polynomial problem of
/// the same degree (`"polynomial"`) on `mesh`.
#[pyfunction]
#[pyo3(signature = (mesh, degree, lam, mu, problem = "example1", tol = 1e-10, max_iter = None, preconditioner = "block-ic0"))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    mesh: &Mesh,
    degree: usize,
    lam: f64,
    mu: f64,
    problem: &str,
    tol: f64,
    max_iter: Option<usize>,
    preconditioner: &str,
) -> PyResult<Solution> {
    let params = MaterialParams::new(lam, mu).map_err(to_py)?;
    let exact: Box<dyn ManufacturedSolution> = match problem {
        "example1" => Box::new(Example1Solution::new(params)),
        "polynomial" => Box::new(PolynomialSolution::new(degree, params).map_err(to_py)?),
        other => return Err(PyValueError::new_err(format!("unknown problem `{other}`"))),
    };
    let options = solver_options(tol, max_iter, preconditioner)?;
    options.validate().map_err(to_py)?;
    let out = py.detach(|| analysis::solve_problem(&mesh.0, degree, exact.as_ref(), &options)).map_err(to_py)?;
    let e = out.errors;
    Ok(Solution {
        values: out.solution,
        iterations: out.report.iterations,
        relative_residual: out.report.relative_residual,
        method: out.report.method,
        jh: e.jh,
        jh_sqrt: e.jh_sqrt,
        l2_sigma: e.l2_sigma,
        l2_u: e.l2_u,
        energy_sigma: e.energy_sigma,
        energy_u: e.energy_u,
    })
}

#[pyclass(frozen)]
struct ConvergenceReport(analysis::ConvergenceReport);

#[pymethods]
impl ConvergenceReport {
    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(to_py)
    }

    /// `(h, dofs, jh_sqrt, l2_sigma, l2_u)` per level.
    fn levels(&self) -> Vec<(f64, usize, f64, f64, f64)> {
        self.0.levels.iter().map(|l| (l.h, l.dofs, l.jh_sqrt, l.l2_sigma, l.l2_u)).collect()
    }

    /// Observed orders `(J_h^½, ‖σ‖, ‖u‖)` between the two finest levels.
    fn finest_rates(&self) -> (f64, f64, f64) {
        let r = self.0.finest_rates();
        (r.rate_jh, r.rate_l2_sigma, r.rate_l2_u)
    }
}

/// Convergence study of the smooth example. `mesh` is `"tri"` (levels are
/// grid sizes) or `"voronoi"` (levels are cell counts).
#[pyfunction]
#[pyo3(signature = (degree, lam, mu, levels, mesh = "tri", lloyd = 20, seed = 7, tol = 1e-10, preconditioner = "block-ic0"))]
#[allow(clippy::too_many_arguments)]
fn convergence_study(
    py: Python<'_>,
    degree: usize,
    lam: f64,
    mu: f64,
    levels: Vec<usize>,
    mesh: &str,
    lloyd: usize,
    seed: u64,
    tol: f64,
    preconditioner: &str,
) -> PyResult<ConvergenceReport> {
    let mesh = match mesh {
        "tri" => MeshKind::Tri,
        "voronoi" => MeshKind::Voronoi { lloyd, seed },
        other => return Err(PyValueError::new_err(format!("unknown mesh family `{other}`"))),
    };
    let config = ConvergenceConfig { degree, lambda: lam, mu, mesh, levels, solver: solver_options(tol, None, preconditioner)? };
    let report = py.detach(|| analysis::convergence_study(&config)).map_err(to_py)?;
    Ok(ConvergenceReport(report))
}

#[pymodule]
fn pydlsfem(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Mesh>()?;
    m.add_class::<Solution>()?;
    m.add_class::<ConvergenceReport>()?;
    m.add_function(wrap_pyfunction!(patch, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_study, m)?)?;
    Ok(())
}
