//! Error measures and multi-level convergence studies.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_system, evaluate_functional, jump_average_tensor, jump_average_vector, DlsSystem};
use crate::elasticity::{Example1Solution, ManufacturedSolution, MaterialParams};
use crate::fields::{Difference, DiscreteFields, DisplacementField, ExactFields, StressField, COMPONENTS};
use crate::mesh::{generate_unit_square_triangular, generate_voronoi_polygonal, FaceKind, Mesh};
use crate::quadrature::{LineRule, TriangleRule};
use crate::reconstruct::ReconstructionSpace;
use crate::solver::{solve_spd, SolveReport, SolverOptions};
use crate::{Error, Point, Result};

/// Number of unknowns of the discrete system.
pub fn dof_count(mesh: &Mesh) -> usize {
    COMPONENTS * mesh.num_cells()
}

/// Quadrature degree for error measurement at reconstruction degree `m`.
pub fn error_degree(m: usize) -> usize {
    2 * m + 2
}

fn cell_sum<F>(mesh: &Mesh, degree: usize, f: F) -> f64
where
    F: Fn(usize, Point) -> f64 + Sync,
{
    let rule = TriangleRule::new(degree);
    let parts: Vec<f64> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|k| {
            rule.on_triangles(&mesh.geometry(k).triangles)
                .into_iter()
                .map(|(p, w)| w * f(k, p))
                .sum()
        })
        .collect();
    parts.iter().sum()
}

/// `Σ_e (1/h_e) ∫_e f` over the faces selected by `keep`.
fn face_sum<K, F>(mesh: &Mesh, degree: usize, keep: K, f: F) -> f64
where
    K: Fn(FaceKind) -> bool + Sync,
    F: Fn(usize, Point) -> f64 + Sync,
{
    let rule = LineRule::new(degree);
    let parts: Vec<f64> = (0..mesh.num_faces())
        .into_par_iter()
        .filter(|&e| keep(mesh.face(e).kind))
        .map(|e| {
            let face = mesh.face(e);
            let a = mesh.vertices()[face.vertices[0]];
            let b = mesh.vertices()[face.vertices[1]];
            rule.on_segment(a, b).into_iter().map(|(p, w)| w / face.length * f(e, p)).sum()
        })
        .collect();
    parts.iter().sum()
}

/// `‖τ‖_{L²}` with the full Frobenius norm.
pub fn l2_norm_stress<F: StressField>(mesh: &Mesh, tau: &F, degree: usize) -> f64 {
    cell_sum(mesh, degree, |k, p| tau.stress(k, p).norm_sq()).sqrt()
}

pub fn l2_norm_displacement<F: DisplacementField>(mesh: &Mesh, v: &F, degree: usize) -> f64 {
    cell_sum(mesh, degree, |k, p| {
        let u = v.displacement(k, p);
        u[0] * u[0] + u[1] * u[1]
    })
    .sqrt()
}

/// `‖σ − σ_h‖_{L²}`.
pub fn l2_error_stress(mesh: &Mesh, fields: &DiscreteFields, exact: &dyn ManufacturedSolution, degree: usize) -> f64 {
    l2_norm_stress(mesh, &Difference(ExactFields(exact), fields), degree)
}

/// `‖u − u_h‖_{L²}`.
pub fn l2_error_displacement(mesh: &Mesh, fields: &DiscreteFields, exact: &dyn ManufacturedSolution, degree: usize) -> f64 {
    l2_norm_displacement(mesh, &Difference(ExactFields(exact), fields), degree)
}

/// `|||τ|||² = Σ_K (‖τ‖² + ‖∇·τ‖²) + Σ_{interior, Neumann} (1/h_e) ‖[[τ]]‖²`.
pub fn energy_norm_sigma<F: StressField>(mesh: &Mesh, tau: &F, degree: usize) -> f64 {
    let volume = cell_sum(mesh, degree, |k, p| {
        let d = tau.divergence(k, p);
        tau.stress(k, p).norm_sq() + d[0] * d[0] + d[1] * d[1]
    });
    let faces = face_sum(
        mesh,
        degree,
        |kind| kind != FaceKind::Dirichlet,
        |e, p| {
            let face = mesh.face(e);
            let (kp, n) = (face.cells.0, face.normal);
            let minus = face.cells.1.map(|km| tau.stress(km, p)).unwrap_or_default();
            let (_, j) = jump_average_tensor(&tau.stress(kp, p), &minus, n);
            j[0] * j[0] + j[1] * j[1]
        },
    );
    (volume + faces).sqrt()
}

/// `|||v|||² = Σ_K ‖ε(v)‖² + Σ_{interior, Dirichlet} (1/h_e) ‖[[v]]‖²`.
pub fn energy_norm_u<F: DisplacementField>(mesh: &Mesh, v: &F, degree: usize) -> f64 {
    let volume = cell_sum(mesh, degree, |k, p| v.strain(k, p).norm_sq());
    let faces = face_sum(
        mesh,
        degree,
        |kind| kind != FaceKind::Neumann,
        |e, p| {
            let face = mesh.face(e);
            let (kp, n) = (face.cells.0, face.normal);
            let minus = face.cells.1.map(|km| v.displacement(km, p)).unwrap_or_default();
            let (_, j) = jump_average_vector(v.displacement(kp, p), minus, n);
            j.iter().flatten().map(|x| x * x).sum::<f64>()
        },
    );
    (volume + faces).sqrt()
}

/// Errors of one discrete solution against the exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub jh: f64,
    pub jh_sqrt: f64,
    pub l2_sigma: f64,
    pub l2_u: f64,
    pub energy_sigma: f64,
    pub energy_u: f64,
}

pub fn error_summary(
    mesh: &Mesh,
    space: &ReconstructionSpace,
    fields: &DiscreteFields,
    exact: &dyn ManufacturedSolution,
) -> ErrorSummary {
    let q = error_degree(space.degree);
    let jh = evaluate_functional(mesh, space, fields, exact);
    let ds = Difference(ExactFields(exact), fields);
    ErrorSummary {
        jh,
        jh_sqrt: jh.max(0.0).sqrt(),
        l2_sigma: l2_norm_stress(mesh, &ds, q),
        l2_u: l2_norm_displacement(mesh, &ds, q),
        energy_sigma: energy_norm_sigma(mesh, &ds, q),
        energy_u: energy_norm_u(mesh, &ds, q),
    }
}

/// Everything produced by one discrete solve.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub space: ReconstructionSpace,
    pub system: DlsSystem,
    pub solution: Vec<f64>,
    pub report: SolveReport,
    pub fields: DiscreteFields,
    pub errors: ErrorSummary,
}

/// Builds the space, assembles, solves and measures errors on a mesh whose
/// boundary is already classified.
pub fn solve_problem(
    mesh: &Mesh,
    degree: usize,
    exact: &dyn ManufacturedSolution,
    options: &SolverOptions,
) -> Result<SolveOutcome> {
    let space = ReconstructionSpace::new(mesh, degree)?;
    let system = assemble_system(mesh, &space, exact)?;
    let (solution, report) = solve_spd(&system.matrix, &system.rhs, options, None)?;
    let fields = DiscreteFields::from_vector(&space, &solution);
    let errors = error_summary(mesh, &space, &fields, exact);
    Ok(SolveOutcome { space, system, solution, report, fields, errors })
}

/// Mesh family of a convergence study. For Voronoi meshes the level is the
/// number of cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeshKind {
    Tri,
    Voronoi { lloyd: usize, seed: u64 },
}

impl MeshKind {
    pub fn build(&self, level: usize) -> Result<Mesh> {
        match *self {
            MeshKind::Tri => generate_unit_square_triangular(level),
            MeshKind::Voronoi { lloyd, seed } => generate_voronoi_polygonal(level, lloyd, seed),
        }
    }

    /// Nominal mesh size: `1/n` for structured meshes and `#cells^{-1/2}`
    /// for Voronoi meshes.
    pub fn nominal_h(&self, level: usize) -> f64 {
        match self {
            MeshKind::Tri => 1.0 / level as f64,
            MeshKind::Voronoi { .. } => 1.0 / (level as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub degree: usize,
    pub lambda: f64,
    pub mu: f64,
    pub mesh: MeshKind,
    pub levels: Vec<usize>,
    pub solver: SolverOptions,
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.degree) {
            return Err(Error::InvalidArgument(format!(
                "convergence studies support degrees 1 to 4, got {}",
                self.degree
            )));
        }
        MaterialParams::new(self.lambda, self.mu)?;
        self.solver.validate()?;
        if self.levels.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "a convergence study needs at least 3 levels, got {}",
                self.levels.len()
            )));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) || self.levels[0] == 0 {
            return Err(Error::InvalidArgument("levels must be positive and strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: usize,
    pub h: f64,
    pub h_max: f64,
    pub dofs: usize,
    pub cells: usize,
    pub jh_sqrt: f64,
    pub l2_sigma: f64,
    pub l2_u: f64,
    pub energy_sigma: f64,
    pub energy_u: f64,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Observed orders between a level and the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub rate_jh: f64,
    pub rate_l2_sigma: f64,
    pub rate_l2_u: f64,
    pub rate_energy_sigma: f64,
    pub rate_energy_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: ConvergenceConfig,
    pub levels: Vec<LevelResult>,
    /// `rates[i]` compares `levels[i]` with `levels[i + 1]`.
    pub rates: Vec<RateRow>,
}

/// `log(e₁/e₂) / log(h₁/h₂)`.
pub fn observed_rate(e1: f64, e2: f64, h1: f64, h2: f64) -> f64 {
    (e1 / e2).ln() / (h1 / h2).ln()
}

fn rates_between(a: &LevelResult, b: &LevelResult) -> RateRow {
    let r = |x: f64, y: f64| observed_rate(x, y, a.h, b.h);
    RateRow {
        rate_jh: r(a.jh_sqrt, b.jh_sqrt),
        rate_l2_sigma: r(a.l2_sigma, b.l2_sigma),
        rate_l2_u: r(a.l2_u, b.l2_u),
        rate_energy_sigma: r(a.energy_sigma, b.energy_sigma),
        rate_energy_u: r(a.energy_u, b.energy_u),
    }
}

impl ConvergenceReport {
    /// Rates on the two finest levels.
    pub fn finest_rates(&self) -> RateRow {
        *self.rates.last().expect("a report has at least two levels")
    }

    pub const CSV_HEADER: &'static str =
        "level,h,dofs,Jh_sqrt,l2_sigma,l2_u,energy_sigma,energy_u,rate_Jh,rate_l2_sigma,rate_l2_u";

    /// One row per level; rate columns are empty on the first row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", Self::CSV_HEADER).expect("writing to a string");
        for (i, l) in self.levels.iter().enumerate() {
            let rates = match i.checked_sub(1).map(|j| self.rates[j]) {
                Some(r) => format!("{:.4},{:.4},{:.4}", r.rate_jh, r.rate_l2_sigma, r.rate_l2_u),
                None => ",,".to_string(),
            };
            writeln!(
                out,
                "{},{:.6e},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{}",
                l.level, l.h, l.dofs, l.jh_sqrt, l.l2_sigma, l.l2_u, l.energy_sigma, l.energy_u, rates
            )
            .expect("writing to a string");
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_csv())?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }
}

/// Solves the smooth benchmark problem on one level of the configured family.
pub fn run_level(config: &ConvergenceConfig, level: usize) -> Result<LevelResult> {
    let params = MaterialParams::new(config.lambda, config.mu)?;
    let exact = Example1Solution::new(params);
    let mesh = config.mesh.build(level)?.classify_with_rule(&exact.neumann_rule())?;
    let out = solve_problem(&mesh, config.degree, &exact, &config.solver)?;
    Ok(LevelResult {
        level,
        h: config.mesh.nominal_h(level),
        h_max: mesh.h_max(),
        dofs: dof_count(&mesh),
        cells: mesh.num_cells(),
        jh_sqrt: out.errors.jh_sqrt,
        l2_sigma: out.errors.l2_sigma,
        l2_u: out.errors.l2_u,
        energy_sigma: out.errors.energy_sigma,
        energy_u: out.errors.energy_u,
        iterations: out.report.iterations,
        relative_residual: out.report.relative_residual,
    })
}

/// Runs every level in order and computes consecutive rates.
pub fn convergence_study(config: &ConvergenceConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let levels = config
        .levels
        .iter()
        .map(|&l| run_level(config, l))
        .collect::<Result<Vec<_>>>()?;
    let rates = levels.windows(2).map(|w| rates_between(&w[0], &w[1])).collect();
    Ok(ConvergenceReport { config: config.clone(), levels, rates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::interpolate;
    use crate::mesh::BoundaryRule;

    struct Constant(Point);

    impl DisplacementField for Constant {
        fn displacement(&self, _: usize, _: Point) -> Point {
            self.0
        }
        fn gradient(&self, _: usize, _: Point) -> [[f64; 2]; 2] {
            [[0.0; 2]; 2]
        }
    }

    #[test]
    fn dof_counts() {
        assert_eq!(dof_count(&generate_unit_square_triangular(10).unwrap()), 1000);
    }

    #[test]
    fn unit_l2_norm() {
        let mesh = generate_unit_square_triangular(3).unwrap();
        let n = l2_norm_displacement(&mesh, &Constant([1.0, 0.0]), 2);
        assert!((n - 1.0).abs() < 1e-14);
    }

    #[test]
    fn energy_norm_of_constant_counts_dirichlet_faces() {
        let mesh = generate_unit_square_triangular(4)
            .unwrap()
            .classify_with_rule(&BoundaryRule::XEquals(1.0))
            .unwrap();
        let v = [0.6, -1.2];
        let e = energy_norm_u(&mesh, &Constant(v), 2);
        let expected = (v[0] * v[0] + v[1] * v[1]) * mesh.count_faces(FaceKind::Dirichlet) as f64;
        assert!((e * e - expected).abs() < 1e-12 * expected);
        assert_eq!(energy_norm_u(&mesh, &Constant([0.0, 0.0]), 2), 0.0);
    }

    #[test]
    fn interpolated_linear_solution_has_zero_error() {
        let mesh = generate_unit_square_triangular(4)
            .unwrap()
            .classify_with_rule(&BoundaryRule::XEquals(1.0))
            .unwrap();
        let sol = crate::elasticity::PolynomialSolution::new(1, MaterialParams::new(5.0, 1.0).unwrap()).unwrap();
        let space = ReconstructionSpace::new(&mesh, 1).unwrap();
        let fields = DiscreteFields::from_vector(&space, &interpolate(&mesh, &sol));
        let e = error_summary(&mesh, &space, &fields, &sol);
        assert!(e.l2_sigma < 1e-12 && e.l2_u < 1e-12 && e.energy_sigma < 1e-11 && e.energy_u < 1e-11);
    }

    #[test]
    fn rates_and_validation() {
        assert!((observed_rate(4.0, 1.0, 0.2, 0.1) - 2.0).abs() < 1e-15);
        let mut cfg = ConvergenceConfig {
            degree: 2,
            lambda: 5.0,
            mu: 1.0,
            mesh: MeshKind::Tri,
            levels: vec![4, 8],
            solver: SolverOptions::default(),
        };
        assert!(cfg.validate().is_err());
        cfg.levels = vec![4, 8, 8];
        assert!(cfg.validate().is_err());
        cfg.levels = vec![4, 8, 16];
        cfg.degree = 5;
        assert!(cfg.validate().is_err());
    }
}
