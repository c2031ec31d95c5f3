use dlsfem::analysis::*;
use dlsfem::assembly::*;
use dlsfem::elasticity::*;
use dlsfem::fields::{interpolate, DiscreteFields};
use dlsfem::mesh::{generate_unit_square_triangular, BoundaryRule, Mesh};
use dlsfem::reconstruct::{reconstruct_function, ReconstructionSpace};
use dlsfem::solver::{solve_spd, SolverOptions};
use dlsfem::sparse::norm;
use dlsfem::{Error, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params() -> MaterialParams {
    MaterialParams::new(5.0, 1.0).unwrap()
}

fn example_mesh(n: usize) -> Mesh {
    generate_unit_square_triangular(n).unwrap().classify_with_rule(&BoundaryRule::XEquals(1.0)).unwrap()
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// All data of `inner` multiplied by `alpha`.
struct Scaled<S> {
    inner: S,
    alpha: f64,
}

impl<S: ManufacturedSolution> ManufacturedSolution for Scaled<S> {
    fn params(&self) -> MaterialParams {
        self.inner.params()
    }
    fn displacement(&self, p: Point) -> Point {
        let u = self.inner.displacement(p);
        [self.alpha * u[0], self.alpha * u[1]]
    }
    fn displacement_gradient(&self, p: Point) -> [[f64; 2]; 2] {
        let g = self.inner.displacement_gradient(p);
        g.map(|r| r.map(|v| self.alpha * v))
    }
    fn body_force(&self, p: Point) -> Point {
        let f = self.inner.body_force(p);
        [self.alpha * f[0], self.alpha * f[1]]
    }
}

#[test]
fn assembled_matrix_is_symmetric() {
    let mesh = example_mesh(4);
    let data = Example1Solution::new(params());
    for m in 1..=3 {
        let space = ReconstructionSpace::new(&mesh, m).unwrap();
        let sys = assemble_system(&mesh, &space, &data).unwrap();
        assert_eq!(sys.matrix.nrows(), 5 * mesh.num_cells());
        let (_, _, defect) = sys.matrix.symmetry_defect();
        assert!(defect <= 1e-12 * sys.matrix.max_abs());
    }
}

#[test]
fn quadratic_form_is_positive_and_matches_functional() {
    let mesh = example_mesh(4);
    let data = Example1Solution::new(params());
    let space = ReconstructionSpace::new(&mesh, 2).unwrap();
    let sys = assemble_system(&mesh, &space, &data).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let w = random_vector(&mut rng, sys.dofs.len());
        assert!(sys.matrix.quad_form(&w) > 0.0);
        let fields = DiscreteFields::from_vector(&space, &w);
        let direct = evaluate_functional(&mesh, &space, &fields, &data);
        let form = sys.functional_from_form(&w);
        assert!((direct - form).abs() <= 1e-10 * direct, "{direct} vs {form}");
    }
    assert_eq!(sys.matrix.quad_form(&vec![0.0; sys.dofs.len()]), 0.0);
}

#[test]
fn solution_minimizes_the_functional() {
    let mesh = example_mesh(6);
    let data = Example1Solution::new(params());
    let out = solve_problem(&mesh, 2, &data, &SolverOptions::default()).unwrap();
    let best = out.errors.jh;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for scale in [1e-1, 1e-3] {
        for _ in 0..10 {
            let d = random_vector(&mut rng, out.solution.len());
            let w: Vec<f64> = out.solution.iter().zip(&d).map(|(a, b)| a + scale * b).collect();
            let j = evaluate_functional(&mesh, &out.space, &DiscreteFields::from_vector(&out.space, &w), &data);
            assert!(j >= best, "perturbation lowered J from {best} to {j}");
        }
    }
    let form = out.system.functional_from_form(&out.solution);
    assert!((form - best).abs() <= 1e-9 * best);
}

#[test]
fn solution_scales_with_data() {
    let mesh = example_mesh(4);
    let base = Example1Solution::new(params());
    let opts = SolverOptions { tol: 1e-12, ..Default::default() };
    let one = solve_problem(&mesh, 2, &base, &opts).unwrap();
    let three = solve_problem(&mesh, 2, &Scaled { inner: base, alpha: 3.0 }, &opts).unwrap();
    let diff: Vec<f64> = one.solution.iter().zip(&three.solution).map(|(a, b)| 3.0 * a - b).collect();
    assert!(norm(&diff) <= 1e-9 * norm(&three.solution));
}

#[test]
fn cg_agrees_with_dense_cholesky() {
    let mesh = example_mesh(8);
    let data = Example1Solution::new(params());
    let space = ReconstructionSpace::new(&mesh, 2).unwrap();
    let sys = assemble_system(&mesh, &space, &data).unwrap();
    let (x, report) = solve_spd(&sys.matrix, &sys.rhs, &SolverOptions::default(), None).unwrap();
    assert!(report.relative_residual <= 1e-10);
    let dense = sys.matrix.to_dense().cholesky().expect("SPD matrix");
    let oracle = dense.solve(&nalgebra::DVector::from_column_slice(&sys.rhs));
    let diff: Vec<f64> = x.iter().zip(oracle.iter()).map(|(a, b)| a - b).collect();
    assert!(norm(&diff) <= 1e-8 * oracle.norm());
}

#[test]
fn initial_guess_does_not_change_the_solution() {
    let mesh = example_mesh(8);
    let data = Example1Solution::new(params());
    let space = ReconstructionSpace::new(&mesh, 2).unwrap();
    let sys = assemble_system(&mesh, &space, &data).unwrap();
    let opts = SolverOptions::default();
    let (a, _) = solve_spd(&sys.matrix, &sys.rhs, &opts, None).unwrap();
    let guess = random_vector(&mut ChaCha8Rng::seed_from_u64(3), a.len());
    let (b, _) = solve_spd(&sys.matrix, &sys.rhs, &opts, Some(&guess)).unwrap();
    let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    // measured in the norm the discrete problem minimizes in, ‖v‖_A = (vᵀAv)^½
    let rel = (sys.matrix.quad_form(&diff) / sys.matrix.quad_form(&a)).sqrt();
    assert!(rel <= 10.0 * opts.tol, "relative difference {rel:e}");
}

#[test]
fn interpolated_polynomial_has_vanishing_functional() {
    let mesh = example_mesh(4);
    for m in 1..=3 {
        let data = PolynomialSolution::new(m, params()).unwrap();
        let space = ReconstructionSpace::new(&mesh, m).unwrap();
        let sys = assemble_system(&mesh, &space, &data).unwrap();
        let w = interpolate(&mesh, &data);
        let j = evaluate_functional(&mesh, &space, &DiscreteFields::from_vector(&space, &w), &data);
        assert!(j <= 1e-20 * sys.c_data, "m={m}: J={j:e}, c={:e}", sys.c_data);
    }
}

#[test]
fn empty_dirichlet_boundary_is_rejected() {
    let mesh = generate_unit_square_triangular(3).unwrap();
    assert!(mesh.classify_with_rule(&BoundaryRule::All).is_err());
    assert!(matches!(mesh.classify_boundary(|_| true), Err(Error::EmptyDirichlet)));
}

#[test]
fn energy_norms_are_homogeneous() {
    let mesh = example_mesh(4);
    let space = ReconstructionSpace::new(&mesh, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let w = random_vector(&mut rng, 5 * mesh.num_cells());
    let w3: Vec<f64> = w.iter().map(|v| -3.0 * v).collect();
    let (f, f3) = (DiscreteFields::from_vector(&space, &w), DiscreteFields::from_vector(&space, &w3));
    let q = error_degree(2);
    for (a, b) in [
        (energy_norm_sigma(&mesh, &f, q), energy_norm_sigma(&mesh, &f3, q)),
        (energy_norm_u(&mesh, &f, q), energy_norm_u(&mesh, &f3, q)),
    ] {
        assert!((3.0 * a - b).abs() <= 1e-12 * b);
    }
    let zero = DiscreteFields::from_vector(&space, &vec![0.0; w.len()]);
    assert_eq!(energy_norm_sigma(&mesh, &zero, q), 0.0);
    assert_eq!(energy_norm_u(&mesh, &zero, q), 0.0);
}

#[test]
fn reconstruction_error_rate_for_quadratics() {
    let g = |p: Point| (std::f64::consts::PI * p[0]).sin() * (std::f64::consts::PI * p[1]).sin();
    let err = |n: usize| {
        let mesh = generate_unit_square_triangular(n).unwrap();
        let space = ReconstructionSpace::new(&mesh, 2).unwrap();
        let rg = reconstruct_function(&mesh, &space, g);
        let rule = dlsfem::quadrature::TriangleRule::new(error_degree(2));
        (0..mesh.num_cells())
            .flat_map(|k| rule.on_triangles(&mesh.geometry(k).triangles).into_iter().map(move |q| (k, q)))
            .map(|(k, (p, w))| w * (rg.eval(k, p) - g(p)).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let rate = observed_rate(err(16), err(32), 1.0 / 16.0, 1.0 / 32.0);
    assert!(rate >= 2.7, "rate {rate}");
}

#[test]
fn linear_elements_run() {
    let mesh = example_mesh(8);
    let out = solve_problem(&mesh, 1, &Example1Solution::new(params()), &SolverOptions::default()).unwrap();
    assert!(out.errors.jh_sqrt.is_finite() && out.errors.l2_u > 0.0);
}

#[test]
fn convergence_report_shapes() {
    let config = ConvergenceConfig {
        degree: 2,
        lambda: 5.0,
        mu: 1.0,
        mesh: MeshKind::Tri,
        levels: vec![2, 4, 8],
        solver: SolverOptions::default(),
    };
    let report = convergence_study(&config).unwrap();
    assert_eq!(report.levels.len(), 3);
    assert_eq!(report.rates.len(), 2);
    let csv = report.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], ConvergenceReport::CSV_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[1].ends_with(",,,"));
    let json: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert_eq!(json["levels"].as_array().unwrap().len(), 3);
    assert_eq!(dof_count(&generate_unit_square_triangular(10).unwrap()), 1000);
}
