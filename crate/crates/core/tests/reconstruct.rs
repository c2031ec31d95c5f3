mod common;

use dlsfem::mesh::{generate_unit_square_triangular, generate_voronoi_polygonal};
use dlsfem::patch::build_patch;
use dlsfem::quadrature::TriangleRule;
use dlsfem::reconstruct::*;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_polynomials_are_reproduced_in_coefficients() {
    let mesh = generate_voronoi_polygonal(150, 10, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for m in 1..=3 {
        let space = ReconstructionSpace::new(&mesh, m).unwrap();
        for trial in 0..50 {
            let basis = &space.bases[(trial * 37) % mesh.num_cells()];
            let c: Vec<f64> = (0..basis.monomials.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let values: Vec<f64> = space.patches[basis.element]
                .points
                .iter()
                .map(|&p| basis.monomials.eval_poly(&c, p))
                .collect();
            let got = basis.apply(&values);
            let err = common::max_abs(&(got - DVector::from_vec(c)));
            assert!(err <= 1e-10, "m={m} element {} error {err:e}", basis.element);
        }
    }
}

#[test]
fn global_polynomials_are_reproduced_pointwise() {
    let mesh = generate_unit_square_triangular(6).unwrap();
    let rule = TriangleRule::new(4);
    for m in 1..=3 {
        let space = ReconstructionSpace::new(&mesh, m).unwrap();
        let g = |p: [f64; 2]| 1.0 + p[0] - 2.0 * p[1] + (m as f64 - 1.0) * p[0] * p[1] + (m as f64 - 2.0).max(0.0) * p[1].powi(3);
        let rg = reconstruct_function(&mesh, &space, g);
        for k in 0..mesh.num_cells() {
            for (p, _) in rule.on_triangles(&mesh.geometry(k).triangles) {
                assert!((rg.eval(k, p) - g(p)).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn constraint_is_interpolated_exactly() {
    let mesh = generate_voronoi_polygonal(100, 5, 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for m in 1..=4 {
        let space = ReconstructionSpace::new(&mesh, m).unwrap();
        let values: Vec<f64> = (0..mesh.num_cells()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let rv = space.reconstruct_values(&values);
        for (k, value) in values.iter().enumerate() {
            let got = rv.eval(k, mesh.barycenter(k));
            assert!((got - value).abs() <= 1e-13 * value.abs().max(1.0));
        }
    }
}

#[test]
fn basis_table_properties() {
    let mesh = generate_voronoi_polygonal(60, 5, 3).unwrap();
    let space = ReconstructionSpace::new(&mesh, 2).unwrap();
    for basis in &space.bases {
        let k = basis.element;
        let at_center = evaluate_basis(basis, &[mesh.barycenter(k)]);
        assert!((at_center.values[(0, 0)] - 1.0).abs() < 1e-13);
        for j in 1..basis.members.len() {
            assert!(at_center.values[(j, 0)].abs() < 1e-13);
        }
        let pts = mesh.cell_points(k);
        let table = evaluate_basis(basis, &pts);
        for q in 0..pts.len() {
            assert!((table.values.column(q).sum() - 1.0).abs() < 1e-12);
            assert!(table.grad_x.column(q).sum().abs() < 1e-9 / mesh.geometry(k).diameter);
        }
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mesh = generate_voronoi_polygonal(80, 5, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in 1..=3 {
        let space = ReconstructionSpace::new(&mesh, m).unwrap();
        for basis in space.bases.iter().step_by(7) {
            let k = basis.element;
            let h = mesh.geometry(k).diameter;
            let step = 1e-6 * h;
            let tri = mesh.geometry(k).triangles[0];
            let (a, b) = (rng.gen_range(0.05..0.5), rng.gen_range(0.05..0.45));
            let p = [
                tri[0][0] + a * (tri[1][0] - tri[0][0]) + b * (tri[2][0] - tri[0][0]),
                tri[0][1] + a * (tri[1][1] - tri[0][1]) + b * (tri[2][1] - tri[0][1]),
            ];
            let t = evaluate_basis(basis, &[p, [p[0] + step, p[1]], [p[0] - step, p[1]], [p[0], p[1] + step], [p[0], p[1] - step]]);
            let scale = t.grad_x.column(0).amax().max(t.grad_y.column(0).amax());
            for j in 0..basis.members.len() {
                let fdx = (t.values[(j, 1)] - t.values[(j, 2)]) / (2.0 * step);
                let fdy = (t.values[(j, 3)] - t.values[(j, 4)]) / (2.0 * step);
                assert!((fdx - t.grad_x[(j, 0)]).abs() <= 1e-6 * scale, "m={m} dx {fdx} vs {}", t.grad_x[(j, 0)]);
                assert!((fdy - t.grad_y[(j, 0)]).abs() <= 1e-6 * scale);
            }
        }
    }
}

#[test]
fn reconstruction_is_linear() {
    let mesh = generate_unit_square_triangular(5).unwrap();
    let space = ReconstructionSpace::new(&mesh, 2).unwrap();
    let g1 = |p: [f64; 2]| (3.0 * p[0]).sin();
    let g2 = |p: [f64; 2]| (p[0] * p[1]).exp();
    let (a, b) = (1.7, -0.4);
    let r1 = reconstruct_function(&mesh, &space, g1);
    let r2 = reconstruct_function(&mesh, &space, g2);
    let r = reconstruct_function(&mesh, &space, |p| a * g1(p) + b * g2(p));
    for k in 0..mesh.num_cells() {
        let diff = &r.coefficients[k] - (&r1.coefficients[k] * a + &r2.coefficients[k] * b);
        assert!(common::max_abs(&diff) < 1e-12);
    }
}

#[test]
fn linear_patches_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let mesh = common::random_star(&mut rng);
        let patch = build_patch(&mesh, 0, 4).unwrap();
        let basis = build_basis_matrix(&mesh, &patch, 1).unwrap();
        let expected = common::normal_equation_weights(&patch.points);
        let got = basis.unscaled_coefficients();
        assert!((got - &expected).amax() <= 1e-12 * expected.amax());
    }
}

#[test]
fn lambda_estimates() {
    let mesh = generate_voronoi_polygonal(80, 5, 8).unwrap();
    let patch = build_patch(&mesh, 17, 8).unwrap();
    assert_eq!(estimate_lambda(&mesh, &patch, 0, 100, 1).unwrap(), 1.0);
    let small = estimate_lambda(&mesh, &patch, 2, 100, 1).unwrap();
    let large = estimate_lambda(&mesh, &patch, 2, 400, 1).unwrap();
    assert!(small >= 1.0 && large >= small);
    assert!(estimate_lambda(&mesh, &patch, 2, 99, 1).is_err());
}

#[test]
fn reconstruction_is_stable_relative_to_lambda() {
    let mesh = generate_voronoi_polygonal(100, 10, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rule = TriangleRule::new(6);
    for m in 1..=3 {
        let space = ReconstructionSpace::new(&mesh, m).unwrap();
        for basis in space.bases.iter().step_by(9) {
            let patch = &space.patches[basis.element];
            let lambda = estimate_lambda(&mesh, patch, m, 2000, 11).unwrap();
            let bound = lambda * (patch.len() as f64).sqrt() * 1.1;
            let grid: Vec<_> = rule.on_triangles(&mesh.geometry(basis.element).triangles).into_iter().map(|(p, _)| p).collect();
            for _ in 0..20 {
                let v: Vec<f64> = (0..patch.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let c = basis.apply(&v);
                let peak = grid.iter().map(|&p| basis.monomials.eval_poly(c.as_slice(), p).abs()).fold(0.0, f64::max);
                assert!(peak <= bound, "m={m} peak {peak} bound {bound}");
            }
        }
    }
}

#[test]
fn condition_numbers_are_mesh_size_independent() {
    let coarse = ReconstructionSpace::new(&generate_unit_square_triangular(4).unwrap(), 2).unwrap();
    let fine = ReconstructionSpace::new(&generate_unit_square_triangular(16).unwrap(), 2).unwrap();
    let worst = |s: &ReconstructionSpace| s.bases.iter().map(|b| b.condition).fold(0.0, f64::max);
    assert!(worst(&fine) < 2.0 * worst(&coarse));
    assert!(worst(&fine) < UNISOLVENCE_THRESHOLD);
}
