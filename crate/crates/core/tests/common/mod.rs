#![allow(dead_code)]

use dlsfem::mesh::Mesh;
use dlsfem::Point;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random triangle `K₀` with one neighbour across each edge, given by
/// perturbed reflections of the opposite vertex. Cell 0 is `K₀`.
pub fn random_star(rng: &mut ChaCha8Rng) -> Mesh {
    loop {
        let mut v: Vec<Point> = (0..3).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let area = 0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]));
        if area.abs() < 0.2 {
            continue;
        }
        if area < 0.0 {
            v.swap(1, 2);
        }
        let mut cells = vec![vec![0, 1, 2]];
        for (a, b, opp) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let mid = [(v[a][0] + v[b][0]) / 2.0, (v[a][1] + v[b][1]) / 2.0];
            let t = rng.gen_range(0.6..1.4);
            let s = rng.gen_range(-0.3..0.3);
            let (ex, ey) = (v[b][0] - v[a][0], v[b][1] - v[a][1]);
            let refl = [mid[0] + t * (mid[0] - v[opp][0]) + s * ex, mid[1] + t * (mid[1] - v[opp][1]) + s * ey];
            v.push(refl);
            cells.push(vec![b, a, v.len() - 1]);
        }
        if let Ok(mesh) = Mesh::from_polygons(v, cells) {
            return mesh;
        }
    }
}

/// `[[1, 0], [−M·1, M]]` with `M = (AᵀA)⁻¹Aᵀ` and `A` the unscaled offsets
/// of the non-constraint points, computed by normal equations.
pub fn normal_equation_weights(points: &[Point]) -> DMatrix<f64> {
    let x0 = points[0];
    let k = points.len() - 1;
    let a = DMatrix::from_fn(k, 2, |i, j| points[i + 1][j] - x0[j]);
    let ata = a.transpose() * &a;
    let m = ata.try_inverse().expect("nonsingular normal matrix") * a.transpose();
    let mut out = DMatrix::zeros(3, k + 1);
    out[(0, 0)] = 1.0;
    for i in 0..2 {
        let row_sum: f64 = m.row(i).iter().sum();
        out[(i + 1, 0)] = -row_sum;
        for j in 0..k {
            out[(i + 1, j + 1)] = m[(i, j)];
        }
    }
    out
}

pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
