//! Gauss rules on intervals and triangles.
//!
//! Triangle rules are collapsed tensor products of Gauss–Legendre rules
//! (Duffy transform). They are not minimal, but every weight is positive and
//! the exactness degree is easy to certify.

use crate::Point;

/// Gauss–Legendre nodes and weights on `[-1, 1]` with `n` points, exact to
/// degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "a Gauss rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A rule on the unit interval `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl LineRule {
    /// The Gauss rule with the fewest points exact to `degree`.
    pub fn new(degree: usize) -> LineRule {
        let n = degree / 2 + 1;
        let (x, w) = gauss_legendre(n);
        LineRule {
            points: x.iter().map(|&t| 0.5 * (t + 1.0)).collect(),
            weights: w.iter().map(|&v| 0.5 * v).collect(),
            degree,
        }
    }

    /// Points on segment `a`–`b` with weights scaled by its length.
    pub fn on_segment(&self, a: Point, b: Point) -> Vec<(Point, f64)> {
        let len = crate::mesh::distance(a, b);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| ([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], w * len))
            .collect()
    }
}

/// A rule on the reference triangle `(0,0), (1,0), (0,1)`; weights sum to 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    pub fn new(degree: usize) -> TriangleRule {
        // the collapse adds one power of (1 - u) to the integrand in u
        let n = (degree + 2).div_ceil(2);
        let (x, w) = gauss_legendre(n);
        let t: Vec<f64> = x.iter().map(|&s| 0.5 * (s + 1.0)).collect();
        let wt: Vec<f64> = w.iter().map(|&v| 0.5 * v).collect();
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let u = t[i];
                let v = t[j] * (1.0 - u);
                points.push([u, v]);
                weights.push(wt[i] * wt[j] * (1.0 - u));
            }
        }
        TriangleRule { points, weights, degree }
    }

    /// Points mapped onto the triangle `tri` with weights scaled by its area.
    pub fn on_triangle(&self, tri: &[Point; 3]) -> Vec<(Point, f64)> {
        let [a, b, c] = *tri;
        let e1 = [b[0] - a[0], b[1] - a[1]];
        let e2 = [c[0] - a[0], c[1] - a[1]];
        let jac = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&[u, v], &w)| ([a[0] + u * e1[0] + v * e2[0], a[1] + u * e1[1] + v * e2[1]], w * jac))
            .collect()
    }

    /// Points over a fan-triangulated polygon.
    pub fn on_triangles(&self, triangles: &[[Point; 3]]) -> Vec<(Point, f64)> {
        triangles.iter().flat_map(|t| self.on_triangle(t)).collect()
    }
}
