//! Isotropic linear elasticity in first-order stress–displacement form.
//!
//! The model is `Aσ − ε(u) = 0`, `∇·σ + f = 0` with `u = g` on the Dirichlet
//! boundary and `σn = h` on the Neumann boundary.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::mesh::BoundaryRule;
use crate::poly::Poly2;
use crate::{Error, Point, Result};

/// A symmetric 2×2 tensor stored as `(xx, xy, yy)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SymTensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymTensor2 {
    pub const IDENTITY: SymTensor2 = SymTensor2 { xx: 1.0, xy: 0.0, yy: 1.0 };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        SymTensor2 { xx, xy, yy }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Frobenius inner product; the off-diagonal entry counts twice.
    pub fn ddot(&self, other: &SymTensor2) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn dot_vec(&self, n: Point) -> Point {
        [self.xx * n[0] + self.xy * n[1], self.xy * n[0] + self.yy * n[1]]
    }

    /// Symmetric part of a full 2×2 matrix `g[i][j]`.
    pub fn sym(g: [[f64; 2]; 2]) -> Self {
        SymTensor2::new(g[0][0], 0.5 * (g[0][1] + g[1][0]), g[1][1])
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.xx, self.xy, self.yy]
    }
}

impl Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }
}

impl Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }
}

impl Mul<SymTensor2> for f64 {
    type Output = SymTensor2;
    fn mul(self, t: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self * t.xx, self * t.xy, self * t.yy)
    }
}

/// Lamé parameters of an isotropic material in two dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub lambda: f64,
    pub mu: f64,
}

impl MaterialParams {
    pub const DIM: usize = 2;

    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) || !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Lamé parameters must be positive and finite, got λ = {lambda}, μ = {mu}"
            )));
        }
        Ok(MaterialParams { lambda, mu })
    }

    /// `κ = λ / (dλ + 2μ)`, the trace factor of the compliance operator.
    pub fn trace_factor(&self) -> f64 {
        self.lambda / (Self::DIM as f64 * self.lambda + 2.0 * self.mu)
    }
}

/// `Aτ = (τ − κ tr(τ) I) / 2μ`.
pub fn compliance_apply(tau: &SymTensor2, p: &MaterialParams) -> SymTensor2 {
    let k = p.trace_factor() * tau.trace();
    let s = 0.5 / p.mu;
    SymTensor2::new(s * (tau.xx - k), s * tau.xy, s * (tau.yy - k))
}

/// `σ = 2μ ε + λ tr(ε) I`, the inverse of [`compliance_apply`].
pub fn stiffness_apply(eps: &SymTensor2, p: &MaterialParams) -> SymTensor2 {
    let t = p.lambda * eps.trace();
    let m = 2.0 * p.mu;
    SymTensor2::new(m * eps.xx + t, m * eps.xy, m * eps.yy + t)
}

/// Closed-form exact solution with its derived data.
pub trait ManufacturedSolution: Send + Sync {
    fn params(&self) -> MaterialParams;

    fn displacement(&self, p: Point) -> Point;

    /// `g[i][j] = ∂u_i / ∂x_j`.
    fn displacement_gradient(&self, p: Point) -> [[f64; 2]; 2];

    fn strain(&self, p: Point) -> SymTensor2 {
        SymTensor2::sym(self.displacement_gradient(p))
    }

    fn stress(&self, p: Point) -> SymTensor2 {
        stiffness_apply(&self.strain(p), &self.params())
    }

    /// Body force `f = −∇·σ`.
    fn body_force(&self, p: Point) -> Point;

    /// Dirichlet data `g = u`.
    fn dirichlet_data(&self, p: Point) -> Point {
        self.displacement(p)
    }

    /// Neumann data `h = σn`.
    fn neumann_data(&self, p: Point, n: Point) -> Point {
        self.stress(p).dot_vec(n)
    }

    /// Which boundary faces carry Neumann data.
    fn neumann_rule(&self) -> BoundaryRule {
        BoundaryRule::XEquals(1.0)
    }
}

/// Smooth solution on the unit square with Neumann data on `x = 1`.
///
/// `u₁ = sin(2πy)(cos(2πx) − 1) + S/(1+λ)`, `u₂ = sin(2πx)(1 − cos(2πy)) + S/(1+λ)`
/// with `S = sin(πx) sin(πy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example1Solution {
    pub params: MaterialParams,
}

impl Example1Solution {
    pub fn new(params: MaterialParams) -> Self {
        Example1Solution { params }
    }

    fn c(&self) -> f64 {
        1.0 / (1.0 + self.params.lambda)
    }

    /// Second derivatives `[u1_xx, u1_xy, u1_yy, u2_xx, u2_xy, u2_yy]`.
    fn hessians(&self, p: Point) -> [f64; 6] {
        let (x, y) = (p[0], p[1]);
        let c = self.c();
        let pi2 = PI * PI;
        let s = (PI * x).sin() * (PI * y).sin();
        let cc = (PI * x).cos() * (PI * y).cos();
        let (s2x, c2x) = (2.0 * PI * x).sin_cos();
        let (s2y, c2y) = (2.0 * PI * y).sin_cos();
        [
            -4.0 * pi2 * s2y * c2x - c * pi2 * s,
            -4.0 * pi2 * c2y * s2x + c * pi2 * cc,
            -4.0 * pi2 * s2y * (c2x - 1.0) - c * pi2 * s,
            -4.0 * pi2 * s2x * (1.0 - c2y) - c * pi2 * s,
            4.0 * pi2 * c2x * s2y + c * pi2 * cc,
            4.0 * pi2 * s2x * c2y - c * pi2 * s,
        ]
    }
}

impl ManufacturedSolution for Example1Solution {
    fn params(&self) -> MaterialParams {
        self.params
    }

    fn displacement(&self, p: Point) -> Point {
        let (x, y) = (p[0], p[1]);
        let s = self.c() * (PI * x).sin() * (PI * y).sin();
        let (s2x, c2x) = (2.0 * PI * x).sin_cos();
        let (s2y, c2y) = (2.0 * PI * y).sin_cos();
        [s2y * (c2x - 1.0) + s, s2x * (1.0 - c2y) + s]
    }

    fn displacement_gradient(&self, p: Point) -> [[f64; 2]; 2] {
        let (x, y) = (p[0], p[1]);
        let c = self.c();
        let sx = c * PI * (PI * x).cos() * (PI * y).sin();
        let sy = c * PI * (PI * x).sin() * (PI * y).cos();
        let (s2x, c2x) = (2.0 * PI * x).sin_cos();
        let (s2y, c2y) = (2.0 * PI * y).sin_cos();
        [
            [-2.0 * PI * s2y * s2x + sx, 2.0 * PI * c2y * (c2x - 1.0) + sy],
            [2.0 * PI * c2x * (1.0 - c2y) + sx, 2.0 * PI * s2x * s2y + sy],
        ]
    }

    fn body_force(&self, p: Point) -> Point {
        let [u1xx, u1xy, u1yy, u2xx, u2xy, u2yy] = self.hessians(p);
        let MaterialParams { lambda, mu } = self.params;
        let ddiv_x = u1xx + u2xy;
        let ddiv_y = u1xy + u2yy;
        [
            -(mu * (u1xx + u1yy) + (mu + lambda) * ddiv_x),
            -(mu * (u2xx + u2yy) + (mu + lambda) * ddiv_y),
        ]
    }
}

/// Polynomial displacement of total degree `m`, exactly representable by a
/// degree-`m` reconstruction.
///
/// `u₁ = x + 2y + Σ_{k=2}^m (x^k + x^{k−1}y)`, `u₂ = 3x − y + Σ_{k=2}^m (y^k − x y^{k−1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSolution {
    pub degree: usize,
    pub params: MaterialParams,
    u: [Poly2; 2],
    grad: [[Poly2; 2]; 2],
    sigma: [Poly2; 3],
    force: [Poly2; 2],
}

impl PolynomialSolution {
    pub fn new(degree: usize, params: MaterialParams) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidArgument("polynomial solution needs degree ≥ 1".into()));
        }
        let mut u1 = Poly2::from_terms(&[(1, 0, 1.0), (0, 1, 2.0)]);
        let mut u2 = Poly2::from_terms(&[(1, 0, 3.0), (0, 1, -1.0)]);
        for k in 2..=degree as u32 {
            u1 = u1.add(&Poly2::from_terms(&[(k, 0, 1.0), (k - 1, 1, 1.0)]));
            u2 = u2.add(&Poly2::from_terms(&[(0, k, 1.0), (1, k - 1, -1.0)]));
        }
        let grad = [[u1.dx(), u1.dy()], [u2.dx(), u2.dy()]];
        let div = grad[0][0].add(&grad[1][1]);
        let lam_div = div.scale(params.lambda);
        let m2 = 2.0 * params.mu;
        let sxx = grad[0][0].scale(m2).add(&lam_div);
        let sxy = grad[0][1].add(&grad[1][0]).scale(params.mu);
        let syy = grad[1][1].scale(m2).add(&lam_div);
        let force = [
            sxx.dx().add(&sxy.dy()).scale(-1.0),
            sxy.dx().add(&syy.dy()).scale(-1.0),
        ];
        Ok(PolynomialSolution {
            degree,
            params,
            u: [u1, u2],
            grad,
            sigma: [sxx, sxy, syy],
            force,
        })
    }

    pub fn displacement_polys(&self) -> &[Poly2; 2] {
        &self.u
    }

    pub fn stress_polys(&self) -> &[Poly2; 3] {
        &self.sigma
    }
}

impl ManufacturedSolution for PolynomialSolution {
    fn params(&self) -> MaterialParams {
        self.params
    }

    fn displacement(&self, p: Point) -> Point {
        [self.u[0].eval(p), self.u[1].eval(p)]
    }

    fn displacement_gradient(&self, p: Point) -> [[f64; 2]; 2] {
        [
            [self.grad[0][0].eval(p), self.grad[0][1].eval(p)],
            [self.grad[1][0].eval(p), self.grad[1][1].eval(p)],
        ]
    }

    fn stress(&self, p: Point) -> SymTensor2 {
        SymTensor2::new(self.sigma[0].eval(p), self.sigma[1].eval(p), self.sigma[2].eval(p))
    }

    fn body_force(&self, p: Point) -> Point {
        [self.force[0].eval(p), self.force[1].eval(p)]
    }
}
