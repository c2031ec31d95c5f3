//! Element-wise stress and displacement fields.
//!
//! Fields are evaluated per element, so traces on a face are taken by
//! evaluating the field of each adjacent element at the face points.

use nalgebra::DVector;

use crate::elasticity::{ManufacturedSolution, SymTensor2};
use crate::mesh::Mesh;
use crate::reconstruct::{MonomialBasis, ReconstructionSpace};
use crate::Point;

/// Number of scalar unknowns per element: `σ₁₁, σ₁₂, σ₂₂, u₁, u₂`.
pub const COMPONENTS: usize = 5;

pub trait StressField: Sync {
    fn stress(&self, element: usize, p: Point) -> SymTensor2;
    fn divergence(&self, element: usize, p: Point) -> Point;
}

pub trait DisplacementField: Sync {
    fn displacement(&self, element: usize, p: Point) -> Point;
    /// `g[i][j] = ∂u_i / ∂x_j`.
    fn gradient(&self, element: usize, p: Point) -> [[f64; 2]; 2];

    fn strain(&self, element: usize, p: Point) -> SymTensor2 {
        SymTensor2::sym(self.gradient(element, p))
    }
}

/// Discrete fields given by a global coefficient vector, expanded into the
/// local monomial coefficients of every element.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFields {
    monomials: Vec<MonomialBasis>,
    /// Per element, the local coefficients of each of the five components.
    local: Vec<[DVector<f64>; COMPONENTS]>,
}

impl DiscreteFields {
    /// `w[5K + c]` is the value of component `c` attached to element `K`.
    pub fn from_vector(space: &ReconstructionSpace, w: &[f64]) -> Self {
        assert_eq!(w.len(), COMPONENTS * space.num_elements(), "coefficient vector length");
        let local = space
            .bases
            .iter()
            .map(|b| {
                std::array::from_fn(|c| {
                    let values: Vec<f64> = b.members.iter().map(|&k| w[COMPONENTS * k + c]).collect();
                    b.apply(&values)
                })
            })
            .collect();
        DiscreteFields {
            monomials: space.bases.iter().map(|b| b.monomials.clone()).collect(),
            local,
        }
    }

    /// Values, x-derivatives and y-derivatives of all five components.
    pub fn eval_all(&self, element: usize, p: Point) -> ([f64; COMPONENTS], [f64; COMPONENTS], [f64; COMPONENTS]) {
        let (v, gx, gy) = self.monomials[element].eval_with_gradients(p);
        let dot = |a: &[f64], c: &DVector<f64>| a.iter().zip(c.iter()).map(|(x, y)| x * y).sum::<f64>();
        let coeffs = &self.local[element];
        (
            std::array::from_fn(|c| dot(&v, &coeffs[c])),
            std::array::from_fn(|c| dot(&gx, &coeffs[c])),
            std::array::from_fn(|c| dot(&gy, &coeffs[c])),
        )
    }
}

impl StressField for DiscreteFields {
    fn stress(&self, element: usize, p: Point) -> SymTensor2 {
        let (v, _, _) = self.eval_all(element, p);
        SymTensor2::new(v[0], v[1], v[2])
    }

    fn divergence(&self, element: usize, p: Point) -> Point {
        let (_, dx, dy) = self.eval_all(element, p);
        [dx[0] + dy[1], dx[1] + dy[2]]
    }
}

impl DisplacementField for DiscreteFields {
    fn displacement(&self, element: usize, p: Point) -> Point {
        let (v, _, _) = self.eval_all(element, p);
        [v[3], v[4]]
    }

    fn gradient(&self, element: usize, p: Point) -> [[f64; 2]; 2] {
        let (_, dx, dy) = self.eval_all(element, p);
        [[dx[3], dy[3]], [dx[4], dy[4]]]
    }
}

/// Exact fields of a manufactured solution; the divergence of the stress is `−f`.
pub struct ExactFields<'a>(pub &'a dyn ManufacturedSolution);

impl StressField for ExactFields<'_> {
    fn stress(&self, _: usize, p: Point) -> SymTensor2 {
        self.0.stress(p)
    }

    fn divergence(&self, _: usize, p: Point) -> Point {
        let f = self.0.body_force(p);
        [-f[0], -f[1]]
    }
}

impl DisplacementField for ExactFields<'_> {
    fn displacement(&self, _: usize, p: Point) -> Point {
        self.0.displacement(p)
    }

    fn gradient(&self, _: usize, p: Point) -> [[f64; 2]; 2] {
        self.0.displacement_gradient(p)
    }
}

/// `a − b`, component-wise.
pub struct Difference<A, B>(pub A, pub B);

impl<A: StressField, B: StressField> StressField for Difference<A, B> {
    fn stress(&self, k: usize, p: Point) -> SymTensor2 {
        self.0.stress(k, p) - self.1.stress(k, p)
    }

    fn divergence(&self, k: usize, p: Point) -> Point {
        let (a, b) = (self.0.divergence(k, p), self.1.divergence(k, p));
        [a[0] - b[0], a[1] - b[1]]
    }
}

impl<A: DisplacementField, B: DisplacementField> DisplacementField for Difference<A, B> {
    fn displacement(&self, k: usize, p: Point) -> Point {
        let (a, b) = (self.0.displacement(k, p), self.1.displacement(k, p));
        [a[0] - b[0], a[1] - b[1]]
    }

    fn gradient(&self, k: usize, p: Point) -> [[f64; 2]; 2] {
        let (a, b) = (self.0.gradient(k, p), self.1.gradient(k, p));
        [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
    }
}

impl<T: StressField + ?Sized> StressField for &T {
    fn stress(&self, k: usize, p: Point) -> SymTensor2 {
        (**self).stress(k, p)
    }

    fn divergence(&self, k: usize, p: Point) -> Point {
        (**self).divergence(k, p)
    }
}

impl<T: DisplacementField + ?Sized> DisplacementField for &T {
    fn displacement(&self, k: usize, p: Point) -> Point {
        (**self).displacement(k, p)
    }

    fn gradient(&self, k: usize, p: Point) -> [[f64; 2]; 2] {
        (**self).gradient(k, p)
    }
}

/// Coefficient vector holding the exact fields sampled at every barycenter.
pub fn interpolate(mesh: &Mesh, solution: &dyn ManufacturedSolution) -> Vec<f64> {
    let mut w = Vec::with_capacity(COMPONENTS * mesh.num_cells());
    for k in 0..mesh.num_cells() {
        let x = mesh.barycenter(k);
        let s = solution.stress(x);
        let u = solution.displacement(x);
        w.extend_from_slice(&[s.xx, s.xy, s.yy, u[0], u[1]]);
    }
    w
}
