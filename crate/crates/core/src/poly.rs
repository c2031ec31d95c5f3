//! Sparse bivariate polynomials with exact differentiation.
//!
//! Used to build polynomial manufactured solutions whose stresses and body
//! forces are derived without numerical differentiation.

use std::collections::BTreeMap;

use crate::Point;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly2 {
    terms: BTreeMap<(u32, u32), f64>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Poly2::default()
    }

    /// `coefficient · x^a y^b`.
    pub fn monomial(a: u32, b: u32, coefficient: f64) -> Self {
        let mut p = Poly2::zero();
        p.add_term(a, b, coefficient);
        p
    }

    pub fn from_terms(terms: &[(u32, u32, f64)]) -> Self {
        let mut p = Poly2::zero();
        for &(a, b, c) in terms {
            p.add_term(a, b, c);
        }
        p
    }

    fn add_term(&mut self, a: u32, b: u32, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry((a, b)).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&(a, b));
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|&(a, b)| a + b).max().unwrap_or(0)
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.terms
            .iter()
            .map(|(&(a, b), &c)| c * p[0].powi(a as i32) * p[1].powi(b as i32))
            .sum()
    }

    pub fn dx(&self) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(a, b), &c) in &self.terms {
            if a > 0 {
                out.add_term(a - 1, b, c * a as f64);
            }
        }
        out
    }

    pub fn dy(&self) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(a, b), &c) in &self.terms {
            if b > 0 {
                out.add_term(a, b - 1, c * b as f64);
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(a, b), &c) in &self.terms {
            out.add_term(a, b, c * s);
        }
        out
    }

    pub fn add(&self, other: &Poly2) -> Poly2 {
        let mut out = self.clone();
        for (&(a, b), &c) in &other.terms {
            out.add_term(a, b, c);
        }
        out
    }
}
