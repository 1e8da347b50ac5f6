//! Fields on a chart: rules taking coordinate jets to component jets.
//!
//! A field takes jets rather than numbers so that composition with maps is
//! automatic: evaluating a field on the image jets of a map gives the jet
//! of the composite.

use std::fmt;
use std::sync::Arc;

use crate::calculus::{binom, Form, Multivector};
use crate::jet::Jet2;

type JetFn = Arc<dyn Fn(&[Jet2]) -> Jet2 + Send + Sync>;

#[derive(Clone)]
pub struct ScalarField(JetFn);

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarField")
    }
}

impl ScalarField {
    pub fn new(f: impl Fn(&[Jet2]) -> Jet2 + Send + Sync + 'static) -> Self {
        ScalarField(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| Jet2::constant(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn coordinate(i: usize) -> Self {
        Self::new(move |x| x[i].clone())
    }

    pub fn eval(&self, x: &[Jet2]) -> Jet2 {
        (self.0)(x)
    }

    /// Jet at a point, seeded in the chart's own coordinates.
    pub fn at(&self, p: &[f64]) -> Jet2 {
        self.eval(&Jet2::seed(p))
    }

    /// `self o map`.
    pub fn compose(&self, map: &Map) -> ScalarField {
        let f = self.clone();
        let m = map.clone();
        Self::new(move |x| f.eval(&m.eval(x)))
    }

    pub fn mul(&self, o: &ScalarField) -> ScalarField {
        let (a, b) = (self.clone(), o.clone());
        Self::new(move |x| a.eval(x) * b.eval(x))
    }

    pub fn add(&self, o: &ScalarField) -> ScalarField {
        let (a, b) = (self.clone(), o.clone());
        Self::new(move |x| a.eval(x) + b.eval(x))
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        let a = self.clone();
        Self::new(move |x| a.eval(x).scale(c))
    }
}

/// Smooth map between charts, one scalar field per target coordinate.
#[derive(Clone, Debug)]
pub struct Map {
    pub comps: Vec<ScalarField>,
}

impl Map {
    pub fn new(comps: Vec<ScalarField>) -> Self {
        Map { comps }
    }

    pub fn identity(n: usize) -> Self {
        Map { comps: (0..n).map(ScalarField::coordinate).collect() }
    }

    /// Projection onto the listed coordinates.
    pub fn select(idx: &[usize]) -> Self {
        Map { comps: idx.iter().map(|&i| ScalarField::coordinate(i)).collect() }
    }

    pub fn out_dim(&self) -> usize {
        self.comps.len()
    }

    pub fn eval(&self, x: &[Jet2]) -> Vec<Jet2> {
        self.comps.iter().map(|c| c.eval(x)).collect()
    }

    pub fn at(&self, p: &[f64]) -> Vec<Jet2> {
        self.eval(&Jet2::seed(p))
    }

    pub fn values(&self, p: &[f64]) -> Vec<f64> {
        let x: Vec<Jet2> = p.iter().map(|&v| Jet2::constant(v)).collect();
        self.eval(&x).iter().map(|j| j.value).collect()
    }

    /// Jacobian rows `d map^i / d x^a` at `p`.
    pub fn jacobian(&self, p: &[f64]) -> Vec<Vec<f64>> {
        self.at(p).into_iter().map(|j| j.grad).collect()
    }

    pub fn then(&self, outer: &Map) -> Map {
        Map { comps: outer.comps.iter().map(|c| c.compose(self)).collect() }
    }
}

/// A field of `degree`-forms or `degree`-vectors on a `dim`-dimensional chart.
#[derive(Clone, Debug)]
pub struct SkewField {
    pub dim: usize,
    pub degree: usize,
    pub comps: Vec<ScalarField>,
}

impl SkewField {
    pub fn new(dim: usize, degree: usize, comps: Vec<ScalarField>) -> Self {
        assert_eq!(comps.len(), binom(dim, degree), "component count");
        SkewField { dim, degree, comps }
    }

    pub fn zero(dim: usize, degree: usize) -> Self {
        Self::new(dim, degree, vec![ScalarField::zero(); binom(dim, degree)])
    }

    fn eval_comps(&self, x: &[Jet2]) -> Vec<Jet2> {
        self.comps.iter().map(|c| c.eval(x)).collect()
    }

    pub fn compose(&self, map: &Map) -> SkewField {
        SkewField { dim: self.dim, degree: self.degree, comps: self.comps.iter().map(|c| c.compose(map)).collect() }
    }
}

/// Differential form field.
#[derive(Clone, Debug)]
pub struct FormField(pub SkewField);

/// Multivector field.
#[derive(Clone, Debug)]
pub struct MultivectorField(pub SkewField);

impl FormField {
    pub fn new(dim: usize, degree: usize, comps: Vec<ScalarField>) -> Self {
        FormField(SkewField::new(dim, degree, comps))
    }
    pub fn zero(dim: usize, degree: usize) -> Self {
        FormField(SkewField::zero(dim, degree))
    }
    pub fn one(comps: Vec<ScalarField>) -> Self {
        Self::new(comps.len(), 1, comps)
    }
    pub fn dim(&self) -> usize {
        self.0.dim
    }
    pub fn degree(&self) -> usize {
        self.0.degree
    }
    pub fn eval(&self, x: &[Jet2]) -> Form {
        Form::from_comps(self.0.dim, self.0.degree, self.0.eval_comps(x))
    }
    pub fn at(&self, p: &[f64]) -> Form {
        self.eval(&Jet2::seed(p))
    }
}

impl MultivectorField {
    pub fn new(dim: usize, degree: usize, comps: Vec<ScalarField>) -> Self {
        MultivectorField(SkewField::new(dim, degree, comps))
    }
    pub fn zero(dim: usize, degree: usize) -> Self {
        MultivectorField(SkewField::zero(dim, degree))
    }
    pub fn vector(comps: Vec<ScalarField>) -> Self {
        Self::new(comps.len(), 1, comps)
    }
    /// The coordinate field `d/dx^i`.
    pub fn coordinate_vector(dim: usize, i: usize) -> Self {
        Self::vector((0..dim).map(|j| ScalarField::constant(if i == j { 1.0 } else { 0.0 })).collect())
    }
    pub fn dim(&self) -> usize {
        self.0.dim
    }
    pub fn degree(&self) -> usize {
        self.0.degree
    }
    pub fn eval(&self, x: &[Jet2]) -> Multivector {
        Multivector::from_comps(self.0.dim, self.0.degree, self.0.eval_comps(x))
    }
    pub fn at(&self, p: &[f64]) -> Multivector {
        self.eval(&Jet2::seed(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_carries_chain_rule() {
        // f(u, v) = u v composed with (x) -> (x^2, sin x)
        let f = ScalarField::new(|x| &x[0] * &x[1]);
        let m = Map::new(vec![ScalarField::new(|x| x[0].powi(2)), ScalarField::new(|x| x[0].sin())]);
        let g = f.compose(&m);
        let x = 0.8f64;
        let j = g.at(&[x]);
        let exact = 2.0 * x * x.sin() + x * x * x.cos();
        assert!((j.grad[0] - exact).abs() < 1e-14);
    }

    #[test]
    fn jacobian_of_polar_map() {
        let m = Map::new(vec![
            ScalarField::new(|x| &x[0] * x[1].cos()),
            ScalarField::new(|x| &x[0] * x[1].sin()),
        ]);
        let j = m.jacobian(&[2.0, 0.0]);
        assert_eq!(j, vec![vec![1.0, 0.0], vec![0.0, 2.0]]);
    }
}
