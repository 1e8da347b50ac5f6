//! Sections of `TP + T*P` and of `E1(Q) = (TQ x R) + (T*Q x R)`, their
//! pairings and brackets, and validation of candidate structures.
//!
//! Flattened layout of a section value: tangent block then cotangent block.
//! Dirac: `[X, xi]`. Extended: `[X, f, xi, g]`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::calculus::{
    apply_vector, bivector_contract, exterior_derivative, interior, lie_bracket, lie_derivative, pair, schouten,
    schouten_ve, wedge_multivectors, Form, Multivector,
};
use crate::chart::Chart;
use crate::error::FrameError;
use crate::field::{FormField, Map, MultivectorField, ScalarField};
use crate::jet::Jet2;
use crate::linalg::{lstsq, matrix_from_columns, null_space, orth, rank, span_residual};
use crate::report::{max_residual, CheckRecord};

fn d0(f: &Jet2, n: usize) -> Form {
    exterior_derivative(&Form::function(n, f.clone())).expect("degree 0")
}

fn i(x: &Multivector, a: &Form) -> Jet2 {
    pair(a, x)
}

/// Section value with jets, common interface for both geometries.
pub trait Section: Clone + Send + Sync + 'static {
    /// Number of extra `R` factors in each block (0 or 1).
    const EXTRA: usize;
    fn dim(&self) -> usize;
    fn pair_plus(&self, o: &Self) -> Jet2;
    fn pair_minus(&self, o: &Self) -> Jet2;
    fn bracket(&self, o: &Self) -> Self;
    fn flatten(&self) -> Vec<f64>;
    fn anchor(&self) -> &Multivector;
    fn plus(&self, o: &Self) -> Self;
    fn scaled(&self, c: &Jet2) -> Self;
}

#[derive(Clone, Debug)]
pub struct DiracSection {
    pub x: Multivector,
    pub xi: Form,
}

impl DiracSection {
    pub fn new(x: Multivector, xi: Form) -> Self {
        DiracSection { x, xi }
    }
}

impl Section for DiracSection {
    const EXTRA: usize = 0;

    fn dim(&self) -> usize {
        self.x.dim()
    }

    fn pair_plus(&self, o: &Self) -> Jet2 {
        (i(&o.x, &self.xi) + i(&self.x, &o.xi)).scale(0.5)
    }

    fn pair_minus(&self, o: &Self) -> Jet2 {
        (i(&o.x, &self.xi) - i(&self.x, &o.xi)).scale(0.5)
    }

    fn bracket(&self, o: &Self) -> Self {
        courant_bracket(self, o)
    }

    fn flatten(&self) -> Vec<f64> {
        let mut v = self.x.values();
        v.extend(self.xi.values());
        v
    }

    fn anchor(&self) -> &Multivector {
        &self.x
    }

    fn plus(&self, o: &Self) -> Self {
        DiracSection { x: &self.x + &o.x, xi: &self.xi + &o.xi }
    }

    fn scaled(&self, c: &Jet2) -> Self {
        DiracSection { x: self.x.scale_jet(c), xi: self.xi.scale_jet(c) }
    }
}

#[derive(Clone, Debug)]
pub struct E1Section {
    pub x: Multivector,
    pub f: Jet2,
    pub xi: Form,
    pub g: Jet2,
}

impl E1Section {
    pub fn new(x: Multivector, f: Jet2, xi: Form, g: Jet2) -> Self {
        E1Section { x, f, xi, g }
    }

    pub fn zero(n: usize) -> Self {
        E1Section {
            x: Multivector::zero(n, 1),
            f: Jet2::constant(0.0),
            xi: Form::zero(n, 1),
            g: Jet2::constant(0.0),
        }
    }

    /// `(X, 0) + (xi, 0)`.
    pub fn from_dirac(s: &DiracSection) -> Self {
        E1Section { x: s.x.clone(), f: Jet2::constant(0.0), xi: s.xi.clone(), g: Jet2::constant(0.0) }
    }

    pub fn from_values(n: usize, v: &[f64]) -> Self {
        let c = |k: usize| Jet2::constant(v[k]);
        E1Section {
            x: Multivector::vector((0..n).map(c).collect()),
            f: c(n),
            xi: Form::one((n + 1..2 * n + 1).map(c).collect()),
            g: c(2 * n + 1),
        }
    }
}

impl Section for E1Section {
    const EXTRA: usize = 1;

    fn dim(&self) -> usize {
        self.x.dim()
    }

    fn pair_plus(&self, o: &Self) -> Jet2 {
        (i(&o.x, &self.xi) + i(&self.x, &o.xi) + &o.g * &self.f + &self.g * &o.f).scale(0.5)
    }

    fn pair_minus(&self, o: &Self) -> Jet2 {
        (i(&o.x, &self.xi) - i(&self.x, &o.xi)).scale(0.5)
    }

    fn bracket(&self, o: &Self) -> Self {
        extended_courant_bracket(self, o)
    }

    fn flatten(&self) -> Vec<f64> {
        let mut v = self.x.values();
        v.push(self.f.value);
        v.extend(self.xi.values());
        v.push(self.g.value);
        v
    }

    fn anchor(&self) -> &Multivector {
        &self.x
    }

    fn plus(&self, o: &Self) -> Self {
        E1Section { x: &self.x + &o.x, f: &self.f + &o.f, xi: &self.xi + &o.xi, g: &self.g + &o.g }
    }

    fn scaled(&self, c: &Jet2) -> Self {
        E1Section { x: self.x.scale_jet(c), f: &self.f * c, xi: self.xi.scale_jet(c), g: &self.g * c }
    }
}

pub fn pair_plus<S: Section>(a: &S, b: &S) -> Jet2 {
    a.pair_plus(b)
}

pub fn pair_minus<S: Section>(a: &S, b: &S) -> Jet2 {
    a.pair_minus(b)
}

pub fn courant_bracket(a: &DiracSection, b: &DiracSection) -> DiracSection {
    let n = a.dim();
    let x = lie_bracket(&a.x, &b.x);
    let skew = i(&b.x, &a.xi) - i(&a.x, &b.xi);
    let xi = &(&lie_derivative(&a.x, &b.xi).expect("1-form") - &lie_derivative(&b.x, &a.xi).expect("1-form"))
        + &d0(&skew, n).scale(0.5);
    DiracSection { x, xi }
}

pub fn extended_courant_bracket(a: &E1Section, b: &E1Section) -> E1Section {
    let n = a.dim();
    let (x1, f1, xi1, g1) = (&a.x, &a.f, &a.xi, &a.g);
    let (x2, f2, xi2, g2) = (&b.x, &b.f, &b.xi, &b.g);
    let x = lie_bracket(x1, x2);
    let f = apply_vector(x1, f2) - apply_vector(x2, f1);
    let skew = i(x2, xi1) - i(x1, xi2);
    let mut xi = &lie_derivative(x1, xi2).expect("1-form") - &lie_derivative(x2, xi1).expect("1-form");
    xi = &xi + &d0(&skew, n).scale(0.5);
    xi = &xi + &(&xi2.scale_jet(f1) - &xi1.scale_jet(f2));
    let mixed = &(&d0(f1, n).scale_jet(g2) - &d0(f2, n).scale_jet(g1))
        - &(&d0(g2, n).scale_jet(f1) - &d0(g1, n).scale_jet(f2));
    xi = &xi + &mixed.scale(0.5);
    let g = apply_vector(x1, g2) - apply_vector(x2, g1) + (skew - f2 * g1 + f1 * g2).scale(0.5);
    E1Section { x, f, xi, g }
}

type FrameFn<S> = Arc<dyn Fn(&[Jet2]) -> Vec<S> + Send + Sync>;

/// A candidate structure, given as a rule producing spanning sections.
#[derive(Clone)]
pub struct Frame<S> {
    pub chart: Chart,
    eval: FrameFn<S>,
}

impl<S: Section> Frame<S> {
    pub fn new(chart: Chart, f: impl Fn(&[Jet2]) -> Vec<S> + Send + Sync + 'static) -> Self {
        Frame { chart, eval: Arc::new(f) }
    }

    pub fn eval(&self, x: &[Jet2]) -> Vec<S> {
        (self.eval)(x)
    }

    pub fn at(&self, p: &[f64]) -> Vec<S> {
        self.eval(&Jet2::seed(p))
    }

    /// Section values at `p`. Jets are seeded because some frames
    /// differentiate their data (`graph_of_1form` uses `d sigma`).
    pub fn values_at(&self, p: &[f64]) -> Vec<S> {
        self.at(p)
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Maximal isotropic rank: `dim` for Dirac, `dim + 1` for Jacobi-Dirac.
    pub fn expected_rank(&self) -> usize {
        self.dim() + S::EXTRA
    }

    /// Length of a flattened section value.
    pub fn ambient_dim(&self) -> usize {
        2 * (self.dim() + S::EXTRA)
    }

    pub fn matrix_of(&self, sections: &[S]) -> DMatrix<f64> {
        let cols: Vec<Vec<f64>> = sections.iter().map(Section::flatten).collect();
        matrix_from_columns(&cols, self.ambient_dim())
    }

    pub fn matrix_at(&self, p: &[f64]) -> DMatrix<f64> {
        self.matrix_of(&self.values_at(p))
    }

    /// Frame matrix at `p`, or an error if its rank is not maximal.
    pub fn checked_matrix_at(&self, p: &[f64]) -> Result<DMatrix<f64>, FrameError> {
        let m = self.matrix_at(p);
        let r = rank(&m);
        if r != self.expected_rank() || m.ncols() != r {
            return Err(FrameError::RankDeficient { point: p.to_vec(), rank: r, expected: self.expected_rank() });
        }
        Ok(m)
    }

    /// Same sections expressed through the jets of another chart.
    pub fn compose(&self, chart: Chart, map: &Map) -> Self
    where
        S: Sized,
    {
        let me = self.clone();
        let m = map.clone();
        Frame::new(chart, move |x| me.eval(&m.eval(x)))
    }
}

#[derive(Clone, Debug)]
pub struct DiracSectionField {
    pub x: MultivectorField,
    pub xi: FormField,
}

impl DiracSectionField {
    pub fn eval(&self, p: &[Jet2]) -> DiracSection {
        DiracSection { x: self.x.eval(p), xi: self.xi.eval(p) }
    }
}

#[derive(Clone, Debug)]
pub struct E1SectionField {
    pub x: MultivectorField,
    pub f: ScalarField,
    pub xi: FormField,
    pub g: ScalarField,
}

impl E1SectionField {
    pub fn eval(&self, p: &[Jet2]) -> E1Section {
        E1Section { x: self.x.eval(p), f: self.f.eval(p), xi: self.xi.eval(p), g: self.g.eval(p) }
    }
}

pub fn dirac_frame_from_fields(chart: Chart, fields: Vec<DiracSectionField>) -> Frame<DiracSection> {
    Frame::new(chart, move |p| fields.iter().map(|s| s.eval(p)).collect())
}

pub fn e1_frame_from_fields(chart: Chart, fields: Vec<E1SectionField>) -> Frame<E1Section> {
    Frame::new(chart, move |p| fields.iter().map(|s| s.eval(p)).collect())
}

fn unit(n: usize, k: usize) -> Vec<Jet2> {
    (0..n).map(|j| Jet2::constant(if j == k { 1.0 } else { 0.0 })).collect()
}

/// `{X + omega(X, .)}`.
pub fn graph_of_2form(chart: Chart, omega: FormField) -> Frame<DiracSection> {
    let n = chart.dim();
    Frame::new(chart, move |p| {
        let w = omega.eval(p);
        (0..n)
            .map(|k| {
                let x = Multivector::vector(unit(n, k));
                let xi = interior(&x, &w).expect("2-form");
                DiracSection { x, xi }
            })
            .collect()
    })
}

/// `{L(., xi) + xi}`, without checking the Poisson condition.
pub fn graph_of_bivector(chart: Chart, lambda: MultivectorField) -> Frame<DiracSection> {
    let n = chart.dim();
    Frame::new(chart, move |p| {
        let l = lambda.eval(p);
        (0..n)
            .map(|k| {
                let xi = unit(n, k);
                DiracSection { x: bivector_contract(&l, &xi), xi: Form::one(xi) }
            })
            .collect()
    })
}

/// Largest `|[L, L]|` over samples.
pub fn poisson_residual(lambda: &MultivectorField, points: &[Vec<f64>]) -> f64 {
    max_residual(points.par_iter().map(|p| {
        let l = lambda.at(p);
        schouten(&l, &l).max_abs()
    }).collect::<Vec<_>>())
}

/// Largest of `|[E, L]|` and `|[L, L] - 2 E^L|` over samples.
pub fn jacobi_residual(lambda: &MultivectorField, e: &MultivectorField, points: &[Vec<f64>]) -> f64 {
    max_residual(points.par_iter().map(|p| {
        let l = lambda.at(p);
        let ev = e.at(p);
        let ll = schouten(&l, &l);
        let el = wedge_multivectors(&ev, &l).expect("degree 3");
        let r1 = schouten_ve(&ev, &l).max_abs();
        let r2 = (&ll - &el.scale(2.0)).max_abs();
        r1.max(r2)
    }).collect::<Vec<_>>())
}

pub fn graph_of_bivector_checked(
    chart: Chart,
    lambda: MultivectorField,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<Frame<DiracSection>, FrameError> {
    let r = poisson_residual(&lambda, points);
    if !(r <= tol) {
        return Err(FrameError::NotPoisson { residual: r });
    }
    Ok(graph_of_bivector(chart, lambda))
}

/// `{(X, f) + (i_X d sigma + f sigma, -sigma(X))}`.
pub fn graph_of_1form(chart: Chart, sigma: FormField) -> Frame<E1Section> {
    let n = chart.dim();
    Frame::new(chart, move |p| {
        let s = sigma.eval(p);
        let ds = exterior_derivative(&s).expect("1-form");
        let mut out: Vec<E1Section> = (0..n)
            .map(|k| {
                let x = Multivector::vector(unit(n, k));
                let xi = interior(&x, &ds).expect("2-form");
                let g = -pair(&s, &x);
                E1Section { x, f: Jet2::constant(0.0), xi, g }
            })
            .collect();
        out.push(E1Section { x: Multivector::zero(n, 1), f: Jet2::constant(1.0), xi: s, g: Jet2::constant(0.0) });
        out
    })
}

/// `{(L(., xi) - g E, i_E xi) + (xi, g)}`, without checking the pair.
pub fn graph_of_jacobi_pair(chart: Chart, lambda: MultivectorField, e: MultivectorField) -> Frame<E1Section> {
    let n = chart.dim();
    Frame::new(chart, move |p| {
        let l = lambda.eval(p);
        let ev = e.eval(p);
        let mut out: Vec<E1Section> = (0..n)
            .map(|k| {
                let xi = unit(n, k);
                E1Section {
                    x: bivector_contract(&l, &xi),
                    f: ev.components()[k].clone(),
                    xi: Form::one(xi),
                    g: Jet2::constant(0.0),
                }
            })
            .collect();
        out.push(E1Section { x: -&ev, f: Jet2::constant(0.0), xi: Form::zero(n, 1), g: Jet2::constant(1.0) });
        out
    })
}

pub fn graph_of_jacobi_pair_checked(
    chart: Chart,
    lambda: MultivectorField,
    e: MultivectorField,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<Frame<E1Section>, FrameError> {
    let r = jacobi_residual(&lambda, &e, points);
    if !(r <= tol) {
        return Err(FrameError::NotJacobiPair { residual: r });
    }
    Ok(graph_of_jacobi_pair(chart, lambda, e))
}

/// `L^c = {(X, 0) + (xi, g)}` for a Dirac structure `L`.
pub fn diracization(l: &Frame<DiracSection>) -> Frame<E1Section> {
    let l = l.clone();
    let n = l.dim();
    Frame::new(l.chart.clone(), move |p| {
        let mut out: Vec<E1Section> = l.eval(p).iter().map(E1Section::from_dirac).collect();
        out.push(E1Section { g: Jet2::constant(1.0), ..E1Section::zero(n) });
        out
    })
}

/// Isotropy: largest `|<s_i, s_j>_+|` over frame pairs and samples.
pub fn is_isotropic<S: Section>(frame: &Frame<S>, points: &[Vec<f64>], tol: f64) -> Result<CheckRecord, FrameError> {
    let per: Vec<Result<f64, FrameError>> = points
        .par_iter()
        .map(|p| {
            frame.checked_matrix_at(p)?;
            let s = frame.values_at(p);
            let mut m: f64 = 0.0;
            for a in 0..s.len() {
                for b in a..s.len() {
                    m = m.max(s[a].pair_plus(&s[b]).value.abs());
                }
            }
            Ok(m)
        })
        .collect();
    let vals = per.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(CheckRecord::new("isotropy", "<s_i, s_j>_+ = 0", max_residual(vals), tol, points.len()))
}

/// Residual of `target` against the span of `basis`, scaled by `1 + |target|`.
pub fn normalised_span_residual(basis: &DMatrix<f64>, target: &[f64]) -> f64 {
    let t = DVector::from_column_slice(target);
    span_residual(basis, &t) / (1.0 + t.norm())
}

/// Closure: every `[s_i, s_j]` lies in the pointwise span.
pub fn is_closed_under_bracket<S: Section>(
    frame: &Frame<S>,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<CheckRecord, FrameError> {
    let per: Vec<Result<f64, FrameError>> = points
        .par_iter()
        .map(|p| {
            let m = frame.checked_matrix_at(p)?;
            let s = frame.at(p);
            let mut worst: f64 = 0.0;
            for a in 0..s.len() {
                for b in a + 1..s.len() {
                    let br = s[a].bracket(&s[b]);
                    worst = worst.max(normalised_span_residual(&m, &br.flatten()));
                }
            }
            Ok(worst)
        })
        .collect();
    let vals = per.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(CheckRecord::new("closure", "[s_i, s_j] in span(s_k)", max_residual(vals), tol, points.len()))
}

/// `<[s_1, s_2], s_3>_+` is totally skew over frame triples.
pub fn skew_pairing_check<S: Section>(frame: &Frame<S>, points: &[Vec<f64>], tol: f64) -> CheckRecord {
    let vals: Vec<f64> = points
        .par_iter()
        .map(|p| {
            let s = frame.at(p);
            let k = s.len();
            let t = |a: usize, b: usize, c: usize| s[a].bracket(&s[b]).pair_plus(&s[c]).value;
            let mut worst: f64 = 0.0;
            for a in 0..k {
                for b in 0..k {
                    for c in 0..k {
                        let v = t(a, b, c);
                        worst = worst.max((v + t(b, a, c)).abs()).max((v + t(a, c, b)).abs());
                    }
                }
            }
            worst
        })
        .collect();
    CheckRecord::new("skew-pairing", "<[s1,s2],s3>_+ totally skew", max_residual(vals), tol, points.len())
}

/// Block-diagonal `diag(J, I_extra)`.
fn extended_jacobian(j: &[Vec<f64>], src: usize, extra: usize) -> DMatrix<f64> {
    let n = j.len();
    let mut m = DMatrix::zeros(n + extra, src + extra);
    for r in 0..n {
        for c in 0..src {
            m[(r, c)] = j[r][c];
        }
    }
    for e in 0..extra {
        m[(n + e, src + e)] = 1.0;
    }
    m
}

fn submersion_jacobian(pi: &Map, q: &[f64]) -> Result<Vec<Vec<f64>>, FrameError> {
    let j = pi.jacobian(q);
    let jm = DMatrix::from_fn(j.len(), q.len(), |r, c| j[r][c]);
    if rank(&jm) != j.len() {
        return Err(FrameError::Invalid(format!("map is not a submersion at {q:?}")));
    }
    Ok(j)
}

/// Basis of `{(pi_* X, f) + (mu, g) : (X, f) + (pi^* mu, g) in L_q}` at `pi(q)`.
pub fn pushforward<S: Section>(frame: &Frame<S>, pi: &Map, q: &[f64]) -> Result<DMatrix<f64>, FrameError> {
    let e = S::EXTRA;
    let big = q.len() + e;
    let j = submersion_jacobian(pi, q)?;
    let small = j.len() + e;
    let je = extended_jacobian(&j, q.len(), e);
    let f = frame.checked_matrix_at(q)?;
    let r = f.ncols();
    let f_tan = f.rows(0, big).into_owned();
    let f_cot = f.rows(big, big).into_owned();
    let mut sys = DMatrix::zeros(big, r + small);
    sys.view_mut((0, 0), (big, r)).copy_from(&f_cot);
    sys.view_mut((0, r), (big, small)).copy_from(&(-je.transpose()));
    let k = null_space(&sys);
    let mut out = DMatrix::zeros(2 * small, k.ncols());
    for c in 0..k.ncols() {
        let coef = k.column(c).rows(0, r).into_owned();
        let mu = k.column(c).rows(r, small).into_owned();
        let tan = &je * (&f_tan * coef);
        out.view_mut((0, c), (small, 1)).copy_from(&tan);
        out.view_mut((small, c), (small, 1)).copy_from(&mu);
    }
    Ok(orth(&out))
}

/// Basis of `{(Y, f) + (pi^* xi, g) : (pi_* Y, f) + (xi, g) in L_{pi(q)}}` at `q`.
pub fn pullback<S: Section>(frame: &Frame<S>, pi: &Map, q: &[f64]) -> Result<DMatrix<f64>, FrameError> {
    let e = S::EXTRA;
    let big = q.len() + e;
    let j = submersion_jacobian(pi, q)?;
    let small = j.len() + e;
    let je = extended_jacobian(&j, q.len(), e);
    let base = pi.values(q);
    let g = frame.checked_matrix_at(&base)?;
    let r = g.ncols();
    let g_tan = g.rows(0, small).into_owned();
    let g_cot = g.rows(small, small).into_owned();
    let mut sys = DMatrix::zeros(small, big + r);
    sys.view_mut((0, 0), (small, big)).copy_from(&je);
    sys.view_mut((0, big), (small, r)).copy_from(&(-g_tan));
    let k = null_space(&sys);
    let mut out = DMatrix::zeros(2 * big, k.ncols());
    for c in 0..k.ncols() {
        let y = k.column(c).rows(0, big).into_owned();
        let coef = k.column(c).rows(big, r).into_owned();
        let cot = je.transpose() * (&g_cot * coef);
        out.view_mut((0, c), (big, 1)).copy_from(&y);
        out.view_mut((big, c), (big, 1)).copy_from(&cot);
    }
    Ok(orth(&out))
}

/// Hamiltonian data of an admissible function at a point.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    /// `X_u`, followed by `phi_u` in the Jacobi-Dirac case.
    pub tangent: Vec<f64>,
    /// Cotangent target `du` (and `u`).
    pub target: Vec<f64>,
    /// Largest change of brackets along the solution's kernel.
    pub ambiguity: f64,
}

/// Solve for `(X_u, phi_u)` with `(X_u, phi_u) + (du, u)` in the span at `p`.
pub fn find_hamiltonian<S: Section>(
    frame: &Frame<S>,
    u: &ScalarField,
    p: &[f64],
    tol: f64,
) -> Result<Hamiltonian, FrameError> {
    let uj = u.at(p);
    hamiltonian_of_jet(frame, &uj, p, tol)
}

pub fn hamiltonian_of_jet<S: Section>(
    frame: &Frame<S>,
    uj: &Jet2,
    p: &[f64],
    tol: f64,
) -> Result<Hamiltonian, FrameError> {
    let e = S::EXTRA;
    let big = p.len() + e;
    let f = frame.checked_matrix_at(p)?;
    let f_tan = f.rows(0, big).into_owned();
    let f_cot = f.rows(big, big).into_owned();
    let mut target: Vec<f64> = (0..p.len()).map(|k| uj.d(k)).collect();
    if e == 1 {
        target.push(uj.value);
    }
    let t = DVector::from_column_slice(&target);
    let (c, r) = lstsq(&f_cot, &t);
    if !(r <= tol * (1.0 + t.norm())) {
        return Err(FrameError::NotAdmissible { point: p.to_vec(), residual: r });
    }
    let tangent = (&f_tan * c).iter().copied().collect();
    let k = null_space(&f_cot);
    let ambiguity = (0..k.ncols())
        .map(|j| (&f_tan * k.column(j)).dot(&t).abs())
        .fold(0.0, f64::max);
    Ok(Hamiltonian { tangent, target, ambiguity })
}

/// `{u, v} = X_v . u + u phi_v` (Dirac: `X_v . u`).
pub fn bracket_of_hamiltonians(u: &Hamiltonian, v: &Hamiltonian) -> f64 {
    v.tangent.iter().zip(&u.target).map(|(a, b)| a * b).sum()
}

/// Admissible bracket values at each point.
pub fn admissible_bracket<S: Section>(
    frame: &Frame<S>,
    u: &ScalarField,
    v: &ScalarField,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<f64>, FrameError> {
    points
        .par_iter()
        .map(|p| {
            let hu = find_hamiltonian(frame, u, p, tol)?;
            let hv = find_hamiltonian(frame, v, p, tol)?;
            Ok(bracket_of_hamiltonians(&hu, &hv))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::field;

    fn c(v: f64) -> Jet2 {
        Jet2::constant(v)
    }

    #[test]
    fn pairings_on_simple_sections() {
        let s = DiracSection::new(Multivector::vector(vec![c(1.0)]), Form::one(vec![c(1.0)]));
        assert_eq!(s.pair_plus(&s).value, 1.0);
        assert_eq!(s.pair_minus(&s).value, 0.0);
        let a = DiracSection::new(Multivector::vector(vec![c(1.0)]), Form::one(vec![c(0.0)]));
        let b = DiracSection::new(Multivector::vector(vec![c(0.0)]), Form::one(vec![c(1.0)]));
        assert_eq!(a.pair_minus(&b).value, -0.5);
        assert_eq!(b.pair_minus(&a).value, 0.5);
        let f1 = E1Section { f: c(1.0), ..E1Section::zero(1) };
        let g1 = E1Section { g: c(1.0), ..E1Section::zero(1) };
        assert_eq!(f1.pair_plus(&g1).value, 0.5);
    }

    #[test]
    fn bracket_of_dx_with_x_dy() {
        // [d/dx + 0, 0 + x dy] = 0 + dy
        let v = Jet2::seed(&[0.3, 0.8]);
        let a = DiracSection::new(Multivector::vector(vec![c(1.0), c(0.0)]), Form::zero(2, 1));
        let b = DiracSection::new(Multivector::zero(2, 1), Form::one(vec![c(0.0), v[0].clone()]));
        let br = courant_bracket(&a, &b);
        assert_eq!(br.flatten(), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn extended_bracket_term_by_term() {
        // Constant-free check: X1 = d/dx, f1 = x, xi1 = 0, g1 = 1; X2 = 0, f2 = 0, xi2 = dx, g2 = x on R.
        // Tangent: ([X1,X2], X1 f2 - X2 f1) = (0, 0).
        // Form: L_X1 dx = 0; d(i_X2 xi1 - i_X1 xi2)/2 = d(-1)/2 = 0; f1 xi2 = x dx;
        //   (g2 df1 - g1 df2 - f1 dg2 + f2 dg1)/2 = (x dx - 0 - x dx + 0)/2 = 0.
        // Scalar: X1 g2 - X2 g1 + (i_X2 xi1 - i_X1 xi2 - f2 g1 + f1 g2)/2 = 1 + (0 - 1 - 0 + x^2)/2.
        let x = 1.7;
        let v = Jet2::seed(&[x]);
        let a = E1Section::new(Multivector::vector(vec![c(1.0)]), v[0].clone(), Form::zero(1, 1), c(1.0));
        let b = E1Section::new(Multivector::zero(1, 1), c(0.0), Form::one(vec![c(1.0)]), v[0].clone());
        let br = extended_courant_bracket(&a, &b);
        let exp = [0.0, 0.0, x, 1.0 + (x * x - 1.0) / 2.0];
        for (u, w) in br.flatten().iter().zip(exp) {
            assert!((u - w).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let chart = Chart::new(&["x", "y"], &[(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let frame = Frame::new(chart.clone(), |_| {
            let s = DiracSection::new(Multivector::vector(vec![c(1.0), c(0.0)]), Form::zero(2, 1));
            vec![s.clone(), s.scaled(&c(2.0))]
        });
        let pts = chart.sample(3, 1);
        assert!(matches!(is_isotropic(&frame, &pts, 1e-9), Err(FrameError::RankDeficient { .. })));
    }

    #[test]
    fn poisson_bracket_sign() {
        let chart = Chart::new(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
        let l = MultivectorField::new(2, 2, vec![ScalarField::constant(1.0)]);
        let frame = graph_of_bivector(chart.clone(), l);
        let pts = chart.sample(5, 3);
        let x = field("x", &["x", "y"]).unwrap();
        let y = field("y", &["x", "y"]).unwrap();
        for b in admissible_bracket(&frame, &x, &y, &pts, 1e-10).unwrap() {
            assert!((b - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diracization_of_cotangent() {
        let chart = Chart::new(&["x"], &[(-1.0, 1.0)]).unwrap();
        let l = graph_of_bivector(chart.clone(), MultivectorField::zero(1, 2));
        let lc = diracization(&l);
        let m = lc.matrix_at(&[0.2]);
        let expect = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert!(crate::linalg::subspace_mismatch(&m, &expect) < 1e-15);
    }
}
