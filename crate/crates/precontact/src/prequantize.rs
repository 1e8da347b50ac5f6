//! The Jacobi-Dirac structure `Lbar` on the circle bundle `Q = P x S^1`
//! induced by a prequantized Dirac manifold `(P, L, Omega, beta)`.
//!
//! Chart of `Q`: the coordinates of `P` followed by an angle `theta` of
//! period 1, `E = d/dtheta`, and `sigma = dtheta + pi^* a` with `da = Omega`.
//! `beta = 2 <A + alpha, .>_+` restricted to `L`, with `A + alpha` isotropic.
//!
//! Sections of the trivial line bundle `K` are complex functions `s` on `P`.
//! The covariant derivative is `nabla_X s = X(s) + 2 pi i a(X) s`, whose
//! curvature is `2 pi i Omega`, and `F_S = Re(exp(2 pi i theta) conj(s))`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::calculus::{apply_vector, exterior_derivative, interior, pair, Form, Multivector};
use crate::chart::Chart;
use crate::courant::{
    bracket_of_hamiltonians, courant_bracket, graph_of_2form, graph_of_bivector, hamiltonian_of_jet, DiracSection,
    E1Section, Frame, Section,
};
use crate::error::FrameError;
use crate::field::{FormField, MultivectorField, ScalarField};
use crate::jet::Jet2;
use crate::linalg::{lstsq, matrix_from_columns, null_space, orth, span_residual, subspace_mismatch};
use crate::report::{max_residual, CheckRecord};

const TAU: f64 = 2.0 * PI;

#[derive(Clone)]
pub struct PreqInput {
    pub p_chart: Chart,
    pub l: Frame<DiracSection>,
    pub omega: FormField,
    pub a: MultivectorField,
    pub alpha: FormField,
    /// Connection potential `a` with `sigma = dtheta + pi^* a`.
    pub potential: FormField,
}

/// A complex-valued jet.
#[derive(Clone, Debug)]
pub struct CJet {
    pub re: Jet2,
    pub im: Jet2,
}

impl CJet {
    pub fn new(re: Jet2, im: Jet2) -> Self {
        CJet { re, im }
    }
    fn add(&self, o: &CJet) -> CJet {
        CJet::new(&self.re + &o.re, &self.im + &o.im)
    }
    fn sub(&self, o: &CJet) -> CJet {
        CJet::new(&self.re - &o.re, &self.im - &o.im)
    }
    fn neg(&self) -> CJet {
        CJet::new(-&self.re, -&self.im)
    }
    /// Multiply by `i c` for a real jet `c`.
    fn times_i(&self, c: &Jet2) -> CJet {
        CJet::new(-(&self.im * c), &self.re * c)
    }
    fn apply(&self, x: &Multivector) -> CJet {
        CJet::new(apply_vector(x, &self.re), apply_vector(x, &self.im))
    }
    pub fn abs(&self) -> f64 {
        self.re.value.hypot(self.im.value)
    }
}

/// `F_S(p, theta) = Re(exp(2 pi i theta) conj(s(p)))`.
pub fn f_of(s: &CJet, theta: &Jet2) -> Jet2 {
    let ang = theta.scale(TAU);
    &ang.cos() * &s.re + &ang.sin() * &s.im
}

impl PreqInput {
    pub fn n(&self) -> usize {
        self.p_chart.dim()
    }

    /// `P x [0, 1]` with the angle last.
    pub fn q_chart(&self) -> Chart {
        let mut names = self.p_chart.coord_names.clone();
        let mut angle = "theta".to_string();
        while names.contains(&angle) {
            angle.push('_');
        }
        names.push(angle.clone());
        let mut dom = self.p_chart.domain.clone();
        dom.push((0.0, 1.0));
        Chart::from_parts(names, dom).expect("valid").with_period(&angle, 1.0)
    }

    pub fn reeb(&self) -> Multivector {
        let n = self.n();
        Multivector::vector((0..=n).map(|k| Jet2::constant(if k == n { 1.0 } else { 0.0 })).collect())
    }

    pub fn sigma_at(&self, q: &[Jet2]) -> Form {
        let n = self.n();
        let a = self.potential.eval(&q[..n]);
        let mut c = a.covector().to_vec();
        c.push(Jet2::constant(1.0));
        Form::one(c)
    }

    /// Horizontal lift `X^H = X - a(X) E` of a vector on `P`.
    pub fn lift(&self, x: &Multivector, q: &[Jet2]) -> Multivector {
        let a = self.potential.eval(&q[..self.n()]);
        let mut c = x.components().to_vec();
        c.push(-pair(&a, x));
        Multivector::vector(c)
    }

    fn pull(xi: &Form) -> Form {
        let mut c = xi.covector().to_vec();
        c.push(Jet2::constant(0.0));
        Form::one(c)
    }

    /// `beta(X + xi) = alpha(X) + xi(A)` for given values of `A`, `alpha`.
    pub fn beta_with(s: &DiracSection, a: &Multivector, alpha: &Form) -> Jet2 {
        pair(alpha, &s.x) + pair(&s.xi, a)
    }

    pub fn beta(&self, s: &DiracSection, p: &[Jet2]) -> Jet2 {
        Self::beta_with(s, &self.a.eval(p), &self.alpha.eval(p))
    }

    /// `h_Q(X, xi, g) = X^H + (beta(X + xi) - g) E`.
    pub fn anchor_hq(&self, s: &DiracSection, g: &Jet2, q: &[Jet2]) -> Multivector {
        let b = self.beta(s, &q[..self.n()]);
        &self.lift(&s.x, q) + &self.reeb().scale_jet(&(b - g))
    }

    /// `I(X, xi, g) = (h_Q(X, xi, g), 0) + (pi^* xi, g)`.
    pub fn lift_i(&self, s: &DiracSection, g: &Jet2, q: &[Jet2]) -> E1Section {
        E1Section::new(self.anchor_hq(s, g, q), Jet2::constant(0.0), Self::pull(&s.xi), g.clone())
    }

    /// `(-E, 0) + (0, 1)`.
    pub fn minus_reeb_section(&self) -> E1Section {
        let m = self.n() + 1;
        E1Section::new(-self.reeb(), Jet2::constant(0.0), Form::zero(m, 1), Jet2::constant(1.0))
    }

    fn lbar_sections(&self, q: &[Jet2], a: &Multivector, alpha: &Form, with_third: bool) -> Vec<E1Section> {
        let n = self.n();
        let p = &q[..n];
        let e = self.reeb();
        let mut out: Vec<E1Section> = self
            .l
            .eval(p)
            .iter()
            .map(|s| {
                let b = Self::beta_with(s, a, alpha);
                let x = &self.lift(&s.x, q) + &e.scale_jet(&b);
                E1Section::new(x, Jet2::constant(0.0), Self::pull(&s.xi), Jet2::constant(0.0))
            })
            .collect();
        out.push(self.minus_reeb_section());
        if with_third {
            let x = -self.lift(a, q);
            let xi = &self.sigma_at(q) - &Self::pull(alpha);
            out.push(E1Section::new(x, Jet2::constant(1.0), xi, Jet2::constant(0.0)));
        }
        out
    }

    /// The Jacobi-Dirac structure on `Q` from the smooth `(A, alpha)`.
    pub fn build_lbar(&self) -> Frame<E1Section> {
        let me = self.clone();
        Frame::new(self.q_chart(), move |q| {
            let p = &q[..me.n()];
            me.lbar_sections(q, &me.a.eval(p), &me.alpha.eval(p), true)
        })
    }

    /// `Lbar_0`: the lifts of `L` and `(-E, 0) + (0, 1)`.
    pub fn build_lbar0(&self) -> Frame<E1Section> {
        let me = self.clone();
        Frame::new(self.q_chart(), move |q| {
            let p = &q[..me.n()];
            me.lbar_sections(q, &me.a.eval(p), &me.alpha.eval(p), false)
        })
    }

    /// Pointwise `Lbar` from values of `(A, alpha)` at `pi(q)`.
    pub fn lbar_matrix_with(&self, q: &[f64], a: &[f64], alpha: &[f64]) -> DMatrix<f64> {
        let qj = Jet2::seed(q);
        let av = Multivector::vector(a.iter().map(|&v| Jet2::constant(v)).collect());
        let alv = Form::one(alpha.iter().map(|&v| Jet2::constant(v)).collect());
        let secs = self.lbar_sections(&qj, &av, &alv, true);
        let cols: Vec<Vec<f64>> = secs.iter().map(Section::flatten).collect();
        matrix_from_columns(&cols, 2 * (self.n() + 2))
    }

    /// Values `beta(s_k)` on the frame of `L` at `p`.
    pub fn beta_values(&self, p: &[f64]) -> Vec<f64> {
        let pj = Jet2::seed(p);
        self.l.eval(&pj).iter().map(|s| self.beta(s, &pj).value).collect()
    }
}

/// Pointwise isotropic `A + alpha` with `2 <A + alpha, s_k>_+ = b_k`.
///
/// Least-norm solution, then an isotropy correction along `L`.
pub fn solve_a_alpha(l: &Frame<DiracSection>, b: &[f64], p: &[f64]) -> Result<(Vec<f64>, Vec<f64>), FrameError> {
    let n = p.len();
    let f = l.checked_matrix_at(p)?;
    let r = f.ncols();
    // Row k: v_xi(X_k) + xi_k(v_X).
    let m = DMatrix::from_fn(r, 2 * n, |k, j| if j < n { f[(n + j, k)] } else { f[(j - n, k)] });
    let bv = DVector::from_column_slice(b);
    let (v0, res) = lstsq(&m, &bv);
    if !(res <= 1e-10 * (1.0 + bv.norm())) {
        return Err(FrameError::Invalid(format!("beta equations unsolvable at {p:?}: residual {res:e}")));
    }
    let q0: f64 = (0..n).map(|j| v0[j] * v0[n + j]).sum();
    let bn2 = bv.norm_squared();
    let mut v = v0.clone();
    if q0 != 0.0 {
        if bn2 == 0.0 {
            return Err(FrameError::Invalid("isotropy correction impossible with beta = 0".into()));
        }
        let c = bv.scale(-q0 / bn2);
        v += &f * c;
    }
    Ok((v.rows(0, n).iter().copied().collect(), v.rows(n, n).iter().copied().collect()))
}

/// Residuals of a pointwise `(A, alpha)`: equations and isotropy.
pub fn a_alpha_residual(l: &Frame<DiracSection>, b: &[f64], p: &[f64], a: &[f64], alpha: &[f64]) -> f64 {
    let secs = l.values_at(p);
    let mut worst: f64 = 0.0;
    for (s, bk) in secs.iter().zip(b) {
        let lhs: f64 = (0..p.len()).map(|j| alpha[j] * s.x.values()[j] + s.xi.values()[j] * a[j]).sum();
        worst = worst.max((lhs - bk).abs());
    }
    let iso: f64 = a.iter().zip(alpha).map(|(x, y)| x * y).sum();
    worst.max(iso.abs())
}

fn p_jets(q: &[Jet2], n: usize) -> &[Jet2] {
    &q[..n]
}

/// `Omega(rho s_i, rho s_j) - Upsilon(s_i, s_j) - d_L beta(s_i, s_j)` over frame
/// pairs, plus `dOmega = 0` and `da = Omega`.
pub fn check_preq_condition(input: &PreqInput, points: &[Vec<f64>], tol: f64) -> Vec<CheckRecord> {
    let cond: Vec<f64> = points
        .par_iter()
        .map(|p| {
            let pj = Jet2::seed(p);
            let s = input.l.eval(&pj);
            let w = input.omega.eval(&pj);
            let beta: Vec<Jet2> = s.iter().map(|x| input.beta(x, &pj)).collect();
            let mut worst: f64 = 0.0;
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    let om = pair(&interior(&s[i].x, &w).expect("2-form"), &s[j].x);
                    let ups = s[i].pair_minus(&s[j]);
                    let br = courant_bracket(&s[i], &s[j]);
                    let dl = apply_vector(&s[i].x, &beta[j]) - apply_vector(&s[j].x, &beta[i]) - input.beta(&br, &pj);
                    worst = worst.max((om.value - ups.value - dl.value).abs());
                }
            }
            worst
        })
        .collect();
    let closed: Vec<f64> = points
        .par_iter()
        .map(|p| {
            let w = input.omega.at(p);
            let dw = if w.dim() >= 3 { exterior_derivative(&w).expect("3-form").max_abs() } else { 0.0 };
            let da = exterior_derivative(&input.potential.at(p)).expect("2-form");
            dw.max((&da - &w).max_abs())
        })
        .collect();
    vec![
        CheckRecord::new(
            "preq-condition",
            "rho^* Omega = Upsilon + d_L beta",
            max_residual(cond),
            tol,
            points.len(),
        ),
        CheckRecord::new("preq-curvature", "dOmega = 0, da = Omega", max_residual(closed), tol, points.len()),
    ]
}

/// `Lbar` from the smooth `(A, alpha)` against `Lbar` from pointwise solutions.
pub fn independence_check(input: &PreqInput, points: &[Vec<f64>], tol: f64) -> Result<CheckRecord, FrameError> {
    let lbar = input.build_lbar();
    let n = input.n();
    let vals: Vec<Result<f64, FrameError>> = points
        .par_iter()
        .map(|q| {
            let p = &q[..n];
            let reference = lbar.checked_matrix_at(q)?;
            let b = input.beta_values(p);
            let (a, al) = solve_a_alpha(&input.l, &b, p)?;
            let mut worst = subspace_mismatch(&reference, &input.lbar_matrix_with(q, &a, &al));
            // A second solution: add l in L with beta(l) = 0.
            let f = input.l.checked_matrix_at(p)?;
            let k = null_space(&DMatrix::from_row_slice(1, b.len(), &b));
            if k.ncols() > 0 {
                let shift = &f * k.column(0);
                let a2: Vec<f64> = (0..n).map(|j| a[j] + shift[j]).collect();
                let al2: Vec<f64> = (0..n).map(|j| al[j] + shift[n + j]).collect();
                worst = worst.max(a_alpha_residual(&input.l, &b, p, &a2, &al2));
                worst = worst.max(subspace_mismatch(&reference, &input.lbar_matrix_with(q, &a2, &al2)));
            }
            worst = worst.max(a_alpha_residual(&input.l, &b, p, &a, &al));
            Ok(worst)
        })
        .collect();
    let vals = vals.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(CheckRecord::new(
        "independence",
        "Lbar independent of the isotropic A + alpha",
        max_residual(vals),
        tol,
        points.len(),
    ))
}

/// The maximal isotropic extensions of `Lbar_0` at a point.
#[derive(Clone, Debug)]
pub struct Extensions {
    pub bases: Vec<DMatrix<f64>>,
    /// Index of the extension containing `(0, 0) + (0, 1)`.
    pub with_unit_scalar: Option<usize>,
    /// Mismatch of the other extension against `Lbar`.
    pub other_vs_lbar: f64,
}

fn e1_gram(m: usize) -> DMatrix<f64> {
    let h = m + 1;
    DMatrix::from_fn(2 * h, 2 * h, |i, j| if (i < h) != (j < h) && i % h == j % h { 0.5 } else { 0.0 })
}

pub fn two_extensions(input: &PreqInput, q: &[f64]) -> Result<Extensions, FrameError> {
    let l0 = input.build_lbar0().matrix_at(q);
    let m = q.len();
    let g = e1_gram(m);
    let perp = null_space(&(l0.transpose() * &g));
    let qb = orth(&l0);
    let w = orth(&(&perp - &qb * (qb.transpose() * &perp)));
    if w.ncols() != 2 {
        return Err(FrameError::Invalid(format!("quotient has rank {}, expected 2", w.ncols())));
    }
    // Isotropic lines of a split form: sqrt(-l2) e1 +- sqrt(l1) e2.
    let eig = (w.transpose() * &g * &w).symmetric_eigen();
    let (i1, i2) = if eig.eigenvalues[0] > eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let (l1, l2) = (eig.eigenvalues[i1], eig.eigenvalues[i2]);
    let scale = l1.abs().max(l2.abs());
    if !(l1 > 1e-9 * scale && l2 < -1e-9 * scale) {
        return Err(FrameError::Invalid("induced pairing on the quotient is degenerate or definite".into()));
    }
    let (u1, u2) = (eig.eigenvectors.column(i1), eig.eigenvectors.column(i2));
    let lines: Vec<(f64, f64)> = [1.0, -1.0]
        .iter()
        .map(|sg| ((-l2).sqrt() * u1[0] + sg * l1.sqrt() * u2[0], (-l2).sqrt() * u1[1] + sg * l1.sqrt() * u2[1]))
        .collect();
    let bases: Vec<DMatrix<f64>> = lines
        .iter()
        .map(|&(c0, c1)| {
            let v = w.column(0) * c0 + w.column(1) * c1;
            let mut e = DMatrix::zeros(l0.nrows(), l0.ncols() + 1);
            e.view_mut((0, 0), (l0.nrows(), l0.ncols())).copy_from(&l0);
            e.set_column(l0.ncols(), &v);
            e
        })
        .collect();
    let mut unit = DVector::zeros(2 * (m + 1));
    unit[2 * m + 1] = 1.0;
    let with_unit_scalar = bases.iter().position(|e| span_residual(e, &unit) < 1e-9);
    let lbar = input.build_lbar().matrix_at(q);
    let other_vs_lbar = match with_unit_scalar {
        Some(i) => subspace_mismatch(&bases[1 - i], &lbar),
        None => f64::INFINITY,
    };
    Ok(Extensions { bases, with_unit_scalar, other_vs_lbar })
}

/// `[I(a), I(b)] = I([a, b]_Cou, 0) + <a, b>_- ((-E, 0) + (0, 1))` and
/// `[I(a), I(0, 0, 1)] = 0`, on frame sections and their rescalings.
pub fn morphism_check_i(input: &PreqInput, points: &[Vec<f64>], tol: f64) -> CheckRecord {
    let n = input.n();
    let vals: Vec<f64> = points
        .par_iter()
        .map(|q| {
            let qj = Jet2::seed(q);
            let pj = p_jets(&qj, n);
            let base = input.l.eval(pj);
            let h = (pj[0].scale(0.3)).exp();
            let mut secs = base.clone();
            secs.extend(base.iter().map(|s| s.scaled(&h)));
            let zero = Jet2::constant(0.0);
            let lifted: Vec<E1Section> = secs.iter().map(|s| input.lift_i(s, &zero, &qj)).collect();
            let unit = input.minus_reeb_section();
            let mut worst: f64 = 0.0;
            for i in 0..secs.len() {
                for j in 0..secs.len() {
                    let lhs = lifted[i].bracket(&lifted[j]);
                    let cou = courant_bracket(&secs[i], &secs[j]);
                    let ups = secs[i].pair_minus(&secs[j]);
                    let rhs = input.lift_i(&cou, &zero, &qj).plus(&unit.scaled(&ups));
                    let d: f64 =
                        lhs.flatten().iter().zip(rhs.flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                    worst = worst.max(d);
                }
                let z = lifted[i].bracket(&unit);
                worst = worst.max(z.flatten().iter().fold(0.0, |m, v| m.max(v.abs())));
            }
            worst
        })
        .collect();
    CheckRecord::new(
        "morphism-I",
        "[I(a), I(b)] = I([a,b]_Cou, 0) + <a,b>_- ((-E,0)+(0,1)); [I(a), I(0,0,1)] = 0",
        max_residual(vals),
        tol,
        points.len(),
    )
}

/// A section of `K` as real and imaginary parts on `P`.
#[derive(Clone, Debug)]
pub struct LineSection {
    pub re: ScalarField,
    pub im: ScalarField,
}

impl LineSection {
    pub fn eval(&self, p: &[Jet2]) -> CJet {
        CJet::new(self.re.eval(p), self.im.eval(p))
    }
}

impl PreqInput {
    /// `Dtilde_{(s, h)} S = rho(s)(S) + 2 pi i (a(rho s) - beta(s) + h) S`.
    pub fn d_tilde(&self, s: &DiracSection, h: &Jet2, sec: &CJet, p: &[Jet2]) -> CJet {
        let a = self.potential.eval(p);
        let c = pair(&a, &s.x) - self.beta(s, p) + h;
        sec.apply(&s.x).add(&sec.times_i(&c.scale(TAU)))
    }

    /// `nabla_X S = X(S) + 2 pi i a(X) S`.
    pub fn nabla(&self, x: &Multivector, sec: &CJet, p: &[Jet2]) -> CJet {
        let a = self.potential.eval(p);
        sec.apply(x).add(&sec.times_i(&pair(&a, x).scale(TAU)))
    }
}

/// The four bracket laws for admissible functions on `Q`, the field
/// identities they rest on, and the sign-corrected fourth law.
pub fn function_bracket_laws(
    input: &PreqInput,
    functions: &[ScalarField],
    s: &LineSection,
    points: &[Vec<f64>],
    tol: f64,
    field_tol: f64,
) -> Result<Vec<CheckRecord>, FrameError> {
    let n = input.n();
    let lbar = input.build_lbar();
    let per: Vec<Result<[f64; 7], FrameError>> = points
        .par_iter()
        .map(|q| {
            let qj = Jet2::seed(q);
            let pj = p_jets(&qj, n);
            let p = &q[..n];
            let theta = &qj[n];
            let sec = s.eval(pj);
            let fs = f_of(&sec, theta);
            let fis = f_of(&CJet::new(-&sec.im, sec.re.clone()), theta);
            let ham_q = |u: &Jet2| hamiltonian_of_jet(&lbar, u, q, 1e-8);
            let h_fs = ham_q(&fs)?;
            let h_one = ham_q(&Jet2::constant_dim(1.0, n + 1))?;
            let mut r = [0.0f64; 7];
            let pseed = Jet2::seed(p);
            for (k, f) in functions.iter().enumerate() {
                let fq = f.eval(pj);
                let h_f = ham_q(&fq)?;
                let hp_f = hamiltonian_of_jet(&input.l, &f.eval(&pseed), p, 1e-8)?;
                for g in functions.iter().skip(k) {
                    let h_g = ham_q(&g.eval(pj))?;
                    let hp_g = hamiltonian_of_jet(&input.l, &g.eval(&pseed), p, 1e-8)?;
                    let lhs = bracket_of_hamiltonians(&h_f, &h_g);
                    let rhs = bracket_of_hamiltonians(&hp_f, &hp_g);
                    r[0] = r[0].max((lhs - rhs).abs()).max(h_g.ambiguity);
                }
                // {pi^* f, F_S} = F_{-Dtilde_{(X_f, df, f)} S}
                let xf = Multivector::vector(hp_f.tangent.iter().map(|&v| Jet2::constant(v)).collect());
                let df = Form::one((0..n).map(|j| fq.partial(j)).collect());
                let w = input.d_tilde(&DiracSection::new(xf, df), &fq, &sec, pj);
                let rhs = f_of(&w.neg(), theta).value;
                r[1] = r[1].max((bracket_of_hamiltonians(&h_f, &h_fs) - rhs).abs());
                r[2] = r[2].max(bracket_of_hamiltonians(&h_f, &h_one).abs());
            }
            let b41 = bracket_of_hamiltonians(&h_fs, &h_one);
            r[3] = (b41 + TAU * fis.value).abs();
            r[4] = (b41 - TAU * fis.value).abs();
            // E(F_S) = -2 pi F_{iS}; X^H(F_S) = F_{nabla_X S}
            r[5] = (fs.d(n) + TAU * fis.value).abs();
            for k in 0..n {
                let x = Multivector::vector((0..n).map(|j| Jet2::constant(if j == k { 1.0 } else { 0.0 })).collect());
                let xh = input.lift(&x, &qj);
                let lhs = apply_vector(&xh, &fs).value;
                let rhs = f_of(&input.nabla(&x, &sec, pj), theta).value;
                r[6] = r[6].max((lhs - rhs).abs());
            }
            Ok(r)
        })
        .collect();
    let rows = per.into_iter().collect::<Result<Vec<_>, _>>()?;
    let col = |i: usize| max_residual(rows.iter().map(|r| r[i]));
    let m = points.len();
    Ok(vec![
        CheckRecord::new("bracket-law-1", "{pi^*f, pi^*g}_Q = pi^*{f,g}_P", col(0), tol, m),
        CheckRecord::new("bracket-law-2", "{pi^*f, F_S}_Q = F_{-Dtilde_{X_f,df,f} S}", col(1), tol, m),
        CheckRecord::new("bracket-law-3", "{pi^*f, 1}_Q = 0", col(2), tol, m),
        CheckRecord::new("bracket-law-4", "{F_S, 1}_Q = -2 pi F_{iS}", col(3), tol, m).with_note(
            "contradicts E(F_S) = -2 pi F_{iS} together with (-E,0)+(0,1) in Lbar, which give {F_S,1} = -E(F_S)",
        ),
        CheckRecord::new("bracket-law-4-sign", "{F_S, 1}_Q = -E(F_S) = 2 pi F_{iS}", col(4), tol, m),
        CheckRecord::new("reeb-on-F_S", "E(F_S) = -2 pi F_{iS}", col(5), field_tol, m),
        CheckRecord::new("lift-on-F_S", "X^H(F_S) = F_{nabla_X S}", col(6), field_tol, m),
    ])
}

/// Curvature of `Dtilde` on `L +_Upsilon R` over frame pairs, including
/// rescaled sections.
pub fn flat_connection_check(input: &PreqInput, s: &LineSection, points: &[Vec<f64>], tol: f64) -> CheckRecord {
    let n = input.n();
    let vals: Vec<f64> = points
        .par_iter()
        .map(|p| {
            let pj = Jet2::seed(p);
            let sec = s.eval(&pj);
            let zero_s = DiracSection::new(Multivector::zero(n, 1), Form::zero(n, 1));
            let h = pj[0].scale(0.7).sin() + 2.0;
            let mut elems: Vec<(DiracSection, Jet2)> =
                input.l.eval(&pj).into_iter().map(|x| (x, Jet2::constant(0.0))).collect();
            let scaled: Vec<(DiracSection, Jet2)> = elems.iter().map(|(x, _)| (x.scaled(&h), h.clone())).collect();
            elems.extend(scaled);
            elems.push((zero_s, Jet2::constant(1.0)));
            let mut worst: f64 = 0.0;
            for (a1, h1) in &elems {
                for (a2, h2) in &elems {
                    let d2 = input.d_tilde(a2, h2, &sec, &pj);
                    let d1 = input.d_tilde(a1, h1, &sec, &pj);
                    let d12 = input.d_tilde(a1, h1, &d2, &pj);
                    let d21 = input.d_tilde(a2, h2, &d1, &pj);
                    let br = courant_bracket(a1, a2);
                    let hb = apply_vector(&a1.x, h2) - apply_vector(&a2.x, h1) + a1.pair_minus(a2);
                    let db = input.d_tilde(&br, &hb, &sec, &pj);
                    worst = worst.max(d12.sub(&d21).sub(&db).abs());
                }
            }
            worst
        })
        .collect();
    CheckRecord::new(
        "flat-extension",
        "Dtilde_e1 Dtilde_e2 - Dtilde_e2 Dtilde_e1 - Dtilde_[e1,e2] = 0",
        max_residual(vals),
        tol,
        points.len(),
    )
}

/// Push `Lbar` through `Phi(p, theta) = (p, theta + phi(p))` and compare
/// with `Lbar` of the gauge-shifted `beta + d_L phi`; the second record is
/// the comparison with the unshifted structure.
pub fn gauge_transform(
    input: &PreqInput,
    phi: &ScalarField,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<(CheckRecord, f64), FrameError> {
    let n = input.n();
    let lbar = input.build_lbar();
    let per: Vec<Result<(f64, f64), FrameError>> = points
        .par_iter()
        .map(|q| {
            let p = &q[..n];
            let ph = phi.at(p);
            let mut jac = DMatrix::identity(n + 1, n + 1);
            for k in 0..n {
                jac[(n, k)] = ph.d(k);
            }
            let jinv_t = jac.clone().try_inverse().expect("unimodular").transpose();
            let m = lbar.checked_matrix_at(q)?;
            let mut pushed = m.clone();
            for c in 0..m.ncols() {
                let x = jac.clone() * m.column(c).rows(0, n + 1);
                let xi = &jinv_t * m.column(c).rows(n + 2, n + 1);
                pushed.view_mut((0, c), (n + 1, 1)).copy_from(&x);
                pushed.view_mut((n + 2, c), (n + 1, 1)).copy_from(&xi);
            }
            let mut q2 = q.to_vec();
            q2[n] += ph.value;
            let secs = input.l.values_at(p);
            let b: Vec<f64> = input
                .beta_values(p)
                .iter()
                .zip(&secs)
                .map(|(bk, s)| bk + (0..n).map(|j| ph.d(j) * s.x.values()[j]).sum::<f64>())
                .collect();
            let (a, al) = solve_a_alpha(&input.l, &b, p)?;
            let shifted = input.lbar_matrix_with(&q2, &a, &al);
            let unshifted = lbar.matrix_at(&q2);
            Ok((subspace_mismatch(&pushed, &shifted), subspace_mismatch(&pushed, &unshifted)))
        })
        .collect();
    let rows = per.into_iter().collect::<Result<Vec<_>, _>>()?;
    let rec = CheckRecord::new(
        "gauge",
        "(Phi_*, id) + ((Phi^-1)^*, id) maps Lbar(D) to Lbar(D - 2 pi i d_L phi)",
        max_residual(rows.iter().map(|r| r.0)),
        tol,
        points.len(),
    );
    Ok((rec, max_residual(rows.iter().map(|r| r.1))))
}

/// `P = R`, `L = T^*P`, `Omega = 0`, `A = x d/dx`, `alpha = 0`, `a = 0`.
pub fn example_line(half_width: f64) -> PreqInput {
    let chart = Chart::new(&["x"], &[(-half_width, half_width)]).expect("valid");
    PreqInput {
        l: graph_of_bivector(chart.clone(), MultivectorField::zero(1, 2)),
        p_chart: chart,
        omega: FormField::zero(1, 2),
        a: MultivectorField::vector(vec![ScalarField::coordinate(0)]),
        alpha: FormField::zero(1, 1),
        potential: FormField::zero(1, 1),
    }
}

/// `P = R^2`, `L = graph(dx^dy)`, `Omega = dx^dy`, `beta = 0`,
/// `a = (x dy - y dx) / 2`.
pub fn example_plane(half_width: f64) -> PreqInput {
    let chart = Chart::new(&["x", "y"], &[(-half_width, half_width), (-half_width, half_width)]).expect("valid");
    let omega = FormField::new(2, 2, vec![ScalarField::constant(1.0)]);
    PreqInput {
        l: graph_of_2form(chart.clone(), omega.clone()),
        p_chart: chart,
        omega,
        a: MultivectorField::zero(2, 1),
        alpha: FormField::zero(2, 1),
        potential: FormField::one(vec![ScalarField::coordinate(1).scale(-0.5), ScalarField::coordinate(0).scale(0.5)]),
    }
}
