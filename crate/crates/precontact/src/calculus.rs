//! Pointwise exterior calculus on jets.
//!
//! Forms and multivectors of degree at most 3 store one jet per strictly
//! increasing index tuple, in lexicographic order. Every operation works on
//! values already evaluated at a point; derivatives come from the jets, so a
//! result that involves one derivative has an exact gradient and a NaN
//! Hessian.

use std::ops::{Add, Neg, Sub};

use crate::error::CalcError;
use crate::jet::Jet2;

pub const MAX_DEGREE: usize = 3;

pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Strictly increasing `k`-tuples from `0..n`, lexicographic.
pub fn combos(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn rank_of(n: usize, idx: &[usize]) -> usize {
    let k = idx.len();
    let mut r = 0;
    let mut next = 0;
    for (m, &i) in idx.iter().enumerate() {
        for j in next..i {
            r += binom(n - 1 - j, k - 1 - m);
        }
        next = i + 1;
    }
    r
}

/// Sort an index tuple, returning the permutation sign, or `None` on a repeat.
pub fn sort_sign(idx: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = idx.to_vec();
    let mut sign = 1.0;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            } else if v[j] == v[j + 1] {
                return None;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

/// Antisymmetric component storage shared by forms and multivectors.
#[derive(Clone, Debug)]
pub struct Skew {
    pub dim: usize,
    pub degree: usize,
    pub comps: Vec<Jet2>,
}

impl Skew {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Skew { dim, degree, comps: vec![Jet2::constant(0.0); binom(dim, degree)] }
    }

    pub fn from_comps(dim: usize, degree: usize, comps: Vec<Jet2>) -> Self {
        assert_eq!(comps.len(), binom(dim, degree), "component count");
        Skew { dim, degree, comps }
    }

    pub fn indices(&self) -> Vec<Vec<usize>> {
        combos(self.dim, self.degree)
    }

    /// Component for any index tuple, with antisymmetry applied.
    pub fn get(&self, idx: &[usize]) -> Jet2 {
        debug_assert_eq!(idx.len(), self.degree);
        match sort_sign(idx) {
            None => Jet2::constant(0.0),
            Some((s, sign)) => {
                let c = &self.comps[rank_of(self.dim, &s)];
                if sign > 0.0 {
                    c.clone()
                } else {
                    -c
                }
            }
        }
    }

    pub fn set(&mut self, sorted: &[usize], v: Jet2) {
        let r = rank_of(self.dim, sorted);
        self.comps[r] = v;
    }

    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.value).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.value.abs()))
    }

    fn zip(&self, o: &Skew, f: impl Fn(&Jet2, &Jet2) -> Jet2) -> Skew {
        assert_eq!((self.dim, self.degree), (o.dim, o.degree), "shape mismatch");
        Skew {
            dim: self.dim,
            degree: self.degree,
            comps: self.comps.iter().zip(&o.comps).map(|(a, b)| f(a, b)).collect(),
        }
    }

    fn map(&self, f: impl Fn(&Jet2) -> Jet2) -> Skew {
        Skew { dim: self.dim, degree: self.degree, comps: self.comps.iter().map(f).collect() }
    }
}

macro_rules! skew_newtype {
    ($name:ident) => {
        #[derive(Clone, Debug)]
        pub struct $name(pub Skew);

        impl $name {
            pub fn zero(dim: usize, degree: usize) -> Self {
                $name(Skew::zero(dim, degree))
            }
            pub fn from_comps(dim: usize, degree: usize, comps: Vec<Jet2>) -> Self {
                $name(Skew::from_comps(dim, degree, comps))
            }
            pub fn dim(&self) -> usize {
                self.0.dim
            }
            pub fn degree(&self) -> usize {
                self.0.degree
            }
            pub fn comps(&self) -> &[Jet2] {
                &self.0.comps
            }
            pub fn get(&self, idx: &[usize]) -> Jet2 {
                self.0.get(idx)
            }
            pub fn values(&self) -> Vec<f64> {
                self.0.values()
            }
            pub fn max_abs(&self) -> f64 {
                self.0.max_abs()
            }
            pub fn scale(&self, c: f64) -> Self {
                $name(self.0.map(|j| j.scale(c)))
            }
            pub fn scale_jet(&self, c: &Jet2) -> Self {
                $name(self.0.map(|j| j * c))
            }
        }

        impl Add for &$name {
            type Output = $name;
            fn add(self, o: &$name) -> $name {
                $name(self.0.zip(&o.0, |a, b| a + b))
            }
        }
        impl Sub for &$name {
            type Output = $name;
            fn sub(self, o: &$name) -> $name {
                $name(self.0.zip(&o.0, |a, b| a - b))
            }
        }
        impl Add for $name {
            type Output = $name;
            fn add(self, o: $name) -> $name {
                &self + &o
            }
        }
        impl Sub for $name {
            type Output = $name;
            fn sub(self, o: $name) -> $name {
                &self - &o
            }
        }
        impl Neg for &$name {
            type Output = $name;
            fn neg(self) -> $name {
                self.scale(-1.0)
            }
        }
        impl Neg for $name {
            type Output = $name;
            fn neg(self) -> $name {
                self.scale(-1.0)
            }
        }
    };
}

skew_newtype!(Form);
skew_newtype!(Multivector);

impl Form {
    /// A 0-form on a chart of dimension `dim`.
    pub fn function(dim: usize, f: Jet2) -> Self {
        Form(Skew { dim, degree: 0, comps: vec![f] })
    }
    pub fn one(comps: Vec<Jet2>) -> Self {
        let n = comps.len();
        Form::from_comps(n, 1, comps)
    }
    pub fn as_function(&self) -> &Jet2 {
        assert_eq!(self.degree(), 0);
        &self.0.comps[0]
    }
    /// Components of a 1-form.
    pub fn covector(&self) -> &[Jet2] {
        assert_eq!(self.degree(), 1);
        &self.0.comps
    }
}

impl Multivector {
    pub fn vector(comps: Vec<Jet2>) -> Self {
        let n = comps.len();
        Multivector::from_comps(n, 1, comps)
    }
    pub fn components(&self) -> &[Jet2] {
        &self.0.comps
    }
}

fn check_degree(k: usize) -> Result<(), CalcError> {
    if k > MAX_DEGREE {
        Err(CalcError::DegreeOverflow(k))
    } else {
        Ok(())
    }
}

pub fn exterior_derivative(a: &Form) -> Result<Form, CalcError> {
    let n = a.dim();
    let k = a.degree();
    check_degree(k + 1)?;
    let comps = combos(n, k + 1)
        .into_iter()
        .map(|idx| {
            let mut acc = Jet2::constant(0.0);
            for m in 0..idx.len() {
                let rest: Vec<usize> = idx.iter().enumerate().filter(|&(p, _)| p != m).map(|(_, &i)| i).collect();
                let t = a.get(&rest).partial(idx[m]);
                acc = if m % 2 == 0 { acc + t } else { acc - t };
            }
            acc
        })
        .collect();
    Ok(Form::from_comps(n, k + 1, comps))
}

pub fn interior(x: &Multivector, a: &Form) -> Result<Form, CalcError> {
    assert_eq!(x.degree(), 1, "interior product needs a vector");
    let k = a.degree();
    if k == 0 {
        return Err(CalcError::DegreeUnderflow);
    }
    let n = a.dim();
    if x.dim() != n {
        return Err(CalcError::DimensionMismatch(x.dim(), n));
    }
    let comps = combos(n, k - 1)
        .into_iter()
        .map(|rest| {
            let mut acc = Jet2::constant(0.0);
            let mut full = Vec::with_capacity(k);
            for j in 0..n {
                full.clear();
                full.push(j);
                full.extend_from_slice(&rest);
                acc = acc + &x.0.comps[j] * a.get(&full);
            }
            acc
        })
        .collect();
    Ok(Form::from_comps(n, k - 1, comps))
}

fn skew_wedge(a: &Skew, b: &Skew) -> Result<Skew, CalcError> {
    let (p, q) = (a.degree, b.degree);
    check_degree(p + q)?;
    let n = a.dim.max(b.dim);
    if a.dim != b.dim && a.degree > 0 && b.degree > 0 {
        return Err(CalcError::DimensionMismatch(a.dim, b.dim));
    }
    let comps = combos(n, p + q)
        .into_iter()
        .map(|idx| {
            let mut acc = Jet2::constant(0.0);
            for pos in combos(p + q, p) {
                let ia: Vec<usize> = pos.iter().map(|&m| idx[m]).collect();
                let ib: Vec<usize> = (0..p + q).filter(|m| !pos.contains(m)).map(|m| idx[m]).collect();
                let inv: usize = pos.iter().enumerate().map(|(r, &m)| m - r).sum();
                let t = a.get(&ia) * b.get(&ib);
                acc = if inv % 2 == 0 { acc + t } else { acc - t };
            }
            acc
        })
        .collect();
    Ok(Skew { dim: n, degree: p + q, comps })
}

pub fn wedge(a: &Form, b: &Form) -> Result<Form, CalcError> {
    skew_wedge(&a.0, &b.0).map(Form)
}

pub fn wedge_multivectors(a: &Multivector, b: &Multivector) -> Result<Multivector, CalcError> {
    skew_wedge(&a.0, &b.0).map(Multivector)
}

/// `X(f) = X^j d_j f`.
pub fn apply_vector(x: &Multivector, f: &Jet2) -> Jet2 {
    let mut acc = Jet2::constant(0.0);
    for (j, xj) in x.components().iter().enumerate() {
        acc = acc + xj * f.partial(j);
    }
    acc
}

pub fn lie_bracket(x: &Multivector, y: &Multivector) -> Multivector {
    let comps = (0..x.dim())
        .map(|i| apply_vector(x, &y.components()[i]) - apply_vector(y, &x.components()[i]))
        .collect();
    Multivector::vector(comps)
}

/// Cartan formula `L_X a = i_X da + d i_X a`.
pub fn lie_derivative(x: &Multivector, a: &Form) -> Result<Form, CalcError> {
    if a.degree() == 0 {
        return Ok(Form::function(a.dim(), apply_vector(x, a.as_function())));
    }
    let first = if a.degree() < MAX_DEGREE {
        interior(x, &exterior_derivative(a)?)?
    } else {
        Form::zero(a.dim(), a.degree())
    };
    let second = exterior_derivative(&interior(x, a)?)?;
    Ok(&first + &second)
}

/// Lie derivative of a multivector field, in coordinates.
pub fn lie_derivative_multivector(x: &Multivector, m: &Multivector) -> Multivector {
    let n = m.dim();
    let comps = m
        .0
        .indices()
        .into_iter()
        .map(|idx| {
            let mut acc = apply_vector(x, &m.get(&idx));
            for p in 0..idx.len() {
                let mut swapped = idx.clone();
                for k in 0..n {
                    swapped[p] = k;
                    acc = acc - m.get(&swapped) * x.components()[idx[p]].partial(k);
                }
            }
            acc
        })
        .collect();
    Multivector::from_comps(n, m.degree(), comps)
}

/// Schouten bracket of two bivectors, normalised so that a contact Jacobi
/// pair satisfies `[L,L] = 2 E^L`.
pub fn schouten(l: &Multivector, m: &Multivector) -> Multivector {
    assert!(l.degree() == 2 && m.degree() == 2, "schouten takes bivectors");
    let n = l.dim();
    let comps = combos(n, 3)
        .into_iter()
        .map(|idx| {
            let mut acc = Jet2::constant(0.0);
            for c in 0..3 {
                let (i, j, k) = (idx[c], idx[(c + 1) % 3], idx[(c + 2) % 3]);
                for s in 0..n {
                    acc = acc + l.get(&[s, i]) * m.get(&[j, k]).partial(s);
                    acc = acc + m.get(&[s, i]) * l.get(&[j, k]).partial(s);
                }
            }
            acc
        })
        .collect();
    Multivector::from_comps(n, 3, comps)
}

/// `[E, L] = L_E L`.
pub fn schouten_ve(e: &Multivector, l: &Multivector) -> Multivector {
    lie_derivative_multivector(e, l)
}

/// `L(a, b) = L^{ij} a_i b_j`.
pub fn bivector_pair(l: &Multivector, a: &[Jet2], b: &[Jet2]) -> Jet2 {
    let n = l.dim();
    let mut acc = Jet2::constant(0.0);
    for idx in combos(n, 2) {
        let (i, j) = (idx[0], idx[1]);
        let lij = l.get(&[i, j]);
        acc = acc + lij * (&a[i] * &b[j] - &a[j] * &b[i]);
    }
    acc
}

/// The vector `L(., xi)`, with components `L^{ij} xi_j`.
pub fn bivector_contract(l: &Multivector, xi: &[Jet2]) -> Multivector {
    let n = l.dim();
    let comps = (0..n)
        .map(|i| {
            let mut acc = Jet2::constant(0.0);
            for (j, xj) in xi.iter().enumerate() {
                if j != i {
                    acc = acc + l.get(&[i, j]) * xj;
                }
            }
            acc
        })
        .collect();
    Multivector::vector(comps)
}

/// `a(X)` for a 1-form.
pub fn pair(a: &Form, x: &Multivector) -> Jet2 {
    let mut acc = Jet2::constant(0.0);
    for (ai, xi) in a.covector().iter().zip(x.components()) {
        acc = acc + ai * xi;
    }
    acc
}

fn det(m: &[Vec<Jet2>]) -> Jet2 {
    match m.len() {
        0 => Jet2::constant(1.0),
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        3 => {
            let minor = |a: usize, b: usize, c: usize, d: usize| &m[1][a] * &m[2][b] - &m[1][c] * &m[2][d];
            &m[0][0] * minor(1, 2, 2, 1) - &m[0][1] * minor(0, 2, 2, 0) + &m[0][2] * minor(0, 1, 1, 0)
        }
        _ => unreachable!("degree capped at 3"),
    }
}

/// Pull back a form along a map. `at_image` is the form evaluated at the
/// image jets `image`, whose gradients are the map's Jacobian rows.
pub fn pullback(at_image: &Form, image: &[Jet2], src_dim: usize) -> Form {
    let k = at_image.degree();
    let tn = at_image.dim();
    if k == 0 {
        return Form::function(src_dim, at_image.as_function().clone());
    }
    let partials: Vec<Vec<Jet2>> = image.iter().map(|f| (0..src_dim).map(|a| f.partial(a)).collect()).collect();
    let target_idx = combos(tn, k);
    let comps = combos(src_dim, k)
        .into_iter()
        .map(|a_idx| {
            let mut acc = Jet2::constant(0.0);
            for (r, i_idx) in target_idx.iter().enumerate() {
                let c = &at_image.0.comps[r];
                if c.value == 0.0 && c.grad.iter().all(|g| *g == 0.0) {
                    continue;
                }
                let m: Vec<Vec<Jet2>> =
                    i_idx.iter().map(|&i| a_idx.iter().map(|&a| partials[i][a].clone()).collect()).collect();
                acc = acc + c * det(&m);
            }
            acc
        })
        .collect();
    Form::from_comps(src_dim, k, comps)
}

/// Push a vector forward with the Jacobian carried by `image`.
pub fn pushforward(image: &[Jet2], v: &[f64]) -> Vec<f64> {
    image.iter().map(|f| f.grad.iter().zip(v).map(|(g, x)| g * x).sum()).collect()
}
