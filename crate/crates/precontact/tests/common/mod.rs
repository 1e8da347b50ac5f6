#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use precontact::apaths::Coeffs;
use precontact::calculus::{exterior_derivative, Form, Multivector};
use precontact::courant::{E1Section, Frame};
use precontact::field::{FormField, MultivectorField, ScalarField};
use precontact::groupoids::{builtin, example_1dim, GroupoidBase};
use precontact::prequantize::example_line;
use precontact::report::CheckRecord;
use precontact::Jet2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Quadratic polynomial plus two plane waves, all coefficients of order one.
pub fn random_scalar(rng: &mut ChaCha8Rng, dim: usize) -> ScalarField {
    let c0 = rng.gen_range(-1.0..1.0);
    let lin: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let quad: Vec<f64> = (0..dim * dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let waves: Vec<(Vec<f64>, f64, f64)> = (0..2)
        .map(|_| ((0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect(), rng.gen_range(-PI..PI), rng.gen_range(-1.0..1.0)))
        .collect();
    ScalarField::new(move |x| {
        let mut acc = Jet2::constant(c0);
        for i in 0..dim {
            acc = acc + &x[i] * lin[i];
            for j in 0..dim {
                acc = acc + &x[i] * &x[j] * quad[i * dim + j];
            }
        }
        for (w, b, a) in &waves {
            let mut arg = Jet2::constant(*b);
            for i in 0..dim {
                arg = arg + &x[i] * w[i];
            }
            acc = acc + arg.sin() * *a;
        }
        acc
    })
}

pub fn random_vector_field(rng: &mut ChaCha8Rng, dim: usize) -> MultivectorField {
    MultivectorField::vector((0..dim).map(|_| random_scalar(rng, dim)).collect())
}

pub fn random_form(rng: &mut ChaCha8Rng, dim: usize, degree: usize) -> FormField {
    let count = precontact::calculus::binom(dim, degree);
    FormField::new(dim, degree, (0..count).map(|_| random_scalar(rng, dim)).collect())
}

/// `d(alpha)` as a field, so the result is closed by construction.
pub fn exact_two_form(alpha: FormField) -> FormField {
    let dim = alpha.dim();
    let alpha = Arc::new(alpha);
    let comps = precontact::calculus::combos(dim, 2)
        .into_iter()
        .map(|idx| {
            let alpha = alpha.clone();
            ScalarField::new(move |x| exterior_derivative(&alpha.eval(x)).unwrap().get(&idx))
        })
        .collect();
    FormField::new(dim, 2, comps)
}

pub fn frame_1dim() -> Frame<E1Section> {
    match builtin("1dim").unwrap().1 {
        GroupoidBase::Jacobi(f) => f,
        GroupoidBase::Dirac(_) => unreachable!(),
    }
}

/// Reorders a section on `(x, th)` to the groupoid base chart `(th, x)`.
pub fn swap_line_section(s: E1Section) -> E1Section {
    let x = s.x.components();
    let xi = s.xi.covector();
    E1Section::new(
        Multivector::vector(vec![x[1].clone(), x[0].clone()]),
        s.f,
        Form::one(vec![xi[1].clone(), xi[0].clone()]),
        s.g,
    )
}

/// The line's prequantization on the base chart of the 1dim groupoid.
pub fn line_lbar_swapped() -> Frame<E1Section> {
    let lbar = example_line(2.0).build_lbar();
    Frame::new(example_1dim().base, move |p| {
        lbar.eval(&[p[1].clone(), p[0].clone()]).into_iter().map(swap_line_section).collect()
    })
}

pub fn constant_path(c: Vec<f64>) -> Coeffs {
    Arc::new(move |_| c.clone())
}

/// Random trigonometric coefficients of size at most `scale`.
pub fn random_path(rng: &mut ChaCha8Rng, count: usize, scale: f64) -> Coeffs {
    let c: Vec<[f64; 3]> = (0..count).map(|_| [0; 3].map(|_| rng.gen_range(-scale..scale) / 3.0)).collect();
    Arc::new(move |t| {
        let w = 2.0 * PI * t;
        c.iter().map(|k| k[0] + k[1] * w.sin() + k[2] * w.cos()).collect()
    })
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn worst(records: &[CheckRecord]) -> f64 {
    records.iter().map(|r| r.max_residual).fold(0.0, f64::max)
}

pub fn failing(records: &[CheckRecord]) -> Vec<String> {
    records.iter().filter(|r| !r.pass).map(|r| format!("{} ({:.2e})", r.id, r.max_residual)).collect()
}
