//! Poisson bivector on `R + K` over a prequantized symplectic chart.
//!
//! `K` is trivialized with fiber coordinate `q = u + iv`; the total chart is
//! `(p, t, u, v)`. The horizontal lift of `d_i` through a potential `a` with
//! `da = omega` is `d_i + 2 pi a_i (v d_u - u d_v)`, and
//! `Pi = -((1 - t) omega)^{-1}` on lifts plus `2 pi (u d_v - v d_u) ^ d_t`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::calculus::{bivector_contract, exterior_derivative, schouten, wedge_multivectors, Form, Multivector};
use crate::chart::Chart;
use crate::error::FrameError;
use crate::field::{FormField, MultivectorField, ScalarField};
use crate::jet::Jet2;
use crate::linalg::{jet_solve, rank};
use crate::report::{max_residual, CheckRecord};

#[derive(Clone)]
pub struct VorobjevData {
    pub p_chart: Chart,
    pub omega: FormField,
    /// Potential 1-form with `da = omega`.
    pub a: FormField,
    /// Sampling interval for `t`; must stay below 1.
    pub t_range: (f64, f64),
    pub fiber_half_width: f64,
}

impl VorobjevData {
    pub fn new(p_chart: Chart, omega: FormField, a: FormField) -> Self {
        VorobjevData { p_chart, omega, a, t_range: (-0.5, 0.5), fiber_half_width: 1.5 }
    }

    pub fn k(&self) -> usize {
        self.p_chart.dim()
    }

    pub fn total_chart(&self) -> Chart {
        let mut names = self.p_chart.coord_names.clone();
        names.extend(["t", "u", "v"].map(String::from));
        let mut dom = self.p_chart.domain.clone();
        let w = self.fiber_half_width;
        dom.extend([self.t_range, (-w, w), (-w, w)]);
        Chart::from_parts(names, dom).expect("valid chart")
    }

    /// Nondegeneracy and closedness of `omega`, and `da = omega`.
    pub fn validate(&self, points: &[Vec<f64>], tol: f64) -> Result<(), FrameError> {
        if self.t_range.1 >= 1.0 {
            return Err(FrameError::Invalid("(1 - t) omega degenerates: t reaches 1 in the region".into()));
        }
        let k = self.k();
        for p in points {
            let om = self.omega.at(p);
            let m = nalgebra::DMatrix::from_fn(k, k, |i, j| om.get(&[i, j]).value);
            if rank(&m) < k {
                return Err(FrameError::Invalid(format!("omega is degenerate at {p:?}")));
            }
            let closed = exterior_derivative(&om).map_err(|e| FrameError::Invalid(e.to_string()))?.max_abs();
            let curv = (&exterior_derivative(&self.a.at(p)).map_err(|e| FrameError::Invalid(e.to_string()))? - &om).max_abs();
            if !(closed <= tol && curv <= tol) {
                return Err(FrameError::Invalid(format!("d omega = {closed:e}, da - omega = {curv:e} at {p:?}")));
            }
        }
        Ok(())
    }

    /// `Pi` at jets of the total chart.
    pub fn pi_at(&self, x: &[Jet2]) -> Multivector {
        let k = self.k();
        let n = k + 3;
        let (t, u, v) = (&x[k], &x[k + 1], &x[k + 2]);
        let om = self.omega.eval(&x[..k]);
        let a = self.a.eval(&x[..k]);
        let zero = Jet2::constant(0.0);
        let unit = |i: usize| -> Vec<Jet2> { (0..n).map(|j| Jet2::constant(if i == j { 1.0 } else { 0.0 })).collect() };
        let lifts: Vec<Multivector> = (0..k)
            .map(|i| {
                let mut c = unit(i);
                let s = a.covector()[i].scale(2.0 * PI);
                c[k + 1] = &s * v;
                c[k + 2] = -(&s * u);
                Multivector::vector(c)
            })
            .collect();
        // columns of omega^{-1}
        let w: Vec<Vec<Jet2>> = (0..k).map(|i| (0..k).map(|j| if i == j { zero.clone() } else { om.get(&[i, j]) }).collect()).collect();
        let inv: Vec<Vec<Jet2>> = (0..k).map(|c| jet_solve(w.clone(), unit(c)[..k].to_vec()).expect("nondegenerate omega")).collect();
        let scale = (Jet2::constant(1.0) - t).recip();
        let mut pi = Multivector::zero(n, 2);
        for i in 0..k {
            for j in i + 1..k {
                // (-omega^{-1})^{ij} = -inv[j][i]
                let coef = -(&inv[j][i] * &scale);
                pi = &pi + &wedge_multivectors(&lifts[i], &lifts[j]).expect("vectors").scale_jet(&coef);
            }
        }
        let mut rot = vec![zero.clone(); n];
        rot[k + 1] = -v.scale(2.0 * PI);
        rot[k + 2] = u.scale(2.0 * PI);
        let vert = wedge_multivectors(&Multivector::vector(rot), &Multivector::vector(unit(k))).expect("vectors");
        &pi + &vert
    }

    /// `(u dv - v du) / (2 pi |q|^2) + a`, the connection form in fiber angle.
    pub fn theta_at(&self, x: &[Jet2]) -> Form {
        let k = self.k();
        let (u, v) = (&x[k + 1], &x[k + 2]);
        let r2 = (u * u + v * v).scale(2.0 * PI);
        let mut c: Vec<Jet2> = self.a.eval(&x[..k]).covector().to_vec();
        c.push(Jet2::constant(0.0));
        c.push(-(v / &r2));
        c.push(u / &r2);
        Form::one(c)
    }
}

/// `Pi` as a field on [`VorobjevData::total_chart`].
pub fn build_vorobjev(data: &VorobjevData, tol: f64) -> Result<(Chart, MultivectorField), FrameError> {
    data.validate(&data.p_chart.sample(20, 0), tol)?;
    let n = data.k() + 3;
    let comps: Vec<ScalarField> = (0..n * (n - 1) / 2)
        .map(|c| {
            let d = data.clone();
            ScalarField::new(move |x| d.pi_at(x).comps()[c].clone())
        })
        .collect();
    Ok((data.total_chart(), MultivectorField::new(n, 2, comps)))
}

pub fn check_poisson(data: &VorobjevData, points: &[Vec<f64>], tol: f64) -> CheckRecord {
    let vals: Vec<f64> = points
        .par_iter()
        .map(|p| {
            let pi = data.pi_at(&Jet2::seed(p));
            schouten(&pi, &pi).max_abs()
        })
        .collect();
    CheckRecord::new("vorobjev-poisson", "[Pi, Pi] = 0", max_residual(vals), tol, points.len())
}

/// Leaf checks on `|q| = 1`: `Pi` inverts `d((1 - t) theta)` on the leaf,
/// `|q|^2` is a Casimir, and `dtheta = pi^* omega` at `t = 0`.
pub fn leaf_form_check(data: &VorobjevData, count: usize, seed: u64, tol: f64) -> Vec<CheckRecord> {
    let k = data.k();
    let n = k + 3;
    let mut dom = data.p_chart.domain.clone();
    dom.extend([data.t_range, (0.0, 1.0)]);
    let samples = crate::chart::sample_box(&dom, count, seed);
    let rows: Vec<[f64; 3]> = samples
        .par_iter()
        .map(|s| {
            let phi = 2.0 * PI * s[k + 1];
            let mut x: Vec<f64> = s[..=k].to_vec();
            x.extend([phi.cos(), phi.sin()]);
            let xj = Jet2::seed(&x);
            let pi = data.pi_at(&xj);
            let one_minus_t = Jet2::constant(1.0) - &xj[k];
            let th = data.theta_at(&xj);
            let scaled = Form::one(th.covector().iter().map(|c| c * &one_minus_t).collect());
            let leaf = exterior_derivative(&scaled).expect("1-form");
            let mut basis: Vec<Vec<f64>> = (0..=k).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
            let mut dphi = vec![0.0; n];
            dphi[k + 1] = -2.0 * PI * x[k + 2];
            dphi[k + 2] = 2.0 * PI * x[k + 1];
            basis.push(dphi);
            let mut inverse: f64 = 0.0;
            for w in &basis {
                let iw: Vec<Jet2> = (0..n).map(|j| Jet2::constant((0..n).map(|i| w[i] * leaf.get(&[i, j]).value).sum())).collect();
                let back = bivector_contract(&pi, &iw);
                inverse = inverse.max(back.components().iter().zip(w).map(|(b, c)| (b.value - c).abs()).fold(0.0, f64::max));
            }
            let mut dr = vec![Jet2::constant(0.0); n];
            dr[k + 1] = Jet2::constant(2.0 * x[k + 1]);
            dr[k + 2] = Jet2::constant(2.0 * x[k + 2]);
            let casimir = bivector_contract(&pi, &dr).max_abs();
            let mut x0 = x.clone();
            x0[k] = 0.0;
            let dth = exterior_derivative(&data.theta_at(&Jet2::seed(&x0))).expect("1-form");
            let om = data.omega.at(&x0[..k]);
            let mut related: f64 = 0.0;
            for idx in dth.0.indices() {
                let expected = if idx[1] < k { om.get(&idx).value } else { 0.0 };
                related = related.max((dth.get(&idx).value - expected).abs());
            }
            [inverse, casimir, related]
        })
        .collect();
    let col = |i: usize| max_residual(rows.iter().map(|r| r[i]));
    vec![
        CheckRecord::new("leaf-inverse", "Pi inverts d((1 - t) theta) on leaf tangents", col(0), tol, count),
        CheckRecord::new("leaf-casimir", "Pi annihilates d(u^2 + v^2)", col(1), tol, count),
        CheckRecord::new("leaf-dtheta", "dtheta = pi^* omega", col(2), tol, count),
    ]
}

/// `P = R^2`, `omega = dx ^ dy`, `a = (x dy - y dx) / 2`.
pub fn example_plane() -> VorobjevData {
    let chart = Chart::new(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)]).expect("valid chart");
    let omega = FormField::new(2, 2, vec![ScalarField::constant(1.0)]);
    let a = FormField::one(vec![ScalarField::coordinate(1).scale(-0.5), ScalarField::coordinate(0).scale(0.5)]);
    VorobjevData::new(chart, omega, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `omega = (1 + x^2) dx ^ dy` with `a = (x + x^3/3) dy`.
    fn curved() -> VorobjevData {
        let chart = Chart::new(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
        let x = ScalarField::coordinate(0);
        let omega = FormField::new(2, 2, vec![x.mul(&x).add(&ScalarField::constant(1.0))]);
        let a = FormField::one(vec![ScalarField::zero(), x.add(&x.mul(&x).mul(&x).scale(1.0 / 3.0))]);
        VorobjevData::new(chart, omega, a)
    }

    #[test]
    fn plane_components_by_hand() {
        let d = example_plane();
        let (chart, pi) = build_vorobjev(&d, 1e-12).unwrap();
        for p in chart.sample(50, 1) {
            let (x, y, t, u, v) = (p[0], p[1], p[2], p[3], p[4]);
            let s = 1.0 / (1.0 - t);
            let m = pi.at(&p);
            // indices x=0, y=1, t=2, u=3, v=4
            let expected = [
                ([0, 1], s),
                ([0, 2], 0.0),
                ([0, 3], PI * x * v * s),
                ([0, 4], -PI * x * u * s),
                ([1, 2], 0.0),
                ([1, 3], PI * y * v * s),
                ([1, 4], -PI * y * u * s),
                ([2, 3], 2.0 * PI * v),
                ([2, 4], -2.0 * PI * u),
                ([3, 4], 0.0),
            ];
            for (idx, val) in expected {
                assert!((m.get(&idx).value - val).abs() < 1e-12, "{idx:?}: {} vs {val}", m.get(&idx).value);
            }
        }
    }

    #[test]
    fn horizontal_part_inverts_omega_at_zero_height() {
        let d = curved();
        for mut p in d.total_chart().sample(20, 2) {
            p[2] = 0.0;
            let m = d.pi_at(&Jet2::seed(&p));
            // -omega^{-1} for omega_xy = w is Pi^{xy} = 1/w
            assert!((m.get(&[0, 1]).value - 1.0 / (1.0 + p[0] * p[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_and_leaf_checks() {
        for d in [example_plane(), curved()] {
            let pts = d.total_chart().sample(100, 42);
            let rec = check_poisson(&d, &pts, 1e-8);
            assert!(rec.pass, "{rec:?}");
            for r in leaf_form_check(&d, 100, 42, 1e-7) {
                assert!(r.pass, "{r:?}");
            }
        }
    }

    #[test]
    fn non_potential_connection_fails_leaf_checks() {
        let mut bad = curved();
        bad.a = FormField::one(vec![ScalarField::zero(), ScalarField::coordinate(0)]);
        let leaf = leaf_form_check(&bad, 30, 1, 1e-7);
        assert!(leaf.iter().any(|r| !r.pass));
    }

    #[test]
    fn invalid_data_is_rejected() {
        let mut d = example_plane();
        d.t_range = (-0.5, 1.0);
        assert!(build_vorobjev(&d, 1e-9).is_err());
        let mut d = example_plane();
        d.omega = FormField::zero(2, 2);
        assert!(build_vorobjev(&d, 1e-9).is_err());
        let mut d = example_plane();
        d.a = FormField::zero(2, 1);
        assert!(build_vorobjev(&d, 1e-9).is_err());
    }
}
