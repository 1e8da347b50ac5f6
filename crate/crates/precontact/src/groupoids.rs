//! Precontact and presymplectic groupoids on a single chart.
//!
//! A groupoid is given by expression strings ([`GroupoidSpec`]) compiled into
//! maps ([`GroupoidChart`]). Composable pairs `(g, h)` are parametrized by
//! the coordinates of `g` followed by the free coordinates of `h` (named
//! with a `_h` suffix); `h` and the product `gh` are expressions in those.
//! Angle coordinates are unwrapped.
//!
//! Orientation of the built-in examples: `s` is the map that makes the
//! structure on the base a pushforward of the graph of the payload, which
//! [`source_forward_check`] verifies.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::calculus::{exterior_derivative, lie_derivative, pair, pullback, Form, Multivector};
use crate::chart::Chart;
use crate::courant::{
    diracization, graph_of_1form, graph_of_2form, graph_of_bivector, graph_of_jacobi_pair, pushforward, DiracSection, E1Section,
    Frame, Section,
};
use crate::error::FrameError;
use crate::expr::{self, ParseError};
use crate::field::{FormField, Map, MultivectorField, ScalarField};
use crate::jet::Jet2;
use crate::linalg::{jet_lstsq, lstsq, null_space, rank, subspace_mismatch};
use crate::report::{max_residual, CheckRecord};

/// Geometric data carried by a groupoid, as expressions in its coordinates.
#[derive(Clone, Debug)]
pub enum PayloadSpec {
    /// `(theta, f)`: components of `theta` on `dx_i`, and `f > 0`.
    Contact { theta: Vec<String>, f: String },
    /// Components of `Omega` over sorted index pairs.
    Presymplectic { omega: Vec<String> },
}

#[derive(Clone, Debug)]
pub struct GroupoidSpec {
    pub name: String,
    pub coords: Vec<String>,
    pub domain: Vec<(f64, f64)>,
    pub base_coords: Vec<String>,
    pub base_domain: Vec<(f64, f64)>,
    pub source: Vec<String>,
    pub target: Vec<String>,
    /// In base coordinates.
    pub unit: Vec<String>,
    pub inverse: Vec<String>,
    /// Coordinates of `h` that are free in a composable pair.
    pub h_free: Vec<usize>,
    /// `h` and `gh` in composable coordinates.
    pub h_of: Vec<String>,
    pub mult: Vec<String>,
    pub payload: PayloadSpec,
    /// Generator of a circle action, if any.
    pub v_gamma: Option<Vec<String>>,
    /// Angle coordinates of either chart, by name.
    pub periods: Vec<(String, f64)>,
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("{field}: {source}")]
    Parse { field: String, source: ParseError },
    #[error("{field}: expected {expected} entries, found {found}")]
    Length { field: String, expected: usize, found: usize },
    #[error("invalid chart: {0}")]
    Chart(String),
}

#[derive(Clone)]
pub enum Payload {
    Contact { theta: FormField, f: ScalarField },
    Presymplectic { omega: FormField },
}

#[derive(Clone)]
pub struct GroupoidChart {
    pub name: String,
    pub total: Chart,
    pub base: Chart,
    pub source: Map,
    pub target: Map,
    pub unit: Map,
    pub inverse: Map,
    pub h_free: Vec<usize>,
    pub h_of: Map,
    pub mult: Map,
    pub payload: Payload,
    pub v_gamma: Option<MultivectorField>,
}

fn compile_list(field: &str, srcs: &[String], coords: &[&str], expected: usize) -> Result<Vec<ScalarField>, SpecError> {
    if srcs.len() != expected {
        return Err(SpecError::Length { field: field.into(), expected, found: srcs.len() });
    }
    srcs.iter()
        .enumerate()
        .map(|(i, s)| expr::field(s, coords).map_err(|e| SpecError::Parse { field: format!("{field}[{i}]"), source: e }))
        .collect()
}

impl GroupoidSpec {
    pub fn composable_coords(&self) -> Vec<String> {
        let mut names = self.coords.clone();
        names.extend(self.h_free.iter().map(|&i| format!("{}_h", self.coords[i])));
        names
    }

    pub fn compile(&self) -> Result<GroupoidChart, SpecError> {
        let names: Vec<&str> = self.coords.iter().map(String::as_str).collect();
        let base_names: Vec<&str> = self.base_coords.iter().map(String::as_str).collect();
        let comp = self.composable_coords();
        let comp_names: Vec<&str> = comp.iter().map(String::as_str).collect();
        let n = names.len();
        let k = base_names.len();
        let mut total = Chart::new(&names, &self.domain).map_err(|e| SpecError::Chart(e.to_string()))?;
        let mut base = Chart::new(&base_names, &self.base_domain).map_err(|e| SpecError::Chart(e.to_string()))?;
        for (name, period) in &self.periods {
            if total.index_of(name).is_none() && base.index_of(name).is_none() {
                return Err(SpecError::Chart(format!("period given for unknown coordinate {name}")));
            }
            total = total.with_period(name, *period);
            base = base.with_period(name, *period);
        }
        if let Some(&bad) = self.h_free.iter().find(|&&i| i >= n) {
            return Err(SpecError::Chart(format!("h_free index {bad} out of range")));
        }
        let payload = match &self.payload {
            PayloadSpec::Contact { theta, f } => Payload::Contact {
                theta: FormField::one(compile_list("theta", theta, &names, n)?),
                f: compile_list("f", std::slice::from_ref(f), &names, 1)?.remove(0),
            },
            PayloadSpec::Presymplectic { omega } => Payload::Presymplectic {
                omega: FormField::new(n, 2, compile_list("omega", omega, &names, n * (n - 1) / 2)?),
            },
        };
        let v_gamma = match &self.v_gamma {
            Some(v) => Some(MultivectorField::vector(compile_list("v_gamma", v, &names, n)?)),
            None => None,
        };
        Ok(GroupoidChart {
            name: self.name.clone(),
            total,
            base,
            source: Map::new(compile_list("source", &self.source, &names, k)?),
            target: Map::new(compile_list("target", &self.target, &names, k)?),
            unit: Map::new(compile_list("unit", &self.unit, &base_names, n)?),
            inverse: Map::new(compile_list("inverse", &self.inverse, &names, n)?),
            h_free: self.h_free.clone(),
            h_of: Map::new(compile_list("h_of", &self.h_of, &comp_names, n)?),
            mult: Map::new(compile_list("mult", &self.mult, &comp_names, n)?),
            payload,
            v_gamma,
        })
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl GroupoidChart {
    pub fn dim(&self) -> usize {
        self.total.dim()
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    /// Composable coordinates of `(a, b)`; assumes `s(a) = t(b)`.
    pub fn pair_coords(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut c = a.to_vec();
        c.extend(self.h_free.iter().map(|&i| b[i]));
        c
    }

    /// `ab`, with the mismatch between `b` and the `h` rebuilt from the pair.
    pub fn multiply(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
        let c = self.pair_coords(a, b);
        (self.mult.values(&c), dist(&self.h_of.values(&c), b))
    }

    /// Composable pairs: `g` from the samples, free coordinates of `h` from
    /// their domain.
    pub fn composable_samples(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let gs = self.total.sample(count, seed);
        let free_dom: Vec<(f64, f64)> = self.h_free.iter().map(|&i| self.total.domain[i]).collect();
        let rs = crate::chart::sample_box(&free_dom, count, seed.wrapping_add(1));
        gs.into_iter().zip(rs).map(|(mut g, r)| {
            g.extend(r);
            g
        })
        .collect()
    }

    fn split(&self, c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (c[..self.dim()].to_vec(), self.h_of.values(c))
    }

    pub fn f_at(&self, x: &[Jet2]) -> Option<Jet2> {
        match &self.payload {
            Payload::Contact { f, .. } => Some(f.eval(x)),
            Payload::Presymplectic { .. } => None,
        }
    }
}

/// Units, source and target of products, associativity and inverses.
pub fn check_structure(gpd: &GroupoidChart, count: usize, seed: u64, tol: f64) -> Vec<CheckRecord> {
    let pairs = gpd.composable_samples(count, seed);
    let more = gpd.composable_samples(count, seed.wrapping_add(7));
    let rows: Vec<[f64; 7]> = pairs
        .par_iter()
        .zip(more.par_iter())
        .map(|(c, c2)| {
            let (g, h) = gpd.split(c);
            let q = gpd.source.values(&g);
            let u = gpd.unit.values(&q);
            let unit_law = dist(&gpd.source.values(&u), &q).max(dist(&gpd.target.values(&u), &q));
            let composable = dist(&gpd.source.values(&g), &gpd.target.values(&h));
            let gh = gpd.mult.values(c);
            let st = dist(&gpd.source.values(&gh), &gpd.source.values(&h))
                .max(dist(&gpd.target.values(&gh), &gpd.target.values(&g)));
            // a third element composable with h
            let mut c3 = h.clone();
            c3.extend_from_slice(&c2[gpd.dim()..]);
            let k = gpd.h_of.values(&c3);
            let hk = gpd.mult.values(&c3);
            let (l, e1) = gpd.multiply(&gh, &k);
            let (r, e2) = gpd.multiply(&g, &hk);
            let assoc = dist(&l, &r).max(e1).max(e2);
            let gi = gpd.inverse.values(&g);
            let (a, e3) = gpd.multiply(&g, &gi);
            let (b, e4) = gpd.multiply(&gi, &g);
            let inv = dist(&a, &gpd.unit.values(&gpd.target.values(&g)))
                .max(dist(&b, &gpd.unit.values(&gpd.source.values(&g))))
                .max(e3)
                .max(e4);
            let (x, e5) = gpd.multiply(&gpd.unit.values(&gpd.target.values(&g)), &g);
            let (y, e6) = gpd.multiply(&g, &u);
            let ident = dist(&x, &g).max(dist(&y, &g)).max(e5).max(e6);
            let f_mult = match (gpd.f_at(&Jet2::seed(&gh)), gpd.f_at(&Jet2::seed(&g)), gpd.f_at(&Jet2::seed(&h))) {
                (Some(a), Some(b), Some(c)) => (a.value - b.value * c.value).abs(),
                _ => 0.0,
            };
            [unit_law, composable, st, assoc, inv, ident, f_mult]
        })
        .collect();
    let col = |i: usize| max_residual(rows.iter().map(|r| r[i]));
    let n = pairs.len();
    let mut out = vec![
        CheckRecord::new("unit-maps", "s(1_q) = q = t(1_q)", col(0), tol, n),
        CheckRecord::new("composable", "s(g) = t(h) on composable pairs", col(1), tol, n),
        CheckRecord::new("product-ends", "s(gh) = s(h), t(gh) = t(g)", col(2), tol, n),
        CheckRecord::new("associativity", "(gh)k = g(hk)", col(3), tol, n),
        CheckRecord::new("inverse", "g g^-1 = 1_t(g), g^-1 g = 1_s(g)", col(4), tol, n),
        CheckRecord::new("unit-law", "1_t(g) g = g = g 1_s(g)", col(5), tol, n),
    ];
    if matches!(gpd.payload, Payload::Contact { .. }) {
        out.push(CheckRecord::new("f-multiplicative", "f(gh) = f(g) f(h)", col(6), tol, n));
    }
    out
}

/// `m^* theta = pr_1^* theta pr_2^* f + pr_2^* theta`, or
/// `m^* Omega = pr_1^* Omega + pr_2^* Omega`, on composable samples.
pub fn check_multiplicativity(gpd: &GroupoidChart, count: usize, seed: u64, tol: f64) -> CheckRecord {
    let pairs = gpd.composable_samples(count, seed);
    let n = gpd.dim();
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|c| {
            let cj = Jet2::seed(c);
            let m = gpd.mult.eval(&cj);
            let g: Vec<Jet2> = cj[..n].to_vec();
            let h = gpd.h_of.eval(&cj);
            let src = c.len();
            match &gpd.payload {
                Payload::Contact { theta, f } => {
                    let lhs = pullback(&theta.eval(&m), &m, src);
                    let p1 = pullback(&theta.eval(&g), &g, src);
                    let p2 = pullback(&theta.eval(&h), &h, src);
                    let fh = f.eval(&h);
                    let rhs = &p1.scale_jet(&fh) + &p2;
                    (&lhs - &rhs).max_abs()
                }
                Payload::Presymplectic { omega } => {
                    let lhs = pullback(&omega.eval(&m), &m, src);
                    let rhs = &pullback(&omega.eval(&g), &g, src) + &pullback(&omega.eval(&h), &h, src);
                    (&lhs - &rhs).max_abs()
                }
            }
        })
        .collect();
    let anchor = match gpd.payload {
        Payload::Contact { .. } => "m^* theta = pr_1^* theta pr_2^* f + pr_2^* theta",
        Payload::Presymplectic { .. } => "m^* Omega = pr_1^* Omega + pr_2^* Omega",
    };
    CheckRecord::new("multiplicativity", anchor, max_residual(vals), tol, pairs.len())
}

fn jacobian_matrix(map: &Map, x: &[f64]) -> DMatrix<f64> {
    let rows = map.at(x);
    DMatrix::from_fn(rows.len(), x.len(), |r, c| rows[r].d(c))
}

/// Matrix of `Y -> i_Y w` for a 2-form `w`.
fn two_form_matrix(w: &Form) -> DMatrix<f64> {
    let n = w.dim();
    DMatrix::from_fn(n, n, |k, j| w.get(&[j, k]).value)
}

/// Dimension of `ker t_* cap ker s_* cap ker theta cap ker dtheta` (or
/// `ker t_* cap ker s_* cap ker Omega`) at each point.
pub fn kernel_dims(gpd: &GroupoidChart, points: &[Vec<f64>]) -> Vec<usize> {
    points
        .par_iter()
        .map(|x| {
            let mut rows = vec![jacobian_matrix(&gpd.target, x), jacobian_matrix(&gpd.source, x)];
            match &gpd.payload {
                Payload::Contact { theta, .. } => {
                    let th = theta.at(x);
                    rows.push(DMatrix::from_row_slice(1, x.len(), &th.values()));
                    rows.push(two_form_matrix(&exterior_derivative(&th).expect("1-form")));
                }
                Payload::Presymplectic { omega } => rows.push(two_form_matrix(&omega.at(x))),
            }
            let total: usize = rows.iter().map(|m| m.nrows()).sum();
            let mut stacked = DMatrix::zeros(total, x.len());
            let mut r0 = 0;
            for m in &rows {
                stacked.view_mut((r0, 0), (m.nrows(), m.ncols())).copy_from(m);
                r0 += m.nrows();
            }
            null_space(&stacked).ncols()
        })
        .collect()
}

pub fn check_nondegeneracy(gpd: &GroupoidChart, points: &[Vec<f64>]) -> CheckRecord {
    let dims = kernel_dims(gpd, points);
    let worst = dims.iter().copied().max().unwrap_or(0);
    let anchor = match gpd.payload {
        Payload::Contact { .. } => "ker t_* cap ker s_* cap ker theta cap ker dtheta = 0",
        Payload::Presymplectic { .. } => "ker t_* cap ker s_* cap ker Omega = 0",
    };
    CheckRecord::new("nondegeneracy", anchor, worst as f64, 0.0, points.len())
        .with_note(format!("largest kernel dimension {worst}"))
}

/// `J(g) = theta(v_Gamma)(g)` against `1 - f(g)`, after checking that the
/// action preserves `theta` and `f`.
pub fn groupoid_moment(gpd: &GroupoidChart, points: &[Vec<f64>], tol: f64) -> Result<Vec<CheckRecord>, FrameError> {
    let (Payload::Contact { theta, f }, Some(v)) = (&gpd.payload, &gpd.v_gamma) else {
        return Err(FrameError::Invalid("moment map needs a contact payload and a circle action".into()));
    };
    let rows: Vec<(f64, f64)> = points
        .par_iter()
        .map(|x| {
            let xj = Jet2::seed(x);
            let vv = v.eval(&xj);
            let th = theta.eval(&xj);
            let fv = f.eval(&xj);
            let inv = lie_derivative(&vv, &th).expect("1-form").max_abs().max(crate::calculus::apply_vector(&vv, &fv).value.abs());
            let j = pair(&th, &vv).value;
            (inv, (j - (1.0 - fv.value)).abs())
        })
        .collect();
    let invariance = max_residual(rows.iter().map(|r| r.0));
    if !(invariance <= tol) {
        return Err(FrameError::Invalid(format!("circle action does not preserve theta and f: residual {invariance:e}")));
    }
    Ok(vec![
        CheckRecord::new("action-invariance", "L_v theta = 0, v(f) = 0", invariance, tol, points.len()),
        CheckRecord::new("groupoid-moment", "theta(v_Gamma) = 1 - f", max_residual(rows.iter().map(|r| r.1)), tol, points.len()),
    ])
}

/// The pushforward through `s` of the graph of the payload matches the
/// base structure at `s(g)`.
pub fn source_forward_check<S: Section>(
    gpd: &GroupoidChart,
    base: &Frame<S>,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<CheckRecord, FrameError> {
    let vals: Vec<Result<f64, FrameError>> = points
        .par_iter()
        .map(|x| {
            let pushed = match &gpd.payload {
                Payload::Contact { theta, .. } => pushforward(&graph_of_1form(gpd.total.clone(), theta.clone()), &gpd.source, x)?,
                Payload::Presymplectic { omega } => pushforward(&graph_of_2form(gpd.total.clone(), omega.clone()), &gpd.source, x)?,
            };
            let q = gpd.source.values(x);
            Ok(subspace_mismatch(&pushed, &base.checked_matrix_at(&q)?))
        })
        .collect();
    let vals = vals.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(CheckRecord::new("source-forward", "s_* graph(payload) = base structure", max_residual(vals), tol, points.len())
        .with_note(format!("{}: source map verified as the forward map", gpd.name)))
}

fn contact_parts(gpd: &GroupoidChart) -> Result<(&FormField, &ScalarField), FrameError> {
    match &gpd.payload {
        Payload::Contact { theta, f } => Ok((theta, f)),
        Payload::Presymplectic { .. } => Err(FrameError::Invalid(format!("{}: needs a contact payload", gpd.name))),
    }
}

fn check_submersion(m: &DMatrix<f64>, what: &str) -> Result<(), FrameError> {
    if rank(m) < m.nrows() {
        return Err(FrameError::Invalid(format!("{what} is not submersive at a sample")));
    }
    Ok(())
}

/// Algebroid data at the unit over `q`.
#[derive(Clone, Debug)]
pub struct AlgebroidAtUnit {
    pub unit: Vec<f64>,
    /// Columns span `ker s_*`.
    pub ker_s: DMatrix<f64>,
    /// Columns span `ker t_*`.
    pub ker_t: DMatrix<f64>,
    /// `t_*` applied to `ker_s`.
    pub anchor: DMatrix<f64>,
}

pub fn algebroid_of_groupoid(gpd: &GroupoidChart, q: &[f64]) -> Result<AlgebroidAtUnit, FrameError> {
    let u = gpd.unit.values(q);
    let js = jacobian_matrix(&gpd.source, &u);
    let jt = jacobian_matrix(&gpd.target, &u);
    check_submersion(&js, "s")?;
    check_submersion(&jt, "t")?;
    let ker_s = null_space(&js);
    let anchor = &jt * &ker_s;
    Ok(AlgebroidAtUnit { unit: u, ker_s, ker_t: null_space(&jt), anchor })
}

/// `d(m(g, .))` applied to `y`, a vector in `ker t_*` at `unit(s(g))`.
pub fn left_invariant(gpd: &GroupoidChart, g: &[f64], y: &[f64]) -> Vec<f64> {
    let n = gpd.dim();
    let u = gpd.unit.values(&gpd.source.values(g));
    let c = gpd.pair_coords(g, &u);
    let free = c.len() - n;
    let jh = jacobian_matrix(&gpd.h_of, &c).columns(n, free).into_owned();
    let jm = jacobian_matrix(&gpd.mult, &c).columns(n, free).into_owned();
    let (dr, _) = lstsq(&jh, &DVector::from_column_slice(y));
    (jm * dr).iter().copied().collect()
}

fn restrict_to_unit(gpd: &GroupoidChart, q: &[f64], w: &[f64]) -> Vec<f64> {
    let du = jacobian_matrix(&gpd.unit, &q);
    (du.transpose() * DVector::from_column_slice(w)).iter().copied().collect()
}

/// `(t_* Y, -r_* Y) + (-i_Y dtheta |TQ, theta(Y))` for `Y` in `ker s_*` at
/// the unit over `q`, flattened as an `E^1` value. With an `Omega` payload
/// the value is `t_* Y + (-i_Y Omega |TQ)`, and the second map flips the
/// sign of the form part.
pub fn iso_sixteen(gpd: &GroupoidChart, q: &[f64], y: &[f64]) -> Vec<f64> {
    iso_value(gpd, q, y, true)
}

/// `(s_* Y, r_* Y) + (i_Y dtheta |TQ, -theta(Y))` for `Y` in `ker t_*`.
pub fn iso_seventeen(gpd: &GroupoidChart, q: &[f64], y: &[f64]) -> Vec<f64> {
    iso_value(gpd, q, y, false)
}

fn iso_value(gpd: &GroupoidChart, q: &[f64], y: &[f64], sixteen: bool) -> Vec<f64> {
    let u = gpd.unit.values(q);
    let sign = if sixteen { 1.0 } else { -1.0 };
    let leg = if sixteen { &gpd.target } else { &gpd.source };
    let yv = DVector::from_column_slice(y);
    let mut out: Vec<f64> = (jacobian_matrix(leg, &u) * &yv).iter().copied().collect();
    let dot = |a: &[f64]| a.iter().zip(y).map(|(p, r)| p * r).sum::<f64>();
    match &gpd.payload {
        Payload::Contact { theta, f } => {
            let uj = Jet2::seed(&u);
            let fj = f.eval(&uj);
            // r = -ln f, so r_* Y = -df(Y) / f
            out.push(sign * dot(&fj.grad) / fj.value);
            let th = theta.eval(&uj);
            let iy = two_form_matrix(&exterior_derivative(&th).expect("1-form")) * &yv;
            out.extend(restrict_to_unit(gpd, q, iy.as_slice()).into_iter().map(|v| -sign * v));
            out.push(sign * dot(&th.values()));
        }
        Payload::Presymplectic { omega } => {
            let iy = two_form_matrix(&omega.at(&u)) * &yv;
            out.extend(restrict_to_unit(gpd, q, iy.as_slice()).into_iter().map(|v| -sign * v));
        }
    }
    out
}

/// Images of `ker s_*` under the first isomorphism and of `ker t_*` under
/// the second span the base structure; the second equals the first after
/// the differential of the inverse; anchors agree.
pub fn iso_span_check<S: Section>(
    gpd: &GroupoidChart,
    base: &Frame<S>,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<CheckRecord>, FrameError> {
    let expected_extra = usize::from(matches!(gpd.payload, Payload::Contact { .. }));
    if S::EXTRA != expected_extra {
        return Err(FrameError::Invalid("base structure type does not match the payload".into()));
    }
    let k = gpd.base_dim() + S::EXTRA;
    let rows: Vec<Result<[f64; 4], FrameError>> = points
        .par_iter()
        .map(|q| {
            let alg = algebroid_of_groupoid(gpd, q)?;
            let target = base.checked_matrix_at(q)?;
            let image = |ker: &DMatrix<f64>, sixteen: bool| {
                let cols: Vec<Vec<f64>> = ker
                    .column_iter()
                    .map(|c| iso_value(gpd, q, c.as_slice(), sixteen))
                    .collect();
                crate::linalg::matrix_from_columns(&cols, 2 * k)
            };
            let m16 = image(&alg.ker_s, true);
            let m17 = image(&alg.ker_t, false);
            let inv = jacobian_matrix(&gpd.inverse, &alg.unit);
            let mut comp: f64 = 0.0;
            for c in alg.ker_t.column_iter() {
                let a = iso_value(gpd, q, c.as_slice(), false);
                let b = iso_value(gpd, q, (&inv * c).as_slice(), true);
                comp = comp.max(dist(&a, &b));
            }
            let anchor_base = target.rows(0, gpd.base_dim()).into_owned();
            let anchor = subspace_mismatch(&crate::linalg::orth(&alg.anchor), &crate::linalg::orth(&anchor_base));
            Ok([subspace_mismatch(&m16, &target), subspace_mismatch(&m17, &target), comp, anchor])
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let col = |i: usize| max_residual(rows.iter().map(|r| r[i]));
    let n = points.len();
    Ok(vec![
        CheckRecord::new("iso16-span", "image of ker s_* at units = base structure", col(0), tol, n),
        CheckRecord::new("iso17-span", "image of ker t_* at units = base structure", col(1), tol, n),
        CheckRecord::new("iso17-composition", "second isomorphism = first after i_*", col(2), tol, n),
        CheckRecord::new("algebroid-anchor", "t_*(ker s_*) = anchor image of the base structure", col(3), tol, n),
    ])
}

/// Solution of the left-invariant field equations at one point.
#[derive(Clone, Debug)]
pub struct CorSolution {
    pub y: Vec<Jet2>,
    /// Rank of the linear system; unique iff equal to `dim Gamma`.
    pub rank: usize,
    pub residual: f64,
}

/// Solve `t_* Y = 0`, `theta(Y) = -g`, `i_Y dtheta = s^* xi - f theta`,
/// `s_* Y = X` at `gj` for a base section `lam` given at `s(g)`. The jets
/// of `lam` must be in the variables of `gj`.
pub fn cor_solve_jets(gpd: &GroupoidChart, gj: &[Jet2], lam: &E1Section) -> Result<CorSolution, FrameError> {
    let (theta, _) = contact_parts(gpd)?;
    let n = gj.len();
    let zero = Jet2::constant(0.0);
    let mut a: Vec<Vec<Jet2>> = Vec::new();
    let mut b: Vec<Jet2> = Vec::new();
    for tj in gpd.target.eval(gj) {
        a.push((0..n).map(|j| tj.partial(j)).collect());
        b.push(zero.clone());
    }
    let th = theta.eval(gj);
    a.push(th.covector().to_vec());
    b.push(-&lam.g);
    let dth = exterior_derivative(&th).expect("1-form");
    let sj = gpd.source.eval(gj);
    let sxi = pullback(&lam.xi, &sj, n);
    for k in 0..n {
        a.push((0..n).map(|j| dth.get(&[j, k])).collect());
        b.push(&sxi.covector()[k] - &(&lam.f * &th.covector()[k]));
    }
    for (i, sc) in sj.iter().enumerate() {
        a.push((0..n).map(|j| sc.partial(j)).collect());
        b.push(lam.x.components()[i].clone());
    }
    let am = DMatrix::from_fn(a.len(), n, |r, c| a[r][c].value);
    let rk = rank(&am);
    if rk < n {
        return Err(FrameError::Invalid(format!("left-invariant field not unique: system rank {rk} < {n}")));
    }
    let y = jet_lstsq(&a, &b).ok_or_else(|| FrameError::Invalid("singular normal equations".into()))?;
    let residual = a
        .iter()
        .zip(&b)
        .map(|(row, rhs)| (row.iter().zip(&y).map(|(p, r)| p.value * r.value).sum::<f64>() - rhs.value).abs())
        .fold(0.0, f64::max);
    Ok(CorSolution { y, rank: rk, residual })
}

/// Numeric version of [`cor_solve_jets`] for a flattened base section.
pub fn cor_computation_solve(gpd: &GroupoidChart, g: &[f64], lam: &[f64]) -> Result<CorSolution, FrameError> {
    cor_solve_jets(gpd, &Jet2::seed(g), &E1Section::from_values(gpd.base_dim(), lam))
}

/// Lie bracket of two vector fields given as jets, at the seed point.
fn vector_bracket(a: &[Jet2], b: &[Jet2]) -> Vec<f64> {
    (0..a.len())
        .map(|i| (0..a.len()).map(|j| a[j].value * b[i].d(j) - b[j].value * a[i].d(j)).sum())
        .collect()
}

/// Left-invariant fields from base sections: unique solutions, the identity
/// `r_* Y = f`, invariance under left translation, and brackets matching
/// the bracket of the base sections.
pub fn cor_check(
    gpd: &GroupoidChart,
    base: &Frame<E1Section>,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<CheckRecord>, FrameError> {
    let (_, f) = contact_parts(gpd)?;
    let n = gpd.dim();
    let rows: Vec<Result<[f64; 5], FrameError>> = points
        .par_iter()
        .map(|g| {
            let q = gpd.source.values(g);
            let u = gpd.unit.values(&q);
            let lams = base.at(&q);
            let fj = f.at(g);
            let mut out = [0.0f64; 5];
            for lam in &lams {
                let v = lam.flatten();
                let sol = cor_computation_solve(gpd, g, &v)?;
                let y: Vec<f64> = sol.y.iter().map(|j| j.value).collect();
                out[0] = out[0].max(sol.residual);
                out[1] = out[1].max((n - sol.rank) as f64);
                let r = -fj.grad.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / fj.value;
                out[2] = out[2].max((r - lam.f.value).abs());
                let at_unit: Vec<f64> = cor_computation_solve(gpd, &u, &v)?.y.iter().map(|j| j.value).collect();
                out[3] = out[3].max(dist(&left_invariant(gpd, g, &at_unit), &y));
            }
            let gj = Jet2::seed(g);
            let moving = base.eval(&gpd.source.eval(&gj));
            let ys = moving
                .iter()
                .map(|lam| cor_solve_jets(gpd, &gj, lam).map(|s| s.y))
                .collect::<Result<Vec<_>, _>>()?;
            for i in 0..lams.len() {
                for j in i + 1..lams.len() {
                    let br = vector_bracket(&ys[i], &ys[j]);
                    let lam = lams[i].bracket(&lams[j]).flatten();
                    let y: Vec<f64> = cor_computation_solve(gpd, g, &lam)?.y.iter().map(|j| j.value).collect();
                    out[4] = out[4].max(dist(&br, &y));
                }
            }
            Ok(out)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let col = |i: usize| max_residual(rows.iter().map(|r| r[i]));
    let c = points.len();
    Ok(vec![
        CheckRecord::new("cor-system", "t_*Y = 0, theta(Y) = -g, i_Y dtheta = s^*xi - f theta, s_*Y = X", col(0), tol, c),
        CheckRecord::new("cor-unique", "linear system has full rank", col(1), 0.0, c),
        CheckRecord::new("cor-r-identity", "r_* Y = f", col(2), tol, c),
        CheckRecord::new("cor-left-invariant", "Y_g = d(m(g, .)) Y at the unit over s(g)", col(3), tol, c),
        CheckRecord::new("cor-bracket", "[Y_a, Y_b] = Y of the bracket of the base sections", col(4), tol, c),
    ])
}

/// Base structure of a built-in groupoid.
#[derive(Clone)]
pub enum GroupoidBase {
    Jacobi(Frame<E1Section>),
    Dirac(Frame<DiracSection>),
}

/// Every applicable check on `count` samples.
pub fn run_all(gpd: &GroupoidChart, base: &GroupoidBase, count: usize, seed: u64, tol: f64) -> Result<Vec<CheckRecord>, FrameError> {
    let mut out = check_structure(gpd, count, seed, tol);
    out.push(check_multiplicativity(gpd, count, seed, tol));
    let pts = gpd.total.sample(count, seed);
    out.push(check_nondegeneracy(gpd, &pts));
    if gpd.v_gamma.is_some() {
        out.extend(groupoid_moment(gpd, &pts, tol)?);
    }
    let base_pts = gpd.base.sample(count, seed);
    match base {
        GroupoidBase::Jacobi(frame) => {
            out.push(source_forward_check(gpd, frame, &pts, tol)?);
            out.extend(iso_span_check(gpd, frame, &base_pts, tol)?);
            out.extend(cor_check(gpd, frame, &pts, tol)?);
        }
        GroupoidBase::Dirac(frame) => {
            out.push(source_forward_check(gpd, frame, &pts, tol)?);
            out.extend(iso_span_check(gpd, frame, &base_pts, tol)?);
        }
    }
    Ok(out)
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// `(R^5, x deps - e^t dth1 + dth2, e^t)` over `Q = S^1 x R`.
pub fn example_1dim_spec() -> GroupoidSpec {
    GroupoidSpec {
        name: "1dim".into(),
        coords: strings(&["th1", "t", "eps", "th2", "x"]),
        domain: vec![(0.0, 1.0), (-1.5, 1.5), (-2.0, 2.0), (0.0, 1.0), (-2.0, 2.0)],
        base_coords: strings(&["th", "x"]),
        base_domain: vec![(0.0, 1.0), (-2.0, 2.0)],
        source: strings(&["th2", "x"]),
        target: strings(&["th1", "exp(-t)*x"]),
        unit: strings(&["th", "0", "0", "th", "x"]),
        inverse: strings(&["th2", "-t", "-eps", "th1", "exp(-t)*x"]),
        h_free: vec![1, 2, 3],
        h_of: strings(&["th2", "t_h", "eps_h", "th2_h", "exp(t_h)*x"]),
        mult: strings(&["th1", "t + t_h", "eps + eps_h", "th2_h", "exp(t_h)*x"]),
        payload: PayloadSpec::Contact { theta: strings(&["-exp(t)", "0", "x", "1", "0"]), f: "exp(t)".into() },
        v_gamma: Some(strings(&["1", "0", "0", "1", "0"])),
        periods: vec![("th1".into(), 1.0), ("th2".into(), 1.0), ("th".into(), 1.0)],
    }
}

pub fn example_1dim() -> GroupoidChart {
    example_1dim_spec().compile().expect("built-in spec")
}

/// `(th1, x1, eps, th2, x2)` with `x > 0`, `x2 deps - (x2/x1) dth1 + dth2`.
pub fn example_lcs_qplus_spec() -> GroupoidSpec {
    GroupoidSpec {
        name: "lcs-qplus".into(),
        coords: strings(&["th1", "x1", "eps", "th2", "x2"]),
        domain: vec![(0.0, 1.0), (0.5, 2.0), (-1.0, 1.0), (0.0, 1.0), (0.5, 2.0)],
        base_coords: strings(&["th", "x"]),
        base_domain: vec![(0.0, 1.0), (0.5, 2.0)],
        source: strings(&["th2", "x2"]),
        target: strings(&["th1", "x1"]),
        unit: strings(&["th", "x", "0", "th", "x"]),
        inverse: strings(&["th2", "x2", "-eps", "th1", "x1"]),
        h_free: vec![2, 3, 4],
        h_of: strings(&["th2", "x2", "eps_h", "th2_h", "x2_h"]),
        mult: strings(&["th1", "x1", "eps + eps_h", "th2_h", "x2_h"]),
        payload: PayloadSpec::Contact { theta: strings(&["-x2/x1", "0", "x2", "1", "0"]), f: "x2/x1".into() },
        v_gamma: Some(strings(&["1", "0", "0", "1", "0"])),
        periods: vec![("th1".into(), 1.0), ("th2".into(), 1.0), ("th".into(), 1.0)],
    }
}

pub fn example_lcs_qplus() -> GroupoidChart {
    example_lcs_qplus_spec().compile().expect("built-in spec")
}

/// `(th, eps, x)` with `dth + x deps`, `f = 1`, `s = t = x`.
pub fn example_reduced_1dim_spec() -> GroupoidSpec {
    GroupoidSpec {
        name: "reduced-1dim".into(),
        coords: strings(&["th", "eps", "x"]),
        domain: vec![(0.0, 1.0), (-1.0, 1.0), (-2.0, 2.0)],
        base_coords: strings(&["x"]),
        base_domain: vec![(-2.0, 2.0)],
        source: strings(&["x"]),
        target: strings(&["x"]),
        unit: strings(&["0", "0", "x"]),
        inverse: strings(&["-th", "-eps", "x"]),
        h_free: vec![0, 1],
        h_of: strings(&["th_h", "eps_h", "x"]),
        mult: strings(&["th + th_h", "eps + eps_h", "x"]),
        payload: PayloadSpec::Contact { theta: strings(&["1", "x", "0"]), f: "1".into() },
        v_gamma: None,
        periods: vec![("th".into(), 1.0)],
    }
}

pub fn example_reduced_1dim() -> GroupoidChart {
    example_reduced_1dim_spec().compile().expect("built-in spec")
}

/// Pair groupoid of the plane with `-omega_1 + omega_2`.
pub fn example_pair_presymplectic_spec() -> GroupoidSpec {
    GroupoidSpec {
        name: "pair-presymplectic".into(),
        coords: strings(&["x1", "y1", "x2", "y2"]),
        domain: vec![(-1.0, 1.0); 4],
        base_coords: strings(&["x", "y"]),
        base_domain: vec![(-1.0, 1.0); 2],
        source: strings(&["x2", "y2"]),
        target: strings(&["x1", "y1"]),
        unit: strings(&["x", "y", "x", "y"]),
        inverse: strings(&["x2", "y2", "x1", "y1"]),
        h_free: vec![2, 3],
        h_of: strings(&["x2", "y2", "x2_h", "y2_h"]),
        mult: strings(&["x1", "y1", "x2_h", "y2_h"]),
        payload: PayloadSpec::Presymplectic { omega: strings(&["-1", "0", "0", "0", "0", "1"]) },
        v_gamma: None,
        periods: vec![],
    }
}

pub fn example_pair_presymplectic() -> GroupoidChart {
    example_pair_presymplectic_spec().compile().expect("built-in spec")
}

/// `(Q x Q x R, -e^{-s} sigma_1 + sigma_2, e^{-s})` for `Q = P x S^1` and
/// `sigma = dphi + a`, with `a` a 1-form on `P`. The target is the first
/// factor.
pub fn example_sympl(p: &Chart, a: &[ScalarField]) -> GroupoidChart {
    let k = p.dim();
    let m = k + 1;
    let n = 2 * m + 1;
    let mut names: Vec<String> = Vec::new();
    let mut domain = Vec::new();
    for suffix in ["1", "2"] {
        names.extend(p.coord_names.iter().map(|c| format!("{c}{suffix}")));
        names.push(format!("phi{suffix}"));
        domain.extend(p.domain.iter().copied());
        domain.push((0.0, 1.0));
    }
    names.push("s".into());
    domain.push((-1.0, 1.0));
    let mut base_names = p.coord_names.clone();
    base_names.push("phi".into());
    let mut base_domain = p.domain.clone();
    base_domain.push((0.0, 1.0));
    let c = ScalarField::coordinate;
    let sigma = |offset: usize| -> Vec<ScalarField> {
        let sel = Map::select(&(offset..offset + k).collect::<Vec<_>>());
        let mut v: Vec<ScalarField> = a.iter().map(|ai| ai.compose(&sel)).collect();
        v.push(ScalarField::constant(1.0));
        v
    };
    let ef = ScalarField::new(move |x| (-&x[n - 1]).exp());
    let mut theta: Vec<ScalarField> = sigma(0).iter().map(|s| s.mul(&ef).scale(-1.0)).collect();
    theta.extend(sigma(m));
    theta.push(ScalarField::zero());
    let mut unit: Vec<ScalarField> = (0..m).chain(0..m).map(c).collect();
    unit.push(ScalarField::zero());
    let mut inverse: Vec<ScalarField> = (m..2 * m).chain(0..m).map(c).collect();
    inverse.push(c(n - 1).scale(-1.0));
    let h_free: Vec<usize> = (m..n).collect();
    let mut h_of: Vec<ScalarField> = (m..2 * m).map(c).collect();
    h_of.extend((0..m + 1).map(|j| c(n + j)));
    let mut mult: Vec<ScalarField> = (0..m).map(c).collect();
    mult.extend((0..m).map(|j| c(n + j)));
    mult.push(c(n - 1).add(&c(n + m)));
    let mut v = vec![ScalarField::zero(); n];
    v[k] = ScalarField::constant(1.0);
    v[m + k] = ScalarField::constant(1.0);
    GroupoidChart {
        name: "sympl".into(),
        total: Chart::from_parts(names, domain).expect("valid chart").with_period("phi1", 1.0).with_period("phi2", 1.0),
        base: Chart::from_parts(base_names, base_domain).expect("valid chart").with_period("phi", 1.0),
        source: Map::select(&(m..2 * m).collect::<Vec<_>>()),
        target: Map::select(&(0..m).collect::<Vec<_>>()),
        unit: Map::new(unit),
        inverse: Map::new(inverse),
        h_free,
        h_of: Map::new(h_of),
        mult: Map::new(mult),
        payload: Payload::Contact { theta: FormField::one(theta), f: ef },
        v_gamma: Some(MultivectorField::vector(v)),
    }
}

/// [`example_sympl`] for the plane with `a = (x dy - y dx)/2`.
pub fn example_sympl_plane() -> GroupoidChart {
    let p = Chart::new(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)]).expect("valid chart");
    let a = vec![ScalarField::coordinate(1).scale(-0.5), ScalarField::coordinate(0).scale(0.5)];
    example_sympl(&p, &a)
}

fn jacobi_1dim_base(chart: Chart) -> Frame<E1Section> {
    // Lambda = x d_th ^ d_x, E = d_th
    let lambda = MultivectorField::new(2, 2, vec![ScalarField::coordinate(1)]);
    graph_of_jacobi_pair(chart, lambda, MultivectorField::coordinate_vector(2, 0))
}

/// A built-in groupoid with its base structure, built independently of
/// the groupoid.
pub fn builtin(name: &str) -> Option<(GroupoidChart, GroupoidBase)> {
    match name {
        "1dim" => {
            let g = example_1dim();
            let b = GroupoidBase::Jacobi(jacobi_1dim_base(g.base.clone()));
            Some((g, b))
        }
        "lcs-qplus" => {
            let g = example_lcs_qplus();
            let b = GroupoidBase::Jacobi(jacobi_1dim_base(g.base.clone()));
            Some((g, b))
        }
        "sympl" => Some((example_sympl_plane(), GroupoidBase::Jacobi(crate::prequantize::example_plane(1.0).build_lbar()))),
        "reduced-1dim" => {
            let g = example_reduced_1dim();
            let b = diracization(&graph_of_bivector(g.base.clone(), MultivectorField::zero(1, 2)));
            Some((g, GroupoidBase::Jacobi(b)))
        }
        "pair-presymplectic" => {
            let g = example_pair_presymplectic();
            let omega = FormField::new(2, 2, vec![ScalarField::constant(1.0)]);
            let b = GroupoidBase::Dirac(graph_of_2form(g.base.clone(), omega));
            Some((g, b))
        }
        _ => None,
    }
}

pub const BUILTIN_NAMES: [&str; 5] = ["1dim", "sympl", "lcs-qplus", "reduced-1dim", "pair-presymplectic"];

/// Reduction of the 1dim groupoid at `J = 0` by the diagonal circle.
pub fn reduce_groupoid_1dim(count: usize, seed: u64, tol: f64) -> Result<Vec<CheckRecord>, FrameError> {
    let full = example_1dim();
    let red = example_reduced_1dim();
    let (theta, _) = contact_parts(&full)?;
    let (theta_r, f_r) = contact_parts(&red)?;
    let slice = Chart::new(&["th1", "eps", "th2", "x"], &[(0.0, 1.0), (-1.0, 1.0), (0.0, 1.0), (-2.0, 2.0)]).expect("valid chart");
    let pts = slice.sample(count, seed);
    let c = ScalarField::coordinate;
    // slice t = 0 and quotient th = th2 - th1
    let iota = Map::new(vec![c(0), ScalarField::zero(), c(1), c(2), c(3)]);
    let pi = Map::new(vec![c(2).add(&c(0).scale(-1.0)), c(1), c(3)]);
    let v = full.v_gamma.clone().expect("circle action");
    let rows: Vec<[f64; 3]> = pts
        .par_iter()
        .map(|p| {
            let pj = Jet2::seed(p);
            let ij = iota.eval(&pj);
            let qj = pi.eval(&pj);
            let up = pullback(&theta.eval(&ij), &ij, 4);
            let down = pullback(&theta_r.eval(&qj), &qj, 4);
            let on_slice = pair(&theta.eval(&ij), &v.eval(&ij)).value.abs();
            let r = pi.values(p);
            let mut shifted = r.clone();
            shifted[0] += 1.0;
            let deck = (&theta_r.at(&r) - &theta_r.at(&shifted)).max_abs().max((f_r.at(&r).value - f_r.at(&shifted).value).abs());
            [(&up - &down).max_abs(), on_slice, deck]
        })
        .collect();
    let col = |i: usize| max_residual(rows.iter().map(|r| r[i]));
    let mut out = vec![
        CheckRecord::new("reduced-form", "iota^* theta = pi^*(dth + x deps) on the slice t = 0", col(0), tol, count),
        CheckRecord::new("reduced-level", "J = 0 on the slice t = 0", col(1), tol, count),
        CheckRecord::new("reduced-deck", "structure invariant under th -> th + 1", col(2), tol, count),
    ];
    let rpts = red.total.sample(count, seed);
    let sym = max_residual(rpts.iter().map(|x| {
        let d = exterior_derivative(&theta_r.at(x)).expect("1-form");
        // d(dth + x deps) = dx ^ deps = -deps ^ dx
        (d.get(&[1, 2]).value + 1.0).abs().max(d.get(&[0, 1]).value.abs()).max(d.get(&[0, 2]).value.abs())
    }));
    out.push(CheckRecord::new("reduced-symplectic", "d(dth + x deps) = dx ^ deps", sym, tol, count));
    let reeb = E1Section::new(Multivector::zero(1, 1), Jet2::constant(0.0), Form::zero(1, 1), Jet2::constant(-1.0)).flatten();
    let period = max_residual(rpts.iter().map(|x| {
        cor_computation_solve(&red, x, &reeb)
            .map(|s| dist(&s.y.iter().map(|j| j.value).collect::<Vec<_>>(), &[1.0, 0.0, 0.0]))
            .unwrap_or(f64::NAN)
    }));
    out.push(
        CheckRecord::new("reduced-reeb-period", "R = d_th, whose time-1 flow is the deck translation", period, tol, count)
            .with_note("theta(d_th) = 1, so the residual Z-action has period 1"),
    );
    let (_, base) = builtin("reduced-1dim").expect("built-in");
    out.extend(run_all(&red, &base, count, seed, tol)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prequantize::example_line;

    const TOL: f64 = 1e-9;

    fn all_pass(records: &[CheckRecord]) {
        for r in records {
            assert!(r.pass, "{} failed: {:e}", r.id, r.max_residual);
        }
    }

    #[test]
    fn builtins_pass_every_check() {
        for name in BUILTIN_NAMES {
            let (g, b) = builtin(name).unwrap();
            all_pass(&run_all(&g, &b, 100, 42, TOL).unwrap());
        }
    }

    #[test]
    fn doubled_exponent_breaks_multiplicativity() {
        let mut spec = example_1dim_spec();
        spec.payload = PayloadSpec::Contact { theta: strings(&["-exp(t)", "0", "x", "1", "0"]), f: "exp(2*t)".into() };
        let g = spec.compile().unwrap();
        let m = check_multiplicativity(&g, 100, 42, TOL);
        assert!(!m.pass && m.max_residual > 1e-2, "{m:?}");
        // e^{2t} is itself multiplicative, so only the law for theta breaks
        let fm = check_structure(&g, 100, 42, TOL).into_iter().find(|r| r.id == "f-multiplicative").unwrap();
        assert!(fm.pass);
    }

    #[test]
    fn nondegenerate_on_the_zero_section_of_x() {
        let g = example_1dim();
        let pts: Vec<Vec<f64>> = g.total.sample(50, 3).into_iter().map(|mut p| {
            p[4] = 0.0;
            p
        })
        .collect();
        assert!(kernel_dims(&g, &pts).iter().all(|&d| d == 0));
        let mut spec = example_1dim_spec();
        spec.payload = PayloadSpec::Contact { theta: strings(&["0", "0", "0", "1", "0"]), f: "exp(t)".into() };
        let bad = check_nondegeneracy(&spec.compile().unwrap(), &g.total.sample(20, 4));
        assert!(!bad.pass && bad.max_residual >= 1.0);
    }

    #[test]
    fn moment_maps_match_closed_forms() {
        let g = example_1dim();
        let (theta, _) = contact_parts(&g).unwrap();
        let v = g.v_gamma.clone().unwrap();
        for p in g.total.sample(50, 5) {
            let j = pair(&theta.at(&p), &v.at(&p)).value;
            assert!((j - (1.0 - p[1].exp())).abs() < 1e-12);
        }
        for q in g.base.sample(20, 6) {
            let u = g.unit.values(&q);
            assert!(pair(&theta.at(&u), &v.at(&u)).value.abs() < 1e-12);
        }
        let s = example_sympl_plane();
        let (theta, _) = contact_parts(&s).unwrap();
        let v = s.v_gamma.clone().unwrap();
        for p in s.total.sample(50, 7) {
            let j = pair(&theta.at(&p), &v.at(&p)).value;
            assert!((j - (1.0 - (-p[6]).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn action_that_moves_theta_is_rejected() {
        let mut spec = example_1dim_spec();
        spec.v_gamma = Some(strings(&["0", "0", "0", "0", "1"]));
        assert!(groupoid_moment(&spec.compile().unwrap(), &example_1dim().total.sample(10, 1), TOL).is_err());
    }

    /// The line's prequantization, reordered from `(x, th)` to `(th, x)`.
    fn line_lbar_swapped() -> Frame<E1Section> {
        let lbar = example_line(2.0).build_lbar();
        let chart = example_1dim().base;
        Frame::new(chart, move |p| {
            lbar.eval(&[p[1].clone(), p[0].clone()])
                .into_iter()
                .map(|s| {
                    let x = s.x.components();
                    let xi = s.xi.covector();
                    E1Section::new(
                        Multivector::vector(vec![x[1].clone(), x[0].clone()]),
                        s.f,
                        Form::one(vec![xi[1].clone(), xi[0].clone()]),
                        s.g,
                    )
                })
                .collect()
        })
    }

    #[test]
    fn first_isomorphism_spans_the_prequantization_of_the_line() {
        let g = example_1dim();
        let pts = g.base.sample(100, 42);
        all_pass(&iso_span_check(&g, &line_lbar_swapped(), &pts, 1e-9).unwrap());
    }

    #[test]
    fn first_isomorphism_on_coordinate_vectors() {
        let g = example_1dim();
        let (th, x) = (0.3, 1.7);
        let e = |i: usize| {
            let mut v = vec![0.0; 5];
            v[i] = 1.0;
            v
        };
        let close = |a: Vec<f64>, b: [f64; 6]| assert!(dist(&a, &b) < 1e-12, "{a:?} vs {b:?}");
        close(iso_sixteen(&g, &[th, x], &e(0)), [1.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        close(iso_sixteen(&g, &[th, x], &e(1)), [0.0, -x, 1.0, 1.0, 0.0, 0.0]);
        close(iso_sixteen(&g, &[th, x], &e(2)), [0.0, 0.0, 0.0, 0.0, 1.0, x]);
    }

    #[test]
    fn reeb_section_gives_the_second_angle() {
        let g = example_1dim();
        // (E, 0) + (0, -1) with E = d_th
        let lam = [1.0, 0.0, 0.0, 0.0, 0.0, -1.0];
        for p in g.total.sample(50, 9) {
            let y: Vec<f64> = cor_computation_solve(&g, &p, &lam).unwrap().y.iter().map(|j| j.value).collect();
            assert!(dist(&y, &[0.0, 0.0, 0.0, 1.0, 0.0]) < 1e-12, "{y:?}");
            let zero: Vec<f64> = cor_computation_solve(&g, &p, &[0.0; 6]).unwrap().y.iter().map(|j| j.value).collect();
            assert!(dist(&zero, &[0.0; 5]) < 1e-15);
        }
    }

    #[test]
    fn additive_direction_is_central() {
        let g = example_1dim();
        let (_, base) = builtin("1dim").unwrap();
        let GroupoidBase::Jacobi(base) = base else { unreachable!() };
        for p in g.total.sample(30, 11) {
            let gj = Jet2::seed(&p);
            let s = g.source.eval(&gj);
            // image of d_eps under the second isomorphism: (0, 0) + (-dx, -x)
            let eps = E1Section::new(
                Multivector::zero(2, 1),
                Jet2::constant(0.0),
                Form::one(vec![Jet2::constant(0.0), Jet2::constant(-1.0)]),
                -&s[1],
            );
            let ye = cor_solve_jets(&g, &gj, &eps).unwrap().y;
            assert!(dist(&ye.iter().map(|j| j.value).collect::<Vec<_>>(), &[0.0, 0.0, 1.0, 0.0, 0.0]) < 1e-12);
            for lam in base.eval(&s) {
                let y = cor_solve_jets(&g, &gj, &lam).unwrap().y;
                assert!(vector_bracket(&ye, &y).iter().all(|c| c.abs() < 1e-12));
                assert!(vector_bracket(&y, &y).iter().all(|c| c.abs() < 1e-15));
            }
        }
    }

    #[test]
    fn algebroid_kernels_have_complementary_dimensions() {
        let g = example_1dim();
        let a = algebroid_of_groupoid(&g, &[0.2, -0.4]).unwrap();
        assert_eq!((a.ker_s.ncols(), a.ker_t.ncols()), (3, 3));
        let mut spec = example_1dim_spec();
        spec.source = strings(&["th2", "0"]);
        assert!(algebroid_of_groupoid(&spec.compile().unwrap(), &[0.2, -0.4]).is_err());
    }

    #[test]
    fn reduction_of_the_1dim_groupoid() {
        all_pass(&reduce_groupoid_1dim(100, 42, TOL).unwrap());
    }

    #[test]
    fn spec_errors_name_the_field() {
        let mut spec = example_1dim_spec();
        spec.mult[1] = "t + (t_h".into();
        let err = spec.compile().err().unwrap().to_string();
        assert!(err.starts_with("mult[1]"), "{err}");
        spec = example_1dim_spec();
        spec.target.pop();
        assert!(matches!(spec.compile(), Err(SpecError::Length { .. })));
    }
}
