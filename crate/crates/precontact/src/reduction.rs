//! Moment maps and reduction at level zero, for cotangent prolongations
//! `T*M x R` and for Jacobi-Dirac structures on a space with a free action.
//!
//! Quotients are given by explicit projections `pi` (and, where needed,
//! generators of the action); no orbit-space construction is attempted.
//! Constant-rank questions are answered on the sample set only.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::calculus::{pair, Multivector};
use crate::chart::Chart;
use crate::courant::{E1Section, Frame, Section};
use crate::error::FrameError;
use crate::field::{Map, MultivectorField};
use crate::jet::Jet2;
use crate::linalg::{lstsq, matrix_from_rows, null_space, rank, span_residual, subspace_mismatch};
use crate::report::{max_residual, CheckRecord};

/// `<J(xi, t), v> = xi(v_M)`.
pub fn cotangent_moment(xi: &[f64], v_m: &[f64]) -> f64 {
    xi.iter().zip(v_m).map(|(a, b)| a * b).sum()
}

/// A free action on `M` by its generators, with a submersion onto `M / G`.
#[derive(Clone)]
pub struct CotangentAction {
    pub m_chart: Chart,
    pub generators: Vec<MultivectorField>,
    pub pi: Map,
}

/// Transpose of the Jacobian of `pi` at `m`, as `pi^*` on covectors.
fn pullback_matrix(pi: &Map, m: &[f64]) -> DMatrix<f64> {
    let jac = pi.jacobian(m);
    matrix_from_rows(&jac, m.len()).transpose()
}

/// Solve `pi^* mu = xi`; returns `mu` and the residual.
pub fn descend_covector(pi: &Map, m: &[f64], xi: &[f64]) -> (Vec<f64>, f64) {
    let (mu, r) = lstsq(&pullback_matrix(pi, m), &DVector::from_column_slice(xi));
    (mu.iter().copied().collect(), r)
}

fn submersion_check(pi: &Map, m: &[f64]) -> Result<(), FrameError> {
    let k = pi.out_dim();
    let r = rank(&pullback_matrix(pi, m));
    if r != k {
        return Err(FrameError::Invalid(format!("quotient map not submersive at {m:?}: rank {r}, expected {k}")));
    }
    Ok(())
}

/// Checks of `T*M x R //_0 G = T*(M/G) x R` at samples of `M`:
/// the zero level is the annihilator of the orbits, covectors in it descend,
/// and the canonical forms agree under the identification.
pub fn cotangent_reduce_check(
    action: &CotangentAction,
    points: &[Vec<f64>],
    seed: u64,
    tol: f64,
) -> Result<Vec<CheckRecord>, FrameError> {
    use rand::{Rng, SeedableRng};
    let n = action.m_chart.dim();
    let k = action.generators.len();
    let rows: Vec<Result<[f64; 3], FrameError>> = points
        .par_iter()
        .enumerate()
        .map(|(idx, m)| {
            submersion_check(&action.pi, m)?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
            let gens: Vec<Vec<f64>> = action.generators.iter().map(|g| g.at(m).values()).collect();
            // zero level: annihilator of the generators
            let jrows = matrix_from_rows(&gens, n);
            let ann = null_space(&jrows);
            let dim_err = (ann.ncols() as f64 - (n - k) as f64).abs();
            let pulled = pullback_matrix(&action.pi, m);
            let mut worst_level = dim_err;
            for c in 0..pulled.ncols() {
                let xi: Vec<f64> = pulled.column(c).iter().copied().collect();
                for g in &gens {
                    worst_level = worst_level.max(cotangent_moment(&xi, g).abs());
                }
            }
            let mut worst_desc: f64 = 0.0;
            let mut worst_form: f64 = 0.0;
            for c in 0..ann.ncols() {
                let xi: Vec<f64> = ann.column(c).iter().copied().collect();
                let (mu, r) = descend_covector(&action.pi, m, &xi);
                worst_desc = worst_desc.max(r);
                let dm: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let lam: f64 = rng.gen_range(-1.0..1.0);
                let lhs = cotangent_moment(&xi, &dm) + lam;
                let jac = action.pi.jacobian(m);
                let pdm: Vec<f64> = jac.iter().map(|row| cotangent_moment(row, &dm)).collect();
                let rhs = cotangent_moment(&mu, &pdm) + lam;
                worst_form = worst_form.max((lhs - rhs).abs());
            }
            Ok([worst_level, worst_desc, worst_form])
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let col = |i: usize| max_residual(rows.iter().map(|r| r[i]));
    let m = points.len();
    Ok(vec![
        CheckRecord::new("cotangent-zero-level", "J^-1(0) = annihilator of the orbits, J(pi^* mu) = 0", col(0), tol, m),
        CheckRecord::new("cotangent-descend", "xi in J^-1(0) has xi = pi^* mu", col(1), tol, m),
        CheckRecord::new("cotangent-form", "xi(p_* v) + lambda = mu(pbar_* Phi_* [v]) + lambda", col(2), tol, m),
    ])
}

/// `<J((X, f) + (xi, g)), v> = xi(v_Q)`.
pub fn jd_moment(s: &E1Section, v_q: &Multivector) -> f64 {
    pair(&s.xi, v_q).value
}

/// Rank of `Lbar` intersected with `(v_Q, 0) + (0, 0)` at each sample.
#[derive(Clone, Debug)]
pub struct ZeroLevelRank {
    pub ranks: Vec<usize>,
    pub constant: bool,
    pub record: CheckRecord,
}

fn vertical_vector(v: &[f64]) -> DVector<f64> {
    let m = v.len();
    let mut out = DVector::zeros(2 * (m + 1));
    out.rows_mut(0, m).copy_from_slice(v);
    out
}

pub fn zero_level_rank(
    lbar: &Frame<E1Section>,
    v_q: &MultivectorField,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<ZeroLevelRank, FrameError> {
    let ranks: Vec<Result<usize, FrameError>> = points
        .par_iter()
        .map(|q| {
            let m = lbar.checked_matrix_at(q)?;
            let v = vertical_vector(&v_q.at(q).values());
            if v.norm() == 0.0 {
                return Ok(0);
            }
            Ok(usize::from(span_residual(&m, &v) / (1.0 + v.norm()) <= tol))
        })
        .collect();
    let ranks = ranks.into_iter().collect::<Result<Vec<_>, _>>()?;
    let lo = ranks.iter().copied().min().unwrap_or(0);
    let hi = ranks.iter().copied().max().unwrap_or(0);
    let constant = lo == hi;
    let record = CheckRecord::new(
        "zero-level-rank",
        "rank of Lbar cap (g_Q, 0) + (0, 0) is constant",
        (hi - lo) as f64,
        0.0,
        points.len(),
    )
    .with_note(format!("ranks in [{lo}, {hi}] on the sample set; constancy on samples is a necessary check only"));
    Ok(ZeroLevelRank { ranks, constant, record })
}

/// A free action on `Q` by one generator, with the quotient map `pi`.
#[derive(Clone)]
pub struct ActionModel {
    pub q_chart: Chart,
    pub v_q: MultivectorField,
    pub pi: Map,
}

impl ActionModel {
    /// `pi_* v_Q = 0` at the samples.
    pub fn check(&self, points: &[Vec<f64>], tol: f64) -> Result<CheckRecord, FrameError> {
        let vals: Vec<Result<f64, FrameError>> = points
            .par_iter()
            .map(|q| {
                submersion_check(&self.pi, q)?;
                let v = self.v_q.at(q).values();
                Ok(self.pi.jacobian(q).iter().map(|row| cotangent_moment(row, &v).abs()).fold(0.0, f64::max))
            })
            .collect();
        let vals = vals.into_iter().collect::<Result<Vec<_>, _>>()?;
        Ok(CheckRecord::new("action-vertical", "pi_* v_Q = 0", max_residual(vals), tol, points.len()))
    }
}

/// Basis of the fibre of `J^-1(0)` inside `Lbar` at `q`, as columns.
pub fn zero_level_fibre(lbar: &Frame<E1Section>, v_q: &MultivectorField, q: &[f64]) -> Result<DMatrix<f64>, FrameError> {
    let m = lbar.checked_matrix_at(q)?;
    let dim = q.len();
    let v = v_q.at(q).values();
    // J on frame coefficients: xi-block paired with v_Q
    let j = DMatrix::from_fn(1, m.ncols(), |_, c| (0..dim).map(|i| m[(dim + 1 + i, c)] * v[i]).sum());
    let n = null_space(&j);
    Ok(&m * n)
}

/// `(X, f) + (xi, g) -> (pi_* X, f) + (mu, g)` with `pi^* mu = xi`.
/// Returns the image and the largest descent residual.
pub fn reduce_fibre(fibre: &DMatrix<f64>, pi: &Map, q: &[f64]) -> (DMatrix<f64>, f64) {
    let dim = q.len();
    let k = pi.out_dim();
    let jac = matrix_from_rows(&pi.jacobian(q), dim);
    let mut out = DMatrix::zeros(2 * (k + 1), fibre.ncols());
    let mut worst: f64 = 0.0;
    for c in 0..fibre.ncols() {
        let col = fibre.column(c);
        let x = &jac * col.rows(0, dim);
        let xi: Vec<f64> = col.rows(dim + 1, dim).iter().copied().collect();
        let (mu, r) = descend_covector(pi, q, &xi);
        worst = worst.max(r / (1.0 + col.norm()));
        out.view_mut((0, c), (k, 1)).copy_from(&x);
        out[(k, c)] = col[dim];
        out.view_mut((k + 1, c), (k, 1)).copy_from_slice(&mu);
        out[(2 * k + 1, c)] = col[2 * dim + 1];
    }
    (out, worst)
}

/// Reduction of `Lbar` by the action: `J^-1(0) / G` against `target` on
/// the quotient, and optionally `J^-1(0) = Lbar_0` fibrewise.
pub fn reduce_lbar(
    lbar: &Frame<E1Section>,
    action: &ActionModel,
    target: &Frame<E1Section>,
    lbar0: Option<&Frame<E1Section>>,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<CheckRecord>, FrameError> {
    let rows: Vec<Result<[f64; 3], FrameError>> = points
        .par_iter()
        .map(|q| {
            let fibre = zero_level_fibre(lbar, &action.v_q, q)?;
            let (img, desc) = reduce_fibre(&fibre, &action.pi, q);
            let p = action.pi.values(q);
            let mismatch = subspace_mismatch(&img, &target.checked_matrix_at(&p)?);
            let l0 = match lbar0 {
                Some(f) => subspace_mismatch(&fibre, &f.matrix_at(q)),
                None => 0.0,
            };
            Ok([desc, mismatch, l0])
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let col = |i: usize| max_residual(rows.iter().map(|r| r[i]));
    let m = points.len();
    let mut out = vec![
        CheckRecord::new("reduce-descend", "xi basic on J^-1(0)", col(0), tol, m),
        CheckRecord::new("reduce-image", "J^-1(0) / G = reduced structure", col(1), tol, m),
    ];
    if lbar0.is_some() {
        out.push(CheckRecord::new("reduce-zero-level", "J^-1(0) = Lbar_0", col(2), tol, m));
    }
    Ok(out)
}

/// `theta_Lbar = pr^*(theta_c + dt)` on the total space of a frame, at
/// `(q, c)` on the tangent vector `(dq, dc)`.
pub fn theta_lbar(frame: &Frame<E1Section>, q: &[f64], c: &[f64], dq: &[f64], dc: &[f64]) -> f64 {
    let secs = frame.at(q);
    let dim = q.len();
    let mut xi = vec![0.0; dim];
    let mut dg = 0.0;
    for (k, s) in secs.iter().enumerate() {
        for i in 0..dim {
            xi[i] += c[k] * s.xi.values()[i];
        }
        let grad: f64 = (0..dim).map(|i| s.g.d(i) * dq[i]).sum();
        dg += c[k] * grad + dc[k] * s.g.value;
    }
    cotangent_moment(&xi, dq) + dg
}

/// `pi^*(theta_bar) = theta` on tangent vectors of `J^-1(0)`.
///
/// Tangent vectors are `(dq, dc)` with `dc` solving the linearised level
/// condition; the reduced side uses the descended covector and the
/// `R`-component of the reduced section, differentiated along the
/// reduced image curve.
pub fn theta_match(
    lbar: &Frame<E1Section>,
    action: &ActionModel,
    points: &[Vec<f64>],
    seed: u64,
    tol: f64,
) -> Result<CheckRecord, FrameError> {
    use rand::{Rng, SeedableRng};
    let rows: Vec<Result<f64, FrameError>> = points
        .par_iter()
        .enumerate()
        .map(|(idx, q)| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
            let dim = q.len();
            let qj = Jet2::seed(q);
            let secs = lbar.eval(&qj);
            let r = secs.len();
            let v = action.v_q.eval(&qj);
            // J(q, c) = sum_k c_k xi_k(v_Q), with gradient in q
            let jk: Vec<Jet2> = secs.iter().map(|s| pair(&s.xi, &v)).collect();
            let jrow = DMatrix::from_fn(1, r, |_, k| jk[k].value);
            let ker = null_space(&jrow);
            let mut worst: f64 = 0.0;
            for col in 0..ker.ncols() {
                let c: Vec<f64> = ker.column(col).iter().copied().collect();
                let dq: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                // sum_k dc_k J_k = -sum_k c_k dJ_k(dq)
                let rhs: f64 = -(0..r).map(|k| c[k] * (0..dim).map(|i| jk[k].d(i) * dq[i]).sum::<f64>()).sum::<f64>();
                let (dc0, res) = lstsq(&jrow, &DVector::from_element(1, rhs));
                if res > 1e-9 {
                    return Err(FrameError::Invalid(format!("level set not regular at {q:?}")));
                }
                let free = DVector::from_fn(ker.ncols(), |_, _| rng.gen_range(-1.0..1.0));
                let dc: Vec<f64> = (dc0 + &ker * free).iter().copied().collect();
                let lhs = theta_lbar(lbar, q, &c, &dq, &dc);
                // reduced side
                let elem = &DMatrix::from_columns(&secs.iter().map(|s| DVector::from_vec(s.flatten())).collect::<Vec<_>>()) * DVector::from_column_slice(&c);
                let xi: Vec<f64> = elem.rows(dim + 1, dim).iter().copied().collect();
                let (mu, _) = descend_covector(&action.pi, q, &xi);
                let pdq: Vec<f64> = action.pi.jacobian(q).iter().map(|row| cotangent_moment(row, &dq)).collect();
                // the reduced R-component is g itself
                let dg: f64 = (0..r)
                    .map(|k| c[k] * (0..dim).map(|i| secs[k].g.d(i) * dq[i]).sum::<f64>() + dc[k] * secs[k].g.value)
                    .sum();
                let rhs_val = cotangent_moment(&mu, &pdq) + dg;
                worst = worst.max((lhs - rhs_val).abs());
            }
            Ok(worst)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(CheckRecord::new("theta-match", "pi^*(theta_bar) = theta on J^-1(0)", max_residual(rows), tol, points.len()))
}

/// Jacobi-Dirac moment of a frame element given by coefficients.
pub fn jd_moment_of(frame: &Frame<E1Section>, q: &[f64], c: &[f64], v_q: &MultivectorField) -> f64 {
    let v = v_q.at(q);
    frame.values_at(q).iter().zip(c).map(|(s, ck)| ck * jd_moment(s, &v)).sum()
}
