//! Dense linear algebra for pointwise subspace questions.

use nalgebra::{DMatrix, DVector};

use crate::jet::Jet2;

/// Relative singular-value cutoff for rank decisions.
pub const RANK_TOL: f64 = 1e-9;

pub fn matrix_from_columns(cols: &[Vec<f64>], rows: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

pub fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// SVD by one-sided Jacobi rotations: `m v = u diag(s)`, with `v` square
/// orthogonal and `s` non-increasing, one value per column of `m`.
///
/// Both nalgebra 0.33 and faer 0.19 return factors that do not reconstruct
/// some rank-deficient inputs (see `svd_stress_rank_deficient`); the
/// matrices here are small, so Jacobi's accuracy is worth its cost.
pub(crate) struct Svd {
    /// Columns `m v_j / s_j`; unnormalised where `s_j` vanishes.
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub(crate) fn svd(m: &DMatrix<f64>) -> Svd {
    let c = m.ncols();
    let mut u = m.clone();
    let mut v = DMatrix::<f64>::identity(c, c);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..c {
            for q in p + 1..c {
                let a = u.column(p).norm_squared();
                let b = u.column(q).norm_squared();
                let g = u.column(p).dot(&u.column(q));
                if g == 0.0 || g.abs() <= f64::EPSILON * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut u, &mut v] {
                    for i in 0..mat.nrows() {
                        let (x, y) = (mat[(i, p)], mat[(i, q)]);
                        mat[(i, p)] = cs * x - sn * y;
                        mat[(i, q)] = sn * x + cs * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..c).map(|j| u.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u = DMatrix::from_fn(m.nrows(), c, |i, k| {
        let j = order[k];
        if norms[j] > 0.0 { u[(i, j)] / norms[j] } else { u[(i, j)] }
    });
    let v = DMatrix::from_fn(c, c, |i, k| v[(i, order[k])]);
    Svd { u, s, v }
}

fn cutoff(s: &[f64]) -> f64 {
    let smax = s.iter().cloned().fold(0.0, f64::max);
    RANK_TOL * smax.max(1.0)
}

impl Svd {
    fn rank(&self) -> usize {
        let c = cutoff(&self.s);
        self.s.iter().filter(|&&v| v > c).count()
    }
}

pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    svd(m).rank()
}

/// Orthonormal basis (columns) of the column space.
pub fn orth(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.is_empty() {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let d = svd(m);
    d.u.columns(0, d.rank()).into_owned()
}

/// Orthonormal basis (columns) of the null space.
pub fn null_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let d = svd(m);
    let r = d.rank();
    d.v.columns(r, n - r).into_owned()
}

/// Least-squares distance from `target` to the column span of `basis`.
pub fn span_residual(basis: &DMatrix<f64>, target: &DVector<f64>) -> f64 {
    let q = orth(basis);
    let proj = &q * (q.transpose() * target);
    (target - proj).norm()
}

/// Minimum-norm least-squares solution of `a x = b` with its residual norm.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    if a.is_empty() {
        return (DVector::zeros(a.ncols()), b.norm());
    }
    let d = svd(a);
    let mut x = DVector::zeros(a.ncols());
    for k in 0..d.rank() {
        let c = d.u.column(k).dot(b) / d.s[k];
        x += d.v.column(k) * c;
    }
    let r = (a * &x - b).norm();
    (x, r)
}

/// Symmetric subspace mismatch: largest normalised residual of either
/// basis against the other's span, or infinity when dimensions differ.
pub fn subspace_mismatch(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let (ra, rb) = (rank(a), rank(b));
    if ra != rb {
        return f64::INFINITY;
    }
    let one_way = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
        let q = orth(y);
        (0..x.ncols())
            .map(|j| {
                let t = x.column(j).into_owned();
                let r = (&t - &q * (q.transpose() * &t)).norm();
                r / (1.0 + t.norm())
            })
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Solve a square system with jet entries by Gaussian elimination with
/// partial pivoting on values. The solution's gradients are exact.
pub fn jet_solve(mut a: Vec<Vec<Jet2>>, mut b: Vec<Jet2>) -> Option<Vec<Jet2>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].value.abs().total_cmp(&a[j][col].value.abs()))?;
        if a[piv][col].value.abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col].clone();
        for row in col + 1..n {
            let factor = &a[row][col] / &p;
            for k in col..n {
                let t = &factor * &a[col][k];
                a[row][k] = &a[row][k] - t;
            }
            let t = &factor * &b[col];
            b[row] = &b[row] - t;
        }
    }
    let mut x = vec![Jet2::constant(0.0); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            acc = acc - &a[row][k] * &x[k];
        }
        x[row] = acc / &a[row][row];
    }
    Some(x)
}

/// Least squares with jet entries through the normal equations; suited to
/// small, well-conditioned, full-column-rank systems.
pub fn jet_lstsq(a: &[Vec<Jet2>], b: &[Jet2]) -> Option<Vec<Jet2>> {
    let n = a.first().map_or(0, |r| r.len());
    let m = a.len();
    let ata: Vec<Vec<Jet2>> = (0..n)
        .map(|i| (0..n).map(|j| (0..m).fold(Jet2::constant(0.0), |s, r| s + &a[r][i] * &a[r][j])).collect())
        .collect();
    let atb: Vec<Jet2> = (0..n).map(|i| (0..m).fold(Jet2::constant(0.0), |s, r| s + &a[r][i] * &b[r])).collect();
    jet_solve(ata, atb)
}
