//! Discretized algebroid paths.
//!
//! Paths are given by coefficient functions `a(t)` in a frame; the base path
//! solves `dgamma/dt = rho(a(t))` by RK4 on `N + 1` uniform nodes of
//! `[0, 1]`. `E^1` frames also expose the components `(a4, a3, a1, a0)` of
//! `(X, f) + (xi, g)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::chart::Chart;
use crate::courant::{diracization, E1Section, Frame, Section};
use crate::error::FrameError;
use crate::expr::{self, ParseError};
use crate::field::{FormField, Map};
use crate::groupoids::{cor_computation_solve, iso_span_check, GroupoidChart};
use crate::jet::Jet2;
use crate::linalg::lstsq;
use crate::calculus::pullback;
use crate::prequantize::PreqInput;
use crate::report::{max_residual, CheckRecord};

pub const DEFAULT_NODES: usize = 1000;
pub const DEFAULT_SURFACE_NODES: usize = 400;

/// Frame coefficients as functions of time.
pub type Coeffs = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Coefficients from expressions in `t`.
pub fn coeffs_from_exprs(srcs: &[String]) -> Result<Coeffs, ParseError> {
    let fields = srcs.iter().map(|s| expr::field(s, &["t"])).collect::<Result<Vec<_>, _>>()?;
    Ok(Arc::new(move |t| fields.iter().map(|f| f.eval(&[Jet2::constant(t)]).value).collect()))
}

/// `a` then `b`, each run at double speed through a reparametrization
/// whose velocity vanishes at the junction, so the result stays smooth.
pub fn concat(a: Coeffs, b: Coeffs) -> Coeffs {
    let tau = |u: f64| (u - (2.0 * PI * u).sin() / (2.0 * PI), 1.0 - (2.0 * PI * u).cos());
    Arc::new(move |t| {
        let (half, u) = if t < 0.5 { (&a, 2.0 * t) } else { (&b, 2.0 * t - 1.0) };
        let (s, ds) = tau(u);
        half(s).into_iter().map(|c| 2.0 * ds * c).collect()
    })
}

#[derive(Clone, Debug)]
pub struct APath {
    pub ts: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
    pub base: Vec<Vec<f64>>,
    /// Flattened section `sum a_i s_i(gamma)` at each node.
    pub sections: Vec<Vec<f64>>,
    /// 1 for `E^1` frames, 0 for Dirac frames.
    pub extra: usize,
}

impl APath {
    fn dim(&self) -> usize {
        self.base[0].len()
    }

    fn column(&self, k: usize) -> Result<Vec<f64>, FrameError> {
        if self.extra == 0 {
            return Err(FrameError::Invalid("component needs an E^1 frame".into()));
        }
        Ok(self.sections.iter().map(|s| s[k]).collect())
    }

    /// The scalar part of the tangent block.
    pub fn a3(&self) -> Result<Vec<f64>, FrameError> {
        self.column(self.dim())
    }

    /// The scalar part of the cotangent block.
    pub fn a0(&self) -> Result<Vec<f64>, FrameError> {
        self.column(2 * self.dim() + 1)
    }

    pub fn a4(&self, i: usize) -> Vec<f64> {
        self.sections.iter().map(|s| s[i]).collect()
    }

    pub fn a1(&self, i: usize) -> Vec<f64> {
        let off = self.dim() + self.extra;
        self.sections.iter().map(|s| s[off + i]).collect()
    }
}

fn in_domain(chart: &Chart, p: &[f64]) -> bool {
    p.iter().zip(&chart.domain).zip(&chart.periods).all(|((&x, &(lo, hi)), per)| per.is_some() || (lo <= x && x <= hi))
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// Classical RK4 on `n` uniform steps of `[0, 1]`.
pub fn rk4(
    y0: &[f64],
    n: usize,
    f: impl Fn(f64, &[f64]) -> Result<Vec<f64>, FrameError>,
    check: impl Fn(&[f64]) -> Result<(), FrameError>,
) -> Result<Vec<Vec<f64>>, FrameError> {
    let h = 1.0 / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    out.push(y0.to_vec());
    let mut y = y0.to_vec();
    for i in 0..n {
        let t = i as f64 * h;
        let k1 = f(t, &y)?;
        let k2 = f(t + h / 2.0, &axpy(&y, h / 2.0, &k1))?;
        let k3 = f(t + h / 2.0, &axpy(&y, h / 2.0, &k2))?;
        let k4 = f(t + h, &axpy(&y, h, &k3))?;
        y = (0..y.len()).map(|j| y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])).collect();
        check(&y)?;
        out.push(y.clone());
    }
    Ok(out)
}

fn combine<S: Section>(frame: &Frame<S>, p: &[f64], a: &[f64]) -> Result<Vec<f64>, FrameError> {
    let secs = frame.values_at(p);
    if secs.len() != a.len() {
        return Err(FrameError::Invalid(format!("{} coefficients for a frame of {} sections", a.len(), secs.len())));
    }
    let mut out = vec![0.0; secs[0].flatten().len()];
    for (s, c) in secs.iter().zip(a) {
        for (o, v) in out.iter_mut().zip(s.flatten()) {
            *o += c * v;
        }
    }
    Ok(out)
}

fn anchor_of<S: Section>(frame: &Frame<S>, p: &[f64], a: &[f64]) -> Result<Vec<f64>, FrameError> {
    Ok(combine(frame, p, a)?[..p.len()].to_vec())
}

fn out_of_chart(p: &[f64]) -> FrameError {
    FrameError::Invalid(format!("path leaves the chart domain at {p:?}"))
}

/// Base path of the A-path with coefficients `a` starting at `gamma0`.
pub fn integrate_base<S: Section>(frame: &Frame<S>, a: &Coeffs, gamma0: &[f64], n: usize) -> Result<APath, FrameError> {
    let chart = frame.chart.clone();
    let base = rk4(gamma0, n, |t, p| anchor_of(frame, p, &a(t)), |p| if in_domain(&chart, p) { Ok(()) } else { Err(out_of_chart(p)) })?;
    finish(frame, a, base)
}

fn finish<S: Section>(frame: &Frame<S>, a: &Coeffs, base: Vec<Vec<f64>>) -> Result<APath, FrameError> {
    let n = base.len() - 1;
    let ts: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let coeffs: Vec<Vec<f64>> = ts.iter().map(|&t| a(t)).collect();
    let sections = base.iter().zip(&coeffs).map(|(p, c)| combine(frame, p, c)).collect::<Result<Vec<_>, _>>()?;
    Ok(APath { ts, coeffs, base, sections, extra: S::EXTRA })
}

/// `max |(gamma_{i+1} - gamma_i)/dt - rho(a(t_{i+1/2}))|`, with the anchor
/// taken at the midpoint of the chord.
pub fn apath_residual<S: Section>(frame: &Frame<S>, a: &Coeffs, path: &APath) -> Result<f64, FrameError> {
    let n = path.ts.len() - 1;
    let h = 1.0 / n as f64;
    let vals = (0..n)
        .into_par_iter()
        .map(|i| {
            let (p, q) = (&path.base[i], &path.base[i + 1]);
            let mid: Vec<f64> = p.iter().zip(q).map(|(x, y)| 0.5 * (x + y)).collect();
            let rho = anchor_of(frame, &mid, &a(path.ts[i] + h / 2.0))?;
            Ok(p.iter().zip(q).zip(&rho).map(|((x, y), r)| ((y - x) / h - r).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>, FrameError>>()?;
    Ok(max_residual(vals))
}

/// Composite Simpson rule for values on uniform nodes of `[0, 1]`.
pub fn simpson(values: &[f64]) -> Result<f64, FrameError> {
    let n = values.len().saturating_sub(1);
    if n == 0 || n % 2 == 1 {
        return Err(FrameError::Invalid(format!("Simpson rule needs an even number of intervals, got {n}")));
    }
    let h = 1.0 / n as f64;
    let inner: f64 = values[1..n].iter().enumerate().map(|(i, v)| if i % 2 == 0 { 4.0 * v } else { 2.0 * v }).sum();
    Ok(h / 3.0 * (values[0] + inner + values[n]))
}

/// `exp(-int_0^1 a3)` from `a3` on uniform nodes.
pub fn f_tilde_of(a3: &[f64]) -> Result<f64, FrameError> {
    Ok((-simpson(a3)?).exp())
}

pub fn f_tilde(path: &APath) -> Result<f64, FrameError> {
    f_tilde_of(&path.a3()?)
}

/// `int_0^1 <a1, E> dt` for a field `E` on the base.
pub fn j1_integral(path: &APath, e: impl Fn(&[f64]) -> Vec<f64>) -> Result<f64, FrameError> {
    let vals: Vec<f64> = (0..path.ts.len())
        .map(|i| {
            let ev = e(&path.base[i]);
            (0..ev.len()).map(|k| path.a1(k)[i] * ev[k]).sum()
        })
        .collect();
    simpson(&vals)
}

#[derive(Clone, Debug)]
pub struct Developed {
    /// Points of the groupoid at the nodes.
    pub nodes: Vec<Vec<f64>>,
    pub path: APath,
}

impl Developed {
    pub fn end(&self) -> &[f64] {
        self.nodes.last().expect("nonempty")
    }
}

/// Solve `dg/dt = Y_g`, `g(0) = unit(gamma0)`, where `Y` is the
/// left-invariant field of the section `sum a_i(t) s_i` at `s(g)`.
pub fn develop(gpd: &GroupoidChart, frame: &Frame<E1Section>, a: &Coeffs, gamma0: &[f64], n: usize) -> Result<Developed, FrameError> {
    let mut pts = vec![gamma0.to_vec()];
    pts.extend(gpd.base.sample(4, 0));
    if let Some(bad) = iso_span_check(gpd, frame, &pts, 1e-8)?.into_iter().find(|r| !r.pass) {
        return Err(FrameError::Invalid(format!("groupoid algebroid does not match the frame ({})", bad.id)));
    }
    let chart = gpd.total.clone();
    let nodes = rk4(
        &gpd.unit.values(gamma0),
        n,
        |t, g| {
            let lam = combine(frame, &gpd.source.values(g), &a(t))?;
            Ok(cor_computation_solve(gpd, g, &lam)?.y.iter().map(|j| j.value).collect())
        },
        |g| if in_domain(&chart, g) { Ok(()) } else { Err(out_of_chart(g)) },
    )?;
    let base = nodes.iter().map(|g| gpd.source.values(g)).collect();
    Ok(Developed { path: finish(frame, a, base)?, nodes })
}

#[derive(Clone, Debug)]
pub struct LiftedPath {
    pub nodes: Vec<Vec<f64>>,
    /// `max |pi(lift) - gamma|` against an independent base solve.
    pub projection_residual: f64,
    /// Largest difference between the projected lifted sections and the
    /// original path, including the vertical covector part.
    pub recovery_residual: f64,
}

/// Lift a path of the diracization of `L` through `dq/dt = h_Q(a(t), q)`.
/// The last coefficient multiplies `(0, 0) + (0, 1)`.
pub fn lift_apath(input: &PreqInput, a: &Coeffs, q0: &[f64], n: usize) -> Result<LiftedPath, FrameError> {
    let np = input.n();
    let lc = diracization(&input.l);
    let split = |p: &[f64], c: &[f64]| -> Result<(crate::courant::DiracSection, f64), FrameError> {
        let secs = input.l.values_at(p);
        if secs.len() + 1 != c.len() {
            return Err(FrameError::Invalid(format!("{} coefficients for a frame of {} sections", c.len(), secs.len() + 1)));
        }
        let mut s = secs[0].scaled(&Jet2::constant(c[0]));
        for (sec, ci) in secs.iter().zip(c).skip(1) {
            s = s.plus(&sec.scaled(&Jet2::constant(*ci)));
        }
        Ok((s, c[secs.len()]))
    };
    let rhs = |t: f64, q: &[f64]| -> Result<Vec<f64>, FrameError> {
        let (s, g) = split(&q[..np], &a(t))?;
        Ok(input.anchor_hq(&s, &Jet2::constant(g), &Jet2::seed(q)).values())
    };
    let nodes = rk4(q0, n, rhs, |_| Ok(()))?;
    let base = integrate_base(&lc, a, &q0[..np], n)?;
    let projection_residual = max_residual(nodes.iter().zip(&base.base).map(|(q, p)| {
        q[..np].iter().zip(p).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }));
    let recovery_residual = max_residual(nodes.iter().zip(&base.sections).enumerate().map(|(i, (q, orig))| {
        let (s, g) = split(&q[..np], &a(i as f64 / n as f64)).expect("checked above");
        let lifted = input.lift_i(&s, &Jet2::constant(g), &Jet2::seed(q)).flatten();
        // E^1 of Q is [X (np+1), f, xi (np+1), g]; project to P
        let mut proj: Vec<f64> = lifted[..np].to_vec();
        proj.push(lifted[np + 1]);
        proj.extend_from_slice(&lifted[np + 2..2 * np + 2]);
        proj.push(lifted[2 * np + 3]);
        let vertical = lifted[2 * np + 2].abs();
        proj.iter().zip(orig).map(|(x, y)| (x - y).abs()).fold(vertical, f64::max)
    }));
    Ok(LiftedPath { nodes, projection_residual, recovery_residual })
}

/// Frame coefficients of the brackets `[s_i, s_j]` at `p`, with the largest
/// least-squares residual.
pub fn structure_functions<S: Section>(frame: &Frame<S>, p: &[f64]) -> (Vec<Vec<Vec<f64>>>, f64) {
    let secs = frame.at(p);
    let m = frame.matrix_of(&secs);
    let r = secs.len();
    let mut worst: f64 = 0.0;
    let c = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| {
                    let b = DVector::from_vec(secs[i].bracket(&secs[j]).flatten());
                    let (x, _) = lstsq(&m, &b);
                    worst = worst.max((&m * &x - &b).amax());
                    x.iter().copied().collect()
                })
                .collect()
        })
        .collect();
    (c, worst)
}

/// Grids indexed `[i][j]` for `t_i`, `s_j`, both uniform on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct HomotopyGrid {
    pub a: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<Vec<f64>>>,
    pub base: Vec<Vec<Vec<f64>>>,
    /// Constant Christoffel data `G[m][j][k]`: `nabla_{d_m} s_j = G[m][j][k] s_k`.
    /// `None` is the flat frame connection.
    pub christoffel: Option<Vec<Vec<Vec<f64>>>>,
}

/// Residual of `d_t b - d_s a = T(a, b)` at interior nodes by central
/// differences, where `T(a, b) = nabla_{rho b} a - nabla_{rho a} b + [a, b]`.
pub fn homotopy_residual<S: Section>(frame: &Frame<S>, grid: &HomotopyGrid, tol: f64) -> Result<Vec<CheckRecord>, FrameError> {
    let nt = grid.a.len();
    let ns = grid.a.first().map_or(0, Vec::len);
    let shape_ok = nt >= 3
        && ns >= 3
        && [&grid.b, &grid.base].iter().all(|g| g.len() == nt && g.iter().all(|row| row.len() == ns));
    if !shape_ok {
        return Err(FrameError::Invalid("homotopy grids must share a shape of at least 3 x 3".into()));
    }
    let (ht, hs) = (1.0 / (nt - 1) as f64, 1.0 / (ns - 1) as f64);
    let interior: Vec<(usize, usize)> = (1..nt - 1).flat_map(|i| (1..ns - 1).map(move |j| (i, j))).collect();
    let rows = interior
        .par_iter()
        .map(|&(i, j)| {
            let p = &grid.base[i][j];
            let (a, b) = (&grid.a[i][j], &grid.b[i][j]);
            let (c, _) = structure_functions(frame, p);
            let r = a.len();
            let mut torsion: Vec<f64> = (0..r).map(|k| (0..r).flat_map(|x| (0..r).map(move |y| (x, y))).map(|(x, y)| c[x][y][k] * a[x] * b[y]).sum()).collect();
            let (ra, rb) = (anchor_of(frame, p, a)?, anchor_of(frame, p, b)?);
            if let Some(g) = &grid.christoffel {
                for k in 0..r {
                    for (m, gm) in g.iter().enumerate() {
                        for jj in 0..r {
                            torsion[k] += gm[jj][k] * (rb[m] * a[jj] - ra[m] * b[jj]);
                        }
                    }
                }
            }
            let eq = (0..r)
                .map(|k| {
                    let dtb = (grid.b[i + 1][j][k] - grid.b[i - 1][j][k]) / (2.0 * ht);
                    let dsa = (grid.a[i][j + 1][k] - grid.a[i][j - 1][k]) / (2.0 * hs);
                    (dtb - dsa - torsion[k]).abs()
                })
                .fold(0.0, f64::max);
            let base = (0..p.len())
                .map(|m| {
                    let dt = (grid.base[i + 1][j][m] - grid.base[i - 1][j][m]) / (2.0 * ht);
                    let ds = (grid.base[i][j + 1][m] - grid.base[i][j - 1][m]) / (2.0 * hs);
                    (dt - ra[m]).abs().max((ds - rb[m]).abs())
                })
                .fold(0.0, f64::max);
            Ok([eq, base])
        })
        .collect::<Result<Vec<[f64; 2]>, FrameError>>()?;
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let start = max_residual(grid.b[0].iter().map(|v| norm(v)));
    let end = max_residual(grid.b[nt - 1].iter().map(|v| norm(v)));
    let count = interior.len();
    Ok(vec![
        CheckRecord::new("homotopy-equation", "d_t b - d_s a = T(a, b)", max_residual(rows.iter().map(|r| r[0])), tol, count),
        CheckRecord::new("homotopy-base", "d_t gamma = rho(a), d_s gamma = rho(b)", max_residual(rows.iter().map(|r| r[1])), tol, count),
        CheckRecord::new("homotopy-start", "b(0, s) = 0", start, tol, ns),
        CheckRecord::new("homotopy-endpoint", "b(1, s) = 0", end, tol, ns),
    ])
}

/// A closed surface `(u, v) in [0, 1]^2 -> chart`.
#[derive(Clone)]
pub struct Surface {
    pub map: Map,
}

impl Surface {
    pub fn from_exprs(srcs: &[String]) -> Result<Self, ParseError> {
        Ok(Surface { map: Map::new(srcs.iter().map(|s| expr::field(s, &["u", "v"])).collect::<Result<Vec<_>, _>>()?) })
    }

    /// The unit sphere, with a polar angle whose speed vanishes at the poles.
    pub fn sphere() -> Self {
        let src = |s: &str| s.replace("PHI", "(pi*(u - sin(2*pi*u)/(2*pi)))");
        Surface::from_exprs(&[
            src("sin(PHI)*cos(2*pi*v)"),
            src("sin(PHI)*sin(2*pi*v)"),
            src("cos(PHI)"),
        ])
        .expect("valid expressions")
    }

    /// Each pair of opposite edges is either identified or collapsed to points.
    pub fn seam_residual(&self, n: usize) -> f64 {
        let at = |u: f64, v: f64| self.map.values(&[u, v]);
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let ts: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let edge = |f: &dyn Fn(f64, f64) -> Vec<f64>| {
            let glued = max_residual(ts.iter().map(|&t| d(&f(0.0, t), &f(1.0, t))));
            let collapsed = max_residual(ts.iter().map(|&t| d(&f(0.0, t), &f(0.0, 0.0)).max(d(&f(1.0, t), &f(1.0, 0.0)))));
            glued.min(collapsed)
        };
        edge(&|e, t| at(e, t)).max(edge(&|e, t| at(t, e)))
    }
}

/// `int_Sigma omega` by the tensor midpoint rule on an `n x n` grid.
pub fn period_integral(omega: &FormField, surface: &Surface, n: usize) -> Result<f64, FrameError> {
    if omega.degree() != 2 {
        return Err(FrameError::Invalid("period integral needs a 2-form".into()));
    }
    let seam = surface.seam_residual(64);
    if !(seam < 1e-9) {
        return Err(FrameError::Invalid(format!("surface is not closed: seam residual {seam:e}")));
    }
    let h = 1.0 / n as f64;
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let uv = Jet2::seed(&[(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
                    let img = surface.map.eval(&uv);
                    pullback(&omega.eval(&img), &img, 2).get(&[0, 1]).value
                })
                .sum::<f64>()
        })
        .sum();
    Ok(total * h * h)
}

/// Distance of a period to the nearest integer.
pub fn prequantizability_report(period: f64, tol: f64) -> CheckRecord {
    let dist = (period - period.round()).abs();
    let rec = CheckRecord::new("period-integral", "int omega over a closed surface is an integer", dist, tol, 1);
    let verdict = if rec.pass { "integral" } else { "NOT integral" };
    rec.with_note(format!("period {period:.9}, {verdict}"))
}

/// Area form of the unit sphere divided by `4 pi`, on `R^3`.
pub fn sphere_area_form() -> FormField {
    let c = crate::field::ScalarField::coordinate;
    let k = 1.0 / (4.0 * PI);
    // dx^dy: z, dx^dz: -y, dy^dz: x
    FormField::new(3, 2, vec![c(2).scale(k), c(1).scale(-k), c(0).scale(k)])
}
