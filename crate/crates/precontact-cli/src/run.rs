//! Command execution over a compiled scenario.

use std::time::Instant;

use clap::ValueEnum;
use precontact::apaths::{develop, f_tilde, integrate_base, lift_apath, period_integral, prequantizability_report};
use precontact::calculus::exterior_derivative;
use precontact::courant::{
    diracization, is_closed_under_bracket, is_isotropic, jacobi_residual, poisson_residual, Frame, Section,
};
use precontact::error::FrameError;
use precontact::field::{Map, MultivectorField, ScalarField};
use precontact::groupoids::{reduce_groupoid_1dim, run_all, GroupoidBase};
use precontact::prequantize::{
    check_preq_condition, flat_connection_check, function_bracket_laws, independence_check, morphism_check_i,
    two_extensions, PreqInput,
};
use precontact::reduction::{cotangent_reduce_check, reduce_lbar, theta_match, zero_level_rank, ActionModel};
use precontact::report::{max_residual, CheckRecord};
use precontact::vorobjev::{check_poisson, leaf_form_check};
use precontact::Jet2;

use crate::compile::*;
use crate::report::Record;
use crate::scenario::{Config, Expect};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    CheckStructure,
    Prequantize,
    Reduce,
    Groupoid,
    Apath,
    Vorobjev,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckStructure => "check-structure",
            Command::Prequantize => "prequantize",
            Command::Reduce => "reduce",
            Command::Groupoid => "groupoid",
            Command::Apath => "apath",
            Command::Vorobjev => "vorobjev",
            Command::All => "all",
        }
    }
}

pub struct Runner<'a> {
    pub scenario: &'a Compiled,
    pub config: Config,
    pub tol_override: Option<f64>,
    pub timing: bool,
    pub records: Vec<Record>,
}

impl<'a> Runner<'a> {
    pub fn new(scenario: &'a Compiled, tol_override: Option<f64>, timing: bool) -> Self {
        Runner { scenario, config: scenario.config.clone(), tol_override, timing, records: Vec::new() }
    }

    /// Command line beats block, block beats scenario config.
    fn tol(&self, block: Option<f64>) -> f64 {
        self.tol_override.or(block).unwrap_or(self.config.tol)
    }

    /// Runs one checker; an engine error becomes a failing record.
    fn group(&mut self, prefix: &str, f: impl FnOnce() -> Result<Vec<CheckRecord>, FrameError>) {
        let start = Instant::now();
        let out = f();
        let wall = self.timing.then(|| start.elapsed().as_secs_f64());
        match out {
            Ok(recs) => self.records.extend(recs.into_iter().map(|r| Record::from_check(prefix, r, wall))),
            Err(e) => {
                let r = CheckRecord::new("error", "checker completed", f64::NAN, 0.0, 0).with_note(e.to_string());
                self.records.push(Record::from_check(prefix, r, wall));
            }
        }
    }

    pub fn run(mut self, cmd: Command) -> Vec<Record> {
        let all = cmd == Command::All;
        if all || cmd == Command::CheckStructure {
            self.structures();
        }
        if all || cmd == Command::Prequantize {
            self.prequantize();
        }
        if all || cmd == Command::Groupoid {
            self.groupoids();
        }
        if all || cmd == Command::Reduce {
            self.reduce();
        }
        if all || cmd == Command::Apath {
            self.apaths();
        }
        if all || cmd == Command::Vorobjev {
            self.vorobjev();
        }
        self.records
    }

    fn structures(&mut self) {
        let sc = self.scenario;
        let (n, seed) = (self.config.samples, self.config.seed);
        for s in &sc.structures {
            let tol = self.tol(s.tol);
            let prefix = format!("structures/{}", s.name);
            let expect = s.expect;
            let cond = &s.condition;
            match &s.frame {
                StructFrame::Dirac(f) => self.group(&prefix, || structure_records(f, cond, expect, n, seed, tol)),
                StructFrame::Jacobi(f) => self.group(&prefix, || structure_records(f, cond, expect, n, seed, tol)),
            }
        }
    }

    fn prequantize(&mut self) {
        let sc = self.scenario;
        let (n, seed) = (self.config.samples, self.config.seed);
        for p in &sc.preqs {
            let tol = self.tol(p.tol);
            let prefix = format!("prequantizations/{}", p.name);
            let input = &p.input;
            let pp = input.p_chart.sample(n, seed);
            let qq = input.q_chart().sample(n, seed);
            self.group(&prefix, || Ok(check_preq_condition(input, &pp, tol)));
            self.group(&prefix, || {
                let lbar = input.build_lbar();
                Ok(vec![
                    rename(is_isotropic(&lbar, &qq, tol)?, "lbar-isotropic"),
                    rename(is_closed_under_bracket(&lbar, &qq, tol)?, "lbar-closed"),
                ])
            });
            self.group(&prefix, || Ok(vec![independence_check(input, &qq, tol)?]));
            self.group(&prefix, || Ok(vec![extensions_record(input, &qq, tol)?]));
            self.group(&prefix, || Ok(vec![morphism_check_i(input, &qq, tol)]));
            self.group(&prefix, || Ok(vec![flat_connection_check(input, &p.section, &pp, tol)]));
            self.group(&prefix, || {
                let fs: Vec<ScalarField> = (0..input.n()).map(ScalarField::coordinate).collect();
                let recs = function_bracket_laws(input, &fs, &p.section, &qq, tol, tol)?;
                Ok(recs.into_iter().map(literal_fourth_law_as_control).collect())
            });
        }
    }

    fn groupoids(&mut self) {
        let sc = self.scenario;
        let (n, seed) = (self.config.samples, self.config.seed);
        for g in &sc.groupoids {
            let tol = self.tol(g.tol);
            self.group(&format!("groupoids/{}", g.name), || run_all(&g.chart, &g.base, n, seed, tol));
        }
    }

    fn reduce(&mut self) {
        let sc = self.scenario;
        let (n, seed) = (self.config.samples, self.config.seed);
        for a in &sc.actions {
            let tol = self.tol(a.tol);
            let prefix = format!("actions/{}", a.name);
            match &a.kind {
                ActionKind::Cotangent(act) => {
                    self.group(&prefix, || cotangent_reduce_check(act, &act.m_chart.sample(n, seed), seed, tol))
                }
                ActionKind::Circle(pi) => {
                    let input = &sc.preqs[*pi].input;
                    self.group(&prefix, || {
                        let k = input.n();
                        let act = ActionModel {
                            q_chart: input.q_chart(),
                            v_q: MultivectorField::coordinate_vector(k + 1, k),
                            pi: Map::select(&(0..k).collect::<Vec<_>>()),
                        };
                        let pts = input.q_chart().sample(n, seed);
                        let lbar = input.build_lbar();
                        let mut out = vec![act.check(&pts, tol)?];
                        let lbar0 = input.build_lbar0();
                        out.extend(reduce_lbar(&lbar, &act, &diracization(&input.l), Some(&lbar0), &pts, tol)?);
                        out.push(theta_match(&lbar, &act, &pts, seed, tol)?);
                        out.push(zero_level_rank(&lbar, &act.v_q, &pts, tol)?.record);
                        Ok(out)
                    });
                }
                ActionKind::ZeroLevel { frame, generator } => {
                    let expect = a.expect;
                    self.group(&prefix, || {
                        let mut pts = frame.chart.sample(n, seed);
                        pts.extend(axis_points(&frame.chart, n.min(20), seed));
                        let z = zero_level_rank(frame, generator, &pts, tol)?;
                        Ok(vec![match expect {
                            Expect::Pass => z.record,
                            Expect::Fail => {
                                let r = z.record;
                                CheckRecord::negative("zero-level-rank-varies", "rank of Lbar cap (g_Q, 0) + (0, 0) varies", r.max_residual, 0.0, r.samples)
                                    .with_note(r.note.unwrap_or_default())
                            }
                        }])
                    });
                }
            }
        }
        for g in &sc.groupoids {
            if g.reduction {
                let tol = self.tol(g.tol);
                self.group(&format!("groupoids/{}/reduction", g.name), || reduce_groupoid_1dim(n, seed, tol));
            }
        }
    }

    fn apaths(&mut self) {
        let sc = self.scenario;
        let nodes_default = self.config.rk4_nodes;
        for p in &sc.apaths {
            let tol = self.tol(p.tol);
            let g = &sc.groupoids[p.groupoid];
            let GroupoidBase::Jacobi(frame) = &g.base else { unreachable!("checked at compile time") };
            let nodes = p.nodes.unwrap_or(nodes_default);
            self.group(&format!("apaths/{}", p.name), || apath_records(g, frame, p, nodes, tol));
        }
        for l in &sc.lifts {
            let tol = self.tol(l.tol);
            let input = &sc.preqs[l.preq].input;
            let nodes = l.nodes.unwrap_or(nodes_default);
            self.group(&format!("lifts/{}", l.name), || {
                let a = lift_apath(input, &l.coeffs, &l.start, nodes)?;
                let mut shifted = l.start.clone();
                *shifted.last_mut().expect("nonempty") += 0.37;
                let b = lift_apath(input, &l.coeffs, &shifted, nodes)?;
                let equi = max_residual(a.nodes.iter().zip(&b.nodes).map(|(p, q)| {
                    let k = p.len() - 1;
                    let base = (0..k).map(|i| (p[i] - q[i]).abs()).fold(0.0, f64::max);
                    base.max((q[k] - p[k] - 0.37).abs())
                }));
                Ok(vec![
                    CheckRecord::new("lift-projection", "pi(lift) = base path", a.projection_residual, tol, nodes + 1),
                    CheckRecord::new("lift-recovery", "lifted sections project to the path", a.recovery_residual, tol, nodes + 1),
                    CheckRecord::new("lift-equivariance", "lift from e^{2 pi i c} q0 = rotated lift", equi, tol, nodes + 1),
                ])
            });
        }
        for p in &sc.periods {
            let tol = self.tol(p.tol);
            let expect = p.expect;
            self.group(&format!("periods/{}", p.name), || {
                let v = period_integral(&p.form, &p.surface, p.nodes)?;
                let r = prequantizability_report(v, tol);
                Ok(vec![match expect {
                    Expect::Pass => r,
                    Expect::Fail => CheckRecord::negative("period-not-integral", "int omega over a closed surface is not an integer", r.max_residual, tol, 1)
                        .with_note(r.note.unwrap_or_default()),
                }])
            });
        }
    }

    fn vorobjev(&mut self) {
        let sc = self.scenario;
        let (n, seed) = (self.config.samples, self.config.seed);
        for v in &sc.vorobjev {
            let tol = self.tol(v.tol);
            let d = &v.data;
            self.group(&format!("vorobjev/{}", v.name), || {
                d.validate(&d.p_chart.sample(n, seed), tol.max(1e-12))?;
                let mut out = vec![check_poisson(d, &d.total_chart().sample(n, seed), tol)];
                out.extend(leaf_form_check(d, n, seed, tol));
                Ok(out)
            });
        }
    }
}

fn rename(mut r: CheckRecord, id: &str) -> CheckRecord {
    r.id = id.into();
    r
}

fn structure_records<S: Section>(
    frame: &Frame<S>,
    cond: &Condition,
    expect: Expect,
    n: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<CheckRecord>, FrameError> {
    let pts = frame.chart.sample(n, seed);
    let iso = is_isotropic(frame, &pts, tol)?;
    let clo = is_closed_under_bracket(frame, &pts, tol)?;
    let condition = match cond {
        Condition::Closed(w) => Some((
            "closed",
            "dOmega = 0",
            max_residual(pts.iter().map(|p| {
                let w = w.at(p);
                if w.dim() < 3 {
                    0.0
                } else {
                    exterior_derivative(&w).expect("3-form").max_abs()
                }
            })),
        )),
        Condition::Poisson(l) => Some(("poisson", "[L, L] = 0", poisson_residual(l, &pts))),
        Condition::JacobiPair(l, e) => Some(("jacobi-pair", "[L, L] = 2 E ^ L, [E, L] = 0", jacobi_residual(l, e, &pts))),
        Condition::None => None,
    };
    let mut out = vec![iso];
    match expect {
        Expect::Pass => {
            out.push(clo);
            if let Some((id, anchor, r)) = condition {
                out.push(CheckRecord::new(id, anchor, r, tol, pts.len()));
            }
        }
        Expect::Fail => {
            let r = condition.map_or(clo.max_residual, |c| c.2.max(clo.max_residual));
            out.push(CheckRecord::negative(
                "not-a-structure",
                "closure under the bracket or the defining condition fails",
                r,
                tol,
                pts.len(),
            ));
        }
    }
    Ok(out)
}

fn extensions_record(input: &PreqInput, pts: &[Vec<f64>], tol: f64) -> Result<CheckRecord, FrameError> {
    let mut worst = 0.0f64;
    for q in pts {
        let ext = two_extensions(input, q)?;
        let shape_ok = ext.bases.len() == 2 && ext.with_unit_scalar.is_some();
        worst = if shape_ok { worst.max(ext.other_vs_lbar) } else { f64::INFINITY };
    }
    Ok(CheckRecord::new(
        "two-extensions",
        "exactly two extensions of Lbar0; one contains (0,0)+(0,1), the other is Lbar",
        worst,
        tol,
        pts.len(),
    ))
}

/// The fourth bracket law as stated is contradicted by the Reeb identity;
/// report it as a control that is expected to fail, keeping its residual.
fn literal_fourth_law_as_control(r: CheckRecord) -> CheckRecord {
    if r.id != "bracket-law-4" {
        return r;
    }
    let note = r.note.clone().unwrap_or_default();
    CheckRecord::negative("bracket-law-4-as-stated", &r.anchor, r.max_residual, r.threshold, r.samples)
        .with_note(format!("{note}; the sign-corrected law is checked as bracket-law-4-sign"))
}

fn apath_records(g: &CGroupoid, frame: &Frame<precontact::courant::E1Section>, p: &CApath, nodes: usize, tol: f64) -> Result<Vec<CheckRecord>, FrameError> {
    let d = develop(&g.chart, frame, &p.coeffs, &p.start, nodes)?;
    let f_end = g.chart.f_at(&Jet2::seed(d.end())).expect("contact payload").value;
    let ft = f_tilde(&d.path)?;
    let target = max_residual(g.chart.target.values(d.end()).iter().zip(&p.start).map(|(a, b)| (a - b).abs()));
    let base = integrate_base(frame, &p.coeffs, &p.start, nodes)?;
    let proj = max_residual(d.nodes.iter().zip(&base.base).map(|(x, q)| {
        g.chart.source.values(x).iter().zip(q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }));
    let fine = develop(&g.chart, frame, &p.coeffs, &p.start, 2 * nodes)?;
    let refine = max_residual(d.end().iter().zip(fine.end()).map(|(a, b)| (a - b).abs()));
    Ok(vec![
        CheckRecord::new("f-tilde", "f_Gamma(develop(a)) = exp(-int <a, (0,0)+(0,1)>)", (f_end - ft).abs(), tol, nodes + 1),
        CheckRecord::new("target-fibre", "t(develop(a)) = gamma(0)", target, tol, 1),
        CheckRecord::new("base-path", "s(develop(a)) = gamma", proj, tol, nodes + 1),
        CheckRecord::new("rk4-refinement", "endpoint change under node doubling", refine, tol, 1)
            .with_note(format!("{nodes} vs {} nodes", 2 * nodes)),
    ])
}

/// Points on the coordinate hyperplanes through the origin, where ranks
/// typically jump.
fn axis_points(chart: &precontact::Chart, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..chart.dim() {
        let (lo, hi) = chart.domain[i];
        if lo < 0.0 && hi > 0.0 {
            out.extend(chart.sample(count, seed.wrapping_add(i as u64 + 1)).into_iter().map(|mut p| {
                p[i] = 0.0;
                p
            }));
        }
    }
    out
}
