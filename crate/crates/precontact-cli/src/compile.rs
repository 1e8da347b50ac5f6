//! Resolution of a parsed scenario into engine objects.
//!
//! Everything is validated up front, so a scenario that compiles can run
//! any command. Errors carry the JSON path of the offending entry.

use std::collections::{BTreeMap, HashMap};

use precontact::apaths::{coeffs_from_exprs, Coeffs, Surface, DEFAULT_SURFACE_NODES};
use precontact::calculus::{combos, sort_sign};
use precontact::courant::{
    diracization, graph_of_1form, graph_of_2form, graph_of_bivector, graph_of_jacobi_pair, DiracSection, E1Section, Frame,
    Section,
};
use precontact::expr;
use precontact::field::{FormField, Map, MultivectorField, ScalarField};
use precontact::groupoids::{builtin, GroupoidBase, GroupoidChart, GroupoidSpec, PayloadSpec, BUILTIN_NAMES};
use precontact::prequantize::{LineSection, PreqInput};
use precontact::reduction::CotangentAction;
use precontact::vorobjev::VorobjevData;
use precontact::Chart;
use thiserror::Error;

use crate::scenario::*;

#[derive(Debug, Error)]
#[error("{location}: {message}")]
pub struct ScenarioError {
    pub location: String,
    pub message: String,
}

fn err<T>(location: impl Into<String>, message: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError { location: location.into(), message: message.into() })
}

type Res<T> = Result<T, ScenarioError>;

#[derive(Clone)]
pub enum StructFrame {
    Dirac(Frame<DiracSection>),
    Jacobi(Frame<E1Section>),
}

/// Field-level data behind a structure, for its defining condition.
pub enum Condition {
    Closed(FormField),
    Poisson(MultivectorField),
    JacobiPair(MultivectorField, MultivectorField),
    None,
}

pub struct CStructure {
    pub name: String,
    pub frame: StructFrame,
    pub condition: Condition,
    pub expect: Expect,
    pub tol: Option<f64>,
}

pub struct CPreq {
    pub name: String,
    pub input: PreqInput,
    pub section: LineSection,
    pub tol: Option<f64>,
}

pub struct CGroupoid {
    pub name: String,
    pub chart: GroupoidChart,
    pub base: GroupoidBase,
    pub reduction: bool,
    pub tol: Option<f64>,
}

pub struct CApath {
    pub name: String,
    pub groupoid: usize,
    pub coeffs: Coeffs,
    pub start: Vec<f64>,
    pub nodes: Option<usize>,
    pub tol: Option<f64>,
}

pub struct CLift {
    pub name: String,
    pub preq: usize,
    pub coeffs: Coeffs,
    pub start: Vec<f64>,
    pub nodes: Option<usize>,
    pub tol: Option<f64>,
}

pub struct CPeriod {
    pub name: String,
    pub surface: Surface,
    pub form: FormField,
    pub nodes: usize,
    pub expect: Expect,
    pub tol: Option<f64>,
}

pub enum ActionKind {
    Cotangent(CotangentAction),
    Circle(usize),
    ZeroLevel { frame: Frame<E1Section>, generator: MultivectorField },
}

pub struct CAction {
    pub name: String,
    pub kind: ActionKind,
    pub expect: Expect,
    pub tol: Option<f64>,
}

pub struct CVorobjev {
    pub name: String,
    pub data: VorobjevData,
    pub tol: Option<f64>,
}

pub struct Compiled {
    pub name: String,
    pub config: Config,
    pub structures: Vec<CStructure>,
    pub preqs: Vec<CPreq>,
    pub groupoids: Vec<CGroupoid>,
    pub apaths: Vec<CApath>,
    pub lifts: Vec<CLift>,
    pub periods: Vec<CPeriod>,
    pub actions: Vec<CAction>,
    pub vorobjev: Vec<CVorobjev>,
}

fn make_chart(coords: &[String], domain: &[[f64; 2]], periods: &BTreeMap<String, f64>, loc: &str) -> Res<Chart> {
    let mut chart = Chart::from_parts(coords.to_vec(), domain.iter().map(|d| (d[0], d[1])).collect())
        .or_else(|e| err(loc, e.to_string()))?;
    for (name, period) in periods {
        if chart.index_of(name).is_none() {
            return err(format!("{loc}.periods"), format!("unknown coordinate `{name}`"));
        }
        if !(period.is_finite() && *period > 0.0) {
            return err(format!("{loc}.periods.{name}"), "period must be positive");
        }
        chart = chart.with_period(name, *period);
    }
    Ok(chart)
}

pub fn scalar(src: &str, coords: &[&str], loc: &str) -> Res<ScalarField> {
    expr::field(src, coords).or_else(|e| err(loc, format!("{e} in `{src}`")))
}

/// Components over sorted index tuples of `degree` coordinates, with signs.
fn sorted_components(comps: &Components, names: &[&str], degree: usize, loc: &str) -> Res<HashMap<Vec<usize>, (f64, String)>> {
    let mut out: HashMap<Vec<usize>, (f64, String)> = HashMap::new();
    for (key, src) in comps {
        let here = format!("{loc}[\"{key}\"]");
        let idx = key
            .split('^')
            .map(|n| {
                let n = n.trim();
                names.iter().position(|c| *c == n).ok_or_else(|| ScenarioError {
                    location: here.clone(),
                    message: format!("unknown coordinate `{n}`"),
                })
            })
            .collect::<Res<Vec<_>>>()?;
        if idx.len() != degree {
            return err(here, format!("expected {degree} coordinate name(s)"));
        }
        let Some((sorted, sign)) = sort_sign(&idx) else {
            return err(here, "repeated coordinate");
        };
        if out.insert(sorted, (sign, src.clone())).is_some() {
            return err(here, "component given twice");
        }
    }
    Ok(out)
}

/// Component fields over `combos(n, degree)`.
pub fn skew_fields(comps: &Components, names: &[&str], degree: usize, loc: &str) -> Res<Vec<ScalarField>> {
    let mut map = sorted_components(comps, names, degree, loc)?;
    combos(names.len(), degree)
        .into_iter()
        .map(|idx| match map.remove(&idx) {
            None => Ok(ScalarField::zero()),
            Some((sign, src)) => {
                let key: Vec<&str> = idx.iter().map(|&i| names[i]).collect();
                Ok(scalar(&src, names, &format!("{loc}[\"{}\"]", key.join("^")))?.scale(sign))
            }
        })
        .collect()
}

/// Expression strings over `combos(n, degree)`, for groupoid specs.
fn skew_strings(comps: &Components, names: &[&str], degree: usize, loc: &str) -> Res<Vec<String>> {
    let mut map = sorted_components(comps, names, degree, loc)?;
    Ok(combos(names.len(), degree)
        .into_iter()
        .map(|idx| match map.remove(&idx) {
            None => "0".to_string(),
            Some((sign, src)) if sign > 0.0 => src,
            Some((_, src)) => format!("-({src})"),
        })
        .collect())
}

fn form(comps: &Components, chart: &Chart, degree: usize, loc: &str) -> Res<FormField> {
    Ok(FormField::new(chart.dim(), degree, skew_fields(comps, &chart.names(), degree, loc)?))
}

fn multivector(comps: &Components, chart: &Chart, degree: usize, loc: &str) -> Res<MultivectorField> {
    Ok(MultivectorField::new(chart.dim(), degree, skew_fields(comps, &chart.names(), degree, loc)?))
}

fn required<'a, T>(v: &'a Option<T>, loc: &str, field: &str) -> Res<&'a T> {
    v.as_ref().ok_or_else(|| ScenarioError { location: loc.into(), message: format!("missing `{field}`") })
}

fn check_tol(tol: Option<f64>, loc: &str) -> Res<Option<f64>> {
    match tol {
        Some(t) if !(t.is_finite() && t >= 0.0) => err(format!("{loc}.tol"), "tolerance must be finite and non-negative"),
        t => Ok(t),
    }
}

fn unique_names<'a>(names: impl Iterator<Item = &'a str>, loc: &str) -> Res<()> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return err(loc, format!("duplicate name `{n}`"));
        }
    }
    Ok(())
}

fn frame_dim(f: &StructFrame) -> usize {
    match f {
        StructFrame::Dirac(f) => f.chart.dim(),
        StructFrame::Jacobi(f) => f.chart.dim(),
    }
}

/// Frames may be overcomplete, so count the sections at the domain centre.
fn sections_per_point<S: Section>(f: &Frame<S>) -> usize {
    let mid: Vec<f64> = f.chart.domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    f.at(&mid).len()
}

pub fn compile(s: &Scenario) -> Res<Compiled> {
    let c = &s.config;
    if c.samples == 0 || c.rk4_nodes < 2 || c.rk4_nodes % 2 != 0 {
        return err("config", "samples must be positive and rk4_nodes even and at least 2");
    }
    check_tol(Some(c.tol), "config")?;
    let mut charts = BTreeMap::new();
    for (name, d) in &s.charts {
        charts.insert(name.clone(), make_chart(&d.coords, &d.domain, &d.periods, &format!("charts.{name}"))?);
    }
    let chart_of = |name: &str, loc: &str| -> Res<Chart> {
        charts.get(name).cloned().ok_or_else(|| ScenarioError { location: loc.into(), message: format!("unknown chart `{name}`") })
    };

    unique_names(s.structures.iter().map(|d| d.name.as_str()), "structures")?;
    let mut structures: Vec<CStructure> = Vec::new();
    for (i, d) in s.structures.iter().enumerate() {
        let loc = format!("structures[{i}]");
        let chart = chart_of(&d.chart, &format!("{loc}.chart"))?;
        let (frame, condition) = match d.kind.as_str() {
            "two-form" => {
                let w = form(required(&d.form, &loc, "form")?, &chart, 2, &format!("{loc}.form"))?;
                (StructFrame::Dirac(graph_of_2form(chart, w.clone())), Condition::Closed(w))
            }
            "one-form" => {
                let a = form(required(&d.form, &loc, "form")?, &chart, 1, &format!("{loc}.form"))?;
                (StructFrame::Jacobi(graph_of_1form(chart, a)), Condition::None)
            }
            "bivector" => {
                let l = multivector(required(&d.bivector, &loc, "bivector")?, &chart, 2, &format!("{loc}.bivector"))?;
                (StructFrame::Dirac(graph_of_bivector(chart, l.clone())), Condition::Poisson(l))
            }
            "jacobi-pair" => {
                let l = multivector(required(&d.bivector, &loc, "bivector")?, &chart, 2, &format!("{loc}.bivector"))?;
                let e = multivector(required(&d.reeb, &loc, "reeb")?, &chart, 1, &format!("{loc}.reeb"))?;
                (StructFrame::Jacobi(graph_of_jacobi_pair(chart, l.clone(), e.clone())), Condition::JacobiPair(l, e))
            }
            "diracization" => {
                let of = required(&d.of, &loc, "of")?;
                let Some(base) = structures.iter().find(|x| &x.name == of) else {
                    return err(format!("{loc}.of"), format!("unknown or later structure `{of}`"));
                };
                let StructFrame::Dirac(l) = &base.frame else {
                    return err(format!("{loc}.of"), format!("`{of}` is not a Dirac structure"));
                };
                (StructFrame::Jacobi(diracization(l)), Condition::None)
            }
            other => {
                return err(
                    format!("{loc}.kind"),
                    format!("unknown kind `{other}` (two-form, one-form, bivector, jacobi-pair, diracization)"),
                )
            }
        };
        structures.push(CStructure { name: d.name.clone(), frame, condition, expect: d.expect, tol: check_tol(d.tol, &loc)? });
    }
    let structure = |name: &str, loc: &str| -> Res<&CStructure> {
        structures.iter().find(|x| x.name == name).ok_or_else(|| ScenarioError {
            location: loc.into(),
            message: format!("unknown structure `{name}`"),
        })
    };

    unique_names(s.prequantizations.iter().map(|d| d.name.as_str()), "prequantizations")?;
    let mut preqs = Vec::new();
    for (i, d) in s.prequantizations.iter().enumerate() {
        let loc = format!("prequantizations[{i}]");
        let StructFrame::Dirac(l) = &structure(&d.structure, &format!("{loc}.structure"))?.frame else {
            return err(format!("{loc}.structure"), "must be a Dirac structure");
        };
        let chart = l.chart.clone();
        let names = chart.names();
        let section = match &d.test_section {
            Some([re, im]) => LineSection {
                re: scalar(re, &names, &format!("{loc}.test_section[0]"))?,
                im: scalar(im, &names, &format!("{loc}.test_section[1]"))?,
            },
            None => {
                let n = chart.dim();
                LineSection {
                    re: ScalarField::new(move |p| {
                        let mut acc = precontact::Jet2::constant(1.0);
                        for x in &p[..n] {
                            acc = acc + x * x;
                        }
                        acc
                    }),
                    im: ScalarField::new(|p| p[0].sin() * 0.5 - 0.25),
                }
            }
        };
        let input = PreqInput {
            p_chart: chart.clone(),
            l: l.clone(),
            omega: form(&d.omega, &chart, 2, &format!("{loc}.omega"))?,
            a: multivector(&d.a, &chart, 1, &format!("{loc}.a"))?,
            alpha: form(&d.alpha, &chart, 1, &format!("{loc}.alpha"))?,
            potential: form(&d.potential, &chart, 1, &format!("{loc}.potential"))?,
        };
        preqs.push(CPreq { name: d.name.clone(), input, section, tol: check_tol(d.tol, &loc)? });
    }
    let preq_index = |name: &str, loc: &str| -> Res<usize> {
        preqs.iter().position(|p| p.name == name).ok_or_else(|| ScenarioError {
            location: loc.into(),
            message: format!("unknown prequantization `{name}`"),
        })
    };

    unique_names(s.groupoids.iter().map(|d| d.name.as_str()), "groupoids")?;
    let mut groupoids = Vec::new();
    for (i, d) in s.groupoids.iter().enumerate() {
        let loc = format!("groupoids[{i}]");
        let (chart, base) = match (&d.builtin, &d.spec) {
            (Some(b), None) => {
                if d.base.is_some() {
                    return err(format!("{loc}.base"), "built-in groupoids carry their own base structure");
                }
                builtin(b).ok_or_else(|| ScenarioError {
                    location: format!("{loc}.builtin"),
                    message: format!("unknown built-in `{b}` (one of {})", BUILTIN_NAMES.join(", ")),
                })?
            }
            (None, Some(spec)) => {
                let sloc = format!("{loc}.spec");
                let payload = match (&spec.theta, &spec.f, &spec.omega) {
                    (Some(theta), Some(f), None) => PayloadSpec::Contact { theta: theta.clone(), f: f.clone() },
                    (None, None, Some(w)) => {
                        let names: Vec<&str> = spec.coords.iter().map(String::as_str).collect();
                        PayloadSpec::Presymplectic { omega: skew_strings(w, &names, 2, &format!("{sloc}.omega"))? }
                    }
                    _ => return err(sloc, "give either `theta` and `f`, or `omega`"),
                };
                let gs = GroupoidSpec {
                    name: d.name.clone(),
                    coords: spec.coords.clone(),
                    domain: spec.domain.iter().map(|x| (x[0], x[1])).collect(),
                    base_coords: spec.base_coords.clone(),
                    base_domain: spec.base_domain.iter().map(|x| (x[0], x[1])).collect(),
                    source: spec.source.clone(),
                    target: spec.target.clone(),
                    unit: spec.unit.clone(),
                    inverse: spec.inverse.clone(),
                    h_free: spec.h_free.clone(),
                    h_of: spec.h_of.clone(),
                    mult: spec.mult.clone(),
                    payload,
                    v_gamma: spec.v_gamma.clone(),
                    periods: spec.periods.iter().map(|(k, v)| (k.clone(), *v)).collect(),
                };
                let g = gs.compile().or_else(|e| err(&sloc, e.to_string()))?;
                let bname = required(&d.base, &loc, "base")?;
                let b = structure(bname, &format!("{loc}.base"))?;
                if frame_dim(&b.frame) != g.base_dim() {
                    return err(format!("{loc}.base"), format!("base structure lives on a {}-dimensional chart, expected {}", frame_dim(&b.frame), g.base_dim()));
                }
                let base = match (&b.frame, spec.theta.is_some()) {
                    (StructFrame::Jacobi(f), true) => GroupoidBase::Jacobi(f.clone()),
                    (StructFrame::Dirac(f), false) => GroupoidBase::Dirac(f.clone()),
                    _ => return err(format!("{loc}.base"), "contact payloads need a Jacobi-Dirac base, presymplectic ones a Dirac base"),
                };
                (g, base)
            }
            _ => return err(&loc, "give exactly one of `builtin` and `spec`"),
        };
        if d.reduction && d.builtin.as_deref() != Some("1dim") {
            return err(format!("{loc}.reduction"), "the discrete reduction is only available for the built-in `1dim`");
        }
        groupoids.push(CGroupoid { name: d.name.clone(), chart, base, reduction: d.reduction, tol: check_tol(d.tol, &loc)? });
    }

    unique_names(s.apaths.iter().map(|d| d.name.as_str()), "apaths")?;
    let mut apaths = Vec::new();
    for (i, d) in s.apaths.iter().enumerate() {
        let loc = format!("apaths[{i}]");
        let Some(gi) = groupoids.iter().position(|g| g.name == d.groupoid) else {
            return err(format!("{loc}.groupoid"), format!("unknown groupoid `{}`", d.groupoid));
        };
        let GroupoidBase::Jacobi(f) = &groupoids[gi].base else {
            return err(format!("{loc}.groupoid"), "A-paths are developed into contact groupoids");
        };
        if d.coefficients.len() != sections_per_point(f) {
            return err(format!("{loc}.coefficients"), format!("expected {} coefficients", sections_per_point(f)));
        }
        if d.start.len() != f.chart.dim() {
            return err(format!("{loc}.start"), format!("expected {} coordinates", f.chart.dim()));
        }
        apaths.push(CApath {
            name: d.name.clone(),
            groupoid: gi,
            coeffs: path_coeffs(&d.coefficients, &format!("{loc}.coefficients"))?,
            start: d.start.clone(),
            nodes: even_nodes(d.nodes, &loc)?,
            tol: check_tol(d.tol, &loc)?,
        });
    }

    unique_names(s.lifts.iter().map(|d| d.name.as_str()), "lifts")?;
    let mut lifts = Vec::new();
    for (i, d) in s.lifts.iter().enumerate() {
        let loc = format!("lifts[{i}]");
        let pi = preq_index(&d.prequantization, &format!("{loc}.prequantization"))?;
        let input = &preqs[pi].input;
        let want = sections_per_point(&input.l) + 1;
        if d.coefficients.len() != want {
            return err(format!("{loc}.coefficients"), format!("expected {want} coefficients"));
        }
        if d.start.len() != input.n() + 1 {
            return err(format!("{loc}.start"), format!("expected {} coordinates", input.n() + 1));
        }
        lifts.push(CLift {
            name: d.name.clone(),
            preq: pi,
            coeffs: path_coeffs(&d.coefficients, &format!("{loc}.coefficients"))?,
            start: d.start.clone(),
            nodes: even_nodes(d.nodes, &loc)?,
            tol: check_tol(d.tol, &loc)?,
        });
    }

    unique_names(s.periods.iter().map(|d| d.name.as_str()), "periods")?;
    let mut periods = Vec::new();
    let xyz = Chart::new(&["x", "y", "z"], &[(-1.0, 1.0); 3]).expect("valid");
    for (i, d) in s.periods.iter().enumerate() {
        let loc = format!("periods[{i}]");
        let surface = Surface::from_exprs(&d.surface).or_else(|e| err(format!("{loc}.surface"), e.to_string()))?;
        periods.push(CPeriod {
            name: d.name.clone(),
            surface,
            form: form(&d.form, &xyz, 2, &format!("{loc}.form"))?,
            nodes: d.nodes.unwrap_or(DEFAULT_SURFACE_NODES),
            expect: d.expect,
            tol: check_tol(d.tol, &loc)?,
        });
    }

    unique_names(s.actions.iter().map(|d| d.name.as_str()), "actions")?;
    let mut actions = Vec::new();
    for (i, d) in s.actions.iter().enumerate() {
        let loc = format!("actions[{i}]");
        let kind = match d.kind.as_str() {
            "cotangent" => {
                let chart = chart_of(required(&d.chart, &loc, "chart")?, &format!("{loc}.chart"))?;
                let generators = d
                    .generators
                    .iter()
                    .enumerate()
                    .map(|(k, g)| multivector(g, &chart, 1, &format!("{loc}.generators[{k}]")))
                    .collect::<Res<Vec<_>>>()?;
                if generators.is_empty() || d.quotient.is_empty() {
                    return err(&loc, "cotangent actions need generators and a quotient map");
                }
                let names = chart.names();
                let pi = d
                    .quotient
                    .iter()
                    .enumerate()
                    .map(|(k, q)| scalar(q, &names, &format!("{loc}.quotient[{k}]")))
                    .collect::<Res<Vec<_>>>()?;
                ActionKind::Cotangent(CotangentAction { m_chart: chart, generators, pi: Map::new(pi) })
            }
            "circle" => ActionKind::Circle(preq_index(required(&d.prequantization, &loc, "prequantization")?, &format!("{loc}.prequantization"))?),
            "zero-level-rank" => {
                let b = structure(required(&d.structure, &loc, "structure")?, &format!("{loc}.structure"))?;
                let StructFrame::Jacobi(frame) = &b.frame else {
                    return err(format!("{loc}.structure"), "must be a Jacobi-Dirac structure");
                };
                if d.generators.len() != 1 {
                    return err(format!("{loc}.generators"), "expected exactly one generator");
                }
                let generator = multivector(&d.generators[0], &frame.chart, 1, &format!("{loc}.generators[0]"))?;
                ActionKind::ZeroLevel { frame: frame.clone(), generator }
            }
            other => return err(format!("{loc}.kind"), format!("unknown kind `{other}` (cotangent, circle, zero-level-rank)")),
        };
        actions.push(CAction { name: d.name.clone(), kind, expect: d.expect, tol: check_tol(d.tol, &loc)? });
    }

    unique_names(s.vorobjev.iter().map(|d| d.name.as_str()), "vorobjev")?;
    let mut vorobjev = Vec::new();
    for (i, d) in s.vorobjev.iter().enumerate() {
        let loc = format!("vorobjev[{i}]");
        let chart = chart_of(&d.chart, &format!("{loc}.chart"))?;
        if ["t", "u", "v"].iter().any(|n| chart.index_of(n).is_some()) {
            return err(format!("{loc}.chart"), "names t, u and v are reserved for the fibre coordinates");
        }
        let mut data = VorobjevData::new(
            chart.clone(),
            form(&d.omega, &chart, 2, &format!("{loc}.omega"))?,
            form(&d.potential, &chart, 1, &format!("{loc}.potential"))?,
        );
        if let Some([lo, hi]) = d.t_range {
            data.t_range = (lo, hi);
        }
        if let Some(w) = d.fiber_half_width {
            data.fiber_half_width = w;
        }
        vorobjev.push(CVorobjev { name: d.name.clone(), data, tol: check_tol(d.tol, &loc)? });
    }

    Ok(Compiled {
        name: s.name.clone(),
        config: s.config.clone(),
        structures,
        preqs,
        groupoids,
        apaths,
        lifts,
        periods,
        actions,
        vorobjev,
    })
}

fn path_coeffs(srcs: &[String], loc: &str) -> Res<Coeffs> {
    for (k, s) in srcs.iter().enumerate() {
        scalar(s, &["t"], &format!("{loc}[{k}]"))?;
    }
    coeffs_from_exprs(srcs).or_else(|e| err(loc, e.to_string()))
}

fn even_nodes(n: Option<usize>, loc: &str) -> Res<Option<usize>> {
    match n {
        Some(n) if n < 2 || n % 2 != 0 => err(format!("{loc}.nodes"), "node count must be even and at least 2"),
        n => Ok(n),
    }
}
