//! One PASS/FAIL line per acceptance criterion, at the required tolerances.
//!
//! Runs without the libtest harness so the lines always reach stdout. The
//! process fails if any criterion other than the documented expected
//! failure fails, or if that one fails for a different reason.

mod common;

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use common::*;
use precontact::apaths::{
    develop, f_tilde, j1_integral, lift_apath, period_integral, prequantizability_report, simpson,
    sphere_area_form, Coeffs, Surface, DEFAULT_NODES, DEFAULT_SURFACE_NODES,
};
use precontact::calculus::{exterior_derivative, interior, lie_bracket, lie_derivative, Form, Multivector};
use precontact::chart::Chart;
use precontact::courant::{
    diracization, graph_of_1form, graph_of_2form, graph_of_bivector, graph_of_jacobi_pair, is_closed_under_bracket,
    is_isotropic, jacobi_residual, poisson_residual, DiracSection, E1Section, Frame, Section,
};
use precontact::field::{FormField, Map, MultivectorField, ScalarField};
use precontact::groupoids::{
    builtin, check_multiplicativity, cor_check, cor_computation_solve, example_1dim, example_lcs_qplus, iso_span_check,
    kernel_dims, reduce_groupoid_1dim, run_all,
};
use precontact::linalg::subspace_mismatch;
use precontact::prequantize::{
    example_line, example_plane, flat_connection_check, function_bracket_laws, independence_check, morphism_check_i,
    two_extensions, LineSection, PreqInput,
};
use precontact::reduction::{cotangent_reduce_check, reduce_lbar, theta_match, zero_level_rank, ActionModel, CotangentAction};
use precontact::report::CheckRecord;
use precontact::vorobjev::{check_poisson, example_plane as vorobjev_plane, leaf_form_check, VorobjevData};
use precontact::Jet2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;
const SAMPLES: usize = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn from_records(records: &[CheckRecord]) -> Outcome {
    let bad = failing(records);
    if bad.is_empty() {
        outcome(true, format!("{} checks, worst residual {:.2e}", records.len(), worst(records)))
    } else {
        outcome(false, format!("failing: {}", bad.join(", ")))
    }
}

fn criterion_1() -> Outcome {
    let chart = Chart::new(&["a", "b", "c", "d"], &[(-1.0, 1.0); 4]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut dd, mut jac, mut cartan) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..3 {
        let a0 = random_scalar(&mut rng, 4);
        let a1 = random_form(&mut rng, 4, 1);
        let a2 = random_form(&mut rng, 4, 2);
        let x = random_vector_field(&mut rng, 4);
        let y = random_vector_field(&mut rng, 4);
        let z = random_vector_field(&mut rng, 4);
        for p in chart.sample(SAMPLES, rng.gen()) {
            let pj = Jet2::seed(&p);
            // forms stop at degree 3, so d∘d is taken on functions and 1-forms
            for a in [Form::function(4, a0.eval(&pj)), a1.eval(&pj)] {
                dd = dd.max(exterior_derivative(&exterior_derivative(&a).unwrap()).unwrap().max_abs());
            }
            let (xv, yv, zv) = (x.eval(&pj), y.eval(&pj), z.eval(&pj));
            let cyc = &(&lie_bracket(&xv, &lie_bracket(&yv, &zv)) + &lie_bracket(&yv, &lie_bracket(&zv, &xv)))
                + &lie_bracket(&zv, &lie_bracket(&xv, &yv));
            jac = jac.max(cyc.max_abs());
            // [L_X, i_Y] = i_[X,Y] on a 2-form
            let a = a2.eval(&pj);
            let lhs = &lie_derivative(&xv, &interior(&yv, &a).unwrap()).unwrap()
                - &interior(&yv, &lie_derivative(&xv, &a).unwrap()).unwrap();
            let rhs = interior(&lie_bracket(&xv, &yv), &a).unwrap();
            cartan = cartan.max((&lhs - &rhs).max_abs());
        }
    }
    let worst = dd.max(jac).max(cartan);
    outcome(worst < 1e-9, format!("d∘d {dd:.2e}, Jacobi {jac:.2e}, [L_X,i_Y] - i_[X,Y] {cartan:.2e}"))
}

fn structure_checks<S: Section>(frame: &Frame<S>, pts: &[Vec<f64>]) -> (f64, f64) {
    let iso = is_isotropic(frame, pts, 1e-9).unwrap();
    let clo = is_closed_under_bracket(frame, pts, 1e-8).unwrap();
    assert!(iso.pass == (iso.max_residual < 1e-9));
    (iso.max_residual, clo.max_residual)
}

fn criterion_2() -> Outcome {
    let chart = Chart::new(&["x", "y", "z"], &[(-1.0, 1.0); 3]).unwrap();
    let pts = chart.sample(SAMPLES, SEED);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let c = ScalarField::coordinate;
    let mut rows: Vec<(&str, (f64, f64))> = Vec::new();

    let omega = exact_two_form(random_form(&mut rng, 3, 1));
    rows.push(("closed 2-form", structure_checks(&graph_of_2form(chart.clone(), omega), &pts)));

    let f = random_scalar(&mut rng, 3);
    let scaled = MultivectorField::new(3, 2, vec![f, ScalarField::zero(), ScalarField::zero()]);
    let so3 = MultivectorField::new(3, 2, vec![c(2), c(1).scale(-1.0), c(0)]);
    let poisson = poisson_residual(&scaled, &pts).max(poisson_residual(&so3, &pts));
    rows.push(("f dx^dy", structure_checks(&graph_of_bivector(chart.clone(), scaled), &pts)));
    rows.push(("so(3)*", structure_checks(&graph_of_bivector(chart.clone(), so3), &pts)));

    let sigma = random_form(&mut rng, 3, 1);
    rows.push(("1-form", structure_checks(&graph_of_1form(chart.clone(), sigma), &pts)));

    // contact dz - y dx: E = d_z, L = (d_x + y d_z) ^ d_y
    let lam = MultivectorField::new(3, 2, vec![ScalarField::constant(1.0), ScalarField::zero(), c(1).scale(-1.0)]);
    let e = MultivectorField::coordinate_vector(3, 2);
    let jac = jacobi_residual(&lam, &e, &pts);
    rows.push(("contact pair", structure_checks(&graph_of_jacobi_pair(chart.clone(), lam, e), &pts)));

    let line = Chart::new(&["x", "th"], &[(-2.0, 2.0), (0.0, 1.0)]).unwrap();
    let lam = MultivectorField::new(2, 2, vec![c(0).scale(-1.0)]);
    let e = MultivectorField::coordinate_vector(2, 1);
    let lpts = line.sample(SAMPLES, SEED);
    let jac = jac.max(jacobi_residual(&lam, &e, &lpts));
    rows.push(("x d_x^d_th pair", structure_checks(&graph_of_jacobi_pair(line, lam, e), &lpts)));

    let open = FormField::new(3, 2, vec![ScalarField::zero(), ScalarField::zero(), c(0)]);
    let neg = is_closed_under_bracket(&graph_of_2form(chart, open), &pts, 1e-8).unwrap().max_residual;

    let iso = rows.iter().map(|r| r.1 .0).fold(0.0, f64::max);
    let clo = rows.iter().map(|r| r.1 .1).fold(0.0, f64::max);
    let pass = iso < 1e-9 && clo < 1e-8 && neg > 1e-3 && poisson < 1e-9 && jac < 1e-9;
    outcome(
        pass,
        format!(
            "{} structures: isotropy {iso:.2e}, closure {clo:.2e}, Poisson/Jacobi conditions {:.2e}; x dy^dz control closure {neg:.2e}",
            rows.len(),
            poisson.max(jac)
        ),
    )
}

fn criterion_3() -> Outcome {
    let input = example_line(2.0);
    let pts = input.q_chart().sample(SAMPLES, SEED);
    let lbar = input.build_lbar();
    // d_th ^ x d_x = -x d_x ^ d_th on (x, th)
    let oracle = graph_of_jacobi_pair(
        input.q_chart(),
        MultivectorField::new(2, 2, vec![ScalarField::coordinate(0).scale(-1.0)]),
        MultivectorField::coordinate_vector(2, 1),
    );
    let span = pts.iter().map(|q| subspace_mismatch(&lbar.matrix_at(q), &oracle.matrix_at(q))).fold(0.0, f64::max);
    let indep = independence_check(&input, &pts, 1e-9).unwrap();
    let mut ext_ok = true;
    for q in &pts {
        let ext = two_extensions(&input, q).unwrap();
        ext_ok &= ext.bases.len() == 2 && ext.with_unit_scalar.is_some();
    }
    let morph = morphism_check_i(&input, &pts, 1e-9);
    let pass = span < 1e-9 && indep.pass && ext_ok && morph.pass;
    outcome(
        pass,
        format!(
            "span {span:.2e}, (A, alpha) independence {:.2e}, two extensions with (0,0)+(0,1) {}, morphism {:.2e}",
            indep.max_residual,
            if ext_ok { "yes" } else { "no" },
            morph.max_residual
        ),
    )
}

fn test_section() -> LineSection {
    LineSection {
        re: ScalarField::new(|p| &p[0] * &p[0] + 1.0),
        im: ScalarField::new(|p| p[0].sin() * 0.5 - 0.25),
    }
}

/// Returns the outcome and whether the only failure is the sign of the
/// fourth law.
fn criterion_4() -> (Outcome, bool) {
    let mut all = Vec::new();
    for input in [example_line(2.0), example_plane(2.0)] {
        let fs: Vec<ScalarField> = (0..input.n()).map(ScalarField::coordinate).collect();
        let pts = input.q_chart().sample(SAMPLES, SEED);
        all.extend(function_bracket_laws(&input, &fs, &test_section(), &pts, 1e-8, 1e-9).unwrap());
    }
    let literal: Vec<&CheckRecord> = all.iter().filter(|r| r.id != "bracket-law-4-sign").collect();
    let corrected = all.iter().filter(|r| r.id == "bracket-law-4-sign").all(|r| r.pass);
    let bad: Vec<&&CheckRecord> = literal.iter().filter(|r| !r.pass).collect();
    let only_law_4 = bad.iter().all(|r| r.id == "bracket-law-4") && corrected;
    let law4 = literal.iter().filter(|r| r.id == "bracket-law-4").map(|r| r.max_residual).fold(0.0, f64::max);
    let reeb = literal.iter().filter(|r| r.id == "reeb-on-F_S").map(|r| r.max_residual).fold(0.0, f64::max);
    let detail = format!(
        "{{F_S,1}} = -2 pi F_iS residual {law4:.2e}; E(F_S) = -2 pi F_iS {reeb:.2e}; sign-corrected {{F_S,1}} = +2 pi F_iS {}; other laws {}",
        if corrected { "holds" } else { "fails" },
        if bad.iter().all(|r| r.id == "bracket-law-4") { "hold" } else { "fail" }
    );
    (outcome(bad.is_empty(), detail), only_law_4)
}

fn criterion_5() -> Outcome {
    let mut res = Vec::new();
    for input in [example_plane(2.0), example_line(2.0)] {
        res.push(flat_connection_check(&input, &test_section(), &input.p_chart.sample(SAMPLES, SEED), 1e-8));
    }
    let r = from_records(&res);
    outcome(r.pass, format!("curvature on plane and line: {}", r.detail))
}

fn criterion_6() -> Outcome {
    let chart = Chart::new(&["x", "y"], &[(-2.0, 2.0), (-2.0, 2.0)]).unwrap();
    let action = CotangentAction {
        m_chart: chart.clone(),
        generators: vec![MultivectorField::coordinate_vector(2, 0)],
        pi: Map::select(&[1]),
    };
    from_records(&cotangent_reduce_check(&action, &chart.sample(SAMPLES, SEED), SEED, 1e-9).unwrap())
}

fn criterion_7() -> Outcome {
    let mut recs = Vec::new();
    for input in [example_line(2.0), example_plane(2.0)] {
        let n = input.n();
        let act = ActionModel {
            q_chart: input.q_chart(),
            v_q: MultivectorField::coordinate_vector(n + 1, n),
            pi: Map::select(&(0..n).collect::<Vec<_>>()),
        };
        let pts = input.q_chart().sample(SAMPLES, SEED);
        let lbar = input.build_lbar();
        let lbar0 = input.build_lbar0();
        recs.extend(reduce_lbar(&lbar, &act, &diracization(&input.l), Some(&lbar0), &pts, 1e-9).unwrap());
        recs.push(theta_match(&lbar, &act, &pts, SEED, 1e-9).unwrap());
    }
    let chart = Chart::new(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
    let half_y2 = FormField::one(vec![ScalarField::new(|p| &p[1] * &p[1] * 0.5), ScalarField::zero()]);
    let mut pts = chart.sample(20, SEED);
    pts.push(vec![0.4, 0.0]);
    let z = zero_level_rank(&graph_of_1form(chart, half_y2), &MultivectorField::coordinate_vector(2, 0), &pts, 1e-9).unwrap();
    let r = from_records(&recs);
    let flagged = !z.constant && !z.record.pass;
    outcome(
        r.pass && flagged,
        format!("{}; (y^2/2 dx, d_x) {}", r.detail, if flagged { "flagged nonconstant-rank" } else { "NOT flagged" }),
    )
}

fn criterion_8() -> Outcome {
    let mut recs = Vec::new();
    for name in ["1dim", "sympl"] {
        let (g, b) = builtin(name).unwrap();
        recs.extend(run_all(&g, &b, SAMPLES, SEED, 1e-9).unwrap());
    }
    let g = example_1dim();
    let slice: Vec<Vec<f64>> = g.total.sample(SAMPLES, SEED).into_iter().map(|mut p| {
        p[4] = 0.0;
        p
    })
    .collect();
    let slice_kernel = kernel_dims(&g, &slice).into_iter().max().unwrap_or(0);
    recs.push(check_multiplicativity(&example_lcs_qplus(), SAMPLES, SEED, 1e-9));
    let moment = recs.iter().filter(|r| r.id == "groupoid-moment").count();
    let r = from_records(&recs);
    outcome(
        r.pass && slice_kernel == 0 && moment == 2,
        format!("{}; kernel on x = 0 slice {slice_kernel}; J = 1 - f checked on {moment} groupoids", r.detail),
    )
}

fn criterion_9() -> Outcome {
    let g = example_1dim();
    let base_pts = g.base.sample(SAMPLES, SEED);
    let mut recs = iso_span_check(&g, &line_lbar_swapped(), &base_pts, 1e-8).unwrap();
    let pts = g.total.sample(SAMPLES, SEED);
    recs.extend(cor_check(&g, &frame_1dim(), &pts, 1e-8).unwrap().into_iter().filter(|r| r.id == "cor-unique" || r.id == "cor-r-identity"));
    // (0,0)+(0,-1) in L +_Upsilon R, carried into Lbar by the lift I
    let line = example_line(2.0);
    let (mut theta_r, mut dtheta_r, mut rank_ok) = (0.0f64, 0.0f64, true);
    for p in &pts {
        let q = g.source.values(p);
        let qj = Jet2::seed(&[q[1], q[0]]);
        let zero = DiracSection::new(Multivector::zero(1, 1), Form::zero(1, 1));
        let lam = swap_line_section(line.lift_i(&zero, &Jet2::constant(-1.0), &qj));
        let sol = cor_computation_solve(&g, p, &flatten(&lam)).unwrap();
        rank_ok &= sol.rank == g.dim();
        let y: Vec<f64> = sol.y.iter().map(|j| j.value).collect();
        // theta = x deps - e^t dth1 + dth2 on (th1, t, eps, th2, x)
        let et = p[1].exp();
        theta_r = theta_r.max((p[4] * y[2] - et * y[0] + y[3] - 1.0).abs());
        // dtheta = dx ^ deps - e^t dt ^ dth1
        let i_y = [-et * y[1], et * y[0], y[4], 0.0, -y[2]];
        dtheta_r = dtheta_r.max(i_y.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let r = from_records(&recs);
    let pass = r.pass && rank_ok && theta_r < 1e-8 && dtheta_r < 1e-8;
    outcome(pass, format!("{}; R field: theta(R) - 1 {theta_r:.2e}, i_R dtheta {dtheta_r:.2e}", r.detail))
}

fn flatten(s: &E1Section) -> Vec<f64> {
    let mut v: Vec<f64> = s.x.values();
    v.push(s.f.value);
    v.extend(s.xi.values());
    v.push(s.g.value);
    v
}

fn criterion_10() -> Outcome {
    let g = example_1dim();
    let f = frame_1dim();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut gap = 0.0f64;
    for _ in 0..20 {
        let a = random_path(&mut rng, 3, 0.6);
        let q0 = [rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0)];
        let d = develop(&g, &f, &a, &q0, DEFAULT_NODES).unwrap();
        gap = gap.max((d.end()[1].exp() - f_tilde(&d.path).unwrap()).abs());
    }
    let a = random_path(&mut rng, 3, 1.2);
    let end = |n| develop(&g, &f, &a, &[0.1, 1.2], n).unwrap().end().to_vec();
    let exact = end(1280);
    let ratio = max_abs_diff(&end(20), &exact) / max_abs_diff(&end(40), &exact);
    let order = ratio.log2();
    let mut level = 0.0f64;
    for _ in 0..5 {
        let a0 = random_path(&mut rng, 3, 0.6);
        let mean = simpson(&(0..=DEFAULT_NODES).map(|i| a0(i as f64 / DEFAULT_NODES as f64)[0]).collect::<Vec<_>>()).unwrap();
        let a: Coeffs = Arc::new(move |t| {
            let mut v = a0(t);
            v[0] -= mean;
            v
        });
        let d = develop(&g, &f, &a, &[0.2, 0.7], DEFAULT_NODES).unwrap();
        let j1 = j1_integral(&d.path, |_| vec![1.0, 0.0]).unwrap();
        level = level.max(d.end()[1].abs()).max(j1.abs());
    }
    let pass = gap <= 1e-6 && (3.5..4.5).contains(&order) && level < 1e-6;
    outcome(pass, format!("|f~ - f(develop)| {gap:.2e} over 20 paths; RK4 order {order:.2}; zero-j1 paths |t| {level:.2e}"))
}

fn criterion_11() -> Outcome {
    let input: PreqInput = example_plane(3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut proj, mut rec, mut equi) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..5 {
        let a = random_path(&mut rng, 3, 1.0);
        let l = lift_apath(&input, &a, &[0.1, -0.2, 0.3], DEFAULT_NODES).unwrap();
        let r = lift_apath(&input, &a, &[0.1, -0.2, 0.67], DEFAULT_NODES).unwrap();
        proj = proj.max(l.projection_residual);
        rec = rec.max(l.recovery_residual);
        for (p, q) in l.nodes.iter().zip(&r.nodes) {
            equi = equi.max((p[0] - q[0]).abs()).max((p[1] - q[1]).abs()).max((q[2] - p[2] - 0.37).abs());
        }
    }
    outcome(
        proj < 1e-7 && equi < 1e-8 && rec < 1e-7,
        format!("projection {proj:.2e}, section recovery {rec:.2e}, S^1-equivariance {equi:.2e}"),
    )
}

fn criterion_12() -> Outcome {
    let s = Surface::sphere();
    let one = period_integral(&sphere_area_form(), &s, DEFAULT_SURFACE_NODES).unwrap();
    let c = ScalarField::coordinate;
    let k = 1.5 / (4.0 * PI);
    let scaled = FormField::new(3, 2, vec![c(2).scale(k), c(1).scale(-k), c(0).scale(k)]);
    let p = period_integral(&scaled, &s, DEFAULT_SURFACE_NODES).unwrap();
    let rep = prequantizability_report(p, 1e-6);
    let flagged = !rep.pass && rep.note.as_deref().is_some_and(|n| n.contains("NOT integral"));
    outcome(
        (one - 1.0).abs() < 1e-6 && prequantizability_report(one, 1e-6).pass && flagged,
        format!("normalized period {one:.9}; scaled control {p:.6} reported {}", if flagged { "non-integral" } else { "integral" }),
    )
}

fn criterion_13() -> Outcome {
    let recs = reduce_groupoid_1dim(SAMPLES, SEED, 1e-9).unwrap();
    let sym = recs.iter().find(|r| r.id == "reduced-symplectic").map(|r| r.max_residual).unwrap_or(f64::NAN);
    let r = from_records(&recs);
    outcome(r.pass && sym == 0.0, format!("{}; d(dth + x deps) - dx^deps = {sym:e}", r.detail))
}

fn criterion_14() -> Outcome {
    let chart = Chart::new(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
    let x = ScalarField::coordinate(0);
    // (1 + x^2) dx^dy = d((x + x^3/3) dy)
    let curved = VorobjevData::new(
        chart,
        FormField::new(2, 2, vec![x.mul(&x).add(&ScalarField::constant(1.0))]),
        FormField::one(vec![ScalarField::zero(), x.add(&x.mul(&x).mul(&x).scale(1.0 / 3.0))]),
    );
    let mut recs = Vec::new();
    for d in [vorobjev_plane(), curved] {
        recs.push(check_poisson(&d, &d.total_chart().sample(SAMPLES, SEED), 1e-8));
        recs.extend(leaf_form_check(&d, SAMPLES, SEED, 1e-7));
    }
    from_records(&recs)
}

fn main() {
    let mut unexpected = Vec::new();
    let mut run = |n: usize, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {n:>2}: {} | {} | {secs:.1}s", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass || secs > 60.0 {
            unexpected.push(n);
        }
    };
    run(1, &criterion_1);
    run(2, &criterion_2);
    run(3, &criterion_3);
    let start = Instant::now();
    let (c4, only_sign) = criterion_4();
    let secs = start.elapsed().as_secs_f64();
    println!("criterion  4: {} | {} | {secs:.1}s", if c4.pass { "PASS" } else { "FAIL" }, c4.detail);
    run(5, &criterion_5);
    run(6, &criterion_6);
    run(7, &criterion_7);
    run(8, &criterion_8);
    run(9, &criterion_9);
    run(10, &criterion_10);
    run(11, &criterion_11);
    run(12, &criterion_12);
    run(13, &criterion_13);
    run(14, &criterion_14);
    // the fourth law fails as stated; its sign-corrected form is required to hold
    if c4.pass || !only_sign || secs > 60.0 {
        unexpected.push(4);
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected acceptance outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
    println!("acceptance: 13 of 14 PASS; criterion 4 FAIL as documented (sign of the fourth bracket law)");
}
