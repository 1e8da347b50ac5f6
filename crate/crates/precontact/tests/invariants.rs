//! Property tests for identities that hold for every input.

mod common;

use common::*;
use nalgebra::DMatrix;
use precontact::apaths::{f_tilde_of, simpson};
use precontact::calculus::{exterior_derivative, lie_bracket, sort_sign, wedge, Form};
use precontact::chart::Chart;
use precontact::courant::{
    courant_bracket, extended_courant_bracket, graph_of_2form, is_closed_under_bracket, is_isotropic, pair_plus,
    DiracSection, E1Section,
};
use precontact::expr::parse;
use precontact::groupoids::{check_multiplicativity, check_structure, example_1dim, example_sympl_plane};
use precontact::linalg::subspace_mismatch;
use precontact::Jet2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Jet2> {
    Jet2::seed(&(0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>())
}

fn dirac_section(rng: &mut ChaCha8Rng, x: &[Jet2]) -> DiracSection {
    let n = x.len();
    DiracSection::new(random_vector_field(rng, n).eval(x), random_form(rng, n, 1).eval(x))
}

fn e1_section(rng: &mut ChaCha8Rng, x: &[Jet2]) -> E1Section {
    let n = x.len();
    E1Section::new(
        random_vector_field(rng, n).eval(x),
        random_scalar(rng, n).eval(x),
        random_form(rng, n, 1).eval(x),
        random_scalar(rng, n).eval(x),
    )
}

fn expr_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        (0u32..20).prop_map(|k| format!("{}", k as f64 / 4.0)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop_oneof![Just("+"), Just("-"), Just("*")], inner.clone())
                .prop_map(|(a, op, b)| format!("({a}) {op} ({b})")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("({a})^2")),
            inner.prop_map(|a| format!("exp(({a}) / 8)")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn d_squared_vanishes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = point(&mut rng, 4);
        let f = Form::function(4, random_scalar(&mut rng, 4).eval(&x));
        let a = random_form(&mut rng, 4, 1).eval(&x);
        for form in [f, a] {
            let dd = exterior_derivative(&exterior_derivative(&form).unwrap()).unwrap();
            prop_assert!(dd.max_abs() < 1e-10);
        }
    }

    #[test]
    fn wedge_is_graded_commutative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = point(&mut rng, 4);
        let a = random_form(&mut rng, 4, 1).eval(&x);
        let b = random_form(&mut rng, 4, 2).eval(&x);
        let c = random_form(&mut rng, 4, 1).eval(&x);
        prop_assert!((&wedge(&a, &b).unwrap() - &wedge(&b, &a).unwrap()).max_abs() < 1e-12);
        prop_assert!((&wedge(&a, &c).unwrap() + &wedge(&c, &a).unwrap()).max_abs() < 1e-12);
        // Leibniz rule for d on a wedge of 1-forms
        let lhs = exterior_derivative(&wedge(&a, &c).unwrap()).unwrap();
        let da_c = wedge(&exterior_derivative(&a).unwrap(), &c).unwrap();
        let a_dc = wedge(&a, &exterior_derivative(&c).unwrap()).unwrap();
        prop_assert!((&lhs - &(&da_c - &a_dc)).max_abs() < 1e-10);
    }

    #[test]
    fn lie_bracket_is_a_lie_algebra(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = point(&mut rng, 3);
        let (x, y, z) = (random_vector_field(&mut rng, 3).eval(&p), random_vector_field(&mut rng, 3).eval(&p), random_vector_field(&mut rng, 3).eval(&p));
        prop_assert!((&lie_bracket(&x, &y) + &lie_bracket(&y, &x)).max_abs() < 1e-12);
        let cyc = &(&lie_bracket(&x, &lie_bracket(&y, &z)) + &lie_bracket(&y, &lie_bracket(&z, &x))) + &lie_bracket(&z, &lie_bracket(&x, &y));
        prop_assert!(cyc.max_abs() < 1e-10);
    }

    #[test]
    fn courant_brackets_are_skew(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = point(&mut rng, 3);
        let (a, b) = (dirac_section(&mut rng, &p), dirac_section(&mut rng, &p));
        let (ab, ba) = (courant_bracket(&a, &b), courant_bracket(&b, &a));
        prop_assert!((&ab.x + &ba.x).max_abs() < 1e-12 && (&ab.xi + &ba.xi).max_abs() < 1e-12);
        prop_assert!((pair_plus(&a, &b).value - pair_plus(&b, &a).value).abs() < 1e-14);
        let (a, b) = (e1_section(&mut rng, &p), e1_section(&mut rng, &p));
        let (ab, ba) = (extended_courant_bracket(&a, &b), extended_courant_bracket(&b, &a));
        prop_assert!((&ab.x + &ba.x).max_abs() < 1e-12 && (&ab.xi + &ba.xi).max_abs() < 1e-12);
        prop_assert!((ab.f.value + ba.f.value).abs() < 1e-12 && (ab.g.value + ba.g.value).abs() < 1e-12);
    }

    #[test]
    fn graphs_of_exact_forms_are_dirac(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chart = Chart::new(&["x", "y", "z"], &[(-1.0, 1.0); 3]).unwrap();
        let frame = graph_of_2form(chart.clone(), exact_two_form(random_form(&mut rng, 3, 1)));
        let pts = chart.sample(10, seed);
        prop_assert!(is_isotropic(&frame, &pts, 1e-9).unwrap().pass);
        prop_assert!(is_closed_under_bracket(&frame, &pts, 1e-8).unwrap().pass);
    }

    #[test]
    fn sort_sign_matches_transposition_count(perm in Just((0..5usize).collect::<Vec<_>>()).prop_shuffle()) {
        let (sorted, sign) = sort_sign(&perm).unwrap();
        prop_assert_eq!(sorted, (0..5).collect::<Vec<_>>());
        let inversions = (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j))).filter(|&(i, j)| perm[i] > perm[j]).count();
        prop_assert_eq!(sign, if inversions % 2 == 0 { 1.0 } else { -1.0 });
        let mut repeated = perm.clone();
        repeated[1] = repeated[0];
        prop_assert!(sort_sign(&repeated).is_none());
    }

    #[test]
    fn subspace_mismatch_ignores_the_basis(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(6, 3, |_, _| rng.gen_range(-1.0..1.0));
        let mix = DMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 } else { rng.gen_range(-0.5..0.5) });
        prop_assert!(subspace_mismatch(&a, &(&a * mix)) < 1e-10);
        let other = DMatrix::from_fn(6, 3, |_, _| rng.gen_range(-1.0..1.0));
        prop_assert!(subspace_mismatch(&a, &other) > 1e-3);
    }

    #[test]
    fn simpson_is_exact_on_cubics(c in prop::array::uniform4(-3.0..3.0f64)) {
        let vals: Vec<f64> = (0..=20).map(|i| {
            let t = i as f64 / 20.0;
            c[0] + c[1] * t + c[2] * t * t + c[3] * t * t * t
        }).collect();
        let exact = c[0] + c[1] / 2.0 + c[2] / 3.0 + c[3] / 4.0;
        prop_assert!((simpson(&vals).unwrap() - exact).abs() < 1e-12);
        prop_assert!((f_tilde_of(&vals).unwrap() - (-exact).exp()).abs() < 1e-12 * (-exact).exp().max(1.0));
    }

    #[test]
    fn printed_expressions_reparse_to_the_same_function(src in expr_source(), x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let a = parse(&src, &["x", "y"], &[]).unwrap();
        let b = parse(&a.to_string(), &["x", "y"], &[]).unwrap();
        prop_assert!(a.root.same_shape(&b.root), "{} -> {}", src, a);
        let (va, vb) = (a.eval_at(&[x, y], &[]).unwrap(), b.eval_at(&[x, y], &[]).unwrap());
        prop_assert_eq!(va.value, vb.value);
        prop_assert_eq!(va.grad, vb.grad);
    }

    #[test]
    fn groupoid_laws_hold_at_any_seed(seed in any::<u64>()) {
        for g in [example_1dim(), example_sympl_plane()] {
            for r in check_structure(&g, 8, seed, 1e-9) {
                prop_assert!(r.pass, "{} {}: {:e}", g.name, r.id, r.max_residual);
            }
            let m = check_multiplicativity(&g, 8, seed, 1e-9);
            prop_assert!(m.pass, "{}: {:e}", g.name, m.max_residual);
        }
    }
}
