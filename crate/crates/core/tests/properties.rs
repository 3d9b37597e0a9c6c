use chatterlab::carnot::{dilate, exp_coords, inverse, log_coords, multiply, AlgebraVector, GroupElement};
use chatterlab::chatter::{momentum_hamiltonian, poisson_bracket};
use chatterlab::fuller::{cost_to_origin, solve_finite_time, time_to_origin, PhasePoint, DEFAULT_EPS};
use chatterlab::geodesic_r4::{finsler_vnorm, subfinsler_norm};
use chatterlab::norm::{dual_norm, explicit_r4_finsler_norm, minkowski_norm, NormValue};
use chatterlab::oracle::{bangbang_search_with, SearchOptions};
use chatterlab::poly::{format_field, lie_bracket, parse_field, random_field, verify_identity};
use chatterlab::scalar::rat;
use chatterlab::systems::r4_dual_norm;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn exact_element() -> impl Strategy<Value = GroupElement<BigRational>> {
    prop::array::uniform6((-20i64..=20, 1i64..=6)).prop_map(|a| GroupElement(a.map(|(n, d)| rat(n, d))))
}

fn real_element() -> impl Strategy<Value = GroupElement> {
    prop::array::uniform6(-2.0f64..2.0).prop_map(GroupElement)
}

fn phase_point() -> impl Strategy<Value = PhasePoint> {
    (-2.0f64..2.0, -2.0f64..2.0)
        .prop_filter("away from the origin", |(x, y)| x.abs() + y.abs() > 1e-3)
        .prop_map(|(x, y)| PhasePoint::new(x, y))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #[test]
    fn group_law_is_associative(x in exact_element(), y in exact_element(), z in exact_element()) {
        prop_assert_eq!(multiply(&multiply(&x, &y), &z), multiply(&x, &multiply(&y, &z)));
    }

    #[test]
    fn inverse_and_identity(x in exact_element()) {
        let e = GroupElement::<BigRational>::identity();
        prop_assert_eq!(multiply(&x, &inverse(&x)), e.clone());
        prop_assert_eq!(multiply(&inverse(&x), &x), e.clone());
        prop_assert_eq!(multiply(&x, &e), x.clone());
        prop_assert_eq!(multiply(&e, &x), x);
    }

    #[test]
    fn dilation_is_an_automorphism(x in exact_element(), y in exact_element(), n in 1i64..5, d in 1i64..5) {
        let l = rat(n, d);
        prop_assert_eq!(dilate(&l, &multiply(&x, &y)), multiply(&dilate(&l, &x), &dilate(&l, &y)));
    }

    #[test]
    fn exp_and_log_are_inverse(x in exact_element()) {
        prop_assert_eq!(exp_coords(&log_coords(&x)), x);
    }

    #[test]
    fn real_group_law_agrees_with_exact(x in real_element(), y in real_element()) {
        let to_exact = |g: &GroupElement| {
            GroupElement(g.0.map(|v| chatterlab::scalar::rat_from_f64(v).unwrap()))
        };
        let exact = multiply(&to_exact(&x), &to_exact(&y));
        let real = multiply(&x, &y);
        for i in 0..6 {
            let e: f64 = num_traits::ToPrimitive::to_f64(&exact.0[i]).unwrap();
            prop_assert!((e - real.0[i]).abs() <= 1e-12 * (1.0 + e.abs()));
        }
    }

    #[test]
    fn log_of_exp_is_identity_on_algebra(a in prop::array::uniform6((-9i64..=9, 1i64..=4))) {
        let a = AlgebraVector(a.map(|(n, d)| rat(n, d)));
        prop_assert_eq!(log_coords(&exp_coords(&a)), a);
    }

    #[test]
    fn time_and_cost_are_homogeneous(p in phase_point(), l in 0.25f64..4.0) {
        let t = time_to_origin(p, DEFAULT_EPS).unwrap().value;
        let tl = time_to_origin(p.scaled(l), DEFAULT_EPS).unwrap().value;
        prop_assert!(rel_close(tl, l * t, 1e-9), "T {} vs {}", tl, l * t);
        let j = cost_to_origin(p, DEFAULT_EPS).unwrap().value;
        let jl = cost_to_origin(p.scaled(l), DEFAULT_EPS).unwrap().value;
        prop_assert!(rel_close(jl, l.powi(5) * j, 1e-9), "J {} vs {}", jl, l.powi(5) * j);
    }

    #[test]
    fn time_and_cost_are_symmetric(p in phase_point()) {
        let neg = PhasePoint::new(-p.x, -p.y);
        let t = time_to_origin(p, DEFAULT_EPS).unwrap().value;
        prop_assert!(rel_close(time_to_origin(neg, DEFAULT_EPS).unwrap().value, t, 1e-12));
        let j = cost_to_origin(p, DEFAULT_EPS).unwrap().value;
        prop_assert!(rel_close(cost_to_origin(neg, DEFAULT_EPS).unwrap().value, j, 1e-12));
    }

    #[test]
    fn finite_time_solution_meets_the_endpoint(p0 in phase_point(), p1 in phase_point(), slack in 0.0f64..2.0) {
        let t1 = time_to_origin(p0, DEFAULT_EPS).unwrap().value
            + time_to_origin(p1.reflected(), DEFAULT_EPS).unwrap().value
            + slack;
        let sol = solve_finite_time(p0, p1, t1).unwrap();
        let (end, _) = sol.state_at(t1);
        prop_assert!((end.x - p1.x).abs() < 1e-8 && (end.y - p1.y).abs() < 1e-8);
        let j = cost_to_origin(p0, DEFAULT_EPS).unwrap().value
            + cost_to_origin(p1.reflected(), DEFAULT_EPS).unwrap().value;
        prop_assert!(rel_close(sol.cost, j, 1e-9));
    }

    #[test]
    fn subfinsler_vertex_and_halfspace_forms_agree(
        q in prop::array::uniform4(-2.0f64..2.0),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        off in prop::bool::ANY,
    ) {
        let (x, y) = (q[0], q[1]);
        let mut xi = [a * y, b, a * 0.5 * x * x, a];
        if off {
            xi[0] += 0.5;
        }
        let v = minkowski_norm(&subfinsler_norm(), &q, &xi).unwrap();
        let h = dual_norm(&r4_dual_norm(), &q, &xi);
        if off {
            prop_assert_eq!(v, NormValue::Infinite);
            prop_assert_eq!(h, NormValue::Infinite);
        } else {
            let want = a.abs().max(b.abs());
            prop_assert!((v.value() - want).abs() < 1e-9, "V {:?} vs {}", v, want);
            prop_assert!((h.value() - want).abs() < 1e-12, "H {:?} vs {}", h, want);
        }
    }

    #[test]
    fn finsler_lp_matches_closed_form(q in prop::array::uniform4(-2.0f64..2.0), xi in prop::array::uniform4(-3.0f64..3.0)) {
        let lp = minkowski_norm(&finsler_vnorm(), &q, &xi).unwrap().value();
        let closed = explicit_r4_finsler_norm(&q, &xi);
        prop_assert!((lp - closed).abs() < 1e-9 * (1.0 + closed), "{} vs {}", lp, closed);
    }

    #[test]
    fn finsler_norm_is_a_norm(
        q in prop::array::uniform4(-2.0f64..2.0),
        a in prop::array::uniform4(-3.0f64..3.0),
        b in prop::array::uniform4(-3.0f64..3.0),
        l in -4.0f64..4.0,
    ) {
        let n = |v: &[f64]| explicit_r4_finsler_norm(&q, v);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        prop_assert!(n(&sum) <= n(&a) + n(&b) + 1e-12);
        let scaled: Vec<f64> = a.iter().map(|x| l * x).collect();
        prop_assert!((n(&scaled) - l.abs() * n(&a)).abs() < 1e-12 * (1.0 + n(&scaled)));
    }

    #[test]
    fn lie_bracket_is_antisymmetric_and_jacobi(seed in any::<u64>(), dim in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_field(&mut rng, dim, 2, 2);
        let g = random_field(&mut rng, dim, 2, 2);
        let h = random_field(&mut rng, dim, 2, 2);
        let fg = lie_bracket(&f, &g).unwrap();
        prop_assert!(verify_identity(&fg, &(-&lie_bracket(&g, &f).unwrap())));
        let j1 = lie_bracket(&f, &lie_bracket(&g, &h).unwrap()).unwrap();
        let j2 = lie_bracket(&g, &lie_bracket(&h, &f).unwrap()).unwrap();
        let j3 = lie_bracket(&h, &fg).unwrap();
        prop_assert!((&(&j1 + &j2) + &j3).is_zero());
    }

    #[test]
    fn poisson_bracket_of_hamiltonians_is_lie_bracket(seed in any::<u64>(), dim in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_field(&mut rng, dim, 3, 3);
        let g = random_field(&mut rng, dim, 3, 3);
        let lhs = poisson_bracket(&momentum_hamiltonian(&f), &momentum_hamiltonian(&g), dim);
        prop_assert_eq!(lhs, momentum_hamiltonian(&lie_bracket(&f, &g).unwrap()));
    }

    #[test]
    fn field_text_round_trips(seed in any::<u64>(), dim in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_field(&mut rng, dim, 3, 3);
        let vars: Vec<String> = (0..dim).map(|i| format!("x{}", i + 1)).collect();
        let back = parse_field(&format_field(&f, &vars), &vars).unwrap();
        prop_assert_eq!(back, f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn bang_bang_oracle_never_beats_the_analytic_cost(
        p0 in phase_point(),
        slack in 0.1f64..1.0,
        seed in any::<u64>(),
    ) {
        let p1 = PhasePoint::ORIGIN;
        let t1 = time_to_origin(p0, DEFAULT_EPS).unwrap().value + slack;
        let analytic = solve_finite_time(p0, p1, t1).unwrap().cost;
        let opts = SearchOptions { max_switches: 4, starts: 8, seed };
        let bb = bangbang_search_with(p0, p1, t1, &opts).unwrap();
        prop_assert!(bb.cost >= analytic - 1e-6 * (1.0 + analytic), "{} < {}", bb.cost, analytic);
    }
}
