//! End-to-end acceptance: nine criteria, one PASS/FAIL line each.

use std::time::{Duration, Instant};

use chatterlab::carnot::{
    build_carnot_finsler_geodesic, build_carnot_subfinsler_geodesic, dilate, exp_coords, finsler_norm_g,
    finsler_tangent_norm, inverse, lift_point, log_coords, multiply, project_pi, AlgebraVector,
    CarnotFinslerParams, GroupElement,
};
use chatterlab::chatter::{
    check_independence, compute_bundle, find_fuller_covector, momentum_hamiltonian, poisson_bracket,
    verify_certificate, EdgeSpec,
};
use chatterlab::fuller::{
    cost_to_origin, mu_residual, oval_point, simulate, solve_finite_time, solve_mu, time_to_origin, PhasePoint,
    DEFAULT_EPS,
};
use chatterlab::geodesic_r4::{
    adversarial_length_check, build_finsler_geodesic, build_subfinsler_geodesic, finsler_vnorm,
    make_admissible_endpoint, BoundaryPair,
};
use chatterlab::norm::{curve_length, explicit_r4_finsler_norm, minkowski_norm, VNorm};
use chatterlab::oracle::{bangbang_search_with, collocation_refined, grid_cost, SearchOptions};
use chatterlab::poly::{lie_bracket, random_field, Poly, PolyVectorField};
use chatterlab::scalar::rat;
use chatterlab::systems::{builtin_carnot, builtin_demo9, builtin_r4, carnot_fields, r4_fields, FieldSystem};
use chatterlab::Error;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn criterion_1() -> Outcome {
    let mu = solve_mu();
    let closed = 0.25 * (3.0 + 33f64.sqrt() - (26.0 + 6.0 * 33f64.sqrt()).sqrt());
    let res = mu_residual(mu).abs();
    let diff = (mu - closed).abs();
    outcome(res < 1e-12 && diff < 1e-12, format!("mu = {mu:.15}, residual {res:.1e}, |mu - closed form| {diff:.1e}"))
}

fn criterion_2() -> Outcome {
    let mu = solve_mu();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let Ok(traj) = simulate(oval_point(theta), DEFAULT_EPS) else {
            return outcome(false, format!("simulate failed at theta = {theta}"));
        };
        let gaps = traj.switch_gaps();
        for w in gaps.windows(2).skip(5) {
            worst = worst.max((w[1] / w[0] - mu).abs());
        }
    }
    outcome(worst < 1e-6, format!("max |gap ratio - mu| = {worst:.1e} over 20 oval starts"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut et, mut ej) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = PhasePoint::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let l: f64 = rng.random_range(0.2..3.0);
        let q = PhasePoint::new(l * l * p.x, l * p.y);
        let t = time_to_origin(p, DEFAULT_EPS).unwrap().value;
        let tq = time_to_origin(q, DEFAULT_EPS).unwrap().value;
        let j = cost_to_origin(p, DEFAULT_EPS).unwrap().value;
        let jq = cost_to_origin(q, DEFAULT_EPS).unwrap().value;
        et = et.max((tq - l * t).abs() / (l * t).max(f64::MIN_POSITIVE));
        ej = ej.max((jq - l.powi(5) * j).abs() / (l.powi(5) * j).max(f64::MIN_POSITIVE));
    }
    outcome(et < 1e-7 && ej < 1e-7, format!("max relative error T_F {et:.1e}, J_F {ej:.1e}"))
}

fn criterion_4() -> Outcome {
    let tf = |p: PhasePoint| time_to_origin(p, DEFAULT_EPS).unwrap().value;
    let sets = [
        (PhasePoint::new(1.0, 0.0), PhasePoint::ORIGIN, 1.0),
        (PhasePoint::new(0.5, 0.5), PhasePoint::new(-0.2, 0.1), 0.5),
        (PhasePoint::new(0.0, 1.0), PhasePoint::ORIGIN, 0.3),
        (PhasePoint::new(-0.8, 0.3), PhasePoint::new(0.4, -0.2), 1.0),
        (PhasePoint::new(0.2, -0.6), PhasePoint::new(0.0, 0.5), 0.2),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (i, (p0, p1, slack)) in sets.into_iter().enumerate() {
        let t1 = tf(p0) + tf(PhasePoint::new(p1.x, -p1.y)) + slack;
        let analytic = match solve_finite_time(p0, p1, t1) {
            Ok(s) => s.cost,
            Err(e) => return outcome(false, format!("set {i}: {e}")),
        };
        let opts = SearchOptions {
            max_switches: 12,
            starts: 50,
            seed: 2024 + i as u64,
        };
        let bb = match bangbang_search_with(p0, p1, t1, &opts) {
            Ok(r) => r.cost,
            Err(e) => return outcome(false, format!("set {i}: bang-bang search: {e}")),
        };
        let col = match collocation_refined(2000, p0, p1, t1) {
            Ok(g) => grid_cost(&g),
            Err(e) => return outcome(false, format!("set {i}: collocation: {e}")),
        };
        let beats = analytic <= bb + 1e-6;
        let rel = (col - analytic).abs() / analytic;
        ok &= beats && rel < 0.01;
        lines.push(format!("J={analytic:.6e} bb={bb:.6e} col={col:.6e} ({:.4}%)", 100.0 * rel));
    }
    outcome(ok, lines.join("; "))
}

fn jacobi_and_nilpotency(fields: &[PolyVectorField]) -> bool {
    let b = |a: &PolyVectorField, c: &PolyVectorField| lie_bracket(a, c).unwrap();
    for a in fields {
        for c in fields {
            for d in fields {
                let s = &(&b(a, &b(c, d)) + &b(c, &b(d, a))) + &b(d, &b(a, c));
                if !s.is_zero() {
                    return false;
                }
            }
        }
    }
    // every bracket of length six in the two generators vanishes
    let mut layer = vec![fields[0].clone(), fields[1].clone()];
    for _ in 0..5 {
        layer = layer
            .iter()
            .flat_map(|v| [b(&fields[0], v), b(&fields[1], v)])
            .filter(|v| !v.is_zero())
            .collect();
    }
    layer.is_empty()
}

fn table_holds(sys: &FieldSystem) -> bool {
    sys.check_table().map(|rows| rows.iter().all(|r| r.holds)).unwrap_or(false)
}

fn criterion_5() -> Outcome {
    let f = r4_fields();
    let br = |i: usize, j: usize| lie_bracket(&f[i], &f[j]).unwrap();
    let x = Poly::var(0);
    let y = Poly::var(1);
    let f4_identity = br(0, 2) == f[5].mul_poly(&x);
    let f5_identity = lie_bracket(&f[0], &br(0, 2)).unwrap() == f[5].mul_poly(&y);
    let r4_table = table_holds(&builtin_r4());
    let g_table = table_holds(&builtin_carnot());
    let g = carnot_fields();
    let lie = jacobi_and_nilpotency(&g) && jacobi_and_nilpotency(&f);
    outcome(
        f4_identity && f5_identity && r4_table && g_table && lie,
        format!(
            "f-table {r4_table}, f4 = x f6 {f4_identity}, f5 = y f6 {f5_identity}, g-table {g_table}, Jacobi + step 5 {lie}"
        ),
    )
}

fn rand_rat(rng: &mut ChaCha8Rng) -> BigRational {
    rat(rng.random_range(-40..=40), rng.random_range(1..=9))
}

fn rk4_flow(a: &[f64; 6], steps: usize) -> [f64; 6] {
    let g = carnot_fields();
    let rhs = |x: &[f64; 6]| -> [f64; 6] {
        let mut out = [0.0; 6];
        for (gi, c) in g.iter().zip(a) {
            for (o, v) in out.iter_mut().zip(gi.evaluate(x)) {
                *o += c * v;
            }
        }
        out
    };
    let h = 1.0 / steps as f64;
    let mut x = [0.0; 6];
    for _ in 0..steps {
        let k1 = rhs(&x);
        let k2 = rhs(&std::array::from_fn(|i| x[i] + 0.5 * h * k1[i]));
        let k3 = rhs(&std::array::from_fn(|i| x[i] + 0.5 * h * k2[i]));
        let k4 = rhs(&std::array::from_fn(|i| x[i] + h * k3[i]));
        for i in 0..6 {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let e = GroupElement::<BigRational>::identity();
    let mut exact = true;
    for _ in 0..100 {
        let mut el = || GroupElement::<BigRational>(std::array::from_fn(|_| rand_rat(&mut rng)));
        let (a, b, c) = (el(), el(), el());
        exact &= multiply(&multiply(&a, &b), &c) == multiply(&a, &multiply(&b, &c));
        exact &= multiply(&e, &a) == a && multiply(&a, &e) == a;
        exact &= multiply(&a, &inverse(&a)) == e && multiply(&inverse(&a), &a) == e;
        let v = AlgebraVector(b.0.clone());
        exact &= log_coords(&exp_coords(&v)) == v && exp_coords(&log_coords(&c)) == c;
        let l = rand_rat(&mut rng);
        exact &= dilate(&l, &multiply(&a, &b)) == multiply(&dilate(&l, &a), &dilate(&l, &b));
    }
    let mut flow_err = 0.0f64;
    for _ in 0..10 {
        let a: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.5..1.5));
        flow_err = flow_err.max(exp_coords(&AlgebraVector(a)).max_abs_diff(&GroupElement(rk4_flow(&a, 400))));
    }
    // d pi [g_i] = f_i o pi with pi(x) = (-x3, x2, x6, x1)
    let (g, f) = (carnot_fields(), r4_fields());
    let v = Poly::var;
    let subs = vec![-&v(2), v(1), v(5), v(0)];
    let intertwines = g.iter().zip(&f).all(|(gi, fi)| {
        let c = gi.components();
        let dpi = PolyVectorField::new(vec![-&c[2], c[1].clone(), c[5].clone(), c[0].clone()]);
        dpi == PolyVectorField::new(fi.components().iter().map(|p| p.substitute(&subs)).collect())
    });
    outcome(
        exact && flow_err < 1e-9 && intertwines,
        format!("exact axioms {exact}, flow error {flow_err:.1e}, d pi intertwines {intertwines}"),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let r4_ball = finsler_vnorm();
    let mut e_r4 = 0.0f64;
    for _ in 0..1000 {
        let q: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let xi: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let lp = minkowski_norm(&r4_ball, &q, &xi).unwrap().value();
        let ex = explicit_r4_finsler_norm(&q, &xi);
        e_r4 = e_r4.max((lp - ex).abs() / (1.0 + ex));
    }
    let g = carnot_fields();
    let mut gens = vec![&g[0] + &g[1], &g[0] - &g[1], &(-&g[0]) + &g[1], &(-&g[0]) - &g[1]];
    for gi in &g[2..] {
        gens.push(gi.clone());
        gens.push(-gi);
    }
    let g_ball = VNorm::new(gens).unwrap();
    let mut e_g = 0.0f64;
    for _ in 0..1000 {
        let x: [f64; 6] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        let xi: [f64; 6] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        let lp = minkowski_norm(&g_ball, &x, &xi).unwrap().value();
        let ex = finsler_norm_g(&GroupElement(x), &xi);
        e_g = e_g.max((lp - ex).abs() / (1.0 + ex));
    }
    outcome(e_r4 < 1e-9 && e_g < 1e-9, format!("max deviation r4 {e_r4:.1e}, group {e_g:.1e}"))
}

fn criterion_8() -> Outcome {
    let pairs: Vec<BoundaryPair> = [
        (1.0, 0.0, 0.0, 0.0, 1.0),
        (0.5, 0.5, -0.2, 0.3, 0.25),
        (0.0, 1.0, 0.3, -0.4, 0.5),
    ]
    .iter()
    .map(|&(a, b, c, d, s)| make_admissible_endpoint(a, b, c, d, s).unwrap())
    .collect();
    let mut ok = true;
    let (mut end_err, mut len_err, mut speed_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut min_gap = f64::INFINITY;
    for pair in &pairs {
        let target = pair.q1.w - pair.q0.w;
        for g in [build_subfinsler_geodesic(pair).unwrap(), build_finsler_geodesic(pair).unwrap()] {
            end_err = end_err.max(g.endpoint_error);
            len_err = len_err.max((g.length - target).abs());
        }
        let x0 = lift_point(&pair.q0, 0.3, -0.7);
        let lift = build_carnot_subfinsler_geodesic(&x0, pair).unwrap();
        end_err = end_err.max(project_pi(&lift.x1).max_abs_diff(&pair.q1)).max(lift.projection_error);
        len_err = len_err.max((lift.length - target).abs());

        let p = CarnotFinslerParams {
            x0: pair.q0.x,
            y0: pair.q0.y,
            x1: pair.q1.x,
            y1: pair.q1.y,
            w0: pair.q0.w,
            w1: pair.q1.w,
            z0: pair.q0.z,
            z1: pair.q1.z,
        };
        let cf = build_carnot_finsler_geodesic(&p).unwrap();
        end_err = end_err.max(cf.endpoint_error);
        let len = curve_length(&finsler_tangent_norm(), &cf).unwrap();
        len_err = len_err.max((len - cf.t1).abs());
        speed_err = speed_err.max(cf.max_speed_deviation(10_000));

        let adv = adversarial_length_check(pair, 200, 0xC0FFEE).unwrap();
        ok &= adv.passed && adv.reached > 0;
        min_gap = min_gap.min(adv.min_gap);
    }
    ok &= end_err < 1e-8 && len_err < 1e-9 && speed_err < 1e-9 && min_gap >= -1e-6;
    outcome(
        ok,
        format!(
            "endpoint {end_err:.1e}, length {len_err:.1e}, unit speed {speed_err:.1e}, min competitor gap {min_gap:.3e}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let r4 = builtin_r4();
    let f = r4_fields();
    let b = compute_bundle(&f[0], &f[1], &[0.3, 0.1, 0.0, 2.0]).unwrap();
    let too_small = matches!(check_independence(&b), Err(Error::DimensionTooSmall { .. }));
    let _ = r4;

    let demo = builtin_demo9();
    let c = demo.chattering.as_ref().unwrap();
    let edge = EdgeSpec::new(c.edge.0, c.edge.1).unwrap();
    let bundle = compute_bundle(&c.generators[0], &c.generators[1], &[0.0; 9]).unwrap();
    let cert_ok = match find_fuller_covector(&c.generators, edge, &bundle) {
        Ok(cert) => {
            let check = verify_certificate(&cert, &c.generators, &bundle, 1e-9).unwrap();
            check.passed
                && cert.orthogonality_residual < 1e-9
                && cert.separation_margin > 0.0
                && cert.beta_pairing == -1.0
        }
        Err(_) => false,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut poisson = true;
    for _ in 0..20 {
        let n = rng.random_range(2..=4);
        let a = random_field(&mut rng, n, 3, 3);
        let bf = random_field(&mut rng, n, 3, 3);
        let lhs = poisson_bracket(&momentum_hamiltonian(&a), &momentum_hamiltonian(&bf), n);
        poisson &= lhs == momentum_hamiltonian(&lie_bracket(&a, &bf).unwrap());
    }
    outcome(
        too_small && cert_ok && poisson,
        format!("r4 DimensionTooSmall {too_small}, demo9 certificate {cert_ok}, Poisson = Lie {poisson}"),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 9] = [
        ("1 mu", criterion_1, Duration::from_millis(1)),
        ("2 switch geometry", criterion_2, Duration::from_secs(1)),
        ("3 homogeneity", criterion_3, Duration::from_secs(5)),
        ("4 optimality cross-check", criterion_4, Duration::from_secs(120)),
        ("5 exact algebra", criterion_5, Duration::from_secs(5)),
        ("6 group", criterion_6, Duration::from_secs(10)),
        ("7 norm equivalence", criterion_7, Duration::from_secs(30)),
        ("8 geodesics", criterion_8, Duration::from_secs(120)),
        ("9 chattering checker", criterion_9, Duration::from_secs(10)),
    ];
    let mut failed = Vec::new();
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = out.passed && in_time;
        println!(
            "{} criterion {name}: {} [{:.3}s / limit {:.3}s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs_f64()
        );
        if !pass {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
