use chatterlab::carnot::{
    build_carnot_finsler_geodesic, build_carnot_subfinsler_geodesic, finsler_tangent_norm, lift_point,
    subfinsler_tangent_norm, CarnotFinslerParams, GroupElement,
};
use chatterlab::geodesic_r4::{
    adversarial_length_check, build_finsler_geodesic, build_subfinsler_geodesic, check_boundary_admissible,
    explicit_finsler, make_admissible_endpoint, subfinsler_norm, BoundaryPair, GeodesicR4, StateR4,
};
use chatterlab::norm::curve_length;
use clap::ValueEnum;
use serde_json::{json, Value};

use crate::output::{emit_json, fmt_f64, write_csv};
use crate::{CliError, GeodesicArgs, GeodesicKind};

const ENDPOINT_TOL: f64 = 1e-8;
const LENGTH_TOL: f64 = 1e-9;
const SPEED_TOL: f64 = 1e-9;

fn r4_rows(rows: Vec<(f64, StateR4, i8, f64)>) -> Vec<Vec<String>> {
    rows.into_iter()
        .map(|(t, q, u, v)| {
            vec![fmt_f64(t), fmt_f64(q.x), fmt_f64(q.y), fmt_f64(q.z), fmt_f64(q.w), u.to_string(), fmt_f64(v)]
        })
        .collect()
}

fn group_rows(rows: Vec<(f64, GroupElement, f64, f64)>) -> Vec<Vec<String>> {
    rows.into_iter()
        .map(|(t, x, u1, u2)| {
            let mut r = vec![fmt_f64(t)];
            r.extend(x.0.iter().map(|v| fmt_f64(*v)));
            r.push(fmt_f64(u1));
            r.push(fmt_f64(u2));
            r
        })
        .collect()
}

const R4_HEADER: [&str; 7] = ["t", "x", "y", "z", "w", "u", "v"];
const GROUP_HEADER: [&str; 9] = ["t", "x1", "x2", "x3", "x4", "x5", "x6", "u1", "u2"];

struct Verification {
    report: Value,
    failures: Vec<String>,
}

impl Verification {
    fn new() -> Self {
        Verification {
            report: json!({}),
            failures: Vec::new(),
        }
    }

    fn check(&mut self, key: &str, value: f64, tol: f64) {
        self.report[key] = json!(value);
        if !(value < tol) {
            self.failures.push(format!("{key} = {value:e} exceeds {tol:e}"));
        }
    }

    fn competitors(&mut self, pair: &BoundaryPair, samples: usize, seed: u64) -> Result<(), CliError> {
        let adv = adversarial_length_check(pair, samples, seed)?;
        eprintln!(
            "competitors: {} of {} reached q1, min length gap {:e}",
            adv.reached, adv.samples, adv.min_gap
        );
        if !adv.passed {
            self.failures.push(format!("a competitor beat the geodesic by {:e}", -adv.min_gap));
        }
        self.report["competitors"] = serde_json::to_value(&adv).map_err(|e| CliError::Output(e.to_string()))?;
        Ok(())
    }
}

fn r4_report(g: &GeodesicR4) -> Value {
    json!({
        "q0": g.pair.q0,
        "q1": g.pair.q1,
        "t1": g.t1,
        "length": g.length,
        "endpoint_error": g.endpoint_error,
        "switch_count": g.switch_times().len(),
    })
}

pub fn run(args: &GeodesicArgs, seed: u64) -> Result<(), CliError> {
    let mut pair = make_admissible_endpoint(args.x0, args.y0, args.x1, args.y1, args.slack)?;
    if let Some(z1) = args.z1 {
        pair.q1.z = z1;
    }
    let adm = check_boundary_admissible(&pair)?;
    let target = pair.q1.w - pair.q0.w;
    let mut ver = Verification::new();
    let (mut report, rows, header): (Value, Vec<Vec<String>>, &[&str]) = match args.kind {
        GeodesicKind::R4Subfinsler | GeodesicKind::R4Finsler => {
            let g = if args.kind == GeodesicKind::R4Subfinsler {
                build_subfinsler_geodesic(&pair)?
            } else {
                build_finsler_geodesic(&pair)?
            };
            eprintln!("length = {} over {} switches", g.length, g.switch_times().len());
            if args.verify {
                ver.check("endpoint_error", g.endpoint_error, ENDPOINT_TOL);
                let len = if args.kind == GeodesicKind::R4Subfinsler {
                    curve_length(&subfinsler_norm(), &g)?
                } else {
                    curve_length(&explicit_finsler(), &g)?
                };
                ver.check("length_error", (len - target).abs(), LENGTH_TOL);
                ver.competitors(&pair, args.competitors, seed)?;
            }
            (r4_report(&g), r4_rows(g.samples(args.samples)), &R4_HEADER)
        }
        GeodesicKind::CarnotSubfinsler => {
            let x0 = lift_point(&pair.q0, args.lift_x4, args.lift_x5);
            let lift = build_carnot_subfinsler_geodesic(&x0, &pair)?;
            eprintln!("length = {} over {} switches", lift.length, lift.base.switch_times().len());
            if args.verify {
                ver.check("endpoint_error", lift.base.endpoint_error, ENDPOINT_TOL);
                ver.check("projection_error", lift.projection_error, ENDPOINT_TOL);
                let len = curve_length(&subfinsler_tangent_norm(), &lift.curve)?;
                ver.check("length_error", (len - target).abs(), LENGTH_TOL);
                ver.competitors(&pair, args.competitors, seed)?;
            }
            let report = json!({
                "x0": lift.x0,
                "x1": lift.x1,
                "t1": lift.base.t1,
                "length": lift.length,
                "projection_error": lift.projection_error,
                "base": r4_report(&lift.base),
            });
            (report, group_rows(lift.curve.samples(args.samples)), &GROUP_HEADER)
        }
        GeodesicKind::CarnotFinsler => {
            let params = CarnotFinslerParams {
                x0: pair.q0.x,
                y0: pair.q0.y,
                x1: pair.q1.x,
                y1: pair.q1.y,
                w0: pair.q0.w,
                w1: pair.q1.w,
                z0: pair.q0.z,
                z1: pair.q1.z,
            };
            let g = build_carnot_finsler_geodesic(&params)?;
            let speed = g.max_speed_deviation(10_000);
            eprintln!("length = {}, max unit-speed deviation = {speed:e}", g.t1);
            if args.verify {
                ver.check("endpoint_error", g.endpoint_error, ENDPOINT_TOL);
                ver.check("speed_deviation", speed, SPEED_TOL);
                let len = curve_length(&finsler_tangent_norm(), &g)?;
                ver.check("length_error", (len - target).abs(), LENGTH_TOL);
                ver.competitors(&pair, args.competitors, seed)?;
            }
            let report = json!({
                "x0": g.x_start,
                "x1": g.x_end,
                "t1": g.t1,
                "a": g.a,
                "b": g.b,
                "endpoint_error": g.endpoint_error,
                "max_speed_deviation": speed,
            });
            (report, group_rows(g.samples(args.samples)), &GROUP_HEADER)
        }
    };
    report["kind"] = json!(args.kind.to_possible_value().map(|v| v.get_name().to_string()));
    report["admissibility"] = serde_json::to_value(&adm).map_err(|e| CliError::Output(e.to_string()))?;
    if args.verify {
        report["verification"] = ver.report.clone();
        report["verification"]["passed"] = json!(ver.failures.is_empty());
        report["verification"]["seed"] = json!(seed);
    }
    if let Some(path) = &args.out.csv {
        write_csv(path, header, &rows)?;
    }
    emit_json(&report, args.out.json.as_deref())?;
    if ver.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(ver.failures.join("; ")))
    }
}
