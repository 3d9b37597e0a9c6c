use chatterlab::fuller::{
    constants, cost_to_origin, mu_residual, sample_rows, simulate, solve_finite_time_eps, time_to_origin,
    verify_pmp_certificate, FullerReport, PhasePoint,
};
use chatterlab::oracle::{bangbang_search_with, collocation_refined, grid_cost, ComparisonReport, SearchOptions};
use serde_json::json;

use crate::output::{emit_json, fmt_f64, write_csv};
use crate::{CliError, FullerCmd};

fn rows_to_csv(rows: &[(f64, f64, f64, i8)]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|&(t, x, y, u)| vec![fmt_f64(t), fmt_f64(x), fmt_f64(y), u.to_string()])
        .collect()
}

pub fn run(cmd: FullerCmd, seed: u64) -> Result<(), CliError> {
    match cmd {
        FullerCmd::Mu { json } => {
            let k = constants();
            let residual = mu_residual(k.mu);
            eprintln!("mu = {}", k.mu);
            eprintln!("quartic residual = {residual:e}");
            emit_json(
                &json!({
                    "mu": k.mu,
                    "quartic_residual": residual,
                    "switch_coeff": k.switch_coeff,
                    "tail_time_bound": k.tail_time_bound,
                    "tail_cost_bound": k.tail_cost_bound,
                }),
                json.as_deref(),
            )
        }
        FullerCmd::Simulate { start, samples, out } => {
            let p0 = PhasePoint::new(start.x0, start.y0);
            let traj = simulate(p0, start.eps)?;
            let report = FullerReport::new(&traj);
            if traj.arcs.is_empty() {
                eprintln!("start is the origin: empty trajectory");
            } else {
                let gaps = traj.switch_gaps();
                let ratios: Vec<String> = gaps
                    .windows(2)
                    .map(|w| format!("{:.12}", w[1] / w[0]))
                    .rev()
                    .take(3)
                    .collect();
                eprintln!("mu = {}", report.mu);
                eprintln!("switches = {}", report.switch_times.len());
                eprintln!("T_reach = {}, cost = {}", report.t_reach, report.cost);
                eprintln!("last gap ratios = [{}]", ratios.join(", "));
            }
            if let Some(path) = &out.csv {
                let rows = sample_rows(&traj.arcs, 0.0, traj.t_reach, samples);
                write_csv(path, &["t", "x", "y", "u"], &rows_to_csv(&rows))?;
            }
            emit_json(&report, out.json.as_deref())
        }
        FullerCmd::Tf { start, json } => {
            let p0 = PhasePoint::new(start.x0, start.y0);
            let e = time_to_origin(p0, start.eps)?;
            eprintln!("T_F = {} (+- {:e})", e.value, e.error_bound);
            emit_json(&json!({"p0": p0, "eps": start.eps, "T_F": e}), json.as_deref())
        }
        FullerCmd::Jf { start, json } => {
            let p0 = PhasePoint::new(start.x0, start.y0);
            let e = cost_to_origin(p0, start.eps)?;
            eprintln!("J_F = {} (+- {:e})", e.value, e.error_bound);
            emit_json(&json!({"p0": p0, "eps": start.eps, "J_F": e}), json.as_deref())
        }
        FullerCmd::Finite {
            start,
            x1,
            y1,
            t1,
            samples,
            verify,
            max_switches,
            starts,
            nodes,
            out,
        } => {
            let p0 = PhasePoint::new(start.x0, start.y0);
            let p1 = PhasePoint::new(x1, y1);
            let mut sol = solve_finite_time_eps(p0, p1, t1, start.eps)?;
            let pmp = verify_pmp_certificate(&mut sol, 1000)?;
            let switches = sol.switch_times();
            eprintln!("cost = {}", sol.cost);
            eprintln!("switches = {}", switches.len());
            eprintln!("costate certificate: {} signed samples", pmp.samples_signed);
            let mut oracle = Vec::new();
            let mut failures = Vec::new();
            if verify {
                let opts = SearchOptions {
                    max_switches,
                    starts,
                    seed,
                };
                let bb = bangbang_search_with(p0, p1, t1, &opts)?;
                let r = ComparisonReport::new(sol.cost, bb.cost, max_switches, Some(seed));
                eprintln!("bang-bang oracle: {} (gap {:e})", r.oracle_cost, r.gap);
                if r.gap < -1e-6 {
                    failures.push(format!("bang-bang oracle beat the analytic cost by {:e}", -r.gap));
                }
                oracle.push(r);
                let grid = collocation_refined(nodes, p0, p1, t1)?;
                let r = ComparisonReport::new(sol.cost, grid_cost(&grid), nodes, None);
                let rel = r.gap.abs() / sol.cost.abs().max(f64::MIN_POSITIVE);
                eprintln!("collocation n = {nodes}: {} (relative gap {rel:e})", r.oracle_cost);
                if sol.cost > 0.0 && rel >= 0.01 {
                    failures.push(format!("collocation differs by {:.3}%", 100.0 * rel));
                }
                oracle.push(r);
            }
            if let Some(path) = &out.csv {
                let rows = sample_rows(&sol.arcs, 0.0, t1, samples);
                write_csv(path, &["t", "x", "y", "u"], &rows_to_csv(&rows))?;
            }
            emit_json(
                &json!({
                    "p0": p0,
                    "p1": p1,
                    "t1": t1,
                    "cost": sol.cost,
                    "switch_times": switches,
                    "T_reach_in": sol.forward.t_reach,
                    "T_reach_out": sol.backward.t_reach,
                    "pmp": pmp,
                    "oracle": oracle,
                }),
                out.json.as_deref(),
            )?;
            if failures.is_empty() {
                Ok(())
            } else {
                Err(CliError::Failed(failures.join("; ")))
            }
        }
    }
}
