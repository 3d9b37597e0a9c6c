use chatterlab::chatter::{check_independence, compute_bundle, find_fuller_covector, verify_certificate, EdgeSpec};
use chatterlab::systems::load_system;
use chatterlab::Error;
use serde_json::json;

use crate::output::emit_json;
use crate::{CheckCmd, CliError};

/// Parses `a,b,c`; a `...` entry repeats the value before it until `dim` entries.
pub fn parse_point(src: &str, dim: usize) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = src.split(',').map(str::trim).collect();
    let explicit = parts.iter().filter(|p| **p != "...").count();
    let mut out = Vec::with_capacity(dim);
    let mut filled = 0;
    for p in &parts {
        if *p == "..." {
            let Some(&prev) = out.last() else {
                return Err(CliError::Usage("`...` needs a value before it".into()));
            };
            let fill = dim.saturating_sub(explicit + filled);
            filled += fill;
            out.extend(std::iter::repeat_n(prev, fill));
        } else {
            let v: f64 = p
                .parse()
                .map_err(|_| CliError::Usage(format!("bad coordinate \"{p}\" in --point")))?;
            if !v.is_finite() {
                return Err(CliError::Usage(format!("coordinate {v} is not finite")));
            }
            out.push(v);
        }
    }
    if out.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: out.len(),
        }
        .into());
    }
    Ok(out)
}

pub fn run(cmd: CheckCmd) -> Result<(), CliError> {
    match cmd {
        CheckCmd::Brackets { system, json } => {
            let sys = load_system(&system)?;
            let rows = sys.check_table()?;
            let failed = rows.iter().filter(|r| !r.holds).count();
            for r in &rows {
                eprintln!("{} {}", if r.holds { "ok  " } else { "FAIL" }, r.relation);
            }
            if rows.is_empty() {
                eprintln!("{}: no commutation table declared", sys.name);
            }
            emit_json(
                &json!({"system": sys.name, "relations": rows, "all_hold": failed == 0}),
                json.as_deref(),
            )?;
            if failed == 0 {
                Ok(())
            } else {
                Err(CliError::Failed(format!("{failed} table identities fail")))
            }
        }
        CheckCmd::Chattering { system, point, json } => {
            let sys = load_system(&system)?;
            let spec = sys
                .chattering
                .as_ref()
                .ok_or_else(|| Error::InvalidInput(format!("system {} declares no chattering edge", sys.name)))?;
            let x0 = parse_point(&point, sys.dimension())?;
            let edge = EdgeSpec::new(spec.edge.0, spec.edge.1)?;
            let gens = &spec.generators;
            if edge.vertex_index_a >= gens.len() || edge.vertex_index_b >= gens.len() {
                return Err(Error::InvalidInput("edge index out of range".into()).into());
            }
            let bundle = compute_bundle(&gens[edge.vertex_index_a], &gens[edge.vertex_index_b], &x0)?;
            check_independence(&bundle)?;
            let cert = find_fuller_covector(gens, edge, &bundle)?;
            let check = verify_certificate(&cert, gens, &bundle, 1e-9)?;
            eprintln!("Fuller covector p0 = [{}]", cert.p0_exact.join(", "));
            eprintln!(
                "separation margin {}, beta pairing {}, orthogonality residual {:e}",
                cert.separation_margin, cert.beta_pairing, cert.orthogonality_residual
            );
            emit_json(&json!({"certificate": cert, "verification": check}), json.as_deref())?;
            if check.passed {
                Ok(())
            } else {
                Err(CliError::Failed("certificate did not re-verify".into()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipsis_fills_dimension() {
        assert_eq!(parse_point("0,...,0", 9).unwrap(), vec![0.0; 9]);
        assert_eq!(parse_point("1,...", 3).unwrap(), vec![1.0; 3]);
        assert_eq!(parse_point("1,2,...,5", 5).unwrap(), vec![1.0, 2.0, 2.0, 2.0, 5.0]);
        assert_eq!(parse_point("0.5,-1", 2).unwrap(), vec![0.5, -1.0]);
        assert!(parse_point("1,2", 3).is_err());
        assert!(parse_point("...,1", 3).is_err());
        assert!(parse_point("a", 1).is_err());
    }
}
