//! JSON and text renderings of analysis results.

use std::time::Duration;

use serde_json::{json, Value};

use etop::durations::{AnalysisStats, CellKind};
use etop::modelfmt::format_rational;
use etop::opacity::{Mode, Side, SweepReport, Verdict, Witness};
use etop::transforms::BoundValue;
use etop::Error;

/// What a command prints, in both formats.
pub struct Output {
    pub json: Value,
    pub text: String,
}

pub fn side_name(side: Side) -> &'static str {
    match side {
        Side::Secret => "secret",
        Side::NonSecret => "non_secret",
    }
}

pub fn stats_json(stats: &AnalysisStats, wall: Option<Duration>) -> Value {
    let mut v = json!({
        "region_states": stats.region_states,
        "region_transitions": stats.region_transitions,
        "subsets": stats.subsets,
        "max_subset": stats.max_subset,
    });
    if let Some(w) = wall {
        v["wall_ms"] = json!(w.as_secs_f64() * 1000.0);
    }
    v
}

fn witness_json(w: &Witness) -> Value {
    json!({
        "kind": match w.cell.kind {
            CellKind::Point => "point",
            CellKind::Open => "open",
        },
        "lower": format_rational(w.cell.lower()),
        "upper": format_rational(w.cell.upper()),
        "side": side_name(w.side),
        "text": w.cell.to_string(),
    })
}

pub fn verdict_json(problem: &str, mode: Mode, delta: BoundValue, v: &Verdict) -> Value {
    let mut out = json!({
        "problem": problem,
        "mode": mode.name(),
        "delta": delta.to_string(),
        "opaque": v.opaque,
        "stats": stats_json(&v.stats.analysis, Some(v.stats.wall)),
    });
    if let Some(w) = &v.witness {
        out["witness"] = witness_json(w);
    }
    out
}

pub fn error_json(e: &Error) -> Value {
    let message = e.to_string();
    match e {
        Error::Syntax { span, message } => json!({
            "kind": "syntax",
            "message": message,
            "file": span.file,
            "line": span.line,
            "column": span.column,
            "length": span.length,
        }),
        Error::Invalid(diags) => json!({
            "kind": "invalid_model",
            "message": message,
            "diagnostics": diags
                .iter()
                .map(|d| json!({ "entity": d.entity, "message": d.message }))
                .collect::<Vec<_>>(),
        }),
        Error::CapExceeded { what, cap } => json!({
            "kind": "cap_exceeded",
            "message": message,
            "resource": what,
            "cap": cap,
        }),
        Error::MissingParam(_) | Error::UnknownParam(_) | Error::NegativeParam(_) => {
            json!({ "kind": "parameter", "message": message })
        }
        _ => json!({ "kind": "precondition", "message": message }),
    }
}

pub fn sweep_output(report: &SweepReport) -> Output {
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            let valuation: serde_json::Map<String, Value> =
                r.valuation.iter().map(|(n, v)| (n.clone(), json!(format_rational(*v)))).collect();
            let mut row = json!({ "valuation": valuation, "delta": r.delta.to_string() });
            match &r.outcome {
                Ok((opaque, witness)) => {
                    row["opaque"] = json!(opaque);
                    if let Some(w) = witness {
                        row["witness"] = witness_json(w);
                    }
                }
                Err(e) => {
                    row["error"] = json!({
                        "kind": if e.cap_exceeded { "cap_exceeded" } else { "precondition" },
                        "message": e.message,
                    });
                }
            }
            row
        })
        .collect();
    let json = json!({
        "problem": "sweep",
        "mode": report.mode.name(),
        "params": report.params.iter().map(|p| json!({
            "name": p.name,
            "lo": format_rational(p.lo),
            "hi": format_rational(p.hi),
            "step": format_rational(p.step),
        })).collect::<Vec<_>>(),
        "deltas": report.deltas.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        "rows": rows,
    });
    let text = report.rows.iter().map(|r| format!("{r}\n")).collect();
    Output { json, text }
}
