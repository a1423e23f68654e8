//! `etop`: command-line frontend for expiring execution-time opacity.
//!
//! Exit codes: 0 when the analysis ran and the property holds, 1 when it
//! ran and the property fails, 2 on usage or input errors, 3 when a
//! resource cap was exceeded.

mod report;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use etop::durations::{analysis_scale, class_durations_with, AnalysisOptions};
use etop::model::{instantiate, scale, ParamValuation, TimedSystem};
use etop::modelfmt::{emit_dot, emit_model, parse_model_named, parse_rational};
use etop::opacity::{
    compute_weak_set_with, decide_with, full_emptiness_with, sweep_with, Exactness, Mode, ParamRange,
};
use etop::oracle::{compare, oracle_explore, Agreement, OracleConfig};
use etop::regions::explore;
use etop::transforms::{
    absorb_final, add_tick, add_tick_except, classify, swap_transform, swap_transform_reverse,
    BoundValue,
};
use etop::Error;

use report::{stats_json, verdict_json, Output};

#[derive(Parser, Debug)]
#[command(name = "etop", version, about = "Expiring execution-time opacity of timed automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Model file in the .ta format, or `-` for standard input.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Parameter value, `name=rational`; repeatable.
    #[arg(long = "bind", global = true, value_name = "NAME=VALUE")]
    binds: Vec<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Maximum number of region states per exploration.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    max_states: Option<u64>,
    /// Maximum number of subsets in the tick-language construction.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    max_subsets: Option<u64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Weak,
    Full,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Weak => Mode::Weak,
            ModeArg::Full => Mode::Full,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Op {
    Swap,
    SwapRev,
    Tick,
    Scale,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide opacity for one expiration bound.
    Check {
        #[arg(long, value_parser = parse_bound)]
        delta: BoundValue,
        #[arg(long, value_enum, default_value_t = ModeArg::Weak)]
        mode: ModeArg,
    },
    /// Compute every bound for which weak opacity holds.
    ComputeWeak,
    /// Check whether some bound makes the system opaque.
    Emptiness {
        #[arg(long, value_enum)]
        mode: ModeArg,
    },
    /// Print the secret, expired and public duration sets.
    Durations {
        #[arg(long, value_parser = parse_bound)]
        delta: BoundValue,
    },
    /// Apply a model transformation and print the result as a .ta model.
    Transform {
        #[arg(long, value_enum)]
        op: Op,
        /// Bound used by the swap constructions.
        #[arg(long, value_parser = parse_bound)]
        delta: Option<BoundValue>,
        /// Positive integer factor for `scale`.
        #[arg(long)]
        factor: Option<u64>,
    },
    /// Build a region automaton and export it as Graphviz DOT.
    Regions {
        #[arg(long, value_name = "FILE")]
        dot: PathBuf,
        /// Classify at this bound and accept at the three classified finals;
        /// without it, accept at the final location.
        #[arg(long, value_parser = parse_bound)]
        delta: Option<BoundValue>,
    },
    /// Compare the region pipeline with the brute-force sampler.
    Oracle {
        #[arg(long, value_parser = parse_bound)]
        delta: BoundValue,
        /// Sampling granularity; defaults to 2·(clocks+2)·denominator.
        #[arg(long)]
        g: Option<u32>,
        #[arg(long, default_value_t = 10)]
        horizon: u32,
        #[arg(long)]
        step_cap: Option<usize>,
    },
    /// Decide a parametric model over a grid of valuations.
    Sweep {
        /// `name=lo..hi:step`, `name=lo..hi` or `name=value`; repeatable.
        #[arg(long = "grid", value_name = "SPEC", required = true)]
        grids: Vec<String>,
        /// Bound to check at every grid point; repeatable.
        #[arg(long = "delta", value_parser = parse_bound)]
        deltas: Vec<BoundValue>,
        #[arg(long, value_enum, default_value_t = ModeArg::Weak)]
        mode: ModeArg,
    },
}

fn parse_bound(s: &str) -> Result<BoundValue, String> {
    BoundValue::parse(s).ok_or_else(|| format!("`{s}` is not a non-negative rational or `inf`"))
}

/// Why a command did not produce a verdict.
enum Failure {
    Usage(String),
    Analysis(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Analysis(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Analysis(e) if e.is_cap() => 3,
            _ => 2,
        }
    }

    fn json(&self) -> Value {
        match self {
            Failure::Usage(m) => json!({ "kind": "usage", "message": m }),
            Failure::Analysis(e) => report::error_json(e),
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Analysis(e) => e.to_string(),
        }
    }
}

/// Exit status of a completed analysis.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Status {
    Holds,
    Fails,
    CapExceeded,
}

impl From<bool> for Status {
    fn from(holds: bool) -> Self {
        if holds {
            Status::Holds
        } else {
            Status::Fails
        }
    }
}

type Outcome = Result<(Output, Status), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.common.format;
    match run(&cli) {
        Ok((out, status)) => {
            let text = match format {
                Format::Json => {
                    let mut v = out.json;
                    v["schema"] = json!("etop/1");
                    format!("{}\n", sort_keys(v))
                }
                Format::Text => out.text,
            };
            print!("{text}");
            let _ = io::stdout().flush();
            ExitCode::from(match status {
                Status::Holds => 0,
                Status::Fails => 1,
                Status::CapExceeded => 3,
            })
        }
        Err(f) => {
            match format {
                Format::Json => {
                    let v = json!({ "schema": "etop/1", "error": f.json() });
                    println!("{}", sort_keys(v));
                }
                Format::Text => eprintln!("error: {}", f.message()),
            }
            ExitCode::from(f.exit_code())
        }
    }
}

/// serde_json's default map keeps keys sorted, so the rendering is
/// deterministic.
fn sort_keys(v: Value) -> String {
    serde_json::to_string(&v).expect("JSON values always serialize")
}

fn load_model(common: &Common) -> Result<TimedSystem, Failure> {
    let path = common.model.as_deref().ok_or_else(|| Failure::Usage("--model is required".into()))?;
    let (text, name) = if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| Failure::Usage(format!("cannot read standard input: {e}")))?;
        (s, "<stdin>".to_string())
    } else {
        let s = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {path}: {e}")))?;
        (s, path.to_string())
    };
    Ok(parse_model_named(&text, &name)?)
}

fn bindings(common: &Common, sys: &TimedSystem) -> Result<ParamValuation, Failure> {
    let mut pairs = Vec::new();
    for b in &common.binds {
        let (name, value) = b
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("bad binding `{b}`; expected name=value")))?;
        let value = parse_rational(value)
            .ok_or_else(|| Failure::Usage(format!("bad value in binding `{b}`")))?;
        pairs.push((name.trim().to_string(), value));
    }
    Ok(ParamValuation::from_bindings(sys, pairs.iter().map(|(n, v)| (n.as_str(), *v)))?)
}

/// The model with all parameters bound.
fn load_instance(common: &Common) -> Result<TimedSystem, Failure> {
    let pta = load_model(common)?;
    let v = bindings(common, &pta)?;
    Ok(instantiate(&pta, &v)?)
}

fn options(common: &Common) -> AnalysisOptions {
    let mut opts = AnalysisOptions::default();
    if let Some(n) = common.max_states {
        opts.explore.state_cap = n as usize;
    }
    if let Some(n) = common.max_subsets {
        opts.subset_cap = n as usize;
    }
    opts
}

fn run(cli: &Cli) -> Outcome {
    let common = &cli.common;
    let opts = options(common);
    match &cli.command {
        Command::Check { delta, mode } => {
            let sys = load_instance(common)?;
            let mode = Mode::from(*mode);
            let v = decide_with(&sys, *delta, mode, &opts)?;
            let json = verdict_json("decide", mode, *delta, &v);
            let mut text = format!(
                "{} {}-expiring opacity: {}\n",
                mode,
                delta,
                if v.opaque { "holds" } else { "fails" }
            );
            if let Some(w) = &v.witness {
                text.push_str(&format!("witness duration: {} ({})\n", w.cell, report::side_name(w.side)));
            }
            Ok((Output { json, text }, Status::from(v.opaque)))
        }
        Command::ComputeWeak => {
            let sys = load_instance(common)?;
            let set = compute_weak_set_with(&sys, &opts)?;
            let json = json!({
                "problem": "compute-weak",
                "mode": "weak",
                "delta_set": set.to_json(),
                "exactness": "exact",
            });
            let text = format!("weak opacity holds for delta in: {set}\n");
            Ok((Output { json, text }, Status::from(!set.is_empty())))
        }
        Command::Emptiness { mode } => {
            let sys = load_instance(common)?;
            match Mode::from(*mode) {
                Mode::Weak => {
                    let set = compute_weak_set_with(&sys, &opts)?;
                    let nonempty = !set.is_empty();
                    let json = json!({
                        "problem": "emptiness",
                        "mode": "weak",
                        "nonempty": nonempty,
                        "delta_set": set.to_json(),
                        "exactness": "exact",
                    });
                    let text = format!(
                        "some bound gives weak opacity: {}\nbounds: {set}\n",
                        if nonempty { "yes" } else { "no" }
                    );
                    Ok((Output { json, text }, Status::from(nonempty)))
                }
                Mode::Full => {
                    let r = full_emptiness_with(&sys, &opts)?;
                    let exactness = match r.exactness {
                        Exactness::Exact => "exact",
                        Exactness::EmptinessOnly => "emptiness_only",
                    };
                    let mut json = json!({
                        "problem": "emptiness",
                        "mode": "full",
                        "nonempty": r.nonempty,
                        "exactness": exactness,
                    });
                    let mut text = format!(
                        "some bound gives full opacity: {}\n",
                        if r.nonempty { "yes" } else { "no" }
                    );
                    match &r.set {
                        Some(set) => {
                            json["delta_set"] = set.to_json();
                            text.push_str(&format!("bounds: {set}\n"));
                        }
                        None => text.push_str("bounds: unknown (weak opacity holds for every bound)\n"),
                    }
                    Ok((Output { json, text }, Status::from(r.nonempty)))
                }
            }
        }
        Command::Durations { delta } => {
            let sys = load_instance(common)?;
            let sets = class_durations_with(&sys, *delta, &opts)?;
            let json = json!({
                "problem": "durations",
                "delta": delta.to_string(),
                "secret": sets.secret.to_json(),
                "expired": sets.expired.to_json(),
                "public": sets.public.to_json(),
                "stats": stats_json(&sets.stats, None),
            });
            let text = format!(
                "secret:  {}\nexpired: {}\npublic:  {}\n",
                sets.secret, sets.expired, sets.public
            );
            Ok((Output { json, text }, Status::from(true)))
        }
        Command::Transform { op, delta, factor } => {
            let need_delta = || delta.ok_or_else(|| Failure::Usage("this transformation needs --delta".into()));
            let result = match op {
                Op::Swap => swap_transform(&load_instance(common)?, need_delta()?)?,
                Op::SwapRev => swap_transform_reverse(&load_instance(common)?, need_delta()?)?,
                Op::Tick => add_tick(&load_instance(common)?)?.system,
                Op::Scale => {
                    let q = factor.ok_or_else(|| Failure::Usage("scale needs --factor".into()))?;
                    scale(&load_instance(common)?, q)?
                }
            };
            let text = emit_model(&result);
            let json = json!({ "problem": "transform", "model": text });
            Ok((Output { json, text }, Status::from(true)))
        }
        Command::Regions { dot, delta } => {
            let sys = load_instance(common)?;
            let m = analysis_scale(&sys, delta.unwrap_or(BoundValue::Infinite))?;
            let scaled = scale(&sys, m as u64)?;
            let ra = match delta {
                Some(d) => {
                    let c = classify(&scaled, d.scaled(m))?;
                    explore(&c.with_tick()?, &c.finals(), &opts.explore)?
                }
                None => {
                    let f = scaled.final_loc;
                    explore(&add_tick_except(&absorb_final(&scaled), &[f])?, &[f], &opts.explore)?
                }
            };
            write_atomically(dot, emit_dot(&ra).as_bytes())
                .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", dot.display())))?;
            let json = json!({
                "problem": "regions",
                "dot": dot.display().to_string(),
                "scale": m,
                "states": ra.state_count(),
                "transitions": ra.transition_count(),
            });
            let text = format!("{ra}, written to {}\n", dot.display());
            Ok((Output { json, text }, Status::from(true)))
        }
        Command::Oracle { delta, g, horizon, step_cap } => {
            let sys = load_instance(common)?;
            let mut cfg = match g {
                Some(g) => OracleConfig::with_g(&sys, *g, *horizon),
                None => OracleConfig::defaults(&sys, *horizon),
            };
            if let Some(cap) = step_cap {
                cfg.step_cap = *cap;
            }
            let sampled = oracle_explore(&sys, &cfg)?;
            let sets = class_durations_with(&sys, *delta, &opts)?;
            let agreement = compare(&sampled, &sets, *delta)?;
            let (status, details) = match &agreement {
                Agreement::Agree => ("agree", vec![]),
                Agreement::Disagree(d) => ("disagree", d.clone()),
                Agreement::Inconclusive => ("inconclusive", vec![]),
            };
            let json = json!({
                "problem": "oracle",
                "delta": delta.to_string(),
                "g": cfg.g,
                "horizon": cfg.horizon,
                "status": status,
                "truncated": sampled.truncated,
                "mismatches": details,
            });
            let mut text = format!("oracle (g = {}, horizon {}): {status}\n", cfg.g, cfg.horizon);
            for d in &details {
                text.push_str(&format!("  {d}\n"));
            }
            if agreement == Agreement::Inconclusive {
                return Err(Failure::Analysis(Error::CapExceeded { what: "oracle steps", cap: cfg.step_cap }));
            }
            Ok((Output { json, text }, Status::from(agreement.agrees())))
        }
        Command::Sweep { grids, deltas, mode } => {
            let pta = load_model(common)?;
            let grid = grids.iter().map(|g| ParamRange::parse(g)).collect::<Result<Vec<_>, _>>()?;
            let report = sweep_with(&pta, &grid, deltas, Mode::from(*mode), &opts);
            let out = report::sweep_output(&report);
            let status = if report.rows.iter().any(|r| r.outcome.as_ref().is_err_and(|e| e.cap_exceeded)) {
                Status::CapExceeded
            } else {
                Status::from(report.rows.iter().all(|r| matches!(r.outcome, Ok((true, _)))))
            };
            Ok((out, status))
        }
    }
}

/// Writes to a sibling temporary file, then renames it over `path`.
fn write_atomically(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "not a file path"))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn bound_arguments() {
        assert!(parse_bound("inf").is_ok());
        assert!(parse_bound("-1").is_err());
        assert_eq!(parse_bound("2.5").unwrap(), BoundValue::ratio(5, 2));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("etop-atomic-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("out.dot");
        write_atomically(&p, b"one").unwrap();
        write_atomically(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
