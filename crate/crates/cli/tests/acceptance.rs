//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p etop-cli --test acceptance`.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use etop::durations::{class_durations_with, AnalysisOptions, ClassDurations, DurationSet, Interval};
use etop::model::{instantiate, ParamValuation, Rational, TimedSystem};
use etop::modelfmt::parse_model_named;
use etop::opacity::{
    compute_weak_set, decide, decide_both, decide_pta, decide_with, weak_emptiness, DeltaSet, Mode,
};
use etop::oracle::{compare, oracle_explore, Agreement, OracleConfig};
use etop::testsupport::{fig1, fig1_at, gen_ta, GenSpec};
use etop::transforms::{swap_transform, swap_transform_reverse, BoundValue};

type Check = Result<String, String>;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn interval(lo: Rational, lo_closed: bool, hi: Rational, hi_closed: bool) -> Interval {
    Interval { lower: lo, lower_closed: lo_closed, upper: Some(hi), upper_closed: hi_closed }
}

fn expect_intervals(name: &str, set: &DurationSet, want: &[Interval]) -> Result<(), String> {
    let (got, _) = set.intervals();
    if got == want {
        Ok(())
    } else {
        Err(format!("{name} is {set}, expected {}", want.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ∪ ")))
    }
}

/// The Fig. 1 regression, under the given options.
fn fig1_regression(opts: &AnalysisOptions) -> Check {
    let sys = fig1_at(q(1, 1), q(5, 2));
    let delta = BoundValue::int(1);
    let sets = class_durations_with(&sys, delta, opts).map_err(|e| e.to_string())?;
    expect_intervals("public", &sets.public, &[interval(q(0, 1), true, q(3, 1), true)])?;
    expect_intervals("expired", &sets.expired, &[interval(q(2, 1), false, q(5, 2), true)])?;
    expect_intervals("secret", &sets.secret, &[interval(q(1, 1), true, q(5, 2), true)])?;
    let weak = decide_with(&sys, delta, Mode::Weak, opts).map_err(|e| e.to_string())?;
    let full = decide_with(&sys, delta, Mode::Full, opts).map_err(|e| e.to_string())?;
    if !weak.opaque || full.opaque {
        return Err(format!("weak opaque = {}, full opaque = {}", weak.opaque, full.opaque));
    }
    Ok(format!("secret {}, expired {}, public {}", sets.secret, sets.expired, sets.public))
}

fn criterion_1() -> Check {
    fig1_regression(&AnalysisOptions::default())
}

fn closed_form(p1: Rational, p2: Rational, d: Rational) -> bool {
    let three = q(3, 1);
    p1 == q(0, 1) && ((d <= three && three <= p2 && p2 <= d + three) || (p2 < d && p2 == three))
}

fn criterion_2() -> Check {
    let pta = fig1();
    let mut mismatches = Vec::new();
    let mut points = 0;
    for p1 in [q(0, 1), q(1, 2), q(1, 1)] {
        for p2 in [q(2, 1), q(5, 2), q(3, 1), q(7, 2), q(4, 1)] {
            let v = ParamValuation::from_bindings(&pta, [("p1", p1), ("p2", p2)]).map_err(|e| e.to_string())?;
            for twice in 0..=8 {
                let d = q(twice, 2);
                points += 1;
                let got = decide_pta(&pta, &v, BoundValue::Finite(d), Mode::Full)
                    .map_err(|e| e.to_string())?
                    .opaque;
                if got != closed_form(p1, p2, d) {
                    mismatches.push(format!("p1={p1} p2={p2} delta={d}: got {got}"));
                }
            }
        }
    }
    if mismatches.is_empty() {
        Ok(format!("{points} grid points match"))
    } else {
        Err(format!("{} of {points} points differ: {}", mismatches.len(), mismatches.join("; ")))
    }
}

fn criterion_3() -> Check {
    let sys = fig1_at(q(1, 1), q(5, 2));
    let set = compute_weak_set(&sys).map_err(|e| e.to_string())?;
    if set != DeltaSet::All {
        return Err(format!("weak set is {set}, expected ALL"));
    }
    if weak_emptiness(&sys).map_err(|e| e.to_string())? {
        return Err("weak emptiness reported an empty set".into());
    }
    Ok("weak set = ALL, non-empty".into())
}

fn criterion_4() -> Check {
    let deltas = [BoundValue::int(0), BoundValue::ratio(1, 2), BoundValue::int(1), BoundValue::int(2)];
    let mut violations = Vec::new();
    let mut cases = 0;
    for seed in 0..200 {
        let sys = gen_ta(&GenSpec::with_seed(seed));
        for d in deltas {
            cases += 1;
            let result = (|| -> etop::Result<Option<String>> {
                let weak = decide(&sys, d, Mode::Weak)?.opaque;
                let full = decide(&sys, d, Mode::Full)?.opaque;
                let swap_weak = decide(&swap_transform(&sys, d)?, d, Mode::Weak)?.opaque;
                let rev_full = decide(&swap_transform_reverse(&sys, d)?, d, Mode::Full)?.opaque;
                let mut bad = Vec::new();
                if full != (weak && swap_weak) {
                    bad.push(format!("full={full}, weak={weak}, swap weak={swap_weak}"));
                }
                if weak != rev_full {
                    bad.push(format!("weak={weak}, reverse full={rev_full}"));
                }
                Ok((!bad.is_empty()).then(|| bad.join(", ")))
            })();
            match result {
                Ok(None) => {}
                Ok(Some(msg)) => violations.push(format!("seed {seed} delta {d}: {msg}")),
                Err(e) => violations.push(format!("seed {seed} delta {d}: {e}")),
            }
        }
    }
    if violations.is_empty() {
        Ok(format!("{cases} cases, zero violations"))
    } else {
        Err(format!("{} violations: {}", violations.len(), violations.join("; ")))
    }
}

fn criterion_5() -> Check {
    let opts = AnalysisOptions::default();
    let mut violations = Vec::new();
    let mut cases = 0;
    for seed in 0..200 {
        let sys = gen_ta(&GenSpec::with_seed(seed));
        for k in 0..3i64 {
            cases += 1;
            let verdicts: Result<Vec<(bool, bool)>, String> = [3, 5, 7]
                .iter()
                .map(|&t| decide_both(&sys, BoundValue::ratio(10 * k + t, 10), &opts).map_err(|e| e.to_string()))
                .collect();
            match verdicts {
                Ok(v) if v.iter().all(|x| *x == v[0]) => {}
                Ok(v) => violations.push(format!("seed {seed} band {k}: (weak, full) = {v:?}")),
                Err(e) => violations.push(format!("seed {seed} band {k}: {e}")),
            }
        }
    }
    if violations.is_empty() {
        Ok(format!("{cases} bands, zero violations"))
    } else {
        Err(format!("{} violations: {}", violations.len(), violations.join("; ")))
    }
}

/// Oracle comparison on one system at Δ ∈ {0, 1, ∞}. Returns whether the
/// sample was truncated and any disagreements.
fn oracle_case(sys: &TimedSystem, cfg: &OracleConfig, opts: &AnalysisOptions) -> Result<(bool, Vec<String>), String> {
    let sampled = oracle_explore(sys, cfg).map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    for d in [BoundValue::int(0), BoundValue::int(1), BoundValue::Infinite] {
        let sets: ClassDurations = class_durations_with(sys, d, opts).map_err(|e| e.to_string())?;
        if let Agreement::Disagree(v) = compare(&sampled, &sets, d).map_err(|e| e.to_string())? {
            bad.push(format!("delta {d}: {}", v.join(", ")));
        }
    }
    Ok((sampled.truncated, bad))
}

fn criterion_6() -> Check {
    const SEEDS: u64 = 500;
    let opts = AnalysisOptions::default();
    let mut disagreements = Vec::new();
    let mut truncated = 0;
    let mut still_truncated = 0;
    for seed in 0..SEEDS {
        let sys = gen_ta(&GenSpec::with_seed(seed));
        let g = 2 * (sys.clocks.len() as u32 + 2);
        let mut cfg = OracleConfig::with_g(&sys, g, 10);
        let (mut cut, mut bad) = oracle_case(&sys, &cfg, &opts)?;
        if cut {
            truncated += 1;
            cfg.step_cap *= 2;
            (cut, bad) = oracle_case(&sys, &cfg, &opts)?;
            if cut {
                still_truncated += 1;
            }
        }
        if !bad.is_empty() {
            disagreements.push(format!("seed {seed}: {}", bad.join("; ")));
        }
    }
    if !disagreements.is_empty() {
        return Err(format!("{} systems disagree: {}", disagreements.len(), disagreements.join(" | ")));
    }
    if truncated * 20 > SEEDS {
        return Err(format!("{truncated} of {SEEDS} samples truncated"));
    }
    Ok(format!(
        "{SEEDS} systems agree at 0, 1, inf; {truncated} truncated, {still_truncated} still truncated at doubled cap"
    ))
}

fn load_model(name: &str) -> Result<TimedSystem, String> {
    let path = repo_root().join("models").join(name);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_model_named(&text, name).map_err(|e| e.to_string())
}

fn opaque_at(pta: &TimedSystem, binds: &[(&str, Rational)], mode: Mode) -> Result<bool, String> {
    let v = ParamValuation::from_bindings(pta, binds.iter().copied()).map_err(|e| e.to_string())?;
    let sys = instantiate(pta, &v).map_err(|e| e.to_string())?;
    Ok(decide(&sys, BoundValue::int(0), mode).map_err(|e| e.to_string())?.opaque)
}

fn criterion_7() -> Check {
    let readme = std::fs::read_to_string(repo_root().join("README.md")).map_err(|e| format!("README.md: {e}"))?;
    if !readme.contains("## Results not reproduced") {
        return Err("README.md lacks the section on excluded results".into());
    }
    let lu = load_model("gadget_lu.ta")?;
    let pta = load_model("gadget_pta.ta")?;
    let one = q(1, 1);
    // Consistent parameter copies let the inner automaton reach its final
    // location at time 1; a gap between copies opens a second secret path.
    let lu_consistent = [("p1l", one), ("p1u", one), ("p2l", one), ("p2u", one)];
    let lu_gap = [("p1l", q(1, 2)), ("p1u", one), ("p2l", one), ("p2u", one)];
    let checks = [
        ("gadget_lu consistent", opaque_at(&lu, &lu_consistent, Mode::Full)?, true),
        ("gadget_lu gap", opaque_at(&lu, &lu_gap, Mode::Weak)?, false),
        ("gadget_pta reach at 1", opaque_at(&pta, &[("p1", one), ("p2", one)], Mode::Full)?, true),
        ("gadget_pta reach at 2", opaque_at(&pta, &[("p1", q(2, 1)), ("p2", q(2, 1))], Mode::Weak)?, false),
    ];
    for (name, got, want) in checks {
        if got != want {
            return Err(format!("{name}: opaque = {got}, expected {want}"));
        }
    }
    Ok("exclusions documented; gadget models parse and behave as constructed".into())
}

fn criterion_8() -> Check {
    let model = repo_root().join("models/fig1.ta");
    let out = Command::new(env!("CARGO_BIN_EXE_etop"))
        .args(["check", "--delta", "1", "--mode", "weak", "--format", "json", "--max-states", "5"])
        .args(["--bind", "p1=1", "--bind", "p2=2.5", "--model"])
        .arg(&model)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.code() != Some(3) {
        return Err(format!("cap exceeded gave exit status {:?}", out.status.code()));
    }
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| format!("bad JSON: {e}"))?;
    if v["error"]["kind"] != "cap_exceeded" || v.get("opaque").is_some() {
        return Err(format!("unexpected cap report {v}"));
    }

    let mutated = AnalysisOptions {
        explore: etop::regions::ExploreOptions { mutate_swap_acceptance: true, ..Default::default() },
        ..Default::default()
    };
    if fig1_regression(&mutated).is_ok() {
        return Err("swapped acceptance passed the Fig. 1 regression".into());
    }
    let mut caught_by_oracle = 0;
    let mut tried = 0;
    for seed in 0..50 {
        let sys = gen_ta(&GenSpec::with_seed(seed));
        let g = 2 * (sys.clocks.len() as u32 + 2);
        let (_, bad) = oracle_case(&sys, &OracleConfig::with_g(&sys, g, 10), &mutated)?;
        tried += 1;
        if !bad.is_empty() {
            caught_by_oracle += 1;
        }
    }
    if caught_by_oracle == 0 {
        return Err(format!("swapped acceptance agreed with the oracle on all {tried} systems"));
    }
    Ok(format!(
        "cap gives exit 3 and a structured error; mutation caught by the Fig. 1 regression and by the oracle on {caught_by_oracle} of {tried} systems"
    ))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Duration, fn() -> Check); 8] = [
        (1, "Fig. 1 regression", Duration::from_secs(5), criterion_1),
        (2, "parametric closed form", Duration::from_secs(120), criterion_2),
        (3, "weak computation", Duration::from_secs(10), criterion_3),
        (4, "full/weak reductions", Duration::from_secs(600), criterion_4),
        (5, "real-bound band constancy", Duration::from_secs(600), criterion_5),
        (6, "oracle equivalence", Duration::from_secs(1200), criterion_6),
        (7, "documented exclusions", Duration::from_secs(60), criterion_7),
        (8, "robustness and mutation", Duration::from_secs(300), criterion_8),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let mut result = run();
        let elapsed = start.elapsed();
        if result.is_ok() && elapsed > budget {
            result = Err(format!("took {elapsed:.1?}, budget {budget:?}"));
        }
        match result {
            Ok(detail) => println!("criterion {id} ({name}): PASS in {elapsed:.2?}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL in {elapsed:.2?}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
