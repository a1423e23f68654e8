use std::fmt::Write;

use crate::regions::{Acceptance, Letter, RegionAutomaton};

/// Graphviz rendering of a region automaton. Tick transitions are labelled
/// `tick`, others are unlabelled; accepting regions are drawn as double
/// circles (exact arrival) or double octagons (fractional arrival).
pub fn emit_dot(ra: &RegionAutomaton) -> String {
    let mut out = String::from("digraph regions {\n  rankdir=LR;\n  node [shape=box, fontsize=10];\n");
    for (i, r) in ra.states.iter().enumerate() {
        let label = r.describe(&ra.clocks, &ra.ceiling).replace('"', "\\\"");
        let accept = (0..ra.targets.len()).find_map(|j| ra.acceptance(i, j));
        let shape = match accept {
            Some(Acceptance::Exact(_)) => ", shape=doublecircle",
            Some(Acceptance::Frac) => ", shape=doubleoctagon",
            None => "",
        };
        let _ = writeln!(out, "  r{i} [label=\"{label}\"{shape}];");
    }
    let _ = writeln!(out, "  start [shape=point];\n  start -> r{};", RegionAutomaton::INITIAL);
    for (s, letter, t) in ra.transitions() {
        let label = match letter {
            Letter::Tick => " [label=\"tick\"]",
            Letter::Epsilon => "",
        };
        let _ = writeln!(out, "  r{s} -> r{t}{label};");
    }
    out.push_str("}\n");
    out
}
