use std::fmt::Write;

use crate::model::{Guard, LinExpr, Rational, TimedSystem};

pub fn format_rational(r: Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn format_linexpr(sys: &TimedSystem, e: &LinExpr) -> String {
    let zero = Rational::from_integer(0);
    let one = Rational::from_integer(1);
    let mut terms: Vec<(bool, String)> = Vec::new();
    for (p, &c) in &e.coeffs {
        if c == zero {
            continue;
        }
        let name = &sys.params[p.index()];
        let mag = if c < zero { -c } else { c };
        let body = if mag == one { name.clone() } else { format!("{}*{name}", format_rational(mag)) };
        terms.push((c < zero, body));
    }
    if e.constant != zero || terms.is_empty() {
        let c = e.constant;
        terms.push((c < zero, format_rational(if c < zero { -c } else { c })));
    }
    let mut out = String::new();
    for (i, (negative, body)) in terms.into_iter().enumerate() {
        out.push_str(match (i == 0, negative) {
            (true, false) => "",
            (true, true) => "-",
            (false, false) => " + ",
            (false, true) => " - ",
        });
        out.push_str(&body);
    }
    out
}

fn format_guard(sys: &TimedSystem, g: &Guard) -> String {
    g.atoms
        .iter()
        .map(|a| format!("{} {} {}", sys.clocks[a.clock.index()], a.op, format_linexpr(sys, &a.rhs)))
        .collect::<Vec<_>>()
        .join(" && ")
}

/// Renders a system in the `.ta` format; parsing the output yields a
/// structurally equal system.
pub fn emit_model(sys: &TimedSystem) -> String {
    let mut out = String::new();
    writeln!(out, "ta {};", sys.name).unwrap();
    if !sys.clocks.is_empty() {
        writeln!(out, "clock {};", sys.clocks.join(", ")).unwrap();
    }
    if !sys.params.is_empty() {
        writeln!(out, "param {};", sys.params.join(", ")).unwrap();
    }
    for (i, loc) in sys.locations.iter().enumerate() {
        write!(out, "loc {}", loc.name).unwrap();
        if sys.init.index() == i {
            out.push_str(" init");
        }
        if sys.private.index() == i {
            out.push_str(" private");
        }
        if sys.final_loc.index() == i {
            out.push_str(" final");
        }
        if !loc.invariant.is_top() {
            write!(out, " invariant {}", format_guard(sys, &loc.invariant)).unwrap();
        }
        out.push_str(";\n");
    }
    for e in &sys.edges {
        write!(out, "edge {} -> {}", sys.location_name(e.source), sys.location_name(e.target)).unwrap();
        if !e.guard.is_top() {
            write!(out, " when {}", format_guard(sys, &e.guard)).unwrap();
        }
        if !e.resets.is_empty() {
            let names: Vec<&str> = e.resets.iter().map(|c| sys.clock_name(*c)).collect();
            write!(out, " do {{ {} }}", names.join(", ")).unwrap();
        }
        if let Some(a) = &e.action {
            write!(out, " sync {a}").unwrap();
        }
        out.push_str(";\n");
    }
    out
}
