use std::collections::BTreeSet;

use super::lexer::{tokenize, Tok, Token};
use super::SourceSpan;
use crate::error::{Error, Result};
use crate::model::{
    validate, Atom, ClockId, CmpOp, Edge, Guard, LinExpr, Location, LocationId, Rational,
    TimedSystem,
};

/// Parses a `.ta` model. `file` is only used in error spans.
pub fn parse_model_named(text: &str, file: &str) -> Result<TimedSystem> {
    let tokens = tokenize(text, file)?;
    let mut p = Parser { tokens, pos: 0 };
    let sys = p.system()?;
    let diags = validate(&sys);
    if diags.is_empty() {
        Ok(sys)
    } else {
        Err(Error::Invalid(diags))
    }
}

pub fn parse_model(text: &str) -> Result<TimedSystem> {
    parse_model_named(text, "<input>")
}

struct PendingEdge {
    source: (String, SourceSpan),
    target: (String, SourceSpan),
    guard: Guard,
    resets: BTreeSet<ClockId>,
    action: Option<String>,
}

#[derive(Default)]
struct Flags {
    init: Vec<(usize, SourceSpan)>,
    private: Vec<(usize, SourceSpan)>,
    final_: Vec<(usize, SourceSpan)>,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

fn syntax<T>(span: &SourceSpan, message: impl Into<String>) -> Result<T> {
    Err(Error::Syntax { span: span.clone(), message: message.into() })
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Token> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            let t = self.peek();
            syntax(&t.span, format!("expected {}, found {}", tok.describe(), t.tok.describe()))
        }
    }

    fn ident(&mut self) -> Result<(String, SourceSpan)> {
        let t = self.bump();
        match t.tok {
            Tok::Ident(s) => Ok((s, t.span)),
            other => syntax(&t.span, format!("expected a name, found {}", other.describe())),
        }
    }

    fn keyword_is(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn idlist(&mut self) -> Result<Vec<(String, SourceSpan)>> {
        let mut out = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn system(&mut self) -> Result<TimedSystem> {
        let head = self.ident()?;
        if head.0 != "ta" {
            return syntax(&head.1, "a model starts with `ta NAME;`");
        }
        let (name, _) = self.ident()?;
        self.expect(Tok::Semi)?;

        let mut clocks: Vec<String> = Vec::new();
        let mut params: Vec<String> = Vec::new();
        let mut locations: Vec<Location> = Vec::new();
        let mut loc_spans: Vec<SourceSpan> = Vec::new();
        let mut flags = Flags::default();
        let mut pending = Vec::new();

        loop {
            let t = self.peek().clone();
            let kw = match &t.tok {
                Tok::Eof => break,
                Tok::Ident(s) => s.clone(),
                other => return syntax(&t.span, format!("expected a declaration, found {}", other.describe())),
            };
            self.bump();
            match kw.as_str() {
                "clock" | "param" => {
                    let names = self.idlist()?;
                    self.expect(Tok::Semi)?;
                    let list = if kw == "clock" { &mut clocks } else { &mut params };
                    for (n, span) in names {
                        if clocks_or_params_contains(&n, list) {
                            return syntax(&span, format!("{kw} `{n}` declared twice"));
                        }
                        list.push(n);
                    }
                }
                "loc" => {
                    let (lname, span) = self.ident()?;
                    if locations.iter().any(|l| l.name == lname) {
                        return syntax(&span, format!("location `{lname}` declared twice"));
                    }
                    let idx = locations.len();
                    let mut invariant = Guard::top();
                    loop {
                        if self.keyword_is("init") {
                            flags.init.push((idx, self.bump().span));
                        } else if self.keyword_is("private") {
                            flags.private.push((idx, self.bump().span));
                        } else if self.keyword_is("final") {
                            flags.final_.push((idx, self.bump().span));
                        } else {
                            break;
                        }
                    }
                    if self.keyword_is("invariant") {
                        self.bump();
                        invariant = self.guard(&clocks, &params)?;
                    }
                    self.expect(Tok::Semi)?;
                    locations.push(Location::new(lname).with_invariant(invariant));
                    loc_spans.push(span);
                }
                "edge" => {
                    let source = self.ident()?;
                    self.expect(Tok::Arrow)?;
                    let target = self.ident()?;
                    let mut guard = Guard::top();
                    let mut resets = BTreeSet::new();
                    let mut action = None;
                    if self.keyword_is("when") {
                        self.bump();
                        guard = self.guard(&clocks, &params)?;
                    }
                    if self.keyword_is("do") {
                        self.bump();
                        self.expect(Tok::LBrace)?;
                        if !self.eat(&Tok::RBrace) {
                            for (c, span) in self.idlist()? {
                                match clocks.iter().position(|k| *k == c) {
                                    Some(i) => {
                                        resets.insert(ClockId::from(i));
                                    }
                                    None => return syntax(&span, format!("`{c}` is not a declared clock")),
                                }
                            }
                            self.expect(Tok::RBrace)?;
                        }
                    }
                    if self.keyword_is("sync") {
                        self.bump();
                        action = Some(self.ident()?.0);
                    }
                    self.expect(Tok::Semi)?;
                    pending.push(PendingEdge { source, target, guard, resets, action });
                }
                _ => return syntax(&t.span, format!("unknown declaration `{kw}`")),
            }
        }

        let eof = self.peek().span.clone();
        let designated = |list: &[(usize, SourceSpan)], what: &str| -> Result<LocationId> {
            match list {
                [(i, _)] => Ok(LocationId::from(*i)),
                [] => syntax(&eof, format!("{what} location missing")),
                [_, (_, span), ..] => syntax(span, format!("more than one {what} location")),
            }
        };
        let init = designated(&flags.init, "init")?;
        let private = designated(&flags.private, "private")?;
        let final_loc = designated(&flags.final_, "final")?;

        let lookup = |(n, span): &(String, SourceSpan)| -> Result<LocationId> {
            locations
                .iter()
                .position(|l| &l.name == n)
                .map(LocationId::from)
                .ok_or_else(|| Error::Syntax {
                    span: span.clone(),
                    message: format!("`{n}` is not a declared location"),
                })
        };
        let mut edges = Vec::with_capacity(pending.len());
        for pe in &pending {
            edges.push(Edge {
                source: lookup(&pe.source)?,
                guard: pe.guard.clone(),
                action: pe.action.clone(),
                resets: pe.resets.clone(),
                target: lookup(&pe.target)?,
            });
        }

        Ok(TimedSystem { name, clocks, params, locations, edges, init, private, final_loc })
    }

    fn guard(&mut self, clocks: &[String], params: &[String]) -> Result<Guard> {
        let mut atoms = vec![self.atom(clocks, params)?];
        while self.eat(&Tok::AndAnd) {
            atoms.push(self.atom(clocks, params)?);
        }
        Ok(Guard::from_atoms(atoms))
    }

    fn atom(&mut self, clocks: &[String], params: &[String]) -> Result<Atom> {
        let (c, span) = self.ident()?;
        let clock = match clocks.iter().position(|k| *k == c) {
            Some(i) => ClockId::from(i),
            None => return syntax(&span, format!("`{c}` is not a declared clock")),
        };
        let t = self.bump();
        let op = match t.tok {
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::EqEq => CmpOp::Eq,
            Tok::Ge => CmpOp::Ge,
            Tok::Gt => CmpOp::Gt,
            other => return syntax(&t.span, format!("expected a comparison, found {}", other.describe())),
        };
        let rhs = self.linexpr(params)?;
        Ok(Atom::new(clock, op, rhs))
    }

    fn linexpr(&mut self, params: &[String]) -> Result<LinExpr> {
        let mut e = LinExpr::default();
        let mut sign = if self.eat(&Tok::Minus) { -1 } else { 1 };
        loop {
            self.term(params, sign, &mut e)?;
            if self.eat(&Tok::Plus) {
                sign = 1;
            } else if self.eat(&Tok::Minus) {
                sign = -1;
            } else {
                break;
            }
        }
        Ok(e.normalized())
    }

    fn term(&mut self, params: &[String], sign: i64, e: &mut LinExpr) -> Result<()> {
        let sign = Rational::from_integer(sign);
        if let Tok::Number(_) = self.peek().tok {
            let value = self.rational()?;
            if self.eat(&Tok::Star) {
                let p = self.param(params)?;
                e.add_term(p, sign * value);
            } else {
                e.constant += sign * value;
            }
            Ok(())
        } else {
            let p = self.param(params)?;
            e.add_term(p, sign);
            Ok(())
        }
    }

    fn param(&mut self, params: &[String]) -> Result<crate::model::ParamId> {
        let (n, span) = self.ident()?;
        match params.iter().position(|k| *k == n) {
            Some(i) => Ok(crate::model::ParamId::from(i)),
            None => syntax(&span, format!("`{n}` is not a declared parameter")),
        }
    }

    fn rational(&mut self) -> Result<Rational> {
        let t = self.bump();
        let Tok::Number(text) = &t.tok else {
            return syntax(&t.span, format!("expected a number, found {}", t.tok.describe()));
        };
        let mut value = parse_decimal(text).ok_or_else(|| Error::Syntax {
            span: t.span.clone(),
            message: format!("number `{text}` out of range"),
        })?;
        if self.peek().tok == Tok::Slash {
            if text.contains('.') {
                return syntax(&t.span, "a fraction numerator must be an integer");
            }
            self.bump();
            let d = self.bump();
            let den = match &d.tok {
                Tok::Number(s) if !s.contains('.') => s.parse::<i64>().ok(),
                _ => None,
            };
            match den {
                Some(den) if den > 0 => value /= Rational::from_integer(den),
                _ => return syntax(&d.span, "expected a positive integer denominator"),
            }
        }
        Ok(value)
    }
}

fn clocks_or_params_contains(n: &str, list: &[String]) -> bool {
    list.iter().any(|k| k == n)
}

/// Exact value of `123` or `12.75`.
fn parse_decimal(text: &str) -> Option<Rational> {
    match text.split_once('.') {
        None => text.parse::<i64>().ok().map(Rational::from_integer),
        Some((int, frac)) => {
            let scale = 10i64.checked_pow(frac.len() as u32)?;
            let whole = int.parse::<i64>().ok()?;
            let part = frac.parse::<i64>().ok()?;
            Some(Rational::new(whole.checked_mul(scale)?.checked_add(part)?, scale))
        }
    }
}

/// Parses `3`, `-3`, `3/2` or `2.5` exactly.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    match text.strip_prefix('-') {
        Some(rest) => parse_unsigned(rest).map(|r| -r),
        None => parse_unsigned(text),
    }
}

fn parse_unsigned(text: &str) -> Option<Rational> {
    match text.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            (d > 0 && n >= 0).then(|| Rational::new(n, d))
        }
        None if text.bytes().all(|b| b.is_ascii_digit() || b == b'.') => parse_decimal(text),
        None => None,
    }
}
