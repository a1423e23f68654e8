//! Clocks, parameters, guards and (parametric) timed automata.
//!
//! All constants are exact rationals. A [`TimedSystem`] carries designated
//! initial, private and final locations; the analyses in this crate work on
//! parameter-free systems whose constants have been brought to integers with
//! [`scale`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl From<usize> for $name {
            fn from(i: usize) -> Self {
                $name(i as u32)
            }
        }
    };
}

id_type!(
    /// Dense index into [`TimedSystem::clocks`].
    ClockId
);
id_type!(
    /// Dense index into [`TimedSystem::params`].
    ParamId
);
id_type!(
    /// Dense index into [`TimedSystem::locations`].
    LocationId
);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub const ALL: [CmpOp; 5] = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    pub fn holds<T: PartialOrd>(self, lhs: T, rhs: T) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Gt => lhs > rhs,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `Σ coeff·param + constant`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct LinExpr {
    pub coeffs: BTreeMap<ParamId, Rational>,
    pub constant: Rational,
}

impl LinExpr {
    pub fn constant(c: Rational) -> Self {
        LinExpr { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn int(c: i64) -> Self {
        Self::constant(Rational::from_integer(c))
    }

    pub fn param(p: ParamId) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(p, Rational::from_integer(1));
        LinExpr { coeffs, constant: Rational::from_integer(0) }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.values().all(|c| *c == Rational::from_integer(0))
    }

    /// Drops zero coefficients.
    pub fn normalized(mut self) -> Self {
        self.coeffs.retain(|_, c| *c != Rational::from_integer(0));
        self
    }

    pub fn add_term(&mut self, p: ParamId, coeff: Rational) {
        let e = self.coeffs.entry(p).or_insert_with(|| Rational::from_integer(0));
        *e += coeff;
        if *e == Rational::from_integer(0) {
            self.coeffs.remove(&p);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub clock: ClockId,
    pub op: CmpOp,
    pub rhs: LinExpr,
}

impl Atom {
    pub fn new(clock: ClockId, op: CmpOp, rhs: LinExpr) -> Self {
        Atom { clock, op, rhs }
    }

    pub fn int(clock: ClockId, op: CmpOp, c: i64) -> Self {
        Atom::new(clock, op, LinExpr::int(c))
    }

    pub fn rat(clock: ClockId, op: CmpOp, c: Rational) -> Self {
        Atom::new(clock, op, LinExpr::constant(c))
    }
}

/// Conjunction of atoms; the empty conjunction is `true`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Guard {
    pub atoms: Vec<Atom>,
}

impl Guard {
    pub fn top() -> Self {
        Guard::default()
    }

    pub fn is_top(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Self {
        Guard { atoms }
    }

    pub fn and(mut self, atom: Atom) -> Self {
        self.atoms.push(atom);
        self
    }

    pub fn conj(mut self, other: &Guard) -> Self {
        self.atoms.extend(other.atoms.iter().cloned());
        self
    }

    /// Evaluates a parameter-free guard on a clock valuation.
    pub fn holds(&self, valuation: &[Rational]) -> bool {
        self.atoms
            .iter()
            .all(|a| a.op.holds(valuation[a.clock.index()], a.rhs.constant))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: LocationId,
    pub guard: Guard,
    pub action: Option<String>,
    pub resets: BTreeSet<ClockId>,
    pub target: LocationId,
}

impl Edge {
    pub fn new(source: LocationId, target: LocationId) -> Self {
        Edge {
            source,
            guard: Guard::top(),
            action: None,
            resets: BTreeSet::new(),
            target,
        }
    }

    pub fn with_guard(mut self, guard: Guard) -> Self {
        self.guard = guard;
        self
    }

    pub fn with_resets(mut self, resets: impl IntoIterator<Item = ClockId>) -> Self {
        self.resets.extend(resets);
        self
    }

    pub fn with_action(mut self, action: impl Into<String>) -> Self {
        self.action = Some(action.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Location {
    pub name: String,
    pub invariant: Guard,
}

impl Location {
    pub fn new(name: impl Into<String>) -> Self {
        Location { name: name.into(), invariant: Guard::top() }
    }

    pub fn with_invariant(mut self, invariant: Guard) -> Self {
        self.invariant = invariant;
        self
    }
}

/// A (parametric) timed automaton with designated initial, private and final
/// locations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TimedSystem {
    pub name: String,
    pub clocks: Vec<String>,
    pub params: Vec<String>,
    pub locations: Vec<Location>,
    pub edges: Vec<Edge>,
    pub init: LocationId,
    pub private: LocationId,
    pub final_loc: LocationId,
}

impl TimedSystem {
    pub fn location(&self, id: LocationId) -> &Location {
        &self.locations[id.index()]
    }

    pub fn location_name(&self, id: LocationId) -> &str {
        &self.locations[id.index()].name
    }

    pub fn clock_name(&self, id: ClockId) -> &str {
        &self.clocks[id.index()]
    }

    pub fn clock_id(&self, name: &str) -> Option<ClockId> {
        self.clocks.iter().position(|c| c == name).map(ClockId::from)
    }

    pub fn param_id(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|c| c == name).map(ParamId::from)
    }

    pub fn location_id(&self, name: &str) -> Option<LocationId> {
        self.locations.iter().position(|l| l.name == name).map(LocationId::from)
    }

    pub fn is_parameter_free(&self) -> bool {
        self.params.is_empty()
    }

    /// Every action label used on some edge.
    pub fn actions(&self) -> BTreeSet<&str> {
        self.edges.iter().filter_map(|e| e.action.as_deref()).collect()
    }

    pub fn outgoing(&self, loc: LocationId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.source == loc)
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.locations
            .iter()
            .flat_map(|l| l.invariant.atoms.iter())
            .chain(self.edges.iter().flat_map(|e| e.guard.atoms.iter()))
    }

    fn atoms_mut(&mut self) -> impl Iterator<Item = &mut Atom> {
        self.locations
            .iter_mut()
            .flat_map(|l| l.invariant.atoms.iter_mut())
            .chain(self.edges.iter_mut().flat_map(|e| e.guard.atoms.iter_mut()))
    }

    /// Least common multiple of the denominators of all constants: a stored
    /// constant `c` equals the integer `c·denom()` divided by `denom()`.
    pub fn denom(&self) -> i64 {
        self.atoms()
            .fold(1i64, |acc, a| acc.lcm(a.rhs.constant.denom()))
    }

    /// The integer numerator of an atom's constant over [`Self::denom`].
    pub fn scaled_constant(&self, atom: &Atom) -> i64 {
        (atom.rhs.constant * self.denom()).to_integer()
    }

    pub fn add_clock(&mut self, name: &str) -> ClockId {
        let name = fresh_name(name, &self.clocks);
        self.clocks.push(name);
        ClockId::from(self.clocks.len() - 1)
    }

    pub fn add_location(&mut self, loc: Location) -> LocationId {
        let names: Vec<String> = self.locations.iter().map(|l| l.name.clone()).collect();
        let name = fresh_name(&loc.name, &names);
        self.locations.push(Location { name, ..loc });
        LocationId::from(self.locations.len() - 1)
    }
}

/// `base` if unused, else `base_1`, `base_2`, ...
pub(crate) fn fresh_name(base: &str, taken: &[String]) -> String {
    if !taken.iter().any(|t| t == base) {
        return base.to_string();
    }
    (1..)
        .map(|i| format!("{base}_{i}"))
        .find(|n| !taken.iter().any(|t| t == n))
        .expect("unbounded suffix search")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub entity: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

/// Checks the structural invariants of a system. An empty list means valid.
pub fn validate(sys: &TimedSystem) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut diag = |entity: String, message: &str| {
        out.push(Diagnostic { entity, message: message.to_string() })
    };

    for (kind, names) in [
        ("clock", sys.clocks.iter().collect::<Vec<_>>()),
        ("param", sys.params.iter().collect()),
        ("location", sys.locations.iter().map(|l| &l.name).collect()),
    ] {
        let mut seen = BTreeSet::new();
        for n in names {
            if !seen.insert(n) {
                diag(format!("{kind} {n}"), "duplicate name");
            }
        }
    }

    let nloc = sys.locations.len();
    for (what, id) in [("init", sys.init), ("private", sys.private), ("final", sys.final_loc)] {
        if id.index() >= nloc {
            diag(what.to_string(), "designated location does not exist");
        }
    }
    if sys.init == sys.final_loc {
        diag("system".to_string(), "init equals final");
    }
    if sys.private == sys.final_loc {
        diag("system".to_string(), "private equals final");
    }

    let check_guard = |guard: &Guard, entity: &str, out: &mut Vec<(String, &'static str)>| {
        for a in &guard.atoms {
            if a.clock.index() >= sys.clocks.len() {
                out.push((entity.to_string(), "guard mentions an undeclared clock"));
            }
            if a.rhs.coeffs.keys().any(|p| p.index() >= sys.params.len()) {
                out.push((entity.to_string(), "guard mentions an undeclared parameter"));
            }
        }
    };
    let mut guard_diags = Vec::new();
    for l in &sys.locations {
        check_guard(&l.invariant, &format!("invariant of {}", l.name), &mut guard_diags);
    }
    for (i, e) in sys.edges.iter().enumerate() {
        let entity = edge_label(sys, i);
        if e.source.index() >= nloc || e.target.index() >= nloc {
            guard_diags.push((entity.clone(), "edge endpoint does not exist"));
        }
        if e.resets.iter().any(|c| c.index() >= sys.clocks.len()) {
            guard_diags.push((entity.clone(), "edge resets an undeclared clock"));
        }
        check_guard(&e.guard, &entity, &mut guard_diags);
    }
    for (entity, message) in guard_diags {
        diag(entity, message);
    }
    out
}

fn edge_label(sys: &TimedSystem, i: usize) -> String {
    let e = &sys.edges[i];
    let name = |l: LocationId| {
        sys.locations
            .get(l.index())
            .map(|l| l.name.as_str())
            .unwrap_or("?")
    };
    format!("edge #{i} {} -> {}", name(e.source), name(e.target))
}

/// Total assignment of non-negative rationals to parameters.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ParamValuation {
    values: BTreeMap<ParamId, Rational>,
}

impl ParamValuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, p: ParamId, v: Rational) -> Result<()> {
        if v < Rational::from_integer(0) {
            return Err(Error::NegativeParam(format!("#{}", p.0)));
        }
        self.values.insert(p, v);
        Ok(())
    }

    pub fn get(&self, p: ParamId) -> Option<Rational> {
        self.values.get(&p).copied()
    }

    /// Builds a valuation from `name = value` bindings against `sys.params`.
    pub fn from_bindings<'a>(
        sys: &TimedSystem,
        bindings: impl IntoIterator<Item = (&'a str, Rational)>,
    ) -> Result<Self> {
        let mut v = ParamValuation::new();
        for (name, value) in bindings {
            let p = sys
                .param_id(name)
                .ok_or_else(|| Error::UnknownParam(name.to_string()))?;
            if value < Rational::from_integer(0) {
                return Err(Error::NegativeParam(name.to_string()));
            }
            v.values.insert(p, value);
        }
        Ok(v)
    }
}

/// Substitutes every parameter by its value. The result has no parameters.
pub fn instantiate(sys: &TimedSystem, v: &ParamValuation) -> Result<TimedSystem> {
    for (i, name) in sys.params.iter().enumerate() {
        if v.get(ParamId::from(i)).is_none() {
            return Err(Error::MissingParam(name.clone()));
        }
    }
    let mut out = sys.clone();
    out.params.clear();
    for atom in out.atoms_mut() {
        let mut c = atom.rhs.constant;
        for (p, coeff) in &atom.rhs.coeffs {
            c += *coeff * v.get(*p).expect("checked above");
        }
        atom.rhs = LinExpr::constant(c);
    }
    Ok(out)
}

/// Multiplies every constant by `q`; every run duration is multiplied by `q`.
pub fn scale(sys: &TimedSystem, q: u64) -> Result<TimedSystem> {
    if q == 0 {
        return Err(Error::ZeroScale);
    }
    if !sys.is_parameter_free() {
        return Err(Error::NotParameterFree("scale"));
    }
    let q = Rational::from_integer(q as i64);
    let mut out = sys.clone();
    for atom in out.atoms_mut() {
        atom.rhs.constant *= q;
    }
    Ok(out)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum LuKind {
    Lower,
    Upper,
    Unused,
    Violating,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LuClassification {
    pub kinds: Vec<LuKind>,
}

impl LuClassification {
    pub fn is_lu(&self) -> bool {
        !self.kinds.contains(&LuKind::Violating)
    }

    pub fn kind(&self, p: ParamId) -> LuKind {
        self.kinds[p.index()]
    }
}

/// Tags each parameter as a lower-bound, upper-bound, unused or violating
/// parameter, from the comparator and coefficient sign of every occurrence.
pub fn lu_classify(sys: &TimedSystem) -> LuClassification {
    let zero = Rational::from_integer(0);
    // (may be lower, may be upper, used)
    let mut flags = vec![(true, true, false); sys.params.len()];
    for atom in sys.atoms() {
        for (p, &alpha) in &atom.rhs.coeffs {
            if alpha == zero {
                continue;
            }
            let f = &mut flags[p.index()];
            f.2 = true;
            let (upper_ok, lower_ok) = match atom.op {
                CmpOp::Lt | CmpOp::Le => (alpha > zero, alpha < zero),
                CmpOp::Gt | CmpOp::Ge => (alpha < zero, alpha > zero),
                CmpOp::Eq => (false, false),
            };
            f.0 &= lower_ok;
            f.1 &= upper_ok;
        }
    }
    let kinds = flags
        .into_iter()
        .map(|(lower, upper, used)| match (used, lower, upper) {
            (false, _, _) => LuKind::Unused,
            (true, true, _) => LuKind::Lower,
            (true, false, true) => LuKind::Upper,
            (true, false, false) => LuKind::Violating,
        })
        .collect();
    LuClassification { kinds }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testsupport::fig1;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn bind(sys: &TimedSystem, p1: Rational, p2: Rational) -> ParamValuation {
        ParamValuation::from_bindings(sys, [("p1", p1), ("p2", p2)]).unwrap()
    }

    fn constants(sys: &TimedSystem) -> BTreeSet<i64> {
        sys.atoms().map(|a| sys.scaled_constant(a)).collect()
    }

    #[test]
    fn fig1_is_valid() {
        assert_eq!(validate(&fig1()), vec![]);
    }

    #[test]
    fn init_equal_final_is_reported() {
        let mut sys = fig1();
        sys.final_loc = sys.init;
        let d = validate(&sys);
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("init equals final"));
    }

    #[test]
    fn undeclared_reset_is_reported() {
        let mut sys = fig1();
        sys.edges[1].resets.insert(ClockId(7));
        let d = validate(&sys);
        assert_eq!(d.len(), 1);
        assert!(d[0].entity.contains("edge #1"), "{d:?}");
        assert!(d[0].message.contains("undeclared clock"));
    }

    #[test]
    fn instantiate_integer_valuation() {
        let sys = fig1();
        let ta = instantiate(&sys, &bind(&sys, r(1, 1), r(2, 1))).unwrap();
        assert!(ta.params.is_empty());
        assert_eq!(ta.denom(), 1);
        let priv_edge = ta.edges.iter().find(|e| e.target == ta.private).unwrap();
        assert_eq!(priv_edge.guard.atoms, vec![Atom::int(ClockId(0), CmpOp::Ge, 1)]);
        assert_eq!(
            ta.location(ta.private).invariant.atoms,
            vec![Atom::int(ClockId(0), CmpOp::Le, 2)]
        );
        assert_eq!(validate(&ta), vec![]);
    }

    #[test]
    fn instantiate_half_valuation_uses_denominator_two() {
        let sys = fig1();
        let ta = instantiate(&sys, &bind(&sys, r(1, 1), r(5, 2))).unwrap();
        assert_eq!(ta.denom(), 2);
        assert_eq!(constants(&ta), BTreeSet::from([2, 5, 6]));
    }

    #[test]
    fn instantiate_missing_param() {
        let sys = fig1();
        let v = ParamValuation::from_bindings(&sys, [("p1", r(1, 1))]).unwrap();
        match instantiate(&sys, &v) {
            Err(Error::MissingParam(p)) => assert_eq!(p, "p2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn instantiate_parameter_free_is_identity() {
        let sys = fig1();
        let ta = instantiate(&sys, &bind(&sys, r(1, 1), r(2, 1))).unwrap();
        assert_eq!(instantiate(&ta, &ParamValuation::new()).unwrap(), ta);
    }

    #[test]
    fn scale_rules() {
        let sys = fig1();
        let ta = instantiate(&sys, &bind(&sys, r(1, 1), r(2, 1))).unwrap();
        assert_eq!(scale(&ta, 1).unwrap(), ta);
        assert_eq!(constants(&scale(&ta, 2).unwrap()), BTreeSet::from([2, 4, 6]));
        assert!(matches!(scale(&ta, 0), Err(Error::ZeroScale)));
        assert!(matches!(scale(&sys, 2), Err(Error::NotParameterFree(_))));

        let half = instantiate(&sys, &bind(&sys, r(1, 1), r(5, 2))).unwrap();
        let doubled = scale(&half, 2).unwrap();
        assert_eq!(doubled.denom(), 1);
        assert_eq!(constants(&doubled), BTreeSet::from([2, 5, 6]));
    }

    #[test]
    fn lu_classification() {
        let sys = fig1();
        let lu = lu_classify(&sys);
        assert_eq!(lu.kinds, vec![LuKind::Lower, LuKind::Upper]);
        assert!(lu.is_lu());

        let mut bad = sys.clone();
        let p1 = bad.param_id("p1").unwrap();
        bad.locations[0]
            .invariant
            .atoms
            .push(Atom::new(ClockId(0), CmpOp::Le, LinExpr::param(p1)));
        let lu = lu_classify(&bad);
        assert_eq!(lu.kind(p1), LuKind::Violating);
        assert!(!lu.is_lu());

        let ta = instantiate(&sys, &bind(&sys, r(1, 1), r(2, 1))).unwrap();
        assert!(lu_classify(&ta).kinds.is_empty());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_valuation() -> impl Strategy<Value = (Rational, Rational)> {
            ((0i64..20, 1i64..5), (0i64..20, 1i64..5))
                .prop_map(|((a, b), (c, d))| (Rational::new(a, b), Rational::new(c, d)))
        }

        proptest! {
            #[test]
            fn instantiation_is_valid_and_canonical((p1, p2) in arb_valuation()) {
                let sys = fig1();
                let ta = instantiate(&sys, &bind(&sys, p1, p2)).unwrap();
                prop_assert!(ta.params.is_empty());
                prop_assert!(validate(&ta).is_empty());
                for a in ta.atoms() {
                    prop_assert!(a.rhs.is_constant());
                    let c = a.rhs.constant;
                    prop_assert!(*c.denom() > 0);
                    prop_assert_eq!(c.numer().gcd(c.denom()), 1);
                }
            }

            #[test]
            fn scaling_composes((p1, p2) in arb_valuation(), a in 1u64..6, b in 1u64..6) {
                let sys = fig1();
                let ta = instantiate(&sys, &bind(&sys, p1, p2)).unwrap();
                let twice = scale(&scale(&ta, a).unwrap(), b).unwrap();
                prop_assert_eq!(twice, scale(&ta, a * b).unwrap());
            }
        }
    }
}
