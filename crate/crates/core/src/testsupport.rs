//! Reference models and a seeded random generator of small timed automata,
//! shared by unit, property and acceptance tests.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    instantiate, Atom, ClockId, CmpOp, Edge, Guard, LinExpr, Location, LocationId, ParamValuation,
    Rational, TimedSystem,
};

/// The running three-location example: `l0 --x>=p1--> lpriv --> lf`, plus a
/// direct `l0 --> lf`, with invariants `x <= 3` on `l0` and `x <= p2` on
/// `lpriv`.
pub fn fig1() -> TimedSystem {
    let x = ClockId(0);
    let p1 = crate::model::ParamId(0);
    let p2 = crate::model::ParamId(1);
    TimedSystem {
        name: "fig1".into(),
        clocks: vec!["x".into()],
        params: vec!["p1".into(), "p2".into()],
        locations: vec![
            Location::new("l0").with_invariant(Guard::top().and(Atom::int(x, CmpOp::Le, 3))),
            Location::new("lpriv")
                .with_invariant(Guard::top().and(Atom::new(x, CmpOp::Le, LinExpr::param(p2)))),
            Location::new("lf"),
        ],
        edges: vec![
            Edge::new(LocationId(0), LocationId(1))
                .with_guard(Guard::top().and(Atom::new(x, CmpOp::Ge, LinExpr::param(p1)))),
            Edge::new(LocationId(0), LocationId(2)),
            Edge::new(LocationId(1), LocationId(2)),
        ],
        init: LocationId(0),
        private: LocationId(1),
        final_loc: LocationId(2),
    }
}

/// [`fig1`] with both parameters fixed.
pub fn fig1_at(p1: Rational, p2: Rational) -> TimedSystem {
    let pta = fig1();
    let v = ParamValuation::from_bindings(&pta, [("p1", p1), ("p2", p2)]).expect("fig1 has p1 and p2");
    instantiate(&pta, &v).expect("total valuation")
}

/// Text form of [`fig1`] in the `.ta` format.
pub const FIG1_TA: &str = "\
ta fig1;
clock x;
param p1, p2;
loc l0 init invariant x <= 3;
loc lpriv private invariant x <= p2;
loc lf final;
edge l0 -> lpriv when x >= p1;
edge l0 -> lf;
edge lpriv -> lf;
";

#[derive(Clone, Debug)]
pub struct GenSpec {
    pub max_locations: usize,
    pub max_clocks: usize,
    pub max_constant: i64,
    /// Probability of an extra edge between an ordered pair of locations.
    pub edge_density: f64,
    pub strict_prob: f64,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            max_locations: 4,
            max_clocks: 2,
            max_constant: 5,
            edge_density: 0.3,
            strict_prob: 0.35,
            seed: 0,
        }
    }
}

impl GenSpec {
    pub fn with_seed(seed: u64) -> Self {
        GenSpec { seed, ..GenSpec::default() }
    }
}

/// Draws a valid parameter-free system. Deterministic per seed; draws whose
/// final location is not reachable in the underlying graph are rejected and
/// redrawn from the same stream.
pub fn gen_ta(spec: &GenSpec) -> TimedSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    loop {
        let sys = draw(spec, &mut rng);
        if graph_reachable(&sys, sys.init, sys.final_loc) {
            return sys;
        }
    }
}

fn draw(spec: &GenSpec, rng: &mut ChaCha8Rng) -> TimedSystem {
    let nloc = rng.gen_range(2..=spec.max_locations.max(2));
    let nclk = rng.gen_range(1..=spec.max_clocks.max(1));
    let final_loc = LocationId::from(nloc - 1);
    let init = LocationId(0);
    let private = if nloc > 2 && rng.gen_bool(0.85) {
        LocationId::from(rng.gen_range(1..nloc - 1))
    } else {
        init
    };

    let locations = (0..nloc)
        .map(|i| {
            let mut inv = Guard::top();
            if i + 1 != nloc && rng.gen_bool(0.35) {
                let c = ClockId::from(rng.gen_range(0..nclk));
                let op = if rng.gen_bool(spec.strict_prob) { CmpOp::Lt } else { CmpOp::Le };
                let k = rng.gen_range(1..=spec.max_constant);
                inv = inv.and(Atom::int(c, op, k));
            }
            Location::new(format!("l{i}")).with_invariant(inv)
        })
        .collect();

    let mut edges = Vec::new();
    // A backbone towards the final location keeps most draws reachable.
    for i in 0..nloc - 1 {
        if rng.gen_bool(0.8) {
            edges.push(random_edge(spec, rng, nclk, i, i + 1));
        }
    }
    for s in 0..nloc - 1 {
        for t in 0..nloc {
            if rng.gen_bool(spec.edge_density) {
                edges.push(random_edge(spec, rng, nclk, s, t));
            }
        }
    }

    TimedSystem {
        name: format!("gen{}", spec.seed),
        clocks: (0..nclk).map(|i| format!("x{i}")).collect(),
        params: vec![],
        locations,
        edges,
        init,
        private,
        final_loc,
    }
}

fn random_edge(spec: &GenSpec, rng: &mut ChaCha8Rng, nclk: usize, s: usize, t: usize) -> Edge {
    let mut guard = Guard::top();
    for _ in 0..rng.gen_range(0..=2) {
        let c = ClockId::from(rng.gen_range(0..nclk));
        let op = if rng.gen_bool(spec.strict_prob) {
            if rng.gen_bool(0.5) { CmpOp::Lt } else { CmpOp::Gt }
        } else {
            [CmpOp::Le, CmpOp::Ge, CmpOp::Eq][rng.gen_range(0..3)]
        };
        let k = rng.gen_range(0..=spec.max_constant);
        guard = guard.and(Atom::int(c, op, k));
    }
    let resets: BTreeSet<ClockId> = (0..nclk)
        .filter(|_| rng.gen_bool(0.3))
        .map(ClockId::from)
        .collect();
    Edge::new(LocationId::from(s), LocationId::from(t))
        .with_guard(guard)
        .with_resets(resets)
}

/// Reachability in the location graph, ignoring clocks.
pub fn graph_reachable(sys: &TimedSystem, from: LocationId, to: LocationId) -> bool {
    let mut seen = vec![false; sys.locations.len()];
    let mut stack = vec![from];
    seen[from.index()] = true;
    while let Some(l) = stack.pop() {
        if l == to {
            return true;
        }
        for e in sys.outgoing(l) {
            if !seen[e.target.index()] {
                seen[e.target.index()] = true;
                stack.push(e.target);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    #[test]
    fn generation_is_deterministic() {
        let a = gen_ta(&GenSpec::with_seed(42));
        let b = gen_ta(&GenSpec::with_seed(42));
        assert_eq!(a, b);
    }

    #[test]
    fn one_location_spec_still_yields_two() {
        let spec = GenSpec { max_locations: 1, ..GenSpec::with_seed(3) };
        let sys = gen_ta(&spec);
        assert!(sys.locations.len() >= 2);
        assert!(validate(&sys).is_empty());
    }

    #[test]
    fn generated_systems_are_valid() {
        for seed in 0..300 {
            let sys = gen_ta(&GenSpec::with_seed(seed));
            assert_eq!(validate(&sys), vec![], "seed {seed}");
            assert!(sys.clocks.len() <= 2 && sys.locations.len() <= 4);
        }
    }
}
