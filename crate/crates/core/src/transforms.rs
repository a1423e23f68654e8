//! Automaton-to-automaton constructions: final absorption, the
//! secret/expired/public classification product, tick augmentation and the
//! two swap gadgets relating weak and full opacity.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{
    Atom, ClockId, CmpOp, Edge, Guard, LinExpr, Location, LocationId, Rational, TimedSystem,
};
use crate::regions::require_integer;

/// An expiration bound: a non-negative rational or `+inf`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoundValue {
    Finite(Rational),
    Infinite,
}

impl BoundValue {
    pub fn int(k: i64) -> Self {
        BoundValue::Finite(Rational::from_integer(k))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        BoundValue::Finite(Rational::new(n, d))
    }

    pub fn finite(self) -> Option<Rational> {
        match self {
            BoundValue::Finite(r) => Some(r),
            BoundValue::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == BoundValue::Infinite
    }

    /// Parses `3`, `3/2`, `2.5` or `inf`.
    pub fn parse(text: &str) -> Option<Self> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("inf") || t == "+inf" {
            return Some(BoundValue::Infinite);
        }
        let r = crate::modelfmt::parse_rational(t)?;
        (r >= Rational::from_integer(0)).then_some(BoundValue::Finite(r))
    }

    /// The bound in units `q` times smaller.
    pub fn scaled(self, q: i64) -> Self {
        match self {
            BoundValue::Finite(r) => BoundValue::Finite(r * q),
            BoundValue::Infinite => BoundValue::Infinite,
        }
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundValue::Finite(r) => f.write_str(&crate::modelfmt::format_rational(*r)),
            BoundValue::Infinite => f.write_str("inf"),
        }
    }
}

/// Removes every edge leaving the final location.
pub fn absorb_final(sys: &TimedSystem) -> TimedSystem {
    absorb_at(sys, sys.final_loc)
}

pub(crate) fn absorb_at(sys: &TimedSystem, loc: LocationId) -> TimedSystem {
    let mut out = sys.clone();
    out.edges.retain(|e| e.source != loc);
    out
}

fn check_bound_denominator(sys: &TimedSystem, delta: Rational) -> Result<()> {
    let denom = sys.denom();
    if denom % delta.denom() != 0 {
        return Err(Error::Denominator { denom, found: *delta.denom() });
    }
    Ok(())
}

/// Product of a system with a "private visited" flag and a lag clock reset
/// on every entrance of the private location. Arrivals at the final location
/// are split into three absorbing copies.
#[derive(Clone, Debug)]
pub struct ClassifiedSystem {
    pub product: TimedSystem,
    pub final_secret: LocationId,
    pub final_expired: LocationId,
    pub final_public: LocationId,
    pub lag_clock: ClockId,
}

impl ClassifiedSystem {
    pub fn finals(&self) -> [LocationId; 3] {
        [self.final_secret, self.final_expired, self.final_public]
    }

    /// Tick augmentation leaving the three finals without tick loops.
    pub fn with_tick(&self) -> Result<TickedSystem> {
        add_tick_except(&self.product, &self.finals())
    }
}

pub fn classify(sys: &TimedSystem, delta: BoundValue) -> Result<ClassifiedSystem> {
    if !sys.is_parameter_free() {
        return Err(Error::NotParameterFree("classify"));
    }
    if let BoundValue::Finite(d) = delta {
        check_bound_denominator(sys, d)?;
    }
    let base = absorb_final(sys);
    let mut product = TimedSystem {
        name: format!("{}_classified", sys.name),
        clocks: base.clocks.clone(),
        params: vec![],
        locations: vec![],
        edges: vec![],
        init: LocationId(0),
        private: LocationId(0),
        final_loc: LocationId(0),
    };
    let lag = product.add_clock("lag");

    // copies[l] = (unvisited copy, visited copy)
    let mut copies = vec![(LocationId(0), LocationId(0)); base.locations.len()];
    for (i, loc) in base.locations.iter().enumerate() {
        if LocationId::from(i) == base.final_loc {
            continue;
        }
        let n = product.add_location(Location::new(format!("{}__n", loc.name)).with_invariant(loc.invariant.clone()));
        let v = product.add_location(Location::new(format!("{}__v", loc.name)).with_invariant(loc.invariant.clone()));
        copies[i] = (n, v);
    }
    let fin = base.location(base.final_loc);
    let mk_final = |product: &mut TimedSystem, suffix: &str| {
        product.add_location(Location::new(format!("{}__{suffix}", fin.name)).with_invariant(fin.invariant.clone()))
    };
    let final_secret = mk_final(&mut product, "secret");
    let final_expired = mk_final(&mut product, "expired");
    let final_public = mk_final(&mut product, "public");

    let (init_n, init_v) = copies[base.init.index()];
    product.init = if base.init == base.private { init_v } else { init_n };
    product.private = copies[base.private.index()].1;
    product.final_loc = final_secret;

    for e in &base.edges {
        for visited in [false, true] {
            let (n, v) = copies[e.source.index()];
            let src = if visited { v } else { n };
            if e.target == base.final_loc {
                let mk = |target: LocationId, guard: Guard| Edge {
                    source: src,
                    guard,
                    action: e.action.clone(),
                    resets: e.resets.clone(),
                    target,
                };
                if visited {
                    match delta {
                        BoundValue::Finite(d) => {
                            product.edges.push(mk(final_secret, e.guard.clone().and(Atom::rat(lag, CmpOp::Le, d))));
                            product.edges.push(mk(final_expired, e.guard.clone().and(Atom::rat(lag, CmpOp::Gt, d))));
                        }
                        BoundValue::Infinite => {
                            product.edges.push(mk(final_secret, e.guard.clone().and(Atom::int(lag, CmpOp::Ge, 0))));
                        }
                    }
                } else {
                    product.edges.push(mk(final_public, e.guard.clone()));
                }
            } else {
                let entering_private = e.target == base.private;
                let (tn, tv) = copies[e.target.index()];
                let target = if visited || entering_private { tv } else { tn };
                let mut resets = e.resets.clone();
                if entering_private {
                    resets.insert(lag);
                }
                product.edges.push(Edge { source: src, guard: e.guard.clone(), action: e.action.clone(), resets, target });
            }
        }
    }

    Ok(ClassifiedSystem { product, final_secret, final_expired, final_public, lag_clock: lag })
}

/// A system extended with a clock that is reset exactly every time unit.
#[derive(Clone, Debug)]
pub struct TickedSystem {
    pub system: TimedSystem,
    pub tick: ClockId,
}

/// Adds a tick clock `t`: every invariant gets `t <= 1` and every location
/// a self-loop `t == 1, t := 0` labelled `tick`.
pub fn add_tick(sys: &TimedSystem) -> Result<TickedSystem> {
    add_tick_except(sys, &[])
}

/// As [`add_tick`], without self-loops on `skip`.
pub fn add_tick_except(sys: &TimedSystem, skip: &[LocationId]) -> Result<TickedSystem> {
    require_integer(sys, "tick augmentation")?;
    let mut out = sys.clone();
    let t = out.add_clock("tick");
    for (i, loc) in out.locations.iter_mut().enumerate() {
        loc.invariant.atoms.push(Atom::int(t, CmpOp::Le, 1));
        if !skip.contains(&LocationId::from(i)) {
            out.edges.push(
                Edge::new(LocationId::from(i), LocationId::from(i))
                    .with_guard(Guard::top().and(Atom::int(t, CmpOp::Eq, 1)))
                    .with_resets([t])
                    .with_action("tick"),
            );
        }
    }
    Ok(TickedSystem { system: out, tick: t })
}

#[derive(Copy, Clone, PartialEq, Eq)]
enum SwapKind {
    Forward,
    Reverse,
}

/// Builds the automaton in which runs that are secret at `delta` become
/// non-secret and conversely, every duration shifted by `delta + 1`. A system
/// is fully opaque at `delta` iff it and its swap are weakly opaque.
pub fn swap_transform(sys: &TimedSystem, delta: BoundValue) -> Result<TimedSystem> {
    swap(sys, delta, SwapKind::Forward)
}

/// Variant whose full opacity at `delta` coincides with weak opacity of `sys`.
pub fn swap_transform_reverse(sys: &TimedSystem, delta: BoundValue) -> Result<TimedSystem> {
    swap(sys, delta, SwapKind::Reverse)
}

fn swap(sys: &TimedSystem, delta: BoundValue, kind: SwapKind) -> Result<TimedSystem> {
    if !sys.is_parameter_free() {
        return Err(Error::NotParameterFree("swap transform"));
    }
    let delta = delta.finite().ok_or(Error::InfiniteBound("swap transform"))?;
    let wait = delta + Rational::from_integer(1);

    let base = absorb_final(sys);
    let mut out = base.clone();
    out.name = format!("{}_{}", sys.name, if kind == SwapKind::Forward { "swap" } else { "swaprev" });
    let y = out.add_clock("y");
    let z = out.add_clock("z");
    let z0 = || Atom::int(z, CmpOp::Eq, 0);

    for e in out.edges.iter_mut() {
        e.resets.insert(z);
        if e.target == base.private {
            e.resets.insert(y);
        }
    }
    let old_final = base.final_loc;
    out.locations[old_final.index()].invariant.atoms.push(z0());

    let new_init = out.add_location(
        Location::new("wait").with_invariant(Guard::top().and(Atom::rat(y, CmpOp::Le, wait))),
    );
    let new_priv = out.add_location(Location::new("priv_swap").with_invariant(Guard::top().and(z0())));
    let new_final = out.add_location(Location::new("final_swap").with_invariant(Guard::top().and(z0())));

    let mut entry_resets: Vec<ClockId> = (0..base.clocks.len()).map(ClockId::from).collect();
    entry_resets.push(z);
    if base.init == base.private {
        // the original run is inside the private location from time 0
        entry_resets.push(y);
    }
    out.edges.push(
        Edge::new(new_init, base.init)
            .with_guard(Guard::top().and(Atom::rat(y, CmpOp::Eq, wait)))
            .with_resets(entry_resets)
            .with_action("sharp"),
    );

    let exit = |target: LocationId, recent: bool| {
        let cmp = if recent { CmpOp::Le } else { CmpOp::Gt };
        Edge::new(old_final, target)
            .with_guard(Guard::top().and(z0()).and(Atom::new(y, cmp, LinExpr::constant(delta))))
            .with_action("sharp")
    };
    match kind {
        SwapKind::Forward => {
            out.edges.push(exit(new_priv, false));
            out.edges.push(exit(new_final, true));
        }
        SwapKind::Reverse => {
            out.edges.push(exit(new_priv, true));
            out.edges.push(exit(new_final, false));
            out.edges.push(exit(new_priv, false));
        }
    }
    out.edges.push(
        Edge::new(new_priv, new_final)
            .with_guard(Guard::top().and(z0()))
            .with_action("sharp"),
    );

    out.init = new_init;
    out.private = new_priv;
    out.final_loc = new_final;
    Ok(out)
}
