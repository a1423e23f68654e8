//! Region abstraction of integer timed automata and the tick-lettered region
//! automaton.
//!
//! A region is stored as a location plus, for each clock, its integer part
//! (`c + 1` marks "above the ceiling `c`") and a fractional class: `0` when
//! the fractional part is zero or the clock is above its ceiling, `k >= 1`
//! when the clock belongs to the `k`-th smallest class of non-zero fractional
//! parts.

use std::collections::VecDeque;
use std::fmt;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::model::{Atom, ClockId, CmpOp, Guard, LocationId, Rational, TimedSystem};
use crate::transforms::TickedSystem;

pub const DEFAULT_STATE_CAP: usize = 2_000_000;

/// Per-clock largest integer constant the clock is compared with.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ceiling {
    pub per_clock: Vec<i64>,
}

impl Ceiling {
    pub fn of(&self, c: ClockId) -> i64 {
        self.per_clock[c.index()]
    }
}

pub(crate) fn require_integer(sys: &TimedSystem, what: &'static str) -> Result<()> {
    if !sys.is_parameter_free() {
        return Err(Error::NotParameterFree(what));
    }
    let denom = sys.denom();
    if denom != 1 {
        return Err(Error::Denominator { denom: 1, found: denom });
    }
    Ok(())
}

pub fn ceilings(sys: &TimedSystem) -> Result<Ceiling> {
    require_integer(sys, "ceilings")?;
    let mut per_clock = vec![0i64; sys.clocks.len()];
    for a in sys.atoms() {
        let c = a.rhs.constant.to_integer();
        let slot = &mut per_clock[a.clock.index()];
        *slot = (*slot).max(c);
    }
    Ok(Ceiling { per_clock })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    pub location: LocationId,
    /// Integer parts followed by fractional classes, one of each per clock.
    cells: Box<[u16]>,
}

impl Region {
    fn from_parts(location: LocationId, ints: &[u16], classes: &[u16]) -> Self {
        let mut cells = Vec::with_capacity(ints.len() * 2);
        cells.extend_from_slice(ints);
        cells.extend_from_slice(classes);
        Region { location, cells: cells.into_boxed_slice() }
    }

    pub fn clock_count(&self) -> usize {
        self.cells.len() / 2
    }

    pub fn int_part(&self, c: ClockId) -> u16 {
        self.cells[c.index()]
    }

    /// 0 for integer-valued or above-ceiling clocks.
    pub fn frac_class(&self, c: ClockId) -> u16 {
        self.cells[self.clock_count() + c.index()]
    }

    pub fn is_above(&self, c: ClockId, ceil: &Ceiling) -> bool {
        self.int_part(c) as i64 > ceil.of(c)
    }

    pub fn has_zero_frac(&self, c: ClockId, ceil: &Ceiling) -> bool {
        !self.is_above(c, ceil) && self.frac_class(c) == 0
    }

    /// Clocks with non-zero fractional part below their ceiling, grouped by
    /// equal fractional part, in increasing order.
    pub fn frac_order(&self) -> Vec<Vec<ClockId>> {
        let n = self.clock_count();
        let k = (0..n).map(|i| self.cells[n + i]).max().unwrap_or(0);
        (1..=k)
            .map(|cls| {
                (0..n)
                    .filter(|&i| self.cells[n + i] == cls)
                    .map(ClockId::from)
                    .collect()
            })
            .collect()
    }

    /// A concrete valuation inside the region: fractional class `k` of `m`
    /// gets fractional part `k/(m+1)`, above-ceiling clocks get `c + 1`.
    pub fn representative(&self) -> Vec<Rational> {
        let n = self.clock_count();
        let m = (0..n).map(|i| self.cells[n + i]).max().unwrap_or(0) as i64;
        (0..n)
            .map(|i| {
                Rational::from_integer(self.cells[i] as i64)
                    + Rational::new(self.cells[n + i] as i64, m + 1)
            })
            .collect()
    }

    pub fn describe(&self, clocks: &[String], ceil: &Ceiling) -> String {
        let mut parts = Vec::new();
        for (i, name) in clocks.iter().enumerate() {
            let c = ClockId::from(i);
            if self.is_above(c, ceil) {
                parts.push(format!("{name}>{}", ceil.of(c)));
            } else if self.frac_class(c) == 0 {
                parts.push(format!("{name}={}", self.int_part(c)));
            } else {
                let ip = self.int_part(c);
                parts.push(format!("{ip}<{name}<{}", ip + 1));
            }
        }
        let order: Vec<String> = self
            .frac_order()
            .iter()
            .map(|cls| cls.iter().map(|c| clocks[c.index()].as_str()).collect::<Vec<_>>().join("="))
            .collect();
        if order.len() > 1 || order.first().is_some_and(|c| c.contains('=')) {
            parts.push(format!("frac: {}", order.join(" < ")));
        }
        parts.join(", ")
    }
}

/// Canonical region of a concrete state.
pub fn region_of(location: LocationId, valuation: &[Rational], ceil: &Ceiling) -> Region {
    let n = valuation.len();
    let mut ints = vec![0u16; n];
    let mut fracs: Vec<(Rational, usize)> = Vec::new();
    for (i, v) in valuation.iter().enumerate() {
        let c = ceil.per_clock[i];
        if *v > Rational::from_integer(c) {
            ints[i] = (c + 1) as u16;
        } else {
            ints[i] = v.floor().to_integer() as u16;
            let f = v.fract();
            if f != Rational::from_integer(0) {
                fracs.push((f, i));
            }
        }
    }
    fracs.sort();
    let mut classes = vec![0u16; n];
    let mut cls = 0u16;
    let mut last: Option<Rational> = None;
    for (f, i) in fracs {
        if last != Some(f) {
            cls += 1;
            last = Some(f);
        }
        classes[i] = cls;
    }
    Region::from_parts(location, &ints, &classes)
}

/// Evaluates an atom with an integer constant on a region.
fn atom_holds(ints: &[u16], classes: &[u16], ceil: &[i64], atom: &Atom) -> bool {
    let i = atom.clock.index();
    let d = atom.rhs.constant.to_integer();
    let ip = ints[i] as i64;
    if ip > ceil[i] {
        // value > c >= d
        return matches!(atom.op, CmpOp::Gt | CmpOp::Ge);
    }
    let zero = classes[i] == 0;
    match atom.op {
        CmpOp::Lt => ip < d,
        CmpOp::Le => if zero { ip <= d } else { ip < d },
        CmpOp::Eq => zero && ip == d,
        CmpOp::Ge => ip >= d,
        CmpOp::Gt => if zero { ip > d } else { ip >= d },
    }
}

fn guard_holds(ints: &[u16], classes: &[u16], ceil: &[i64], g: &Guard) -> bool {
    g.atoms.iter().all(|a| atom_holds(ints, classes, ceil, a))
}

/// Renumbers fractional classes to `1..=m` without gaps.
fn compact_classes(classes: &mut [u16]) {
    let mut present: Vec<u16> = classes.iter().copied().filter(|&c| c != 0).collect();
    present.sort_unstable();
    present.dedup();
    for c in classes.iter_mut() {
        if *c != 0 {
            *c = present.binary_search(c).unwrap() as u16 + 1;
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    Tick,
    Epsilon,
}

/// How an accepting region encodes the arrival duration: with `k` ticks read,
/// `Exact(o)` means duration exactly `k + o`, `Frac` means duration in
/// `(k, k + 1)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Acceptance {
    Exact(u8),
    Frac,
}

#[derive(Clone, Debug)]
pub struct ExploreOptions {
    pub state_cap: usize,
    /// Abstracts a clock as "above its ceiling" as soon as it exceeds the
    /// largest constant it can still be compared with from the current
    /// location before its next reset. Clocks never read again collapse to a
    /// single value. Preserves the tick languages.
    pub local_ceilings: bool,
    /// Deliberately exchanges exact and fractional acceptance. Only used to
    /// check that the test oracles notice a broken pipeline.
    pub mutate_swap_acceptance: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { state_cap: DEFAULT_STATE_CAP, local_ceilings: true, mutate_swap_acceptance: false }
    }
}

/// Reachable part of the region graph of a tick-augmented system, with
/// acceptance computed for one or several absorbing target locations.
#[derive(Clone, Debug)]
pub struct RegionAutomaton {
    pub clocks: Vec<String>,
    pub ceiling: Ceiling,
    pub tick: ClockId,
    pub targets: Vec<LocationId>,
    pub states: Vec<Region>,
    /// CSR offsets into `edges`; state `s` owns `edges[offsets[s]..offsets[s+1]]`.
    offsets: Vec<u32>,
    edges: Vec<(Letter, u32)>,
    swap_acceptance: bool,
}

impl RegionAutomaton {
    pub const INITIAL: usize = 0;

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn transition_count(&self) -> usize {
        self.edges.len()
    }

    pub fn successors(&self, s: usize) -> &[(Letter, u32)] {
        &self.edges[self.offsets[s] as usize..self.offsets[s + 1] as usize]
    }

    pub fn transitions(&self) -> impl Iterator<Item = (usize, Letter, usize)> + '_ {
        (0..self.states.len()).flat_map(move |s| {
            self.successors(s).iter().map(move |&(l, t)| (s, l, t as usize))
        })
    }

    /// Acceptance of `state` for target `which` (index into `targets`).
    pub fn acceptance(&self, state: usize, which: usize) -> Option<Acceptance> {
        let r = &self.states[state];
        if r.location != self.targets[which] {
            return None;
        }
        let acc = match (r.int_part(self.tick), r.frac_class(self.tick)) {
            (0, 0) => Acceptance::Exact(0),
            (1, 0) => Acceptance::Exact(1),
            _ => Acceptance::Frac,
        };
        Some(match (self.swap_acceptance, acc) {
            (false, a) => a,
            (true, Acceptance::Frac) => Acceptance::Exact(0),
            (true, Acceptance::Exact(_)) => Acceptance::Frac,
        })
    }

    /// Regions accepting for the first target with an exact arrival, with
    /// their tick offset.
    pub fn accept_exact(&self) -> Vec<(usize, u8)> {
        (0..self.states.len())
            .filter_map(|s| match self.acceptance(s, 0) {
                Some(Acceptance::Exact(o)) => Some((s, o)),
                _ => None,
            })
            .collect()
    }

    pub fn accept_frac(&self) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&s| self.acceptance(s, 0) == Some(Acceptance::Frac))
            .collect()
    }
}

impl fmt::Display for RegionAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} regions, {} transitions", self.state_count(), self.transition_count())
    }
}

/// Per location and clock, the largest constant the clock can be compared
/// with before its next reset, or `-1` if it is never read again. Targets
/// are treated as having no outgoing edges.
fn local_ceilings(sys: &TimedSystem, targets: &[LocationId]) -> Vec<Vec<i64>> {
    let n = sys.clocks.len();
    let mut m = vec![vec![-1i64; n]; sys.locations.len()];
    for (l, loc) in sys.locations.iter().enumerate() {
        for a in &loc.invariant.atoms {
            let v = &mut m[l][a.clock.index()];
            *v = (*v).max(a.rhs.constant.to_integer());
        }
    }
    let edges: Vec<_> = sys.edges.iter().filter(|e| !targets.contains(&e.source)).collect();
    for e in &edges {
        for a in &e.guard.atoms {
            let v = &mut m[e.source.index()][a.clock.index()];
            *v = (*v).max(a.rhs.constant.to_integer());
        }
    }
    let mut changed = true;
    while changed {
        changed = false;
        for e in &edges {
            for c in 0..n {
                let carried = m[e.target.index()][c];
                if !e.resets.contains(&ClockId::from(c)) && carried > m[e.source.index()][c] {
                    m[e.source.index()][c] = carried;
                    changed = true;
                }
            }
        }
    }
    m
}

/// Builds the tick-lettered region automaton restricted to reachable regions,
/// accepting at `target`.
pub fn region_automaton(sys: &TickedSystem, target: LocationId) -> Result<RegionAutomaton> {
    explore(sys, &[target], &ExploreOptions::default())
}

/// Explores once and records acceptance for every target; targets are
/// absorbing (no successors are generated from them).
pub fn explore(
    ticked: &TickedSystem,
    targets: &[LocationId],
    opts: &ExploreOptions,
) -> Result<RegionAutomaton> {
    let sys = &ticked.system;
    let ceil = ceilings(sys)?;
    for &t in targets {
        if t.index() >= sys.locations.len() {
            return Err(Error::Precondition(format!("target location #{} does not exist", t.0)));
        }
    }
    let n = sys.clocks.len();
    let c = &ceil.per_clock;
    let local = if opts.local_ceilings {
        Some(local_ceilings(sys, targets))
    } else {
        None
    };
    let canon = |loc: LocationId, ints: &mut [u16], classes: &mut [u16]| {
        if let Some(local) = &local {
            let mut touched = false;
            for i in 0..n {
                let (m, ip) = (local[loc.index()][i], ints[i] as i64);
                if ip <= c[i] && (ip > m || (ip == m && classes[i] != 0)) {
                    ints[i] = (c[i] + 1) as u16;
                    touched |= classes[i] != 0;
                    classes[i] = 0;
                }
            }
            if touched {
                compact_classes(classes);
            }
        }
    };

    let mut out_edges_of: Vec<Vec<&crate::model::Edge>> = vec![Vec::new(); sys.locations.len()];
    for e in &sys.edges {
        out_edges_of[e.source.index()].push(e);
    }
    let is_target = |l: LocationId| targets.contains(&l);

    let mut index: FxHashMap<Region, u32> = FxHashMap::default();
    let mut states: Vec<Region> = Vec::new();
    let mut offsets: Vec<u32> = vec![0];
    let mut edges: Vec<(Letter, u32)> = Vec::new();
    let mut queue: VecDeque<u32> = VecDeque::new();

    let intern = |r: Region,
                  index: &mut FxHashMap<Region, u32>,
                  states: &mut Vec<Region>,
                  queue: &mut VecDeque<u32>|
     -> Result<u32> {
        if let Some(&i) = index.get(&r) {
            return Ok(i);
        }
        if states.len() >= opts.state_cap {
            return Err(Error::CapExceeded { what: "region states", cap: opts.state_cap });
        }
        let i = states.len() as u32;
        index.insert(r.clone(), i);
        states.push(r);
        queue.push_back(i);
        Ok(i)
    };

    let mut ints = vec![0u16; n];
    let mut classes = vec![0u16; n];
    let init_ok = guard_holds(&ints, &classes, c, &sys.location(sys.init).invariant);
    canon(sys.init, &mut ints, &mut classes);
    intern(
        Region::from_parts(sys.init, &ints, &classes),
        &mut index,
        &mut states,
        &mut queue,
    )?;
    if !init_ok {
        queue.clear();
    }

    let mut succ: Vec<(Letter, u32)> = Vec::new();
    let mut processed = 0usize;
    while let Some(s) = queue.pop_front() {
        debug_assert_eq!(s as usize, processed);
        processed += 1;
        succ.clear();
        let r = states[s as usize].clone();
        let loc = r.location;
        if !is_target(loc) {
            let ints0 = &r.cells[..n];
            let cls0 = &r.cells[n..];

            // Delay successor.
            let above = |i: usize| ints0[i] as i64 > c[i];
            if (0..n).all(above) {
                succ.push((Letter::Epsilon, s));
            } else {
                ints.copy_from_slice(ints0);
                classes.copy_from_slice(cls0);
                let zero_clocks: Vec<usize> =
                    (0..n).filter(|&i| !above(i) && cls0[i] == 0).collect();
                if !zero_clocks.is_empty() {
                    let mut any_frac = false;
                    for &i in &zero_clocks {
                        if ints0[i] as i64 == c[i] {
                            ints[i] = (c[i] + 1) as u16;
                        } else {
                            any_frac = true;
                        }
                    }
                    if any_frac {
                        for i in 0..n {
                            if classes[i] != 0 {
                                classes[i] += 1;
                            }
                        }
                        for &i in &zero_clocks {
                            if ints0[i] as i64 != c[i] {
                                classes[i] = 1;
                            }
                        }
                    }
                } else {
                    let top = *cls0.iter().max().unwrap();
                    for i in 0..n {
                        if cls0[i] == top {
                            ints[i] += 1;
                            classes[i] = 0;
                        }
                    }
                }
                if guard_holds(&ints, &classes, c, &sys.location(loc).invariant) {
                    canon(loc, &mut ints, &mut classes);
                    let t = intern(
                        Region::from_parts(loc, &ints, &classes),
                        &mut index,
                        &mut states,
                        &mut queue,
                    )?;
                    succ.push((Letter::Epsilon, t));
                }
            }

            // Discrete successors.
            for e in &out_edges_of[loc.index()] {
                if !guard_holds(ints0, cls0, c, &e.guard) {
                    continue;
                }
                ints.copy_from_slice(ints0);
                classes.copy_from_slice(cls0);
                for r in &e.resets {
                    ints[r.index()] = 0;
                    classes[r.index()] = 0;
                }
                compact_classes(&mut classes);
                if !guard_holds(&ints, &classes, c, &sys.location(e.target).invariant) {
                    continue;
                }
                canon(e.target, &mut ints, &mut classes);
                let letter = if e.resets.contains(&ticked.tick) { Letter::Tick } else { Letter::Epsilon };
                let t = intern(
                    Region::from_parts(e.target, &ints, &classes),
                    &mut index,
                    &mut states,
                    &mut queue,
                )?;
                succ.push((letter, t));
            }
            succ.sort_unstable_by_key(|&(l, t)| (t, l == Letter::Epsilon));
            succ.dedup();
        }
        edges.extend_from_slice(&succ);
        offsets.push(edges.len() as u32);
    }
    // States interned but never processed only exist when the initial
    // invariant fails; give them empty successor lists.
    while offsets.len() <= states.len() {
        offsets.push(edges.len() as u32);
    }

    Ok(RegionAutomaton {
        clocks: sys.clocks.clone(),
        ceiling: ceil,
        tick: ticked.tick,
        targets: targets.to_vec(),
        states,
        offsets,
        edges,
        swap_acceptance: opts.mutate_swap_acceptance,
    })
}
