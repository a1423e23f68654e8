//! Brute-force duration sampler over a discrete-time semantics.
//!
//! Time advances in steps of `1/g`. Every sampled run is a real run of the
//! system, so the oracle under-approximates the duration sets; with `g`
//! fine enough relative to the number of clocks it finds every duration
//! on the sampling grid. It shares no code with the region pipeline.

use rustc_hash::FxHashSet;

use crate::durations::{class_durations_with, AnalysisOptions, ClassDurations};
use crate::error::{Error, Result};
use crate::model::{ClockId, Rational, TimedSystem};
use crate::transforms::BoundValue;

#[derive(Clone, Debug)]
pub struct OracleConfig {
    /// Sampling granularity: time advances by `1/g`.
    pub g: u32,
    /// Exploration stops at duration `horizon`.
    pub horizon: u32,
    /// Longest run, counted in delay and discrete steps, that is explored.
    pub step_cap: usize,
    /// Keep one run per recorded arrival, for replay.
    pub keep_runs: bool,
}

impl OracleConfig {
    /// `g = 2·(clocks+2)·denom`, step cap `10·g·H·|edges|`.
    pub fn defaults(sys: &TimedSystem, horizon: u32) -> Self {
        let g = 2 * (sys.clocks.len() as u32 + 2) * sys.denom() as u32;
        Self::with_g(sys, g, horizon)
    }

    pub fn with_g(sys: &TimedSystem, g: u32, horizon: u32) -> Self {
        let step_cap = 10 * g as usize * horizon.max(1) as usize * sys.edges.len().max(1);
        OracleConfig { g, horizon, step_cap, keep_runs: false }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum OracleStep {
    Delay,
    Edge(usize),
}

#[derive(Clone, Debug)]
pub struct SampledRun {
    /// Duration in units of `1/g`.
    pub duration: u32,
    /// Time since the last entry into the private location, in units of
    /// `1/g`; `None` for runs avoiding it.
    pub lag: Option<u32>,
    pub steps: Vec<OracleStep>,
}

/// Arrivals at the final location, indexed by duration in units of `1/g`.
#[derive(Clone, Debug)]
pub struct SampledDurations {
    pub g: u32,
    pub horizon: u32,
    pub public: Vec<bool>,
    pub min_lag: Vec<Option<u32>>,
    pub max_lag: Vec<Option<u32>>,
    /// Some run was cut by the step cap.
    pub truncated: bool,
    pub runs: Vec<SampledRun>,
    pub configurations: usize,
}

impl SampledDurations {
    fn lag_units(&self, delta: BoundValue) -> Option<Rational> {
        delta.finite().map(|d| d * self.g as i64)
    }

    pub fn public_at(&self, n: u32) -> bool {
        self.public.get(n as usize).copied().unwrap_or(false)
    }

    /// Some private run of duration `n/g` entered the private location at
    /// most `delta` before completing.
    pub fn secret_at(&self, n: u32, delta: BoundValue) -> bool {
        match (self.min_lag.get(n as usize).copied().flatten(), self.lag_units(delta)) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(l), Some(d)) => Rational::from_integer(l as i64) <= d,
        }
    }

    pub fn expired_at(&self, n: u32, delta: BoundValue) -> bool {
        match (self.max_lag.get(n as usize).copied().flatten(), self.lag_units(delta)) {
            (Some(l), Some(d)) => Rational::from_integer(l as i64) > d,
            _ => false,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Key {
    loc: u32,
    /// `u32::MAX` while the private location has not been visited.
    lag: u32,
    clocks: Box<[u32]>,
}

const UNVISITED: u32 = u32::MAX;

struct Node {
    key: Key,
    steps: usize,
    arena: u32,
}

fn units(r: Rational, g: u32) -> Result<i64> {
    let v = r * g as i64;
    if !v.is_integer() {
        return Err(Error::Precondition(format!(
            "sampling granularity {g} does not divide the constant {r}"
        )));
    }
    Ok(v.to_integer())
}

struct Compiled {
    /// Per location: invariant atoms as (clock, op, constant in units).
    invariants: Vec<Vec<(usize, crate::model::CmpOp, i64)>>,
    /// Per location: outgoing edges as (index, guard atoms, resets, target).
    out: Vec<Vec<(usize, Vec<(usize, crate::model::CmpOp, i64)>, Vec<usize>, u32)>>,
    caps: Vec<u32>,
}

fn compile(sys: &TimedSystem, g: u32) -> Result<Compiled> {
    let atoms = |guard: &crate::model::Guard| -> Result<Vec<(usize, crate::model::CmpOp, i64)>> {
        guard
            .atoms
            .iter()
            .map(|a| Ok((a.clock.index(), a.op, units(a.rhs.constant, g)?)))
            .collect()
    };
    let mut caps = vec![0i64; sys.clocks.len()];
    for a in sys.atoms() {
        let c = &mut caps[a.clock.index()];
        *c = (*c).max(units(a.rhs.constant, g)?);
    }
    let invariants = sys.locations.iter().map(|l| atoms(&l.invariant)).collect::<Result<_>>()?;
    let mut out = vec![Vec::new(); sys.locations.len()];
    for (i, e) in sys.edges.iter().enumerate() {
        if e.source == sys.final_loc {
            continue;
        }
        let resets = e.resets.iter().map(|c: &ClockId| c.index()).collect();
        out[e.source.index()].push((i, atoms(&e.guard)?, resets, e.target.0));
    }
    Ok(Compiled { invariants, out, caps: caps.into_iter().map(|c| c.max(0) as u32 + 1).collect() })
}

fn holds(atoms: &[(usize, crate::model::CmpOp, i64)], clocks: &[u32]) -> bool {
    atoms.iter().all(|&(c, op, k)| op.holds(clocks[c] as i64, k))
}

/// Explores all runs up to the horizon on the `1/g` time grid.
pub fn oracle_explore(sys: &TimedSystem, cfg: &OracleConfig) -> Result<SampledDurations> {
    if !sys.is_parameter_free() {
        return Err(Error::NotParameterFree("the oracle"));
    }
    if cfg.g == 0 {
        return Err(Error::Precondition("sampling granularity must be positive".into()));
    }
    let g = cfg.g;
    let comp = compile(sys, g)?;
    let last = (cfg.horizon * g) as usize;
    let mut out = SampledDurations {
        g,
        horizon: cfg.horizon,
        public: vec![false; last + 1],
        min_lag: vec![None; last + 1],
        max_lag: vec![None; last + 1],
        truncated: false,
        runs: Vec::new(),
        configurations: 0,
    };
    // Parent links, only filled when runs are kept.
    let mut arena: Vec<(u32, OracleStep)> = Vec::new();
    let mut recorded: FxHashSet<(u32, u32)> = FxHashSet::default();
    let private = sys.private.0;
    let final_loc = sys.final_loc.0;

    let start = Key {
        loc: sys.init.0,
        lag: if sys.init == sys.private { 0 } else { UNVISITED },
        clocks: vec![0; sys.clocks.len()].into(),
    };
    let mut layer: Vec<Node> = Vec::new();
    if holds(&comp.invariants[sys.init.index()], &start.clocks) {
        if cfg.keep_runs {
            arena.push((u32::MAX, OracleStep::Delay));
        }
        layer.push(Node { key: start, steps: 0, arena: 0 });
    }

    for n in 0..=last {
        let mut seen: FxHashSet<Key> = layer.iter().map(|nd| nd.key.clone()).collect();
        let mut i = 0;
        while i < layer.len() {
            let (key, steps, aid) = (layer[i].key.clone(), layer[i].steps, layer[i].arena);
            i += 1;
            if key.loc == final_loc {
                let lag = (key.lag != UNVISITED).then_some(key.lag);
                match lag {
                    None => out.public[n] = true,
                    Some(l) => {
                        let lo = out.min_lag[n].get_or_insert(l);
                        *lo = (*lo).min(l);
                        let hi = out.max_lag[n].get_or_insert(l);
                        *hi = (*hi).max(l);
                    }
                }
                if cfg.keep_runs && recorded.insert((n as u32, key.lag)) {
                    let mut path = Vec::new();
                    let mut a = aid;
                    while arena[a as usize].0 != u32::MAX {
                        path.push(arena[a as usize].1);
                        a = arena[a as usize].0;
                    }
                    path.reverse();
                    out.runs.push(SampledRun { duration: n as u32, lag, steps: path });
                }
                continue;
            }
            for (ei, guard, resets, target) in &comp.out[key.loc as usize] {
                if !holds(guard, &key.clocks) {
                    continue;
                }
                let mut clocks = key.clocks.clone();
                for &r in resets {
                    clocks[r] = 0;
                }
                if !holds(&comp.invariants[*target as usize], &clocks) {
                    continue;
                }
                if steps + 1 > cfg.step_cap {
                    out.truncated = true;
                    continue;
                }
                let lag = if *target == private { 0 } else { key.lag };
                let next = Key { loc: *target, lag, clocks };
                if seen.insert(next.clone()) {
                    let arena_id = if cfg.keep_runs {
                        arena.push((aid, OracleStep::Edge(*ei)));
                        arena.len() as u32 - 1
                    } else {
                        0
                    };
                    layer.push(Node { key: next, steps: steps + 1, arena: arena_id });
                }
            }
        }
        out.configurations += layer.len();
        if n == last {
            break;
        }
        let mut next_layer = Vec::new();
        let mut next_seen: FxHashSet<Key> = FxHashSet::default();
        for nd in &layer {
            if nd.key.loc == final_loc {
                continue;
            }
            if nd.steps + 1 > cfg.step_cap {
                out.truncated = true;
                continue;
            }
            let clocks: Box<[u32]> =
                nd.key.clocks.iter().zip(&comp.caps).map(|(&v, &cap)| (v + 1).min(cap)).collect();
            if !holds(&comp.invariants[nd.key.loc as usize], &clocks) {
                continue;
            }
            let lag = if nd.key.lag == UNVISITED { UNVISITED } else { nd.key.lag + 1 };
            let key = Key { loc: nd.key.loc, lag, clocks };
            if next_seen.insert(key.clone()) {
                let arena_id = if cfg.keep_runs {
                    arena.push((nd.arena, OracleStep::Delay));
                    arena.len() as u32 - 1
                } else {
                    0
                };
                next_layer.push(Node { key, steps: nd.steps + 1, arena: arena_id });
            }
        }
        layer = next_layer;
    }
    Ok(out)
}

/// Replays a run under the exact semantics, returning its duration and lag
/// if every step is legal and it ends at the final location.
pub fn replay(sys: &TimedSystem, steps: &[OracleStep], g: u32) -> Option<(Rational, Option<Rational>)> {
    let zero = Rational::from_integer(0);
    let dt = Rational::new(1, g as i64);
    let mut loc = sys.init;
    let mut clocks = vec![zero; sys.clocks.len()];
    let mut lag = (sys.init == sys.private).then_some(zero);
    let mut now = zero;
    if !sys.location(loc).invariant.holds(&clocks) {
        return None;
    }
    for step in steps {
        if loc == sys.final_loc {
            return None;
        }
        match *step {
            OracleStep::Delay => {
                for c in clocks.iter_mut() {
                    *c += dt;
                }
                lag = lag.map(|l| l + dt);
                now += dt;
                if !sys.location(loc).invariant.holds(&clocks) {
                    return None;
                }
            }
            OracleStep::Edge(i) => {
                let e = sys.edges.get(i)?;
                if e.source != loc || !e.guard.holds(&clocks) {
                    return None;
                }
                for r in &e.resets {
                    clocks[r.index()] = zero;
                }
                loc = e.target;
                if loc == sys.private {
                    lag = Some(zero);
                }
                if !sys.location(loc).invariant.holds(&clocks) {
                    return None;
                }
            }
        }
    }
    (loc == sys.final_loc).then_some((now, lag))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Agreement {
    Agree,
    /// Human-readable descriptions of the mismatching samples.
    Disagree(Vec<String>),
    /// The step cap cut some run, so missing durations prove nothing.
    Inconclusive,
}

impl Agreement {
    pub fn agrees(&self) -> bool {
        *self == Agreement::Agree
    }
}

/// Compares the pipeline's three class sets at `delta` with the oracle at
/// every integer `k < H` and at `k + 1/2`.
pub fn oracle_agrees(sys: &TimedSystem, delta: BoundValue, g: u32, horizon: u32) -> Result<Agreement> {
    let cfg = OracleConfig::with_g(sys, g, horizon);
    let sampled = oracle_explore(sys, &cfg)?;
    let sets = class_durations_with(sys, delta, &AnalysisOptions::default())?;
    compare(&sampled, &sets, delta)
}

/// As [`oracle_agrees`], against precomputed samples and class sets.
pub fn compare(sampled: &SampledDurations, sets: &ClassDurations, delta: BoundValue) -> Result<Agreement> {
    let g = sampled.g;
    if g % 2 != 0 {
        return Err(Error::Precondition("the sampling granularity must be even".into()));
    }
    if let Some(d) = delta.finite() {
        if !(d * g as i64).is_integer() {
            return Err(Error::Precondition(format!("granularity {g} does not divide the bound {d}")));
        }
    }
    let mut bad = Vec::new();
    for k in 0..sampled.horizon {
        for n in [k * g, k * g + g / 2] {
            let t = Rational::new(n as i64, g as i64);
            let checks = [
                ("secret", sampled.secret_at(n, delta), sets.secret.contains(t)),
                ("expired", sampled.expired_at(n, delta), sets.expired.contains(t)),
                ("public", sampled.public_at(n), sets.public.contains(t)),
            ];
            for (class, oracle, pipeline) in checks {
                if oracle != pipeline {
                    bad.push(format!("{class} at {t}: oracle {oracle}, regions {pipeline}"));
                }
            }
        }
    }
    Ok(if bad.is_empty() {
        Agreement::Agree
    } else if sampled.truncated {
        Agreement::Inconclusive
    } else {
        Agreement::Disagree(bad)
    })
}
