//! Ultimately periodic subsets of ℕ and the tick-count languages of region
//! automata.

use std::fmt;

use num_integer::Integer;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::regions::{Acceptance, Letter, RegionAutomaton};

pub const DEFAULT_SUBSET_CAP: usize = 1 << 22;

/// `k ∈ set` iff `prefix[k]` for `k < prefix.len()`, else
/// `cycle[(k - prefix.len()) % cycle.len()]`. Always kept canonical (shortest
/// cycle, then shortest prefix), so structural equality is set equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UpSet {
    prefix: Vec<bool>,
    cycle: Vec<bool>,
}

impl UpSet {
    pub fn new(prefix: Vec<bool>, cycle: Vec<bool>) -> Self {
        assert!(!cycle.is_empty(), "cycle must be non-empty");
        let mut s = UpSet { prefix, cycle };
        s.canonicalize();
        s
    }

    pub fn empty() -> Self {
        UpSet { prefix: vec![], cycle: vec![false] }
    }

    pub fn all() -> Self {
        UpSet { prefix: vec![], cycle: vec![true] }
    }

    pub fn finite(members: &[u64]) -> Self {
        let len = members.iter().max().map_or(0, |m| m + 1) as usize;
        let mut prefix = vec![false; len];
        for &m in members {
            prefix[m as usize] = true;
        }
        UpSet::new(prefix, vec![false])
    }

    /// Builds from a membership function known to be periodic with `period`
    /// from `start` on.
    pub fn from_fn(start: usize, period: usize, f: impl Fn(u64) -> bool) -> Self {
        let prefix = (0..start as u64).map(&f).collect();
        let cycle = (start as u64..(start + period) as u64).map(&f).collect();
        UpSet::new(prefix, cycle)
    }

    fn canonicalize(&mut self) {
        let n = self.cycle.len();
        let p = (1..=n)
            .find(|&p| n % p == 0 && (0..n).all(|i| self.cycle[i] == self.cycle[i % p]))
            .unwrap();
        self.cycle.truncate(p);
        while let Some(&last) = self.prefix.last() {
            if last != *self.cycle.last().unwrap() {
                break;
            }
            self.prefix.pop();
            self.cycle.rotate_right(1);
        }
    }

    pub fn prefix(&self) -> &[bool] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[bool] {
        &self.cycle
    }

    pub fn contains(&self, k: u64) -> bool {
        let t = self.prefix.len() as u64;
        if k < t {
            self.prefix[k as usize]
        } else {
            self.cycle[((k - t) % self.cycle.len() as u64) as usize]
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.prefix.iter().chain(&self.cycle).any(|&b| b)
    }

    pub fn is_finite(&self) -> bool {
        self.cycle.iter().all(|&b| !b)
    }

    /// Index from which membership is periodic.
    pub fn periodic_from(&self) -> usize {
        self.prefix.len()
    }

    pub fn period(&self) -> usize {
        self.cycle.len()
    }

    /// Length past which pointwise agreement of `self` and `other` is
    /// decided: `max(T_a, T_b) + lcm(p_a, p_b)`.
    pub fn horizon(&self, other: &UpSet) -> usize {
        self.prefix.len().max(other.prefix.len()) + self.period().lcm(&other.period())
    }

    fn combine(&self, other: &UpSet, op: impl Fn(bool, bool) -> bool) -> UpSet {
        let start = self.prefix.len().max(other.prefix.len());
        let period = self.period().lcm(&other.period());
        UpSet::from_fn(start, period, |k| op(self.contains(k), other.contains(k)))
    }

    pub fn union(&self, other: &UpSet) -> UpSet {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersect(&self, other: &UpSet) -> UpSet {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &UpSet) -> UpSet {
        self.combine(other, |a, b| a && !b)
    }

    /// Least member of `self` missing from `other`.
    pub fn first_not_in(&self, other: &UpSet) -> Option<u64> {
        (0..self.horizon(other) as u64).find(|&k| self.contains(k) && !other.contains(k))
    }

    /// Least element of the symmetric difference.
    pub fn first_diff(&self, other: &UpSet) -> Option<u64> {
        (0..self.horizon(other) as u64).find(|&k| self.contains(k) != other.contains(k))
    }

    pub fn is_subset(&self, other: &UpSet) -> bool {
        self.first_not_in(other).is_none()
    }
}

impl fmt::Display for UpSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits = |v: &[bool]| v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
        write!(f, "{}({})^ω", bits(&self.prefix), bits(&self.cycle))
    }
}

/// Which durations a tick language speaks about.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LanguageKind {
    /// Integer durations reached exactly.
    Exact,
    /// Open cells `(k, k+1)` reached.
    Frac,
}

#[derive(Clone, Debug, Default)]
pub struct LassoStats {
    /// Number of distinct subsets along the lasso.
    pub subsets: usize,
    pub max_subset: usize,
}

/// Both tick languages of each target of a region automaton.
#[derive(Clone, Debug)]
pub struct TickLanguages {
    pub exact: Vec<UpSet>,
    pub frac: Vec<UpSet>,
    pub stats: LassoStats,
}

pub fn unary_language(ra: &RegionAutomaton, kind: LanguageKind) -> Result<UpSet> {
    let langs = tick_languages(ra, DEFAULT_SUBSET_CAP)?;
    Ok(match kind {
        LanguageKind::Exact => langs.exact[0].clone(),
        LanguageKind::Frac => langs.frac[0].clone(),
    })
}

/// Determinizes the unary automaton: the subsets reached after `k` ticks
/// form a lasso, from which every target's languages are read off.
pub fn tick_languages(ra: &RegionAutomaton, subset_cap: usize) -> Result<TickLanguages> {
    let n = ra.state_count();
    let ntargets = ra.targets.len();
    let mut stamp = vec![0u32; n];
    let mut epoch = 0u32;

    let mut closure = |seeds: &mut Vec<u32>| {
        epoch += 1;
        let mut out = Vec::with_capacity(seeds.len());
        while let Some(s) = seeds.pop() {
            if stamp[s as usize] == epoch {
                continue;
            }
            stamp[s as usize] = epoch;
            out.push(s);
            for &(l, t) in ra.successors(s as usize) {
                if l == Letter::Epsilon && stamp[t as usize] != epoch {
                    seeds.push(t);
                }
            }
        }
        out.sort_unstable();
        out
    };

    // flags[k][target] = (exact offset 0, exact offset 1, frac)
    let mut flags: Vec<Vec<(bool, bool, bool)>> = Vec::new();
    let mut seen: FxHashMap<Vec<u32>, usize> = FxHashMap::default();
    let mut stats = LassoStats::default();
    let mut current = closure(&mut vec![RegionAutomaton::INITIAL as u32]);
    let loop_start = loop {
        if let Some(&i) = seen.get(&current) {
            break i;
        }
        if seen.len() >= subset_cap {
            return Err(Error::CapExceeded { what: "subsets", cap: subset_cap });
        }
        stats.max_subset = stats.max_subset.max(current.len());
        let mut row = vec![(false, false, false); ntargets];
        for &s in &current {
            for (j, slot) in row.iter_mut().enumerate() {
                match ra.acceptance(s as usize, j) {
                    Some(Acceptance::Exact(0)) => slot.0 = true,
                    Some(Acceptance::Exact(_)) => slot.1 = true,
                    Some(Acceptance::Frac) => slot.2 = true,
                    None => {}
                }
            }
        }
        flags.push(row);
        let mut next: Vec<u32> = current
            .iter()
            .flat_map(|&s| ra.successors(s as usize).iter())
            .filter(|(l, _)| *l == Letter::Tick)
            .map(|&(_, t)| t)
            .collect();
        let next = closure(&mut next);
        seen.insert(std::mem::replace(&mut current, next), flags.len() - 1);
    };
    stats.subsets = flags.len();

    let len = flags.len();
    let period = len - loop_start;
    let at = |k: usize| -> usize {
        if k < len {
            k
        } else {
            loop_start + (k - loop_start) % period
        }
    };
    let mut exact = Vec::with_capacity(ntargets);
    let mut frac = Vec::with_capacity(ntargets);
    for j in 0..ntargets {
        frac.push(UpSet::from_fn(loop_start, period, |k| flags[at(k as usize)][j].2));
        exact.push(UpSet::from_fn(loop_start + 1, period, |k| {
            let k = k as usize;
            flags[at(k)][j].0 || (k >= 1 && flags[at(k - 1)][j].1)
        }));
    }
    Ok(TickLanguages { exact, frac, stats })
}
