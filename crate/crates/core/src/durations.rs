//! Run-duration sets as unions of grid points and open grid cells.

use std::fmt;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::model::{scale, LocationId, Rational, TimedSystem};
use crate::modelfmt::format_rational;
use crate::regions::{explore, ExploreOptions, RegionAutomaton};
use crate::transforms::{absorb_at, add_tick_except, classify, BoundValue};
use crate::unary::{tick_languages, LassoStats, UpSet, DEFAULT_SUBSET_CAP};

/// `{ k/denom : points(k) } ∪ ⋃ { (k/denom, (k+1)/denom) : opens(k) }`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DurationSet {
    pub points: UpSet,
    pub opens: UpSet,
    pub denom: i64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellKind {
    Point,
    Open,
}

/// A grid cell: the point `index/denom` or the open interval
/// `(index/denom, (index+1)/denom)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub kind: CellKind,
    pub index: u64,
    pub denom: i64,
}

impl Cell {
    pub fn lower(&self) -> Rational {
        Rational::new(self.index as i64, self.denom)
    }

    pub fn upper(&self) -> Rational {
        match self.kind {
            CellKind::Point => self.lower(),
            CellKind::Open => Rational::new(self.index as i64 + 1, self.denom),
        }
    }

    /// A rational inside the cell.
    pub fn sample(&self) -> Rational {
        (self.lower() + self.upper()) / 2
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            CellKind::Point => f.write_str(&format_rational(self.lower())),
            CellKind::Open => {
                write!(f, "({}, {})", format_rational(self.lower()), format_rational(self.upper()))
            }
        }
    }
}

/// A maximal interval of a duration set. `upper == None` means unbounded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lower: Rational,
    pub lower_closed: bool,
    pub upper: Option<Rational>,
    pub upper_closed: bool,
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = format_rational(self.lower);
        match self.upper {
            Some(hi) if hi == self.lower => write!(f, "{{{lo}}}"),
            Some(hi) => write!(
                f,
                "{}{lo}, {}{}",
                if self.lower_closed { '[' } else { '(' },
                format_rational(hi),
                if self.upper_closed { ']' } else { ')' }
            ),
            None => write!(f, "{}{lo}, +inf)", if self.lower_closed { '[' } else { '(' }),
        }
    }
}

/// How a set continues past its listed intervals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tail {
    /// Nothing beyond the listed intervals (the last may be unbounded).
    Finite,
    /// For every `t >= from`, `t` is a member iff `t + period` is.
    Periodic { from: Rational, period: Rational },
}

impl DurationSet {
    pub fn empty(denom: i64) -> Self {
        DurationSet { points: UpSet::empty(), opens: UpSet::empty(), denom }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.opens.is_empty()
    }

    pub fn contains(&self, t: Rational) -> bool {
        if t < Rational::from_integer(0) {
            return false;
        }
        let x = t * self.denom;
        if x.is_integer() {
            self.points.contains(x.to_integer() as u64)
        } else {
            self.opens.contains(x.floor().to_integer() as u64)
        }
    }

    pub fn contains_cell(&self, kind: CellKind, k: u64) -> bool {
        match kind {
            CellKind::Point => self.points.contains(k),
            CellKind::Open => self.opens.contains(k),
        }
    }

    /// Same real set on the grid of `new_denom`, which `denom` must divide.
    pub fn rescale(&self, new_denom: i64) -> Result<DurationSet> {
        if new_denom <= 0 || new_denom % self.denom != 0 {
            return Err(Error::Precondition(format!(
                "cannot rescale a duration set from denominator {} to {}",
                self.denom, new_denom
            )));
        }
        let m = (new_denom / self.denom) as u64;
        if m == 1 {
            return Ok(self.clone());
        }
        let start = self.points.periodic_from().max(self.opens.periodic_from()) * m as usize;
        let period = self.points.period().lcm(&self.opens.period()) * m as usize;
        let points = UpSet::from_fn(start, period, |j| {
            if j % m == 0 {
                self.points.contains(j / m)
            } else {
                self.opens.contains(j / m)
            }
        });
        let opens = UpSet::from_fn(start, period, |j| self.opens.contains(j / m));
        Ok(DurationSet { points, opens, denom: new_denom })
    }

    fn aligned(&self, other: &DurationSet) -> (DurationSet, DurationSet) {
        let d = self.denom.lcm(&other.denom);
        (self.rescale(d).unwrap(), other.rescale(d).unwrap())
    }

    pub fn union(&self, other: &DurationSet) -> DurationSet {
        let (a, b) = self.aligned(other);
        DurationSet { points: a.points.union(&b.points), opens: a.opens.union(&b.opens), denom: a.denom }
    }

    fn horizon(a: &DurationSet, b: &DurationSet) -> u64 {
        a.points.horizon(&b.points).max(a.opens.horizon(&b.opens)).max(a.points.horizon(&b.opens)) as u64
    }

    fn first_cell(&self, other: &DurationSet, differs: impl Fn(bool, bool) -> bool) -> Option<Cell> {
        let (a, b) = self.aligned(other);
        let denom = a.denom;
        (0..=Self::horizon(&a, &b)).find_map(|k| {
            [CellKind::Point, CellKind::Open].into_iter().find_map(|kind| {
                differs(a.contains_cell(kind, k), b.contains_cell(kind, k))
                    .then_some(Cell { kind, index: k, denom })
            })
        })
    }

    /// Least cell of `self` not covered by `other`.
    pub fn first_not_in(&self, other: &DurationSet) -> Option<Cell> {
        self.first_cell(other, |x, y| x && !y)
    }

    /// Least cell of the symmetric difference.
    pub fn first_diff(&self, other: &DurationSet) -> Option<Cell> {
        self.first_cell(other, |x, y| x != y)
    }

    pub fn is_subset(&self, other: &DurationSet) -> bool {
        self.first_not_in(other).is_none()
    }

    pub fn set_eq(&self, other: &DurationSet) -> bool {
        self.first_diff(other).is_none()
    }

    /// Maximal intervals up to the end of the first period, with the
    /// periodic continuation if there is one.
    pub fn intervals(&self) -> (Vec<Interval>, Tail) {
        let start = self.points.periodic_from().max(self.opens.periodic_from()) as u64;
        let period = self.points.period().lcm(&self.opens.period()) as u64;
        let cofinite = self.points.cycle().iter().all(|&b| b) && self.opens.cycle().iter().all(|&b| b);
        let eventually_empty = self.points.is_finite() && self.opens.is_finite();
        let end = if cofinite || eventually_empty { start } else { start + period };
        // Positions 2k and 2k+1 stand for point k and open cell k.
        let member = |pos: u64| {
            if pos % 2 == 0 {
                self.points.contains(pos / 2)
            } else {
                self.opens.contains(pos / 2)
            }
        };
        let d = self.denom;
        let mut out = Vec::new();
        let mut pos = 0;
        let limit = 2 * end + if cofinite { 1 } else { 0 };
        while pos < limit {
            if !member(pos) {
                pos += 1;
                continue;
            }
            let s = pos;
            while pos < limit && member(pos) {
                pos += 1;
            }
            let e = pos - 1;
            let lower = Rational::new((s / 2) as i64, d);
            let lower_closed = s % 2 == 0;
            let (upper, upper_closed) = if cofinite && pos == limit {
                (None, false)
            } else if e % 2 == 0 {
                (Some(Rational::new((e / 2) as i64, d)), true)
            } else {
                (Some(Rational::new((e / 2 + 1) as i64, d)), false)
            };
            out.push(Interval { lower, lower_closed, upper, upper_closed });
        }
        let tail = if cofinite || eventually_empty {
            Tail::Finite
        } else {
            Tail::Periodic { from: Rational::new(start as i64, d), period: Rational::new(period as i64, d) }
        };
        (out, tail)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (ivs, tail) = self.intervals();
        let r = |q: Rational| serde_json::Value::String(format_rational(q));
        let intervals: Vec<_> = ivs
            .iter()
            .map(|iv| {
                serde_json::json!({
                    "lower": r(iv.lower),
                    "lower_closed": iv.lower_closed,
                    "upper": iv.upper.map_or(serde_json::Value::String("inf".into()), r),
                    "upper_closed": iv.upper_closed,
                })
            })
            .collect();
        let period = match tail {
            Tail::Finite => serde_json::Value::Null,
            Tail::Periodic { from, period } => serde_json::json!({ "from": r(from), "period": r(period) }),
        };
        serde_json::json!({ "text": self.to_string(), "intervals": intervals, "eventual_period": period })
    }
}

impl fmt::Display for DurationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (ivs, tail) = self.intervals();
        if ivs.is_empty() && tail == Tail::Finite {
            return f.write_str("∅");
        }
        let parts: Vec<String> = ivs.iter().map(|iv| iv.to_string()).collect();
        f.write_str(&parts.join(" ∪ "))?;
        if let Tail::Periodic { from, period } = tail {
            write!(f, " ∪ … (period {} from {})", format_rational(period), format_rational(from))?;
        }
        Ok(())
    }
}

/// Resource limits and switches shared by the duration and opacity analyses.
#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub explore: ExploreOptions,
    pub subset_cap: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { explore: ExploreOptions::default(), subset_cap: DEFAULT_SUBSET_CAP }
    }
}

#[derive(Clone, Debug, Default)]
pub struct AnalysisStats {
    pub region_states: usize,
    pub region_transitions: usize,
    pub subsets: usize,
    pub max_subset: usize,
}

impl AnalysisStats {
    fn record(&mut self, ra: &RegionAutomaton, lasso: &LassoStats) {
        self.region_states += ra.state_count();
        self.region_transitions += ra.transition_count();
        self.subsets += lasso.subsets;
        self.max_subset = self.max_subset.max(lasso.max_subset);
    }

    pub fn add(&mut self, other: &AnalysisStats) {
        self.region_states += other.region_states;
        self.region_transitions += other.region_transitions;
        self.subsets += other.subsets;
        self.max_subset = self.max_subset.max(other.max_subset);
    }
}

/// Durations of runs reaching `selected_final`, which becomes absorbing.
pub fn duration_set(sys: &TimedSystem, selected_final: LocationId) -> Result<DurationSet> {
    duration_set_with(sys, selected_final, &AnalysisOptions::default()).map(|(d, _)| d)
}

pub fn duration_set_with(
    sys: &TimedSystem,
    selected_final: LocationId,
    opts: &AnalysisOptions,
) -> Result<(DurationSet, AnalysisStats)> {
    if !sys.is_parameter_free() {
        return Err(Error::NotParameterFree("duration analysis"));
    }
    let m = sys.denom();
    let scaled = scale(sys, m as u64)?;
    let ticked = add_tick_except(&absorb_at(&scaled, selected_final), &[selected_final])?;
    let ra = explore(&ticked, &[selected_final], &opts.explore)?;
    let langs = tick_languages(&ra, opts.subset_cap)?;
    let mut stats = AnalysisStats::default();
    stats.record(&ra, &langs.stats);
    let set = DurationSet { points: langs.exact[0].clone(), opens: langs.frac[0].clone(), denom: m };
    Ok((set, stats))
}

/// The three duration sets of a system at one expiration bound.
#[derive(Clone, Debug)]
pub struct ClassDurations {
    /// Private location entered at most `Δ` before completion.
    pub secret: DurationSet,
    /// Private location visited, but last entered more than `Δ` before.
    pub expired: DurationSet,
    /// Private location never visited.
    pub public: DurationSet,
    pub stats: AnalysisStats,
}

/// The factor making every constant of `sys` and the bound integers.
pub fn analysis_scale(sys: &TimedSystem, delta: BoundValue) -> Result<i64> {
    match delta {
        BoundValue::Finite(d) if d < Rational::from_integer(0) => {
            Err(Error::Precondition("the expiration bound must be non-negative".into()))
        }
        BoundValue::Finite(d) => Ok(sys.denom().lcm(d.denom())),
        BoundValue::Infinite => Ok(sys.denom()),
    }
}

pub fn class_durations(sys: &TimedSystem, delta: BoundValue) -> Result<ClassDurations> {
    class_durations_with(sys, delta, &AnalysisOptions::default())
}

/// Scales so that both the system and `delta` are integral, classifies,
/// and reads all three sets off a single region exploration.
pub fn class_durations_with(
    sys: &TimedSystem,
    delta: BoundValue,
    opts: &AnalysisOptions,
) -> Result<ClassDurations> {
    if !sys.is_parameter_free() {
        return Err(Error::NotParameterFree("duration analysis"));
    }
    let m = analysis_scale(sys, delta)?;
    let scaled = scale(sys, m as u64)?;
    let classified = classify(&scaled, delta.scaled(m))?;
    let ticked = classified.with_tick()?;
    let ra = explore(&ticked, &classified.finals(), &opts.explore)?;
    let langs = tick_languages(&ra, opts.subset_cap)?;
    let mut stats = AnalysisStats::default();
    stats.record(&ra, &langs.stats);
    let set = |i: usize| DurationSet { points: langs.exact[i].clone(), opens: langs.frac[i].clone(), denom: m };
    Ok(ClassDurations { secret: set(0), expired: set(1), public: set(2), stats })
}
