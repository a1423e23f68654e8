//! Expiring execution-time opacity: deciding it for one bound, computing the
//! set of bounds for weak opacity, emptiness checks, and pointwise analysis
//! of parametric systems.

use std::fmt;
use std::time::{Duration, Instant};

use crate::durations::{
    class_durations_with, AnalysisOptions, AnalysisStats, Cell, CellKind, ClassDurations, DurationSet,
};
use crate::error::{Error, Result};
use crate::model::{instantiate, ParamValuation, Rational, TimedSystem};
use crate::modelfmt::{format_rational, parse_rational};
use crate::transforms::BoundValue;
use crate::unary::UpSet;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Secret durations are all covered by expired or public ones.
    Weak,
    /// Secret and non-secret durations coincide.
    Full,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Weak => "weak",
            Mode::Full => "full",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which side of the comparison a witness duration belongs to.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Side {
    /// Reachable by a secret run only.
    Secret,
    /// Reachable by an expired or public run only.
    NonSecret,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub cell: Cell,
    pub side: Side,
}

#[derive(Clone, Debug, Default)]
pub struct VerdictStats {
    pub analysis: AnalysisStats,
    pub wall: Duration,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub opaque: bool,
    pub witness: Option<Witness>,
    pub stats: VerdictStats,
}

/// Compares already computed class sets.
pub fn judge(sets: &ClassDurations, mode: Mode) -> (bool, Option<Witness>) {
    let secret = &sets.secret;
    let other = sets.expired.union(&sets.public);
    let cell = match mode {
        Mode::Weak => secret.first_not_in(&other),
        Mode::Full => secret.first_diff(&other),
    };
    let witness = cell.map(|cell| {
        let side = if secret.contains_cell(cell.kind, cell.index) { Side::Secret } else { Side::NonSecret };
        Witness { cell, side }
    });
    (witness.is_none(), witness)
}

pub fn decide(sys: &TimedSystem, delta: BoundValue, mode: Mode) -> Result<Verdict> {
    decide_with(sys, delta, mode, &AnalysisOptions::default())
}

pub fn decide_with(sys: &TimedSystem, delta: BoundValue, mode: Mode, opts: &AnalysisOptions) -> Result<Verdict> {
    let start = Instant::now();
    let sets = class_durations_with(sys, delta, opts)?;
    let (opaque, witness) = judge(&sets, mode);
    Ok(Verdict { opaque, witness, stats: VerdictStats { analysis: sets.stats, wall: start.elapsed() } })
}

/// Weak and full verdicts from a single exploration.
pub fn decide_both(sys: &TimedSystem, delta: BoundValue, opts: &AnalysisOptions) -> Result<(bool, bool)> {
    let sets = class_durations_with(sys, delta, opts)?;
    Ok((judge(&sets, Mode::Weak).0, judge(&sets, Mode::Full).0))
}

/// Verdict for every bound in the `k`-th open cell of the system's grid,
/// that is `(k/d, (k+1)/d)` with `d = sys.denom()`, decided at its
/// midpoint. For integer systems this is the band `(k, k+1)` decided at
/// `k + 1/2`.
pub fn decide_real_band(sys: &TimedSystem, k: u64, mode: Mode) -> Result<bool> {
    decide_real_band_with(sys, k, mode, &AnalysisOptions::default())
}

pub fn decide_real_band_with(sys: &TimedSystem, k: u64, mode: Mode, opts: &AnalysisOptions) -> Result<bool> {
    let d = sys.denom();
    let mid = BoundValue::ratio(2 * k as i64 + 1, 2 * d);
    Ok(decide_with(sys, mid, mode, opts)?.opaque)
}

/// A set of expiration bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeltaSet {
    /// Every bound, `+inf` included.
    All,
    Finite {
        /// Grid points and open grid cells in original time units.
        members: DurationSet,
        includes_infinity: bool,
    },
}

impl DeltaSet {
    pub fn is_empty(&self) -> bool {
        match self {
            DeltaSet::All => false,
            DeltaSet::Finite { members, includes_infinity } => members.is_empty() && !includes_infinity,
        }
    }

    pub fn contains(&self, delta: BoundValue) -> bool {
        match (self, delta) {
            (DeltaSet::All, _) => true,
            (DeltaSet::Finite { includes_infinity, .. }, BoundValue::Infinite) => *includes_infinity,
            (DeltaSet::Finite { members, .. }, BoundValue::Finite(d)) => members.contains(d),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            DeltaSet::All => serde_json::Value::String("ALL".into()),
            DeltaSet::Finite { members, includes_infinity } => {
                let mut v = members.to_json();
                v["includes_infinity"] = (*includes_infinity).into();
                v
            }
        }
    }
}

impl fmt::Display for DeltaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaSet::All => f.write_str("ALL"),
            DeltaSet::Finite { members, includes_infinity } => {
                write!(f, "{members}")?;
                if *includes_infinity {
                    f.write_str(" ∪ {inf}")?;
                }
                Ok(())
            }
        }
    }
}

/// The bounds to try once weak opacity fails at `+inf` with least
/// offending cell `witness`: opacity is impossible for every bound at or
/// above a secret-only duration, so only the grid points up to the
/// witness index and the open cells strictly below it remain.
fn weak_candidates(witness: Cell) -> Vec<Cell> {
    let mut out = Vec::new();
    for j in 0..=witness.index {
        out.push(Cell { kind: CellKind::Point, index: j, denom: witness.denom });
        if j < witness.index {
            out.push(Cell { kind: CellKind::Open, index: j, denom: witness.denom });
        }
    }
    out
}

fn cell_bound(c: &Cell) -> BoundValue {
    match c.kind {
        CellKind::Point => BoundValue::Finite(c.lower()),
        CellKind::Open => BoundValue::Finite(c.sample()),
    }
}

fn collect(cells: &[Cell], denom: i64) -> DurationSet {
    let pick = |kind| cells.iter().filter(|c| c.kind == kind).map(|c| c.index).collect::<Vec<_>>();
    DurationSet { points: UpSet::finite(&pick(CellKind::Point)), opens: UpSet::finite(&pick(CellKind::Open)), denom }
}

/// Exact set of bounds for which `sys` is weakly opaque.
pub fn compute_weak_set(sys: &TimedSystem) -> Result<DeltaSet> {
    compute_weak_set_with(sys, &AnalysisOptions::default())
}

pub fn compute_weak_set_with(sys: &TimedSystem, opts: &AnalysisOptions) -> Result<DeltaSet> {
    let at_inf = class_durations_with(sys, BoundValue::Infinite, opts)?;
    if judge(&at_inf, Mode::Weak).0 {
        return Ok(DeltaSet::All);
    }
    let witness = at_inf
        .secret
        .first_not_in(&at_inf.public)
        .expect("weak opacity fails at +inf only through a secret-only duration");
    let mut members = Vec::new();
    for c in weak_candidates(witness) {
        if decide_with(sys, cell_bound(&c), Mode::Weak, opts)?.opaque {
            members.push(c);
        }
    }
    Ok(DeltaSet::Finite { members: collect(&members, witness.denom), includes_infinity: false })
}

/// `true` iff no bound makes `sys` weakly opaque.
pub fn weak_emptiness(sys: &TimedSystem) -> Result<bool> {
    Ok(compute_weak_set(sys)?.is_empty())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Exactness {
    /// The returned set is the exact set of fully opaque bounds.
    Exact,
    /// Only (non-)emptiness is established.
    EmptinessOnly,
}

#[derive(Clone, Debug)]
pub struct FullEmptiness {
    /// Some bound makes the system fully opaque.
    pub nonempty: bool,
    pub set: Option<DeltaSet>,
    pub exactness: Exactness,
}

pub fn full_emptiness(sys: &TimedSystem) -> Result<FullEmptiness> {
    full_emptiness_with(sys, &AnalysisOptions::default())
}

/// Full opacity implies weak opacity, so a finite weak set bounds the
/// search. When the weak set is everything, full opacity at some bound is
/// equivalent to full opacity at `+inf`; the set itself is then left
/// unsynthesized.
pub fn full_emptiness_with(sys: &TimedSystem, opts: &AnalysisOptions) -> Result<FullEmptiness> {
    match compute_weak_set_with(sys, opts)? {
        DeltaSet::All => Ok(FullEmptiness {
            nonempty: decide_with(sys, BoundValue::Infinite, Mode::Full, opts)?.opaque,
            set: None,
            exactness: Exactness::EmptinessOnly,
        }),
        DeltaSet::Finite { members, .. } => {
            let mut full = Vec::new();
            let denom = members.denom;
            let horizon = members.points.periodic_from().max(members.opens.periodic_from()) as u64;
            for k in 0..=horizon {
                for kind in [CellKind::Point, CellKind::Open] {
                    if !members.contains_cell(kind, k) {
                        continue;
                    }
                    let c = Cell { kind, index: k, denom };
                    if decide_with(sys, cell_bound(&c), Mode::Full, opts)?.opaque {
                        full.push(c);
                    }
                }
            }
            let set = DeltaSet::Finite { members: collect(&full, denom), includes_infinity: false };
            Ok(FullEmptiness { nonempty: !set.is_empty(), set: Some(set), exactness: Exactness::Exact })
        }
    }
}

/// Decides a parametric system at one parameter valuation.
pub fn decide_pta(pta: &TimedSystem, v: &ParamValuation, delta: BoundValue, mode: Mode) -> Result<Verdict> {
    decide_pta_with(pta, v, delta, mode, &AnalysisOptions::default())
}

pub fn decide_pta_with(
    pta: &TimedSystem,
    v: &ParamValuation,
    delta: BoundValue,
    mode: Mode,
    opts: &AnalysisOptions,
) -> Result<Verdict> {
    decide_with(&instantiate(pta, v)?, delta, mode, opts)
}

/// Values `lo, lo + step, ...` up to `hi` of one parameter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamRange {
    pub name: String,
    pub lo: Rational,
    pub hi: Rational,
    pub step: Rational,
}

impl ParamRange {
    /// Parses `name=lo..hi:step`, `name=lo..hi` (step 1) or `name=value`.
    pub fn parse(text: &str) -> Result<ParamRange> {
        let bad = || Error::Precondition(format!("bad grid spec `{text}`; expected name=lo..hi:step"));
        let (name, spec) = text.split_once('=').ok_or_else(bad)?;
        let name = name.trim().to_string();
        if name.is_empty() {
            return Err(bad());
        }
        let range = match spec.split_once("..") {
            None => {
                let v = parse_rational(spec).ok_or_else(bad)?;
                ParamRange { name, lo: v, hi: v, step: Rational::from_integer(1) }
            }
            Some((lo, rest)) => {
                let (hi, step) = rest.split_once(':').unwrap_or((rest, "1"));
                ParamRange {
                    name,
                    lo: parse_rational(lo).ok_or_else(bad)?,
                    hi: parse_rational(hi).ok_or_else(bad)?,
                    step: parse_rational(step).ok_or_else(bad)?,
                }
            }
        };
        if range.step <= Rational::from_integer(0) || range.lo < Rational::from_integer(0) {
            return Err(bad());
        }
        Ok(range)
    }

    pub fn values(&self) -> Vec<Rational> {
        let mut out = Vec::new();
        let mut v = self.lo;
        while v <= self.hi {
            out.push(v);
            v += self.step;
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub valuation: Vec<(String, Rational)>,
    pub delta: BoundValue,
    /// The verdict, or the error that prevented one.
    pub outcome: std::result::Result<(bool, Option<Witness>), CellError>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellError {
    pub message: String,
    pub cap_exceeded: bool,
}

impl From<&Error> for CellError {
    fn from(e: &Error) -> Self {
        CellError { message: e.to_string(), cap_exceeded: e.is_cap() }
    }
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub params: Vec<ParamRange>,
    pub deltas: Vec<BoundValue>,
    pub mode: Mode,
    pub rows: Vec<SweepRow>,
}

/// Decides every point of the product grid, varying the last parameter
/// fastest and the bound fastest of all. Per-point failures are recorded
/// in the report.
pub fn sweep(pta: &TimedSystem, grid: &[ParamRange], deltas: &[BoundValue], mode: Mode) -> SweepReport {
    sweep_with(pta, grid, deltas, mode, &AnalysisOptions::default())
}

pub fn sweep_with(
    pta: &TimedSystem,
    grid: &[ParamRange],
    deltas: &[BoundValue],
    mode: Mode,
    opts: &AnalysisOptions,
) -> SweepReport {
    let axes: Vec<Vec<Rational>> = grid.iter().map(ParamRange::values).collect();
    let mut rows = Vec::new();
    let total: usize = if deltas.is_empty() { 0 } else { axes.iter().map(Vec::len).product() };
    for n in 0..total {
        let mut rem = n;
        let mut point = vec![Rational::from_integer(0); axes.len()];
        for (i, axis) in axes.iter().enumerate().rev() {
            point[i] = axis[rem % axis.len()];
            rem /= axis.len();
        }
        let valuation: Vec<(String, Rational)> =
            grid.iter().zip(&point).map(|(r, &v)| (r.name.clone(), v)).collect();
        let instance = ParamValuation::from_bindings(pta, valuation.iter().map(|(n, v)| (n.as_str(), *v)))
            .and_then(|v| instantiate(pta, &v));
        for &delta in deltas {
            let outcome = instance
                .as_ref()
                .map_err(CellError::from)
                .and_then(|sys| decide_with(sys, delta, mode, opts).map_err(|e| CellError::from(&e)))
                .map(|v| (v.opaque, v.witness));
            rows.push(SweepRow { valuation: valuation.clone(), delta, outcome });
        }
    }
    SweepReport { params: grid.to_vec(), deltas: deltas.to_vec(), mode, rows }
}

impl fmt::Display for SweepRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, v) in &self.valuation {
            write!(f, "{n}={} ", format_rational(*v))?;
        }
        write!(f, "delta={}: ", self.delta)?;
        match &self.outcome {
            Ok((true, _)) => f.write_str("opaque"),
            Ok((false, _)) => f.write_str("not opaque"),
            Err(e) => write!(f, "error: {}", e.message),
        }
    }
}

#[cfg(test)]
mod tests;
