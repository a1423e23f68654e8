use super::*;
use crate::model::{Atom, ClockId, CmpOp, Edge, Guard, Location, LocationId};
use crate::testsupport::{fig1, fig1_at, gen_ta, GenSpec};
use crate::transforms::{swap_transform, swap_transform_reverse};

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn chain(name: &str, locs: &[&str], edges: Vec<Edge>, private: u32) -> TimedSystem {
    TimedSystem {
        name: name.into(),
        clocks: vec!["x".into()],
        params: vec![],
        locations: locs.iter().map(|&l| Location::new(l)).collect(),
        edges,
        init: LocationId(0),
        private: LocationId(private),
        final_loc: LocationId(locs.len() as u32 - 1),
    }
}

fn at(x: i64) -> Guard {
    Guard::top().and(Atom::int(ClockId(0), CmpOp::Eq, x))
}

#[test]
fn fig1_decisions() {
    let sys = fig1_at(q(1, 1), q(5, 2));
    assert!(decide(&sys, BoundValue::int(1), Mode::Weak).unwrap().opaque);
    let full = decide(&sys, BoundValue::int(1), Mode::Full).unwrap();
    assert!(!full.opaque);
    let w = full.witness.unwrap();
    // 0 is public only; the least differing duration.
    assert_eq!((w.cell.kind, w.cell.lower(), w.side), (CellKind::Point, q(0, 1), Side::NonSecret));
    assert!(decide(&fig1_at(q(0, 1), q(3, 1)), BoundValue::int(2), Mode::Full).unwrap().opaque);
}

#[test]
fn witness_lies_on_one_side_only() {
    for seed in 0..40 {
        let sys = gen_ta(&GenSpec::with_seed(seed));
        for mode in [Mode::Weak, Mode::Full] {
            let sets = crate::durations::class_durations(&sys, BoundValue::int(1)).unwrap();
            let v = decide(&sys, BoundValue::int(1), mode).unwrap();
            assert_eq!(v.opaque, v.witness.is_none());
            if let Some(w) = v.witness {
                let t = w.cell.sample();
                let in_secret = sets.secret.contains(t);
                let in_other = sets.expired.contains(t) || sets.public.contains(t);
                assert_ne!(in_secret, in_other);
                assert_eq!(in_secret, w.side == Side::Secret);
            }
        }
    }
}

#[test]
fn bands() {
    let sys = fig1_at(q(1, 1), q(5, 2));
    assert!(decide_real_band(&sys, 0, Mode::Weak).unwrap());
    let mut dead = sys.clone();
    dead.edges.retain(|e| e.target != dead.final_loc);
    for k in 0..4 {
        assert!(decide_real_band(&dead, k, Mode::Full).unwrap());
    }
}

#[test]
fn weak_sets() {
    assert_eq!(compute_weak_set(&fig1_at(q(1, 1), q(5, 2))).unwrap(), DeltaSet::All);
    assert!(!weak_emptiness(&fig1_at(q(1, 1), q(5, 2))).unwrap());

    // Every run takes 5; private runs enter the private location at time 0.
    let both = chain(
        "both",
        &["a", "p", "f"],
        vec![
            Edge::new(LocationId(0), LocationId(1)).with_guard(at(0)),
            Edge::new(LocationId(1), LocationId(2)).with_guard(at(5)),
            Edge::new(LocationId(0), LocationId(2)).with_guard(at(5)),
        ],
        1,
    );
    assert_eq!(compute_weak_set(&both).unwrap(), DeltaSet::All);

    // Secret-only duration 2 with lag 0, public duration 1.
    let secret_two = chain(
        "secret_two",
        &["a", "p", "f"],
        vec![
            Edge::new(LocationId(0), LocationId(1)).with_guard(at(2)),
            Edge::new(LocationId(1), LocationId(2)).with_guard(at(2)),
            Edge::new(LocationId(0), LocationId(2)).with_guard(at(1)),
        ],
        1,
    );
    let set = compute_weak_set(&secret_two).unwrap();
    let DeltaSet::Finite { members, includes_infinity } = &set else { panic!("expected finite") };
    assert!(!includes_infinity);
    // Lag 0 is never above Δ, so the secret set is {2} for every bound and
    // nothing covers it.
    assert!(members.is_empty());
    assert!(weak_emptiness(&secret_two).unwrap());

    let mut dead = fig1_at(q(1, 1), q(5, 2));
    dead.edges.retain(|e| e.target != dead.final_loc);
    assert_eq!(compute_weak_set(&dead).unwrap(), DeltaSet::All);
}

#[test]
fn weak_set_with_expiry() {
    // Private entered at 0, completion at 2: lag 2. Below 2 the run is
    // expired and there is no secret duration at all.
    let sys = chain(
        "expiry",
        &["a", "p", "f"],
        vec![
            Edge::new(LocationId(0), LocationId(1)).with_guard(at(0)),
            Edge::new(LocationId(1), LocationId(2)).with_guard(at(2)),
        ],
        1,
    );
    let set = compute_weak_set(&sys).unwrap();
    for (delta, expect) in [
        (BoundValue::int(0), true),
        (BoundValue::ratio(1, 2), true),
        (BoundValue::int(1), true),
        (BoundValue::ratio(3, 2), true),
        (BoundValue::int(2), false),
        (BoundValue::int(7), false),
        (BoundValue::Infinite, false),
    ] {
        assert_eq!(set.contains(delta), expect, "{delta}");
        assert_eq!(decide(&sys, delta, Mode::Weak).unwrap().opaque, expect, "{delta}");
    }
    assert_eq!(set.to_string(), "[0, 2)");
}

#[test]
fn full_emptiness_cases() {
    let r = full_emptiness(&fig1_at(q(0, 1), q(3, 1))).unwrap();
    assert!(r.nonempty && r.set.is_none());
    assert_eq!(r.exactness, Exactness::EmptinessOnly);

    let r = full_emptiness(&fig1_at(q(1, 1), q(5, 2))).unwrap();
    assert!(!r.nonempty && r.set.is_none());

    // Two private runs of duration 1, entering at 0 (lag 1) and at 1 (lag 0).
    // Below 1 the first is expired and matches the second; from 1 on both are
    // secret and nothing else ends at 1.
    let sys = chain(
        "two_lags",
        &["a", "p", "f"],
        vec![
            Edge::new(LocationId(0), LocationId(1)).with_guard(at(0)),
            Edge::new(LocationId(0), LocationId(1)).with_guard(at(1)),
            Edge::new(LocationId(1), LocationId(2)).with_guard(at(1)),
        ],
        1,
    );
    let weak = compute_weak_set(&sys).unwrap();
    assert!(weak != DeltaSet::All);
    let r = full_emptiness(&sys).unwrap();
    assert_eq!(r.exactness, Exactness::Exact);
    assert!(r.nonempty);
    let set = r.set.unwrap();
    assert_eq!(set.to_string(), "[0, 1)");
    assert_eq!(weak.to_string(), "[0, 1)");
    for k in 0..6 {
        let d = BoundValue::ratio(k, 2);
        assert_eq!(set.contains(d), decide(&sys, d, Mode::Full).unwrap().opaque, "{d}");
    }
}

#[test]
fn pta_pointwise() {
    let pta = fig1();
    let v = |p1: Rational, p2: Rational| ParamValuation::from_bindings(&pta, [("p1", p1), ("p2", p2)]).unwrap();
    assert!(decide_pta(&pta, &v(q(1, 1), q(5, 2)), BoundValue::int(1), Mode::Weak).unwrap().opaque);
    assert!(decide_pta(&pta, &v(q(0, 1), q(4, 1)), BoundValue::int(1), Mode::Full).unwrap().opaque);
    assert!(!decide_pta(&pta, &v(q(1, 1), q(5, 2)), BoundValue::int(1), Mode::Full).unwrap().opaque);
    assert!(decide_pta(&pta, &ParamValuation::new(), BoundValue::int(1), Mode::Full).is_err());
}

#[test]
fn sweeps() {
    let pta = fig1();
    let grid = [ParamRange::parse("p1=0..1:1").unwrap(), ParamRange::parse("p2=2.5..3:1/2").unwrap()];
    let report = sweep(&pta, &grid, &[BoundValue::int(1)], Mode::Full);
    let verdicts: Vec<bool> = report.rows.iter().map(|r| r.outcome.as_ref().unwrap().0).collect();
    assert_eq!(verdicts, vec![false, true, false, false]);
    assert_eq!(report.rows[1].valuation, vec![("p1".into(), q(0, 1)), ("p2".into(), q(3, 1))]);

    assert!(sweep(&pta, &grid, &[], Mode::Full).rows.is_empty());

    let unreachable = [ParamRange::parse("p1=4").unwrap(), ParamRange::parse("p2=2").unwrap()];
    let r = sweep(&pta, &unreachable, &[BoundValue::int(0)], Mode::Weak);
    assert_eq!(r.rows[0].outcome.as_ref().unwrap().0, true);

    let partial = [ParamRange::parse("p1=0").unwrap()];
    assert!(sweep(&pta, &partial, &[BoundValue::int(0)], Mode::Weak).rows[0].outcome.is_err());
    assert!(ParamRange::parse("p1=1..0").unwrap().values().is_empty());
    assert!(ParamRange::parse("p1=0..1:0").is_err());
    assert!(ParamRange::parse("nonsense").is_err());
}

#[test]
fn infinite_bound_ignores_expiry() {
    for seed in 0..30 {
        let sys = gen_ta(&GenSpec::with_seed(seed));
        let sets = crate::durations::class_durations(&sys, BoundValue::Infinite).unwrap();
        assert!(sets.expired.is_empty());
        let weak = decide(&sys, BoundValue::Infinite, Mode::Weak).unwrap().opaque;
        assert_eq!(weak, sets.secret.is_subset(&sets.public));
    }
}

#[test]
fn reductions_small_sample() {
    for seed in 0..25 {
        let sys = gen_ta(&GenSpec::with_seed(seed));
        for delta in [BoundValue::int(0), BoundValue::ratio(1, 2), BoundValue::int(1)] {
            let weak = decide(&sys, delta, Mode::Weak).unwrap().opaque;
            let full = decide(&sys, delta, Mode::Full).unwrap().opaque;
            let swap_weak = decide(&swap_transform(&sys, delta).unwrap(), delta, Mode::Weak).unwrap().opaque;
            let rev_full = decide(&swap_transform_reverse(&sys, delta).unwrap(), delta, Mode::Full).unwrap().opaque;
            assert_eq!(full, weak && swap_weak, "seed {seed} {delta}");
            assert_eq!(weak, rev_full, "seed {seed} {delta}");
        }
    }
}

#[test]
fn all_weak_set_holds_everywhere() {
    for seed in 0..30 {
        let sys = gen_ta(&GenSpec::with_seed(seed));
        if compute_weak_set(&sys).unwrap() != DeltaSet::All {
            continue;
        }
        for k in 0..8 {
            assert!(decide(&sys, BoundValue::int(k), Mode::Weak).unwrap().opaque);
            assert!(decide_real_band(&sys, k as u64, Mode::Weak).unwrap());
        }
    }
}
