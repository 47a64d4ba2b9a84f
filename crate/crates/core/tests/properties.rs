use aar_core::construct::{bounded_target, weighted_merge, Rearrangement};
use aar_core::interval::{canonical_union, is_canonical, ClosedInterval};
use aar_core::num::{rat, ExtendedReal, Rational};
use aar_core::seq::{decompose, profile, SequenceSpec};
use aar_core::verify::{check_permutation, trace};
use num_traits::Signed;
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Rational> {
    (-30i64..=30, 1i64..=8).prop_map(|(p, q)| Rational::new(p.into(), q.into()))
}

fn point() -> impl Strategy<Value = ExtendedReal> {
    prop_oneof![
        1 => Just(ExtendedReal::NegInf),
        1 => Just(ExtendedReal::PosInf),
        8 => rational().prop_map(ExtendedReal::from),
    ]
}

fn interval() -> impl Strategy<Value = ClosedInterval> {
    (point(), point()).prop_map(|(a, b)| ClosedInterval::new(a.clone().min(b.clone()), a.max(b)).unwrap())
}

fn covered(parts: &[ClosedInterval], x: &ExtendedReal) -> bool {
    parts.iter().any(|iv| iv.contains(x))
}

proptest! {
    #[test]
    fn union_is_canonical_and_idempotent(parts in prop::collection::vec(interval(), 0..6)) {
        let u = canonical_union(parts.clone());
        prop_assert!(is_canonical(&u));
        prop_assert_eq!(canonical_union(u.clone()), u.clone());
        for iv in &parts {
            prop_assert!(covered(&u, &iv.lo) && covered(&u, &iv.hi));
        }
    }

    #[test]
    fn union_adds_no_points(parts in prop::collection::vec(interval(), 1..6), x in point()) {
        let u = canonical_union(parts.clone());
        prop_assert_eq!(covered(&u, &x), covered(&parts, &x));
    }

    #[test]
    fn weighted_merge_tracks_its_weight(p in 1i64..10, q in 1i64..10) {
        prop_assume!(p < q);
        let alpha = Rational::new(p.into(), q.into());
        let s = SequenceSpec::interleave(SequenceSpec::constant(rat(0)), SequenceSpec::constant(rat(1)));
        let d = decompose(&s, &profile(&s).unwrap()).unwrap();
        let part = |v: i64| Box::new(d.group(&rat(v).into()).unwrap().terms()) as Box<dyn Iterator<Item = _> + Send>;
        let mut w = weighted_merge((part(0), rat(0).into()), (part(1), rat(1).into()), &alpha).unwrap();
        let mut zeros = 0i64;
        for (m, t) in (&mut w).take(2000).enumerate() {
            zeros += i64::from(t.value == rat(0));
            let dev = (Rational::from_integer(zeros.into()) - &alpha * rat(m as i64 + 1)).abs();
            prop_assert!(dev <= rat(2), "count {} at {}", zeros, m + 1);
        }
    }

    #[test]
    fn bounded_prefixes_stay_in_range(lo in -5i64..5, width in 1i64..5, num in 0i64..=8) {
        let hi = lo + width;
        let s = SequenceSpec::interleave(SequenceSpec::constant(rat(lo)), SequenceSpec::constant(rat(hi)));
        let target = rat(lo) + Rational::new((num * width).into(), 8.into());
        let mut r = bounded_target(&s, &target).unwrap();
        let t = trace(&mut r, 500);
        for e in &t.entries {
            prop_assert!(e.average >= rat(lo) && e.average <= rat(hi));
        }
        let mut r = bounded_target(&s, &target).unwrap();
        // at an endpoint the other value is inserted exponentially rarely
        let probes: &[u64] = if num == 0 || num == 8 { &[] } else { &[10, 50] };
        prop_assert!(check_permutation(&mut r, 2000, probes).is_ok());
    }
}

#[test]
fn coverage_bound_is_honoured() {
    let s = SequenceSpec::interleave(SequenceSpec::constant(rat(0)), SequenceSpec::constant(rat(1)));
    let d = decompose(&s, &profile(&s).unwrap()).unwrap();
    let part = |v: i64| Box::new(d.group(&rat(v).into()).unwrap().terms()) as Box<dyn Iterator<Item = _> + Send>;
    let mut w = weighted_merge((part(0), rat(0).into()), (part(1), rat(1).into()), &Rational::new(1.into(), 5.into())).unwrap();
    let bound = w.coverage_bound(40).unwrap();
    let reports = check_permutation(&mut w, 10_000, &[40]).unwrap();
    assert!(reports[0].covered_at <= bound);
}
