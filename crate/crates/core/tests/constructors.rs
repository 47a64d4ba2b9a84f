use aar_core::construct::{Goal, Options, Registry};
use aar_core::num::{rat, ratio, ExtendedReal};
use aar_core::seq::{RunRule, SequenceSpec};
use aar_core::verify::{check_permutation, check_tube, trace, Trace};

fn zero_one() -> SequenceSpec {
    SequenceSpec::interleave(SequenceSpec::constant(rat(0)), SequenceSpec::constant(rat(1)))
}

fn zeros_and(tail: SequenceSpec) -> SequenceSpec {
    SequenceSpec::interleave(SequenceSpec::constant(rat(0)), tail)
}

#[test]
fn registry_picks_a_strategy_per_goal() {
    let reg = Registry::default();
    let opts = Options::default();
    let cases = [
        (zero_one(), Goal::Target(ratio(1, 3).into()), "bounded-target"),
        (zero_one(), Goal::Oscillate, "oscillator"),
        (zeros_and(SequenceSpec::power(2).unwrap()), Goal::Target(rat(3).into()), "above-limsup"),
        (zeros_and(SequenceSpec::linear()), Goal::Target(ExtendedReal::PosInf), "accumulation-point"),
    ];
    for (spec, goal, want) in cases {
        let (name, _) = reg.build(&spec, &goal, None, &opts).unwrap();
        assert_eq!(name, want);
    }
}

#[test]
fn unknown_strategy_is_reported() {
    let reg = Registry::default();
    let err = reg.build(&zero_one(), &Goal::Oscillate, Some("nope"), &Options::default()).err().unwrap();
    assert!(err.to_string().contains("nope"));
}

#[test]
fn built_streams_are_permutations() {
    let reg = Registry::default();
    let sqrt = SequenceSpec::run_length(RunRule::CEIL_SQRT);
    let two = SequenceSpec::interleave(SequenceSpec::negate(sqrt.clone()), sqrt);
    let cases = [
        (zero_one(), Goal::Target(ratio(2, 5).into())),
        (zero_one(), Goal::Oscillate),
        (zeros_and(SequenceSpec::power(2).unwrap()), Goal::Target(rat(3).into())),
        (two, Goal::Target(rat(-2).into())),
    ];
    for (spec, goal) in cases {
        let (name, mut r) = reg.build(&spec, &goal, None, &Options::default()).unwrap();
        let reports = check_permutation(&mut r, 20_000, &[10, 100]);
        assert!(reports.is_ok(), "{name}: {reports:?}");
    }
}

#[test]
fn rescale_reaches_target_below_base() {
    let reg = Registry::default();
    let spec = zeros_and(SequenceSpec::linear());
    let (_, mut r) = reg.build(&spec, &Goal::Target(ratio(1, 2).into()), Some("rescale"), &Options::default()).unwrap();
    let t = trace(&mut r, 60_000);
    assert!(check_tube(&t, &ratio(1, 2).into(), &ratio(1, 20), 20_000));
    assert_eq!(t.recurrence_violation(), None);
}

#[test]
fn trace_csv_round_trips_exactly() {
    let reg = Registry::default();
    let (_, mut r) = reg.build(&zero_one(), &Goal::Target(ratio(1, 3).into()), None, &Options::default()).unwrap();
    let t = trace(&mut r, 300);
    assert_eq!(Trace::from_csv(&t.to_csv(true)).unwrap(), t);
}
