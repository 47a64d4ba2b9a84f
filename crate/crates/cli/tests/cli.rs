use std::path::Path;
use std::process::{Command, Output};

use aar_cli::dsl::{parse_spec, render};
use proptest::prelude::*;

fn aar(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aar")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn classify_prints_the_set() {
    let dir = tempfile::tempdir().unwrap();
    let o = aar(&["classify", "interleave(const(0), geom(2))"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "{0} ∪ {+inf}");
    let o = aar(&["classify", "interleave(const(0), const(1))"], dir.path());
    assert_eq!(stdout(&o).trim(), "[0, 1]");
}

#[test]
fn bad_spec_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = aar(&["classify", "geom(1/2)"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("ERROR "));
}

#[test]
fn construct_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let spec = "interleave(const(0), const(1))";
    let o = aar(&["construct", spec, "--target", "1/3", "--n", "20000", "--exact"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("strategy bounded-target"));
    assert!(dir.path().join("trace.csv").exists() && dir.path().join("trace.perm").exists());
    assert!(!dir.path().join("trace.schedule").exists());
    let o = aar(&["verify", "--tube", "1/3", "0.01", "--from", "1000", "--identities", "--distinct", "--cover", "100"], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
    let o = aar(&["verify", "--tube", "1/2", "0.01", "--from", "1000"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn identities_need_an_exact_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = aar(&["construct", "interleave(const(0), const(1))", "--oscillate", "--n", "500"], dir.path());
    assert!(o.status.success());
    let o = aar(&["verify", "--identities"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn realizer_schedule_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let spec = "interleave(interleave(const(0), const(1)), interleave(neg(pow(2)), pow(2)))";
    let o = aar(&["construct", spec, "--realize", "1/4, 3/4", "--n", "20000"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = aar(&["verify", "--schedule", "trace.schedule"], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn output_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["construct", "interleave(const(0), pow(2))", "--target", "3", "--n", "5000", "--exact"];
    for d in [&a, &b] {
        assert!(aar(&args, d.path()).status.success());
    }
    for ext in ["csv", "perm"] {
        let f = format!("trace.{ext}");
        assert_eq!(std::fs::read(a.path().join(&f)).unwrap(), std::fs::read(b.path().join(&f)).unwrap());
    }
}

#[test]
fn oracle_lists_averages() {
    let dir = tempfile::tempdir().unwrap();
    let o = aar(&["oracle", "0, 1, 1, 0", "2"], dir.path());
    assert_eq!(stdout(&o).trim(), "0, 1/2, 1");
}

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        (-9i64..9).prop_map(|v| format!("const({v})")),
        (1u32..4).prop_map(|k| format!("pow({k})")),
        (2i64..5).prop_map(|d| format!("geom({d})")),
        Just("linear()".to_string()),
        (1u32..=3, 1u32..=4).prop_map(|(v, m)| format!("runlen({v}, {m})")),
    ]
}

fn spec_text() -> impl Strategy<Value = String> {
    leaf().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|s| format!("neg({s})")),
            inner.clone().prop_map(|s| format!("square({s})")),
            (inner.clone(), 1i64..5, -3i64..3).prop_map(|(s, a, b)| format!("affine({s}, {a}, {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("interleave({a}, {b})")),
            (-5i64..5, inner).prop_map(|(v, s)| format!("prefix({v}, {s})")),
        ]
    })
}

proptest! {
    #[test]
    fn render_is_a_fixed_point(text in spec_text()) {
        if let Ok(spec) = parse_spec(&text) {
            let canon = render(&spec);
            prop_assert_eq!(parse_spec(&canon), Ok(spec));
            prop_assert_eq!(render(&parse_spec(&canon).unwrap()), canon);
        }
    }

    #[test]
    fn parser_never_panics(text in "[a-z(),0-9/ -]{0,40}") {
        if let Err(e) = parse_spec(&text) {
            prop_assert!(e.offset <= text.len());
        }
    }
}
