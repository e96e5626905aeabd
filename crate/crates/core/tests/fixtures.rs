use serde_json::Value;
use tfe_core::fixtures::{verify, FixtureSet, FILES};

fn scale_coeff(s: &str, f: (i64, i64)) -> String {
    match s.split_once('/') {
        Some((n, d)) => format!("{}/{}", n.parse::<i64>().unwrap() * f.0, d.parse::<i64>().unwrap() * f.1),
        None => format!("{}/{}", s.parse::<i64>().unwrap() * f.0, f.1),
    }
}

#[test]
fn shipped_fixtures_pass() {
    let set = FixtureSet::builtin();
    let report = verify(&set);
    assert!(report.passed(), "{:?}", report.failures());
    assert_eq!(report.checks.len(), 10 + 5 + 3 + 7);
    let dir = format!("{}/fixtures", env!("CARGO_MANIFEST_DIR"));
    assert_eq!(FixtureSet::load_dir(dir.as_ref()).unwrap(), set);
}

#[test]
fn round_trip_through_directory() {
    let dir = std::env::temp_dir().join(format!("tfe-fixtures-{}", std::process::id()));
    let set = FixtureSet::builtin();
    set.write_dir(&dir).unwrap();
    for f in FILES {
        assert!(dir.join(f).exists());
    }
    assert_eq!(FixtureSet::load_dir(&dir).unwrap(), set);
    std::fs::remove_dir_all(&dir).unwrap();
    assert!(FixtureSet::load_dir(&dir).is_err());
}

#[test]
fn perturbed_coefficient_fails() {
    let mut set = FixtureSet::builtin();
    let c = &mut set.hierarchy["cases"][1]["terms"][1]["coeff"];
    *c = Value::String(scale_coeff(c.as_str().unwrap(), (101, 100)));
    let report = verify(&set);
    assert_eq!(report.failures().len(), 1);
    assert_eq!(report.failures()[0].item, "f0+f1");
    let err = report.into_result().unwrap_err();
    assert!(matches!(err, tfe_core::Error::Consistency(_)));
}

#[test]
fn perturbed_row_weight_fails() {
    let mut set = FixtureSet::builtin();
    set.d0_rows["cases"][0]["row"][0]["weight"] = serde_json::json!(2.02);
    assert_eq!(verify(&set).failures().len(), 1);
}

#[test]
fn perturbed_constant_fails() {
    for i in [0usize, 1, 2, 4, 5, 6] {
        let mut set = FixtureSet::builtin();
        let v = set.constants["targets"][i]["value"].as_f64().unwrap();
        set.constants["targets"][i]["value"] = serde_json::json!(v * 1.01);
        let report = verify(&set);
        assert_eq!(report.failures().len(), 1, "target {i}");
    }
}

#[test]
fn altered_candidate_set_fails() {
    let mut set = FixtureSet::builtin();
    set.candidates["set"][0] = Value::String("e1+f0+f1".into());
    assert_eq!(verify(&set).failures().len(), 3);
}

#[test]
fn malformed_fixture_is_a_failure_not_a_panic() {
    let mut set = FixtureSet::builtin();
    set.hierarchy["cases"][0]["terms"][0]["kind"] = Value::String("bogus".into());
    set.constants["targets"][0]["mollifier"] = Value::String("box".into());
    assert_eq!(verify(&set).failures().len(), 2);
}
