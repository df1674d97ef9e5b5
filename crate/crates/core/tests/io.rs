use floquet_ap::fleet;
use floquet_ap::io::*;
use floquet_ap::solver::{solve_ap, SolverConfig};
use serde_json::Value;

#[test]
fn fleet_models_survive_a_file_round_trip() {
    for key in fleet::KEYS {
        let model = fleet::model(key).unwrap();
        let text = deterministic(&ModelFile::from_model(&model).unwrap()).unwrap();
        let back = parse_model(&text).unwrap();
        assert_eq!(back.fingerprint(), model.fingerprint(), "{key}");
    }
}

#[test]
fn kernel_and_fourier_models_parse() {
    let text = r#"{
        "dimension": 1, "horizon_r": 2.0,
        "A": {"fourier_terms": [{"harmonic": 0, "matrix": [[[-1, 0]]]}, {"harmonic": 1, "matrix": [[[0.2, 0]]]}]},
        "delays": [{"tau": 2.0, "B": [[[0.1, 0]]]}],
        "kernel": {"order": 16, "terms": [{"harmonic": 0, "theta_power": 1, "matrix": [[[0.05, 0]]]}]},
        "forcing": {"dimension": 1, "terms": [{"frequency": 0.5, "re": [1], "im": [0]}]}
    }"#;
    let model = parse_model(text).unwrap();
    assert_eq!(model.horizon(), 2.0);
    assert!(model.delays().distributed.is_some());
    let again =
        parse_model(&deterministic(&ModelFile::from_model(&model).unwrap()).unwrap()).unwrap();
    assert_eq!(again.fingerprint(), model.fingerprint());
}

#[test]
fn solution_documents_round_trip_and_detect_edits() {
    let model = fleet::model_f();
    let sol = solve_ap(&model, &SolverConfig::default()).unwrap();
    let doc = solution_to_json(&sol);
    let text = to_deterministic_json(&doc);
    assert_eq!(
        text,
        to_deterministic_json(&serde_json::from_str::<Value>(&text).unwrap())
    );
    let back = solution_from_json(&model, &serde_json::from_str(&text).unwrap()).unwrap();
    assert!(back.fingerprint_matches);
    assert!(back.trajectory_mismatch < 1e-13);
    let mut edited: Value = serde_json::from_str(&text).unwrap();
    edited["components"][1]["trajectory"][5]["u"][0][1] = serde_json::json!(9.0);
    let back = solution_from_json(&model, &edited).unwrap();
    assert!(back.trajectory_mismatch > 1.0);
    let other = solution_from_json(&fleet::model_e(), &doc).unwrap();
    assert!(!other.fingerprint_matches);
    let mut broken = doc.clone();
    broken["format"] = serde_json::json!("something else");
    assert!(solution_from_json(&model, &broken).is_err());
}

#[test]
fn nonfinite_numbers_become_null() {
    let v = serde_json::json!({"x": 1.5});
    let mut v2 = v.clone();
    v2["y"] = serde_json::to_value(f64::INFINITY).unwrap();
    let text = to_deterministic_json(&v2);
    assert!(text.contains("\"y\": null"));
    assert!(text.contains("\"x\": 1.5000000000000000e0"));
}
