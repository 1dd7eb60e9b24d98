use serde_json::Value;
use whichway_wasm::api::{excess_sweep, guessing_game, knowledge_curves, MAX_SAMPLES};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn curves_have_one_value_per_phase() {
    let v = parse(knowledge_curves(0.5, 9, 200, 1).unwrap());
    for key in ["delta_rad", "natural", "canonical", "simplified", "ff"] {
        assert_eq!(v[key].as_array().unwrap().len(), 9, "{key}");
    }
    assert_eq!(v["natural"][4].as_f64().unwrap(), 1.0);
    let ff = v["ff"].as_array().unwrap();
    let simplified = v["simplified"].as_array().unwrap();
    for (f, s) in ff.iter().zip(simplified) {
        assert!(f.as_f64().unwrap() >= s.as_f64().unwrap() - 1e-9);
    }
}

#[test]
fn curves_reject_bad_input() {
    assert!(knowledge_curves(1.0, 9, 10, 1).is_err());
    assert!(knowledge_curves(0.5, 9, MAX_SAMPLES + 1, 1).is_err());
    assert!(knowledge_curves(0.5, 1, 10, 1).is_err());
}

#[test]
fn sweep_reports_peaks() {
    let v = parse(excess_sweep(5, 9, 100, 3).unwrap());
    assert_eq!(v["records"].as_array().unwrap().len(), 5);
    let peak = v["peak_simplified_refined"]["excess"].as_f64().unwrap();
    assert!((peak - 1.016).abs() < 5e-4);
    assert!(excess_sweep(1, 9, 100, 3).is_err());
}

#[test]
fn game_is_reproducible() {
    let a = guessing_game(0.5, "canonical", 20_000, 4).unwrap();
    assert_eq!(a, guessing_game(0.5, "canonical", 20_000, 4).unwrap());
    let k = &parse(a)["knowledge"];
    assert!(k["z"].as_f64().unwrap().abs() < 4.0);
    assert!(guessing_game(0.5, "diagonal", 10, 4).is_err());
    assert!(guessing_game(0.5, "natural", 0, 4).is_err());
}
