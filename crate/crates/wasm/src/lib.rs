//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string. The plain functions in [`api`] do the
//! work so they can be tested natively.

use wasm_bindgen::prelude::*;

pub mod api {
    use serde::Serialize;
    use whichway::circuit::{run_guessing_game, summarize_game, GameSummary};
    use whichway::feedforward::{
        analytic_curve, delta_grid, ff_curve, sweep_visibility, OptimizerConfig, Protocol, Sweep,
    };
    use whichway::knowledge::{canonical_basis, natural_basis};
    use whichway::model::DetectorCoupling;
    use whichway::rng::stream;

    /// Browser budgets stay small so a click answers within a second or two.
    pub const MAX_SAMPLES: usize = 20_000;
    pub const MAX_DELTA_POINTS: usize = 200;
    pub const MAX_SHOTS: u64 = 2_000_000;
    pub const MAX_GRID_POINTS: usize = 40;

    #[derive(Serialize)]
    pub struct Curves {
        pub visibility: f64,
        pub delta_rad: Vec<f64>,
        pub natural: Vec<f64>,
        pub canonical: Vec<f64>,
        pub simplified: Vec<f64>,
        pub ff: Vec<f64>,
    }

    fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
        serde_json::to_string(value).map_err(|e| e.to_string())
    }

    fn check_budget(name: &str, value: usize, max: usize) -> Result<(), String> {
        if value > max {
            Err(format!("{name} = {value} exceeds the demo limit of {max}"))
        } else {
            Ok(())
        }
    }

    fn config(samples: usize, delta_points: usize, seed: u64) -> Result<OptimizerConfig, String> {
        check_budget("samples", samples, MAX_SAMPLES)?;
        check_budget("delta points", delta_points, MAX_DELTA_POINTS)?;
        Ok(OptimizerConfig { samples_per_delta: samples, delta_points, seed, ..OptimizerConfig::default() })
    }

    /// All four `K(δ)` curves at one visibility.
    pub fn knowledge_curves(visibility: f64, delta_points: usize, samples: usize, seed: u64) -> Result<String, String> {
        if !(0.0..1.0).contains(&visibility) {
            return Err(format!("visibility {visibility} must lie in [0, 1)"));
        }
        let cfg = config(samples, delta_points, seed)?;
        let values = |p| analytic_curve(visibility, p, delta_points).map(|c| c.values).map_err(|e| e.to_string());
        let curves = Curves {
            visibility,
            delta_rad: delta_grid(delta_points),
            natural: values(Protocol::Natural)?,
            canonical: values(Protocol::Canonical)?,
            simplified: values(Protocol::Simplified)?,
            ff: ff_curve(visibility, &cfg).map_err(|e| e.to_string())?.values,
        };
        to_json(&curves)
    }

    /// Phase-averaged knowledge and excess on `points` visibilities spread
    /// evenly over `[0, 0.95]`.
    pub fn excess_sweep(points: usize, delta_points: usize, samples: usize, seed: u64) -> Result<String, String> {
        if points < 2 {
            return Err("need at least two visibilities".into());
        }
        check_budget("visibilities", points, MAX_GRID_POINTS)?;
        let cfg = config(samples, delta_points, seed)?;
        let grid: Vec<f64> = (0..points).map(|i| 0.95 * i as f64 / (points - 1) as f64).collect();
        let sweep: Sweep = sweep_visibility(&grid, &cfg).map_err(|e| e.to_string())?;
        to_json(&sweep)
    }

    /// Circuit-level path-guessing game against the analytic predictions.
    pub fn guessing_game(visibility: f64, basis: &str, shots: u64, seed: u64) -> Result<String, String> {
        if shots == 0 || shots > MAX_SHOTS {
            return Err(format!("shots must lie in 1..={MAX_SHOTS}"));
        }
        let c = DetectorCoupling::from_visibility(visibility).map_err(|e| e.to_string())?;
        let b = match basis {
            "natural" => natural_basis(),
            "canonical" => canonical_basis(c).map_err(|e| e.to_string())?,
            other => return Err(format!("unknown basis '{other}'")),
        };
        let game = run_guessing_game(c.theta(), &b, shots, &mut stream(seed)).map_err(|e| e.to_string())?;
        let summary: GameSummary = summarize_game(&game, &b, c).map_err(|e| e.to_string())?;
        to_json(&summary)
    }
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = knowledgeCurves)]
pub fn knowledge_curves(visibility: f64, delta_points: usize, samples: usize, seed: u32) -> Result<String, JsValue> {
    js(api::knowledge_curves(visibility, delta_points, samples, u64::from(seed)))
}

#[wasm_bindgen(js_name = excessSweep)]
pub fn excess_sweep(points: usize, delta_points: usize, samples: usize, seed: u32) -> Result<String, JsValue> {
    js(api::excess_sweep(points, delta_points, samples, u64::from(seed)))
}

#[wasm_bindgen(js_name = guessingGame)]
pub fn guessing_game(visibility: f64, basis: &str, shots: u32, seed: u32) -> Result<String, JsValue> {
    js(api::guessing_game(visibility, basis, u64::from(shots), u64::from(seed)))
}
