//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes plain strings or numbers and returns a JSON string; the
//! page renders it. The same functions are available natively with `String`
//! errors for testing.

use std::sync::OnceLock;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use fibrecross::entropy::{binary_entropy, objective};
use fibrecross::planner::{Mode, Planner};
use fibrecross::precision::DEFAULT_DIGITS;
use fibrecross::report::{family_payload, plan_payload};
use fibrecross::Rational;

/// Largest family the page will enumerate.
pub const FAMILY_CAP: u64 = 200_000;
const MAX_SAMPLES: u32 = 2_000;

fn planner() -> Result<&'static Planner, String> {
    static PLANNER: OnceLock<Result<Planner, String>> = OnceLock::new();
    PLANNER
        .get_or_init(|| Planner::new(DEFAULT_DIGITS).map_err(|e| e.to_string()))
        .as_ref()
        .map_err(Clone::clone)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct CurvePoint {
    x: f64,
    h: f64,
    f: f64,
}

#[derive(Serialize)]
struct Curve {
    points: Vec<CurvePoint>,
    x0: f64,
    c_star: f64,
    f_half: f64,
    bjp_upper: f64,
}

/// `H(x)` and `f(x) = 2x/H(x)^2` on `samples` evenly spaced points of
/// `(0, 1/2]`, with the minimizer marked.
pub fn curve_json(samples: u32) -> Result<String, String> {
    if !(2..=MAX_SAMPLES).contains(&samples) {
        return Err(format!("samples must be in [2, {MAX_SAMPLES}]"));
    }
    let points = (1..=samples)
        .map(|i| {
            let x = 0.5 * f64::from(i) / f64::from(samples);
            Ok(CurvePoint {
                x,
                h: binary_entropy(x).map_err(|e| e.to_string())?,
                f: objective(x).map_err(|e| e.to_string())?,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    let sol = planner()?.solution();
    to_json(&Curve { points, x0: sol.x0, c_star: sol.c_star, f_half: sol.f_half, bjp_upper: 2.25 })
}

/// Plan, side conditions and (when feasible) the certified bound.
pub fn plan_json(g: &str, alpha: &str, epsilon: &str, mode: &str, search: bool) -> Result<String, String> {
    let g: u64 = g.trim().parse().map_err(|_| format!("g must be an integer, got {g:?}"))?;
    let alpha: Rational = alpha.trim().parse().map_err(|e| format!("alpha: {e}"))?;
    let epsilon: Rational = epsilon.trim().parse().map_err(|e| format!("epsilon: {e}"))?;
    let mode: Mode = mode.parse().map_err(|e: fibrecross::Error| e.to_string())?;
    let payload = plan_payload(planner()?, g, &alpha, &epsilon, mode, search).map_err(|e| e.to_string())?;
    to_json(&payload)
}

/// Size, topology and pair-bound sums of the family `Gamma(p,q;k)`.
pub fn family_json(p: u32, q: u32, k: u32) -> Result<String, String> {
    to_json(&family_payload(p, q, k, FAMILY_CAP).map_err(|e| e.to_string())?)
}

#[wasm_bindgen(js_name = objectiveCurve)]
pub fn objective_curve(samples: u32) -> Result<String, JsError> {
    curve_json(samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = planExplorer)]
pub fn plan_explorer(g: &str, alpha: &str, epsilon: &str, mode: &str, search: bool) -> Result<String, JsError> {
    plan_json(g, alpha, epsilon, mode, search).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = familySummary)]
pub fn family_summary(p: u32, q: u32, k: u32) -> Result<String, JsError> {
    family_json(p, q, k).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn curve_has_minimum_marked() {
        let v: Value = serde_json::from_str(&curve_json(100).unwrap()).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 100);
        let c_star = v["c_star"].as_f64().unwrap();
        assert!(v["points"].as_array().unwrap().iter().all(|p| p["f"].as_f64().unwrap() >= c_star - 1e-12));
        assert!(curve_json(1).is_err());
    }

    #[test]
    fn plan_round_trip() {
        let v: Value = serde_json::from_str(&plan_json("10000", "0.2", "0.5", "optimized", true).unwrap()).unwrap();
        assert_eq!(v["feasible"], Value::Bool(true));
        assert!(plan_json("ten", "0.2", "0.5", "optimized", true).is_err());
        assert!(plan_json("10000", "0.2", "0.5", "sideways", true).is_err());
    }

    #[test]
    fn family_summary_hand_case() {
        let v: Value = serde_json::from_str(&family_json(3, 5, 3).unwrap()).unwrap();
        assert_eq!(v["exact_pair_bound_sum"], "1680");
        assert!(family_json(2, 4, 2).is_err());
        assert!(family_json(6, 30, 15).is_err());
    }
}
