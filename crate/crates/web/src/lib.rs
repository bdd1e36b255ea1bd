//! Browser bindings. Each operation has a plain Rust entry point returning a
//! JSON string, wrapped for JavaScript by `wasm_bindgen`.

use cotpath::bracket::{dirac_limit_bracket, DIRAC_GRID_INTERVALS};
use cotpath::cotangent::shoot_through;
use cotpath::{presets, suite, BivectorField, BoundaryKind, Grid};
use serde_json::json;
use wasm_bindgen::prelude::*;

pub const DIRAC_ORDERS: [u32; 4] = [4, 8, 16, 32];

fn preset(name: &str) -> Result<BivectorField, String> {
    presets::by_name(name).ok_or_else(|| format!("unknown field '{name}'"))
}

/// Shoots a cotangent path through `(q, p)` at `t = 1/2` and returns the
/// sampled path together with its defect.
pub fn shoot_json(field: &str, q: &[f64], p: &[f64], eps: f64, kind: &str, n: usize) -> Result<String, String> {
    let pi = preset(field)?;
    let kind: BoundaryKind = kind.parse().map_err(|e: cotpath::Error| e.to_string())?;
    let grid = Grid::new(n, kind).map_err(|e| e.to_string())?;
    let shot = shoot_through(&pi, q, p, eps, &grid).map_err(|e| e.to_string())?;
    let scale = shot.path.scale_for(&pi);
    Ok(json!({
        "t": grid.times(),
        "q": shot.path.q(),
        "p": shot.path.p(),
        "defect_over_scale": shot.defect_max / scale,
        "through_point_error": shot.through_point_error,
    })
    .to_string())
}

/// Brackets of constraint functionals with a concentrating profile, for
/// 1-based coordinate indices `r`, `s`.
pub fn dirac_json(field: &str, q: &[f64], p: &[f64], r: usize, s: usize) -> Result<String, String> {
    let pi = preset(field)?;
    if r == 0 || s == 0 || r > pi.dim() || s > pi.dim() {
        return Err(format!("indices must lie in 1..={}", pi.dim()));
    }
    let grid = Grid::semi_free(DIRAC_GRID_INTERVALS).map_err(|e| e.to_string())?;
    let lim = dirac_limit_bracket(&pi, r - 1, s - 1, q, p, &DIRAC_ORDERS, &grid).map_err(|e| e.to_string())?;
    let jp: f64 = pi
        .jacobiator(q)
        .map_err(|e| e.to_string())?
        .contract(r - 1, s - 1, p);
    Ok(json!({
        "d": lim.d,
        "values": lim.values,
        "limit": lim.limit,
        "jacobiator_contraction": jp,
        "scale": lim.scale,
    })
    .to_string())
}

/// Tangent cone probe for `x dx ^ dy` on a 128-interval loop.
pub fn counterexample_json(eps: f64, modes: usize) -> Result<String, String> {
    let report = suite::counterexample(eps, modes, 128).map_err(|e| e.to_string())?;
    Ok(report.to_json())
}

#[wasm_bindgen]
pub fn shoot(field: &str, q: &[f64], p: &[f64], eps: f64, kind: &str, n: usize) -> Result<String, JsValue> {
    shoot_json(field, q, p, eps, kind, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn dirac(field: &str, q: &[f64], p: &[f64], r: usize, s: usize) -> Result<String, JsValue> {
    dirac_json(field, q, p, r, s).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn counterexample(eps: f64, modes: usize) -> Result<String, JsValue> {
    counterexample_json(eps, modes).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn shoot_returns_a_path() {
        let out: Value = serde_json::from_str(&shoot_json("so3", &[0.3, 0.1, 0.9], &[0.0, 1.0, 0.5], 0.45, "periodic", 64).unwrap()).unwrap();
        assert_eq!(out["t"].as_array().unwrap().len(), 64);
        assert_eq!(out["q"][0].as_array().unwrap().len(), 3);
        assert!(out["defect_over_scale"].as_f64().unwrap() < 1e-6);
        assert!(shoot_json("nope", &[0.0], &[0.0], 0.45, "periodic", 64).is_err());
        assert!(shoot_json("so3", &[0.0; 3], &[0.0; 3], 0.45, "sideways", 64).is_err());
    }

    #[test]
    fn dirac_approaches_the_jacobiator() {
        let out: Value =
            serde_json::from_str(&dirac_json("non_poisson", &[0.0, 0.0, 2.0], &[0.0, 0.0, 1.0], 1, 2).unwrap()).unwrap();
        let last = out["values"][3].as_f64().unwrap();
        let jp = out["jacobiator_contraction"].as_f64().unwrap();
        assert!((last - jp).abs() < 0.05 * jp.abs());
        assert!(dirac_json("so3", &[0.0; 3], &[0.0; 3], 0, 1).is_err());
    }

    #[test]
    fn counterexample_report() {
        let out: Value = serde_json::from_str(&counterexample_json(1e-2, 8).unwrap()).unwrap();
        assert_eq!(out["overall"], true);
        assert!(counterexample_json(1.0, 8).is_err());
    }
}
