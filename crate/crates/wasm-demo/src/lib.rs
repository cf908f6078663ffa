//! Browser bindings. Every function returns a JSON string; failures are
//! reported as `{"error": "..."}`.

use fqcircle_core::algebra::field;
use fqcircle_core::arcs::{artinian_count_enum, artinian_count_formula, cone_points};
use fqcircle_core::certificates::{frontier_scan, threshold_e, threshold_n, verify_thresholds, ParameterTuple};
use fqcircle_core::{Budget, SymmetricForm};
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

/// Enumeration cap for the in-browser Artinian counts.
const DEMO_BUDGET: Budget = Budget { max_enum: 1 << 22 };
const MAX_FRONTIER_SPAN: u32 = 2000;

fn render(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn threshold_curve_value(d: u32, g_max: u32) -> Result<Value, String> {
    if !(2..=6).contains(&d) || !(1..=50).contains(&g_max) {
        return Err("need 2 ≤ d ≤ 6 and 1 ≤ g_max ≤ 50".into());
    }
    let n = threshold_n(d) as u32;
    let points = (1..=g_max)
        .map(|g| {
            let e = threshold_e(d, g) as u32;
            let v = verify_thresholds(&ParameterTuple::new(n, d, e, g)).map_err(|e| e.to_string())?;
            Ok(json!({ "g": g, "e": e, "pass": v.pass && v.all_valid }))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(json!({ "d": d, "n": n, "points": points }))
}

/// Least `e` from the hypothesis table for `g = 1..=g_max`, with the verifier's verdict.
#[wasm_bindgen]
pub fn threshold_curve(d: u32, g_max: u32) -> String {
    render(threshold_curve_value(d, g_max))
}

fn frontier_value(n: u32, d: u32, g: u32, e_min: u32, e_max: u32) -> Result<Value, String> {
    if e_min > e_max || e_max - e_min > MAX_FRONTIER_SPAN {
        return Err(format!("need e_min ≤ e_max and a span of at most {MAX_FRONTIER_SPAN}"));
    }
    let f = frontier_scan(n, d, g, e_min..=e_max).map_err(|e| e.to_string())?;
    serde_json::to_value(&f).map_err(|e| e.to_string())
}

/// Pass/fail of the minor-arc inequality for each `e` in `[e_min, e_max]`.
#[wasm_bindgen]
pub fn frontier(n: u32, d: u32, g: u32, e_min: u32, e_max: u32) -> String {
    render(frontier_value(n, d, g, e_min, e_max))
}

fn artinian_value(p: u32, d: u32, n: u32, r_max: u32) -> Result<Value, String> {
    if !(1..=6).contains(&r_max) || !(1..=3).contains(&n) {
        return Err("need 1 ≤ r_max ≤ 6 and 1 ≤ n ≤ 3".into());
    }
    let kappa = field(p, 1).map_err(|e| e.to_string())?;
    let spec = (0..=n).map(|i| format!("x{i}^{d}")).collect::<Vec<_>>().join("+");
    let form = SymmetricForm::parse(&kappa, n as usize, &spec).map_err(|e| e.to_string())?;
    let cx = cone_points(&form, &kappa, &DEMO_BUDGET).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for r in 1..=r_max {
        let formula = artinian_count_formula(&form, &kappa, r, &DEMO_BUDGET).map_err(|e| e.to_string())?;
        let enumerated = artinian_count_enum(&form, &kappa, r, &DEMO_BUDGET).ok().map(|c| c.to_string());
        rows.push(json!({
            "r": r,
            "formula": formula.count.to_string(),
            "normalized": formula.normalized.to_string(),
            "enumerated": enumerated,
        }));
    }
    Ok(json!({ "p": p, "d": d, "n": n, "form": spec, "cone_points": cx.to_string(), "rows": rows }))
}

/// Points of the diagonal cone `Σ x_i^d = 0` over `F_p[t]/t^r`: closed form,
/// and direct enumeration while it fits the demo budget.
#[wasm_bindgen]
pub fn artinian_counts(p: u32, d: u32, n: u32, r_max: u32) -> String {
    render(artinian_value(p, d, n, r_max))
}
