//! Three operations for the static demo page in `www/`.

use std::fmt::Write as _;

use cuspgrowth::h2::{self, HPoint};
use cuspgrowth::profiles::{CatalogParams, ExampleId};
use cuspgrowth::taxonomy::run_example;
use wasm_bindgen::prelude::*;

/// Distance, Busemann function and alignment time for two points of the
/// upper half-plane, as `key = value` lines.
pub fn point_pair(x_re: f64, x_im: f64, y_re: f64, y_im: f64) -> Result<String, String> {
    let x = HPoint::new(x_re, x_im).map_err(|e| e.to_string())?;
    let y = HPoint::new(y_re, y_im).map_err(|e| e.to_string())?;
    let d = h2::h2_distance(x, y);
    let b = h2::busemann_inf(x, y);
    let t = h2::t_xi(x, y);
    let mut s = String::new();
    let _ = writeln!(s, "distance = {d:.6}");
    let _ = writeln!(s, "busemann = {b:.6}");
    let _ = writeln!(s, "t_xi = {t:.6}");
    let _ = writeln!(s, "2t + |b| = {:.6}", 2.0 * t + b.abs());
    let _ = writeln!(s, "defect = {:.6}", d - 2.0 * t - b.abs());
    Ok(s)
}

/// Orbit and coset counts of Γ(2) as CSV; the radius is capped at 11 to keep
/// the page responsive.
pub fn group_counts(r: f64, delta: f64) -> Result<String, String> {
    if !(r > 0.0 && r <= 11.0) {
        return Err("radius must lie in (0, 11]".into());
    }
    h2::coset_counts(r, delta)
        .map(|rows| h2::counts_csv(&rows))
        .map_err(|e| e.to_string())
}

/// Growth classification of one example lattice as a text report.
pub fn example_report(name: &str, b: f64, gamma: f64, r_max: f64) -> Result<String, String> {
    let id: ExampleId = name.parse().map_err(|e: cuspgrowth::Error| e.to_string())?;
    let params = CatalogParams {
        b,
        gamma,
        ..CatalogParams::default()
    };
    let r = (r_max > 0.0).then_some(r_max);
    run_example(id, &params, r)
        .map(|rep| rep.to_text())
        .map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = pointPair)]
pub fn point_pair_js(x_re: f64, x_im: f64, y_re: f64, y_im: f64) -> Result<String, JsError> {
    point_pair(x_re, x_im, y_re, y_im).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = groupCounts)]
pub fn group_counts_js(r: f64, delta: f64) -> Result<String, JsError> {
    group_counts(r, delta).map_err(|e| JsError::new(&e))
}

/// `r_max <= 0` selects the example's default radius.
#[wasm_bindgen(js_name = exampleReport)]
pub fn example_report_js(name: &str, b: f64, gamma: f64, r_max: f64) -> Result<String, JsError> {
    example_report(name, b, gamma, r_max).map_err(|e| JsError::new(&e))
}
