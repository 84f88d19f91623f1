//! Browser front end for the simulator. Each operation has a plain Rust
//! entry point in [`api`] returning a serializable report, and a thin
//! `wasm_bindgen` export that takes primitives and returns the report as
//! JSON text.

use wasm_bindgen::prelude::*;

pub mod api;

fn to_js<T: serde::Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let report = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&report).map_err(|e| JsError::new(&e.to_string()))
}

/// Cost curves of all three algorithms on one random instance.
#[wasm_bindgen]
pub fn compare(agents: usize, density: f64, latency: &str, budget: u64, seed: u64) -> Result<String, JsError> {
    to_js(api::compare(&api::GraphParams { agents, density, seed }, latency, budget))
}

/// Per-step colorings and pairs of a LAMDLS-2 run. `graph` is `demo` or
/// `random`.
#[wasm_bindgen]
pub fn coloring(
    graph: &str,
    agents: usize,
    density: f64,
    latency: &str,
    steps: u64,
    seed: u64,
) -> Result<String, JsError> {
    let source = graph.parse().map_err(|e: String| JsError::new(&e))?;
    to_js(api::coloring(source, &api::GraphParams { agents, density, seed }, latency, steps))
}

/// Runs one algorithm on a small instance and compares its final assignment
/// with the exact optimum and the 2-opt check.
#[wasm_bindgen]
pub fn inspect(algo: &str, agents: usize, density: f64, domain: usize, latency: &str, seed: u64) -> Result<String, JsError> {
    let algo = algo.parse().map_err(|e: String| JsError::new(&e))?;
    to_js(api::inspect(algo, &api::GraphParams { agents, density, seed }, domain, latency))
}
