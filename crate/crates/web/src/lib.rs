//! Browser bindings. Every entry point takes an experiment config as JSON and
//! returns JSON: the report on success, `{"error": ..., "exit_code": ...}` otherwise.

use serde::Serialize;
use sflab::cli::commands::{run_dirac, run_flow, run_spectrum};
use sflab::cli::config::{Experiment, ExperimentConfig};
use sflab::cli::{exit_code, output::to_json};
use wasm_bindgen::prelude::*;

fn respond<T: Serialize>(config: &str, run: impl FnOnce(&Experiment) -> sflab::Result<T>) -> String {
    let result = ExperimentConfig::from_json(config)
        .and_then(|c| c.resolve())
        .and_then(|e| run(&e))
        .and_then(|r| to_json(&r));
    match result {
        Ok(s) => s,
        Err(e) => serde_json::json!({ "error": e.to_string(), "exit_code": exit_code(&e) }).to_string(),
    }
}

/// Eigenvalues of `H_t` on the t grid with their weights in both valleys.
#[wasm_bindgen]
pub fn spectrum(config: &str) -> String {
    respond(config, run_spectrum)
}

/// Total and partial spectral flows of the lattice family.
#[wasm_bindgen]
pub fn flow(config: &str) -> String {
    respond(config, run_flow)
}

/// Flows of the truncated Dirac families for both valleys.
#[wasm_bindgen]
pub fn dirac(config: &str) -> String {
    respond(config, run_dirac)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = r#"{"geometry": {"M": 4, "N": 12, "L": 1.0},
        "flux": {"q_final": 1}, "valley": {"d": 2}, "engine": {"t_samples": 8}}"#;

    fn parse(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn flow_round_trip() {
        let v = parse(&flow(CFG));
        assert_eq!(v["sf_L"], -1);
        assert_eq!(v["sf_Lprime"], 1);
    }

    #[test]
    fn spectrum_shape() {
        let v = parse(&spectrum(CFG));
        assert_eq!(v["t"].as_array().unwrap().len(), 9);
        assert_eq!(v["values"][0].as_array().unwrap().len(), 4 * 4 * 12);
    }

    #[test]
    fn dirac_and_errors() {
        let v = parse(&dirac(&CFG.replace(r#""valley": {"d": 2}, "#, "")));
        assert_eq!((v["K"].as_i64(), v["Kprime"].as_i64()), (Some(-1), Some(1)));
        let e = parse(&flow("{"));
        assert_eq!(e["exit_code"], 2);
        assert!(e["error"].is_string());
    }
}
