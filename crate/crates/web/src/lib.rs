//! Browser bindings: optimize a small scene and show its beam pattern,
//! compare fixed and aligned phase-shifter settings, and trace the gain
//! increment as elements are added to each RHS.

use isac_core::analysis::{gain_increment_profile, increment_setup, install_optimal_phases, phase_alignment, AmplitudeRule};
use isac_core::array::ChannelParams;
use isac_core::experiments::beam_pattern_grid;
use isac_core::metrics::{compose, sensing_gain};
use isac_core::optimizer::run;
use isac_core::scenario::{initial_for, random_instance, random_scenario, sub_rng, ScenarioTemplate};
use isac_core::{OptimizerParams, Problem, SystemConfig};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn to_js(r: isac_core::Result<Value>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

fn scene_config(elements: usize, rate_threshold: f64, snr_db: f64) -> SystemConfig {
    SystemConfig { elements_per_rhs: elements, rate_threshold, ..SystemConfig::default() }.with_snr_db(snr_db)
}

/// Runs the optimizer on the random scene `seed` and returns the trace,
/// final gains and rates, targets, and the sensing pattern on a grid of
/// `resolution` degrees.
#[wasm_bindgen]
pub fn optimize_scene(seed: u32, elements: usize, rate_threshold: f64, snr_db: f64, resolution: f64) -> Result<String, JsError> {
    to_js(scene(seed, elements, rate_threshold, snr_db, resolution))
}

fn scene(seed: u32, elements: usize, rate_threshold: f64, snr_db: f64, resolution: f64) -> isac_core::Result<Value> {
    let cfg = scene_config(elements, rate_threshold, snr_db);
    cfg.validate()?;
    let seed = seed as u64;
    let scn = random_scenario(&cfg, &ScenarioTemplate::default(), seed);
    let res = run(&scn, &cfg, &OptimizerParams::default(), &initial_for(&cfg, seed))?;
    let eval = Problem::new(&cfg, &scn)?.evaluate(&res.beamformer);
    let grid = beam_pattern_grid(&res.beamformer, &cfg, resolution)?;
    let targets: Vec<Value> = scn
        .sense_dirs
        .iter()
        .zip(&scn.desired_gains)
        .zip(&eval.gains)
        .map(|((d, b), g)| {
            json!({"elevation_deg": d.elevation.to_degrees(), "azimuth_deg": d.azimuth.to_degrees(), "desired": b, "gain": g})
        })
        .collect();
    Ok(json!({
        "converged": res.converged,
        "iterations": res.iterations,
        "sensing_error": eval.sensing_error(),
        "rates": eval.rates,
        "trace": res.trace,
        "targets": targets,
        "pattern": {
            "resolution": resolution,
            "rows": (90.0 / resolution).round() as usize + 1,
            "cols": (360.0 / resolution).round() as usize,
            "gain": grid.iter().map(|r| r.gain).collect::<Vec<_>>(),
        },
    }))
}

/// Fixed-phase gain against the aligned optimum toward the first sensing
/// direction for `count` random instances.
#[wasm_bindgen]
pub fn phase_alignment_demo(seed: u32, elements: usize, count: usize) -> Result<String, JsError> {
    to_js(alignment(seed, elements, count))
}

fn alignment(seed: u32, elements: usize, count: usize) -> isac_core::Result<Value> {
    let cfg = SystemConfig { elements_per_rhs: elements, ..SystemConfig::default() };
    cfg.validate()?;
    let mut rng = sub_rng(seed as u64, 0x77);
    let points: Vec<Value> = (0..count)
        .map(|_| {
            let (scn, bf) = random_instance(&cfg, &ChannelParams::default(), &mut rng);
            let dir = scn.sense_dirs[0];
            let an = phase_alignment(&bf, &dir, &cfg);
            let installed = sensing_gain(&compose(&install_optimal_phases(&bf, &an)), &dir, &cfg);
            json!({"fixed": an.fixed_gain, "aligned": an.aligned_gain, "installed": installed})
        })
        .collect();
    Ok(json!({ "points": points }))
}

/// Gain and per-element increment for `L = 1..=max_elements` under the
/// given feed efficiency and radiation probability.
#[wasm_bindgen]
pub fn gain_increment_curve(seed: u32, efficiency: f64, radiation_prob: f64, max_elements: usize) -> Result<String, JsError> {
    to_js(increments(seed, efficiency, radiation_prob, max_elements))
}

fn increments(seed: u32, efficiency: f64, radiation_prob: f64, max_elements: usize) -> isac_core::Result<Value> {
    let cfg = SystemConfig { radiation_efficiency: efficiency, radiation_prob, ..SystemConfig::default() };
    cfg.validate()?;
    let capacity = max_elements.max(8) + 1;
    let setup = increment_setup(&cfg, &ScenarioTemplate::default(), seed as u64, capacity, AmplitudeRule::Aligned);
    let prof = gain_increment_profile(&cfg, &setup, 1..=capacity - 1)?;
    Ok(json!({
        "elements": prof.entries.iter().map(|e| e.elements).collect::<Vec<_>>(),
        "gain": prof.entries.iter().map(|e| e.gain).collect::<Vec<_>>(),
        "increment": prof.entries.iter().map(|e| e.increment).collect::<Vec<_>>(),
        "tolerance": prof.tolerance,
        "saturation": prof.saturation,
    }))
}
