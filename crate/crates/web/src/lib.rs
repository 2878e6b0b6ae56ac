//! Browser bindings: reliability profiles, single-frame decode traces and
//! small FER sweeps, each returned as a JSON string.

use polar_prune::decoder::{DecodeObserver, LevelView};
use polar_prune::harness::{run_fer_sweep, simulate_frame, SimConfig};
use polar_prune::pruning::llr_budget;
use polar_prune::{
    evaluate_reliability_ga, select_information_set, ChannelModel, CodeSpec, CrcDef, DecoderKind, FrameStreams,
    ListDecoder, PrunePolicy, ReliabilityProfile,
};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest code the page accepts; keeps a sweep responsive.
pub const MAX_LOG2_LEN: u32 = 11;

type Result<T> = std::result::Result<T, String>;

fn check_params(log2_len: u32, k: usize) -> Result<f64> {
    if !(2..=MAX_LOG2_LEN).contains(&log2_len) {
        return Err(format!("log2 N must be in 2..={MAX_LOG2_LEN}"));
    }
    let len = 1usize << log2_len;
    if k <= 16 || k >= len {
        return Err(format!("K must be in 17..{len} (16 CRC bits are included)"));
    }
    Ok(k as f64 / len as f64)
}

fn profile(log2_len: u32, k: usize, design_db: f64) -> Result<(ReliabilityProfile, CodeSpec)> {
    let rate = check_params(log2_len, k)?;
    let p = evaluate_reliability_ga(log2_len, rate, design_db).map_err(|e| e.to_string())?;
    let spec = select_information_set(&p, k, None, Some(CrcDef::CCITT16)).map_err(|e| e.to_string())?;
    Ok((p, spec))
}

fn dynamic(p: &ReliabilityProfile, p_tol: f64) -> Result<PrunePolicy> {
    let budget = llr_budget(p, 1e-9 / p.len() as f64).map_err(|e| e.to_string())?;
    Ok(PrunePolicy::Dynamic { p_tol, budget })
}

/// Mean LLRs per bit channel and the chosen information set.
pub fn reliability_profile_json(log2_len: u32, k: usize, design_db: f64) -> Result<String> {
    let (p, spec) = profile(log2_len, k, design_db)?;
    Ok(json!({
        "mean_llr": p.values,
        "info_set": spec.info_set(),
    })
    .to_string())
}

#[derive(Default)]
struct Trace {
    list: Vec<usize>,
    loss: Vec<f64>,
}

impl DecodeObserver for Trace {
    fn on_level(&mut self, v: &LevelView<'_>) {
        self.list.push(v.metrics.len());
        self.loss.push(v.accumulated_loss);
    }
}

/// List size per level for one frame, without and with dynamic pruning.
pub fn decode_trace_json(log2_len: u32, k: usize, list_size: usize, ebn0_db: f64, p_tol: f64, seed: u64) -> Result<String> {
    let (p, spec) = profile(log2_len, k, ebn0_db)?;
    let channel = ChannelModel::from_ebn0(ebn0_db, spec.rate()).map_err(|e| e.to_string())?;
    let (u, obs) = simulate_frame(&spec, channel, &FrameStreams::new(seed), 0).map_err(|e| e.to_string())?;
    let kind = DecoderKind::CaScl { list_size };
    let mut runs = Vec::new();
    for policy in [PrunePolicy::Off, dynamic(&p, p_tol)?] {
        let dec = ListDecoder::new(spec.clone(), kind, policy).map_err(|e| e.to_string())?;
        let mut t = Trace::default();
        let out = dec.decode_observed(&obs, None, Some(&mut t)).map_err(|e| e.to_string())?;
        runs.push(json!({
            "list_size": t.list,
            "accumulated_loss": t.loss,
            "correct": out.u_hat == u,
            "metric_recursions": out.counters.metric_recursions,
            "path_copies": out.counters.path_copies,
            "pruned_paths": out.counters.pruned_paths,
        }));
    }
    let pruned = runs.pop();
    Ok(json!({
        "frozen": spec.frozen_mask(),
        "standard": runs.pop(),
        "pruned": pruned,
    })
    .to_string())
}

/// FER and mean complexity over an Eb/N0 grid for SC, standard and pruned CA-SCL.
#[allow(clippy::too_many_arguments)]
pub fn fer_sweep_json(
    log2_len: u32,
    k: usize,
    list_size: usize,
    p_tol: f64,
    start_db: f64,
    step_db: f64,
    points: usize,
    frames: u64,
    seed: u64,
) -> Result<String> {
    if !(1..=12).contains(&points) || !(step_db > 0.0) {
        return Err("need 1..=12 points and a positive step".into());
    }
    if !(1..=20_000).contains(&frames) {
        return Err("frames per point must be in 1..=20000".into());
    }
    let (p, spec) = profile(log2_len, k, start_db)?;
    let grid: Vec<f64> = (0..points).map(|i| start_db + i as f64 * step_db).collect();
    let mut out = serde_json::Map::new();
    out.insert("ebn0_db".into(), json!(grid));
    let runs = [
        ("sc", DecoderKind::Sc, PrunePolicy::Off),
        ("standard", DecoderKind::CaScl { list_size }, PrunePolicy::Off),
        ("pruned", DecoderKind::CaScl { list_size }, dynamic(&p, p_tol)?),
    ];
    for (name, decoder, policy) in runs {
        let stats = run_fer_sweep(&SimConfig {
            spec: spec.clone(),
            decoder,
            policy,
            ebn0_db: grid.clone(),
            master_seed: seed,
            max_frames: frames,
            min_frame_errors: u64::MAX,
            workers: 1,
        })
        .map_err(|e| e.to_string())?;
        out.insert(
            name.into(),
            json!({
                "fer": stats.points.iter().map(|q| q.fer()).collect::<Vec<_>>(),
                "mean_metric_recursions": stats.points.iter().map(|q| q.mean_metric_recursions()).collect::<Vec<_>>(),
            }),
        );
    }
    Ok(serde_json::Value::Object(out).to_string())
}

#[wasm_bindgen]
pub fn reliability_profile(log2_len: u32, k: usize, design_db: f64) -> std::result::Result<String, JsError> {
    reliability_profile_json(log2_len, k, design_db).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn decode_trace(log2_len: u32, k: usize, list_size: usize, ebn0_db: f64, p_tol: f64, seed: u64) -> std::result::Result<String, JsError> {
    decode_trace_json(log2_len, k, list_size, ebn0_db, p_tol, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn fer_sweep(
    log2_len: u32,
    k: usize,
    list_size: usize,
    p_tol: f64,
    start_db: f64,
    step_db: f64,
    points: usize,
    frames: u64,
    seed: u64,
) -> std::result::Result<String, JsError> {
    fer_sweep_json(log2_len, k, list_size, p_tol, start_db, step_db, points, frames, seed).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn profile_lists_the_information_set() {
        let v: Value = serde_json::from_str(&reliability_profile_json(6, 32, 2.0).unwrap()).unwrap();
        assert_eq!(v["mean_llr"].as_array().unwrap().len(), 64);
        assert_eq!(v["info_set"].as_array().unwrap().len(), 32);
        assert!(reliability_profile_json(12, 32, 2.0).is_err());
        assert!(reliability_profile_json(6, 8, 2.0).is_err());
    }

    #[test]
    fn trace_has_one_entry_per_level() {
        let v: Value = serde_json::from_str(&decode_trace_json(7, 64, 8, 1.5, 1e-3, 3).unwrap()).unwrap();
        for run in ["standard", "pruned"] {
            assert_eq!(v[run]["list_size"].as_array().unwrap().len(), 128);
        }
        assert_eq!(v["standard"]["pruned_paths"], 0);
        assert!(v["pruned"]["metric_recursions"].as_u64().unwrap() > 0);
    }

    #[test]
    fn sweep_reports_every_decoder() {
        let v: Value = serde_json::from_str(&fer_sweep_json(6, 32, 4, 1e-3, 1.0, 1.0, 2, 30, 1).unwrap()).unwrap();
        for run in ["sc", "standard", "pruned"] {
            assert_eq!(v[run]["fer"].as_array().unwrap().len(), 2);
        }
        assert!(fer_sweep_json(6, 32, 4, 1e-3, 1.0, 0.0, 2, 30, 1).is_err());
    }
}
