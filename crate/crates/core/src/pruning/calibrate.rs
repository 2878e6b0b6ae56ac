//! Monte Carlo calibration of the static threshold table.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, FrameStreams};
use crate::decoder::{DecodeObserver, DecoderKind, LevelView, ListDecoder};
use crate::error::{Error, Result};
use crate::harness::simulate_frame;
use crate::metric::logsumexp;
use crate::pruning::PrunePolicy;
use crate::CodeSpec;

/// Cap keeping calibrated thresholds strictly below one.
pub const ALPHA_MAX: f64 = 1.0 - 1e-12;

/// Calibrated per-level thresholds and the setting they were fitted to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticTable {
    pub code_hash: String,
    #[serde(rename = "L")]
    pub list_size: usize,
    pub sigma: f64,
    pub n_frames: u64,
    pub alpha: Vec<f64>,
}

impl StaticTable {
    /// Policy for a decode at noise level `sigma`; a mismatch with the
    /// calibration noise level is logged, not rejected.
    pub fn policy_for(&self, spec: &CodeSpec, list_size: usize, sigma: Option<f64>) -> Result<PrunePolicy> {
        if self.code_hash != spec.hash_hex() {
            return Err(Error::config("static table was calibrated for a different code"));
        }
        if self.list_size != list_size {
            log::warn!("static table calibrated for L = {}, decoding with L = {list_size}", self.list_size);
        }
        if let Some(s) = sigma {
            if (s - self.sigma).abs() > 1e-9 * self.sigma {
                log::warn!("static table calibrated at sigma = {}, decoding at sigma = {s}", self.sigma);
            }
        }
        let policy = PrunePolicy::Static {
            alpha: self.alpha.clone(),
        };
        policy.validate(spec.len())?;
        Ok(policy)
    }
}

/// Ratio of the true path's metric to the survivors' total, per level.
struct TruePathRatios {
    ratios: Vec<f64>,
}

impl DecodeObserver for TruePathRatios {
    fn on_level(&mut self, view: &LevelView<'_>) {
        let flags = view.on_true_path.expect("genie decode");
        if let Some(j) = flags.iter().position(|&f| f) {
            self.ratios[view.level] = (view.metrics[j] - logsumexp(view.metrics)).exp();
        }
    }
}

/// Runs standard list decoding over `n_frames` frames and, on every frame
/// decoded correctly, lowers each level's threshold to the true path's
/// metric share. Levels never observed stay at 0 (no pruning).
pub fn calibrate_static(
    spec: &CodeSpec,
    channel: ChannelModel,
    list_size: usize,
    n_frames: u64,
    streams: FrameStreams,
) -> Result<StaticTable> {
    if n_frames == 0 {
        return Err(Error::config("calibration needs at least one frame"));
    }
    let kind = if spec.crc().is_some() {
        DecoderKind::CaScl { list_size }
    } else {
        DecoderKind::Scl { list_size }
    };
    let decoder = ListDecoder::new(spec.clone(), kind, PrunePolicy::Off)?;
    let len = spec.len();
    let mut alpha = vec![1.0f64; len];
    let mut observed = vec![false; len];
    let mut correct = 0u64;
    for frame in 0..n_frames {
        let (u, obs) = simulate_frame(spec, channel, &streams, frame)?;
        let mut watch = TruePathRatios { ratios: vec![f64::NAN; len] };
        let out = decoder.decode_observed(&obs, Some(&u), Some(&mut watch))?;
        if out.u_hat != u {
            continue;
        }
        correct += 1;
        for (i, r) in watch.ratios.iter().enumerate() {
            if r.is_finite() {
                alpha[i] = alpha[i].min(*r);
                observed[i] = true;
            }
        }
    }
    if correct == 0 {
        return Err(Error::CalibrationFailed { frames: n_frames });
    }
    let alpha = alpha
        .iter()
        .zip(&observed)
        .map(|(&a, &seen)| if seen { a.min(ALPHA_MAX) } else { 0.0 })
        .collect();
    Ok(StaticTable {
        code_hash: spec.hash_hex(),
        list_size,
        sigma: match channel {
            ChannelModel::Biawgn { sigma } => sigma,
            ChannelModel::Bec { .. } => f64::NAN,
        },
        n_frames,
        alpha,
    })
}
