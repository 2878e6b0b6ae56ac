//! Seeded Monte Carlo sweeps.
//!
//! Frame `f` at every Eb/N0 point draws its payload and unit-variance noise
//! from the streams of `(master_seed, f)`, so points share noise
//! realisations and results do not depend on the worker count. Frames run
//! in fixed-size batches; the stop rule is applied frame by frame in index
//! order after each batch.

mod report;

pub use report::{emit_report, to_csv, to_json, ReportPaths, CSV_HEADER};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{random_bits, transmit, ChannelModel, ChannelObservation, FrameStreams};
use crate::codec::{assemble_source, polar_encode};
use crate::construction::CodeSpec;
use crate::decoder::{ComplexityCounters, DecoderKind, ListDecoder};
use crate::error::{Error, Result};
use crate::pruning::{calibrate_static, PrunePolicy, StaticTable};

/// Frames decoded between two stop-rule checks.
pub const BATCH_FRAMES: u64 = 64;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub spec: CodeSpec,
    pub decoder: DecoderKind,
    pub policy: PrunePolicy,
    pub ebn0_db: Vec<f64>,
    pub master_seed: u64,
    pub max_frames: u64,
    pub min_frame_errors: u64,
    pub workers: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_frames == 0 {
            return Err(Error::config("max_frames must be at least 1"));
        }
        if self.min_frame_errors == 0 {
            return Err(Error::config("min_frame_errors must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::config("worker count must be at least 1"));
        }
        if let Some(x) = self.ebn0_db.iter().find(|x| !x.is_finite()) {
            return Err(Error::config(format!("Eb/N0 point {x} is not finite")));
        }
        ListDecoder::new(self.spec.clone(), self.decoder, self.policy.clone())?;
        Ok(())
    }
}

/// Outcome of one simulated frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub frame_error: bool,
    pub counters: ComplexityCounters,
    pub accumulated_loss: f64,
}

/// Totals at one Eb/N0 point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub ebn0_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub totals: ComplexityCounters,
    pub total_pde: f64,
}

impl PointStats {
    fn empty(ebn0_db: f64) -> Self {
        PointStats {
            ebn0_db,
            frames: 0,
            frame_errors: 0,
            totals: ComplexityCounters::default(),
            total_pde: 0.0,
        }
    }

    fn push(&mut self, t: &TrialResult) {
        self.frames += 1;
        self.frame_errors += u64::from(t.frame_error);
        self.totals += t.counters;
        self.total_pde += t.accumulated_loss;
    }

    pub fn fer(&self) -> f64 {
        if self.frames == 0 {
            return 0.0;
        }
        self.frame_errors as f64 / self.frames as f64
    }

    /// Normal-approximation 95% half-width.
    pub fn fer_ci95(&self) -> f64 {
        if self.frames == 0 {
            return 0.0;
        }
        let p = self.fer();
        1.96 * (p * (1.0 - p) / self.frames as f64).sqrt()
    }

    fn mean(&self, total: f64) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            total / self.frames as f64
        }
    }

    pub fn mean_metric_recursions(&self) -> f64 {
        self.mean(self.totals.metric_recursions as f64)
    }

    pub fn mean_path_copies(&self) -> f64 {
        self.mean(self.totals.path_copies as f64)
    }

    pub fn mean_pruned_paths(&self) -> f64 {
        self.mean(self.totals.pruned_paths as f64)
    }

    pub fn mean_sort_operations(&self) -> f64 {
        self.mean(self.totals.sort_operations as f64)
    }

    pub fn mean_pde(&self) -> f64 {
        self.mean(self.total_pde)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub points: Vec<PointStats>,
}

/// Source word and channel observation of frame `frame`.
pub fn simulate_frame(
    spec: &CodeSpec,
    channel: ChannelModel,
    streams: &FrameStreams,
    frame: u64,
) -> Result<(Vec<u8>, ChannelObservation)> {
    let payload = random_bits(&mut streams.payload(frame), spec.payload_len());
    let info = match spec.crc() {
        Some(c) => c.append(&payload),
        None => payload,
    };
    let u = assemble_source(spec, &info)?;
    let x = polar_encode(&u)?;
    let obs = transmit(&x, channel, &mut streams.noise(frame));
    Ok((u, obs))
}

/// Decodes frame `frame`; an error is any payload mismatch.
pub fn run_trial(decoder: &ListDecoder, channel: ChannelModel, streams: &FrameStreams, frame: u64) -> Result<TrialResult> {
    let spec = decoder.spec();
    let (u, obs) = simulate_frame(spec, channel, streams, frame)?;
    let out = decoder.decode(&obs)?;
    let sent = crate::codec::extract_info(spec, &u)?;
    Ok(TrialResult {
        frame_error: out.payload() != &sent[..spec.payload_len()],
        counters: out.counters,
        accumulated_loss: out.accumulated_loss,
    })
}

fn run_batch(
    decoder: &ListDecoder,
    channel: ChannelModel,
    streams: &FrameStreams,
    frames: std::ops::Range<u64>,
    pool: Option<&Pool>,
) -> Result<Vec<TrialResult>> {
    match pool {
        #[cfg(feature = "parallel")]
        Some(pool) => {
            use rayon::prelude::*;
            pool.0.install(|| {
                frames
                    .into_par_iter()
                    .map(|f| run_trial(decoder, channel, streams, f))
                    .collect()
            })
        }
        _ => frames.map(|f| run_trial(decoder, channel, streams, f)).collect(),
    }
}

#[cfg(feature = "parallel")]
struct Pool(rayon::ThreadPool);
#[cfg(not(feature = "parallel"))]
struct Pool;

fn make_pool(workers: usize) -> Result<Option<Pool>> {
    if workers <= 1 {
        return Ok(None);
    }
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map(|p| Some(Pool(p)))
            .map_err(|e| Error::config(format!("thread pool: {e}")))
    }
    #[cfg(not(feature = "parallel"))]
    {
        log::warn!("built without parallel support; running {workers} workers sequentially");
        Ok(None)
    }
}

/// Simulates every Eb/N0 point of `config`.
pub fn run_fer_sweep(config: &SimConfig) -> Result<AggregateStats> {
    config.validate()?;
    let decoder = ListDecoder::new(config.spec.clone(), config.decoder, config.policy.clone())?;
    let pool = make_pool(config.workers)?;
    let streams = FrameStreams::new(config.master_seed);
    let rate = config.spec.rate();
    let mut points = Vec::with_capacity(config.ebn0_db.len());
    for &ebn0 in &config.ebn0_db {
        let channel = ChannelModel::from_ebn0(ebn0, rate)?;
        let mut stats = PointStats::empty(ebn0);
        let mut next = 0u64;
        'point: while next < config.max_frames {
            let end = (next + BATCH_FRAMES).min(config.max_frames);
            for t in run_batch(&decoder, channel, &streams, next..end, pool.as_ref())? {
                stats.push(&t);
                if stats.frame_errors >= config.min_frame_errors {
                    break 'point;
                }
            }
            next = end;
        }
        log::info!(
            "Eb/N0 {ebn0} dB: {} errors in {} frames",
            stats.frame_errors,
            stats.frames
        );
        points.push(stats);
    }
    Ok(AggregateStats { points })
}

#[derive(Debug, Clone)]
pub struct CalibrationConfig {
    pub spec: CodeSpec,
    pub list_size: usize,
    pub ebn0_db: f64,
    pub n_frames: u64,
    pub master_seed: u64,
}

/// Calibrates a static table and, when `out` is given, writes it as JSON.
pub fn run_calibration(config: &CalibrationConfig, out: Option<&Path>) -> Result<StaticTable> {
    let channel = ChannelModel::from_ebn0(config.ebn0_db, config.spec.rate())?;
    let table = calibrate_static(
        &config.spec,
        channel,
        config.list_size,
        config.n_frames,
        FrameStreams::new(config.master_seed),
    )?;
    if let Some(path) = out {
        std::fs::write(path, serde_json::to_string_pretty(&table)?)?;
    }
    Ok(table)
}
