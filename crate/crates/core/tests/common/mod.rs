//! Checks shared by the integration tests and the acceptance report.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use polar_prune::channel::{random_bits, transmit};
use polar_prune::decoder::{DecodeObserver, LevelView};
use polar_prune::harness::{run_fer_sweep, simulate_frame, SimConfig};
use polar_prune::metric::{extend_path_metrics, log_sigmoid, logsumexp, PathWorkspace};
use polar_prune::pruning::{apply_static_rule, llr_budget, select_prune_set};
use polar_prune::*;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

pub type Check = std::result::Result<(), String>;

pub const REFERENCE_P_LLR_NUMERATOR: f64 = 1e-9;

pub fn ga_profile(n: u32, rate: f64, design_db: f64) -> ReliabilityProfile {
    evaluate_reliability_ga(n, rate, design_db).unwrap()
}

pub fn ga_code(n: u32, k: usize, design_db: f64, crc: Option<CrcDef>) -> CodeSpec {
    let rate = k as f64 / f64::from(1u32 << n);
    select_information_set(&ga_profile(n, rate, design_db), k, None, crc).unwrap()
}

/// (1024, 512) with CRC-16 inside the information set, designed at 1.5 dB.
pub fn reference_code() -> CodeSpec {
    ga_code(10, 512, 1.5, Some(CrcDef::CCITT16))
}

/// Budgets at `p_llr = 1e-9 / N` for a GA code designed at `design_db`.
pub fn reference_budget(spec: &CodeSpec, design_db: f64) -> LlrBudget {
    let n = spec.log2_len();
    llr_budget(&ga_profile(n, spec.rate(), design_db), REFERENCE_P_LLR_NUMERATOR / spec.len() as f64).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `ln P(u_1^i | y)` for every prefix of length `i`, by summing over all
/// source words (uniform prior, no frozen constraint).
pub fn brute_force_prefix_metrics(llr: &[f64], i: usize) -> Vec<f64> {
    let len = llr.len();
    let n = len.trailing_zeros();
    let mut word_ll = vec![0.0; 1 << len];
    for (w, ll) in word_ll.iter_mut().enumerate() {
        let u: Vec<u8> = (0..len).map(|b| ((w >> b) & 1) as u8).collect();
        let x = polar_encode(&u).unwrap();
        *ll = x.iter().zip(llr).map(|(&b, &l)| log_sigmoid(if b == 0 { l } else { -l })).sum();
    }
    let total = logsumexp(&word_ll);
    let _ = n;
    (0..1usize << i)
        .map(|prefix| {
            let ext: Vec<f64> = (0..1usize << (len - i)).map(|s| word_ll[prefix | (s << i)]).collect();
            logsumexp(&ext) - total
        })
        .collect()
}

/// Recursive metrics of every prefix, bits packed little-endian as above.
pub fn decoder_prefix_metrics(llr: &[f64]) -> Vec<Vec<f64>> {
    let len = llr.len();
    let mut levels = vec![vec![0.0]];
    let mut states = vec![(PathWorkspace::new(llr), 0.0)];
    let mut recursions = 0;
    for level in 0..len {
        let mut next_states = Vec::new();
        let mut metrics = vec![0.0; 1 << (level + 1)];
        for (prefix, (ws, m)) in states.into_iter().enumerate() {
            let mut ws = ws;
            let [m0, m1] = extend_path_metrics(&mut ws, level, m, None, &mut recursions);
            for (bit, mb) in [(0u8, m0), (1u8, m1)] {
                let mut child = ws.fork_eager();
                child.update_partial_sums(level, bit);
                let idx = prefix | (usize::from(bit) << level);
                metrics[idx] = mb;
                next_states.push((idx, child, mb));
            }
        }
        next_states.sort_by_key(|s| s.0);
        states = next_states.into_iter().map(|(_, w, m)| (w, m)).collect();
        levels.push(metrics);
    }
    levels
}

/// Worst relative mismatch between recursive and brute-force metrics over
/// `frames` random frames at length `2^n`.
pub fn metric_oracle_mismatch(n: u32, frames: u64, seed: u64) -> f64 {
    let len = 1usize << n;
    let mut worst = 0.0f64;
    for f in 0..frames {
        let streams = FrameStreams::new(seed);
        let x = random_bits(&mut streams.payload(f), len);
        let obs = transmit(&x, ChannelModel::biawgn(0.9).unwrap(), &mut streams.noise(f));
        let rec = decoder_prefix_metrics(&obs.llr);
        for i in 1..=len {
            let brute = brute_force_prefix_metrics(&obs.llr, i);
            for (a, b) in rec[i].iter().zip(&brute) {
                let rel = (a - b).abs() / b.abs().max(1e-300);
                worst = worst.max(rel);
            }
        }
    }
    worst
}

/// Maximum-likelihood source word by enumeration.
pub fn brute_force_ml(spec: &CodeSpec, llr: &[f64]) -> Vec<u8> {
    let k = spec.k();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for w in 0..1usize << k {
        let info: Vec<u8> = (0..k).map(|b| ((w >> b) & 1) as u8).collect();
        let u = assemble_source(spec, &info).unwrap();
        let x = polar_encode(&u).unwrap();
        let score: f64 = x.iter().zip(llr).map(|(&b, &l)| if b == 0 { l } else { -l }).sum();
        if score > best.0 {
            best = (score, u);
        }
    }
    best.1
}

/// ML agreement of a full list at N = 8, K = 4, L = 16.
pub fn check_ml_agreement(frames: u64, ebn0_db: f64, seed: u64) -> Check {
    let spec = select_information_set(&evaluate_reliability_bec(3, 0.5).unwrap(), 4, None, None).unwrap();
    let dec = ListDecoder::new(spec.clone(), DecoderKind::Scl { list_size: 16 }, PrunePolicy::Off).unwrap();
    let channel = ChannelModel::from_ebn0(ebn0_db, spec.rate()).unwrap();
    let streams = FrameStreams::new(seed);
    for f in 0..frames {
        let (_, obs) = simulate_frame(&spec, channel, &streams, f).unwrap();
        if dec.decode(&obs).unwrap().u_hat != brute_force_ml(&spec, &obs.llr) {
            return Err(format!("frame {f} differs from ML"));
        }
    }
    Ok(())
}

/// Child masses sum to the parent's along random paths.
pub fn check_metric_conservation(n: u32, frames: u64, seed: u64) -> Check {
    let len = 1usize << n;
    let mut r = rng(seed);
    for f in 0..frames {
        let x = random_bits(&mut r, len);
        let obs = transmit(&x, ChannelModel::biawgn(1.0).unwrap(), &mut r);
        let mut ws = PathWorkspace::new(&obs.llr);
        let mut metric = 0.0;
        let mut recursions = 0u64;
        let path = random_bits(&mut r, len);
        for (level, &bit) in path.iter().enumerate() {
            let [m0, m1] = extend_path_metrics(&mut ws, level, metric, None, &mut recursions);
            let sum = logsumexp(&[m0, m1]);
            if (sum - metric).abs() > 1e-9 * metric.abs().max(1.0) {
                return Err(format!("frame {f} level {level}: {sum} vs {metric}"));
            }
            metric = if bit == 0 { m0 } else { m1 };
            ws.update_partial_sums(level, bit);
        }
        if recursions != (n as u64) * len as u64 {
            return Err(format!("{recursions} recursions for one path"));
        }
    }
    Ok(())
}

pub fn check_encode_involution(n: u32, words: u64, seed: u64) -> Check {
    let mut r = rng(seed);
    for _ in 0..words {
        let u = random_bits(&mut r, 1 << n);
        if polar_encode(&polar_encode(&u).unwrap()).unwrap() != u {
            return Err(format!("encode is not an involution at n = {n}"));
        }
    }
    Ok(())
}

/// Pruning decisions are unchanged by a common shift of the metrics.
pub fn check_normalization_invariance(cases: u64, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut g = polar_prune::channel::GaussianSource::new(&mut r);
    for c in 0..cases {
        let len = 2 + (c as usize % 31);
        let mut metrics: Vec<f64> = (0..len).map(|_| -3.0 * g.sample().abs()).collect();
        metrics.sort_by(|a, b| b.total_cmp(a));
        let shift = 500.0 * g.sample();
        let shifted: Vec<f64> = metrics.iter().map(|m| m + shift).collect();
        let alpha = g.sample().abs().min(0.99);
        let budget = 0.3 * g.sample().abs();
        if apply_static_rule(&metrics, alpha) != apply_static_rule(&shifted, alpha) {
            return Err(format!("static rule moved under shift {shift}"));
        }
        let a = select_prune_set(&metrics, budget);
        let b = select_prune_set(&shifted, budget);
        if a.keep != b.keep || a.losses.iter().zip(&b.losses).any(|(x, y)| (x - y).abs() > 1e-12) {
            return Err(format!("prune set moved under shift {shift}"));
        }
    }
    Ok(())
}

/// Tracks ledger and loss invariants of a dynamic decode level by level.
#[derive(Default)]
pub struct LedgerWatch {
    pub p_tol: f64,
    pub budget: Option<LlrBudget>,
    last_loss: f64,
    bounds: HashMap<(usize, u64, u64), f64>,
    retired: HashSet<(usize, u64, u64)>,
    pub violations: Vec<String>,
    pub max_loss: f64,
}

impl LedgerWatch {
    pub fn new(p_tol: f64, budget: LlrBudget) -> Self {
        LedgerWatch {
            p_tol,
            budget: Some(budget),
            ..Default::default()
        }
    }

    fn reset(&mut self) {
        self.last_loss = 0.0;
        self.bounds.clear();
        self.retired.clear();
    }
}

impl DecodeObserver for LedgerWatch {
    fn on_level(&mut self, v: &LevelView<'_>) {
        if v.level == 0 {
            self.reset();
        }
        let budget = self.budget.as_ref().expect("budget set");
        if v.accumulated_loss > self.p_tol {
            self.violations.push(format!("level {}: P_de {} > p_tol", v.level, v.accumulated_loss));
        }
        if v.accumulated_loss < self.last_loss {
            self.violations.push(format!("level {}: P_de decreased", v.level));
        }
        self.last_loss = v.accumulated_loss;
        self.max_loss = self.max_loss.max(v.accumulated_loss);
        let mut active = HashSet::new();
        for r in v.records {
            let key = (r.level, r.log_metric.to_bits(), r.loss.to_bits());
            if self.retired.contains(&key) {
                self.violations.push(format!("level {}: record reactivated", v.level));
            }
            let z = r.descendant_bound(v.level + 1, budget);
            if let Some(&prev) = self.bounds.get(&key) {
                if z > prev {
                    self.violations.push(format!("level {}: bound increased", v.level));
                }
            }
            self.bounds.insert(key, z);
            active.insert(key);
        }
        let gone: Vec<_> = self.bounds.keys().filter(|k| !active.contains(*k)).copied().collect();
        for k in gone {
            self.bounds.remove(&k);
            self.retired.insert(k);
        }
    }
}

/// Dynamic decodes keep `P_de <= p_tol`, non-decreasing, and the ledger
/// bookkeeping monotone.
pub fn check_dynamic_ledger(spec: &CodeSpec, list_size: usize, p_tol: f64, ebn0_db: f64, frames: u64, seed: u64) -> Check {
    let budget = reference_budget(spec, ebn0_db);
    let policy = PrunePolicy::Dynamic { p_tol, budget: budget.clone() };
    let dec = ListDecoder::new(spec.clone(), DecoderKind::CaScl { list_size }, policy).unwrap();
    let channel = ChannelModel::from_ebn0(ebn0_db, spec.rate()).unwrap();
    let streams = FrameStreams::new(seed);
    let mut watch = LedgerWatch::new(p_tol, budget);
    for f in 0..frames {
        let (_, obs) = simulate_frame(spec, channel, &streams, f).unwrap();
        dec.decode_observed(&obs, None, Some(&mut watch)).unwrap();
        if let Some(v) = watch.violations.first() {
            return Err(format!("frame {f}: {v}"));
        }
    }
    if watch.max_loss <= 0.0 {
        return Err("no pruning happened; check is vacuous".into());
    }
    Ok(())
}

/// Sweeps with 1 and `workers` workers agree exactly.
pub fn check_worker_determinism(config: &SimConfig, workers: usize) -> Check {
    let a = run_fer_sweep(config).unwrap();
    let b = run_fer_sweep(&SimConfig {
        workers,
        ..config.clone()
    })
    .unwrap();
    if a == b {
        Ok(())
    } else {
        Err(format!("{a:?} != {b:?}"))
    }
}

/// Genie-aided SC decision LLRs, sign-adjusted so the true bit is positive.
pub fn genie_llrs(u: &[u8], obs: &ChannelObservation) -> Vec<f64> {
    let mut ws = PathWorkspace::new(&obs.llr);
    let mut recursions = 0;
    u.iter()
        .enumerate()
        .map(|(level, &bit)| {
            let l = ws.decision_llr(level, &mut recursions);
            ws.update_partial_sums(level, bit);
            if bit == 0 {
                l
            } else {
                -l
            }
        })
        .collect()
}

/// Counts `|LLR_i| > l_i` over genie trajectories; returns (exceedances, samples).
pub fn llr_tail_count(spec: &CodeSpec, budget: &LlrBudget, ebn0_db: f64, frames: u64, seed: u64) -> (u64, u64) {
    let channel = ChannelModel::from_ebn0(ebn0_db, spec.rate()).unwrap();
    let streams = FrameStreams::new(seed);
    let mut hits = 0;
    for f in 0..frames {
        let (u, obs) = simulate_frame(spec, channel, &streams, f).unwrap();
        hits += genie_llrs(&u, &obs)
            .iter()
            .zip(budget.levels())
            .filter(|(l, b)| l.abs() > **b)
            .count() as u64;
    }
    (hits, frames * spec.len() as u64)
}

/// Survivor metrics never exceed the root-anchored upper bound.
pub struct RootBoundWatch<'b> {
    pub budget: &'b LlrBudget,
    pub violations: u64,
    pub worst_margin: f64,
}

impl DecodeObserver for RootBoundWatch<'_> {
    fn on_level(&mut self, v: &LevelView<'_>) {
        let bound = self.budget.log_factor_prefix(v.level + 1);
        let best = v.metrics.iter().copied().fold(f64::NEG_INFINITY, f64::max) + v.offset;
        let margin = best - bound;
        self.worst_margin = self.worst_margin.max(margin);
        if margin > 1e-9 * bound.abs().max(1.0) {
            self.violations += 1;
        }
    }
}
