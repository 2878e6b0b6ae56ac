//! SC, SCL and CA-SCL decoding.
//!
//! Each information level runs the list loop: extend every path by both
//! bit values, sort the candidates by metric, keep the best `L`, hand the
//! survivors to the pruning policy, fork parents whose two children both
//! survive, and update partial sums. Frozen levels extend every path with
//! its frozen value. At the end the best path (CRC-passing, when aided)
//! is chosen.

use std::rc::Rc;

use crate::codec::extract_info;
use crate::construction::CodeSpec;
use crate::error::{Error, Result};
use crate::metric::{extend_path_metrics, normalize_level, PathWorkspace};
use crate::pruning::{PrunePolicy, PruneSession, PrunedRecord};
use crate::ChannelObservation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct ComplexityCounters {
    /// Sum- and product-form recursion evaluations.
    pub metric_recursions: u64,
    /// Workspace forks.
    pub path_copies: u64,
    /// Sorts of two or more candidates.
    pub sort_operations: u64,
    /// Paths deleted by the pruning policy.
    pub pruned_paths: u64,
}

impl std::ops::AddAssign for ComplexityCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.metric_recursions += rhs.metric_recursions;
        self.path_copies += rhs.path_copies;
        self.sort_operations += rhs.sort_operations;
        self.pruned_paths += rhs.pruned_paths;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DecodeStatus {
    SuccessCrc,
    SuccessMaxMetric,
    CrcFailAllPaths,
    ListEmptied,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    /// Decided source word of the chosen path.
    pub u_hat: Vec<u8>,
    /// Information-set bits (payload then CRC).
    pub info_bits: Vec<u8>,
    pub payload_len: usize,
    pub status: DecodeStatus,
    pub counters: ComplexityCounters,
    /// Accumulated pruning-loss bound at the end of decoding.
    pub accumulated_loss: f64,
}

impl DecodeOutcome {
    pub fn payload(&self) -> &[u8] {
        &self.info_bits[..self.payload_len]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    Sc,
    Scl { list_size: usize },
    CaScl { list_size: usize },
}

impl DecoderKind {
    pub fn list_size(self) -> usize {
        match self {
            DecoderKind::Sc => 1,
            DecoderKind::Scl { list_size } | DecoderKind::CaScl { list_size } => list_size,
        }
    }
}

/// What an observer sees after each level is fully processed.
#[derive(Debug)]
pub struct LevelView<'a> {
    /// Index of the bit just decided (0-based).
    pub level: usize,
    pub frozen: bool,
    /// Survivor metrics, normalized so the best is 0, in list order
    /// (sorted descending after information levels only).
    pub metrics: &'a [f64],
    /// Running normalization offset; `metric + offset` is `ln P(prefix | y)`.
    pub offset: f64,
    /// Per survivor: does it follow the transmitted source word.
    pub on_true_path: Option<&'a [bool]>,
    /// Decided prefixes, when the observer asked for them.
    pub prefixes: Option<&'a [Vec<u8>]>,
    /// Survivors before the pruning policy ran.
    pub unpruned: usize,
    pub accumulated_loss: f64,
    /// Active pruned records, largest loss first.
    pub records: &'a [PrunedRecord],
}

pub trait DecodeObserver {
    fn wants_prefixes(&self) -> bool {
        false
    }

    fn on_level(&mut self, view: &LevelView<'_>);
}

/// Persistent list of decisions; forks share their common prefix.
#[derive(Debug)]
struct Decision {
    bit: u8,
    prev: Option<Rc<Decision>>,
}

impl Drop for Decision {
    fn drop(&mut self) {
        let mut next = self.prev.take();
        while let Some(node) = next {
            match Rc::try_unwrap(node) {
                Ok(mut owned) => next = owned.prev.take(),
                Err(_) => break,
            }
        }
    }
}

fn collect_decisions(tail: &Option<Rc<Decision>>, len: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    let mut cursor = tail.as_ref();
    let mut i = len;
    while let Some(node) = cursor {
        i -= 1;
        out[i] = node.bit;
        cursor = node.prev.as_ref();
    }
    out
}

#[derive(Debug, Clone)]
struct Path {
    ws: PathWorkspace,
    metric: f64,
    decisions: Option<Rc<Decision>>,
    on_true_path: bool,
}

impl Path {
    fn decide(&mut self, level: usize, bit: u8, metric: f64, truth: Option<&[u8]>) {
        self.ws.update_partial_sums(level, bit);
        self.metric = metric;
        self.decisions = Some(Rc::new(Decision {
            bit,
            prev: self.decisions.take(),
        }));
        if let Some(t) = truth {
            self.on_true_path &= t[level] == bit;
        }
    }
}

/// Decoder configuration; one decode call owns all mutable state, so a
/// `ListDecoder` can be shared between threads.
#[derive(Debug, Clone)]
pub struct ListDecoder {
    spec: CodeSpec,
    kind: DecoderKind,
    policy: PrunePolicy,
    eager_copies: bool,
}

impl ListDecoder {
    pub fn new(spec: CodeSpec, kind: DecoderKind, policy: PrunePolicy) -> Result<Self> {
        if kind.list_size() == 0 {
            return Err(Error::config("list size must be at least 1"));
        }
        if matches!(kind, DecoderKind::CaScl { .. }) && spec.crc().is_none() {
            return Err(Error::config("CRC-aided decoding needs a CRC"));
        }
        if matches!(kind, DecoderKind::Sc) && !policy.is_off() {
            return Err(Error::config("SC decoding has no list to prune"));
        }
        policy.validate(spec.len())?;
        Ok(ListDecoder {
            spec,
            kind,
            policy,
            eager_copies: false,
        })
    }

    /// Deep-copies workspaces on fork instead of sharing planes.
    pub fn with_eager_copies(mut self, eager: bool) -> Self {
        self.eager_copies = eager;
        self
    }

    pub fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    pub fn kind(&self) -> DecoderKind {
        self.kind
    }

    pub fn policy(&self) -> &PrunePolicy {
        &self.policy
    }

    pub fn decode(&self, obs: &ChannelObservation) -> Result<DecodeOutcome> {
        self.decode_observed(obs, None, None)
    }

    /// Decodes with an optional genie source word (to flag the true path)
    /// and an observer called after every level.
    pub fn decode_observed(
        &self,
        obs: &ChannelObservation,
        truth: Option<&[u8]>,
        observer: Option<&mut dyn DecodeObserver>,
    ) -> Result<DecodeOutcome> {
        self.check_input(obs, truth)?;
        match self.kind {
            DecoderKind::Sc => Ok(self.run_sc(obs)),
            DecoderKind::Scl { list_size } => Ok(self.run_list(obs, list_size, false, truth, observer)),
            DecoderKind::CaScl { list_size } => Ok(self.run_list(obs, list_size, true, truth, observer)),
        }
    }

    fn check_input(&self, obs: &ChannelObservation, truth: Option<&[u8]>) -> Result<()> {
        if obs.len() != self.spec.len() {
            return Err(Error::config(format!(
                "observation of length {} for N = {}",
                obs.len(),
                self.spec.len()
            )));
        }
        if truth.is_some_and(|t| t.len() != self.spec.len()) {
            return Err(Error::config("genie source word has the wrong length"));
        }
        Ok(())
    }

    fn run_sc(&self, obs: &ChannelObservation) -> DecodeOutcome {
        let spec = &self.spec;
        let mut counters = ComplexityCounters::default();
        let mut ws = PathWorkspace::new(&obs.llr);
        let mut u_hat = vec![0u8; spec.len()];
        let mut metric = 0.0;
        for level in 0..spec.len() {
            let frozen = spec.is_frozen(level).then(|| spec.frozen_bit(level));
            let [m0, m1] = extend_path_metrics(&mut ws, level, metric, frozen, &mut counters.metric_recursions);
            let bit = match frozen {
                Some(v) => v,
                None => {
                    counters.sort_operations += 1;
                    u8::from(m1 > m0)
                }
            };
            metric = if bit == 0 { m0 } else { m1 };
            ws.update_partial_sums(level, bit);
            u_hat[level] = bit;
        }
        let info_bits = extract_info(spec, &u_hat).expect("length checked");
        DecodeOutcome {
            u_hat,
            info_bits,
            payload_len: spec.payload_len(),
            status: DecodeStatus::SuccessMaxMetric,
            counters,
            accumulated_loss: 0.0,
        }
    }

    fn fork(&self, path: &Path) -> Path {
        if self.eager_copies {
            Path {
                ws: path.ws.fork_eager(),
                ..path.clone()
            }
        } else {
            Path {
                ws: path.ws.fork(),
                ..path.clone()
            }
        }
    }

    fn run_list(
        &self,
        obs: &ChannelObservation,
        list_size: usize,
        crc_aided: bool,
        truth: Option<&[u8]>,
        mut observer: Option<&mut dyn DecodeObserver>,
    ) -> DecodeOutcome {
        let spec = &self.spec;
        let len = spec.len();
        let mut counters = ComplexityCounters::default();
        let mut session = PruneSession::new(&self.policy, list_size);
        let channel = PathWorkspace::channel_plane(&obs.llr);
        let mut paths = vec![Path {
            ws: PathWorkspace::from_shared(channel),
            metric: 0.0,
            decisions: None,
            on_true_path: truth.is_some(),
        }];
        let mut offset = 0.0;
        let mut candidates: Vec<(f64, usize, u8)> = Vec::with_capacity(2 * list_size);
        let mut metrics: Vec<f64> = Vec::with_capacity(2 * list_size);

        for level in 0..len {
            let unpruned;
            if spec.is_frozen(level) {
                let v = spec.frozen_bit(level);
                for p in paths.iter_mut() {
                    let m = extend_path_metrics(&mut p.ws, level, p.metric, Some(v), &mut counters.metric_recursions);
                    p.decide(level, v, m[usize::from(v)], truth);
                }
                unpruned = paths.len();
                if session.active() && paths.len() > 1 {
                    // rank without reordering the list
                    let mut order: Vec<usize> = (0..paths.len()).collect();
                    order.sort_by(|&a, &b| paths[b].metric.total_cmp(&paths[a].metric));
                    metrics.clear();
                    metrics.extend(order.iter().map(|&j| paths[j].metric));
                    let keep = session.apply(level + 1, &metrics, offset);
                    if keep < paths.len() {
                        let mut alive = vec![false; paths.len()];
                        for &j in &order[..keep] {
                            alive[j] = true;
                        }
                        let mut it = alive.iter();
                        paths.retain(|_| *it.next().expect("one flag per path"));
                        counters.pruned_paths += (unpruned - keep) as u64;
                    }
                }
            } else {
                candidates.clear();
                for (idx, p) in paths.iter_mut().enumerate() {
                    let [m0, m1] = extend_path_metrics(&mut p.ws, level, p.metric, None, &mut counters.metric_recursions);
                    candidates.push((m0, idx, 0));
                    candidates.push((m1, idx, 1));
                }
                candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
                counters.sort_operations += 1;
                candidates.truncate(list_size);
                unpruned = candidates.len();
                if session.active() && candidates.len() > 1 {
                    metrics.clear();
                    metrics.extend(candidates.iter().map(|c| c.0));
                    let keep = session.apply(level + 1, &metrics, offset);
                    counters.pruned_paths += (candidates.len() - keep) as u64;
                    candidates.truncate(keep);
                }

                let mut children = vec![0u8; paths.len()];
                for &(_, idx, _) in &candidates {
                    children[idx] += 1;
                }
                let mut parents: Vec<Option<Path>> = paths.drain(..).map(Some).collect();
                for &(metric, idx, bit) in &candidates {
                    let mut child = if children[idx] == 2 {
                        children[idx] = 1;
                        counters.path_copies += 1;
                        self.fork(parents[idx].as_ref().expect("parent alive"))
                    } else {
                        parents[idx].take().expect("parent alive")
                    };
                    child.decide(level, bit, metric, truth);
                    paths.push(child);
                }
            }

            metrics.clear();
            metrics.extend(paths.iter().map(|p| p.metric));
            match normalize_level(&mut metrics) {
                Ok(shift) => {
                    offset += shift;
                    for (p, m) in paths.iter_mut().zip(&metrics) {
                        p.metric = *m;
                    }
                }
                Err(_) => {
                    return self.emptied(counters, session.accumulated_loss());
                }
            }

            if let Some(obs) = observer.as_deref_mut() {
                let flags: Option<Vec<bool>> = truth.map(|_| paths.iter().map(|p| p.on_true_path).collect());
                let prefixes: Option<Vec<Vec<u8>>> = obs
                    .wants_prefixes()
                    .then(|| paths.iter().map(|p| collect_decisions(&p.decisions, level + 1)).collect());
                obs.on_level(&LevelView {
                    level,
                    frozen: spec.is_frozen(level),
                    metrics: &metrics,
                    offset,
                    on_true_path: flags.as_deref(),
                    prefixes: prefixes.as_deref(),
                    unpruned,
                    accumulated_loss: session.accumulated_loss(),
                    records: session.ledger().records(),
                });
            }
        }

        paths.sort_by(|a, b| b.metric.total_cmp(&a.metric));
        let finals: Vec<Vec<u8>> = paths.iter().map(|p| collect_decisions(&p.decisions, len)).collect();
        let crc = if crc_aided { spec.crc() } else { None };
        let (chosen, status) = select_final(spec, &finals, crc);
        let u_hat = finals.into_iter().nth(chosen).expect("chosen path exists");
        let info_bits = extract_info(spec, &u_hat).expect("length checked");
        DecodeOutcome {
            u_hat,
            info_bits,
            payload_len: spec.payload_len(),
            status,
            counters,
            accumulated_loss: session.accumulated_loss(),
        }
    }

    fn emptied(&self, counters: ComplexityCounters, loss: f64) -> DecodeOutcome {
        let u_hat: Vec<u8> = (0..self.spec.len()).map(|i| self.spec.frozen_bit(i)).collect();
        let info_bits = extract_info(&self.spec, &u_hat).expect("length checked");
        DecodeOutcome {
            u_hat,
            info_bits,
            payload_len: self.spec.payload_len(),
            status: DecodeStatus::ListEmptied,
            counters,
            accumulated_loss: loss,
        }
    }
}

/// Picks the final path from `finals` (sorted by descending metric): the
/// first whose information bits pass `crc`, or simply the first.
pub fn select_final(spec: &CodeSpec, finals: &[Vec<u8>], crc: Option<&crate::CrcDef>) -> (usize, DecodeStatus) {
    match crc {
        None => (0, DecodeStatus::SuccessMaxMetric),
        Some(def) => finals
            .iter()
            .position(|u| def.verify(&extract_info(spec, u).expect("full-length path")))
            .map_or((0, DecodeStatus::CrcFailAllPaths), |i| (i, DecodeStatus::SuccessCrc)),
    }
}

pub fn decode_sc(spec: &CodeSpec, obs: &ChannelObservation) -> Result<DecodeOutcome> {
    ListDecoder::new(spec.clone(), DecoderKind::Sc, PrunePolicy::Off)?.decode(obs)
}

/// List decoding; CRC-aided whenever the code carries a CRC.
pub fn decode_scl(spec: &CodeSpec, obs: &ChannelObservation, list_size: usize, policy: PrunePolicy) -> Result<DecodeOutcome> {
    let kind = if spec.crc().is_some() {
        DecoderKind::CaScl { list_size }
    } else {
        DecoderKind::Scl { list_size }
    };
    ListDecoder::new(spec.clone(), kind, policy)?.decode(obs)
}
