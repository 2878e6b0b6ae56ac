//! Log-domain path metrics and per-path recursion workspaces.
//!
//! A path metric is `ln P(u_1..u_i | y)`. Each decision level adds
//! `ln sigmoid(+-lambda_i)` where `lambda_i` is the decision LLR produced by
//! the two channel-combining recursions:
//!
//! * the "sum" form (bit `u_{2i-1}`, the other bit marginalized) is the exact
//!   box-plus of the two half-length LLRs;
//! * the "product" form (bit `u_{2i}`, previous bit known) is
//!   `b + (1 - 2 u) a`.
//!
//! Both are exact, so metrics equal the brute-force a posteriori sums; only
//! the common per-level normalization offset is tracked separately.

use std::rc::Rc;

use crate::codec::bit_reverse;
use crate::error::{Error, Result};

/// Stand-in for `ln 0` (e.g. a frozen branch that contradicts its value).
pub const METRIC_FLOOR: f64 = -1e6;

/// `ln(1 + e^-x)` for `x >= 0`; below double precision past 40.
#[inline]
fn log1p_exp_neg(x: f64) -> f64 {
    if x > 40.0 {
        0.0
    } else {
        (-x).exp().ln_1p()
    }
}

/// `ln(1 / (1 + e^-x))`.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -log1p_exp_neg(x)
    } else {
        x - log1p_exp_neg(-x)
    }
}

/// Exact `ln((1 + e^(a+b)) / (e^a + e^b))`.
#[inline]
pub fn boxplus(a: f64, b: f64) -> f64 {
    let mag = a.abs().min(b.abs());
    let signed = if (a < 0.0) != (b < 0.0) { -mag } else { mag };
    signed + log1p_exp_neg((a + b).abs()) - log1p_exp_neg((a - b).abs())
}

#[inline]
pub fn combine(a: f64, b: f64, upper_bit: u8) -> f64 {
    if upper_bit == 0 {
        b + a
    } else {
        b - a
    }
}

pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Shifts `metrics` so the largest is 0 and returns the shift (the old
/// maximum), to be added to the running offset. Ratios are unchanged.
pub fn normalize_level(metrics: &mut [f64]) -> Result<f64> {
    let max = metrics.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > METRIC_FLOOR) {
        return Err(Error::config("every path metric is at the floor"));
    }
    for m in metrics.iter_mut() {
        *m -= max;
    }
    Ok(max)
}

/// Recursion state of one decoding path.
///
/// `llr[d]` holds the `2^(n-d)` LLRs of the active node at depth `d`
/// (`llr[0]` is the bit-reversed channel, shared by every path) and
/// `bits[d]` the partial sums being assembled at that depth. Planes are
/// reference counted; a fork copies handles only and the first write to a
/// shared plane clones it.
#[derive(Debug, Clone)]
pub struct PathWorkspace {
    llr: Vec<Rc<Vec<f64>>>,
    bits: Vec<Rc<Vec<u8>>>,
}

impl PathWorkspace {
    /// Loads channel LLRs (natural order) for a code of length `2^n`.
    pub fn new(channel_llr: &[f64]) -> Self {
        Self::from_shared(Self::channel_plane(channel_llr))
    }

    /// Channel plane in decoding order, shareable across paths.
    pub fn channel_plane(channel_llr: &[f64]) -> Rc<Vec<f64>> {
        let len = channel_llr.len();
        assert!(len.is_power_of_two(), "channel length must be a power of two");
        let n = len.trailing_zeros();
        Rc::new((0..len).map(|j| channel_llr[bit_reverse(j, n)]).collect())
    }

    pub fn from_shared(channel: Rc<Vec<f64>>) -> Self {
        let len = channel.len();
        let n = len.trailing_zeros() as usize;
        let mut llr = Vec::with_capacity(n + 1);
        llr.push(channel);
        llr.extend((1..=n).map(|d| Rc::new(vec![0.0; len >> d])));
        let bits = (0..=n).map(|d| Rc::new(vec![0u8; len >> d])).collect();
        PathWorkspace { llr, bits }
    }

    fn depth(&self) -> usize {
        self.llr.len() - 1
    }

    /// Decision LLR of bit `level` (0-based); the previous level must have
    /// been decided through [`update_partial_sums`](Self::update_partial_sums).
    /// Adds one to `recursions` per box-plus or combine evaluated.
    pub fn decision_llr(&mut self, level: usize, recursions: &mut u64) -> f64 {
        let n = self.depth();
        let start = if level == 0 {
            1
        } else {
            n - level.trailing_zeros() as usize
        };
        for d in start..=n {
            let size = 1usize << (n - d);
            let right = (level >> (n - d)) & 1 == 1;
            let (upper, lower) = self.llr.split_at_mut(d);
            let parent = &upper[d - 1];
            let child = Rc::make_mut(&mut lower[0]);
            let (a, b) = parent.split_at(size);
            if right {
                let left_sums = &self.bits[d - 1][..size];
                for j in 0..size {
                    child[j] = combine(a[j], b[j], left_sums[j]);
                }
            } else {
                for j in 0..size {
                    child[j] = boxplus(a[j], b[j]);
                }
            }
            *recursions += size as u64;
        }
        self.llr[n][0]
    }

    /// Records decision `bit` at `level` and propagates partial sums up to
    /// the first ancestor that is a left child.
    pub fn update_partial_sums(&mut self, level: usize, bit: u8) {
        let n = self.depth();
        Rc::make_mut(&mut self.bits[n])[0] = bit;
        for d in (1..=n).rev() {
            let size = 1usize << (n - d);
            let (upper, lower) = self.bits.split_at_mut(d);
            let src = &lower[0];
            let dst = Rc::make_mut(&mut upper[d - 1]);
            if (level >> (n - d)) & 1 == 0 {
                dst[..size].copy_from_slice(&src[..size]);
                break;
            }
            for j in 0..size {
                dst[j] ^= src[j];
                dst[j + size] = src[j];
            }
        }
    }

    /// Handle-only copy; planes stay shared until written.
    pub fn fork(&self) -> Self {
        self.clone()
    }

    /// Deep copy of every private plane.
    pub fn fork_eager(&self) -> Self {
        PathWorkspace {
            llr: self
                .llr
                .iter()
                .enumerate()
                .map(|(d, p)| if d == 0 { Rc::clone(p) } else { Rc::new(p.to_vec()) })
                .collect(),
            bits: self.bits.iter().map(|p| Rc::new(p.to_vec())).collect(),
        }
    }

    /// Depth-0 partial sums: after all `N` decisions, the re-encoded prefix
    /// in decoding (bit-reversed) order.
    pub fn root_partial_sums(&self) -> &[u8] {
        &self.bits[0]
    }

    /// Whether plane `depth` of the LLR stack is shared with another path.
    pub fn llr_plane_shared(&self, depth: usize) -> bool {
        Rc::strong_count(&self.llr[depth]) > 1
    }

    pub fn llr_plane(&self, depth: usize) -> &[f64] {
        &self.llr[depth]
    }
}

/// Child metrics `(u_i = 0, u_i = 1)` of a path with metric `parent`.
/// A frozen level gives the contradicting child [`METRIC_FLOOR`].
pub fn extend_path_metrics(
    ws: &mut PathWorkspace,
    level: usize,
    parent: f64,
    frozen: Option<u8>,
    recursions: &mut u64,
) -> [f64; 2] {
    let lambda = ws.decision_llr(level, recursions);
    let mut out = [parent + log_sigmoid(lambda), parent + log_sigmoid(-lambda)];
    if let Some(v) = frozen {
        out[usize::from(v == 0)] = METRIC_FLOOR;
    }
    out
}
