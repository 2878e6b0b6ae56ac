//! BPSK over BIAWGN / BEC with counter-based, per-frame random streams.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// Finite stand-in for the infinite LLR of an unerased BEC symbol.
pub const BEC_LLR: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    Biawgn { sigma: f64 },
    Bec { epsilon: f64 },
}

impl ChannelModel {
    pub fn biawgn(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::config(format!("noise deviation {sigma} must be positive")));
        }
        Ok(ChannelModel::Biawgn { sigma })
    }

    pub fn bec(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::config(format!("erasure probability {epsilon} outside [0,1]")));
        }
        Ok(ChannelModel::Bec { epsilon })
    }

    pub fn from_ebn0(ebn0_db: f64, code_rate: f64) -> Result<Self> {
        if !(code_rate > 0.0 && code_rate < 1.0) {
            return Err(Error::config(format!("code rate {code_rate} outside (0,1)")));
        }
        Self::biawgn(ebn0_to_sigma(ebn0_db, code_rate))
    }
}

/// `sigma = (2 R 10^(EbN0/10))^(-1/2)`.
pub fn ebn0_to_sigma(ebn0_db: f64, code_rate: f64) -> f64 {
    (2.0 * code_rate * 10f64.powf(ebn0_db / 10.0)).powf(-0.5)
}

/// Channel output in LLR form, `ln W(y|0) / W(y|1)` per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelObservation {
    pub llr: Vec<f64>,
    /// Set for BEC erasures; empty for BIAWGN.
    pub erased: Vec<bool>,
}

impl ChannelObservation {
    pub fn len(&self) -> usize {
        self.llr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.llr.is_empty()
    }

    /// LLRs from raw BIAWGN samples through the Gaussian densities.
    pub fn from_received(y: &[f64], sigma: f64) -> Self {
        let ln_pdf = |y: f64, mean: f64| -((y - mean) * (y - mean)) / (2.0 * sigma * sigma);
        ChannelObservation {
            llr: y.iter().map(|&v| ln_pdf(v, 1.0) - ln_pdf(v, -1.0)).collect(),
            erased: Vec::new(),
        }
    }
}

/// Standard normal samples by Box-Muller over 53-bit uniforms.
pub struct GaussianSource<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: RngCore> GaussianSource<R> {
    pub fn new(rng: R) -> Self {
        GaussianSource { rng, spare: None }
    }

    /// Uniform in (0, 1].
    fn uniform_open0(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let r = (-2.0 * self.uniform_open0().ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * self.uniform_open0();
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Maps `x` through the channel: BPSK `0 -> +1`, `1 -> -1`.
pub fn transmit<R: RngCore>(x: &[u8], model: ChannelModel, rng: &mut R) -> ChannelObservation {
    match model {
        ChannelModel::Biawgn { sigma } => {
            let mut g = GaussianSource::new(rng);
            let scale = 2.0 / (sigma * sigma);
            let llr = x
                .iter()
                .map(|&b| {
                    let y = (1.0 - 2.0 * f64::from(b & 1)) + sigma * g.sample();
                    scale * y
                })
                .collect();
            ChannelObservation {
                llr,
                erased: Vec::new(),
            }
        }
        ChannelModel::Bec { epsilon } => {
            let mut llr = Vec::with_capacity(x.len());
            let mut erased = Vec::with_capacity(x.len());
            for &b in x {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                let e = u < epsilon;
                erased.push(e);
                llr.push(if e { 0.0 } else { BEC_LLR * (1.0 - 2.0 * f64::from(b & 1)) });
            }
            ChannelObservation { llr, erased }
        }
    }
}

/// Independent random streams keyed by `(master_seed, frame index)`.
///
/// Payload and noise draw from different ChaCha keys; the frame index picks
/// the ChaCha stream, so any frame can be regenerated on its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameStreams {
    master_seed: u64,
}

const PAYLOAD_TAG: u64 = 0x7061_796c_6f61_6400;
const NOISE_TAG: u64 = 0x6e6f_6973_6500_0000;

impl FrameStreams {
    pub fn new(master_seed: u64) -> Self {
        FrameStreams { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    fn stream(&self, tag: u64, frame: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&tag.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(frame);
        rng
    }

    pub fn payload(&self, frame: u64) -> ChaCha8Rng {
        self.stream(PAYLOAD_TAG, frame)
    }

    pub fn noise(&self, frame: u64) -> ChaCha8Rng {
        self.stream(NOISE_TAG, frame)
    }
}

/// `len` uniformly random bits.
pub fn random_bits<R: RngCore>(rng: &mut R, len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let word = rng.next_u64();
        out.extend((0..64).map(|k| ((word >> k) & 1) as u8).take(len - out.len()));
    }
    out
}
