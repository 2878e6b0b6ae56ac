//! Polarized-channel reliability evaluation and information-set selection.
//!
//! Indices follow the natural order of the odd/even channel-combining
//! recursion: after one more polarization step, channel `i` of length `N`
//! becomes channels `2i` ("minus") and `2i + 1` ("plus") of length `2N`.
//! No bit-reversal permutation is applied anywhere.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::crc::CrcDef;
use crate::error::{Error, Result};

pub const MAX_LOG2_LEN: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReliabilityKind {
    /// Bhattacharyya parameters of the polarized BECs; smaller is better.
    BhattacharyyaBec,
    /// Mean decision LLR under the Gaussian approximation; larger is better.
    GaussianApproxMeanLlr,
}

impl ReliabilityKind {
    pub fn label(self) -> &'static str {
        match self {
            ReliabilityKind::BhattacharyyaBec => "bec",
            ReliabilityKind::GaussianApproxMeanLlr => "ga",
        }
    }

    fn from_label(s: &str) -> Option<Self> {
        match s {
            "bec" => Some(ReliabilityKind::BhattacharyyaBec),
            "ga" => Some(ReliabilityKind::GaussianApproxMeanLlr),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityProfile {
    pub n: u32,
    pub values: Vec<f64>,
    pub kind: ReliabilityKind,
    /// Erasure probability for BEC, design Eb/N0 in dB for GA.
    pub design_param: f64,
}

impl ReliabilityProfile {
    /// Re-evaluates the profile a code was built from.
    pub fn from_construction(n: u32, code_rate: f64, c: Construction) -> Result<Self> {
        match c.kind {
            ReliabilityKind::BhattacharyyaBec => evaluate_reliability_bec(n, c.design_param),
            ReliabilityKind::GaussianApproxMeanLlr => evaluate_reliability_ga(n, code_rate, c.design_param),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indices from most to least reliable, ties toward the lower index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        match self.kind {
            ReliabilityKind::BhattacharyyaBec => order.sort_by(|&a, &b| {
                self.values[a].total_cmp(&self.values[b]).then(a.cmp(&b))
            }),
            ReliabilityKind::GaussianApproxMeanLlr => order.sort_by(|&a, &b| {
                self.values[b].total_cmp(&self.values[a]).then(a.cmp(&b))
            }),
        }
        order
    }
}

fn check_log2_len(n: u32) -> Result<()> {
    if n > MAX_LOG2_LEN {
        return Err(Error::config(format!(
            "log2 code length {n} exceeds {MAX_LOG2_LEN}"
        )));
    }
    Ok(())
}

/// Polarizes `values` once per step using the given minus/plus maps.
fn polarize(n: u32, seed: f64, minus: impl Fn(f64) -> f64, plus: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut values = vec![seed];
    for _ in 0..n {
        values = values.iter().flat_map(|&v| [minus(v), plus(v)]).collect();
    }
    values
}

pub fn evaluate_reliability_bec(n: u32, epsilon: f64) -> Result<ReliabilityProfile> {
    check_log2_len(n)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::config(format!("erasure probability {epsilon} outside [0,1]")));
    }
    let values = polarize(n, epsilon, |z| 2.0 * z - z * z, |z| z * z);
    Ok(ReliabilityProfile {
        n,
        values,
        kind: ReliabilityKind::BhattacharyyaBec,
        design_param: epsilon,
    })
}

/// Mean LLR of BPSK over AWGN at the given Eb/N0 and rate: `2 / sigma^2`.
pub fn channel_mean_llr(code_rate: f64, ebn0_db: f64) -> f64 {
    4.0 * code_rate * 10f64.powf(ebn0_db / 10.0)
}

pub fn evaluate_reliability_ga(n: u32, code_rate: f64, design_ebn0_db: f64) -> Result<ReliabilityProfile> {
    check_log2_len(n)?;
    if !(code_rate > 0.0 && code_rate < 1.0) {
        return Err(Error::config(format!("code rate {code_rate} outside (0,1)")));
    }
    if !design_ebn0_db.is_finite() {
        return Err(Error::config("design Eb/N0 must be finite"));
    }
    let values = polarize(
        n,
        channel_mean_llr(code_rate, design_ebn0_db),
        ga_minus,
        |m| 2.0 * m,
    );
    Ok(ReliabilityProfile {
        n,
        values,
        kind: ReliabilityKind::GaussianApproxMeanLlr,
        design_param: design_ebn0_db,
    })
}

/// `ln phi(x)` for the two-piece approximation of the consistent-Gaussian
/// check-node function.
pub(crate) fn ln_phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x <= 10.0 {
        -0.4527 * x.powf(0.86) + 0.0218
    } else {
        0.5 * (std::f64::consts::PI / x).ln() - x / 4.0 + (1.0 - 10.0 / (7.0 * x)).ln()
    }
}

const PHI_INV_RTOL: f64 = 1e-10;

/// Check-node ("minus") update `phi^-1(1 - (1 - phi(m))^2)`, solved by
/// bisection in the log domain. Never exceeds `m`; the fitted `phi`
/// rises slightly above 1 near zero, where the raw inverse would.
pub(crate) fn ga_minus(m: f64) -> f64 {
    let lp = ln_phi(m);
    if lp >= 0.0 {
        return m;
    }
    // ln(1 - (1 - phi)^2) = ln(phi) + ln(2 - phi)
    let target = lp + (2.0 - lp.exp()).ln();
    let (mut lo, mut hi) = (0.0f64, m);
    while hi - lo > PHI_INV_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if ln_phi(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).min(m)
}

/// How a [`CodeSpec`] was constructed; carried into its JSON form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Construction {
    pub kind: ReliabilityKind,
    pub design_param: f64,
}

/// Static definition of one polar code.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    n: u32,
    info_set: Vec<usize>,
    frozen: Vec<bool>,
    /// Value per index; meaningful on frozen positions only.
    frozen_bits: Vec<u8>,
    crc: Option<CrcDef>,
    construction: Construction,
}

impl CodeSpec {
    /// Builds a code from an explicit information set (0-based indices).
    /// `frozen_values` lists the frozen bits in ascending index order.
    pub fn new(
        n: u32,
        mut info_set: Vec<usize>,
        frozen_values: Option<Vec<u8>>,
        crc: Option<CrcDef>,
        construction: Construction,
    ) -> Result<Self> {
        check_log2_len(n)?;
        let len = 1usize << n;
        info_set.sort_unstable();
        info_set.dedup();
        let k = info_set.len();
        if k == 0 || k > len {
            return Err(Error::config(format!("information set size {k} outside 1..={len}")));
        }
        if info_set.iter().any(|&i| i >= len) {
            return Err(Error::config("information index beyond code length"));
        }
        if let Some(c) = &crc {
            if c.width() >= k {
                return Err(Error::config(format!(
                    "CRC width {} leaves no payload in K = {k}",
                    c.width
                )));
            }
        }
        let mut frozen = vec![true; len];
        for &i in &info_set {
            frozen[i] = false;
        }
        let values = frozen_values.unwrap_or_else(|| vec![0; len - k]);
        if values.len() != len - k {
            return Err(Error::config(format!(
                "{} frozen values for {} frozen positions",
                values.len(),
                len - k
            )));
        }
        let mut frozen_bits = vec![0u8; len];
        for (idx, v) in (0..len).filter(|&i| frozen[i]).zip(values) {
            frozen_bits[idx] = v & 1;
        }
        Ok(CodeSpec {
            n,
            info_set,
            frozen,
            frozen_bits,
            crc,
            construction,
        })
    }

    pub fn log2_len(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.frozen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frozen.is_empty()
    }

    /// Information-set size, CRC bits included.
    pub fn k(&self) -> usize {
        self.info_set.len()
    }

    pub fn payload_len(&self) -> usize {
        self.k() - self.crc.map_or(0, |c| c.width())
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.len() as f64
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    pub fn frozen_bit(&self, i: usize) -> u8 {
        self.frozen_bits[i]
    }

    /// Frozen bits in ascending index order.
    pub fn frozen_values(&self) -> Vec<u8> {
        (0..self.len())
            .filter(|&i| self.frozen[i])
            .map(|i| self.frozen_bits[i])
            .collect()
    }

    pub fn crc(&self) -> Option<&CrcDef> {
        self.crc.as_ref()
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn to_document(&self) -> CodeSpecDoc {
        CodeSpecDoc {
            n: self.n,
            k: self.k(),
            info_set: self.info_set.iter().map(|i| i + 1).collect(),
            frozen_values: bits_to_hex(&self.frozen_values()),
            crc: self.crc.map(|c| CrcDoc {
                poly_hex: format!("{:x}", c.poly),
                width: c.width,
                init_hex: format!("{:x}", c.init),
                xorout_hex: format!("{:x}", c.xor_out),
            }),
            construction: ConstructionDoc {
                kind: self.construction.kind.label().to_string(),
                design_param: self.construction.design_param,
            },
        }
    }

    pub fn from_document(doc: &CodeSpecDoc) -> Result<Self> {
        let len = 1usize << doc.n.min(MAX_LOG2_LEN);
        if doc.info_set.iter().any(|&i| i == 0) {
            return Err(Error::Format {
                what: "code spec",
                reason: "information indices are 1-based".into(),
            });
        }
        let info: Vec<usize> = doc.info_set.iter().map(|i| i - 1).collect();
        if info.len() != doc.k {
            return Err(Error::Format {
                what: "code spec",
                reason: format!("K = {} but {} indices listed", doc.k, info.len()),
            });
        }
        let frozen_count = len.saturating_sub(doc.k);
        let frozen_values = hex_to_bits(&doc.frozen_values, frozen_count)?;
        let crc = doc
            .crc
            .as_ref()
            .map(|c| -> Result<CrcDef> {
                CrcDef::new(parse_hex(&c.poly_hex)?, c.width, parse_hex(&c.init_hex)?, parse_hex(&c.xorout_hex)?)
            })
            .transpose()?;
        let kind = ReliabilityKind::from_label(&doc.construction.kind).ok_or_else(|| Error::Format {
            what: "code spec",
            reason: format!("unknown construction kind {:?}", doc.construction.kind),
        })?;
        CodeSpec::new(
            doc.n,
            info,
            Some(frozen_values),
            crc,
            Construction {
                kind,
                design_param: doc.construction.design_param,
            },
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(s)?)
    }

    /// SHA-256 of the compact JSON document, hex encoded. Keys calibration
    /// and budget files to the code they were computed for.
    pub fn hash_hex(&self) -> String {
        let compact = serde_json::to_string(&self.to_document()).expect("code spec serializes");
        let digest = Sha256::digest(compact.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn select_information_set(
    profile: &ReliabilityProfile,
    k: usize,
    frozen_values: Option<Vec<u8>>,
    crc: Option<CrcDef>,
) -> Result<CodeSpec> {
    let len = profile.len();
    if k == 0 || k > len {
        return Err(Error::config(format!("K = {k} outside 1..={len}")));
    }
    let info: Vec<usize> = profile.ranking().into_iter().take(k).collect();
    CodeSpec::new(
        profile.n,
        info,
        frozen_values,
        crc,
        Construction {
            kind: profile.kind,
            design_param: profile.design_param,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrcDoc {
    pub poly_hex: String,
    pub width: u32,
    pub init_hex: String,
    pub xorout_hex: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionDoc {
    pub kind: String,
    pub design_param: f64,
}

/// Serialized [`CodeSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSpecDoc {
    pub n: u32,
    #[serde(rename = "K")]
    pub k: usize,
    pub info_set: Vec<usize>,
    pub frozen_values: String,
    pub crc: Option<CrcDoc>,
    pub construction: ConstructionDoc,
}

fn parse_hex(s: &str) -> Result<u64> {
    let t = s.trim_start_matches("0x").trim_start_matches("0X");
    u64::from_str_radix(t, 16).map_err(|e| Error::Format {
        what: "hex value",
        reason: format!("{s:?}: {e}"),
    })
}

/// Packs bits most-significant-first into hex digits, zero padded.
pub fn bits_to_hex(bits: &[u8]) -> String {
    bits.chunks(4)
        .map(|c| {
            let nib = (0..4).fold(0u32, |acc, k| (acc << 1) | u32::from(c.get(k).copied().unwrap_or(0) & 1));
            char::from_digit(nib, 16).expect("nibble")
        })
        .collect()
}

pub fn hex_to_bits(hex: &str, count: usize) -> Result<Vec<u8>> {
    let digits = hex.chars().map(|c| c.to_digit(16)).collect::<Option<Vec<u32>>>().ok_or_else(|| Error::Format {
        what: "hex bit string",
        reason: format!("non-hex digit in {hex:?}"),
    })?;
    if digits.len() * 4 < count || digits.len() > count.div_ceil(4) {
        return Err(Error::Format {
            what: "hex bit string",
            reason: format!("{} digits cannot hold exactly {count} bits", digits.len()),
        });
    }
    Ok(digits
        .iter()
        .flat_map(|d| (0..4).rev().map(move |s| ((d >> s) & 1) as u8))
        .take(count)
        .collect())
}
