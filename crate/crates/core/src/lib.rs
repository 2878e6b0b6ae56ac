//! Polar codes with successive-cancellation list decoding and metric-sum
//! tree pruning.
//!
//! The crate is organised bottom-up:
//!
//! * [`construction`] evaluates polarized-channel reliabilities (BEC
//!   Bhattacharyya recursion or Gaussian approximation) and picks the
//!   information set.
//! * [`codec`] and [`crc`] turn payloads into codewords and back.
//! * [`channel`] simulates BPSK over AWGN / BEC with counter-based random
//!   streams.
//! * [`metric`] holds the log-domain path metrics and the copy-on-fork path
//!   workspaces.
//! * [`decoder`] runs SC, SCL and CA-SCL with a pruning hook after sorting.
//! * [`pruning`] implements the static (Monte Carlo calibrated) and dynamic
//!   (loss-budgeted) pruning policies.
//! * [`harness`] drives seeded Monte Carlo sweeps and writes reports.
//!
//! Bit indices are 0-based in the API and 1-based in serialized files.

pub mod channel;
pub mod codec;
pub mod construction;
pub mod crc;
pub mod decoder;
mod error;
pub mod harness;
pub mod metric;
pub mod pruning;

pub use channel::{ebn0_to_sigma, ChannelModel, ChannelObservation, FrameStreams};
pub use codec::{assemble_source, extract_info, polar_encode};
pub use construction::{
    evaluate_reliability_bec, evaluate_reliability_ga, select_information_set, CodeSpec,
    ReliabilityKind, ReliabilityProfile,
};
pub use crc::CrcDef;
pub use decoder::{
    decode_sc, decode_scl, ComplexityCounters, DecodeOutcome, DecodeStatus, DecoderKind,
    ListDecoder,
};
pub use error::{Error, Result};
pub use pruning::{LlrBudget, PrunePolicy};
