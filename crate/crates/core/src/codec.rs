//! Polar transform and scatter/gather between payloads and source words.

use crate::construction::CodeSpec;
use crate::error::{Error, Result};

/// Polar transform `x = (encode(u_odd ^ u_even), encode(u_even))`, where
/// `u_odd`/`u_even` are the 1-based odd/even entries of `u`.
///
/// The transform is its own inverse.
pub fn polar_encode(u: &[u8]) -> Result<Vec<u8>> {
    if !u.len().is_power_of_two() {
        return Err(Error::config(format!("length {} is not a power of two", u.len())));
    }
    let mut out = vec![0u8; u.len()];
    encode_into(u, &mut out);
    Ok(out)
}

fn encode_into(u: &[u8], out: &mut [u8]) {
    if u.len() == 1 {
        out[0] = u[0] & 1;
        return;
    }
    let half = u.len() / 2;
    let mut mixed = Vec::with_capacity(half);
    let mut evens = Vec::with_capacity(half);
    for pair in u.chunks_exact(2) {
        mixed.push(pair[0] ^ pair[1]);
        evens.push(pair[1]);
    }
    let (lo, hi) = out.split_at_mut(half);
    encode_into(&mixed, lo);
    encode_into(&evens, hi);
}

/// Reverses the lowest `bits` bits of `i`.
pub(crate) fn bit_reverse(i: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - bits)
    }
}

/// Scatters `info_bits` onto the information set and fills frozen values.
pub fn assemble_source(spec: &CodeSpec, info_bits: &[u8]) -> Result<Vec<u8>> {
    if info_bits.len() != spec.k() {
        return Err(Error::config(format!(
            "{} information bits for K = {}",
            info_bits.len(),
            spec.k()
        )));
    }
    let mut u: Vec<u8> = (0..spec.len()).map(|i| spec.frozen_bit(i)).collect();
    for (&pos, &b) in spec.info_set().iter().zip(info_bits) {
        u[pos] = b & 1;
    }
    Ok(u)
}

/// Gathers the information-set bits of a decided source word.
pub fn extract_info(spec: &CodeSpec, u_hat: &[u8]) -> Result<Vec<u8>> {
    if u_hat.len() != spec.len() {
        return Err(Error::config(format!(
            "source word of length {} for N = {}",
            u_hat.len(),
            spec.len()
        )));
    }
    Ok(spec.info_set().iter().map(|&i| u_hat[i]).collect())
}
