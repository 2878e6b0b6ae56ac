//! Bit-serial CRC over `0/1` bit slices (MSB-first, non-reflected).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-reflected CRC definition. `poly` omits the implicit top bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrcDef {
    pub poly: u64,
    pub width: u32,
    pub init: u64,
    pub xor_out: u64,
}

impl CrcDef {
    /// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, xor_out 0.
    pub const CCITT16: CrcDef = CrcDef {
        poly: 0x1021,
        width: 16,
        init: 0xFFFF,
        xor_out: 0x0000,
    };

    pub fn new(poly: u64, width: u32, init: u64, xor_out: u64) -> Result<Self> {
        if width == 0 || width > 64 {
            return Err(Error::config(format!("CRC width {width} outside 1..=64")));
        }
        let mask = Self::mask_for(width);
        if poly & !mask != 0 || init & !mask != 0 || xor_out & !mask != 0 {
            return Err(Error::config(format!(
                "CRC parameters do not fit in {width} bits"
            )));
        }
        Ok(CrcDef {
            poly,
            width,
            init,
            xor_out,
        })
    }

    fn mask_for(width: u32) -> u64 {
        if width == 64 {
            u64::MAX
        } else {
            (1u64 << width) - 1
        }
    }

    fn mask(&self) -> u64 {
        Self::mask_for(self.width)
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    /// Register value after feeding `bits`, with `xor_out` applied.
    pub fn checksum(&self, bits: &[u8]) -> u64 {
        let top = 1u64 << (self.width - 1);
        let mut reg = self.init;
        for &b in bits {
            let feedback = ((reg & top) != 0) ^ (b != 0);
            reg = (reg << 1) & self.mask();
            if feedback {
                reg ^= self.poly;
            }
        }
        reg ^ self.xor_out
    }

    /// `payload` followed by `width` check bits, most significant first.
    pub fn append(&self, payload: &[u8]) -> Vec<u8> {
        let crc = self.checksum(payload);
        let mut out = Vec::with_capacity(payload.len() + self.width());
        out.extend_from_slice(payload);
        out.extend((0..self.width).rev().map(|s| ((crc >> s) & 1) as u8));
        out
    }

    /// True when the trailing `width` bits equal the checksum of the rest.
    pub fn verify(&self, bits: &[u8]) -> bool {
        let w = self.width();
        if bits.len() <= w {
            return false;
        }
        let (payload, tail) = bits.split_at(bits.len() - w);
        let got = tail.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b & 1));
        got == self.checksum(payload)
    }
}
