//! Seed bit strings.
//!
//! Bit `i` of a seed is bit `i % 8` of byte `i / 8` (least significant first),
//! so a 64-bit chunk starting on a byte boundary is the little-endian `u64`
//! stored in those eight bytes.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedBits {
    bytes: Vec<u8>,
    len: u64,
}

impl SeedBits {
    /// Takes the first `len` bits of `bytes`; trailing bits of the last byte
    /// are cleared.
    pub fn from_bytes(mut bytes: Vec<u8>, len: u64) -> Result<Self> {
        let needed = len.div_ceil(8) as usize;
        if bytes.len() < needed {
            return Err(Error::SeedLength {
                expected: len,
                actual: bytes.len() as u64 * 8,
            });
        }
        bytes.truncate(needed);
        if !len.is_multiple_of(8) {
            let last = bytes.last_mut().expect("len > 0");
            *last &= (1u8 << (len % 8)) - 1;
        }
        Ok(Self { bytes, len })
    }

    /// Concatenates `width`-bit chunks, first chunk in the lowest bits.
    pub fn from_chunks(width: u32, chunks: &[u64]) -> Self {
        let len = width as u64 * chunks.len() as u64;
        let mut seed = Self {
            bytes: vec![0; len.div_ceil(8) as usize],
            len,
        };
        for (i, &c) in chunks.iter().enumerate() {
            seed.write_chunk(i as u64 * width as u64, width, c);
        }
        seed
    }

    pub fn zeros(len: u64) -> Self {
        Self {
            bytes: vec![0; len.div_ceil(8) as usize],
            len,
        }
    }

    /// Parses a hex string (whitespace ignored, optional `0x`). The bit
    /// length is four bits per digit; an odd digit count is allowed.
    pub fn from_hex(s: &str) -> Result<Self> {
        let cleaned: String = s
            .trim()
            .trim_start_matches("0x")
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect();
        let len = cleaned.len() as u64 * 4;
        let padded = if cleaned.len() % 2 == 1 {
            format!("{cleaned}0")
        } else {
            cleaned
        };
        let bytes = hex::decode(&padded).map_err(|e| Error::Parse {
            line: 1,
            msg: format!("invalid hex seed: {e}"),
        })?;
        Self::from_bytes(bytes, len)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bit(&self, i: u64) -> bool {
        assert!(i < self.len);
        (self.bytes[(i / 8) as usize] >> (i % 8)) & 1 == 1
    }

    /// Reads `width ≤ 64` bits starting at bit `offset`.
    pub fn chunk(&self, offset: u64, width: u32) -> u64 {
        assert!(width <= 64 && offset + width as u64 <= self.len);
        if offset.is_multiple_of(8) && width == 64 {
            let start = (offset / 8) as usize;
            return u64::from_le_bytes(self.bytes[start..start + 8].try_into().unwrap());
        }
        let mut v = 0u64;
        for t in 0..width as u64 {
            if self.bit(offset + t) {
                v |= 1 << t;
            }
        }
        v
    }

    /// Copies out bits `[offset, offset + len)` as a new seed.
    pub fn slice(&self, offset: u64, len: u64) -> SeedBits {
        assert!(offset + len <= self.len);
        if offset.is_multiple_of(8) {
            let start = (offset / 8) as usize;
            let end = start + len.div_ceil(8) as usize;
            return Self::from_bytes(self.bytes[start..end].to_vec(), len).unwrap();
        }
        let mut out = Self::zeros(len);
        for i in 0..len {
            if self.bit(offset + i) {
                out.bytes[(i / 8) as usize] |= 1 << (i % 8);
            }
        }
        out
    }

    /// Overwrites `width` bits starting at `offset` with the low bits of `value`.
    pub fn write_chunk(&mut self, offset: u64, width: u32, value: u64) {
        assert!(width <= 64 && offset + width as u64 <= self.len);
        for t in 0..width as u64 {
            let i = offset + t;
            let byte = &mut self.bytes[(i / 8) as usize];
            if (value >> t) & 1 == 1 {
                *byte |= 1 << (i % 8);
            } else {
                *byte &= !(1 << (i % 8));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_round_trip() {
        let chunks = [0x3u64, 0xF, 0x0, 0xA, 0x5];
        let s = SeedBits::from_chunks(4, &chunks);
        assert_eq!(s.len(), 20);
        for (i, c) in chunks.iter().enumerate() {
            assert_eq!(s.chunk(i as u64 * 4, 4), *c);
        }
        let s = SeedBits::from_chunks(64, &[u64::MAX, 7]);
        assert_eq!(s.chunk(64, 64), 7);
        assert_eq!(s.slice(64, 64).chunk(0, 64), 7);
    }

    #[test]
    fn hex_parsing() {
        let s = SeedBits::from_hex("0x0102").unwrap();
        assert_eq!(s.len(), 16);
        assert_eq!(s.chunk(0, 8), 1);
        assert_eq!(s.chunk(8, 8), 2);
        let s = SeedBits::from_hex("abc").unwrap();
        assert_eq!(s.len(), 12);
        assert!(SeedBits::from_hex("zz").is_err());
    }

    #[test]
    fn short_byte_buffer_rejected() {
        assert!(SeedBits::from_bytes(vec![0; 1], 9).is_err());
    }
}
