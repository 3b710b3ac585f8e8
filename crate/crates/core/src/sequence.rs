//! Bit-packed sequences, patterns and corpora.
//!
//! Positions are 0-based everywhere. Bits are packed MSB-first: bit `i`
//! lives in bit `7 - (i % 8)` of byte `i / 8`, so a hex dump of the payload
//! reads left to right as the bit string. Unused trailing bits of the last
//! byte are always zero and are never windowed.

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SbcError};
use crate::generators::GeneratorSpec;

/// Largest supported pattern length; one pattern fits a machine word.
pub const MAX_PATTERN_BITS: usize = 64;

/// An immutable binary sequence `s_0 s_1 ... s_{n-1}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitSequence {
    bytes: Vec<u8>,
    len_bits: usize,
}

impl BitSequence {
    /// Builds a sequence from an MSB-first payload. The payload must hold
    /// exactly `ceil(len_bits / 8)` bytes with zeroed padding bits.
    pub fn from_bytes(bytes: Vec<u8>, len_bits: usize) -> Result<Self> {
        if len_bits == 0 {
            return Err(SbcError::validation("sequence must contain at least one bit"));
        }
        let expected = len_bits.div_ceil(8);
        if bytes.len() != expected {
            return Err(SbcError::validation(format!(
                "payload of {} bytes does not match {len_bits} bits (expected {expected} bytes)",
                bytes.len()
            )));
        }
        if bytes[expected - 1] & padding_mask(len_bits) != 0 {
            return Err(SbcError::validation("nonzero padding bits in last byte"));
        }
        Ok(BitSequence { bytes, len_bits })
    }

    /// Like [`BitSequence::from_bytes`] but clears padding bits and drops
    /// surplus bytes instead of rejecting them. Used by generators.
    pub(crate) fn from_bytes_truncated(mut bytes: Vec<u8>, len_bits: usize) -> Self {
        debug_assert!(len_bits >= 1 && bytes.len() * 8 >= len_bits);
        bytes.truncate(len_bits.div_ceil(8));
        let last = bytes.len() - 1;
        bytes[last] &= !padding_mask(len_bits);
        BitSequence { bytes, len_bits }
    }

    /// Treats every byte as eight sequence bits.
    pub fn from_raw_bytes(bytes: Vec<u8>) -> Result<Self> {
        let len_bits = bytes.len() * 8;
        Self::from_bytes(bytes, len_bits)
    }

    /// Packs a list of 0/1 values.
    pub fn pack_bits(bits: &[u8]) -> Result<Self> {
        if bits.is_empty() {
            return Err(SbcError::validation("cannot pack an empty bit list"));
        }
        let mut bytes = vec![0u8; bits.len().div_ceil(8)];
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => bytes[i / 8] |= 0x80 >> (i % 8),
                other => {
                    return Err(SbcError::validation(format!(
                        "bit list entry {i} is {other}, expected 0 or 1"
                    )))
                }
            }
        }
        Ok(BitSequence {
            bytes,
            len_bits: bits.len(),
        })
    }

    /// Inverse of [`BitSequence::pack_bits`].
    pub fn unpack_bits(&self) -> Vec<u8> {
        self.iter().map(u8::from).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len_bits
    }

    /// Always false; kept for API symmetry with `len`.
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Bit at position `i`. Panics when out of range.
    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len_bits, "bit index {i} out of range {}", self.len_bits);
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len_bits).map(move |i| self.bytes[i / 8] & (0x80 >> (i % 8)) != 0)
    }

    /// The `m` bits starting at `i`, first sequence bit in the most
    /// significant pattern position.
    pub fn window_at(&self, i: usize, m: usize) -> Result<Pattern> {
        check_pattern_len(m)?;
        if m > self.len_bits {
            return Err(SbcError::SequenceTooShort {
                n: self.len_bits,
                m,
            });
        }
        let last_start = self.len_bits - m;
        if i > last_start {
            return Err(SbcError::Bounds {
                what: "window start",
                index: i,
                limit: last_start,
            });
        }
        Ok(Pattern {
            value: self.window_unchecked(i, m),
            len_bits: m as u8,
        })
    }

    /// Window read without bounds checks beyond the slice accesses.
    /// Reads up to 9 bytes into a 128-bit accumulator.
    #[inline]
    pub(crate) fn window_unchecked(&self, i: usize, m: usize) -> u64 {
        let first = i / 8;
        let last = (i + m - 1) / 8;
        let mut acc: u128 = 0;
        for &b in &self.bytes[first..=last] {
            acc = (acc << 8) | b as u128;
        }
        let consumed = (last - first + 1) * 8;
        let shift = consumed - (i % 8) - m;
        ((acc >> shift) & low_mask(m) as u128) as u64
    }

    /// The first `k` bits of this sequence.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.len_bits {
            return Err(SbcError::Bounds {
                what: "prefix length",
                index: k,
                limit: self.len_bits,
            });
        }
        Ok(Self::from_bytes_truncated(self.bytes.clone(), k))
    }

    /// Fraction of set bits.
    pub fn ones_fraction(&self) -> f64 {
        let ones: u64 = self.bytes.iter().map(|b| b.count_ones() as u64).sum();
        ones as f64 / self.len_bits as f64
    }
}

impl fmt::Debug for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len_bits <= 64 {
            write!(f, "BitSequence(\"{self}\")")
        } else {
            write!(f, "BitSequence({} bits, {}..)", self.len_bits, hex::encode(&self.bytes[..8]))
        }
    }
}

impl fmt::Display for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Parses a string of `0`/`1` characters.
impl FromStr for BitSequence {
    type Err = SbcError;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .bytes()
            .enumerate()
            .map(|(i, c)| match c {
                b'0' => Ok(0),
                b'1' => Ok(1),
                _ => Err(SbcError::validation(format!(
                    "character {i} of bit string is not 0 or 1"
                ))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::pack_bits(&bits)
    }
}

#[inline]
fn padding_mask(len_bits: usize) -> u8 {
    match len_bits % 8 {
        0 => 0,
        r => 0xFF >> r,
    }
}

#[inline]
pub(crate) fn low_mask(m: usize) -> u64 {
    if m >= 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

pub(crate) fn check_pattern_len(m: usize) -> Result<()> {
    if m == 0 || m > MAX_PATTERN_BITS {
        Err(SbcError::UnsupportedPatternLength(m))
    } else {
        Ok(())
    }
}

/// A bit string of length `1..=64`, right-aligned in a `u64`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    value: u64,
    len_bits: u8,
}

impl Pattern {
    /// Rejects lengths outside `1..=64` and values with bits above `len_bits`.
    pub fn new(value: u64, len_bits: usize) -> Result<Self> {
        check_pattern_len(len_bits)?;
        if value & !low_mask(len_bits) != 0 {
            return Err(SbcError::validation(format!(
                "pattern value {value:#x} does not fit in {len_bits} bits"
            )));
        }
        Ok(Pattern {
            value,
            len_bits: len_bits as u8,
        })
    }

    #[inline]
    pub(crate) fn from_parts_unchecked(value: u64, len_bits: usize) -> Self {
        Pattern {
            value,
            len_bits: len_bits as u8,
        }
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len_bits as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Bit `j` of the pattern, counting from its first (most significant) bit.
    #[inline]
    pub fn bit(&self, j: usize) -> bool {
        debug_assert!(j < self.len());
        (self.value >> (self.len() - 1 - j)) & 1 == 1
    }

    /// Number of hex digits used for a zero-padded rendering.
    #[inline]
    pub fn hex_width(&self) -> usize {
        self.len().div_ceil(4)
    }

    /// Zero-padded lowercase hex of the value.
    pub fn to_hex(&self) -> String {
        format!("{:0width$x}", self.value, width = self.hex_width())
    }

    /// Parses `<hex>:<mbits>`, e.g. `a5:8`.
    pub fn parse_hex_spec(spec: &str) -> Result<Self> {
        let (hex_part, bits_part) = spec
            .split_once(':')
            .ok_or_else(|| SbcError::validation(format!("pattern `{spec}` is not <hex>:<mbits>")))?;
        let m: usize = bits_part
            .trim()
            .parse()
            .map_err(|_| SbcError::validation(format!("bad pattern length `{bits_part}`")))?;
        let value = u64::from_str_radix(hex_part.trim(), 16)
            .map_err(|_| SbcError::validation(format!("bad pattern hex `{hex_part}`")))?;
        Self::new(value, m)
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pattern(\"{self}\")")
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.len() {
            f.write_str(if self.bit(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Pattern {
    type Err = SbcError;

    /// Parses a `0`/`1` string.
    fn from_str(s: &str) -> Result<Self> {
        check_pattern_len(s.len())?;
        let mut value = 0u64;
        for c in s.bytes() {
            value = (value << 1)
                | match c {
                    b'0' => 0,
                    b'1' => 1,
                    _ => return Err(SbcError::validation(format!("`{s}` is not a bit string"))),
                };
        }
        Self::new(value, s.len())
    }
}

/// An ordered collection of sequences with a free-form label.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub sequences: Vec<BitSequence>,
    pub label: String,
    /// Provenance; not part of the SBC1 binary format.
    pub generator: Option<GeneratorSpec>,
}

impl Corpus {
    pub fn new(sequences: Vec<BitSequence>, label: impl Into<String>) -> Self {
        Corpus {
            sequences,
            label: label.into(),
            generator: None,
        }
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Shortest sequence length, if any.
    pub fn min_len_bits(&self) -> Option<usize> {
        self.sequences.iter().map(BitSequence::len).min()
    }

    /// Same sequences and label; provenance is ignored.
    pub fn same_contents(&self, other: &Corpus) -> bool {
        self.sequences == other.sequences && self.label == other.label
    }

    /// Sub-corpus selected by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> Corpus {
        Corpus {
            sequences: indices.iter().map(|&i| self.sequences[i].clone()).collect(),
            label: self.label.clone(),
            generator: self.generator.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> BitSequence {
        s.parse().unwrap()
    }

    #[test]
    fn window_reads_bits_msb_first() {
        let p = seq("10110").window_at(1, 3).unwrap();
        assert_eq!(p.value(), 0b011);
        assert_eq!(p.len(), 3);
        assert_eq!(seq("0000").window_at(0, 4).unwrap(), Pattern::new(0, 4).unwrap());
    }

    #[test]
    fn window_out_of_range_names_index() {
        let err = seq("10110").window_at(3, 3).unwrap_err();
        match err {
            SbcError::Bounds { index, limit, .. } => {
                assert_eq!(index, 3);
                assert_eq!(limit, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            seq("101").window_at(0, 4),
            Err(SbcError::SequenceTooShort { n: 3, m: 4 })
        ));
        assert!(matches!(
            seq("101").window_at(0, 0),
            Err(SbcError::UnsupportedPatternLength(0))
        ));
    }

    #[test]
    fn window_spanning_nine_bytes() {
        let bytes: Vec<u8> = (0..16).map(|i| (i * 37 + 11) as u8).collect();
        let s = BitSequence::from_raw_bytes(bytes).unwrap();
        for i in 0..=(s.len() - 64) {
            let w = s.window_at(i, 64).unwrap().value();
            let mut expect = 0u64;
            for j in 0..64 {
                expect = (expect << 1) | s.bit(i + j) as u64;
            }
            assert_eq!(w, expect, "i = {i}");
        }
    }

    #[test]
    fn pack_examples() {
        let s = BitSequence::pack_bits(&[1, 0, 1]).unwrap();
        assert_eq!(s.as_bytes(), &[0b1010_0000]);
        assert_eq!(s.len(), 3);
        let z = BitSequence::pack_bits(&[0; 8]).unwrap();
        assert_eq!(z.as_bytes(), &[0x00]);
        assert_eq!(z.len(), 8);
        assert!(BitSequence::pack_bits(&[]).is_err());
        assert!(BitSequence::pack_bits(&[0, 2]).is_err());
    }

    #[test]
    fn from_bytes_rejects_dirty_padding() {
        assert!(BitSequence::from_bytes(vec![0b1010_0001], 3).is_err());
        assert!(BitSequence::from_bytes(vec![0xFF, 0x00], 8).is_err());
        assert!(BitSequence::from_bytes(vec![], 0).is_err());
        assert!(BitSequence::from_bytes(vec![0b1010_0000], 3).is_ok());
    }

    #[test]
    fn prefix_matches_leading_bits() {
        let s = seq("1101001110");
        assert_eq!(s.prefix(4).unwrap(), seq("1101"));
        assert!(s.prefix(0).is_err());
        assert!(s.prefix(11).is_err());
    }

    #[test]
    fn pattern_invariants() {
        assert!(Pattern::new(0b100, 2).is_err());
        assert!(Pattern::new(0, 65).is_err());
        assert_ne!(Pattern::new(1, 2).unwrap(), Pattern::new(1, 3).unwrap());
        let p = Pattern::parse_hex_spec("a5:8").unwrap();
        assert_eq!(p.value(), 0xa5);
        assert_eq!(p.to_string(), "10100101");
        assert_eq!(Pattern::parse_hex_spec("5:12").unwrap().to_hex(), "005");
        assert!(Pattern::parse_hex_spec("1ff:8").is_err());
        assert_eq!(Pattern::new(u64::MAX, 64).unwrap().to_hex(), "ffffffffffffffff");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn pack_unpack_identity(bits in prop::collection::vec(0u8..=1, 1..4096)) {
                let s = BitSequence::pack_bits(&bits).unwrap();
                prop_assert_eq!(s.unpack_bits(), bits);
            }
        }

        proptest! {
            #[test]
            fn window_matches_per_bit_read(
                bits in prop::collection::vec(0u8..=1, 1..300),
                i in 0usize..300,
                m in 1usize..=64,
            ) {
                let s = BitSequence::pack_bits(&bits).unwrap();
                prop_assume!(m <= s.len() && i <= s.len() - m);
                let mut expect = 0u64;
                for &b in &bits[i..i + m] {
                    expect = (expect << 1) | b as u64;
                }
                prop_assert_eq!(s.window_at(i, m).unwrap().value(), expect);
            }
        }
    }
}
