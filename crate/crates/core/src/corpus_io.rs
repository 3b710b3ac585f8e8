//! The SBC1 corpus container.
//!
//! ```text
//! magic      53 42 43 31            "SBC1"
//! count      u32 LE                 number of records
//! record*    u32 LE bit length L, then ceil(L/8) payload bytes (MSB-first, zero padded)
//! label      u8 length, then UTF-8 bytes
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Result, SbcError};
use crate::sequence::{BitSequence, Corpus};

pub const MAGIC: [u8; 4] = *b"SBC1";

pub fn encode_corpus(corpus: &Corpus) -> Result<Vec<u8>> {
    let label = corpus.label.as_bytes();
    if label.len() > u8::MAX as usize {
        return Err(SbcError::validation(format!(
            "corpus label is {} bytes, the format allows at most 255",
            label.len()
        )));
    }
    let count = u32::try_from(corpus.sequences.len())
        .map_err(|_| SbcError::validation("too many sequences for a u32 record count"))?;
    let payload: usize = corpus.sequences.iter().map(|s| 4 + s.as_bytes().len()).sum();
    let mut out = Vec::with_capacity(8 + payload + 1 + label.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&count.to_le_bytes());
    for seq in &corpus.sequences {
        let len = u32::try_from(seq.len())
            .map_err(|_| SbcError::validation("sequence longer than u32::MAX bits"))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(seq.as_bytes());
    }
    out.push(label.len() as u8);
    out.extend_from_slice(label);
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(SbcError::format(
                self.pos,
                format!("truncated {what}: need {n} bytes, {} left", self.buf.len() - self.pos),
            ));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn decode_corpus(buf: &[u8]) -> Result<Corpus> {
    if buf.len() < 4 || buf[..4] != MAGIC {
        return Err(SbcError::format(0, "bad magic, expected SBC1"));
    }
    let mut cur = Cursor { buf, pos: 4 };
    let count = cur.u32("record count")? as usize;
    // Each record needs at least 5 bytes; guards the allocation below.
    let mut sequences = Vec::with_capacity(count.min(buf.len() / 5));
    for _ in 0..count {
        let record_at = cur.pos;
        let len_bits = cur.u32("record length")? as usize;
        if len_bits == 0 {
            return Err(SbcError::format(record_at, "record with zero bit length"));
        }
        let payload_at = cur.pos;
        let payload = cur.take(len_bits.div_ceil(8), "record payload")?;
        let seq = BitSequence::from_bytes(payload.to_vec(), len_bits)
            .map_err(|e| SbcError::format(payload_at, e.to_string()))?;
        sequences.push(seq);
    }
    let label_len = cur.take(1, "label length")?[0] as usize;
    let label_at = cur.pos;
    let label = std::str::from_utf8(cur.take(label_len, "label")?)
        .map_err(|_| SbcError::format(label_at, "label is not valid UTF-8"))?
        .to_owned();
    if cur.pos != buf.len() {
        return Err(SbcError::format(
            cur.pos,
            format!("{} bytes of trailing garbage", buf.len() - cur.pos),
        ));
    }
    Ok(Corpus::new(sequences, label))
}

pub fn write_corpus<W: Write>(mut w: W, corpus: &Corpus) -> Result<()> {
    w.write_all(&encode_corpus(corpus)?)?;
    w.flush()?;
    Ok(())
}

pub fn read_corpus<R: Read>(mut r: R) -> Result<Corpus> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode_corpus(&buf)
}

pub fn write_corpus_file(path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
    fs::write(path, encode_corpus(corpus)?)?;
    Ok(())
}

pub fn read_corpus_file(path: impl AsRef<Path>) -> Result<Corpus> {
    decode_corpus(&fs::read(path)?)
}

/// Reads an arbitrary file as one sequence of `8 × filesize` bits.
pub fn read_raw_file(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let seq = BitSequence::from_raw_bytes(fs::read(path)?)?;
    Ok(Corpus::new(vec![seq], path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Corpus {
        Corpus::new(
            vec![
                BitSequence::from_bytes(vec![0xAB, 0xCD], 16).unwrap(),
                BitSequence::from_bytes(vec![0x12, 0x34], 16).unwrap(),
            ],
            "cipher",
        )
    }

    #[test]
    fn two_record_layout() {
        let bytes = encode_corpus(&sample()).unwrap();
        let mut expect = b"SBC1".to_vec();
        expect.extend_from_slice(&2u32.to_le_bytes());
        expect.extend_from_slice(&16u32.to_le_bytes());
        expect.extend_from_slice(&[0xAB, 0xCD]);
        expect.extend_from_slice(&16u32.to_le_bytes());
        expect.extend_from_slice(&[0x12, 0x34]);
        expect.push(6);
        expect.extend_from_slice(b"cipher");
        assert_eq!(bytes, expect);
        assert!(decode_corpus(&bytes).unwrap().same_contents(&sample()));
    }

    #[test]
    fn odd_lengths_round_trip() {
        let c = Corpus::new(
            vec!["1".parse().unwrap(), "101100111".parse().unwrap()],
            "ünïcode",
        );
        let back = decode_corpus(&encode_corpus(&c).unwrap()).unwrap();
        assert!(back.same_contents(&c));
    }

    #[test]
    fn wrong_magic_fails_at_offset_zero() {
        let mut bytes = encode_corpus(&sample()).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode_corpus(&bytes), Err(SbcError::Format { offset: 0, .. })));
        assert!(matches!(decode_corpus(b"SB"), Err(SbcError::Format { offset: 0, .. })));
    }

    #[test]
    fn truncation_and_trailing_garbage_report_offsets() {
        let bytes = encode_corpus(&sample()).unwrap();
        // cut inside the second payload
        match decode_corpus(&bytes[..19]) {
            Err(SbcError::Format { offset, .. }) => assert_eq!(offset, 18),
            other => panic!("unexpected {other:?}"),
        }
        let mut extra = bytes.clone();
        extra.push(0);
        match decode_corpus(&extra) {
            Err(SbcError::Format { offset, .. }) => assert_eq!(offset, bytes.len()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dirty_padding_and_zero_length_rejected() {
        let c = Corpus::new(vec!["101".parse().unwrap()], "");
        let mut bytes = encode_corpus(&c).unwrap();
        bytes[12] |= 1;
        assert!(matches!(decode_corpus(&bytes), Err(SbcError::Format { offset: 12, .. })));

        let mut zero = b"SBC1".to_vec();
        zero.extend_from_slice(&1u32.to_le_bytes());
        zero.extend_from_slice(&0u32.to_le_bytes());
        zero.push(0);
        assert!(matches!(decode_corpus(&zero), Err(SbcError::Format { offset: 8, .. })));
    }

    #[test]
    fn long_label_rejected() {
        let c = Corpus::new(vec!["1".parse().unwrap()], "x".repeat(256));
        assert!(encode_corpus(&c).is_err());
    }
}
