//! Seedable sequence sources.
//!
//! `chacha20` realizes the keystream model `G(K, N) -> S`; `uniform` draws
//! from a seeded CSPRNG as the stand-in for the uniform distribution over
//! `{0,1}^n`. The remaining kinds are deliberately structured simulants
//! whose bias a pattern-statistics distinguisher should be able to see.
//!
//! Every generator is a pure function of its spec and the requested
//! length, and generating `n` bits then truncating to `k` equals generating
//! `k` bits directly.

pub mod chacha20;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Result, SbcError};
use crate::sequence::{BitSequence, Corpus};

pub use chacha20::{KEY_BYTES, NONCE_BYTES};

pub const DEFAULT_LCG_MULTIPLIER: u64 = 1_103_515_245;
pub const DEFAULT_LCG_INCREMENT: u64 = 12_345;
pub const DEFAULT_LCG_MODULUS: u64 = 1 << 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    ChaCha20,
    Uniform,
    BiasedBit,
    LcgTruncated,
    RepeatBlock,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 5] = [
        GeneratorKind::ChaCha20,
        GeneratorKind::Uniform,
        GeneratorKind::BiasedBit,
        GeneratorKind::LcgTruncated,
        GeneratorKind::RepeatBlock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::ChaCha20 => "chacha20",
            GeneratorKind::Uniform => "uniform",
            GeneratorKind::BiasedBit => "biased-bit",
            GeneratorKind::LcgTruncated => "lcg-truncated",
            GeneratorKind::RepeatBlock => "repeat-block",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = SbcError;

    fn from_str(s: &str) -> Result<Self> {
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SbcError::validation(format!("unknown generator kind `{s}`")))
    }
}

/// A fully parameterized generator.
#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    ChaCha20 {
        key: [u8; KEY_BYTES],
        nonce: [u8; NONCE_BYTES],
    },
    Uniform {
        seed: u64,
    },
    BiasedBit {
        seed: u64,
        p: f64,
    },
    LcgTruncated {
        seed: u64,
        multiplier: u64,
        increment: u64,
        modulus: u64,
    },
    RepeatBlock {
        seed: u64,
        period: usize,
    },
}

/// Loose, optional parameters as they arrive from a CLI or config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GeneratorParams {
    pub key: Option<[u8; KEY_BYTES]>,
    pub nonce: Option<[u8; NONCE_BYTES]>,
    pub seed: Option<u64>,
    pub p: Option<f64>,
    pub period: Option<usize>,
    pub lcg_multiplier: Option<u64>,
    pub lcg_increment: Option<u64>,
    pub lcg_modulus: Option<u64>,
}

impl GeneratorSpec {
    /// Builds a spec from loose parameters, rejecting any parameter that
    /// the kind does not use and any required one that is missing.
    /// LCG constants fall back to the classic `1103515245 / 12345 / 2^31`.
    pub fn from_params(kind: GeneratorKind, params: &GeneratorParams) -> Result<Self> {
        let mut extraneous = Vec::new();
        let mut flag = |present: bool, name: &'static str, allowed: bool| {
            if present && !allowed {
                extraneous.push(name);
            }
        };
        let is = |k: GeneratorKind| kind == k;
        flag(params.key.is_some(), "key", is(GeneratorKind::ChaCha20));
        flag(params.nonce.is_some(), "nonce", is(GeneratorKind::ChaCha20));
        flag(params.seed.is_some(), "seed", !is(GeneratorKind::ChaCha20));
        flag(params.p.is_some(), "p", is(GeneratorKind::BiasedBit));
        flag(params.period.is_some(), "period", is(GeneratorKind::RepeatBlock));
        let lcg = is(GeneratorKind::LcgTruncated);
        flag(params.lcg_multiplier.is_some(), "lcg-mul", lcg);
        flag(params.lcg_increment.is_some(), "lcg-inc", lcg);
        flag(params.lcg_modulus.is_some(), "lcg-mod", lcg);
        if !extraneous.is_empty() {
            return Err(SbcError::validation(format!(
                "parameter(s) {} not used by generator kind {kind}",
                extraneous.join(", ")
            )));
        }

        let missing = |name: &str| SbcError::validation(format!("generator kind {kind} requires `{name}`"));
        let seed = || params.seed.ok_or_else(|| missing("seed"));
        let spec = match kind {
            GeneratorKind::ChaCha20 => GeneratorSpec::ChaCha20 {
                key: params.key.ok_or_else(|| missing("key"))?,
                nonce: params.nonce.ok_or_else(|| missing("nonce"))?,
            },
            GeneratorKind::Uniform => GeneratorSpec::Uniform { seed: seed()? },
            GeneratorKind::BiasedBit => GeneratorSpec::BiasedBit {
                seed: seed()?,
                p: params.p.ok_or_else(|| missing("p"))?,
            },
            GeneratorKind::LcgTruncated => GeneratorSpec::LcgTruncated {
                seed: seed()?,
                multiplier: params.lcg_multiplier.unwrap_or(DEFAULT_LCG_MULTIPLIER),
                increment: params.lcg_increment.unwrap_or(DEFAULT_LCG_INCREMENT),
                modulus: params.lcg_modulus.unwrap_or(DEFAULT_LCG_MODULUS),
            },
            GeneratorKind::RepeatBlock => GeneratorSpec::RepeatBlock {
                seed: seed()?,
                period: params.period.ok_or_else(|| missing("period"))?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn kind(&self) -> GeneratorKind {
        match self {
            GeneratorSpec::ChaCha20 { .. } => GeneratorKind::ChaCha20,
            GeneratorSpec::Uniform { .. } => GeneratorKind::Uniform,
            GeneratorSpec::BiasedBit { .. } => GeneratorKind::BiasedBit,
            GeneratorSpec::LcgTruncated { .. } => GeneratorKind::LcgTruncated,
            GeneratorSpec::RepeatBlock { .. } => GeneratorKind::RepeatBlock,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GeneratorSpec::BiasedBit { p, .. } if !(0.0..=1.0).contains(&p) => Err(
                SbcError::validation(format!("bias p = {p} must lie in [0, 1]")),
            ),
            GeneratorSpec::RepeatBlock { period: 0, .. } => {
                Err(SbcError::validation("repeat-block period must be at least 1 bit"))
            }
            GeneratorSpec::LcgTruncated { modulus, multiplier, increment, .. } => {
                if modulus < 256 {
                    return Err(SbcError::validation(format!(
                        "LCG modulus {modulus} must be at least 256 to yield 8 output bits"
                    )));
                }
                if multiplier == 0 || multiplier >= modulus || increment >= modulus {
                    return Err(SbcError::validation(
                        "LCG multiplier must be in 1..modulus and increment in 0..modulus",
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Same spec with its reproducibility seed replaced. ChaCha20 specs
    /// instead get the low 32 bits of the nonce (bytes 8..12, little
    /// endian) set to `seed mod 2^32`.
    pub fn reseeded(&self, seed: u64) -> GeneratorSpec {
        let mut spec = self.clone();
        match &mut spec {
            GeneratorSpec::ChaCha20 { nonce, .. } => {
                nonce[8..].copy_from_slice(&(seed as u32).to_le_bytes());
            }
            GeneratorSpec::Uniform { seed: s }
            | GeneratorSpec::BiasedBit { seed: s, .. }
            | GeneratorSpec::LcgTruncated { seed: s, .. }
            | GeneratorSpec::RepeatBlock { seed: s, .. } => *s = seed,
        }
        spec
    }

    /// Produces `len_bits` bits.
    pub fn generate(&self, len_bits: usize) -> Result<BitSequence> {
        if len_bits == 0 {
            return Err(SbcError::validation("requested length must be at least 1 bit"));
        }
        self.validate()?;
        Ok(match *self {
            GeneratorSpec::ChaCha20 { ref key, ref nonce } => generate_keystream(key, nonce, len_bits),
            GeneratorSpec::Uniform { seed } => generate_uniform(seed, len_bits),
            GeneratorSpec::BiasedBit { seed, p } => biased_bits(seed, p, len_bits),
            GeneratorSpec::LcgTruncated {
                seed,
                multiplier,
                increment,
                modulus,
            } => lcg_truncated(seed, multiplier, increment, modulus, len_bits),
            GeneratorSpec::RepeatBlock { seed, period } => repeat_block(seed, period, len_bits),
        })
    }

    /// `key = value` lines describing the spec, for manifests.
    pub fn describe(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![("kind", self.kind().name().to_owned())];
        match self {
            GeneratorSpec::ChaCha20 { key, nonce } => {
                out.push(("key", hex::encode(key)));
                out.push(("nonce", hex::encode(nonce)));
            }
            GeneratorSpec::Uniform { seed } => out.push(("seed", seed.to_string())),
            GeneratorSpec::BiasedBit { seed, p } => {
                out.push(("seed", seed.to_string()));
                out.push(("p", p.to_string()));
            }
            GeneratorSpec::LcgTruncated {
                seed,
                multiplier,
                increment,
                modulus,
            } => {
                out.push(("seed", seed.to_string()));
                out.push(("lcg-mul", multiplier.to_string()));
                out.push(("lcg-inc", increment.to_string()));
                out.push(("lcg-mod", modulus.to_string()));
            }
            GeneratorSpec::RepeatBlock { seed, period } => {
                out.push(("seed", seed.to_string()));
                out.push(("period", period.to_string()));
            }
        }
        out
    }
}

/// First `len_bits` bits of the ChaCha20 keystream under `(key, nonce)`,
/// block counter starting at 0.
pub fn generate_keystream(key: &[u8; KEY_BYTES], nonce: &[u8; NONCE_BYTES], len_bits: usize) -> BitSequence {
    let bytes = chacha20::keystream(key, nonce, 0, len_bits.div_ceil(8));
    BitSequence::from_bytes_truncated(bytes, len_bits)
}

/// `len_bits` bits from a ChaCha20-based CSPRNG seeded with `seed`.
pub fn generate_uniform(seed: u64, len_bits: usize) -> BitSequence {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut bytes = vec![0u8; len_bits.div_ceil(8)];
    rng.fill_bytes(&mut bytes);
    BitSequence::from_bytes_truncated(bytes, len_bits)
}

/// Structured simulants: `biased-bit`, `lcg-truncated`, `repeat-block`.
pub fn generate_structured(spec: &GeneratorSpec, len_bits: usize) -> Result<BitSequence> {
    match spec.kind() {
        GeneratorKind::ChaCha20 | GeneratorKind::Uniform => Err(SbcError::validation(format!(
            "{} is not a structured generator",
            spec.kind()
        ))),
        _ => spec.generate(len_bits),
    }
}

fn biased_bits(seed: u64, p: f64, len_bits: usize) -> BitSequence {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut bytes = vec![0u8; len_bits.div_ceil(8)];
    for i in 0..len_bits {
        // gen::<f64>() is in [0, 1), so p = 1 always sets and p = 0 never does.
        if rng.gen::<f64>() < p {
            bytes[i / 8] |= 0x80 >> (i % 8);
        }
    }
    BitSequence::from_bytes_truncated(bytes, len_bits)
}

/// Top 8 bits of each successive LCG state, where "top" is relative to
/// the bit width of `modulus - 1`. The seed is the state before the first step.
fn lcg_truncated(seed: u64, multiplier: u64, increment: u64, modulus: u64, len_bits: usize) -> BitSequence {
    let width = 64 - (modulus - 1).leading_zeros();
    let shift = width - 8;
    let (a, c, m) = (multiplier as u128, increment as u128, modulus as u128);
    let mut state = seed as u128 % m;
    let bytes = (0..len_bits.div_ceil(8))
        .map(|_| {
            state = (a * state + c) % m;
            (state >> shift) as u8
        })
        .collect();
    BitSequence::from_bytes_truncated(bytes, len_bits)
}

fn repeat_block(seed: u64, period: usize, len_bits: usize) -> BitSequence {
    let block = generate_uniform(seed, period);
    let mut bytes = vec![0u8; len_bits.div_ceil(8)];
    for i in 0..len_bits {
        if block.bit(i % period) {
            bytes[i / 8] |= 0x80 >> (i % 8);
        }
    }
    BitSequence::from_bytes_truncated(bytes, len_bits)
}

/// `count` sequences of `len_bits` bits; sequence `i` uses
/// `spec.reseeded(base_seed + i)`. Output order is fixed by index
/// regardless of how the work is scheduled.
pub fn generate_corpus(spec: &GeneratorSpec, count: usize, len_bits: usize, base_seed: u64) -> Result<Corpus> {
    if count == 0 {
        return Err(SbcError::validation("corpus must contain at least one sequence"));
    }
    spec.validate()?;
    let sequences = (0..count)
        .into_par_iter()
        .map(|i| spec.reseeded(base_seed.wrapping_add(i as u64)).generate(len_bits))
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus {
        sequences,
        label: spec.kind().name().to_owned(),
        generator: Some(spec.clone()),
    })
}
