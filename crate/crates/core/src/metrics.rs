//! Distribution-level metrics over frequency tables and the feature map
//! from a sequence to a fixed-length vector of structural statistics.

use std::fmt;

use crate::error::{Result, SbcError};
use crate::pattern::{extract_frequencies, FrequencyTable};
use crate::scalar::Scalar;
use crate::sequence::{check_pattern_len, BitSequence};

/// Pattern lengths used when none are given.
pub const DEFAULT_M_SET: [usize; 3] = [8, 16, 32];

/// Shannon entropy in bits, `-Σ p log2 p`, with `0 log 0 = 0`.
pub fn entropy<T: Scalar>(table: &FrequencyTable) -> T {
    if table.is_empty() {
        return T::zero();
    }
    let total = T::from_u64_lossy(table.total_windows());
    let h: T = table
        .counts()
        .map(|c| {
            let p = T::from_u64_lossy(c) / total;
            -(p * p.log2())
        })
        .sum();
    // a single-pattern table must come out as exactly 0, not -0
    h.max(T::zero())
}

/// Upper bound on [`entropy`]: `min(m, log2(total_windows))`.
pub fn entropy_ceiling<T: Scalar>(table: &FrequencyTable) -> T {
    let m = T::from_usize_lossy(table.m());
    if table.is_empty() {
        return T::zero();
    }
    m.min(T::from_u64_lossy(table.total_windows()).log2())
}

/// L1 distance between two normalized tables over the union of present
/// patterns. Lies in `[0, 2]`.
pub fn deviation<T: Scalar>(a: &FrequencyTable, b: &FrequencyTable) -> Result<T> {
    if a.m() != b.m() {
        return Err(SbcError::LengthMismatch {
            left: a.m(),
            right: b.m(),
        });
    }
    let mut xs = a.normalized_iter::<T>().peekable();
    let mut ys = b.normalized_iter::<T>().peekable();
    let mut d = T::zero();
    loop {
        let diff = match (xs.peek().copied(), ys.peek().copied()) {
            (None, None) => break,
            (Some((_, x)), None) => {
                xs.next();
                x
            }
            (None, Some((_, y))) => {
                ys.next();
                y
            }
            (Some((kx, x)), Some((ky, y))) => {
                if kx < ky {
                    xs.next();
                    x
                } else if ky < kx {
                    ys.next();
                    y
                } else {
                    xs.next();
                    ys.next();
                    (x - y).abs()
                }
            }
        };
        d = d + diff;
    }
    Ok(d)
}

/// L1 distance from the ideal table in which every one of the `2^m`
/// patterns has frequency `2^-m`. Absent patterns contribute `2^-m` each.
pub fn uniform_deviation<T: Scalar>(table: &FrequencyTable) -> T {
    let q = T::uniform_pattern_probability(table.m());
    let mut present = 0usize;
    let mut d = T::zero();
    for (_, f) in table.normalized_iter::<T>() {
        present += 1;
        d = d + (f - q).abs();
    }
    // (2^m - present) * 2^-m, written so that m = 64 does not overflow
    d + (T::one() - T::from_usize_lossy(present) * q)
}

/// Largest normalized frequency.
pub fn max_frequency<T: Scalar>(table: &FrequencyTable) -> T {
    if table.is_empty() {
        return T::zero();
    }
    T::from_u64_lossy(table.max_count()) / T::from_u64_lossy(table.total_windows())
}

/// Distinct patterns per window.
pub fn distinct_ratio<T: Scalar>(table: &FrequencyTable) -> T {
    if table.is_empty() {
        return T::zero();
    }
    T::from_usize_lossy(table.distinct()) / T::from_u64_lossy(table.total_windows())
}

/// Probability mass held by the most frequent tenth (rounded up) of the
/// present patterns.
pub fn top_decile_mass<T: Scalar>(table: &FrequencyTable) -> T {
    if table.is_empty() {
        return T::zero();
    }
    let mut counts: Vec<u64> = table.counts().collect();
    let keep = counts.len().div_ceil(10);
    counts.sort_unstable_by(|a, b| b.cmp(a));
    let mass: u64 = counts[..keep].iter().sum();
    T::from_u64_lossy(mass) / T::from_u64_lossy(table.total_windows())
}

/// Per-length statistics, in feature order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    Entropy,
    UniformDeviation,
    MaxFrequency,
    DistinctRatio,
}

impl Statistic {
    pub const ALL: [Statistic; 4] = [
        Statistic::Entropy,
        Statistic::UniformDeviation,
        Statistic::MaxFrequency,
        Statistic::DistinctRatio,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Statistic::Entropy => "entropy",
            Statistic::UniformDeviation => "uniform_deviation",
            Statistic::MaxFrequency => "max_frequency",
            Statistic::DistinctRatio => "distinct_ratio",
        }
    }

    pub fn of<T: Scalar>(self, table: &FrequencyTable) -> T {
        match self {
            Statistic::Entropy => entropy(table),
            Statistic::UniformDeviation => uniform_deviation(table),
            Statistic::MaxFrequency => max_frequency(table),
            Statistic::DistinctRatio => distinct_ratio(table),
        }
    }
}

/// A sorted, duplicate-free set of pattern lengths.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PatternLengths(Vec<usize>);

impl PatternLengths {
    pub fn new(lengths: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = lengths.into_iter().collect();
        if v.is_empty() {
            return Err(SbcError::validation("pattern length set is empty"));
        }
        for &m in &v {
            check_pattern_len(m)?;
        }
        v.sort_unstable();
        v.dedup();
        Ok(PatternLengths(v))
    }

    /// Parses `8,16,32`.
    pub fn parse(list: &str) -> Result<Self> {
        let parsed = list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| SbcError::validation(format!("bad pattern length `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(parsed)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn max(&self) -> usize {
        *self.0.last().expect("nonempty by construction")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl Default for PatternLengths {
    fn default() -> Self {
        PatternLengths(DEFAULT_M_SET.to_vec())
    }
}

impl fmt::Display for PatternLengths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// The structural feature vector of one sequence: for each pattern length
/// in ascending order, the four [`Statistic`]s in their fixed order.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector<T = f64> {
    lengths: PatternLengths,
    values: Vec<T>,
}

impl<T: Scalar> FeatureVector<T> {
    /// Wraps raw values; `values.len()` must be `4 × lengths.len()`.
    pub fn from_values(lengths: PatternLengths, values: Vec<T>) -> Result<Self> {
        if values.len() != Statistic::ALL.len() * lengths.len() {
            return Err(SbcError::validation(format!(
                "{} feature values for {} pattern lengths",
                values.len(),
                lengths.len()
            )));
        }
        Ok(FeatureVector { lengths, values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn lengths(&self) -> &PatternLengths {
        &self.lengths
    }

    pub fn get(&self, m: usize, stat: Statistic) -> Option<T> {
        let block = self.lengths.as_slice().iter().position(|&x| x == m)?;
        let offset = Statistic::ALL.iter().position(|&s| s == stat)?;
        Some(self.values[block * Statistic::ALL.len() + offset])
    }

    /// Rescales every coordinate by the matching factor.
    pub fn scaled(&self, factors: &[T]) -> Self {
        FeatureVector {
            lengths: self.lengths.clone(),
            values: self.values.iter().zip(factors).map(|(v, f)| *v * *f).collect(),
        }
    }
}

/// Coordinate names, e.g. `entropy_m8`, in feature order.
pub fn feature_names(lengths: &PatternLengths) -> Vec<String> {
    lengths
        .iter()
        .flat_map(|m| Statistic::ALL.iter().map(move |s| format!("{}_m{m}", s.short_name())))
        .collect()
}

/// Maps a sequence to its feature vector.
pub fn feature_vector<T: Scalar>(seq: &BitSequence, lengths: &PatternLengths) -> Result<FeatureVector<T>> {
    let mut values = Vec::with_capacity(Statistic::ALL.len() * lengths.len());
    for m in lengths.iter() {
        let table = extract_frequencies(seq, m)?;
        values.extend(Statistic::ALL.iter().map(|s| s.of::<T>(&table)));
    }
    Ok(FeatureVector {
        lengths: lengths.clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::generate_uniform;
    use crate::pattern::extract_aggregate;
    use crate::sequence::Corpus;

    fn table(s: &str, m: usize) -> FrequencyTable {
        extract_frequencies(&s.parse().unwrap(), m).unwrap()
    }

    #[test]
    fn entropy_single_outcome_is_zero() {
        for m in [1, 4, 8] {
            assert_eq!(entropy::<f64>(&table("0000000000000000", m)), 0.0);
        }
    }

    #[test]
    fn entropy_uniform_table_is_m() {
        for m in [1usize, 3, 8, 12] {
            let t = FrequencyTable::from_counts(m, (0..1u64 << m).map(|k| (k, 5))).unwrap();
            assert_eq!(entropy::<f64>(&t), m as f64);
        }
    }

    #[test]
    fn entropy_alternating_4096() {
        let s: String = "01".repeat(2048);
        let t = table(&s, 2);
        assert_eq!(t.count("01".parse().unwrap()), 2048);
        assert_eq!(t.count("10".parse().unwrap()), 2047);
        // closed form with p = 2048/4095, q = 2047/4095
        let (p, q) = (2048f64 / 4095.0, 2047f64 / 4095.0);
        let expect = -(p * p.log2() + q * q.log2());
        let h = entropy::<f64>(&t);
        assert!((h - expect).abs() < 1e-12);
        assert!((h - 1.0).abs() < 1e-6);
    }

    #[test]
    fn deviation_examples() {
        let a = table("0101", 2);
        let b = table("0000", 2);
        assert_eq!(deviation::<f64>(&a, &a).unwrap(), 0.0);
        assert!((deviation::<f64>(&a, &b).unwrap() - 2.0).abs() < 1e-15);
        assert!(deviation::<f64>(&a, &table("0000", 3)).is_err());
    }

    #[test]
    fn uniform_deviation_examples() {
        let exact = FrequencyTable::from_counts(8, (0..256u64).map(|k| (k, 3))).unwrap();
        assert_eq!(uniform_deviation::<f64>(&exact), 0.0);
        let zeros = extract_frequencies(&BitSequence::pack_bits(&[0; 4096]).unwrap(), 8).unwrap();
        let expect = (1.0 - 1.0 / 256.0) + 255.0 / 256.0;
        assert!((uniform_deviation::<f64>(&zeros) - expect).abs() < 1e-12);
        assert!((uniform_deviation::<f64>(&zeros) - 1.9922).abs() < 1e-4);
        let z64 = extract_frequencies(&BitSequence::pack_bits(&[0; 100]).unwrap(), 64).unwrap();
        assert!((uniform_deviation::<f64>(&z64) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_deviation_shrinks_with_corpus_size() {
        let mut prev = f64::INFINITY;
        for count in [10u64, 100, 1000] {
            let c = Corpus::new((0..count).map(|i| generate_uniform(1000 + i, 4096)).collect(), "u");
            let u = uniform_deviation::<f64>(&extract_aggregate(&c, 8).unwrap());
            assert!(u > 0.0 && u < prev, "count {count}: {u} vs {prev}");
            prev = u;
        }
    }

    #[test]
    fn all_zero_feature_vector() {
        let zeros = BitSequence::pack_bits(&[0; 4096]).unwrap();
        let x = feature_vector::<f64>(&zeros, &PatternLengths::new([8]).unwrap()).unwrap();
        assert_eq!(x.dim(), 4);
        let v = x.values();
        assert_eq!(v[0], 0.0);
        assert!((v[1] - 1.9921875).abs() < 1e-12);
        assert_eq!(v[2], 1.0);
        assert_eq!(v[3], 1.0 / 4089.0);
    }

    #[test]
    fn default_lengths_give_twelve_features_in_canonical_order() {
        let s = generate_uniform(5, 4096);
        let x = feature_vector::<f64>(&s, &PatternLengths::default()).unwrap();
        assert_eq!(x.dim(), 12);
        let y = feature_vector::<f64>(&s, &PatternLengths::new([32, 8, 16, 8]).unwrap()).unwrap();
        assert_eq!(x, y);
        assert_eq!(feature_names(x.lengths())[4], "entropy_m16");
        assert_eq!(x.get(16, Statistic::Entropy), Some(x.values()[4]));
    }

    #[test]
    fn f32_and_f64_agree() {
        let s = generate_uniform(6, 4096);
        let l = PatternLengths::default();
        let a = feature_vector::<f64>(&s, &l).unwrap();
        let b = feature_vector::<f32>(&s, &l).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - *y as f64).abs() < 1e-4 * x.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn pattern_length_parsing() {
        assert_eq!(PatternLengths::parse("32, 8,16").unwrap().as_slice(), &[8, 16, 32]);
        assert!(PatternLengths::parse("8,65").is_err());
        assert!(PatternLengths::parse("").is_err());
        assert!(PatternLengths::new([]).is_err());
        assert_eq!(PatternLengths::default().to_string(), "8,16,32");
    }

    #[test]
    fn top_decile_mass_of_skewed_table() {
        let t = FrequencyTable::from_counts(4, (0..10u64).map(|k| (k, if k == 3 { 91 } else { 1 }))).unwrap();
        assert!((top_decile_mass::<f64>(&t) - 0.91).abs() < 1e-12);
        assert!((max_frequency::<f64>(&t) - 0.91).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn entropy_bounds_and_deviation_symmetry(
                a in prop::collection::vec(0u8..=1, 16..600),
                b in prop::collection::vec(0u8..=1, 16..600),
                m in 1usize..=16,
            ) {
                let ta = extract_frequencies(&BitSequence::pack_bits(&a).unwrap(), m).unwrap();
                let tb = extract_frequencies(&BitSequence::pack_bits(&b).unwrap(), m).unwrap();
                let h = entropy::<f64>(&ta);
                prop_assert!(h >= 0.0);
                prop_assert!(h <= entropy_ceiling::<f64>(&ta) + 1e-9);
                prop_assert_eq!(h == 0.0, ta.distinct() == 1);
                let d = deviation::<f64>(&ta, &tb).unwrap();
                prop_assert!((0.0..=2.0 + 1e-12).contains(&d));
                prop_assert_eq!(d, deviation::<f64>(&tb, &ta).unwrap());
                prop_assert_eq!(deviation::<f64>(&ta, &ta).unwrap(), 0.0);
                let u = uniform_deviation::<f64>(&ta);
                prop_assert!((0.0..=2.0 + 1e-12).contains(&u));
            }
        }
    }
}
