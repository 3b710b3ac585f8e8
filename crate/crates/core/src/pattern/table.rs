use std::fmt;

use rayon::prelude::*;

use crate::error::{Result, SbcError};
use crate::scalar::Scalar;
use crate::sequence::{check_pattern_len, low_mask, BitSequence, Corpus, Pattern};

/// Largest `m` stored as a dense counter array.
pub const DENSE_MAX_BITS: usize = 16;

/// Calls `f(start, window)` for every length-`m` window of `seq`, in
/// order, rolling the window one bit at a time.
#[inline]
pub(crate) fn for_each_window(seq: &BitSequence, m: usize, mut f: impl FnMut(usize, u64)) {
    let n = seq.len();
    let mask = low_mask(m);
    let mut acc = 0u64;
    let mut i = 0usize;
    for &byte in seq.as_bytes() {
        let bits_here = (n - i).min(8);
        for k in 0..bits_here {
            acc = ((acc << 1) | ((byte >> (7 - k)) & 1) as u64) & mask;
            i += 1;
            if i >= m {
                f(i - m, acc);
            }
        }
    }
}

fn validate_extract(seq: &BitSequence, m: usize) -> Result<()> {
    check_pattern_len(m)?;
    if m > seq.len() {
        return Err(SbcError::SequenceTooShort { n: seq.len(), m });
    }
    Ok(())
}

#[inline]
fn prefer_dense(m: usize, total_windows: u64) -> bool {
    m <= DENSE_MAX_BITS && (1u64 << m) <= total_windows.saturating_mul(2)
}

#[derive(Clone)]
enum Storage {
    /// `counts[p]` for every `p < 2^m`.
    Dense(Vec<u64>),
    /// Present patterns only, ascending, all counts >= 1.
    Sparse { keys: Vec<u64>, counts: Vec<u64> },
}

/// Occurrence counts of every length-`m` window over one or more
/// sequences. Patterns that never occur are absent.
#[derive(Clone)]
pub struct FrequencyTable {
    m: usize,
    total_windows: u64,
    storage: Storage,
}

impl FrequencyTable {
    /// The merge identity: no windows at all.
    pub fn empty(m: usize) -> Result<Self> {
        check_pattern_len(m)?;
        Ok(FrequencyTable {
            m,
            total_windows: 0,
            storage: Storage::Sparse {
                keys: Vec::new(),
                counts: Vec::new(),
            },
        })
    }

    /// Builds a table from `(pattern value, count)` pairs. Values must fit
    /// in `m` bits, counts must be positive, and values must not repeat.
    pub fn from_counts(m: usize, pairs: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        check_pattern_len(m)?;
        let mut pairs: Vec<(u64, u64)> = pairs.into_iter().collect();
        pairs.sort_unstable();
        let mut total = 0u64;
        for (idx, &(value, count)) in pairs.iter().enumerate() {
            if value & !low_mask(m) != 0 {
                return Err(SbcError::validation(format!("pattern {value:#x} does not fit in {m} bits")));
            }
            if count == 0 {
                return Err(SbcError::validation(format!("pattern {value:#x} has zero count")));
            }
            if idx > 0 && pairs[idx - 1].0 == value {
                return Err(SbcError::validation(format!("pattern {value:#x} listed twice")));
            }
            total = total
                .checked_add(count)
                .ok_or_else(|| SbcError::validation("total window count overflows u64"))?;
        }
        let (keys, counts) = pairs.into_iter().unzip();
        Ok(Self::from_sorted(m, total, keys, counts))
    }

    fn from_sorted(m: usize, total_windows: u64, keys: Vec<u64>, counts: Vec<u64>) -> Self {
        let storage = if prefer_dense(m, total_windows) {
            let mut dense = vec![0u64; 1 << m];
            for (k, c) in keys.iter().zip(&counts) {
                dense[*k as usize] = *c;
            }
            Storage::Dense(dense)
        } else {
            Storage::Sparse { keys, counts }
        };
        FrequencyTable {
            m,
            total_windows,
            storage,
        }
    }

    /// Run-length encodes an ascending window list.
    fn from_sorted_windows(m: usize, mut windows: Vec<u64>) -> Self {
        let total = windows.len() as u64;
        let mut counts = Vec::new();
        let mut write = 0usize;
        let mut read = 0usize;
        while read < windows.len() {
            let key = windows[read];
            let start = read;
            while read < windows.len() && windows[read] == key {
                read += 1;
            }
            windows[write] = key;
            counts.push((read - start) as u64);
            write += 1;
        }
        windows.truncate(write);
        windows.shrink_to_fit();
        FrequencyTable {
            m,
            total_windows: total,
            storage: Storage::Sparse { keys: windows, counts },
        }
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn total_windows(&self) -> u64 {
        self.total_windows
    }

    /// True when the table holds no windows (only the merge identity).
    pub fn is_empty(&self) -> bool {
        self.total_windows == 0
    }

    /// Occurrence count of `p`; 0 when absent or of a different length.
    pub fn count(&self, p: Pattern) -> u64 {
        if p.len() != self.m {
            return 0;
        }
        match &self.storage {
            Storage::Dense(d) => d[p.value() as usize],
            Storage::Sparse { keys, counts } => keys.binary_search(&p.value()).map_or(0, |i| counts[i]),
        }
    }

    /// Number of distinct patterns present.
    pub fn distinct(&self) -> usize {
        match &self.storage {
            Storage::Dense(d) => d.iter().filter(|&&c| c > 0).count(),
            Storage::Sparse { keys, .. } => keys.len(),
        }
    }

    /// Present `(pattern value, count)` pairs in ascending pattern order.
    pub fn iter_raw(&self) -> Box<dyn Iterator<Item = (u64, u64)> + '_> {
        match &self.storage {
            Storage::Dense(d) => Box::new(
                d.iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(k, &c)| (k as u64, c)),
            ),
            Storage::Sparse { keys, counts } => Box::new(keys.iter().copied().zip(counts.iter().copied())),
        }
    }

    /// Present patterns with their counts, ascending by pattern value.
    pub fn iter(&self) -> impl Iterator<Item = (Pattern, u64)> + '_ {
        let m = self.m;
        self.iter_raw().map(move |(k, c)| (Pattern::from_parts_unchecked(k, m), c))
    }

    /// Present counts in ascending pattern order.
    pub fn counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.iter_raw().map(|(_, c)| c)
    }

    /// `count(p) / total_windows`.
    pub fn normalized<T: Scalar>(&self, p: Pattern) -> T {
        if self.total_windows == 0 {
            return T::zero();
        }
        T::from_u64_lossy(self.count(p)) / T::from_u64_lossy(self.total_windows)
    }

    /// Normalized frequencies of present patterns, ascending by pattern.
    pub fn normalized_iter<T: Scalar>(&self) -> impl Iterator<Item = (u64, T)> + '_ {
        let total = T::from_u64_lossy(self.total_windows);
        self.iter_raw().map(move |(k, c)| (k, T::from_u64_lossy(c) / total))
    }

    /// Largest single count, 0 for an empty table.
    pub fn max_count(&self) -> u64 {
        self.counts().max().unwrap_or(0)
    }

    /// Keywise sum; `total_windows` add.
    pub fn merge(&self, other: &FrequencyTable) -> Result<FrequencyTable> {
        if self.m != other.m {
            return Err(SbcError::LengthMismatch {
                left: self.m,
                right: other.m,
            });
        }
        let total = self.total_windows + other.total_windows;
        if let (Storage::Dense(a), Storage::Dense(b)) = (&self.storage, &other.storage) {
            let sum = a.iter().zip(b).map(|(x, y)| x + y).collect();
            return Ok(FrequencyTable {
                m: self.m,
                total_windows: total,
                storage: Storage::Dense(sum),
            });
        }
        let mut keys = Vec::with_capacity(self.distinct().max(other.distinct()));
        let mut counts = Vec::with_capacity(keys.capacity());
        let mut a = self.iter_raw().peekable();
        let mut b = other.iter_raw().peekable();
        loop {
            let next = match (a.peek(), b.peek()) {
                (None, None) => break,
                (Some(_), None) => a.next().unwrap(),
                (None, Some(_)) => b.next().unwrap(),
                (Some(&(ka, ca)), Some(&(kb, cb))) => {
                    if ka < kb {
                        a.next().unwrap()
                    } else if kb < ka {
                        b.next().unwrap()
                    } else {
                        a.next();
                        b.next();
                        (ka, ca + cb)
                    }
                }
            };
            keys.push(next.0);
            counts.push(next.1);
        }
        Ok(Self::from_sorted(self.m, total, keys, counts))
    }
}

/// Keywise sum of two tables of equal `m`.
pub fn merge_tables(a: &FrequencyTable, b: &FrequencyTable) -> Result<FrequencyTable> {
    a.merge(b)
}

impl PartialEq for FrequencyTable {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.total_windows == other.total_windows && self.iter_raw().eq(other.iter_raw())
    }
}

impl Eq for FrequencyTable {}

impl fmt::Debug for FrequencyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_map();
        for (p, c) in self.iter().take(32) {
            d.entry(&p.to_string(), &c);
        }
        d.finish()?;
        write!(f, " (m={}, total_windows={})", self.m, self.total_windows)
    }
}

/// Counts every overlapping length-`m` window of `seq` (stride 1).
pub fn extract_frequencies(seq: &BitSequence, m: usize) -> Result<FrequencyTable> {
    validate_extract(seq, m)?;
    let windows = (seq.len() - m + 1) as u64;
    if prefer_dense(m, windows) {
        let mut dense = vec![0u64; 1 << m];
        for_each_window(seq, m, |_, w| dense[w as usize] += 1);
        Ok(FrequencyTable {
            m,
            total_windows: windows,
            storage: Storage::Dense(dense),
        })
    } else {
        let mut all = Vec::with_capacity(windows as usize);
        for_each_window(seq, m, |_, w| all.push(w));
        all.sort_unstable();
        Ok(FrequencyTable::from_sorted_windows(m, all))
    }
}

/// One table per sequence, in corpus order.
pub fn extract_per_sequence(corpus: &Corpus, m: usize) -> Result<Vec<FrequencyTable>> {
    corpus.sequences.par_iter().map(|s| extract_frequencies(s, m)).collect()
}

/// One table over every window of every sequence. Equal to merging the
/// per-sequence tables, computed without materializing them.
pub fn extract_aggregate(corpus: &Corpus, m: usize) -> Result<FrequencyTable> {
    check_pattern_len(m)?;
    for s in &corpus.sequences {
        validate_extract(s, m)?;
    }
    let total: u64 = corpus.sequences.iter().map(|s| (s.len() - m + 1) as u64).sum();
    if total == 0 {
        return FrequencyTable::empty(m);
    }
    if prefer_dense(m, total) {
        let dense = corpus
            .sequences
            .par_iter()
            .fold(
                || vec![0u64; 1 << m],
                |mut acc, s| {
                    for_each_window(s, m, |_, w| acc[w as usize] += 1);
                    acc
                },
            )
            .reduce(
                || vec![0u64; 1 << m],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        Ok(FrequencyTable {
            m,
            total_windows: total,
            storage: Storage::Dense(dense),
        })
    } else {
        let mut all = Vec::with_capacity(total as usize);
        for s in &corpus.sequences {
            for_each_window(s, m, |_, w| all.push(w));
        }
        all.par_sort_unstable();
        Ok(FrequencyTable::from_sorted_windows(m, all))
    }
}
