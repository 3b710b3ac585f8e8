use crate::error::{Result, SbcError};
use crate::pattern::table::for_each_window;
use crate::scalar::Scalar;
use crate::sequence::{check_pattern_len, BitSequence};

pub const DEFAULT_BUCKETS: usize = 16;

/// How often length-`m` windows come back, and where windows fall.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrenceStats<T = f64> {
    pub m: usize,
    pub total_windows: u64,
    /// Fraction of windows whose pattern occurs at least twice.
    pub repeat_fraction: T,
    /// Mean distance between successive starts of the same pattern;
    /// `None` when no pattern repeats.
    pub mean_gap: Option<T>,
    /// Window starts per position bucket. Buckets are equal ranges of
    /// `total_windows / buckets` positions; the last one takes the remainder.
    pub positional_density: Vec<u64>,
}

pub fn recurrence_stats<T: Scalar>(seq: &BitSequence, m: usize, buckets: usize) -> Result<RecurrenceStats<T>> {
    check_pattern_len(m)?;
    if m > seq.len() {
        return Err(SbcError::SequenceTooShort { n: seq.len(), m });
    }
    if buckets == 0 {
        return Err(SbcError::validation("bucket count must be at least 1"));
    }
    let total = seq.len() - m + 1;
    let bucket_width = (total / buckets).max(1);
    let mut density = vec![0u64; buckets];
    let mut occurrences = Vec::with_capacity(total);
    for_each_window(seq, m, |start, w| {
        density[(start / bucket_width).min(buckets - 1)] += 1;
        occurrences.push((w, start));
    });
    occurrences.sort_unstable();

    let mut repeated_windows = 0usize;
    let mut gap_sum = 0usize;
    let mut gap_count = 0usize;
    for group in occurrences.chunk_by(|a, b| a.0 == b.0) {
        if group.len() >= 2 {
            repeated_windows += group.len();
            // successive gaps telescope to last - first
            gap_sum += group[group.len() - 1].1 - group[0].1;
            gap_count += group.len() - 1;
        }
    }

    Ok(RecurrenceStats {
        m,
        total_windows: total as u64,
        repeat_fraction: T::from_usize_lossy(repeated_windows) / T::from_usize_lossy(total),
        mean_gap: (gap_count > 0).then(|| T::from_usize_lossy(gap_sum) / T::from_usize_lossy(gap_count)),
        positional_density: density,
    })
}
