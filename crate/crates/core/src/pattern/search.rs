//! Exact occurrence counting, `f(P, S) = |{ i : S[i..i+m] = P }|`,
//! with overlapping matches counted.

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SbcError};
use crate::sequence::{BitSequence, Pattern};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchAlgorithm {
    Naive,
    Kmp,
    BoyerMoore,
}

impl SearchAlgorithm {
    pub fn count(self, seq: &BitSequence, pattern: Pattern) -> Result<u64> {
        match self {
            SearchAlgorithm::Naive => count_occurrences_naive(seq, pattern),
            SearchAlgorithm::Kmp => count_occurrences_kmp(seq, pattern),
            SearchAlgorithm::BoyerMoore => count_occurrences_bm(seq, pattern),
        }
    }
}

impl FromStr for SearchAlgorithm {
    type Err = SbcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(SearchAlgorithm::Naive),
            "kmp" => Ok(SearchAlgorithm::Kmp),
            "bm" => Ok(SearchAlgorithm::BoyerMoore),
            other => Err(SbcError::validation(format!("unknown search algorithm `{other}`"))),
        }
    }
}

impl fmt::Display for SearchAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchAlgorithm::Naive => "naive",
            SearchAlgorithm::Kmp => "kmp",
            SearchAlgorithm::BoyerMoore => "bm",
        })
    }
}

fn check(seq: &BitSequence, pattern: Pattern) -> Result<usize> {
    let m = pattern.len();
    if m > seq.len() {
        return Err(SbcError::SequenceTooShort { n: seq.len(), m });
    }
    Ok(m)
}

/// Reference: compares the window at every position.
pub fn count_occurrences_naive(seq: &BitSequence, pattern: Pattern) -> Result<u64> {
    let m = check(seq, pattern)?;
    let mut count = 0;
    for i in 0..=seq.len() - m {
        if seq.window_at(i, m)? == pattern {
            count += 1;
        }
    }
    Ok(count)
}

fn pattern_bits(pattern: Pattern) -> Vec<bool> {
    (0..pattern.len()).map(|j| pattern.bit(j)).collect()
}

/// `fail[j]`: length of the longest proper border of `p[..=j]`.
fn failure_function(p: &[bool]) -> Vec<usize> {
    let mut fail = vec![0usize; p.len()];
    let mut k = 0;
    for j in 1..p.len() {
        while k > 0 && p[j] != p[k] {
            k = fail[k - 1];
        }
        if p[j] == p[k] {
            k += 1;
        }
        fail[j] = k;
    }
    fail
}

/// Knuth–Morris–Pratt over the binary alphabet, O(n + m).
pub fn count_occurrences_kmp(seq: &BitSequence, pattern: Pattern) -> Result<u64> {
    let m = check(seq, pattern)?;
    let p = pattern_bits(pattern);
    let fail = failure_function(&p);
    let mut count = 0;
    let mut k = 0;
    for bit in seq.iter() {
        while k > 0 && bit != p[k] {
            k = fail[k - 1];
        }
        if bit == p[k] {
            k += 1;
        }
        if k == m {
            count += 1;
            k = fail[m - 1];
        }
    }
    Ok(count)
}

/// `suff[i]`: length of the longest common suffix of `p[..=i]` and `p`.
fn suffixes(p: &[bool]) -> Vec<usize> {
    let m = p.len();
    let mut suff = vec![0usize; m];
    suff[m - 1] = m;
    let mut g = m as isize - 1;
    let mut f = m as isize - 1;
    for i in (0..m as isize - 1).rev() {
        if i > g && (suff[(i + m as isize - 1 - f) as usize] as isize) < i - g {
            suff[i as usize] = suff[(i + m as isize - 1 - f) as usize];
        } else {
            if i < g {
                g = i;
            }
            f = i;
            while g >= 0 && p[g as usize] == p[(g + m as isize - 1 - f) as usize] {
                g -= 1;
            }
            suff[i as usize] = (f - g) as usize;
        }
    }
    suff
}

/// Strong good-suffix shifts, indexed by mismatch position.
fn good_suffix_shifts(p: &[bool]) -> Vec<usize> {
    let m = p.len();
    let suff = suffixes(p);
    let mut shift = vec![m; m];
    let mut j = 0;
    for i in (0..m).rev() {
        if suff[i] == i + 1 {
            while j < m - 1 - i {
                if shift[j] == m {
                    shift[j] = m - 1 - i;
                }
                j += 1;
            }
        }
    }
    for i in 0..m.saturating_sub(1) {
        shift[m - 1 - suff[i]] = m - 1 - i;
    }
    shift
}

/// Boyer–Moore with bad-character and good-suffix rules on a two-letter
/// alphabet. After a full match the window advances by one so that
/// overlapping occurrences are all counted.
pub fn count_occurrences_bm(seq: &BitSequence, pattern: Pattern) -> Result<u64> {
    let m = check(seq, pattern)?;
    let n = seq.len();
    let p = pattern_bits(pattern);
    let good = good_suffix_shifts(&p);
    // last index of each symbol in the pattern, -1 when absent
    let mut last = [-1isize; 2];
    for (j, &b) in p.iter().enumerate() {
        last[b as usize] = j as isize;
    }
    let mut count = 0;
    let mut s = 0usize;
    while s <= n - m {
        let mut j = m as isize - 1;
        while j >= 0 && p[j as usize] == seq.bit(s + j as usize) {
            j -= 1;
        }
        if j < 0 {
            count += 1;
            s += 1;
        } else {
            let ju = j as usize;
            let bad = j - last[seq.bit(s + ju) as usize];
            s += (good[ju] as isize).max(bad).max(1) as usize;
        }
    }
    Ok(count)
}
