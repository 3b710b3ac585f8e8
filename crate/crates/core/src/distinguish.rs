//! The distinguishing experiment: a one-feature threshold adversary is
//! trained on labelled feature vectors and its advantage
//! `|Pr[A(S_c) = 1] - Pr[A(S_r) = 1]|` is estimated on held-out corpora.
//!
//! Decision 1 means "cipher".

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Result, SbcError};
use crate::metrics::{feature_vector, FeatureVector, PatternLengths};
use crate::scalar::Scalar;
use crate::sequence::Corpus;

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Which side of the threshold is labelled "cipher".
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    /// `x > threshold` means cipher.
    Above,
    /// `x <= threshold` means cipher.
    AtOrBelow,
}

impl Polarity {
    pub fn name(self) -> &'static str {
        match self {
            Polarity::Above => "above",
            Polarity::AtOrBelow => "at-or-below",
        }
    }
}

/// A decision stump.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdClassifier<T = f64> {
    pub feature_index: usize,
    pub threshold: T,
    pub polarity: Polarity,
    pub dim: usize,
    /// Empirical advantage on the training data.
    pub training_advantage: T,
}

impl<T: Scalar> ThresholdClassifier<T> {
    #[inline]
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // exact complement of `Above`, NaN included
    pub fn decide_value(&self, x: T) -> bool {
        match self.polarity {
            Polarity::Above => x > self.threshold,
            Polarity::AtOrBelow => !(x > self.threshold),
        }
    }

    pub fn decide(&self, x: &FeatureVector<T>) -> Result<bool> {
        if x.dim() != self.dim {
            return Err(SbcError::LengthMismatch {
                left: self.dim,
                right: x.dim(),
            });
        }
        Ok(self.decide_value(x.values()[self.feature_index]))
    }
}

fn check_features<T: Scalar>(cipher: &[FeatureVector<T>], random: &[FeatureVector<T>]) -> Result<usize> {
    if cipher.is_empty() || random.is_empty() {
        return Err(SbcError::validation("both training sets must be nonempty"));
    }
    let dim = cipher[0].dim();
    for x in cipher.iter().chain(random) {
        if x.dim() != dim {
            return Err(SbcError::LengthMismatch {
                left: dim,
                right: x.dim(),
            });
        }
        if x.values().iter().any(|v| v.is_nan()) {
            return Err(SbcError::validation("feature vector contains NaN"));
        }
    }
    Ok(dim)
}

fn threshold_between<T: Scalar>(lo: T, hi: T) -> T {
    let two = T::one() + T::one();
    let mid = lo + (hi - lo) / two;
    // adjacent floats can round the midpoint up to `hi`
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// Fits the stump maximizing empirical training advantage.
///
/// Every coordinate and every midpoint between adjacent distinct sorted
/// values is scanned. Ties go to the lowest feature index, then the lowest
/// threshold. Polarity points the "cipher" side at the class that lands
/// there more often. Data with no separating cut at all still yields a
/// classifier: feature 0, threshold at its minimum, advantage 0.
pub fn train_threshold<T: Scalar>(
    cipher: &[FeatureVector<T>],
    random: &[FeatureVector<T>],
) -> Result<ThresholdClassifier<T>> {
    let dim = check_features(cipher, random)?;
    let n_c = T::from_usize_lossy(cipher.len());
    let n_r = T::from_usize_lossy(random.len());

    let min0 = cipher
        .iter()
        .chain(random)
        .map(|x| x.values()[0])
        .fold(T::infinity(), T::min);
    let mut best = ThresholdClassifier {
        feature_index: 0,
        threshold: min0,
        polarity: Polarity::Above,
        dim,
        training_advantage: T::zero(),
    };

    let mut column: Vec<(T, bool)> = Vec::with_capacity(cipher.len() + random.len());
    for f in 0..dim {
        column.clear();
        column.extend(cipher.iter().map(|x| (x.values()[f], true)));
        column.extend(random.iter().map(|x| (x.values()[f], false)));
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

        // counts at or below the candidate cut
        let (mut below_c, mut below_r) = (0usize, 0usize);
        let mut i = 0;
        while i < column.len() {
            let v = column[i].0;
            while i < column.len() && column[i].0 == v {
                if column[i].1 {
                    below_c += 1;
                } else {
                    below_r += 1;
                }
                i += 1;
            }
            if i == column.len() {
                break;
            }
            let above_c = T::one() - T::from_usize_lossy(below_c) / n_c;
            let above_r = T::one() - T::from_usize_lossy(below_r) / n_r;
            let adv = (above_c - above_r).abs();
            if adv > best.training_advantage {
                best = ThresholdClassifier {
                    feature_index: f,
                    threshold: threshold_between(v, column[i].0),
                    polarity: if above_c >= above_r {
                        Polarity::Above
                    } else {
                        Polarity::AtOrBelow
                    },
                    dim,
                    training_advantage: adv,
                };
            }
        }
    }
    Ok(best)
}

/// Held-out estimate of the adversary's advantage.
#[derive(Clone, Debug, PartialEq)]
pub struct AdvantageReport<T = f64> {
    pub advantage: T,
    pub p_hit_cipher: T,
    pub p_hit_random: T,
    pub ci_low: T,
    pub ci_high: T,
    pub test_cipher: usize,
    pub test_random: usize,
    pub train_cipher: usize,
    pub train_random: usize,
}

fn hit_rate<T: Scalar>(hits: &[bool]) -> T {
    T::from_usize_lossy(hits.iter().filter(|&&h| h).count()) / T::from_usize_lossy(hits.len())
}

/// Advantage from per-sample decisions, with a seeded percentile
/// bootstrap (1000 resamples, each class resampled independently). The
/// interval is widened if needed so it always contains the point estimate.
pub fn advantage_from_decisions<T: Scalar>(
    cipher_hits: &[bool],
    random_hits: &[bool],
    bootstrap_seed: u64,
) -> Result<AdvantageReport<T>> {
    if cipher_hits.is_empty() || random_hits.is_empty() {
        return Err(SbcError::validation("test corpora must be nonempty"));
    }
    let p_c = hit_rate::<T>(cipher_hits);
    let p_r = hit_rate::<T>(random_hits);
    let advantage = (p_c - p_r).abs();

    let mut rng = ChaCha20Rng::seed_from_u64(bootstrap_seed);
    let mut resampled: Vec<T> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let mut draw = |hits: &[bool]| {
                let k = (0..hits.len()).filter(|_| hits[rng.gen_range(0..hits.len())]).count();
                T::from_usize_lossy(k) / T::from_usize_lossy(hits.len())
            };
            let c = draw(cipher_hits);
            let r = draw(random_hits);
            (c - r).abs()
        })
        .collect();
    resampled.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let lo_idx = (BOOTSTRAP_RESAMPLES as f64 * 0.025).floor() as usize;
    let hi_idx = (BOOTSTRAP_RESAMPLES as f64 * 0.975).ceil() as usize - 1;
    Ok(AdvantageReport {
        advantage,
        p_hit_cipher: p_c,
        p_hit_random: p_r,
        ci_low: resampled[lo_idx].min(advantage),
        ci_high: resampled[hi_idx].max(advantage),
        test_cipher: cipher_hits.len(),
        test_random: random_hits.len(),
        train_cipher: 0,
        train_random: 0,
    })
}

/// Feature vectors for every sequence, in corpus order.
pub fn corpus_features<T: Scalar>(corpus: &Corpus, lengths: &PatternLengths) -> Result<Vec<FeatureVector<T>>> {
    corpus.sequences.par_iter().map(|s| feature_vector(s, lengths)).collect()
}

/// Applies `classifier` to held-out corpora and reports its advantage.
pub fn estimate_advantage<T: Scalar>(
    classifier: &ThresholdClassifier<T>,
    test_cipher: &Corpus,
    test_random: &Corpus,
    lengths: &PatternLengths,
    bootstrap_seed: u64,
) -> Result<AdvantageReport<T>> {
    if test_cipher.is_empty() || test_random.is_empty() {
        return Err(SbcError::validation("test corpora must be nonempty"));
    }
    let fc = corpus_features::<T>(test_cipher, lengths)?;
    let fr = corpus_features::<T>(test_random, lengths)?;
    estimate_advantage_from_features(classifier, &fc, &fr, bootstrap_seed)
}

pub fn estimate_advantage_from_features<T: Scalar>(
    classifier: &ThresholdClassifier<T>,
    cipher: &[FeatureVector<T>],
    random: &[FeatureVector<T>],
    bootstrap_seed: u64,
) -> Result<AdvantageReport<T>> {
    let hc = cipher.iter().map(|x| classifier.decide(x)).collect::<Result<Vec<_>>>()?;
    let hr = random.iter().map(|x| classifier.decide(x)).collect::<Result<Vec<_>>>()?;
    advantage_from_decisions(&hc, &hr, bootstrap_seed)
}

/// Seeded shuffle of `0..len`, cut into `(train, test)`. The training part
/// gets `round(len × train_frac)` indices, clamped so both parts are nonempty.
pub fn split_indices(len: usize, train_frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(SbcError::validation(format!("train fraction {train_frac} must lie in (0, 1)")));
    }
    if len < 2 {
        return Err(SbcError::validation("need at least 2 sequences to split into train and test"));
    }
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let n_train = ((len as f64 * train_frac).round() as usize).clamp(1, len - 1);
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

/// Outcome of split → train → estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct Distinguished<T = f64> {
    pub classifier: ThresholdClassifier<T>,
    pub report: AdvantageReport<T>,
}

/// Splits both corpora, trains on the training parts only, and evaluates
/// on the held-out parts. Feature vectors are computed once per sequence.
pub fn run_distinguisher<T: Scalar>(
    cipher: &Corpus,
    random: &Corpus,
    lengths: &PatternLengths,
    train_frac: f64,
    split_seed: u64,
    bootstrap_seed: u64,
) -> Result<Distinguished<T>> {
    let fc = corpus_features::<T>(cipher, lengths)?;
    let fr = corpus_features::<T>(random, lengths)?;
    distinguish_features(&fc, &fr, train_frac, split_seed, bootstrap_seed)
}

/// [`run_distinguisher`] on precomputed features.
pub fn distinguish_features<T: Scalar>(
    cipher: &[FeatureVector<T>],
    random: &[FeatureVector<T>],
    train_frac: f64,
    split_seed: u64,
    bootstrap_seed: u64,
) -> Result<Distinguished<T>> {
    let (tr_c, te_c) = split_indices(cipher.len(), train_frac, split_seed)?;
    // distinct stream for the second corpus
    let (tr_r, te_r) = split_indices(random.len(), train_frac, split_seed ^ 0x9E37_79B9_7F4A_7C15)?;
    let pick = |src: &[FeatureVector<T>], idx: &[usize]| idx.iter().map(|&i| src[i].clone()).collect::<Vec<_>>();
    let classifier = train_threshold(&pick(cipher, &tr_c), &pick(random, &tr_r))?;
    let mut report =
        estimate_advantage_from_features(&classifier, &pick(cipher, &te_c), &pick(random, &te_r), bootstrap_seed)?;
    report.train_cipher = tr_c.len();
    report.train_random = tr_r.len();
    Ok(Distinguished { classifier, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fv(values: &[f64]) -> FeatureVector<f64> {
        // stand-in lengths; only the dimension matters here
        let lengths = PatternLengths::new(1..=values.len() / 4).unwrap();
        FeatureVector::from_values(lengths, values.to_vec()).unwrap()
    }

    fn one_d(values: &[f64]) -> Vec<FeatureVector<f64>> {
        values.iter().map(|&v| fv(&[v, 0.0, 0.0, 0.0])).collect()
    }

    #[test]
    fn separable_gives_full_advantage() {
        let c = one_d(&[-3.0, -2.0, -1.5]);
        let r = one_d(&[0.5, 1.0, 4.0]);
        let clf = train_threshold(&c, &r).unwrap();
        assert_eq!(clf.training_advantage, 1.0);
        assert_eq!(clf.feature_index, 0);
        assert_eq!(clf.threshold, -0.5);
        assert_eq!(clf.polarity, Polarity::AtOrBelow);
        let rep = estimate_advantage_from_features(&clf, &c, &r, 1).unwrap();
        assert_eq!(rep.advantage, 1.0);
        assert_eq!((rep.p_hit_cipher, rep.p_hit_random), (1.0, 0.0));
    }

    #[test]
    fn identical_classes_give_zero_advantage_classifier() {
        let c = one_d(&[1.0, 2.0, 3.0]);
        let clf = train_threshold(&c, &c).unwrap();
        assert_eq!(clf.training_advantage, 0.0);
        assert_eq!(clf.feature_index, 0);
        assert_eq!(clf.threshold, 1.0);
        let constant = one_d(&[7.0, 7.0]);
        assert_eq!(train_threshold(&constant, &constant).unwrap().training_advantage, 0.0);
    }

    #[test]
    fn tie_goes_to_lowest_feature_then_threshold() {
        // both features separate perfectly; feature 0 wins
        let c = vec![fv(&[0.0, 0.0, 0.0, 0.0]), fv(&[1.0, 1.0, 0.0, 0.0])];
        let r = vec![fv(&[5.0, 5.0, 0.0, 0.0]), fv(&[6.0, 6.0, 0.0, 0.0])];
        assert_eq!(train_threshold(&c, &r).unwrap().feature_index, 0);
        // feature 0 has two equally good cuts (advantage 1/2); lowest wins
        let c = one_d(&[0.0, 10.0]);
        let r = one_d(&[5.0, 5.0]);
        let clf = train_threshold(&c, &r).unwrap();
        assert_eq!(clf.training_advantage, 0.5);
        assert_eq!(clf.threshold, 2.5);
    }

    #[test]
    fn errors_on_empty_and_mismatch() {
        assert!(train_threshold::<f64>(&[], &one_d(&[1.0])).is_err());
        let wide = vec![fv(&[0.0; 8])];
        assert!(matches!(
            train_threshold(&one_d(&[1.0]), &wide),
            Err(SbcError::LengthMismatch { .. })
        ));
        assert!(train_threshold(&one_d(&[f64::NAN]), &one_d(&[1.0])).is_err());
        assert!(advantage_from_decisions::<f64>(&[], &[true], 0).is_err());
    }

    #[test]
    fn constant_decision_has_zero_advantage() {
        let rep = advantage_from_decisions::<f64>(&[true; 50], &[true; 70], 3).unwrap();
        assert_eq!(rep.advantage, 0.0);
        assert_eq!((rep.ci_low, rep.ci_high), (0.0, 0.0));
    }

    #[test]
    fn perfect_decision_has_unit_advantage() {
        let rep = advantage_from_decisions::<f64>(&[true; 40], &[false; 40], 3).unwrap();
        assert_eq!(rep.advantage, 1.0);
        assert_eq!((rep.ci_low, rep.ci_high), (1.0, 1.0));
    }

    #[test]
    fn bootstrap_is_seeded() {
        let c: Vec<bool> = (0..300).map(|i| i % 3 == 0).collect();
        let r: Vec<bool> = (0..300).map(|i| i % 4 == 0).collect();
        let a = advantage_from_decisions::<f64>(&c, &r, 9).unwrap();
        assert_eq!(a, advantage_from_decisions::<f64>(&c, &r, 9).unwrap());
        assert!(a.ci_low <= a.advantage && a.advantage <= a.ci_high);
        assert!(a.ci_high - a.ci_low > 0.0);
    }

    #[test]
    fn split_is_seeded_partition() {
        let (tr, te) = split_indices(11, 0.5, 4).unwrap();
        assert_eq!(tr.len(), 6);
        assert_eq!(te.len(), 5);
        let mut all: Vec<_> = tr.iter().chain(&te).copied().collect();
        all.sort();
        assert_eq!(all, (0..11).collect::<Vec<_>>());
        assert_eq!(split_indices(11, 0.5, 4).unwrap(), (tr, te));
        assert_eq!(split_indices(5, 0.01, 0).unwrap().0.len(), 1);
        assert!(split_indices(1, 0.5, 0).is_err());
        assert!(split_indices(10, 1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn positive_rescaling_keeps_feature_and_polarity(
            c in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 8), 1..30),
            r in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 8), 1..30),
            scales in prop::collection::vec(0.01f64..100.0, 8),
        ) {
            let c: Vec<_> = c.iter().map(|v| fv(v)).collect();
            let r: Vec<_> = r.iter().map(|v| fv(v)).collect();
            let base = train_threshold(&c, &r).unwrap();
            let cs: Vec<_> = c.iter().map(|x| x.scaled(&scales)).collect();
            let rs: Vec<_> = r.iter().map(|x| x.scaled(&scales)).collect();
            let scaled = train_threshold(&cs, &rs).unwrap();
            prop_assert_eq!(base.feature_index, scaled.feature_index);
            prop_assert_eq!(base.polarity, scaled.polarity);
            prop_assert_eq!(base.training_advantage, scaled.training_advantage);
        }

        #[test]
        fn label_swap_keeps_advantage(
            hc in prop::collection::vec(any::<bool>(), 1..80),
            hr in prop::collection::vec(any::<bool>(), 1..80),
            seed in any::<u64>(),
        ) {
            let a = advantage_from_decisions::<f64>(&hc, &hr, seed).unwrap();
            let b = advantage_from_decisions::<f64>(&hr, &hc, seed).unwrap();
            prop_assert_eq!(a.advantage, b.advantage);
            prop_assert_eq!(a.advantage, (a.p_hit_cipher - a.p_hit_random).abs());
            prop_assert!(0.0 <= a.ci_low && a.ci_low <= a.advantage);
            prop_assert!(a.advantage <= a.ci_high && a.ci_high <= 1.0);
        }
    }
}
