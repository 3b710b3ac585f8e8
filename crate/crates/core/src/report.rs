//! Structured comparison / distinguishing reports and the CSV plot series
//! derived from them.
//!
//! Reports are TOML. Plot series are produced from a parsed report, never
//! recomputed, so every CSV value also appears in the report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distinguish::Distinguished;
use crate::error::{Result, SbcError};
use crate::metrics::{
    deviation, entropy, entropy_ceiling, feature_names, max_frequency, top_decile_mass, PatternLengths,
};
use crate::pattern::FrequencyTable;

const REPORT_PREAMBLE: &str = "\
# sbc report
# entropy_a / entropy_b are Shannon entropies (bits) of the aggregate pattern
# distributions. They are bounded by entropy_ceiling_* = min(m, log2(total_windows));
# at long pattern lengths the window count, not m, limits the attainable entropy.
";

/// Statistics of two aggregate tables at one pattern length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthComparison {
    pub m: usize,
    pub deviation: f64,
    pub entropy_a: f64,
    pub entropy_b: f64,
    pub entropy_ceiling_a: f64,
    pub entropy_ceiling_b: f64,
    pub max_frequency_a: f64,
    pub max_frequency_b: f64,
    pub top_decile_mass_a: f64,
    pub top_decile_mass_b: f64,
    pub total_windows_a: u64,
    pub total_windows_b: u64,
    pub distinct_a: u64,
    pub distinct_b: u64,
}

impl LengthComparison {
    pub fn from_tables(a: &FrequencyTable, b: &FrequencyTable) -> Result<Self> {
        Ok(LengthComparison {
            m: a.m(),
            deviation: deviation(a, b)?,
            entropy_a: entropy(a),
            entropy_b: entropy(b),
            entropy_ceiling_a: entropy_ceiling(a),
            entropy_ceiling_b: entropy_ceiling(b),
            max_frequency_a: max_frequency(a),
            max_frequency_b: max_frequency(b),
            top_decile_mass_a: top_decile_mass(a),
            top_decile_mass_b: top_decile_mass(b),
            total_windows_a: a.total_windows(),
            total_windows_b: b.total_windows(),
            distinct_a: a.distinct() as u64,
            distinct_b: b.distinct() as u64,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistinguishSection {
    pub m_set: String,
    pub feature_index: usize,
    pub feature_name: String,
    pub threshold: f64,
    pub polarity: String,
    pub training_advantage: f64,
    pub advantage: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_hit_cipher: f64,
    pub p_hit_random: f64,
    pub train_cipher: usize,
    pub train_random: usize,
    pub test_cipher: usize,
    pub test_random: usize,
    pub train_frac: f64,
    pub split_seed: u64,
    pub bootstrap_seed: u64,
}

impl DistinguishSection {
    pub fn new(
        outcome: &Distinguished<f64>,
        lengths: &PatternLengths,
        train_frac: f64,
        split_seed: u64,
        bootstrap_seed: u64,
    ) -> Self {
        let c = &outcome.classifier;
        let r = &outcome.report;
        DistinguishSection {
            m_set: lengths.to_string(),
            feature_index: c.feature_index,
            feature_name: feature_names(lengths)[c.feature_index].clone(),
            threshold: c.threshold,
            polarity: c.polarity.name().to_owned(),
            training_advantage: c.training_advantage,
            advantage: r.advantage,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            p_hit_cipher: r.p_hit_cipher,
            p_hit_random: r.p_hit_random,
            train_cipher: r.train_cipher,
            train_random: r.train_random,
            test_cipher: r.test_cipher,
            test_random: r.test_random,
            train_frac,
            split_seed,
            bootstrap_seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub label_a: String,
    pub label_b: String,
    pub per_m: Vec<LengthComparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distinguish: Option<DistinguishSection>,
}

impl Report {
    pub fn to_text(&self) -> Result<String> {
        let body = toml::to_string(self).map_err(|e| SbcError::validation(format!("report serialization: {e}")))?;
        Ok(format!("{REPORT_PREAMBLE}{body}"))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SbcError::Parse {
            line: e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0),
            message: e.message().to_owned(),
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

/// Merges each side's tables per pattern length and compares the lengths
/// present on both sides, ascending.
pub fn compare_tables(
    label_a: &str,
    tables_a: &[FrequencyTable],
    label_b: &str,
    tables_b: &[FrequencyTable],
) -> Result<Report> {
    let merged = |tables: &[FrequencyTable]| -> Result<Vec<FrequencyTable>> {
        let mut by_m: std::collections::BTreeMap<usize, FrequencyTable> = Default::default();
        for t in tables {
            let slot = by_m.entry(t.m()).or_insert_with(|| FrequencyTable::empty(t.m()).expect("valid m"));
            *slot = slot.merge(t)?;
        }
        Ok(by_m.into_values().collect())
    };
    let a = merged(tables_a)?;
    let b = merged(tables_b)?;
    let mut per_m = Vec::new();
    for ta in &a {
        if let Some(tb) = b.iter().find(|t| t.m() == ta.m()) {
            per_m.push(LengthComparison::from_tables(ta, tb)?);
        }
    }
    if per_m.is_empty() {
        return Err(SbcError::validation("the two table sets share no pattern length"));
    }
    Ok(Report {
        label_a: label_a.to_owned(),
        label_b: label_b.to_owned(),
        per_m,
        distinguish: None,
    })
}

pub const DEVIATION_CSV: &str = "deviation_vs_m.csv";
pub const FREQUENCY_CSV: &str = "frequency_bars.csv";
pub const ENTROPY_CSV: &str = "entropy_bars.csv";

/// The three plot series as `(file name, contents)`.
pub fn plot_series(report: &Report) -> Vec<(&'static str, String)> {
    let (a, b) = (&report.label_a, &report.label_b);
    let mut dev = String::from("# Deviation scores between the two corpora across pattern lengths\nm,deviation\n");
    let mut freq = format!(
        "# Normalized substring pattern frequencies ({a} vs {b}): largest single-pattern frequency and top-decile mass\n\
         m,max_frequency_a,max_frequency_b,top_decile_mass_a,top_decile_mass_b\n"
    );
    let mut ent = format!(
        "# Comparison of pattern entropy between {a} and {b} sequences, with the analytic ceiling min(m, log2(total_windows))\n\
         m,entropy_a,entropy_b,entropy_ceiling_a,entropy_ceiling_b\n"
    );
    for r in &report.per_m {
        let _ = writeln!(dev, "{},{:?}", r.m, r.deviation);
        let _ = writeln!(
            freq,
            "{},{:?},{:?},{:?},{:?}",
            r.m, r.max_frequency_a, r.max_frequency_b, r.top_decile_mass_a, r.top_decile_mass_b
        );
        let _ = writeln!(
            ent,
            "{},{:?},{:?},{:?},{:?}",
            r.m, r.entropy_a, r.entropy_b, r.entropy_ceiling_a, r.entropy_ceiling_b
        );
    }
    vec![(DEVIATION_CSV, dev), (FREQUENCY_CSV, freq), (ENTROPY_CSV, ent)]
}

/// Writes the plot series into `dir`, returning the written paths.
pub fn write_plot_data(report: &Report, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    plot_series(report)
        .into_iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, body)?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::generate_uniform;
    use crate::pattern::extract_frequencies;

    fn tables(seed: u64) -> Vec<FrequencyTable> {
        let s = generate_uniform(seed, 1024);
        [4, 8, 20].iter().map(|&m| extract_frequencies(&s, m).unwrap()).collect()
    }

    #[test]
    fn report_round_trips_through_text() {
        let mut rep = compare_tables("cipher", &tables(1), "random", &tables(2)).unwrap();
        assert_eq!(rep.per_m.iter().map(|r| r.m).collect::<Vec<_>>(), vec![4, 8, 20]);
        let text = rep.to_text().unwrap();
        assert!(text.contains("deviation = "));
        assert_eq!(Report::from_text(&text).unwrap(), rep);
        rep.distinguish = Some(DistinguishSection {
            m_set: "8".into(),
            feature_index: 0,
            feature_name: "entropy_m8".into(),
            threshold: 7.5,
            polarity: "above".into(),
            training_advantage: 0.25,
            advantage: 0.2,
            ci_low: 0.1,
            ci_high: 0.3,
            p_hit_cipher: 0.6,
            p_hit_random: 0.4,
            train_cipher: 5,
            train_random: 5,
            test_cipher: 5,
            test_random: 5,
            train_frac: 0.5,
            split_seed: 1,
            bootstrap_seed: 2,
        });
        let text = rep.to_text().unwrap();
        for key in ["feature_index", "threshold", "advantage", "ci_low", "ci_high", "p_hit_cipher", "p_hit_random"] {
            assert!(text.contains(&format!("\n{key} = ")), "{key}");
        }
        assert_eq!(Report::from_text(&text).unwrap(), rep);
    }

    #[test]
    fn per_sequence_tables_compare_like_aggregates() {
        let a1 = tables(1);
        let a2 = tables(3);
        let split: Vec<_> = a1.iter().chain(&a2).cloned().collect();
        let merged: Vec<_> = a1.iter().zip(&a2).map(|(x, y)| x.merge(y).unwrap()).collect();
        let b = tables(2);
        assert_eq!(
            compare_tables("a", &split, "b", &b).unwrap(),
            compare_tables("a", &merged, "b", &b).unwrap()
        );
    }

    #[test]
    fn disjoint_lengths_rejected() {
        let s = generate_uniform(0, 100);
        let a = [extract_frequencies(&s, 3).unwrap()];
        let b = [extract_frequencies(&s, 4).unwrap()];
        assert!(compare_tables("a", &a, "b", &b).is_err());
    }

    #[test]
    fn plot_values_come_from_report() {
        let rep = compare_tables("cipher", &tables(1), "random", &tables(2)).unwrap();
        let series = plot_series(&rep);
        let dev = &series[0].1;
        let rows: Vec<_> = dev.lines().skip(2).collect();
        assert_eq!(rows.len(), 3);
        for (row, r) in rows.iter().zip(&rep.per_m) {
            let (m, d) = row.split_once(',').unwrap();
            assert_eq!(m.parse::<usize>().unwrap(), r.m);
            assert_eq!(d.parse::<f64>().unwrap(), r.deviation);
        }
        assert!(series[1].1.starts_with("# Normalized substring pattern frequencies"));
        assert!(series[2].1.starts_with("# Comparison of pattern entropy between"));
    }

    #[test]
    fn bad_report_text_is_a_parse_error() {
        assert!(matches!(Report::from_text("label_a = 3"), Err(SbcError::Parse { .. })));
    }
}
