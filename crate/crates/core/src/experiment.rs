//! End-to-end experiment: generate both corpora, extract statistics,
//! compare, distinguish, and write a hashed output bundle.
//!
//! Configuration is a flat `key = value` file whose keys are the `sbc run`
//! flag names without the leading dashes; `#` starts a comment. Later
//! sources override earlier ones (defaults, then file, then flags).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::corpus_io::encode_corpus;
use crate::distinguish::{corpus_features, distinguish_features};
use crate::error::{Result, SbcError};
use crate::generators::{generate_corpus, GeneratorKind, GeneratorParams, GeneratorSpec};
use crate::manifest::{sha256_file, OutputTracker};
use crate::metrics::{feature_names, FeatureVector, PatternLengths};
use crate::pattern::export::tables_to_string;
use crate::pattern::extract_aggregate;
use crate::report::{plot_series, DistinguishSection, LengthComparison, Report};
use crate::sequence::Corpus;

/// RFC 8439 section 2.4.2 test key, used when no key is configured.
pub const DEFAULT_CHACHA_KEY: &str = "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f";
pub const DEFAULT_CHACHA_NONCE: &str = "000000000000004a00000000";

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const REPORT_FILE: &str = "report.toml";

/// Every recognised configuration key.
pub const CONFIG_KEYS: &[&str] = &[
    "cipher-kind",
    "cipher-key",
    "cipher-nonce",
    "cipher-seed",
    "cipher-p",
    "cipher-period",
    "cipher-lcg-mul",
    "cipher-lcg-inc",
    "cipher-lcg-mod",
    "random-kind",
    "random-key",
    "random-nonce",
    "random-seed",
    "random-p",
    "random-period",
    "random-lcg-mul",
    "random-lcg-inc",
    "random-lcg-mod",
    "count",
    "len-bits",
    "m",
    "train-frac",
    "split-seed",
    "bootstrap-seed",
    "table-max-m",
    "out",
];

/// One corpus: which generator and the seed sequence `i` is derived from.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusPlan {
    pub spec: GeneratorSpec,
    pub base_seed: u64,
}

impl CorpusPlan {
    pub fn generate(&self, count: usize, len_bits: usize, label: &str) -> Result<Corpus> {
        let mut c = generate_corpus(&self.spec, count, len_bits, self.base_seed)?;
        c.label = label.to_owned();
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub cipher: CorpusPlan,
    pub random: CorpusPlan,
    pub count: usize,
    pub len_bits: usize,
    pub lengths: PatternLengths,
    pub train_frac: f64,
    pub split_seed: u64,
    pub bootstrap_seed: u64,
    /// Aggregate tables are written for `m <= table_max_m` only; longer
    /// patterns are still compared, but a 20,000-sequence corpus at m=32
    /// would produce a table of tens of millions of lines.
    pub table_max_m: usize,
    pub out_dir: PathBuf,
}

/// Raw key/value settings prior to validation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigSettings(BTreeMap<String, String>);

impl ConfigSettings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses the flat `key = value` format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = ConfigSettings::new();
        let mut seen = std::collections::BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| SbcError::Parse { line: idx + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let value = value.trim().trim_matches('"');
            if !seen.insert(key.to_owned()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            out.set(key, value).map_err(|e| err(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(SbcError::validation(format!("unknown configuration key `{key}`")));
        }
        self.0.insert(key.to_owned(), value.into());
        Ok(())
    }

    /// Applies every entry of `other` on top of `self`.
    pub fn overlay(&mut self, other: &ConfigSettings) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| SbcError::validation(format!("bad value `{v}` for `{key}`")))
            })
            .transpose()
    }

    fn plan(&self, prefix: &str, default_kind: GeneratorKind, default_seed: u64) -> Result<CorpusPlan> {
        let key = |k: &str| format!("{prefix}-{k}");
        let kind = self
            .parsed::<String>(&key("kind"))?
            .map(|s| s.parse::<GeneratorKind>())
            .transpose()?
            .unwrap_or(default_kind);
        let base_seed = self.parsed::<u64>(&key("seed"))?.unwrap_or(default_seed);
        let chacha = kind == GeneratorKind::ChaCha20;
        let key_hex = self.get(&key("key")).or(chacha.then_some(DEFAULT_CHACHA_KEY));
        let nonce_hex = self.get(&key("nonce")).or(chacha.then_some(DEFAULT_CHACHA_NONCE));
        let params = GeneratorParams {
            key: key_hex.map(parse_hex_array::<32>).transpose()?,
            nonce: nonce_hex.map(parse_hex_array::<12>).transpose()?,
            seed: (!chacha).then_some(base_seed),
            p: self.parsed(&key("p"))?,
            period: self.parsed(&key("period"))?,
            lcg_multiplier: self.parsed(&key("lcg-mul"))?,
            lcg_increment: self.parsed(&key("lcg-inc"))?,
            lcg_modulus: self.parsed(&key("lcg-mod"))?,
        };
        Ok(CorpusPlan {
            spec: GeneratorSpec::from_params(kind, &params)?,
            base_seed,
        })
    }

    /// Validates and fills defaults: ChaCha20 (RFC test key) against a
    /// uniform CSPRNG, 10,000 + 10,000 sequences of 4096 bits, m = 8,16,32.
    pub fn build(&self) -> Result<ExperimentConfig> {
        let cfg = ExperimentConfig {
            cipher: self.plan("cipher", GeneratorKind::ChaCha20, 0)?,
            random: self.plan("random", GeneratorKind::Uniform, 1_000_000)?,
            count: self.parsed("count")?.unwrap_or(10_000),
            len_bits: self.parsed("len-bits")?.unwrap_or(4096),
            lengths: self.get("m").map(PatternLengths::parse).transpose()?.unwrap_or_default(),
            train_frac: self.parsed("train-frac")?.unwrap_or(0.5),
            split_seed: self.parsed("split-seed")?.unwrap_or(0),
            bootstrap_seed: self.parsed("bootstrap-seed")?.unwrap_or(0),
            table_max_m: self.parsed("table-max-m")?.unwrap_or(16),
            out_dir: self.parsed::<String>("out")?.map(PathBuf::from).unwrap_or_else(|| "sbc-run".into()),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_hex_array<const N: usize>(s: &str) -> Result<[u8; N]> {
    let bytes = hex::decode(s.trim()).map_err(|_| SbcError::validation(format!("`{s}` is not hex")))?;
    bytes
        .try_into()
        .map_err(|_| SbcError::validation(format!("expected {} hex digits, got `{s}`", 2 * N)))
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ConfigSettings::new().build().expect("defaults are valid")
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(SbcError::validation("count must be at least 2 to hold out test sequences"));
        }
        if self.len_bits == 0 {
            return Err(SbcError::validation("len-bits must be at least 1"));
        }
        if self.lengths.max() > self.len_bits {
            return Err(SbcError::validation(format!(
                "pattern length {} exceeds sequence length {}",
                self.lengths.max(),
                self.len_bits
            )));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(SbcError::validation("train-frac must lie in (0, 1)"));
        }
        self.cipher.spec.validate()?;
        self.random.spec.validate()
    }

    /// Canonical `key = value` rendering, excluding the output directory
    /// so that manifests do not depend on where a run was written.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (prefix, plan) in [("cipher", &self.cipher), ("random", &self.random)] {
            for (k, v) in plan.spec.describe() {
                let _ = writeln!(out, "{prefix}-{k} = {v}");
            }
            if plan.spec.kind() == GeneratorKind::ChaCha20 {
                let _ = writeln!(out, "{prefix}-seed = {}", plan.base_seed);
            }
        }
        let _ = writeln!(out, "count = {}", self.count);
        let _ = writeln!(out, "len-bits = {}", self.len_bits);
        let _ = writeln!(out, "m = {}", self.lengths);
        let _ = writeln!(out, "train-frac = {}", self.train_frac);
        let _ = writeln!(out, "split-seed = {}", self.split_seed);
        let _ = writeln!(out, "bootstrap-seed = {}", self.bootstrap_seed);
        let _ = writeln!(out, "table-max-m = {}", self.table_max_m);
        out
    }
}

/// What a run produced.
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub report: Report,
    pub manifest_path: PathBuf,
    /// Written files relative to the output directory, with their SHA-256.
    pub files: Vec<(String, String)>,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| SbcError::Stage {
        stage: name,
        source: Box::new(e),
    })
}

fn features_csv(features: &[FeatureVector<f64>], lengths: &PatternLengths) -> String {
    let mut out = String::from("index");
    for name in feature_names(lengths) {
        out.push(',');
        out.push_str(&name);
    }
    out.push('\n');
    for (i, x) in features.iter().enumerate() {
        let _ = write!(out, "{i}");
        for v in x.values() {
            let _ = write!(out, ",{v:?}");
        }
        out.push('\n');
    }
    out
}

/// Runs the whole pipeline. On failure every file this run created is
/// removed and the error names the failing stage.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    stage("config", config.validate())?;
    let mut tracker = OutputTracker::new();
    match run_inner(config, &mut tracker) {
        Ok(outcome) => Ok(outcome),
        Err(e) => {
            tracker.rollback();
            Err(e)
        }
    }
}

fn run_inner(cfg: &ExperimentConfig, tracker: &mut OutputTracker) -> Result<ExperimentOutcome> {
    let out = cfg.out_dir.as_path();
    stage("output", tracker.create_dir_all(out))?;

    let cipher = stage("generate", cfg.cipher.generate(cfg.count, cfg.len_bits, "cipher"))?;
    let random = stage("generate", cfg.random.generate(cfg.count, cfg.len_bits, "random"))?;
    stage("write-corpora", (|| {
        tracker.write(&out.join("cipher.sbc"), encode_corpus(&cipher)?)?;
        tracker.write(&out.join("random.sbc"), encode_corpus(&random)?)
    })())?;

    let mut per_m = Vec::new();
    for m in cfg.lengths.iter() {
        let (tc, tr) = stage("extract", (|| Ok((extract_aggregate(&cipher, m)?, extract_aggregate(&random, m)?)))())?;
        per_m.push(stage("compare", LengthComparison::from_tables(&tc, &tr))?);
        if m <= cfg.table_max_m {
            stage("write-tables", (|| {
                tracker.write(&out.join(format!("tables/cipher_m{m}.txt")), tables_to_string(&[tc]))?;
                tracker.write(&out.join(format!("tables/random_m{m}.txt")), tables_to_string(&[tr]))
            })())?;
        }
    }

    let (fc, fr) = stage("features", (|| {
        Ok((corpus_features::<f64>(&cipher, &cfg.lengths)?, corpus_features::<f64>(&random, &cfg.lengths)?))
    })())?;
    stage("write-features", (|| {
        tracker.write(&out.join("features_cipher.csv"), features_csv(&fc, &cfg.lengths))?;
        tracker.write(&out.join("features_random.csv"), features_csv(&fr, &cfg.lengths))
    })())?;

    let outcome = stage(
        "distinguish",
        distinguish_features(&fc, &fr, cfg.train_frac, cfg.split_seed, cfg.bootstrap_seed),
    )?;
    let report = Report {
        label_a: "cipher".into(),
        label_b: "random".into(),
        per_m,
        distinguish: Some(DistinguishSection::new(
            &outcome,
            &cfg.lengths,
            cfg.train_frac,
            cfg.split_seed,
            cfg.bootstrap_seed,
        )),
    };
    stage("report", (|| {
        tracker.write(&out.join(REPORT_FILE), report.to_text()?)?;
        // plot series come from the report as written, not from memory
        let written = Report::read(out.join(REPORT_FILE))?;
        for (name, body) in plot_series(&written) {
            tracker.write(&out.join("plot").join(name), body)?;
        }
        Ok(())
    })())?;

    let (manifest_path, files) = stage("manifest", write_manifest(cfg, out, tracker))?;
    Ok(ExperimentOutcome {
        report,
        manifest_path,
        files,
    })
}

fn relative_name(out: &Path, path: &Path) -> String {
    path.strip_prefix(out)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

fn write_manifest(cfg: &ExperimentConfig, out: &Path, tracker: &mut OutputTracker) -> Result<(PathBuf, Vec<(String, String)>)> {
    let mut files = tracker
        .files()
        .iter()
        .map(|p| Ok((relative_name(out, p), sha256_file(p)?)))
        .collect::<Result<Vec<_>>>()?;
    files.sort();
    let mut text = String::from("# sbc experiment manifest\n[config]\n");
    text.push_str(&cfg.canonical_text());
    text.push_str("[files]\n");
    for (name, hash) in &files {
        let _ = writeln!(text, "{hash}  {name}");
    }
    let path = out.join(MANIFEST_FILE);
    tracker.write(&path, text)?;
    Ok((path, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_experiment_shape() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.count, 10_000);
        assert_eq!(cfg.len_bits, 4096);
        assert_eq!(cfg.lengths.as_slice(), &[8, 16, 32]);
        assert_eq!(cfg.cipher.spec.kind(), GeneratorKind::ChaCha20);
        assert_eq!(cfg.random.spec.kind(), GeneratorKind::Uniform);
    }

    #[test]
    fn config_file_parsing_and_overrides() {
        let text = "\
# null experiment
cipher-kind = uniform
cipher-seed = 5
random-seed = 6   # trailing comment
count = 40
len-bits = 256
m = 16, 8
";
        let mut s = ConfigSettings::parse(text).unwrap();
        let mut flags = ConfigSettings::new();
        flags.set("count", "30").unwrap();
        s.overlay(&flags);
        let cfg = s.build().unwrap();
        assert_eq!(cfg.count, 30);
        assert_eq!(cfg.cipher, CorpusPlan { spec: GeneratorSpec::Uniform { seed: 5 }, base_seed: 5 });
        assert_eq!(cfg.lengths.as_slice(), &[8, 16]);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(ConfigSettings::parse("bogus = 1"), Err(SbcError::Parse { line: 1, .. })));
        assert!(matches!(ConfigSettings::parse("count = 1\ncount = 2"), Err(SbcError::Parse { line: 2, .. })));
        assert!(matches!(ConfigSettings::parse("\n\nno equals"), Err(SbcError::Parse { line: 3, .. })));
        let bad = |t: &str| ConfigSettings::parse(t).unwrap().build().is_err();
        assert!(bad("m = 64\nlen-bits = 32"));
        assert!(bad("train-frac = 1.0"));
        assert!(bad("count = 1"));
        assert!(bad("cipher-kind = biased-bit"));
        assert!(bad("random-p = 0.5"));
        assert!(bad("cipher-key = 00"));
    }

    #[test]
    fn small_run_writes_bundle_and_failed_run_cleans_up() {
        let tmp = tempfile::tempdir().unwrap();
        let mut s = ConfigSettings::parse("count = 20\nlen-bits = 512\nm = 4,8,24\ntable-max-m = 8").unwrap();
        s.set("out", tmp.path().join("run").to_string_lossy().into_owned()).unwrap();
        let cfg = s.build().unwrap();
        let outcome = run_experiment(&cfg).unwrap();
        let names: Vec<_> = outcome.files.iter().map(|(n, _)| n.as_str()).collect();
        for expect in [
            "cipher.sbc",
            "features_cipher.csv",
            "plot/deviation_vs_m.csv",
            "report.toml",
            "tables/cipher_m8.txt",
            "tables/random_m4.txt",
        ] {
            assert!(names.contains(&expect), "{expect} missing from {names:?}");
        }
        assert!(!names.iter().any(|n| n.contains("m24")));
        assert!(outcome.manifest_path.exists());
        assert_eq!(outcome.report.per_m.len(), 3);

        // an unwritable output path fails and leaves nothing behind
        let blocker = tmp.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let mut bad = cfg.clone();
        bad.out_dir = blocker.join("sub");
        let err = run_experiment(&bad).unwrap_err();
        assert!(matches!(err, SbcError::Stage { stage: "output", .. }), "{err}");
    }
}
