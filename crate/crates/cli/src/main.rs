//! `sbc`: generate corpora, extract pattern statistics, compare, distinguish,
//! and run whole experiments.

mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use sbc_core::generators::GeneratorKind;
use sbc_core::{PatternLengths, SearchAlgorithm};

#[derive(Debug, Parser)]
#[command(name = "sbc", version, about = "Substring-pattern analysis of keystreams and random bit sequences")]
#[command(after_help = "Environment:\n  SBC_THREADS  worker thread cap (0 or unset = one per CPU)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a corpus of bit sequences and write it as an SBC1 file.
    Gen(GenArgs),
    /// Extract pattern frequency tables from a corpus.
    Extract(ExtractArgs),
    /// Count occurrences of one pattern in every sequence of a corpus.
    Search(SearchArgs),
    /// Compare two sets of frequency tables.
    Compare(CompareArgs),
    /// Train a threshold distinguisher and estimate its advantage on held-out data.
    Distinguish(DistinguishArgs),
    /// Summarize a report and write its plot-data CSV series.
    Report(ReportArgs),
    /// Run a full experiment from a config file and/or flags.
    Run(Box<RunArgs>),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Generator: chacha20, uniform, biased-bit, lcg-truncated or repeat-block.
    #[arg(long, value_parser = parse_kind)]
    pub kind: GeneratorKind,
    /// Number of sequences.
    #[arg(long)]
    pub count: usize,
    /// Length of each sequence in bits.
    #[arg(long)]
    pub len_bits: usize,
    /// Base seed; sequence i uses seed + i (for chacha20 it sets the low nonce word).
    #[arg(long)]
    pub seed: u64,
    /// ChaCha20 key, 64 hex digits.
    #[arg(long)]
    pub key: Option<String>,
    /// ChaCha20 nonce, 24 hex digits.
    #[arg(long)]
    pub nonce: Option<String>,
    /// Probability of a 1 bit (biased-bit).
    #[arg(long)]
    pub p: Option<f64>,
    /// Block length in bits (repeat-block).
    #[arg(long)]
    pub period: Option<usize>,
    /// LCG multiplier (lcg-truncated).
    #[arg(long)]
    pub lcg_mul: Option<u64>,
    /// LCG increment (lcg-truncated).
    #[arg(long)]
    pub lcg_inc: Option<u64>,
    /// LCG modulus (lcg-truncated).
    #[arg(long)]
    pub lcg_mod: Option<u64>,
    /// Output corpus file.
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Debug, Args)]
pub struct CorpusInput {
    /// Input corpus (SBC1).
    #[arg(long = "in")]
    pub input: std::path::PathBuf,
    /// Treat the input as raw bytes forming a single sequence.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    /// Comma-separated pattern lengths, each in 1..=64.
    #[arg(long, value_parser = parse_lengths, default_value = "8,16,32")]
    pub m: PatternLengths,
    /// One table per sequence and pattern length.
    #[arg(long, conflicts_with = "aggregate")]
    pub per_sequence: bool,
    /// One table per pattern length over the whole corpus (default).
    #[arg(long)]
    pub aggregate: bool,
    /// Output table file.
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    /// Pattern as <hex>:<bits>, e.g. a5:8.
    #[arg(long)]
    pub pattern: String,
    /// Matcher: naive, kmp or bm.
    #[arg(long, value_parser = parse_algo, default_value = "kmp")]
    pub algo: SearchAlgorithm,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// First table file.
    #[arg(long)]
    pub a: std::path::PathBuf,
    /// Second table file.
    #[arg(long)]
    pub b: std::path::PathBuf,
    /// Output report.
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Debug, Args)]
pub struct DistinguishArgs {
    /// Corpus of generator output.
    #[arg(long)]
    pub cipher: std::path::PathBuf,
    /// Reference corpus.
    #[arg(long)]
    pub random: std::path::PathBuf,
    /// Comma-separated pattern lengths, each in 1..=64.
    #[arg(long, value_parser = parse_lengths, default_value = "8,16,32")]
    pub m: PatternLengths,
    /// Fraction of each corpus used for training, in (0, 1).
    #[arg(long, value_parser = parse_fraction, default_value = "0.5")]
    pub train_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long, default_value_t = 0)]
    pub bootstrap_seed: u64,
    /// Output report.
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report written by compare, distinguish or run.
    #[arg(long = "in")]
    pub input: std::path::PathBuf,
    /// Directory for the CSV series.
    #[arg(long)]
    pub plot_data: Option<std::path::PathBuf>,
}

/// Every flag maps onto the config key of the same name.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Flat `key = value` config file; flags given here override it.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub cipher_kind: Option<String>,
    #[arg(long)]
    pub cipher_key: Option<String>,
    #[arg(long)]
    pub cipher_nonce: Option<String>,
    #[arg(long)]
    pub cipher_seed: Option<String>,
    #[arg(long)]
    pub cipher_p: Option<String>,
    #[arg(long)]
    pub cipher_period: Option<String>,
    #[arg(long)]
    pub cipher_lcg_mul: Option<String>,
    #[arg(long)]
    pub cipher_lcg_inc: Option<String>,
    #[arg(long)]
    pub cipher_lcg_mod: Option<String>,
    #[arg(long)]
    pub random_kind: Option<String>,
    #[arg(long)]
    pub random_key: Option<String>,
    #[arg(long)]
    pub random_nonce: Option<String>,
    #[arg(long)]
    pub random_seed: Option<String>,
    #[arg(long)]
    pub random_p: Option<String>,
    #[arg(long)]
    pub random_period: Option<String>,
    #[arg(long)]
    pub random_lcg_mul: Option<String>,
    #[arg(long)]
    pub random_lcg_inc: Option<String>,
    #[arg(long)]
    pub random_lcg_mod: Option<String>,
    /// Sequences per corpus (default 10000).
    #[arg(long)]
    pub count: Option<String>,
    /// Bits per sequence (default 4096).
    #[arg(long)]
    pub len_bits: Option<String>,
    /// Pattern lengths (default 8,16,32).
    #[arg(long)]
    pub m: Option<String>,
    /// Training fraction (default 0.5).
    #[arg(long)]
    pub train_frac: Option<String>,
    #[arg(long)]
    pub split_seed: Option<String>,
    #[arg(long)]
    pub bootstrap_seed: Option<String>,
    /// Largest pattern length whose aggregate tables are written (default 16).
    #[arg(long)]
    pub table_max_m: Option<String>,
    /// Output directory (default sbc-run).
    #[arg(long)]
    pub out: Option<String>,
}

impl RunArgs {
    pub fn overrides(&self) -> Vec<(&'static str, &str)> {
        let fields: [(&'static str, &Option<String>); 26] = [
            ("cipher-kind", &self.cipher_kind),
            ("cipher-key", &self.cipher_key),
            ("cipher-nonce", &self.cipher_nonce),
            ("cipher-seed", &self.cipher_seed),
            ("cipher-p", &self.cipher_p),
            ("cipher-period", &self.cipher_period),
            ("cipher-lcg-mul", &self.cipher_lcg_mul),
            ("cipher-lcg-inc", &self.cipher_lcg_inc),
            ("cipher-lcg-mod", &self.cipher_lcg_mod),
            ("random-kind", &self.random_kind),
            ("random-key", &self.random_key),
            ("random-nonce", &self.random_nonce),
            ("random-seed", &self.random_seed),
            ("random-p", &self.random_p),
            ("random-period", &self.random_period),
            ("random-lcg-mul", &self.random_lcg_mul),
            ("random-lcg-inc", &self.random_lcg_inc),
            ("random-lcg-mod", &self.random_lcg_mod),
            ("count", &self.count),
            ("len-bits", &self.len_bits),
            ("m", &self.m),
            ("train-frac", &self.train_frac),
            ("split-seed", &self.split_seed),
            ("bootstrap-seed", &self.bootstrap_seed),
            ("table-max-m", &self.table_max_m),
            ("out", &self.out),
        ];
        fields.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect()
    }
}

fn parse_kind(s: &str) -> Result<GeneratorKind, String> {
    s.parse().map_err(|e: sbc_core::SbcError| e.to_string())
}

fn parse_lengths(s: &str) -> Result<PatternLengths, String> {
    PatternLengths::parse(s).map_err(|e| e.to_string())
}

fn parse_algo(s: &str) -> Result<SearchAlgorithm, String> {
    s.parse().map_err(|e: sbc_core::SbcError| e.to_string())
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let f: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if f > 0.0 && f < 1.0 {
        Ok(f)
    } else {
        Err(format!("{f} is not in (0, 1)"))
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("SBC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("SBC_THREADS must be a non-negative integer, got `{raw}`"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| format!("cannot size the worker pool: {e}"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            // a single diagnostic line; `--help` has the rest
            let rendered = e.to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("error: invalid usage"));
            return ExitCode::from(2);
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
