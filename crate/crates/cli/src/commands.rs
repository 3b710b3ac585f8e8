use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use sbc_core::corpus_io::{read_corpus_file, read_raw_file, write_corpus_file};
use sbc_core::distinguish::corpus_features;
use sbc_core::experiment::{parse_hex_array, DEFAULT_CHACHA_KEY, DEFAULT_CHACHA_NONCE};
use sbc_core::generators::{GeneratorKind, GeneratorParams};
use sbc_core::manifest::record_in_directory_manifest;
use sbc_core::pattern::export::{parse_tables, write_tables};
use sbc_core::pattern::extract_per_sequence;
use sbc_core::report::{write_plot_data, DistinguishSection, LengthComparison, Report};
use sbc_core::{
    distinguish::distinguish_features, extract_aggregate, generate_corpus, run_experiment, ConfigSettings, Corpus,
    GeneratorSpec, Pattern,
};

use crate::{CompareArgs, Command, CorpusInput, DistinguishArgs, ExtractArgs, GenArgs, ReportArgs, RunArgs, SearchArgs};

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Extract(a) => extract(a),
        Command::Search(a) => search(a),
        Command::Compare(a) => compare(a),
        Command::Distinguish(a) => distinguish(a),
        Command::Report(a) => report(a),
        Command::Run(a) => run(a),
    }
}

fn load(input: &CorpusInput) -> Result<Corpus> {
    let path = &input.input;
    let corpus = if input.raw {
        read_raw_file(path)
    } else {
        read_corpus_file(path)
    };
    corpus.with_context(|| format!("reading {}", path.display()))
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    read_corpus_file(path).with_context(|| format!("reading {}", path.display()))
}

fn record(out: &Path, note: &str) -> Result<()> {
    record_in_directory_manifest(out, note).with_context(|| format!("recording {} in the manifest", out.display()))?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn gen(a: GenArgs) -> Result<()> {
    let chacha = a.kind == GeneratorKind::ChaCha20;
    let key = a.key.as_deref().or(chacha.then_some(DEFAULT_CHACHA_KEY));
    let nonce = a.nonce.as_deref().or(chacha.then_some(DEFAULT_CHACHA_NONCE));
    let params = GeneratorParams {
        key: key.map(parse_hex_array::<32>).transpose()?,
        nonce: nonce.map(parse_hex_array::<12>).transpose()?,
        // chacha20 takes its per-sequence seed through the nonce
        seed: (!chacha).then_some(a.seed),
        p: a.p,
        period: a.period,
        lcg_multiplier: a.lcg_mul,
        lcg_increment: a.lcg_inc,
        lcg_modulus: a.lcg_mod,
    };
    let spec = GeneratorSpec::from_params(a.kind, &params)?;
    let corpus = generate_corpus(&spec, a.count, a.len_bits, a.seed)?;
    write_corpus_file(&a.out, &corpus).with_context(|| format!("writing {}", a.out.display()))?;
    let mut note = String::from("gen");
    for (k, v) in spec.describe() {
        if k != "seed" {
            note.push_str(&format!(" {k}={v}"));
        }
    }
    note.push_str(&format!(" count={} len-bits={} seed={}", a.count, a.len_bits, a.seed));
    record(&a.out, &note)?;
    println!("wrote {} x {} bits ({}) to {}", a.count, a.len_bits, a.kind, a.out.display());
    Ok(())
}

fn extract(a: ExtractArgs) -> Result<()> {
    let corpus = load(&a.input)?;
    let shortest = corpus.min_len_bits().unwrap_or(0);
    if a.m.max() > shortest {
        bail!("pattern length {} exceeds the shortest sequence ({shortest} bits)", a.m.max());
    }
    let written = (|| -> Result<usize> {
        let mut w = create(&a.out)?;
        let mut tables = 0usize;
        for m in a.m.iter() {
            let batch = if a.per_sequence {
                extract_per_sequence(&corpus, m)?
            } else {
                vec![extract_aggregate(&corpus, m)?]
            };
            write_tables(&mut w, &batch)?;
            tables += batch.len();
        }
        w.flush()?;
        Ok(tables)
    })();
    let tables = match written {
        Ok(n) => n,
        Err(e) => {
            let _ = std::fs::remove_file(&a.out);
            return Err(e);
        }
    };
    let mode = if a.per_sequence { "per-sequence" } else { "aggregate" };
    record(&a.out, &format!("extract {mode} m={} from {}", a.m, a.input.input.display()))?;
    println!("wrote {tables} {mode} table(s) for m={} to {}", a.m, a.out.display());
    Ok(())
}

fn search(a: SearchArgs) -> Result<()> {
    let pattern = Pattern::parse_hex_spec(&a.pattern)?;
    let corpus = load(&a.input)?;
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut total = 0u64;
    for (i, seq) in corpus.sequences.iter().enumerate() {
        let n = a.algo.count(seq, pattern).with_context(|| format!("sequence {i}"))?;
        writeln!(out, "{i} {n}")?;
        total += n;
    }
    writeln!(out, "total {total}")?;
    out.flush()?;
    Ok(())
}

fn read_tables(path: &Path) -> Result<Vec<sbc_core::FrequencyTable>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_tables(&text).with_context(|| format!("parsing {}", path.display()))
}

fn stem(path: &Path, fallback: &str) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| fallback.to_owned())
}

fn compare(a: CompareArgs) -> Result<()> {
    let ta = read_tables(&a.a)?;
    let tb = read_tables(&a.b)?;
    let rep = sbc_core::report::compare_tables(&stem(&a.a, "a"), &ta, &stem(&a.b, "b"), &tb)?;
    write_text(&a.out, &rep.to_text()?)?;
    record(&a.out, &format!("compare {} {}", a.a.display(), a.b.display()))?;
    for r in &rep.per_m {
        println!("m={} deviation={:.6} entropy_a={:.6} entropy_b={:.6}", r.m, r.deviation, r.entropy_a, r.entropy_b);
    }
    Ok(())
}

fn label(corpus: &Corpus, fallback: &str) -> String {
    if corpus.label.is_empty() {
        fallback.to_owned()
    } else {
        corpus.label.clone()
    }
}

fn distinguish(a: DistinguishArgs) -> Result<()> {
    let cipher = load_corpus(&a.cipher)?;
    let random = load_corpus(&a.random)?;
    let mut per_m = Vec::new();
    for m in a.m.iter() {
        per_m.push(LengthComparison::from_tables(
            &extract_aggregate(&cipher, m)?,
            &extract_aggregate(&random, m)?,
        )?);
    }
    let fc = corpus_features::<f64>(&cipher, &a.m)?;
    let fr = corpus_features::<f64>(&random, &a.m)?;
    let outcome = distinguish_features(&fc, &fr, a.train_frac, a.split_seed, a.bootstrap_seed)?;
    let section = DistinguishSection::new(&outcome, &a.m, a.train_frac, a.split_seed, a.bootstrap_seed);
    let rep = Report {
        label_a: label(&cipher, "cipher"),
        label_b: label(&random, "random"),
        per_m,
        distinguish: Some(section.clone()),
    };
    write_text(&a.out, &rep.to_text()?)?;
    record(
        &a.out,
        &format!(
            "distinguish {} {} m={} train-frac={} split-seed={} bootstrap-seed={}",
            a.cipher.display(),
            a.random.display(),
            a.m,
            a.train_frac,
            a.split_seed,
            a.bootstrap_seed
        ),
    )?;
    println!(
        "feature {} ({}) {} {:.6}: advantage {:.4} [{:.4}, {:.4}] on {} + {} held-out sequences",
        section.feature_index,
        section.feature_name,
        section.polarity,
        section.threshold,
        section.advantage,
        section.ci_low,
        section.ci_high,
        section.test_cipher,
        section.test_random
    );
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let rep = Report::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    println!("{} vs {}", rep.label_a, rep.label_b);
    for r in &rep.per_m {
        println!(
            "  m={:<2} deviation={:.6} entropy={:.4}/{:.4} (ceiling {:.4}/{:.4})",
            r.m, r.deviation, r.entropy_a, r.entropy_b, r.entropy_ceiling_a, r.entropy_ceiling_b
        );
    }
    if let Some(d) = &rep.distinguish {
        println!(
            "  advantage {:.4} [{:.4}, {:.4}] via {} {} {:.6}",
            d.advantage, d.ci_low, d.ci_high, d.feature_name, d.polarity, d.threshold
        );
    }
    if let Some(dir) = &a.plot_data {
        let written = write_plot_data(&rep, dir).with_context(|| format!("writing plot data to {}", dir.display()))?;
        for path in &written {
            record(path, &format!("report plot-data from {}", a.input.display()))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn run(a: Box<RunArgs>) -> Result<()> {
    let mut settings = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ConfigSettings::parse(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ConfigSettings::new(),
    };
    let mut flags = ConfigSettings::new();
    for (k, v) in a.overrides() {
        flags.set(k, v)?;
    }
    settings.overlay(&flags);
    let cfg = settings.build()?;
    if cfg.out_dir.exists() && cfg.out_dir.read_dir()?.next().is_some() {
        bail!("output directory {} is not empty", cfg.out_dir.display());
    }
    let outcome = run_experiment(&cfg)?;
    for r in &outcome.report.per_m {
        println!("m={:<2} deviation={:.6} entropy_cipher={:.4} entropy_random={:.4}", r.m, r.deviation, r.entropy_a, r.entropy_b);
    }
    if let Some(d) = &outcome.report.distinguish {
        println!("advantage {:.4} [{:.4}, {:.4}] via {}", d.advantage, d.ci_low, d.ci_high, d.feature_name);
    }
    println!("wrote {} files; manifest {}", outcome.files.len() + 1, outcome.manifest_path.display());
    Ok(())
}
