//! Command-line entry points.
//!
//! Exit codes: 0 on success, 2 for usage or input errors, 3 when an internal
//! invariant is violated.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{
    parse_feature_corpus, parse_text_corpus, split_indices, write_feature_corpus, FeatureCorpus,
};
use crate::error::{Error, Result};
use crate::features::{WordClass, DEFAULT_COLLOCATIONS, DEFAULT_POOL_SIZE};
use crate::report::{write_atomic, write_sweep};
use crate::stats::TesterConfig;
use crate::sweep::{build_schema, run_sweep, FeatureOptions, SweepConfig, SweepInput};
use crate::synth::{generate_corpus, GeneratorSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "modelmeasure",
    version,
    about = "Decomposable-model classifier sweeps and error attribution"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the elimination chain and write sweep.csv, chain.txt, sweep.svg, meta.txt.
    Sweep(SweepArgs),
    /// Sample a feature corpus from a generator spec.
    Synth(SynthArgs),
    /// Select collocations on the training split and extract a feature corpus.
    Features(FeaturesArgs),
}

#[derive(Debug, Args, Clone)]
pub struct FeatureFlags {
    /// Word class of the ambiguous word: noun, verb or adj.
    #[arg(long, default_value = "noun", value_parser = parse_word_class)]
    pub word_class: WordClass,
    /// Match spelling forms literally instead of case-folded.
    #[arg(long)]
    pub case_sensitive: bool,
    /// Number of most frequent spelling forms considered as collocations.
    #[arg(long, default_value_t = DEFAULT_POOL_SIZE)]
    pub pool_size: usize,
    /// Number of collocation variables to keep.
    #[arg(long, default_value_t = DEFAULT_COLLOCATIONS)]
    pub collocations: usize,
}

#[derive(Debug, Args, Clone)]
pub struct SplitFlags {
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo samples per edge test; 0 uses the asymptotic p-value.
    #[arg(long, default_value_t = 0)]
    pub mc_samples: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Text corpus, or a feature corpus with --features.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Treat the corpus as an already extracted feature corpus.
    #[arg(long)]
    pub features: bool,
    /// Label for the CSV word column and the chart title; defaults to the file stem.
    #[arg(long)]
    pub word: Option<String>,
    #[command(flatten)]
    pub split: SplitFlags,
    #[command(flatten)]
    pub feature: FeatureFlags,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub split: SplitFlags,
    #[command(flatten)]
    pub feature: FeatureFlags,
    #[arg(long)]
    pub schema_out: PathBuf,
    #[arg(long)]
    pub features_out: PathBuf,
}

fn parse_word_class(s: &str) -> std::result::Result<WordClass, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn feature_options(flags: &FeatureFlags) -> FeatureOptions {
    FeatureOptions {
        word_class: flags.word_class,
        case_sensitive: flags.case_sensitive,
        pool_size: flags.pool_size,
        collocations: flags.collocations,
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let text = read(&args.corpus)?;
    let input = if args.features {
        SweepInput::Features(parse_feature_corpus(&text)?)
    } else {
        SweepInput::Text {
            instances: parse_text_corpus(&text)?,
            options: feature_options(&args.feature),
        }
    };
    let word = args.word.clone().unwrap_or_else(|| {
        args.corpus
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "word".to_string())
    });
    let config = SweepConfig {
        word,
        test_fraction: args.split.test_fraction,
        seed: args.split.seed,
        mc_samples: args.split.mc_samples,
    };
    let result = if args.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?;
        pool.install(|| run_sweep(&input, &config))?
    } else {
        run_sweep(&input, &config)?
    };
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let mut meta: Vec<(String, String)> = vec![
        ("word".into(), config.word.clone()),
        ("corpus".into(), args.corpus.display().to_string()),
        (
            "input".into(),
            if args.features {
                "feature corpus"
            } else {
                "text corpus"
            }
            .into(),
        ),
        ("seed".into(), config.seed.to_string()),
        ("test_fraction".into(), config.test_fraction.to_string()),
        (
            "split".into(),
            "unstratified random, test size rounded half to even".into(),
        ),
        ("mc_samples".into(), config.mc_samples.to_string()),
        ("edge_test".into(), config.tester().describe()),
        (
            "selection".into(),
            "remove the removable feature edge with the largest p-value".into(),
        ),
    ];
    if !args.features {
        meta.push(("word_class".into(), args.feature.word_class.to_string()));
        meta.push((
            "case_sensitive".into(),
            args.feature.case_sensitive.to_string(),
        ));
        meta.push(("pool_size".into(), args.feature.pool_size.to_string()));
    }
    write_sweep(&args.out, &result, &meta)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let spec = GeneratorSpec::parse(&read(&args.spec)?)?;
    let corpus = generate_corpus(&spec)?;
    write_atomic(&args.out, &write_feature_corpus(&corpus))
}

pub fn cmd_features(args: &FeaturesArgs) -> Result<()> {
    let instances = parse_text_corpus(&read(&args.corpus)?)?;
    let (train_idx, _) = split_indices(instances.len(), args.split.test_fraction, args.split.seed)?;
    let train: Vec<_> = train_idx.iter().map(|&i| instances[i].clone()).collect();
    let tester = TesterConfig::monte_carlo(args.split.mc_samples, args.split.seed);
    let (schema, _, warnings) = build_schema(&train, &feature_options(&args.feature), &tester)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let corpus = FeatureCorpus {
        names: schema.variable_names(),
        rows: instances.iter().map(|i| schema.extract(i)).collect(),
    };
    write_atomic(&args.schema_out, &schema.to_text())?;
    write_atomic(&args.features_out, &write_feature_corpus(&corpus))
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Invariant(_) => EXIT_INVARIANT,
        _ => EXIT_INPUT,
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Sweep(a) => cmd_sweep(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Features(a) => cmd_features(a),
    }
}

/// Parses `args` (program name first) and runs the command, reporting
/// errors on stderr. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
