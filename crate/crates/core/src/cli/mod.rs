//! The `regexpassport` command line.

mod config;
mod report;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

pub use config::{FileConfig, DEFAULT_CONFIG_FILE};

use crate::ast::{parse, Dialect};
use crate::catalog::{Catalog, Severity};
use crate::corpus::{self, Language};
use crate::differential::{
    self, Case, DifferentialConfig, InternalEngine, InternalSubject, Subject,
};
use crate::engines::{DefenseConfig, DEFAULT_STEP_LIMIT};
use crate::external::{self, ExternalSubject, Fault, TesterCommand};
use crate::input_gen;
use crate::sl::{self, DetectBudget, EngineKind, ValidationConfig};

#[derive(Debug, Parser)]
#[command(
    name = "regexpassport",
    version,
    about = "Regex portability analysis across eight dialects"
)]
pub struct Cli {
    /// TOML file with default settings.
    #[arg(long, global = true, env = "REGEXPASSPORT_CONFIG")]
    config: Option<PathBuf>,
    /// Worker threads for batch commands (default: logical CPUs).
    #[arg(long, global = true, env = "REGEXPASSPORT_JOBS")]
    jobs: Option<usize>,
    /// Seed for input generation.
    #[arg(long, global = true, env = "REGEXPASSPORT_SEED")]
    seed: Option<u64>,
    /// Dialect patterns are written in (default: java).
    #[arg(long, global = true, env = "REGEXPASSPORT_DIALECT")]
    dialect: Option<Dialect>,
    /// Output format for report commands.
    #[arg(long, global = true, env = "REGEXPASSPORT_FORMAT")]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineChoice {
    /// Backtracking without defenses.
    Slow,
    /// Backtracking with a step counter.
    Medium,
    /// Step counter plus memoization.
    #[value(name = "medium+cache")]
    MediumCache,
    /// The Pike VM.
    Fast,
}

impl EngineChoice {
    fn kind(self) -> EngineKind {
        match self {
            EngineChoice::Slow => EngineKind::Backtrack(DefenseConfig::none()),
            EngineChoice::Medium => {
                EngineKind::Backtrack(DefenseConfig::counter(DEFAULT_STEP_LIMIT))
            }
            EngineChoice::MediumCache => EngineKind::Backtrack(DefenseConfig::all()),
            EngineChoice::Fast => EngineKind::Pike,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report constructs that another dialect reads differently.
    Lint {
        /// A pattern, or a file of patterns (one per line, or a corpus CSV).
        input: String,
        #[arg(long)]
        from: Option<Dialect>,
        /// Target dialect, or `all`.
        #[arg(long, default_value = "all")]
        to: String,
    },
    /// Predict super-linear behavior, optionally confirming it by measurement.
    Detect {
        input: String,
        /// Analysis time per regex (default 5s; use 60s for full-scale runs).
        #[arg(long, value_parser = humantime::parse_duration)]
        budget: Option<Duration>,
        #[arg(long)]
        validate: bool,
        #[arg(long, value_enum, default_value = "slow")]
        engine: EngineChoice,
        /// Time after which a validation run counts as super-linear (default 1s).
        #[arg(long, value_parser = humantime::parse_duration)]
        threshold: Option<Duration>,
    },
    /// Generate matching and mismatching inputs for a pattern.
    GenInputs {
        pattern: String,
        /// Number of inputs (default 500; use 10,000 for full-scale runs).
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, value_parser = humantime::parse_duration)]
        budget: Option<Duration>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run patterns on several engines and record disagreements.
    Difftest {
        input: String,
        /// Comma-separated: internal-bt[:dialect], internal-pike[:dialect],
        /// internal-memo[:dialect], tester:[dialect=]<command>.
        #[arg(long, default_value = "internal-bt,internal-pike")]
        subjects: String,
        /// Generated inputs per pattern (default 100).
        #[arg(long)]
        count: Option<usize>,
        /// Per-evaluation timeout (default 2s).
        #[arg(long, value_parser = humantime::parse_duration)]
        timeout: Option<Duration>,
        #[arg(long)]
        witness_log: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Extract statically declared regexes from a source tree.
    Extract {
        dir: PathBuf,
        #[arg(long)]
        lang: Language,
        #[arg(long)]
        registry: String,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Duplicate regexes within and across registries.
    ReuseReport {
        corpus: PathBuf,
        /// Newline-delimited base64 snippets.
        #[arg(long)]
        internet: Option<PathBuf>,
        #[arg(long)]
        min_len: Option<usize>,
    },
    /// Summarize a witness log or a detect output.
    Report { input: PathBuf },
    #[command(hide = true)]
    ServeTester {
        #[arg(long, default_value = "java")]
        dialect: Dialect,
        #[arg(long)]
        fault: Option<Fault>,
    },
}

/// Resolved global settings.
struct Settings {
    jobs: usize,
    seed: u64,
    dialect: Dialect,
    format: Option<Format>,
    file: FileConfig,
}

/// Parse `args` and run the command, writing results to `out`. Returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> anyhow::Result<i32>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let file = FileConfig::load(cli.config.as_deref())?;
    let dialect = match (cli.dialect, &file.dialect) {
        (Some(d), _) => d,
        (None, Some(d)) => d
            .parse()
            .map_err(|e| anyhow::anyhow!("config dialect: {e}"))?,
        (None, None) => Dialect::Java,
    };
    let settings = Settings {
        jobs: cli.jobs.or(file.jobs).unwrap_or(0),
        seed: cli.seed.or(file.seed).unwrap_or(0),
        dialect,
        format: match (cli.format, &file.format) {
            (Some(f), _) => Some(f),
            (None, Some(f)) => Some(Format::from_str(f, true).map_err(|e| anyhow::anyhow!(e))?),
            (None, None) => None,
        },
        file,
    };
    let s = &settings;
    match cli.command {
        Command::Lint { input, from, to } => lint(s, &input, from.unwrap_or(s.dialect), &to, out),
        Command::Detect {
            input,
            budget,
            validate,
            engine,
            threshold,
        } => detect(s, &input, budget, validate, engine, threshold, out),
        Command::GenInputs {
            pattern,
            count,
            budget,
            output,
        } => gen_inputs(s, &pattern, count, budget, output.as_deref(), out),
        Command::Difftest {
            input,
            subjects,
            count,
            timeout,
            witness_log,
            summary,
        } => difftest(
            s,
            &input,
            &subjects,
            count,
            timeout,
            witness_log.as_deref(),
            summary.as_deref(),
            out,
        ),
        Command::Extract {
            dir,
            lang,
            registry,
            output,
        } => {
            let entries = corpus::extract_tree(&dir, lang, &registry)?;
            with_output(output.as_deref(), out, |w| {
                Ok(corpus::write_corpus(&entries, w)?)
            })?;
            Ok(0)
        }
        Command::ReuseReport {
            corpus: path,
            internet,
            min_len,
        } => {
            let entries = corpus::read_corpus(
                File::open(&path).with_context(|| path.display().to_string())?,
            )?;
            let internet = match internet {
                Some(p) => corpus::read_internet_sources(&std::fs::read_to_string(p)?)?,
                None => Vec::new(),
            };
            let min_len = min_len
                .or(s.file.min_len)
                .unwrap_or(corpus::DEFAULT_MIN_LENGTH);
            let report = corpus::reuse_report(&entries, min_len, &internet);
            match s.format.unwrap_or(Format::Csv) {
                Format::Csv => write!(out, "{}", report.to_csv())?,
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
            }
            Ok(0)
        }
        Command::Report { input } => {
            report::report(
                &std::fs::read_to_string(&input)?,
                s.format.unwrap_or(Format::Csv),
                out,
            )?;
            Ok(0)
        }
        Command::ServeTester { dialect, fault } => {
            let stdin = io::stdin().lock();
            let stdout = io::stdout().lock();
            external::serve(stdin, stdout, dialect, fault.as_ref())?;
            Ok(0)
        }
    }
}

/// Patterns from a single inline pattern, a corpus CSV, or a file with one
/// pattern per line. Duplicates are dropped.
fn load_patterns(input: &str) -> anyhow::Result<Vec<String>> {
    let path = Path::new(input);
    let mut patterns = if path.is_file() {
        if path.extension().is_some_and(|e| e == "csv") {
            corpus::read_corpus(File::open(path)?)?
                .into_iter()
                .map(|e| e.pattern)
                .collect()
        } else {
            std::fs::read_to_string(path)?
                .lines()
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect()
        }
    } else {
        vec![input.to_string()]
    };
    let mut seen = std::collections::HashSet::new();
    patterns.retain(|p| seen.insert(p.clone()));
    Ok(patterns)
}

fn with_output(
    path: Option<&Path>,
    out: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| p.display().to_string())?);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(out),
    }
}

fn pool(jobs: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

fn lint(
    s: &Settings,
    input: &str,
    from: Dialect,
    to: &str,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let targets: Vec<Dialect> = if to == "all" {
        Dialect::HOSTS.to_vec()
    } else {
        vec![to.parse().map_err(|e| anyhow::anyhow!("--to: {e}"))?]
    };
    let catalog = Catalog::builtin();
    let mut errors = false;
    for pattern in load_patterns(input)? {
        let ast = match parse(&pattern, from) {
            Ok(a) => a,
            Err(e) => {
                writeln!(out, "{pattern}: error: does not parse as {from}: {e}")?;
                errors = true;
                continue;
            }
        };
        for target in &targets {
            for f in catalog.lint(&ast, from, *target) {
                errors |= f.severity == Severity::Error;
                match s.format {
                    Some(Format::Json) => {
                        #[derive(Serialize)]
                        struct Line<'a> {
                            pattern: &'a str,
                            #[serde(flatten)]
                            finding: &'a crate::catalog::Finding,
                        }
                        writeln!(
                            out,
                            "{}",
                            serde_json::to_string(&Line {
                                pattern: &pattern,
                                finding: &f
                            })?
                        )?
                    }
                    _ => writeln!(
                        out,
                        "{pattern}:{}-{}: {}: {} [{}]",
                        f.location.start, f.location.end, f.severity, f.message, f.entry_id
                    )?,
                }
            }
        }
    }
    Ok(i32::from(errors))
}

#[derive(Serialize)]
struct DetectLine {
    pattern: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prediction: Option<sl::Prediction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    validation: Option<sl::Verdict>,
}

fn detect(
    s: &Settings,
    input: &str,
    budget: Option<Duration>,
    validate: bool,
    engine: EngineChoice,
    threshold: Option<Duration>,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let patterns = load_patterns(input)?;
    let budget = DetectBudget {
        time: budget
            .or(s.file.budget)
            .unwrap_or(DetectBudget::desk().time),
        ..DetectBudget::desk()
    };
    let config = ValidationConfig {
        threshold: threshold
            .or(s.file.threshold)
            .unwrap_or(ValidationConfig::desk().threshold),
        ..ValidationConfig::desk()
    };
    let lines: Vec<DetectLine> = pool(s.jobs)?.install(|| {
        patterns
            .par_iter()
            .map(|p| {
                let ast = match parse(p, s.dialect) {
                    Ok(a) => a,
                    Err(e) => {
                        return DetectLine {
                            pattern: p.clone(),
                            error: Some(e.to_string()),
                            prediction: None,
                            validation: None,
                        }
                    }
                };
                let prediction = sl::detect(&ast, budget);
                let validation = match (&prediction.attack, validate) {
                    (Some(a), true) => sl::validate_attack(&ast, a, engine.kind(), &config).ok(),
                    _ => None,
                };
                DetectLine {
                    pattern: p.clone(),
                    error: None,
                    prediction: Some(prediction),
                    validation,
                }
            })
            .collect()
    });
    for l in lines {
        writeln!(out, "{}", serde_json::to_string(&l)?)?;
    }
    Ok(0)
}

fn gen_inputs(
    s: &Settings,
    pattern: &str,
    count: Option<usize>,
    budget: Option<Duration>,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let ast = parse(pattern, s.dialect)?;
    let count = count.or(s.file.count).unwrap_or(input_gen::DESK_TARGET);
    let budget = budget
        .or(s.file.budget)
        .unwrap_or(input_gen::DESK_GEN_BUDGET);
    let set = match input_gen::generate(&ast, count, budget, s.seed) {
        Ok(set) => set,
        Err(input_gen::GenerateError::BudgetExceeded { partial }) => {
            log::warn!("input generation ran out of time; writing a partial set");
            partial
        }
    };
    with_output(output, out, |w| Ok(input_gen::write_inputs(&set, w)?))?;
    Ok(0)
}

/// Build subjects from the `--subjects` list.
fn subjects(spec: &str, default: Dialect) -> anyhow::Result<Vec<Box<dyn Subject>>> {
    let mut out: Vec<Box<dyn Subject>> = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let (kind, rest) = item.split_once(':').unwrap_or((item, ""));
        let dialect = |d: &str| -> anyhow::Result<Dialect> {
            if d.is_empty() {
                Ok(default)
            } else {
                d.parse()
                    .map_err(|e| anyhow::anyhow!("subject `{item}`: {e}"))
            }
        };
        match kind {
            "internal-bt" => out.push(Box::new(InternalSubject::backtrack(dialect(rest)?))),
            "internal-pike" => out.push(Box::new(InternalSubject::pike(dialect(rest)?))),
            "internal-memo" => {
                let d = dialect(rest)?;
                out.push(Box::new(InternalSubject::new(
                    format!("memo:{d}"),
                    d,
                    InternalEngine::Backtrack(DefenseConfig {
                        step_limit: None,
                        ..DefenseConfig::all()
                    }),
                )))
            }
            "tester" => {
                let (d, cmd) = match rest.split_once('=') {
                    Some((d, cmd)) if d.parse::<Dialect>().is_ok() => (dialect(d)?, cmd),
                    _ => (default, rest),
                };
                let Some(command) = TesterCommand::parse(cmd) else {
                    bail!("subject `{item}` has no command");
                };
                out.push(Box::new(ExternalSubject::new(
                    format!("tester:{d}"),
                    d,
                    command,
                )));
            }
            _ => bail!("unknown subject `{item}`"),
        }
    }
    let mut names = std::collections::HashSet::new();
    for s in &out {
        if !names.insert(s.name().to_string()) {
            bail!("subject `{}` listed twice", s.name());
        }
    }
    if out.len() < 2 {
        bail!("difftest needs at least two subjects");
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn difftest(
    s: &Settings,
    input: &str,
    subject_spec: &str,
    count: Option<usize>,
    timeout: Option<Duration>,
    witness_log: Option<&Path>,
    summary: Option<&Path>,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let owned = subjects(subject_spec, s.dialect)?;
    let subjects: Vec<&dyn Subject> = owned.iter().map(|b| b.as_ref()).collect();
    let count = count.or(s.file.count).unwrap_or(100);
    let patterns = load_patterns(input)?;
    let cases: Vec<Case> = pool(s.jobs)?.install(|| {
        patterns
            .par_iter()
            .map(|p| {
                // Inputs come from the first subject's dialect; patterns it
                // cannot parse still run with a few boundary strings.
                let inputs = match parse(p, subjects[0].dialect()) {
                    Ok(ast) => {
                        match input_gen::generate(&ast, count, input_gen::DESK_GEN_BUDGET, s.seed) {
                            Ok(set)
                            | Err(input_gen::GenerateError::BudgetExceeded { partial: set }) => {
                                set.all().cloned().collect()
                            }
                        }
                    }
                    Err(_) => vec![String::new(), "a".into()],
                };
                Case {
                    regex: p.clone(),
                    inputs,
                }
            })
            .collect()
    });
    let config = DifferentialConfig {
        timeout: timeout
            .or(s.file.timeout)
            .unwrap_or(differential::DIFFERENTIAL_TIMEOUT),
        jobs: s.jobs,
    };
    let report = differential::run_batch(&cases, &subjects, Catalog::builtin(), config);
    let names: Vec<String> = subjects.iter().map(|s| s.name().to_string()).collect();
    let summary_csv = differential::summarize(&report.witnesses, &names).to_csv();
    with_output(witness_log, out, |w| {
        for wit in &report.witnesses {
            writeln!(w, "{}", wit.to_json_line())?;
        }
        Ok(())
    })?;
    with_output(summary, out, |w| Ok(write!(w, "{summary_csv}")?))?;
    let unexplained = report
        .witnesses
        .iter()
        .filter(|w| !w.is_explained())
        .count();
    log::info!(
        "{} evaluations, {} witnesses ({} unexplained), {} failures",
        report.evaluated,
        report.witnesses.len(),
        unexplained,
        report.failures.len()
    );
    Ok(0)
}
