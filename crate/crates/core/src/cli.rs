//! Command-line front end: `classify`, `evaluate`, `aggregate`, `report`
//! and the all-in-one `pipeline`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::analytics::{aggregate, gold_pairs, pair_results, BreakdownSet};
use crate::classifier::{
    read_results, write_results, BackendConfig, BackendKind, ClassificationResult, Classifier,
    DatasetRun, ResponseCache,
};
use crate::evaluation::{build_confusion, compute_metrics, ConfusionMatrix, MetricsReport};
use crate::fsutil::write_atomic;
use crate::ingestion::{load_dataset, validate_dataset, Dataset, DatasetFormat};
use crate::prompting::{bundled_example_bank, load_example_file, PromptVersion};
use crate::reporting::{render_chart, render_markdown_report, ChartSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const RESULTS_FILE: &str = "results.jsonl";
pub const MATRIX_FILE: &str = "matrix.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const COUNTS_FILE: &str = "counts.csv";
pub const REPORT_FILE: &str = "report.md";
pub const CACHE_FILE: &str = "cache.jsonl";

#[derive(Debug, Parser)]
#[command(name = "failtax", version, about = "Classify software-failure incidents and aggregate failure types per industry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify every record and write results.jsonl.
    Classify(RunArgs),
    /// Score results against gold labels: matrix.csv and metrics.json.
    Evaluate(RunArgs),
    /// Count failure types per industry: counts.csv.
    Aggregate(RunArgs),
    /// Write report.md and one SVG chart per industry.
    Report(RunArgs),
    /// classify, evaluate (when gold labels exist), aggregate and report.
    Pipeline(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Incident dataset (JSONL or CSV).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Dataset format; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<DatasetFormat>,
    #[arg(long)]
    pub prompt_version: Option<PromptVersion>,
    /// llm, oracle or replay.
    #[arg(long)]
    pub backend: Option<BackendKind>,
    /// Base URL of an OpenAI-compatible API.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    #[arg(long)]
    pub retry_limit: Option<u32>,
    /// Response cache file (default: <out-dir>/cache.jsonl).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Extra few-shot examples (JSONL of cause/label) appended to the bundled bank.
    #[arg(long)]
    pub examples: Option<PathBuf>,
    /// Classification results to read (default: <out-dir>/results.jsonl).
    #[arg(long)]
    pub results: Option<PathBuf>,
    /// TOML file with the same keys as the long flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    input: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    format: Option<String>,
    prompt_version: Option<String>,
    backend: Option<String>,
    endpoint: Option<String>,
    model: Option<String>,
    temperature: Option<f64>,
    max_in_flight: Option<usize>,
    retry_limit: Option<u32>,
    cache: Option<PathBuf>,
    examples: Option<PathBuf>,
    results: Option<PathBuf>,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub format: DatasetFormat,
    pub prompt_version: PromptVersion,
    pub backend: BackendConfig,
    pub cache: PathBuf,
    pub examples: Option<PathBuf>,
    pub results: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_opt<T: std::str::FromStr<Err = String>>(raw: Option<String>) -> Result<Option<T>, CliError> {
    raw.map(|s| s.parse().map_err(usage)).transpose()
}

impl RunArgs {
    /// Merges flags over the optional config file and applies defaults.
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let input = self
            .input
            .or(file.input)
            .ok_or_else(|| usage("missing required --input"))?;
        let out_dir = self
            .out_dir
            .or(file.out_dir)
            .ok_or_else(|| usage("missing required --out-dir"))?;
        let format = match self.format.or(parse_opt(file.format)?) {
            Some(f) => f,
            None => DatasetFormat::from_path(&input),
        };
        let prompt_version = self
            .prompt_version
            .or(parse_opt(file.prompt_version)?)
            .unwrap_or_default();
        let kind = self
            .backend
            .or(parse_opt(file.backend)?)
            .unwrap_or(BackendKind::KeywordOracle);
        let defaults = BackendConfig::default();
        let backend = BackendConfig {
            kind,
            endpoint: self.endpoint.or(file.endpoint).unwrap_or(defaults.endpoint),
            model: self.model.or(file.model).unwrap_or(defaults.model),
            temperature: self.temperature.or(file.temperature).unwrap_or(defaults.temperature),
            max_in_flight: self
                .max_in_flight
                .or(file.max_in_flight)
                .unwrap_or(defaults.max_in_flight),
            retry_limit: self.retry_limit.or(file.retry_limit).unwrap_or(defaults.retry_limit),
            ..defaults
        };
        backend.validate().map_err(|e| usage(e.to_string()))?;
        let cache = self
            .cache
            .or(file.cache)
            .unwrap_or_else(|| out_dir.join(CACHE_FILE));
        let results = self
            .results
            .or(file.results)
            .unwrap_or_else(|| out_dir.join(RESULTS_FILE));
        Ok(RunConfig {
            input,
            out_dir,
            format,
            prompt_version,
            backend,
            cache,
            examples: self.examples.or(file.examples),
            results,
        })
    }
}

/// Summary of a classify stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifySummary {
    pub classified: usize,
    pub non_canonical: usize,
    pub failed: usize,
    pub failed_ids: Vec<String>,
}

impl ClassifySummary {
    fn from_run(run: &DatasetRun) -> Self {
        ClassifySummary {
            classified: run.succeeded_count(),
            non_canonical: run.non_canonical_count(),
            failed: run.failed_count(),
            failed_ids: run.failures().map(|(id, _)| id.to_string()).collect(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "classified {}, non-canonical {}, failed {}",
            self.classified, self.non_canonical, self.failed
        )
    }
}

fn load_input(cfg: &RunConfig) -> anyhow::Result<Dataset> {
    let ds = load_dataset(&cfg.input, cfg.format)
        .with_context(|| format!("loading {}", cfg.input.display()))?;
    for warning in validate_dataset(&ds).warnings {
        eprintln!("warning: {warning}");
    }
    Ok(ds)
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    write_atomic(path, contents.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn classify_loaded(cfg: &RunConfig, ds: &Dataset) -> anyhow::Result<(ClassifySummary, Vec<ClassificationResult>)> {
    let mut examples = bundled_example_bank();
    if let Some(path) = &cfg.examples {
        examples.extend(load_example_file(path)?);
    }
    let classifier = Classifier::with_examples(cfg.backend.clone(), examples)?;
    let cache = match cfg.backend.kind {
        BackendKind::KeywordOracle => ResponseCache::new(),
        _ => ResponseCache::load(&cfg.cache)?,
    };
    let run = classifier.run_dataset(ds, cfg.prompt_version, &cache);
    if cfg.backend.kind == BackendKind::RemoteLlm {
        cache.save(&cfg.cache)?;
    }
    let summary = ClassifySummary::from_run(&run);
    for (id, err) in run.failures() {
        eprintln!("failed {id}: {err}");
    }
    if !ds.is_empty() && summary.classified == 0 {
        bail!(
            "every record failed ({} total); failed ids: {}",
            summary.failed,
            summary.failed_ids.join(", ")
        );
    }
    let results = run.into_results();
    write_results(&cfg.out_dir.join(RESULTS_FILE), &results)
        .with_context(|| format!("writing results under {}", cfg.out_dir.display()))?;
    Ok((summary, results))
}

pub fn cmd_classify(cfg: &RunConfig) -> anyhow::Result<ClassifySummary> {
    let ds = load_input(cfg)?;
    let (summary, _) = classify_loaded(cfg, &ds)?;
    println!("{}", summary.line());
    Ok(summary)
}

fn load_results(cfg: &RunConfig) -> anyhow::Result<Vec<ClassificationResult>> {
    read_results(&cfg.results).with_context(|| format!("reading {}", cfg.results.display()))
}

/// Confusion matrix and metrics, or `None` when no record has a gold label.
fn evaluate_loaded(
    cfg: &RunConfig,
    ds: &Dataset,
    results: &[ClassificationResult],
) -> anyhow::Result<Option<(ConfusionMatrix, MetricsReport)>> {
    let pairs = pair_results(ds, results)?;
    let gold = gold_pairs(&pairs);
    if gold.is_empty() {
        return Ok(None);
    }
    let cm = build_confusion(gold)?;
    let metrics = compute_metrics(&cm)?;
    write_file(&cfg.out_dir.join(MATRIX_FILE), &cm.to_csv())?;
    write_file(&cfg.out_dir.join(METRICS_FILE), &metrics.to_json())?;
    Ok(Some((cm, metrics)))
}

pub fn cmd_evaluate(cfg: &RunConfig) -> anyhow::Result<MetricsReport> {
    let ds = load_input(cfg)?;
    let results = load_results(cfg)?;
    let (_, metrics) = evaluate_loaded(cfg, &ds, &results)?
        .ok_or_else(|| anyhow!("{} has no gold labels to evaluate against", cfg.input.display()))?;
    println!(
        "accuracy {} ({} of {}), macro {:.4}",
        metrics.accuracy_display(),
        metrics.correct,
        metrics.total,
        metrics.macro_accuracy
    );
    Ok(metrics)
}

fn aggregate_loaded(cfg: &RunConfig, ds: &Dataset, results: &[ClassificationResult]) -> anyhow::Result<BreakdownSet> {
    let pairs = pair_results(ds, results)?;
    let set = aggregate(&pairs)?;
    write_file(&cfg.out_dir.join(COUNTS_FILE), &set.to_csv())?;
    Ok(set)
}

pub fn cmd_aggregate(cfg: &RunConfig) -> anyhow::Result<BreakdownSet> {
    let ds = load_input(cfg)?;
    let results = load_results(cfg)?;
    let set = aggregate_loaded(cfg, &ds, &results)?;
    println!("aggregated {} records across {} industries", set.grand_total(), set.len());
    Ok(set)
}

fn report_loaded(
    cfg: &RunConfig,
    set: &BreakdownSet,
    evaluation: Option<&(ConfusionMatrix, MetricsReport)>,
) -> anyhow::Result<()> {
    let md = render_markdown_report(set, evaluation.map(|(cm, m)| (m, Some(cm))));
    write_file(&cfg.out_dir.join(REPORT_FILE), &md)?;
    for b in set.breakdowns() {
        let svg = render_chart(&ChartSpec::for_breakdown(b));
        write_file(&cfg.out_dir.join(format!("{}.svg", b.industry.slug())), &svg)?;
    }
    Ok(())
}

pub fn cmd_report(cfg: &RunConfig) -> anyhow::Result<()> {
    let ds = load_input(cfg)?;
    let results = load_results(cfg)?;
    let set = aggregate(&pair_results(&ds, &results)?)?;
    let evaluation = evaluate_loaded(cfg, &ds, &results)?;
    report_loaded(cfg, &set, evaluation.as_ref())?;
    println!("wrote {} and {} charts", REPORT_FILE, set.len());
    Ok(())
}

pub fn cmd_pipeline(cfg: &RunConfig) -> anyhow::Result<()> {
    let ds = load_input(cfg).context("classify")?;
    let (summary, results) = classify_loaded(cfg, &ds).context("classify")?;
    println!("{}", summary.line());
    let evaluation = evaluate_loaded(cfg, &ds, &results).context("evaluate")?;
    if let Some((_, m)) = &evaluation {
        println!("accuracy {} ({} of {})", m.accuracy_display(), m.correct, m.total);
    }
    let set = aggregate_loaded(cfg, &ds, &results).context("aggregate")?;
    report_loaded(cfg, &set, evaluation.as_ref()).context("report")?;
    println!("wrote outputs to {}", cfg.out_dir.display());
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let (args, command): (RunArgs, fn(&RunConfig) -> anyhow::Result<()>) = match cli.command {
        Command::Classify(a) => (a, |c| cmd_classify(c).map(drop)),
        Command::Evaluate(a) => (a, |c| cmd_evaluate(c).map(drop)),
        Command::Aggregate(a) => (a, |c| cmd_aggregate(c).map(drop)),
        Command::Report(a) => (a, cmd_report),
        Command::Pipeline(a) => (a, cmd_pipeline),
    };
    let cfg = args.resolve()?;
    if !cfg.input.exists() {
        return Err(usage(format!("input {} does not exist", cfg.input.display())));
    }
    command(&cfg).map_err(CliError::Runtime)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Runtime(err) => eprintln!("error: {err:#}"),
            }
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> RunArgs {
        let mut full = vec!["failtax", "classify"];
        full.extend_from_slice(list);
        match Cli::try_parse_from(full).unwrap().command {
            Command::Classify(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn defaults() {
        let cfg = args(&["--input", "d.csv", "--out-dir", "o"]).resolve().unwrap();
        assert_eq!(cfg.prompt_version, PromptVersion::V2);
        assert_eq!(cfg.backend.kind, BackendKind::KeywordOracle);
        assert_eq!(cfg.backend.temperature, 0.0);
        assert_eq!(cfg.format, DatasetFormat::Csv);
        assert_eq!(cfg.cache, Path::new("o").join(CACHE_FILE));
        assert_eq!(cfg.results, Path::new("o").join(RESULTS_FILE));
    }

    #[test]
    fn missing_input_is_usage_error() {
        let err = args(&["--out-dir", "o"]).resolve().unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn bad_temperature_is_usage_error() {
        let err = args(&["--input", "d", "--out-dir", "o", "--temperature", "3"])
            .resolve()
            .unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn config_file_with_flag_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "input = \"data.jsonl\"\nout-dir = \"out\"\nbackend = \"replay\"\nprompt-version = \"v1\"\nmax-in-flight = 8\nmodel = \"m\"\n",
        )
        .unwrap();
        let cfg = args(&["--config", path.to_str().unwrap(), "--model", "flag-model"])
            .resolve()
            .unwrap();
        assert_eq!(cfg.input, PathBuf::from("data.jsonl"));
        assert_eq!(cfg.backend.kind, BackendKind::Replay);
        assert_eq!(cfg.backend.max_in_flight, 8);
        assert_eq!(cfg.backend.model, "flag-model");
        assert_eq!(cfg.prompt_version, PromptVersion::V1);

        std::fs::write(&path, "api-key = \"secret\"\n").unwrap();
        let err = args(&["--config", path.to_str().unwrap()]).resolve().unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn unknown_flag_exit_code() {
        assert_eq!(main_with_args(["failtax", "classify", "--api-key", "x"]), EXIT_USAGE);
        assert_eq!(main_with_args(["failtax", "classify", "--backend", "bogus"]), EXIT_USAGE);
    }
}
