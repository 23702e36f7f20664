//! Command-line front end: `mutate`, `verify`, `eval`, `report`, `count`.
//!
//! Exit codes: 0 success, 1 operational failure (I/O, runner, endpoint),
//! 2 usage error, 3 when `verify` finds a behavioral mismatch.

use std::collections::HashSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dataset::{self, MutatedMeta, TestCase, RENAME_SCOPE};
use crate::equiv::{verify_dataset, Verdict, VerifyItem, VerifyOptions};
use crate::eval::{
    self, EvalItem, EvalOptions, HttpClient, ModelEndpoint, RetryPolicy, SampleCache, SamplingPlan,
    TranslationCommand, GRADES_SUFFIX, ORIGINAL, SUMMARY_SUFFIX,
};
use crate::exec::Exec;
use crate::mutate::{compose_with, MutationConfig, MutationKind, MutationPlan};
use crate::report::{self, TableFormat};
use crate::runner::{ProcessRunner, RunnerCommand, Runner, StubRunner, DEFAULT_TIMEOUT_MS, RUNNER_PATH_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

/// File written to an output directory before any work starts.
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "mutabench", version, about = "Semantic-preserving mutation benchmarks for code models")]
struct Cli {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for per-case loops (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run per-case loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write mutated copies of a dataset.
    Mutate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        benchmark: String,
        /// Comma-separated operators or combos (varnorm1, varnorm2,
        /// constunfold, for2while, condaug, fuv, auv, afu, a+b+...).
        #[arg(long)]
        ops: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Check mutants against their originals by differential execution.
    Verify {
        #[arg(long)]
        original: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        mutated: Vec<PathBuf>,
        /// Defaults to the benchmark recorded with the mutated dataset.
        #[arg(long)]
        benchmark: Option<String>,
        #[arg(long)]
        timeout_ms: Option<u64>,
        /// Also compare on perturbed integer inputs.
        #[arg(long)]
        fuzz: bool,
        /// Runner worker (path, or `stub`); defaults to $MUTABENCH_RUNNER_PATH.
        #[arg(long)]
        runner: Option<String>,
        #[arg(long)]
        pool: Option<usize>,
        /// Write the full summary as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sample completions from model endpoints and grade them.
    Eval {
        /// Original or mutated dataset.
        #[arg(long)]
        dataset: PathBuf,
        /// Benchmark of an original dataset (mutated datasets record it).
        #[arg(long)]
        benchmark: Option<String>,
        /// Endpoints file (JSON); defaults to the config's endpoints.
        #[arg(long)]
        endpoint: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long)]
        concurrency: Option<usize>,
        /// Results directory (default: the dataset's directory).
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
        /// Sample cache directory (default: <out>/cache).
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        timeout_ms: Option<u64>,
        /// Command running translated programs; `{file}` is the source path.
        #[arg(long)]
        translation_cmd: Option<String>,
        #[arg(long)]
        runner: Option<String>,
        #[arg(long)]
        pool: Option<usize>,
        /// Base delay of the exponential retry backoff.
        #[arg(long)]
        retry_base_ms: Option<u64>,
    },
    /// Assemble delta tables, BLEU and distribution data from eval runs.
    Report {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        /// Write the table here instead of stdout.
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
        /// Also write the tidy distribution CSV.
        #[arg(long)]
        distribution: Option<PathBuf>,
    },
    /// Applicability census: how many cases each operator applies to.
    Count {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        benchmark: String,
        #[arg(long, default_value = "varnorm1,varnorm2,constunfold,for2while,condaug")]
        ops: String,
        /// List the applicable case ids.
        #[arg(long)]
        ids: bool,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Markdown,
    Csv,
}

/// Contents of the `--config` file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub mutation: Option<MutationConfig>,
    pub runner: RunnerConfig,
    pub endpoints: Vec<ModelEndpoint>,
    pub sampling: Option<SamplingPlan>,
    pub timeout_ms: Option<u64>,
    pub translation_command: Option<String>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunnerConfig {
    pub path: Option<String>,
    pub pool_size: Option<usize>,
}

/// Record of one invocation, written before any work starts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub config_path: Option<PathBuf>,
    pub config: Config,
    pub seed: Option<u64>,
    pub datasets: Vec<DatasetDigest>,
    pub mutations: Vec<String>,
    pub endpoints: Vec<String>,
    pub output_dir: PathBuf,
    pub unix_time: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn op(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

macro_rules! op_err {
    ($($t:tt)*) => { |e| Failure::op(format!("{}: {e}", format!($($t)*))) };
}

type Outcome = Result<i32, Failure>;

/// Shared cancellation flag, set by Ctrl-C.
pub fn cancel_flag() -> &'static AtomicBool {
    static CANCEL: AtomicBool = AtomicBool::new(false);
    &CANCEL
}

/// Installs the Ctrl-C handler (once per process).
pub fn install_interrupt_handler() {
    if let Err(e) = ctrlc::set_handler(|| {
        if cancel_flag().swap(true, Ordering::SeqCst) {
            std::process::exit(130);
        }
        eprintln!("interrupted: finishing in-flight work (press Ctrl-C again to abort)");
    }) {
        log::debug!("cannot install interrupt handler: {e}");
    }
}

/// Parses `argv` and runs the subcommand, returning the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, &argv) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn run(cli: Cli, argv: &[String]) -> Outcome {
    let config = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(op_err!("reading {}", p.display()))?;
            serde_json::from_str::<Config>(&text).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?
        }
        None => Config::default(),
    };
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::with_threads(cli.threads.or(config.threads).unwrap_or(0))
    };
    let ctx = Ctx {
        config,
        config_path: cli.config.clone(),
        exec,
        argv: argv.to_vec(),
    };
    match cli.command {
        Command::Mutate {
            dataset,
            benchmark,
            ops,
            seed,
            out,
        } => cmd_mutate(&ctx, &dataset, &benchmark, &ops, seed, &out),
        Command::Verify {
            original,
            mutated,
            benchmark,
            timeout_ms,
            fuzz,
            runner,
            pool,
            report,
        } => cmd_verify(&ctx, &original, &mutated, benchmark, timeout_ms, fuzz, runner, pool, report),
        Command::Eval {
            dataset,
            benchmark,
            endpoint,
            samples,
            temperature,
            concurrency,
            out,
            cache,
            timeout_ms,
            translation_cmd,
            runner,
            pool,
            retry_base_ms,
        } => cmd_eval(
            &ctx,
            EvalArgs {
                dataset,
                benchmark,
                endpoint,
                samples,
                temperature,
                concurrency,
                out,
                cache,
                timeout_ms,
                translation_cmd,
                runner,
                pool,
                retry_base_ms,
            },
        ),
        Command::Report {
            runs,
            format,
            out,
            distribution,
        } => cmd_report(&runs, format, out, distribution),
        Command::Count {
            dataset,
            benchmark,
            ops,
            ids,
            json,
        } => cmd_count(&ctx, &dataset, &benchmark, &ops, ids, json),
    }
}

struct Ctx {
    config: Config,
    config_path: Option<PathBuf>,
    exec: Exec,
    argv: Vec<String>,
}

impl Ctx {
    fn mutation_config(&self, seed: Option<u64>) -> Result<MutationConfig, Failure> {
        let mut cfg = self.config.mutation.clone().unwrap_or_default();
        if let Some(s) = seed.or(self.config.seed) {
            cfg.seed = s;
        }
        cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
        Ok(cfg)
    }

    fn write_manifest(
        &self,
        command: &str,
        out: &Path,
        datasets: &[&Path],
        seed: Option<u64>,
        mutations: Vec<String>,
        endpoints: Vec<String>,
    ) -> Result<(), Failure> {
        std::fs::create_dir_all(out).map_err(op_err!("creating {}", out.display()))?;
        let datasets = datasets
            .iter()
            .map(|p| {
                let bytes = std::fs::read(p).map_err(op_err!("reading {}", p.display()))?;
                Ok(DatasetDigest {
                    path: p.to_path_buf(),
                    sha256: dataset::sha256_hex(&bytes),
                })
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            argv: self.argv.clone(),
            config_path: self.config_path.clone(),
            config: self.config.clone(),
            seed,
            datasets,
            mutations,
            endpoints,
            output_dir: out.to_path_buf(),
            unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let path = out.join(MANIFEST_FILE);
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        bytes.push(b'\n');
        dataset::write_atomic(&path, &bytes).map_err(op_err!("writing {}", path.display()))
    }

    fn runner(&self, flag: Option<String>, pool: Option<usize>) -> Result<Box<dyn Runner>, Failure> {
        let spec = flag
            .or_else(|| std::env::var(RUNNER_PATH_ENV).ok().filter(|s| !s.is_empty()))
            .or_else(|| self.config.runner.path.clone());
        let Some(spec) = spec else {
            return Err(Failure::op(format!(
                "no runner worker configured: pass --runner, set {RUNNER_PATH_ENV}, or set runner.path in the config"
            )));
        };
        if spec == "stub" {
            log::warn!("using the in-memory stub runner; only trivial programs can be executed");
            return Ok(Box::new(StubRunner));
        }
        let size = pool
            .or(self.config.runner.pool_size)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(4, |n| n.get()));
        let runner = ProcessRunner::new(RunnerCommand::for_path(&spec), size).map_err(|e| Failure::op(e.to_string()))?;
        Ok(Box::new(runner))
    }
}

fn load_cases(path: &Path, benchmark: &str) -> Result<Vec<TestCase>, Failure> {
    let ds = dataset::load(path, benchmark).map_err(|e| match e {
        dataset::DatasetError::Format { .. } => Failure::usage(e.to_string()),
        _ => Failure::op(e.to_string()),
    })?;
    for r in &ds.rejects {
        log::warn!("{}:{}: rejected `{}`: {}", path.display(), r.line, r.id, r.reason);
    }
    Ok(ds.cases)
}

fn file_tag(plan: &MutationPlan) -> String {
    plan.tag.replace('+', "_")
}

fn cmd_mutate(ctx: &Ctx, path: &Path, benchmark: &str, ops: &str, seed: Option<u64>, out: &Path) -> Outcome {
    let plans = MutationPlan::parse_list(ops).map_err(|e| Failure::usage(e.to_string()))?;
    let config = ctx.mutation_config(seed)?;
    ctx.write_manifest(
        "mutate",
        out,
        &[path],
        Some(config.seed),
        plans.iter().map(|p| p.tag.clone()).collect(),
        Vec::new(),
    )?;
    let cases = load_cases(path, benchmark)?;
    let rejects = dataset::load(path, benchmark).map(|d| d.rejects).unwrap_or_default();
    let source_sha = dataset::sha256_hex(&std::fs::read(path).map_err(op_err!("reading {}", path.display()))?);
    for plan in &plans {
        let outcomes = dataset::mutate_cases(&cases, plan, &config, ctx.exec);
        for (c, o) in cases.iter().zip(&outcomes) {
            if let Err(e) = o {
                log::warn!("{}: {} not applied: {e}", c.id, plan.tag);
            }
        }
        let all_applied = outcomes
            .iter()
            .filter(|o| o.as_ref().is_ok_and(|o| dataset::all_constituents_applied(o, &plan.kinds)))
            .count();
        let target = out.join(format!("{}.jsonl", file_tag(plan)));
        let records = dataset::emit(&cases, &outcomes, &plan.tag, config.seed, &target).map_err(|e| Failure::op(e.to_string()))?;
        let applied = records.iter().filter(|r| r.applied).count();
        let meta = MutatedMeta {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            mutation: plan.tag.clone(),
            kinds: plan.kinds.clone(),
            benchmark: benchmark.to_string(),
            source: path.to_path_buf(),
            source_sha256: source_sha.clone(),
            config: config.clone(),
            rename_scope: RENAME_SCOPE.into(),
            records: records.len(),
            applied,
            all_applied,
            rejects: rejects.clone(),
        };
        dataset::write_meta(&meta, &target).map_err(|e| Failure::op(e.to_string()))?;
        println!("{}\t{applied}/{} applied\t{}", plan.tag, records.len(), target.display());
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    ctx: &Ctx,
    original: &Path,
    mutated: &[PathBuf],
    benchmark: Option<String>,
    timeout_ms: Option<u64>,
    fuzz: bool,
    runner: Option<String>,
    pool: Option<usize>,
    report_path: Option<PathBuf>,
) -> Outcome {
    let opts = VerifyOptions {
        timeout_ms: timeout_ms.or(ctx.config.timeout_ms).unwrap_or(DEFAULT_TIMEOUT_MS),
        fuzz,
    };
    let mut loaded = Vec::new();
    for m in mutated {
        let records = dataset::load_mutated(m).map_err(|e| Failure::usage(e.to_string()))?;
        let bench = match &benchmark {
            Some(b) => b.clone(),
            None => dataset::read_meta(m)
                .map(|meta| meta.benchmark)
                .map_err(|e| Failure::usage(format!("{e}; pass --benchmark")))?,
        };
        loaded.push((bench, records));
    }
    let runner = ctx.runner(runner, pool)?;
    let mut originals: Vec<(String, Vec<TestCase>)> = Vec::new();
    for (bench, _) in &loaded {
        if !originals.iter().any(|(b, _)| b == bench) {
            originals.push((bench.clone(), load_cases(original, bench)?));
        }
    }
    let mut items = Vec::new();
    for (bench, records) in &loaded {
        let cases = &originals.iter().find(|(b, _)| b == bench).expect("loaded").1;
        for (case, rec) in dataset::join_mutants(cases, records).map_err(Failure::usage)? {
            items.push(VerifyItem {
                case,
                mutant: &rec.code,
                mutation: &rec.mutation,
                applied: rec.applied,
            });
        }
    }
    let summary = verify_dataset(runner.as_ref(), &items, opts, ctx.exec);
    println!(
        "visited {}  equivalent {}  mismatch {}  inconclusive {}",
        summary.visited, summary.equivalent, summary.mismatch, summary.inconclusive
    );
    for o in &summary.offenders {
        let tag = match o.verdict.status {
            Verdict::Mismatch => "MISMATCH",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Equivalent => continue,
        };
        println!(
            "{tag}\t{}\t{}\toriginal={}\tmutated={}\t{}",
            o.id, o.mutation, o.verdict.original_result, o.verdict.mutated_result, o.verdict.detail
        );
    }
    if let Some(p) = report_path {
        let bytes = serde_json::to_vec_pretty(&summary).expect("summary serializes");
        dataset::write_atomic(&p, &bytes).map_err(op_err!("writing {}", p.display()))?;
    }
    Ok(if summary.mismatch > 0 { EXIT_MISMATCH } else { EXIT_OK })
}

struct EvalArgs {
    dataset: PathBuf,
    benchmark: Option<String>,
    endpoint: Option<PathBuf>,
    samples: Option<usize>,
    temperature: Option<f64>,
    concurrency: Option<usize>,
    out: Option<PathBuf>,
    cache: Option<PathBuf>,
    timeout_ms: Option<u64>,
    translation_cmd: Option<String>,
    runner: Option<String>,
    pool: Option<usize>,
    retry_base_ms: Option<u64>,
}

/// Case ids whose every constituent applies, recomputed from the recorded
/// configuration.
fn strict_ids(cases: &[TestCase], meta: &MutatedMeta, exec: Exec) -> Vec<String> {
    let flags = exec.map(cases, |c| {
        compose_with(&c.program, &meta.kinds, &meta.config, &c.context())
            .is_ok_and(|o| dataset::all_constituents_applied(&o, &meta.kinds))
    });
    cases.iter().zip(flags).filter(|(_, f)| *f).map(|(c, _)| c.id.clone()).collect()
}

fn cmd_eval(ctx: &Ctx, a: EvalArgs) -> Outcome {
    let endpoints = match &a.endpoint {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(op_err!("reading {}", p.display()))?;
            ModelEndpoint::load_all(&text).map_err(Failure::usage)?
        }
        None if !ctx.config.endpoints.is_empty() => ctx.config.endpoints.clone(),
        None => return Err(Failure::usage("no endpoints: pass --endpoint or list them in the config")),
    };
    for e in &endpoints {
        e.validate().map_err(Failure::usage)?;
    }
    let base_plan = ctx.config.sampling.unwrap_or_default();
    let plan = SamplingPlan {
        n_samples: a.samples.unwrap_or(base_plan.n_samples),
        temperature: a.temperature.unwrap_or(base_plan.temperature),
        concurrency_limit: a.concurrency.unwrap_or(base_plan.concurrency_limit),
    };
    plan.validate().map_err(Failure::usage)?;

    let is_mutated = dataset::is_mutated_file(&a.dataset).map_err(|e| Failure::op(e.to_string()))?;
    let (meta, original_path) = if is_mutated {
        let meta = dataset::read_meta(&a.dataset).map_err(|e| Failure::usage(e.to_string()))?;
        let src = if meta.source.exists() {
            meta.source.clone()
        } else {
            a.dataset.parent().unwrap_or(Path::new(".")).join(&meta.source)
        };
        (Some(meta), src)
    } else {
        (None, a.dataset.clone())
    };
    let benchmark = match (&meta, &a.benchmark) {
        (Some(m), _) => m.benchmark.clone(),
        (None, Some(b)) => b.clone(),
        (None, None) => return Err(Failure::usage("--benchmark is required for an original dataset")),
    };
    let mutation = meta.as_ref().map_or(ORIGINAL.to_string(), |m| m.mutation.clone());
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| a.dataset.parent().unwrap_or(Path::new(".")).to_path_buf());
    ctx.write_manifest(
        "eval",
        &out,
        &[&a.dataset, &original_path],
        meta.as_ref().map(|m| m.seed),
        vec![mutation.clone()],
        endpoints.iter().map(|e| format!("{} @ {}", e.model_name, e.base_url)).collect(),
    )?;

    let cases = load_cases(&original_path, &benchmark)?;
    let mutants = if is_mutated {
        dataset::load_mutated(&a.dataset).map_err(|e| Failure::usage(e.to_string()))?
    } else {
        Vec::new()
    };
    let joined = dataset::join_mutants(&cases, &mutants).map_err(Failure::usage)?;
    let applied_ids: Vec<String> = joined.iter().filter(|(_, r)| r.applied).map(|(c, _)| c.id.clone()).collect();
    let all_applied_ids = meta
        .as_ref()
        .filter(|m| m.kinds.len() > 1)
        .map(|m| {
            let strict: HashSet<String> = strict_ids(&cases, m, ctx.exec).into_iter().collect();
            applied_ids.iter().filter(|id| strict.contains(*id)).cloned().collect::<Vec<_>>()
        });

    let mut items: Vec<EvalItem> = cases
        .iter()
        .map(|c| EvalItem {
            original: c,
            shown: c.clone(),
            mutation: ORIGINAL.into(),
        })
        .collect();
    for (c, r) in joined.iter().filter(|(_, r)| r.applied) {
        items.push(EvalItem {
            original: c,
            shown: c.with_program(r.code.clone()),
            mutation: mutation.clone(),
        });
    }

    let runner: Arc<dyn Runner> = Arc::from(ctx.runner(a.runner.clone(), a.pool)?);
    let translation = a
        .translation_cmd
        .clone()
        .or_else(|| ctx.config.translation_command.clone())
        .map(TranslationCommand::new);
    let opts = EvalOptions {
        plan,
        retry: RetryPolicy {
            attempts: RetryPolicy::default().attempts,
            base_delay: a.retry_base_ms.map_or(RetryPolicy::default().base_delay, Duration::from_millis),
        },
        timeout_ms: a.timeout_ms.or(ctx.config.timeout_ms).unwrap_or(DEFAULT_TIMEOUT_MS),
        translation,
        exec: ctx.exec,
    };
    let cache = SampleCache::new(a.cache.clone().unwrap_or_else(|| out.join("cache")));
    let mut code = EXIT_OK;
    for endpoint in &endpoints {
        let client = HttpClient::new(endpoint.clone());
        log::info!("{}: {} prompts x {} samples via {}", endpoint.model_name, items.len(), plan.n_samples, client.url());
        let output = eval::evaluate(&client, Some(&cache), runner.as_ref(), &items, &opts, cancel_flag())
            .map_err(|e| Failure::usage(e.to_string()))?;
        let run_dir = out.join(sanitize(&endpoint.model_name));
        std::fs::create_dir_all(&run_dir).map_err(op_err!("creating {}", run_dir.display()))?;
        let stem = run_dir.join(format!("{}-{}", benchmark, mutation.replace('+', "_")));
        let grades_path = PathBuf::from(format!("{}{GRADES_SUFFIX}", stem.display()));
        let kept: Vec<_> = output
            .records
            .iter()
            .filter(|r| !r.error.as_deref().is_some_and(|e| e == "cancelled"))
            .collect();
        let mut buf = Vec::new();
        for r in &kept {
            serde_json::to_writer(&mut buf, r).expect("grade serializes");
            buf.push(b'\n');
        }
        dataset::write_atomic(&grades_path, &buf).map_err(op_err!("writing {}", grades_path.display()))?;
        if output.cancelled {
            eprintln!(
                "{}: cancelled; {} graded samples written to {} (no summary)",
                endpoint.model_name,
                kept.len(),
                grades_path.display()
            );
            return Ok(EXIT_FAILURE);
        }
        let transport_failures = output
            .records
            .iter()
            .filter(|r| r.raw_completion.is_empty() && r.error.is_some())
            .count();
        if transport_failures == output.records.len() && !output.records.is_empty() {
            eprintln!("{}: every request failed ({})", endpoint.model_name, output.records[0].error.as_deref().unwrap_or(""));
            code = EXIT_FAILURE;
        }
        let summary = eval::summarize(
            &benchmark,
            &endpoint.model_name,
            &mutation,
            cases.len(),
            &output,
            plan.n_samples,
            applied_ids.clone(),
            all_applied_ids.clone(),
            &runner.describe(),
        );
        let summary_path = PathBuf::from(format!("{}{SUMMARY_SUFFIX}", stem.display()));
        let mut bytes = serde_json::to_vec_pretty(&summary).expect("summary serializes");
        bytes.push(b'\n');
        dataset::write_atomic(&summary_path, &bytes).map_err(op_err!("writing {}", summary_path.display()))?;
        let pct = |v: Option<f64>| v.map_or("-".into(), |x| format!("{:.2}", x * 100.0));
        println!(
            "{}\t{}\t{}\torigin_full {}\torigin_subset {}\tmutated {}\t(requests {}, cached {})",
            benchmark,
            endpoint.model_name,
            mutation,
            pct(summary.origin_full),
            pct(summary.applied.origin),
            pct(summary.applied.mutated),
            output.requests,
            output.cache_hits
        );
    }
    Ok(code)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

fn find_mutated_datasets(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            find_mutated_datasets(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "jsonl")
            && !path.to_string_lossy().ends_with(GRADES_SUFFIX)
            && dataset::meta_path(&path).exists()
        {
            out.push(path);
        }
    }
    Ok(())
}

fn cmd_report(runs: &Path, format: Format, out: Option<PathBuf>, distribution: Option<PathBuf>) -> Outcome {
    if !runs.is_dir() {
        return Err(Failure::usage(format!("{} is not a directory", runs.display())));
    }
    let summaries = report::load_runs(runs).map_err(|e| Failure::op(e.to_string()))?;
    if summaries.is_empty() {
        return Err(Failure::op(format!("no *{SUMMARY_SUFFIX} files under {}", runs.display())));
    }
    let rows: Vec<_> = summaries.iter().flat_map(report::rows_from_summary).collect();
    let mut datasets = Vec::new();
    find_mutated_datasets(runs, &mut datasets).map_err(op_err!("scanning {}", runs.display()))?;
    datasets.sort();
    let mut bleu = Vec::new();
    for d in &datasets {
        match report::bleu_for_mutated(d) {
            Ok(b) => bleu.push(b),
            Err(e) => log::warn!("{}: no BLEU: {e}", d.display()),
        }
    }
    let table = report::delta_table(
        &rows,
        &bleu,
        match format {
            Format::Markdown => TableFormat::Markdown,
            Format::Csv => TableFormat::Csv,
        },
    );
    match out {
        Some(p) => dataset::write_atomic(&p, table.as_bytes()).map_err(op_err!("writing {}", p.display()))?,
        None => print!("{table}"),
    }
    if let Some(p) = distribution {
        dataset::write_atomic(&p, report::distribution_csv(&rows).as_bytes()).map_err(op_err!("writing {}", p.display()))?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CensusRow {
    mutation: String,
    applicable: usize,
    total: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    ids: Option<Vec<String>>,
}

fn cmd_count(ctx: &Ctx, path: &Path, benchmark: &str, ops: &str, ids: bool, json: bool) -> Outcome {
    let plans = MutationPlan::parse_list(ops).map_err(|e| Failure::usage(e.to_string()))?;
    let config = ctx.mutation_config(None)?;
    let cases = load_cases(path, benchmark)?;
    let mut rows = Vec::new();
    for plan in &plans {
        let applicable: Vec<String> = if let [kind] = plan.kinds[..] {
            dataset::applicable_ids(&cases, kind, &config, ctx.exec)
        } else {
            // Combos: at least one constituent applies.
            let per_kind: Vec<HashSet<String>> = plan
                .kinds
                .iter()
                .map(|k: &MutationKind| dataset::applicable_ids(&cases, *k, &config, ctx.exec).into_iter().collect())
                .collect();
            cases
                .iter()
                .filter(|c| per_kind.iter().any(|s| s.contains(&c.id)))
                .map(|c| c.id.clone())
                .collect()
        };
        rows.push(CensusRow {
            mutation: plan.tag.clone(),
            applicable: applicable.len(),
            total: cases.len(),
            ids: ids.then_some(applicable),
        });
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&rows).expect("census serializes"));
    } else {
        println!("| Mutation | Applicable | Total |\n|---|---:|---:|");
        for r in &rows {
            println!("| {} | {} | {} |", r.mutation, r.applicable, r.total);
        }
        if ids {
            for r in &rows {
                println!("{}: {}", r.mutation, r.ids.as_deref().unwrap_or_default().join(" "));
            }
        }
    }
    Ok(EXIT_OK)
}
