//! smoothread: chunk-wise inference strategies for bounded-memory
//! language models, with simulated backends, benchmark generation,
//! dataset construction, evaluation and cost analysis.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use smoothread_cli::{artifacts, presets, sweep};
use smoothread_core::backends::{
    Backend, CostConfig, RemoteBackend, RemoteBackendConfig, SimBackend, TaskProgram,
};
use smoothread_core::benchgen::{
    gen_niah, gen_passage_count, load_jsonl, EvalItem, FieldMap, NiahSpec, PassageCountSpec,
    Placement,
};
use smoothread_core::chunker::{split_hierarchical, ChunkingConfig};
use smoothread_core::cost_model::{self, CostParams};
use smoothread_core::dataset_builder::{
    build_dataset, write_outputs, BuildOptions, CleanThresholds, RawItem, RemoteTeacher,
    RuleTeacher, SftFormat, Teacher,
};
use smoothread_core::engine::{
    plan_chunks, prompts, run_one_step, run_smooth, run_unsmooth, InferenceTrace, RunOptions,
    Strategy,
};
use smoothread_core::metrics::{score_item, score_suite};

#[derive(Parser)]
#[command(name = "smoothread", version, about)]
struct Cli {
    /// Seed for all randomized operations; echoed in every artifact.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn is_on(self) -> bool {
        matches!(self, Switch::On)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendChoice {
    SimSwa,
    SimAttn,
    Remote,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    OneStep,
    Unsmooth,
    Smooth,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::OneStep => Strategy::OneStep,
            StrategyArg::Unsmooth => Strategy::Unsmooth,
            StrategyArg::Smooth => Strategy::Smooth,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Split text into size-bounded chunks.
    Chunk(ChunkArgs),
    /// Generate synthetic evaluation items.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run one strategy on one item and write the trace.
    Run(RunArgs),
    /// Run a window/chunk grid over an item suite.
    Sweep(SweepArgs),
    /// Dataset construction.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Convert external JSONL corpora into the item format.
    Import(ImportArgs),
    /// Score answers against items.
    Eval(EvalArgs),
    /// Analytic cost model: time curves and crossover.
    Cost(CostArgs),
    /// Aggregate run traces into a report.
    Report(ReportArgs),
}

#[derive(Args)]
struct ChunkArgs {
    /// Input file; '-' reads stdin.
    #[arg(long, default_value = "-")]
    input: String,
    #[arg(long)]
    max_tokens: u64,
    /// JSON array overriding the delimiter priority list.
    #[arg(long)]
    delimiters: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Hidden key/value facts in filler text.
    Niah(GenNiahArgs),
    /// Shuffled passages with duplicates; the answer is the unique count.
    PassageCount(GenPassageCountArgs),
}

#[derive(Args)]
struct GenNiahArgs {
    /// Target context length in estimated tokens.
    #[arg(long)]
    tokens: u64,
    #[arg(long, default_value_t = 1)]
    needles: usize,
    /// Comma-separated token offsets from the end, one per needle.
    #[arg(long)]
    offset_from_end: Option<String>,
    /// Filler corpus file; bundled essays when omitted.
    #[arg(long)]
    haystack: Option<String>,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Output JSONL; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenPassageCountArgs {
    #[arg(long)]
    unique: usize,
    #[arg(long, default_value_t = 0)]
    duplicates: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "sim-swa")]
    backend: BackendChoice,
    /// Window size in tokens for the sliding-window simulator.
    #[arg(long, default_value_t = 4096)]
    window: u64,
    /// Per-step chunk size in tokens.
    #[arg(long)]
    chunk_tokens: Option<u64>,
    /// Named preset supplying the chunk size.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_enum, default_value = "on")]
    early_stop: Switch,
    /// Item JSON file (a single EvalItem object).
    #[arg(long)]
    input: PathBuf,
    /// Trace JSON output path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Remote model name (remote backend only).
    #[arg(long, default_value = "default-model")]
    model: String,
}

#[derive(Args)]
struct SweepArgs {
    /// Item suite JSONL.
    #[arg(long)]
    suite: PathBuf,
    /// Comma-separated window sizes.
    #[arg(long)]
    windows: Option<String>,
    /// Comma-separated chunk sizes.
    #[arg(long)]
    chunks: String,
    /// Fixed chunk:window ratio such as 1:2 (mutually exclusive with
    /// --windows).
    #[arg(long)]
    ratio: Option<String>,
    #[arg(long, value_enum, default_value = "smooth")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "on")]
    early_stop: Switch,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Build SFT transcripts from raw items.
    Build(DatasetBuildArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TeacherChoice {
    Rule,
    Remote,
}

#[derive(Args)]
struct DatasetBuildArgs {
    /// Raw items JSONL with query/answer/context/task fields.
    #[arg(long)]
    raw: PathBuf,
    #[arg(long, value_enum, default_value = "rule")]
    teacher: TeacherChoice,
    /// Comma-separated subset of sr,ur,os.
    #[arg(long, default_value = "sr,ur,os")]
    formats: String,
    #[arg(long, value_enum, default_value = "on")]
    early_stop: Switch,
    /// Uniform keep threshold overriding the per-metric defaults.
    #[arg(long)]
    clean_threshold: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "default-model")]
    model: String,
}

#[derive(Args)]
struct ImportArgs {
    /// External JSONL file, one object per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "context")]
    context_field: String,
    #[arg(long, default_value = "input")]
    query_field: String,
    #[arg(long, default_value = "answers")]
    gold_field: String,
    /// Field holding a task name; the default task applies otherwise.
    #[arg(long)]
    task_field: Option<String>,
    /// Task assigned to lines without a task field.
    #[arg(long, default_value = "question_answering")]
    default_task: String,
    /// Output items JSONL; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    items: PathBuf,
    /// Answers JSONL, one {"answer": ...} per item, in item order.
    #[arg(long)]
    answers: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CostArgs {
    /// CostParams JSON file; flags below override its fields.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    p_r: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    quad_a: Option<f64>,
    #[arg(long)]
    quad_b: Option<f64>,
    /// Context lengths for the time table.
    #[arg(long, default_value = "8192,16384,32768,65536,131072,262144")]
    lengths: String,
    /// Output file for the table; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional SVG chart of both curves.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Trace JSON files.
    #[arg(long, required = true, num_args = 1..)]
    traces: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Stable exit codes per error class: 2 config/usage, 3 io, 4 backend,
/// 5 protocol, 1 anything else.
fn exit_code_for(e: &anyhow::Error) -> u8 {
    use smoothread_core::backends::BackendError;
    use smoothread_core::engine::EngineError;
    for cause in e.chain() {
        if cause.is::<std::io::Error>() {
            return 3;
        }
        if cause.is::<BackendError>() {
            return 4;
        }
        if let Some(engine) = cause.downcast_ref::<EngineError>() {
            return match engine {
                EngineError::Protocol { .. } => 5,
                EngineError::Backend(_) => 4,
                _ => 2,
            };
        }
        if cause.is::<sweep::SweepError>() || cause.is::<presets::UnknownPreset>() {
            return 2;
        }
    }
    1
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Chunk(args) => cmd_chunk(args),
        Command::Gen(args) => cmd_gen(args, cli.seed),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args, cli.seed),
        Command::Dataset(DatasetCommand::Build(args)) => cmd_dataset_build(args, cli.seed),
        Command::Import(args) => cmd_import(args),
        Command::Eval(args) => cmd_eval(args, cli.seed),
        Command::Cost(args) => cmd_cost(args),
        Command::Report(args) => cmd_report(args, cli.seed),
    }
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            artifacts::write_text(path, text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_u64_list(text: &str) -> Result<Vec<u64>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<u64>().context("invalid number list"))
        .collect()
}

fn cmd_chunk(args: ChunkArgs) -> Result<()> {
    let text = read_input(&args.input)?;
    let mut config = ChunkingConfig::new(args.max_tokens);
    if let Some(json) = &args.delimiters {
        config.delimiters =
            serde_json::from_str(json).context("--delimiters must be a JSON string array")?;
    }
    let chunks = split_hierarchical(&text, &config)?;
    let mut out = serde_json::to_string_pretty(&chunks)?;
    out.push('\n');
    write_or_print(&args.out, &out)
}

fn items_to_jsonl(items: &[EvalItem]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

fn cmd_gen(cmd: GenCommand, seed: u64) -> Result<()> {
    match cmd {
        GenCommand::Niah(args) => {
            let placement = match &args.offset_from_end {
                Some(csv) => Placement::OffsetFromEnd(parse_u64_list(csv)?),
                None => Placement::UniformRandom,
            };
            let items: Vec<EvalItem> = (0..args.count)
                .map(|i| {
                    gen_niah(&NiahSpec {
                        context_tokens: args.tokens,
                        num_needles: args.needles,
                        placement: placement.clone(),
                        haystack_path: args.haystack.clone(),
                        seed: seed.wrapping_add(i as u64),
                    })
                    .map_err(anyhow::Error::from)
                })
                .collect::<Result<_>>()?;
            write_or_print(&args.out, &items_to_jsonl(&items)?)
        }
        GenCommand::PassageCount(args) => {
            let items: Vec<EvalItem> = (0..args.count)
                .map(|i| {
                    gen_passage_count(&PassageCountSpec {
                        num_unique: args.unique,
                        duplicate_copies: args.duplicates,
                        seed: seed.wrapping_add(i as u64),
                    })
                    .map_err(anyhow::Error::from)
                })
                .collect::<Result<_>>()?;
            write_or_print(&args.out, &items_to_jsonl(&items)?)
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let item: EvalItem = serde_json::from_str(&std::fs::read_to_string(&args.input)?)
        .context("reading item JSON")?;
    let chunk_tokens = match (&args.preset, args.chunk_tokens) {
        (Some(name), None) => presets::lookup(name)?.chunk_tokens,
        (None, Some(c)) => c,
        (None, None) => 1024,
        (Some(_), Some(_)) => bail!("--preset and --chunk-tokens are mutually exclusive"),
    };
    let opts = RunOptions {
        early_stop: args.early_stop.is_on(),
        ..RunOptions::default()
    };
    let strategy: Strategy = args.strategy.into();

    let mut backend: Box<dyn Backend> = match args.backend {
        BackendChoice::SimSwa => Box::new(SimBackend::sliding_window(
            args.window,
            TaskProgram::for_task(item.task)?,
            CostConfig::default(),
        )),
        BackendChoice::SimAttn => Box::new(SimBackend::unbounded(
            TaskProgram::for_task(item.task)?,
            CostConfig::default(),
        )),
        BackendChoice::Remote => {
            let config = RemoteBackendConfig::from_env(&args.model)
                .context("remote backend needs ENDPOINT_URL (and optionally API_KEY) set")?;
            Box::new(RemoteBackend::new(config, prompts::REMOTE_SYSTEM_PROMPT))
        }
    };

    let trace = match strategy {
        Strategy::OneStep => run_one_step(backend.as_mut(), &item.context, &item.query)?,
        Strategy::Unsmooth => {
            let chunks = plan_chunks(&item.context, chunk_tokens)?;
            run_unsmooth(backend.as_mut(), &chunks, &item.query, &opts)?
        }
        Strategy::Smooth => {
            let chunks = plan_chunks(&item.context, chunk_tokens)?;
            run_smooth(backend.as_mut(), &chunks, &item.query, &opts)?
        }
    };

    let score = score_item(&item, &trace.answer);
    println!(
        "strategy={strategy} answer={:?} score={:.3} steps={} peak_mr={} time={:.6}s",
        trace.answer,
        score.value,
        trace.steps.len(),
        trace.peak_mr_tokens,
        trace.virtual_time_seconds
    );
    if let Some(path) = &args.trace {
        artifacts::write_json(path, &trace)?;
    }
    Ok(())
}

fn load_suite(path: &Path) -> Result<Vec<EvalItem>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item: EvalItem =
            serde_json::from_str(line).with_context(|| format!("suite line {}", i + 1))?;
        items.push(item);
    }
    if items.is_empty() {
        bail!("suite {} holds no items", path.display());
    }
    Ok(items)
}

fn cmd_sweep(args: SweepArgs, seed: u64) -> Result<()> {
    let suite = load_suite(&args.suite)?;
    let ratio = match &args.ratio {
        Some(text) => {
            let (a, b) = text
                .split_once(':')
                .context("--ratio must look like 1:2")?;
            Some((a.trim().parse::<u64>()?, b.trim().parse::<u64>()?))
        }
        None => None,
    };
    let cfg = sweep::SweepConfig {
        windows: match &args.windows {
            Some(csv) => parse_u64_list(csv)?,
            None => Vec::new(),
        },
        chunks: parse_u64_list(&args.chunks)?,
        ratio,
        strategy: args.strategy.into(),
        early_stop: args.early_stop.is_on(),
        seed,
        cost: CostConfig::default(),
    };
    let outcome = sweep::run_sweep(&cfg, &suite)?;
    artifacts::write_json(&args.out.join("sweep.json"), &outcome)?;
    artifacts::write_text(&args.out.join("sweep.csv"), &artifacts::sweep_csv(&outcome))?;
    for cell in &outcome.cells {
        println!(
            "W={:<6} C={:<6} accuracy={:.3} time={:.4}s",
            cell.window_tokens, cell.chunk_tokens, cell.accuracy, cell.virtual_time_seconds
        );
    }
    Ok(())
}

fn cmd_dataset_build(args: DatasetBuildArgs, seed: u64) -> Result<()> {
    let text = std::fs::read_to_string(&args.raw)?;
    let mut raws = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawItem =
            serde_json::from_str(line).with_context(|| format!("raw line {}", i + 1))?;
        raws.push(raw);
    }

    let mut formats = Vec::new();
    for name in args.formats.split(',') {
        formats.push(match name.trim() {
            "sr" => SftFormat::Sr,
            "ur" => SftFormat::Ur,
            "os" => SftFormat::Os,
            other => bail!("unknown format '{other}' (expected sr, ur, os)"),
        });
    }
    let opts = BuildOptions {
        formats,
        early_stop: args.early_stop.is_on(),
        thresholds: match args.clean_threshold {
            Some(t) => CleanThresholds::uniform(t),
            None => CleanThresholds::default(),
        },
        seed,
        ..BuildOptions::default()
    };

    let mut rule = RuleTeacher;
    let mut remote;
    let teacher: &mut dyn Teacher = match args.teacher {
        TeacherChoice::Rule => &mut rule,
        TeacherChoice::Remote => {
            let config = RemoteBackendConfig::from_env(&args.model)
                .context("remote teacher needs ENDPOINT_URL (and optionally API_KEY) set")?;
            remote = RemoteTeacher::new(config);
            &mut remote
        }
    };

    let output = build_dataset(&raws, teacher, &opts)?;
    write_outputs(&args.out, &output)?;
    println!(
        "built {} items: kept {}, dropped {} -> {}",
        output.report.total_items,
        output.report.kept,
        output.report.dropped,
        args.out.display()
    );
    Ok(())
}

fn cmd_import(args: ImportArgs) -> Result<()> {
    let map = FieldMap {
        context: args.context_field.clone(),
        query: args.query_field.clone(),
        gold: args.gold_field.clone(),
        task_field: args.task_field.clone(),
        default_task: serde_json::from_value(serde_json::Value::String(args.default_task.clone()))
            .context("unknown default task name")?,
    };
    let outcome = load_jsonl(&args.input, &map)?;
    for err in &outcome.errors {
        eprintln!("line {}: {}", err.line, err.message);
    }
    write_or_print(&args.out, &items_to_jsonl(&outcome.items)?)?;
    eprintln!(
        "imported {} items, {} malformed lines",
        outcome.items.len(),
        outcome.errors.len()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs, seed: u64) -> Result<()> {
    let items = load_suite(&args.items)?;
    let answers_text = std::fs::read_to_string(&args.answers)?;
    let mut answers = Vec::new();
    for (i, line) in answers_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(line).with_context(|| format!("answers line {}", i + 1))?;
        let answer = value
            .get("answer")
            .and_then(|v| v.as_str())
            .with_context(|| format!("answers line {} lacks an \"answer\" field", i + 1))?
            .to_string();
        answers.push(answer);
    }
    if answers.len() != items.len() {
        bail!("{} items but {} answers", items.len(), answers.len());
    }

    #[derive(Serialize)]
    struct PerItem {
        index: usize,
        metric: smoothread_core::metrics::MetricKind,
        score: f64,
    }
    let mut rows = Vec::new();
    let mut scores = Vec::new();
    let mut csv = String::from("index,metric,score\n");
    for (i, (item, answer)) in items.iter().zip(&answers).enumerate() {
        let result = score_item(item, answer);
        csv.push_str(&format!(
            "{i},{},{:.6}\n",
            serde_json::to_value(result.name)?.as_str().unwrap_or("?"),
            result.value
        ));
        scores.push(result.value);
        rows.push(PerItem {
            index: i,
            metric: result.name,
            score: result.value,
        });
    }
    let aggregate = score_suite(&scores).map_err(anyhow::Error::from)?;

    #[derive(Serialize)]
    struct EvalOut {
        seed: u64,
        items: usize,
        aggregate_score: f64,
        per_item: Vec<PerItem>,
    }
    artifacts::write_json(
        &args.out.join("scores.json"),
        &EvalOut {
            seed,
            items: rows.len(),
            aggregate_score: aggregate,
            per_item: rows,
        },
    )?;
    artifacts::write_text(&args.out.join("scores.csv"), &csv)?;
    println!("aggregate score: {aggregate:.2}");
    Ok(())
}

fn cmd_cost(args: CostArgs) -> Result<()> {
    let mut params = match &args.params {
        Some(path) => serde_json::from_str::<CostParams>(&std::fs::read_to_string(path)?)?,
        None => CostParams {
            p_r: 2.0e-5,
            beta: 4.0,
            g: 64.0,
            c: 1024.0,
            l: 32_768.0,
            quad_a: 2.0e-9,
            quad_b: 1.0e-5,
        },
    };
    if let Some(v) = args.p_r {
        params.p_r = v;
    }
    if let Some(v) = args.beta {
        params.beta = v;
    }
    if let Some(v) = args.g {
        params.g = v;
    }
    if let Some(v) = args.c {
        params.c = v;
    }
    if let Some(v) = args.l {
        params.l = v;
    }
    if let Some(v) = args.quad_a {
        params.quad_a = v;
    }
    if let Some(v) = args.quad_b {
        params.quad_b = v;
    }

    let lengths = parse_u64_list(&args.lengths)?;
    let mut table = String::from("l_tokens,t_recurrent_sr_seconds,t_self_attn_os_seconds\n");
    let mut sr_curve = Vec::new();
    let mut os_curve = Vec::new();
    for &l in &lengths {
        let mut p = params;
        p.l = l as f64;
        let sr = cost_model::time_recurrent_sr(&p)?;
        let os = cost_model::time_self_attn_os(&p)?;
        table.push_str(&format!("{l},{sr:.9},{os:.9}\n"));
        sr_curve.push((l as f64, sr));
        os_curve.push((l as f64, os));
    }
    let crossover = cost_model::crossover_length(&params)?;
    table.push_str(&match crossover {
        Some(l) => format!("# crossover_tokens={l:.1}\n"),
        None => "# crossover_tokens=none\n".to_string(),
    });
    write_or_print(&args.out, &table)?;

    if let Some(path) = &args.svg {
        let svg = artifacts::line_chart_svg(
            "inference time vs context length",
            &[
                ("recurrent chunked".to_string(), sr_curve),
                ("self-attention one-step".to_string(), os_curve),
            ],
        );
        artifacts::write_text(path, &svg)?;
    }
    Ok(())
}

fn cmd_report(args: ReportArgs, seed: u64) -> Result<()> {
    let mut traces = Vec::new();
    for path in &args.traces {
        let trace: InferenceTrace = serde_json::from_str(&std::fs::read_to_string(path)?)
            .with_context(|| format!("reading trace {}", path.display()))?;
        traces.push(trace);
    }
    let report = artifacts::aggregate_traces(&traces, seed)?;
    artifacts::write_json(&args.out.join("report.json"), &report)?;
    println!(
        "{} runs, {:.1} mean chunks read, {:.4}s total virtual time",
        report.runs, report.mean_chunks_read, report.total_virtual_time_seconds
    );
    Ok(())
}
