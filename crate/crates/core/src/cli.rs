//! The `roomweaver` command line.
//!
//! Exit status: 0 on success, 2 when the requested operation fails (model or
//! fixture errors, unusable answers, missing catalog categories), 3 for bad
//! arguments, unreadable inputs or incomplete configuration. Errors are printed
//! to stderr as one JSON object.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::assembler::{assemble, AssembleError, AssembleOptions, CameraRing, Catalog};
use crate::describer::{describe, paraphrase};
use crate::gateway::{Gateway, GatewayConfig, GatewayError, GatewayMode};
use crate::geometry::DEFAULT_TOLERANCE;
use crate::ingest::{build_store, load_all_scenes, load_split, preprocess, Filters, SplitName, StoreOptions};
use crate::layout::{Layout, LayoutDocument};
use crate::metrics::evaluate_set;
use crate::pipeline::{self, GenerateRequest, PipelineError};
use crate::prompt::{ExemplarStore, FormatOptions, PromptTemplate, Strategy};
use crate::service::{self, ApiError, AppState, ErrorBody};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Parser)]
#[command(name = "roomweaver", version, about = "Text-to-layout generation, assembly and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a layout from a room description.
    Generate(GenerateArgs),
    /// Score predicted layouts against ground truth.
    Evaluate(EvaluateArgs),
    /// Place catalog models into a layout and sample cameras.
    Assemble(AssembleArgs),
    /// Print the placement sentences for a layout.
    Describe(DescribeArgs),
    /// Filter a dataset split and build an exemplar store.
    Ingest(IngestArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Args)]
struct GatewayArgs {
    /// live, record or replay.
    #[arg(long, default_value = "replay")]
    mode: GatewayMode,
    /// Recorded responses (overrides ROOMWEAVER_FIXTURE_DIR).
    #[arg(long)]
    fixture_dir: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    room_type: String,
    #[arg(long)]
    length: f64,
    #[arg(long)]
    width: f64,
    #[arg(long)]
    height: Option<f64>,
    #[arg(long, required_unless_present = "description_file", conflicts_with = "description_file")]
    description: Option<String>,
    #[arg(long)]
    description_file: Option<PathBuf>,
    #[arg(long)]
    store: PathBuf,
    #[arg(long, default_value_t = 8)]
    k: usize,
    /// retrieval, random or pos_neg.
    #[arg(long, default_value = "retrieval")]
    strategy: Strategy,
    /// Seed for the random strategy.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    repair_attempts: u32,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Task instruction template replacing the built-in one.
    #[arg(long)]
    template: Option<PathBuf>,
    /// Written into the output document.
    #[arg(long)]
    scene_id: Option<String>,
    #[command(flatten)]
    gateway: GatewayArgs,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to `<out>` with a `.diagnostics.json` suffix.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Also save the rendered prompt.
    #[arg(long)]
    prompt_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of predicted layout documents.
    #[arg(long)]
    pred: PathBuf,
    /// Directory of ground-truth layout documents.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value = "Ours")]
    label: String,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Also write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct AssembleArgs {
    #[arg(long)]
    layout: PathBuf,
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long)]
    fit_to_box: bool,
    /// Camera poses on the ring; 0 disables.
    #[arg(long, default_value_t = 250)]
    cameras: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write a flat camera trajectory.
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

#[derive(Args)]
struct DescribeArgs {
    #[arg(long)]
    layout: PathBuf,
    /// Rewrite the sentences through the model.
    #[arg(long)]
    paraphrase: bool,
    #[command(flatten)]
    gateway: GatewayArgs,
    /// Print JSON instead of one sentence per line.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// Dataset root with train/val/test directories.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "train")]
    split: SplitName,
    #[arg(long)]
    room_type: String,
    #[arg(long)]
    out: PathBuf,
    /// 0 disables the limit.
    #[arg(long, default_value_t = 13)]
    max_objects: usize,
    /// Comma-separated allowed categories.
    #[arg(long, value_delimiter = ',')]
    whitelist: Option<Vec<String>>,
    #[arg(long)]
    allow_irregular_floors: bool,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Write the rejected scenes and their reasons as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    paraphrase: bool,
    #[command(flatten)]
    gateway: GatewayArgs,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    template: Option<PathBuf>,
    #[command(flatten)]
    gateway: GatewayArgs,
}

struct Failure {
    exit: i32,
    body: ErrorBody,
}

impl Failure {
    fn config(code: &str, message: impl ToString) -> Self {
        Self { exit: EXIT_CONFIG, body: ErrorBody::new(code, message) }
    }

    fn input(path: &Path, message: impl ToString) -> Self {
        Self::config("input", format!("{}: {}", path.display(), message.to_string()))
    }
}

impl From<GatewayError> for Failure {
    fn from(e: GatewayError) -> Self {
        Self { exit: EXIT_FAILURE, body: ApiError::from(&e).body }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let exit = match e {
            PipelineError::Generate(_) => EXIT_FAILURE,
            PipelineError::Room(_) | PipelineError::Prompt(_) => EXIT_CONFIG,
        };
        Self { exit, body: ApiError::from(&e).body }
    }
}

type CliResult = Result<(), Failure>;

fn write_file(path: &Path, contents: &str) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::config("output", format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| Failure::config("output", format!("{}: {e}", path.display())))
}

fn read_layout(path: &Path) -> Result<Layout, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(path, e))?;
    let doc: LayoutDocument = serde_json::from_str(&text).map_err(|e| Failure::input(path, e))?;
    doc.to_layout().map_err(|e| Failure::input(path, e))
}

fn gateway(args: &GatewayArgs) -> Result<Gateway, Failure> {
    let mut config = GatewayConfig::from_env(args.mode);
    if let Some(dir) = &args.fixture_dir {
        config.fixture_dir = Some(dir.clone());
    }
    Gateway::new(config).map_err(|e| Failure::config("gateway_config", e))
}

fn format_options(template: Option<&Path>) -> Result<FormatOptions, Failure> {
    let mut opts = FormatOptions::default();
    if let Some(path) = template {
        opts.template = PromptTemplate::load(path).map_err(|e| Failure::input(path, e))?;
    }
    Ok(opts)
}

fn load_store(path: &Path) -> Result<ExemplarStore, Failure> {
    ExemplarStore::load(path).map_err(|e| Failure::config("store", e))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_stem().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

fn cmd_generate(args: GenerateArgs, out: &mut dyn Write) -> CliResult {
    let description = match (&args.description, &args.description_file) {
        (Some(d), _) => d.clone(),
        (None, Some(path)) => fs::read_to_string(path).map_err(|e| Failure::input(path, e))?.trim().to_string(),
        (None, None) => unreachable!("clap requires one of the description flags"),
    };
    let store = load_store(&args.store)?;
    let format = format_options(args.template.as_deref())?;
    let request = GenerateRequest {
        room_type: args.room_type,
        length: args.length,
        width: args.width,
        height: args.height,
        description,
        k: args.k,
        strategy: args.strategy,
        seed: args.seed,
        repair_attempts: args.repair_attempts,
        tolerance: args.tolerance,
    };
    if let Some(path) = &args.prompt_out {
        let (_, _, prompt) = pipeline::prepare(&store, &request, &format)?;
        write_file(path, &prompt.to_text())?;
    }
    let gateway = gateway(&args.gateway)?;
    let generation = pipeline::generate(&store, &request, &format, &gateway)?;
    let mut doc = generation.document();
    doc.scene_id = args.scene_id;
    write_file(&args.out, &doc.to_json())?;
    let diagnostics_path = args.diagnostics.unwrap_or_else(|| with_suffix(&args.out, ".diagnostics.json"));
    let mut report = serde_json::to_string_pretty(&generation.report).expect("reports serialize");
    report.push('\n');
    write_file(&diagnostics_path, &report)?;
    let d = &generation.report.diagnostics;
    writeln!(
        out,
        "{}: {} boxes, {} violation(s), {} attempt(s)",
        args.out.display(),
        generation.layout.len(),
        d.violations.len(),
        d.attempts
    )
    .ok();
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs, out: &mut dyn Write) -> CliResult {
    let load = |dir: &Path| -> Result<Vec<(String, Layout)>, Failure> {
        let scenes = load_all_scenes(dir).map_err(|e| Failure::config("input", e))?;
        Ok(scenes.into_iter().map(|s| (s.id, s.layout)).collect())
    };
    let (preds, gts) = (load(&args.pred)?, load(&args.gt)?);
    let report = evaluate_set(&preds, &gts, args.tolerance).map_err(|e| Failure::config("scene_id_mismatch", e))?;
    write!(out, "{}", report.to_table(&args.label)).ok();
    if let Some(path) = &args.json {
        write_file(path, &report.to_json())?;
    }
    Ok(())
}

fn cmd_assemble(args: AssembleArgs, out: &mut dyn Write) -> CliResult {
    let layout = read_layout(&args.layout)?;
    let catalog = Catalog::load(&args.catalog).map_err(|e| Failure::config("catalog", e))?;
    let opts = AssembleOptions {
        fit_to_box: args.fit_to_box,
        cameras: (args.cameras > 0).then(|| CameraRing { count: args.cameras, ..CameraRing::default() }),
    };
    let scene = assemble(&layout, &catalog, &opts).map_err(|e| {
        let exit = if matches!(e, AssembleError::CategoryNotInCatalog { .. }) { EXIT_FAILURE } else { EXIT_CONFIG };
        Failure { exit, body: ApiError::from(&e).body }
    })?;
    write_file(&args.out, &scene.to_json())?;
    if let Some(path) = &args.trajectory {
        write_file(path, &scene.to_trajectory())?;
    }
    writeln!(out, "{}: {} instances, {} cameras", args.out.display(), scene.instances.len(), scene.cameras.len()).ok();
    Ok(())
}

fn cmd_describe(args: DescribeArgs, out: &mut dyn Write) -> CliResult {
    let layout = read_layout(&args.layout)?;
    let mut description = describe(&layout);
    if args.paraphrase {
        description = paraphrase(&description, Some(&gateway(&args.gateway)?))?;
    }
    let text = if args.json {
        let mut s = serde_json::to_string_pretty(&description).expect("descriptions serialize");
        s.push('\n');
        s
    } else {
        description.sentences.iter().map(|s| format!("{s}\n")).collect()
    };
    match &args.out {
        Some(path) => write_file(path, &text),
        None => {
            write!(out, "{text}").ok();
            Ok(())
        }
    }
}

fn cmd_ingest(args: IngestArgs, out: &mut dyn Write) -> CliResult {
    let split = load_split(&args.dataset, args.split, &args.room_type).map_err(|e| Failure::config("input", e))?;
    let filters = Filters {
        rectangular_only: !args.allow_irregular_floors,
        max_objects: (args.max_objects > 0).then_some(args.max_objects),
        whitelist: args.whitelist.map(|w| w.iter().map(|c| c.trim().to_lowercase()).collect()),
        tolerance: args.tolerance,
    };
    let total = split.scenes.len();
    let (kept, rejected) = preprocess(split.scenes, &filters);
    let gw = if args.paraphrase { Some(gateway(&args.gateway)?) } else { None };
    let opts = StoreOptions { tolerance: args.tolerance, paraphrase: gw.as_ref() };
    let store = build_store(&kept, &rejected, &opts).map_err(|e| match e {
        crate::ingest::IngestError::Gateway(g) => Failure::from(g),
        other => Failure { exit: EXIT_FAILURE, body: ErrorBody::new("store", other) },
    })?;
    store.save(&args.out).map_err(|e| Failure::config("output", e))?;
    if let Some(path) = &args.report {
        let rows: Vec<_> = rejected
            .iter()
            .map(|r| json!({ "scene_id": r.scene.id, "negative": r.is_negative_candidate(), "reasons": r.reasons }))
            .collect();
        let mut text = serde_json::to_string_pretty(&rows).expect("reports serialize");
        text.push('\n');
        write_file(path, &text)?;
    }
    let negatives = store.count(crate::prompt::Polarity::Negative);
    writeln!(
        out,
        "{} {}: {total} scenes, kept {}, rejected {} ({negatives} negative exemplars) -> {}",
        args.split,
        args.room_type,
        kept.len(),
        rejected.len(),
        args.out.display()
    )
    .ok();
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> CliResult {
    let store = load_store(&args.store)?;
    let gateway = gateway(&args.gateway)?;
    let mut state = AppState::new(store, gateway);
    state.format = format_options(args.template.as_deref())?;
    if let Some(path) = &args.catalog {
        state.catalog = Some(Catalog::load(path).map_err(|e| Failure::config("catalog", e))?);
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::config("runtime", e))?;
    runtime
        .block_on(service::serve(args.bind, Arc::new(state)))
        .map_err(|e| Failure::config("bind", format!("{}: {e}", args.bind)))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let informational = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            if informational {
                write!(out, "{e}").ok();
                return EXIT_OK;
            }
            write!(err, "{}", e.render()).ok();
            return EXIT_CONFIG;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Assemble(a) => cmd_assemble(a, out),
        Command::Describe(a) => cmd_describe(a, out),
        Command::Ingest(a) => cmd_ingest(a, out),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            writeln!(err, "{}", json!({ "error": f.body })).ok();
            f.exit
        }
    }
}
