//! Argument parsing and command dispatch.
//!
//! Precedence is uniform: command-line flags beat config-file values, which
//! beat built-in defaults. All randomness downstream of a command derives
//! from one root seed, split per component with stable labels, so a fixed
//! `--seed` makes entire runs reproducible byte for byte.

use std::path::PathBuf;

use chimera_core::backend::MaskBackend;
use chimera_core::eval::{evaluate_kb, evaluate_lm, extract_pairs, PrecisionReport};
use chimera_core::kb::{FixtureKB, KnowledgeBase, RelationAllowlist, DEFAULT_RELATIONS};
use chimera_core::reasoning::{ChainKind, Reasoner};
use chimera_core::template::{PromptTemplate, TemplateRegistry};
use clap::{Args, Parser, Subcommand};

use crate::backends::build_backend;
use crate::cache::PromptCache;
use crate::conceptnet::LiveConceptNet;
use crate::config::{BackendConfig, KbMode, PipelineConfig};
use crate::errors::CliError;
use crate::render;
use crate::report;

#[derive(Debug, Parser)]
#[command(
    name = "chimera",
    version,
    about = "Concept blending with language-model chains and latent-space visualization"
)]
pub struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML pipeline configuration file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Root random seed; component seeds are split from it
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Backend name from the config's [backends] table
    #[arg(long, global = true, value_name = "NAME")]
    backend: Option<String>,
    /// Register a prompt-table JSON file as backend "table" and select it
    #[arg(long, global = true, value_name = "PATH")]
    table_backend: Option<PathBuf>,
    /// Fail instead of touching the network
    #[arg(long, global = true)]
    offline: bool,
    /// Prompt cache directory
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Produce ranked blend descriptions for a concept
    Describe(DescribeArgs),
    /// Score systems on a simile dataset and write comparison reports
    Eval(EvalArgs),
    /// Optimize a latent vector against a text prompt and render it
    Visualize(VisualizeArgs),
    /// Inspect or clear the prompt cache
    Cache(CacheArgs),
}

#[derive(Debug, Args)]
struct DescribeArgs {
    /// The input concept (a single word)
    concept: String,
    /// Chain to run: "simile" or "pivot"
    #[arg(long)]
    chain: Option<String>,
    /// Pivot attribute, e.g. "shape" (pivot chain only)
    #[arg(long)]
    attribute: Option<String>,
    /// Related concepts to explore
    #[arg(short)]
    k: Option<usize>,
    /// Properties per concept
    #[arg(short)]
    m: Option<usize>,
    /// Also write the JSON result to this file
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Tab-separated dataset: literal sentence, simile rewrite
    dataset: PathBuf,
    /// Systems to score, comma separated: lm, kb
    #[arg(long, value_delimiter = ',', default_values_t = vec!["lm".to_string(), "kb".to_string()])]
    systems: Vec<String>,
    /// Candidates requested per item
    #[arg(long, default_value_t = 1000)]
    request_n: usize,
    /// Skip the first dataset row
    #[arg(long)]
    has_header: bool,
    /// Evaluate only the first N extracted pairs
    #[arg(long, value_name = "N")]
    limit: Option<usize>,
    /// Directory for reports (created if missing)
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Knowledge-base mode: "fixture" or "live"
    #[arg(long)]
    kb_mode: Option<String>,
    /// Fixture KB JSON path (implies fixture mode)
    #[arg(long, value_name = "PATH")]
    kb_fixture: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VisualizeArgs {
    /// Text the image should match, e.g. a blend surface form
    text: String,
    /// Generator/scorer adapter pair
    #[arg(long)]
    pair: Option<String>,
    /// Directory for the PNG and trace (created if missing)
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Gradient-ascent step size
    #[arg(long)]
    step_size: Option<f64>,
    /// Iteration budget
    #[arg(long)]
    max_iters: Option<usize>,
    /// Early-stop tolerance on |ΔJ| (0 disables)
    #[arg(long)]
    stop_tol: Option<f64>,
    /// Gaussian prior weight λ
    #[arg(long)]
    prior_weight: Option<f64>,
}

#[derive(Debug, Args)]
struct CacheArgs {
    #[command(subcommand)]
    action: CacheAction,
}

#[derive(Debug, Subcommand)]
enum CacheAction {
    /// Entry count and total size
    Stats,
    /// Remove every cached entry (idempotent)
    Purge,
}

/// Parse argv, run, print. Errors go to stderr as a JSON envelope; the
/// return value is the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(stdout) => {
            // A consumer that stops reading (`chimera ... | head`) closes the
            // pipe; that is not our error, so end quietly instead of
            // panicking like the print! macros would.
            use std::io::Write;
            match std::io::stdout().write_all(stdout.as_bytes()) {
                Ok(()) => 0,
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
                Err(e) => {
                    eprintln!("{}", CliError::internal(format!("stdout: {e}")).to_json());
                    1
                }
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

/// Everything between argv and process exit, kept pure-ish for testing:
/// returns what should be printed to stdout.
pub fn dispatch(cli: Cli) -> Result<String, CliError> {
    let mut config = match &cli.global.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    // flags win over config values
    if let Some(seed) = cli.global.seed {
        config.seed = seed;
    }
    if let Some(dir) = &cli.global.cache_dir {
        config.cache_dir = dir.clone();
    }
    if let Some(path) = &cli.global.table_backend {
        config.backends.insert(
            "table".to_string(),
            BackendConfig::Table { path: path.clone() },
        );
    }
    let backend_selection = cli.global.backend.clone().or_else(|| {
        cli.global
            .table_backend
            .as_ref()
            .map(|_| "table".to_string())
    });

    match cli.command {
        Command::Describe(args) => cmd_describe(&config, backend_selection.as_deref(), &args),
        Command::Eval(args) => cmd_eval(
            &config,
            backend_selection.as_deref(),
            cli.global.offline,
            &args,
        ),
        Command::Visualize(args) => cmd_visualize(&config, &args),
        Command::Cache(args) => cmd_cache(&config, &args.action),
    }
}

fn load_templates(config: &PipelineConfig) -> Result<TemplateRegistry, CliError> {
    match &config.templates_path {
        None => Ok(TemplateRegistry::builtin()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::input(format!("cannot read templates {}: {e}", path.display()))
            })?;
            let entries: Vec<PromptTemplate> = serde_json::from_str(&text).map_err(|e| {
                CliError::input(format!("invalid templates {}: {e}", path.display()))
            })?;
            TemplateRegistry::from_entries(entries).map_err(CliError::from)
        }
    }
}

fn open_backend(
    config: &PipelineConfig,
    selection: Option<&str>,
) -> Result<impl MaskBackend, CliError> {
    let (name, backend_config) = config.select_backend(selection)?;
    let cache = PromptCache::open(&config.cache_dir)?;
    build_backend(name, backend_config, cache)
}

fn chain_from(config: &PipelineConfig, args: &DescribeArgs) -> Result<ChainKind, CliError> {
    let kind = args.chain.as_deref().unwrap_or(&config.chain.kind);
    let attribute = args.attribute.as_deref().unwrap_or(&config.chain.attribute);
    match kind {
        "simile" => Ok(ChainKind::Simile),
        "pivot" => Ok(ChainKind::pivot(attribute)),
        other => Err(CliError::input(format!(
            "unknown chain {other:?}: expected \"simile\" or \"pivot\""
        ))),
    }
}

fn cmd_describe(
    config: &PipelineConfig,
    selection: Option<&str>,
    args: &DescribeArgs,
) -> Result<String, CliError> {
    let backend = open_backend(config, selection)?;
    let templates = load_templates(config)?;
    let chain = chain_from(config, args)?;
    let k = args.k.unwrap_or(config.chain.k);
    let m = args.m.unwrap_or(config.chain.m);

    let reasoner = Reasoner::new(&backend, &templates);
    let blends = reasoner.blend(&args.concept, &chain, k, m)?;
    let mut text = serde_json::to_string_pretty(&blends)
        .map_err(|e| CliError::internal(format!("serialization failed: {e}")))?;
    text.push('\n');

    if let Some(out) = &args.out {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(out, &text)?;
    }
    Ok(text)
}

fn kb_system(
    config: &PipelineConfig,
    offline: bool,
    args: &EvalArgs,
) -> Result<(String, Box<dyn KnowledgeBase>), CliError> {
    let mode = match (&args.kb_fixture, args.kb_mode.as_deref()) {
        (Some(_), None) => KbMode::Fixture,
        (_, Some("fixture")) => KbMode::Fixture,
        (_, Some("live")) => KbMode::Live,
        (_, Some(other)) => {
            return Err(CliError::input(format!(
                "unknown kb mode {other:?}: expected \"fixture\" or \"live\""
            )))
        }
        (None, None) => config.kb.mode,
    };
    match mode {
        KbMode::Fixture => {
            let path = args
                .kb_fixture
                .as_ref()
                .or(config.kb.fixture_path.as_ref())
                .ok_or_else(|| {
                    CliError::input("fixture kb selected but no fixture path is configured")
                })?;
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::input(format!("cannot read kb fixture {}: {e}", path.display()))
            })?;
            let kb: FixtureKB = serde_json::from_str(&text).map_err(|e| {
                CliError::input(format!("invalid kb fixture {}: {e}", path.display()))
            })?;
            Ok(("fixture-kb".to_string(), Box::new(kb)))
        }
        KbMode::Live => {
            if offline {
                return Err(CliError::input(
                    "live kb mode needs the network; drop --offline or use --kb-fixture",
                ));
            }
            let kb = LiveConceptNet::new(
                config.kb.base_url.clone(),
                config.kb.rate_limit_ms,
                config.cache_dir.join("kb"),
            )?;
            Ok(("conceptnet-live".to_string(), Box::new(kb)))
        }
    }
}

fn cmd_eval(
    config: &PipelineConfig,
    selection: Option<&str>,
    offline: bool,
    args: &EvalArgs,
) -> Result<String, CliError> {
    if args.systems.is_empty() {
        return Err(CliError::input("no systems requested"));
    }
    let loaded = crate::dataset::load_simile_tsv(&args.dataset, args.has_header, None)?;
    let mut extraction = extract_pairs(&loaded.pairs);
    if let Some(limit) = args.limit {
        extraction.pairs.truncate(limit);
    }
    if extraction.pairs.is_empty() {
        return Err(CliError::input(format!(
            "no usable pairs in {}: {} rows loaded, {} skipped at extraction",
            args.dataset.display(),
            loaded.pairs.len(),
            extraction.skipped
        )));
    }

    let allowlist = match &config.kb.relations {
        Some(relations) => RelationAllowlist::new(relations.iter().map(String::as_str)),
        None => RelationAllowlist::new(DEFAULT_RELATIONS.iter().copied()),
    };

    let mut reports: Vec<PrecisionReport> = Vec::new();
    for system in &args.systems {
        match system.as_str() {
            "lm" => {
                let backend = open_backend(config, selection)?;
                let templates = load_templates(config)?;
                reports.push(evaluate_lm(
                    &backend,
                    &templates,
                    &extraction.pairs,
                    args.request_n,
                )?);
            }
            "kb" => {
                let (id, kb) = kb_system(config, offline, args)?;
                reports.push(evaluate_kb(
                    kb.as_ref(),
                    &id,
                    &allowlist,
                    &extraction.pairs,
                    args.request_n,
                )?);
            }
            other => {
                return Err(CliError::input(format!(
                    "unknown system {other:?}: expected \"lm\" or \"kb\""
                )))
            }
        }
    }

    let out_dir = args.out_dir.as_ref().unwrap_or(&config.output_dir);
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for report in &reports {
        written.push(report::write_report_json(out_dir, report)?);
    }
    written.push(report::write_comparison_csv(out_dir, &reports)?);

    let mut text = String::new();
    text.push_str(&format!(
        "{} pairs evaluated ({} rows skipped at extraction)\n\n",
        extraction.pairs.len(),
        extraction.skipped
    ));
    text.push_str(&report::comparison_text(&reports));
    text.push('\n');
    for path in &written {
        text.push_str(&format!("wrote {}\n", path.display()));
    }
    Ok(text)
}

fn cmd_visualize(config: &PipelineConfig, args: &VisualizeArgs) -> Result<String, CliError> {
    let mut optimizer = config.generation.optimizer.clone();
    // flags win over config values
    if args.step_size.is_some() {
        optimizer.step_size = args.step_size;
    }
    if args.max_iters.is_some() {
        optimizer.max_iters = args.max_iters;
    }
    if args.stop_tol.is_some() {
        optimizer.stop_tol = args.stop_tol;
    }
    if args.prior_weight.is_some() {
        optimizer.prior_weight = args.prior_weight;
    }
    let cfg = optimizer.resolve(config.seed);
    let pair = args.pair.as_deref().unwrap_or(&config.generation.pair);
    let out_dir = args.out_dir.as_ref().unwrap_or(&config.output_dir);

    let outcome = render::visualize(pair, &args.text, &cfg, out_dir)?;
    let mut text = serde_json::to_string_pretty(&outcome)
        .map_err(|e| CliError::internal(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn cmd_cache(config: &PipelineConfig, action: &CacheAction) -> Result<String, CliError> {
    let cache = PromptCache::open(&config.cache_dir)?;
    let payload = match action {
        CacheAction::Stats => {
            let stats = cache.stats()?;
            serde_json::json!({
                "dir": config.cache_dir.display().to_string(),
                "entries": stats.entries,
                "bytes": stats.bytes,
            })
        }
        CacheAction::Purge => {
            let removed = cache.purge()?;
            serde_json::json!({
                "dir": config.cache_dir.display().to_string(),
                "removed": removed,
            })
        }
    };
    let mut text = serde_json::to_string_pretty(&payload)
        .map_err(|e| CliError::internal(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Test-only entry: parse the given argv (no program name) and dispatch.
pub fn run_from<I, T>(argv: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let mut full: Vec<std::ffi::OsString> = vec!["chimera".into()];
    full.extend(argv.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(full).map_err(|e| CliError::input(e.to_string()))?;
    dispatch(cli)
}
