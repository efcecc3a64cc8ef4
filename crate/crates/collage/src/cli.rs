//! The `collage` command line.
//!
//! Exit codes: 0 success, 1 runtime fault, 2 usage error, 3 batch finished
//! with failed items.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use collage_core::{GateConfig, GateRule, GridLayout, MetricError, ReturnPolicy};

use crate::agents::{AgentSettings, Agents, PromptLibrary};
use crate::config::Config;
use crate::metrics::{self, batch_evaluate, Evaluator, Manifest, MetricsError};
use crate::picture::{Picture, PictureError, ProductInput};
use crate::pipeline::{Clock, Mode, Pipeline, PipelineConfig, PipelineError, RunOutcome};
use crate::providers::http::{HttpChat, HttpEmbed, HttpImage};
use crate::providers::mock::{Fixtures, MockChat, MockEmbedder, MockImage};
use crate::providers::{CachedEmbedder, ChatProvider, EmbeddingProvider, ImageProvider};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "collage", version, about = "Plan, generate, critique and evaluate product campaign collages")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML file with [chat], [image], [embed], [pipeline] and [gates] sections.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Use the deterministic offline providers.
    #[arg(long, global = true)]
    pub mock: bool,
    /// Golden transcript directory for --mock.
    #[arg(long, global = true, value_name = "DIR")]
    pub fixtures: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    pub run_dir: Option<PathBuf>,
    /// Critique rounds after the first collage.
    #[arg(long = "max-iter", global = true, value_name = "K", value_parser = clap::value_parser!(u32).range(1..))]
    pub max_iter: Option<u32>,
    #[arg(long, global = true, value_name = "0-5", value_parser = clap::value_parser!(u8).range(0..=5))]
    pub tau_narr: Option<u8>,
    #[arg(long, global = true, value_name = "0-5", value_parser = clap::value_parser!(u8).range(0..=5))]
    pub tau_photo: Option<u8>,
    /// How gate scores are reduced: every dimension (min) or the average (mean).
    #[arg(long, global = true, value_parser = parse_rule)]
    pub gate_rule: Option<GateRule>,
    #[arg(long, global = true, value_name = "RxC", value_parser = parse_layout)]
    pub layout: Option<GridLayout>,
    /// Collage returned when the budget runs out.
    #[arg(long, global = true, value_parser = parse_policy)]
    pub return_policy: Option<ReturnPolicy>,
    /// Print debug logs to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a collage from a packshot.
    Create(ProductArgs),
    /// Create a collage that follows the structure of a reference grid.
    Reference {
        #[command(flatten)]
        product: ProductArgs,
        #[arg(long, value_name = "PATH")]
        reference: PathBuf,
    },
    /// Continue an interrupted run from its run directory.
    Resume,
    /// Score a manifest of collages into results.csv and results.json.
    Evaluate {
        #[arg(long, value_name = "PATH")]
        manifest: PathBuf,
        /// Output directory; defaults to the manifest's directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// JSON object of item → score merged as the external_score column.
        #[arg(long, value_name = "PATH")]
        external_scores: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        parallelism: Option<usize>,
    },
    /// Structural similarity between two grids.
    Cka {
        #[arg(long, value_name = "PATH")]
        reference_grid: PathBuf,
        #[arg(long, value_name = "PATH")]
        generated_grid: PathBuf,
        /// Layout of the generated grid when it differs from --layout.
        #[arg(long, value_name = "RxC", value_parser = parse_layout)]
        generated_layout: Option<GridLayout>,
        /// Write both relation matrices as JSON.
        #[arg(long, value_name = "PATH")]
        dump_matrices: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ProductArgs {
    #[arg(long, value_name = "PATH")]
    pub packshot: PathBuf,
    #[arg(long)]
    pub name: String,
    /// Optional campaign brief.
    #[arg(long)]
    pub intent: Option<String>,
}

fn parse_layout(s: &str) -> Result<GridLayout, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_rule(s: &str) -> Result<GateRule, String> {
    match s {
        "min" => Ok(GateRule::Min),
        "mean" => Ok(GateRule::Mean),
        _ => Err("expected min or mean".into()),
    }
}

fn parse_policy(s: &str) -> Result<ReturnPolicy, String> {
    match s {
        "last" => Ok(ReturnPolicy::Last),
        "best" => Ok(ReturnPolicy::Best),
        _ => Err("expected last or best".into()),
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult = Result<i32, Failure>;

/// Parses `args` and runs the command, writing results to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    init_logging(cli.global.verbose);
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> CliResult {
    let config = match &cli.global.config {
        Some(p) => Config::load(p).map_err(|e| Failure::Usage(e.to_string()))?,
        None => Config::default(),
    };
    let ctx = Context { g: &cli.global, config };
    match &cli.command {
        Command::Create(p) => ctx.create(p, None, out),
        Command::Reference { product, reference } => ctx.create(product, Some(reference), out),
        Command::Resume => ctx.resume(out),
        Command::Evaluate { manifest, out: dir, external_scores, parallelism } => {
            ctx.evaluate(manifest, dir.as_deref(), external_scores.as_deref(), *parallelism, out)
        }
        Command::Cka { reference_grid, generated_grid, generated_layout, dump_matrices } => {
            ctx.cka(reference_grid, generated_grid, generated_layout.as_ref(), dump_matrices.as_deref(), out)
        }
    }
}

struct Context<'a> {
    g: &'a Global,
    config: Config,
}

impl Context<'_> {
    fn layout(&self) -> Result<GridLayout, Failure> {
        if let Some(l) = &self.g.layout {
            return Ok(l.clone());
        }
        match &self.config.pipeline.layout {
            Some(s) => parse_layout(s).map_err(Failure::Usage),
            None => Ok(GridLayout::quad()),
        }
    }

    fn gates(&self, base: GateConfig) -> Result<GateConfig, Failure> {
        let file = &self.config.gates;
        let tau_narr = self.g.tau_narr.or(file.tau_narr).unwrap_or(base.tau_narr);
        let tau_photo = self.g.tau_photo.or(file.tau_photo).unwrap_or(base.tau_photo);
        let rule = self.g.gate_rule.or(file.rule).unwrap_or(base.rule);
        GateConfig::new(tau_narr, tau_photo, rule).map_err(|e| Failure::Usage(e.to_string()))
    }

    fn max_iter(&self) -> Result<Option<u32>, Failure> {
        match self.g.max_iter.or(self.config.pipeline.max_iter) {
            Some(0) => Err(Failure::Usage("max iterations must be at least 1".into())),
            k => Ok(k),
        }
    }

    fn fixtures(&self) -> Result<Fixtures, Failure> {
        match self.g.fixtures.as_ref().or(self.config.pipeline.fixtures.as_ref()) {
            Some(dir) => Fixtures::load(dir).map_err(|e| Failure::Usage(e.to_string())),
            None => Ok(Fixtures::embedded()),
        }
    }

    fn chat(&self) -> Result<Arc<dyn ChatProvider>, Failure> {
        if self.g.mock {
            return Ok(Arc::new(MockChat::new(self.fixtures()?)));
        }
        let cfg = self.config.chat.as_ref().ok_or_else(|| not_configured("chat"))?;
        Ok(Arc::new(HttpChat::new(cfg).map_err(|e| Failure::Runtime(e.to_string()))?))
    }

    fn image(&self) -> Result<Arc<dyn ImageProvider>, Failure> {
        if self.g.mock {
            return Ok(Arc::new(MockImage));
        }
        let cfg = self.config.image.as_ref().ok_or_else(|| not_configured("image"))?;
        Ok(Arc::new(HttpImage::new(cfg).map_err(|e| Failure::Runtime(e.to_string()))?))
    }

    fn embedder(&self) -> Result<Arc<dyn EmbeddingProvider>, Failure> {
        if self.g.mock {
            return Ok(Arc::new(MockEmbedder::default()));
        }
        let cfg = self.config.embed.as_ref().ok_or_else(|| not_configured("embed"))?;
        Ok(Arc::new(HttpEmbed::new(&cfg.endpoint, cfg.dimension).map_err(|e| Failure::Runtime(e.to_string()))?))
    }

    /// Agents for the chat-only commands get an image provider only when one is needed.
    fn agents(&self, with_image: bool) -> Result<Agents, Failure> {
        let image: Arc<dyn ImageProvider> = if with_image { self.image()? } else { Arc::new(MockImage) };
        let p = &self.config.pipeline;
        let defaults = AgentSettings::default();
        let settings = AgentSettings {
            repair_budget: p.repair_budget.unwrap_or(defaults.repair_budget),
            attach_reference: p.attach_reference.unwrap_or(defaults.attach_reference),
            creative_temperature: p.creative_temperature.unwrap_or(defaults.creative_temperature),
            ..defaults
        };
        let mut agents = Agents::new(self.chat()?, image).with_settings(settings);
        if let Some(dir) = &p.prompts {
            agents = agents
                .with_prompts(PromptLibrary::with_overrides(dir).map_err(|e| Failure::Usage(e.to_string()))?);
        }
        Ok(agents)
    }

    fn clock(&self) -> Clock {
        if self.g.mock {
            Clock::Logical
        } else {
            Clock::Wall
        }
    }

    fn create(&self, p: &ProductArgs, reference: Option<&PathBuf>, out: &mut dyn Write) -> CliResult {
        let packshot = open_input(&p.packshot)?;
        let mut input = ProductInput::new(packshot, p.name.clone()).map_err(|e| Failure::Usage(e.to_string()))?;
        if let Some(intent) = &p.intent {
            input = input.with_intent(intent.clone());
        }
        if let Some(r) = reference {
            input = input.with_reference(open_input(r)?);
        }
        let run_dir = self
            .g
            .run_dir
            .clone()
            .or_else(|| self.config.pipeline.run_dir.clone())
            .unwrap_or_else(|| Path::new("runs").join(slug(&p.name)));
        let mut cfg = PipelineConfig::new(run_dir);
        cfg.max_iterations = self.max_iter()?.unwrap_or(cfg.max_iterations);
        cfg.gates = self.gates(cfg.gates)?;
        cfg.layout = self.layout()?;
        cfg.mode = if reference.is_some() { Mode::Reference } else { Mode::Creation };
        cfg.return_policy = self.g.return_policy.or(self.config.pipeline.return_policy).unwrap_or_default();
        cfg.clock = self.clock();
        let outcome = Pipeline::new(self.agents(true)?, cfg).run(&input)?;
        report_run(&outcome, out)
    }

    fn resume(&self, out: &mut dyn Write) -> CliResult {
        let run_dir = self
            .g
            .run_dir
            .clone()
            .or_else(|| self.config.pipeline.run_dir.clone())
            .ok_or_else(|| Failure::Usage("resume needs --run-dir".into()))?;
        let mut cfg = PipelineConfig::from_run_dir(&run_dir)?;
        cfg.max_iterations = self.max_iter()?.unwrap_or(cfg.max_iterations);
        cfg.gates = self.gates(cfg.gates)?;
        if let Some(l) = &self.g.layout {
            cfg.layout = l.clone();
        }
        cfg.return_policy = self.g.return_policy.unwrap_or(cfg.return_policy);
        cfg.clock = self.clock();
        let outcome = Pipeline::new(self.agents(true)?, cfg).resume()?;
        report_run(&outcome, out)
    }

    fn evaluate(
        &self,
        manifest: &Path,
        dir: Option<&Path>,
        external: Option<&Path>,
        parallelism: Option<usize>,
        out: &mut dyn Write,
    ) -> CliResult {
        let mut m = Manifest::load(manifest).map_err(|e| Failure::Runtime(e.to_string()))?;
        if let Some(e) = external {
            m.external_scores = Some(e.to_path_buf());
        }
        let dir = dir
            .map(Path::to_path_buf)
            .unwrap_or_else(|| manifest.parent().unwrap_or(Path::new(".")).to_path_buf());
        let eval = Evaluator::new(self.agents(false)?, self.embedder()?);
        let workers = parallelism.or(self.config.pipeline.parallelism).unwrap_or(4);
        let report = batch_evaluate(&m, &eval, &dir, workers).map_err(|e| Failure::Runtime(e.to_string()))?;
        let items = report.rows.iter().filter(|r| !r.is_mean()).count();
        writeln!(out, "scored {items} items, {} failed", report.failures()).ok();
        for r in report.rows.iter().filter(|r| r.error.is_some()) {
            writeln!(out, "  {} / {}: {}", r.group, r.item, r.error.as_deref().unwrap_or_default()).ok();
        }
        writeln!(out, "results: {}", dir.join(metrics::batch::RESULTS_CSV).display()).ok();
        Ok(if report.failures() > 0 { EXIT_PARTIAL } else { EXIT_OK })
    }

    fn cka(
        &self,
        reference: &Path,
        generated: &Path,
        generated_layout: Option<&GridLayout>,
        dump: Option<&Path>,
        out: &mut dyn Write,
    ) -> CliResult {
        let layout = self.layout()?;
        let gen_layout = generated_layout.cloned().unwrap_or_else(|| layout.clone());
        if layout.panel_count() != gen_layout.panel_count() {
            return Err(Failure::Usage(format!(
                "grids have different panel counts: {} has {}, {} has {}",
                layout,
                layout.panel_count(),
                gen_layout,
                gen_layout.panel_count()
            )));
        }
        let embedder = CachedEmbedder::new(self.embedder()?);
        let r_ref = metrics::relation_matrix(&split(&open_input(reference)?, &layout)?, &embedder)?;
        let r_gen = metrics::relation_matrix(&split(&open_input(generated)?, &gen_layout)?, &embedder)?;
        if let Some(path) = dump {
            let doc = serde_json::json!({ "reference": r_ref.rows(), "generated": r_gen.rows() });
            let text = serde_json::to_string_pretty(&doc).expect("matrices serialize") + "\n";
            crate::fsutil::write_atomic(path, text.as_bytes())
                .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
        }
        let value = metrics::cka(&r_ref, &r_gen).map_err(|e| match e {
            MetricError::SizeMismatch { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        })?;
        writeln!(out, "{value:.6}").ok();
        Ok(EXIT_OK)
    }
}

fn split(p: &Picture, layout: &GridLayout) -> Result<Vec<Picture>, Failure> {
    crate::picture::split_grid(p, layout).map_err(|e| Failure::Runtime(e.to_string()))
}

fn not_configured(which: &str) -> Failure {
    Failure::Usage(format!("no [{which}] provider configured; pass --config with a [{which}] section or use --mock"))
}

fn open_input(path: &Path) -> Result<Picture, Failure> {
    Picture::open(path).map_err(|e| match e {
        PictureError::Decode(m) => Failure::Runtime(format!("corrupt input {}: {m}", path.display())),
        other => Failure::Runtime(other.to_string()),
    })
}

fn report_run(outcome: &RunOutcome, out: &mut dyn Write) -> CliResult {
    writeln!(out, "collage: {}", outcome.final_collage.display()).ok();
    writeln!(out, "stop reason: {}", outcome.stop_reason.as_str()).ok();
    writeln!(out, "iteration: {}", outcome.selected_iteration).ok();
    Ok(EXIT_OK)
}

/// Lowercase ASCII alphanumerics with single dashes.
fn slug(name: &str) -> String {
    let mut s = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            s.push(c.to_ascii_lowercase());
        } else if !s.ends_with('-') && !s.is_empty() {
            s.push('-');
        }
    }
    let s = s.trim_end_matches('-').to_string();
    if s.is_empty() {
        "run".into()
    } else {
        s
    }
}

struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, metadata: &log::Metadata<'_>) -> bool {
        metadata.level() <= log::max_level()
    }

    fn log(&self, record: &log::Record<'_>) {
        if self.enabled(record.metadata()) {
            eprintln!("{}: {}", record.level().as_str().to_ascii_lowercase(), record.args());
        }
    }

    fn flush(&self) {}
}

static LOGGER: StderrLogger = StderrLogger;

fn init_logging(verbose: bool) {
    if log::set_logger(&LOGGER).is_ok() || verbose {
        log::set_max_level(if verbose { log::LevelFilter::Debug } else { log::LevelFilter::Warn });
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("Shea Hand Cream"), "shea-hand-cream");
        assert_eq!(slug("  ??"), "run");
        assert_eq!(slug("A&B  co."), "a-b-co");
    }

    #[test]
    fn zero_iterations_is_usage_error() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(["collage", "--max-iter", "0", "create", "--packshot", "p.png", "--name", "x"], &mut out, &mut err);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["collage", "--help"], &mut out, &mut err), EXIT_OK);
        assert!(String::from_utf8(out).unwrap().contains("reference"));
    }
}
