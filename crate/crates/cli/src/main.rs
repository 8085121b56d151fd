//! `tracelink`: ingest, dataset, recover, evaluate, cards, report.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use tracelink::eval::{
    cards_from_links, cards_from_predictions, compare_report, write_cards_jsonl, EvalReport, MethodInfo,
    REPORT_JSON,
};
use tracelink::ingest::{
    list_snapshots, load_snapshot, load_snapshot_dir, IngestConfig, LiveTransport, Snapshot,
};
use tracelink::pipeline::{
    config_hash, dataset_from_snapshots, ingest_to_snapshot, read_predictions, recover, replay_snapshot,
    run_manifest, write_predictions, CARDS_FILE,
};
use tracelink::scoring::{
    ApiFlavor, CassetteTransport, HttpLlmTransport, LlmScorer, LlmTransport, PoolMode, ScorerKind,
    TextScorer, TfIdfScorer,
};
use tracelink::{export_dataset, import_dataset, ArtifactKind, IngestError, PipelineError, RepoRef, Timestamp};

use config::{DatasetSection, IngestSection, LlmSection, Overrides, RecoverSection, Settings};

#[derive(Debug, Parser)]
#[command(name = "tracelink", version, about = "Recover links from release notes to pull requests, commits, and issues")]
struct Cli {
    /// TOML file mirroring the flags; flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Never touch the network: read snapshots and LLM cassettes only.
    #[arg(long, global = true)]
    offline: bool,
    /// Snapshot root directory (default: snapshots).
    #[arg(long, global = true, value_name = "DIR")]
    snapshot: Option<PathBuf>,
    /// LLM response cassette directory.
    #[arg(long, global = true, value_name = "DIR")]
    cassette: Option<PathBuf>,
    /// Output location for the command.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check eligibility and snapshot a repository's releases and artifacts.
    Ingest(IngestArgs),
    /// Segment and label snapshotted release notes into a dataset.
    Dataset(DatasetArgs),
    /// Rank candidate artifacts for every linked segment.
    Recover(RecoverArgs),
    /// Compute Precision@1 and MRR for one or more prediction sets.
    Evaluate(EvaluateArgs),
    /// Export What/Why/How change cards.
    Cards(CardsArgs),
    /// Print a previously written report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Repository as `owner/name` or `host/owner/name`.
    repo: String,
    /// Snapshot even when eligibility fails.
    #[arg(long)]
    force: bool,
    /// Items per listing page, at most 100.
    #[arg(long)]
    page_size: Option<u32>,
    /// Environment variable holding the API token.
    #[arg(long)]
    token_env: Option<String>,
    /// Retries of a rate-limited or failed request.
    #[arg(long)]
    retry_budget: Option<u32>,
}

#[derive(Debug, Args)]
struct DatasetArgs {
    /// Repositories to include (default: every snapshot found).
    repos: Vec<String>,
    /// Keep notes that contain no valid link.
    #[arg(long)]
    keep_linkless: bool,
    /// Skip the integrity check (diagnostics only).
    #[arg(long)]
    no_validate: bool,
    /// Cap on valid links, kept in release order.
    #[arg(long)]
    max_links: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScorerArg {
    Tfidf,
    Llm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    BetweenReleases,
    FixedWindow,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FlavorArg {
    OpenaiChat,
    HuggingFace,
    Gemini,
}

#[derive(Debug, Args)]
struct RecoverArgs {
    /// Dataset directory written by `tracelink dataset`.
    dataset: PathBuf,
    /// Text scorer (default tfidf).
    #[arg(long, value_enum)]
    scorer: Option<ScorerArg>,
    /// Text weight in [0, 1]; 1 ignores time.
    #[arg(long)]
    alpha: Option<f64>,
    /// Days at which the time score reaches zero.
    #[arg(long)]
    window: Option<u32>,
    /// How the candidate pool is bounded in time.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Days added on both ends of the pool.
    #[arg(long)]
    slack_days: Option<u32>,
    /// Pool length before the release under fixed-window.
    #[arg(long)]
    fixed_window_days: Option<u32>,
    /// Artifact kinds to query, comma separated.
    #[arg(long, value_delimiter = ',')]
    kinds: Option<Vec<ArtifactKind>>,
    /// Method label used in reports.
    #[arg(long)]
    label: Option<String>,
    /// Failed LLM calls tolerated before aborting.
    #[arg(long)]
    failure_budget: Option<usize>,
    /// LLM endpoint URL.
    #[arg(long)]
    endpoint: Option<String>,
    /// LLM model id.
    #[arg(long)]
    model: Option<String>,
    /// Request shape spoken by the endpoint.
    #[arg(long, value_enum)]
    flavor: Option<FlavorArg>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Dataset directory the predictions were made on.
    dataset: PathBuf,
    /// Prediction directories written by `tracelink recover`.
    #[arg(required = true)]
    predictions: Vec<PathBuf>,
    /// Also write change cards from the first prediction set.
    #[arg(long)]
    cards: bool,
}

#[derive(Debug, Args)]
struct CardsArgs {
    /// Dataset directory written by `tracelink dataset`.
    dataset: PathBuf,
    /// Use top-ranked predictions instead of ground-truth links.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory holding report.json.
    dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(64),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn overrides(cli: &Cli) -> Overrides {
    let mut o = Overrides {
        offline: cli.offline,
        snapshot: cli.snapshot.clone(),
        cassette: cli.cassette.clone(),
        out: cli.out.clone(),
        verbose: cli.verbose,
        ..Overrides::default()
    };
    match &cli.command {
        Command::Ingest(a) => {
            o.ingest = IngestSection {
                token_env_var: a.token_env.clone(),
                page_size: a.page_size,
                retry_budget: a.retry_budget,
                force: a.force.then_some(true),
                ..IngestSection::default()
            }
        }
        Command::Dataset(a) => {
            o.dataset = DatasetSection {
                keep_linkless: a.keep_linkless.then_some(true),
                no_validate: a.no_validate.then_some(true),
                max_links: a.max_links,
            }
        }
        Command::Recover(a) => {
            o.recover = RecoverSection {
                scorer: a.scorer.map(|s| match s {
                    ScorerArg::Tfidf => ScorerKind::TfIdf,
                    ScorerArg::Llm => ScorerKind::LlmProvider,
                }),
                alpha: a.alpha,
                window: a.window,
                policy: a.policy.map(|p| match p {
                    PolicyArg::BetweenReleases => PoolMode::BetweenReleases,
                    PolicyArg::FixedWindow => PoolMode::FixedWindow,
                }),
                slack_days: a.slack_days,
                fixed_window_days: a.fixed_window_days,
                kinds: a.kinds.clone(),
                label: a.label.clone(),
                failure_budget: a.failure_budget,
            };
            o.llm = LlmSection {
                endpoint: a.endpoint.clone(),
                model_id: a.model.clone(),
                api_key_env: None,
                flavor: a.flavor.map(|f| match f {
                    FlavorArg::OpenaiChat => ApiFlavor::OpenaiChat,
                    FlavorArg::HuggingFace => ApiFlavor::HuggingFace,
                    FlavorArg::Gemini => ApiFlavor::Gemini,
                }),
            };
        }
        _ => {}
    }
    o
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let file = config::load(cli.config.as_deref())?;
    let settings = config::merge(file, overrides(&cli));
    if settings.verbose {
        let _ = tracing_subscriber::fmt()
            .with_writer(std::io::stderr)
            .with_env_filter(tracing_subscriber::EnvFilter::new("tracelink=debug,info"))
            .try_init();
    }
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(&settings, a),
        Command::Dataset(a) => cmd_dataset(&settings, a),
        Command::Recover(a) => cmd_recover(&settings, a),
        Command::Evaluate(a) => cmd_evaluate(&settings, a),
        Command::Cards(a) => cmd_cards(&settings, a),
        Command::Report(a) => cmd_report(a),
    }
}

fn parse_repo(spec: &str) -> Result<RepoRef, PipelineError> {
    RepoRef::parse(spec).map_err(|e| PipelineError::Usage(e.to_string()))
}

fn out_dir(s: &Settings, default: &str) -> PathBuf {
    s.out.clone().unwrap_or_else(|| Path::new("out").join(default))
}

fn cmd_ingest(s: &Settings, a: &IngestArgs) -> Result<(), PipelineError> {
    let repo = parse_repo(&a.repo)?;
    let cfg: &IngestConfig = &s.ingest;
    let outcome = if s.offline {
        let snap = load_snapshot(&s.snapshot_dir, &repo)?;
        replay_snapshot(&snap, cfg)?
    } else {
        let token = cfg.token().ok_or_else(|| {
            IngestError::Auth(format!("environment variable {} is not set", cfg.token_env_var))
        })?;
        let transport = LiveTransport::new()?;
        let now = Timestamp::from_unix(chrono::Utc::now().timestamp());
        ingest_to_snapshot(&transport, Some(token), &repo, cfg, now, s.force)?
    };
    print!("{}", outcome.report.render());
    if !outcome.report.passed() && !s.force {
        return Err(PipelineError::Ineligible(outcome.report.failed_ids()));
    }
    if let Some(data) = &outcome.data {
        let count = |k: ArtifactKind| data.artifacts.iter().filter(|x| x.kind == k).count();
        println!(
            "releases: {} (drafts excluded: {})",
            data.releases.len(),
            data.drafts_excluded
        );
        for k in ArtifactKind::ALL {
            println!("{}s: {}", k.label(), count(k));
        }
    }
    if let Some(id) = &outcome.snapshot_id {
        println!("snapshot: {id}");
    }
    Ok(())
}

fn load_snapshots(s: &Settings, repos: &[String]) -> Result<Vec<Snapshot>, PipelineError> {
    if repos.is_empty() {
        let dirs = list_snapshots(&s.snapshot_dir)?;
        if dirs.is_empty() {
            return Err(PipelineError::EmptyDataset(format!(
                "no snapshots under {}",
                s.snapshot_dir.display()
            )));
        }
        return dirs.iter().map(|d| load_snapshot_dir(d).map_err(Into::into)).collect();
    }
    repos
        .iter()
        .map(|r| Ok(load_snapshot(&s.snapshot_dir, &parse_repo(r)?)?))
        .collect()
}

fn cmd_dataset(s: &Settings, a: &DatasetArgs) -> Result<(), PipelineError> {
    let snaps = load_snapshots(s, &a.repos)?;
    let d = dataset_from_snapshots(&snaps, &s.ingest, &s.dataset)?;
    let dir = out_dir(s, "dataset");
    export_dataset(&d, &dir)?;
    let c = &d.build_manifest.counts;
    println!("notes: {} kept of {}", c.notes_kept, c.notes_in);
    println!("segments: {}", c.segments);
    println!("links kept: {}", c.valid_links);
    println!("links broken: {} (cross-repository: {})", c.broken_links, c.cross_repo_links);
    println!("links dropped: {} duplicate, {} over cap", c.deduped_links, c.capped_links);
    for k in ArtifactKind::ALL {
        let n = d.links.iter().filter(|l| l.artifact.kind == k).count();
        println!("  {}: {n}", k.label());
    }
    println!("dataset: {}", dir.display());
    Ok(())
}

fn llm_scorer(s: &Settings) -> Result<LlmScorer, PipelineError> {
    let transport: Box<dyn LlmTransport> = match (&s.cassette, s.offline) {
        (Some(dir), true) => Box::new(CassetteTransport::replay(dir)),
        (None, true) => {
            return Err(PipelineError::Usage("--offline with the llm scorer needs --cassette".into()))
        }
        (Some(dir), false) => Box::new(CassetteTransport::record(
            dir,
            Box::new(HttpLlmTransport::from_env(&s.provider)?),
        )),
        (None, false) => Box::new(HttpLlmTransport::from_env(&s.provider)?),
    };
    Ok(LlmScorer::new(transport, s.provider.clone()))
}

fn default_label(s: &Settings) -> String {
    let base = match s.scoring.scorer {
        ScorerKind::TfIdf => "tfidf",
        ScorerKind::LlmProvider => "llm",
    };
    if s.scoring.alpha < 1.0 {
        format!("{base}+time")
    } else {
        base.to_string()
    }
}

fn cmd_recover(s: &Settings, a: &RecoverArgs) -> Result<(), PipelineError> {
    let d = import_dataset(&a.dataset)?;
    let (scorer, provider): (Box<dyn TextScorer>, _) = match s.scoring.scorer {
        ScorerKind::TfIdf => (Box::new(TfIdfScorer), None),
        ScorerKind::LlmProvider => (Box::new(llm_scorer(s)?), Some(s.provider.clone())),
    };
    let rec = recover(&d, &s.kinds, &s.scoring, scorer.as_ref(), s.failure_budget)?;
    let label = s.label.clone().unwrap_or_else(|| default_label(s));
    let method = MethodInfo {
        label: label.clone(),
        scorer: scorer.name(),
        alpha: s.scoring.alpha,
        window_days: s.scoring.window_days,
    };
    let hashed = HashedConfig {
        scoring: &s.scoring,
        kinds: &s.kinds,
        label: &label,
        failure_budget: s.failure_budget,
        provider: provider.as_ref(),
    };
    let manifest = run_manifest(&d, method, &s.scoring, config_hash(&hashed), provider, &rec);
    let dir = out_dir(s, &format!("predictions/{}", label.replace(['/', '+', ' '], "_")));
    write_predictions(&dir, &rec.results, &manifest)?;
    let top1 = rec.results.iter().filter(|r| r.rank_of_truth == Some(1)).count();
    println!("method: {label}");
    println!("queries: {}", rec.results.len());
    println!("truth ranked first: {top1}");
    println!("truth outside candidate pool: {}", rec.results.iter().filter(|r| r.rank_of_truth.is_none()).count());
    if rec.provider_failures > 0 {
        println!("provider failures (abstained): {}", rec.provider_failures);
    }
    println!("predictions: {}", dir.display());
    Ok(())
}

/// The settings that determine a recovery run's output.
#[derive(serde::Serialize)]
struct HashedConfig<'a> {
    scoring: &'a tracelink::scoring::ScoringConfig,
    kinds: &'a [ArtifactKind],
    label: &'a str,
    failure_budget: usize,
    provider: Option<&'a tracelink::scoring::ProviderConfig>,
}

fn cmd_evaluate(s: &Settings, a: &EvaluateArgs) -> Result<(), PipelineError> {
    let d = import_dataset(&a.dataset)?;
    let runs = a
        .predictions
        .iter()
        .map(|p| read_predictions(p))
        .collect::<Result<Vec<_>, _>>()?;
    let report = compare_report(&runs)?;
    let dir = out_dir(s, "report");
    report.write(&dir)?;
    print!("{}", report.render_text());
    if a.cards {
        let cards = cards_from_predictions(&d, &runs[0].results)?;
        write_cards_jsonl(&cards, &dir.join(CARDS_FILE))?;
        println!("cards: {}", cards.len());
    }
    println!("report: {}", dir.display());
    Ok(())
}

fn cmd_cards(s: &Settings, a: &CardsArgs) -> Result<(), PipelineError> {
    let d = import_dataset(&a.dataset)?;
    let cards = match &a.predictions {
        Some(p) => cards_from_predictions(&d, &read_predictions(p)?.results)?,
        None => cards_from_links(&d)?,
    };
    let path = out_dir(s, "").join(CARDS_FILE);
    write_cards_jsonl(&cards, &path)?;
    for c in cards.iter().take(5) {
        println!("{}", c.text);
        println!("  what: {}", c.what.as_deref().unwrap_or("-"));
        println!("  why:  {}", c.why.as_deref().unwrap_or("-"));
        println!("  how:  {}", c.how.as_deref().unwrap_or("-").lines().next().unwrap_or("-"));
    }
    println!("cards: {} written to {}", cards.len(), path.display());
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> Result<(), PipelineError> {
    let path = a.dir.join(REPORT_JSON);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| PipelineError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let report: EvalReport = serde_json::from_str(&text)
        .map_err(|e| PipelineError::Usage(format!("invalid report {}: {e}", path.display())))?;
    print!("{}", report.render_text());
    Ok(())
}
