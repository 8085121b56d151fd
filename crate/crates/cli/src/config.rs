//! TOML config file mirroring the command-line flags. Flags win.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tracelink::ingest::IngestConfig;
use tracelink::notes::DatasetBuildConfig;
use tracelink::pipeline::DEFAULT_FAILURE_BUDGET;
use tracelink::scoring::{ApiFlavor, CandidatePolicy, PoolMode, ProviderConfig, ScorerKind, ScoringConfig};
use tracelink::{ArtifactKind, PipelineError};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub offline: Option<bool>,
    pub snapshot: Option<PathBuf>,
    pub cassette: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub verbose: Option<bool>,
    pub ingest: IngestSection,
    pub dataset: DatasetSection,
    pub recover: RecoverSection,
    pub llm: LlmSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub token_env_var: Option<String>,
    pub max_requests_per_hour: Option<u32>,
    pub page_size: Option<u32>,
    pub retry_budget: Option<u32>,
    pub max_in_flight: Option<usize>,
    pub force: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub keep_linkless: Option<bool>,
    pub no_validate: Option<bool>,
    pub max_links: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverSection {
    pub scorer: Option<ScorerKind>,
    pub alpha: Option<f64>,
    pub window: Option<u32>,
    pub policy: Option<PoolMode>,
    pub slack_days: Option<u32>,
    pub fixed_window_days: Option<u32>,
    pub kinds: Option<Vec<ArtifactKind>>,
    pub label: Option<String>,
    pub failure_budget: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSection {
    pub endpoint: Option<String>,
    pub model_id: Option<String>,
    pub api_key_env: Option<String>,
    pub flavor: Option<ApiFlavor>,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig, PipelineError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| PipelineError::Usage(format!("invalid config {}: {e}", path.display())))
}

/// Effective settings after merging defaults, file, and flags.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub offline: bool,
    pub snapshot_dir: PathBuf,
    pub cassette: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub verbose: bool,
    pub ingest: IngestConfig,
    pub force: bool,
    pub dataset: DatasetBuildConfig,
    pub scoring: ScoringConfig,
    pub kinds: Vec<ArtifactKind>,
    pub label: Option<String>,
    pub failure_budget: usize,
    pub provider: ProviderConfig,
}

/// Overrides given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub offline: bool,
    pub snapshot: Option<PathBuf>,
    pub cassette: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub verbose: bool,
    pub ingest: IngestSection,
    pub dataset: DatasetSection,
    pub recover: RecoverSection,
    pub llm: LlmSection,
}

pub fn merge(file: FileConfig, flags: Overrides) -> Settings {
    let ingest_default = IngestConfig::default();
    let snapshot_dir = flags.snapshot.or(file.snapshot).unwrap_or_else(|| PathBuf::from("snapshots"));
    let fi = file.ingest;
    let gi = flags.ingest;
    let ingest = IngestConfig {
        token_env_var: gi.token_env_var.or(fi.token_env_var).unwrap_or(ingest_default.token_env_var),
        max_requests_per_hour: gi
            .max_requests_per_hour
            .or(fi.max_requests_per_hour)
            .unwrap_or(ingest_default.max_requests_per_hour),
        page_size: gi.page_size.or(fi.page_size).unwrap_or(ingest_default.page_size),
        snapshot_dir: snapshot_dir.clone(),
        retry_budget: gi.retry_budget.or(fi.retry_budget).unwrap_or(ingest_default.retry_budget),
        max_in_flight: gi.max_in_flight.or(fi.max_in_flight).unwrap_or(ingest_default.max_in_flight),
    };
    let fd = file.dataset;
    let gd = flags.dataset;
    let dd = DatasetBuildConfig::default();
    let dataset = DatasetBuildConfig {
        drop_linkless_notes: !gd.keep_linkless.or(fd.keep_linkless).unwrap_or(!dd.drop_linkless_notes),
        validate_links: !gd.no_validate.or(fd.no_validate).unwrap_or(!dd.validate_links),
        max_links: gd.max_links.or(fd.max_links).unwrap_or(dd.max_links),
        dedupe_policy: dd.dedupe_policy,
    };
    let fr = file.recover;
    let gr = flags.recover;
    let sd = ScoringConfig::default();
    let pd = CandidatePolicy::default();
    let scoring = ScoringConfig {
        alpha: gr.alpha.or(fr.alpha).unwrap_or(sd.alpha),
        window_days: gr.window.or(fr.window).unwrap_or(sd.window_days),
        candidate_policy: CandidatePolicy {
            mode: gr.policy.or(fr.policy).unwrap_or(pd.mode),
            slack_days: gr.slack_days.or(fr.slack_days).unwrap_or(pd.slack_days),
            fixed_window_days: gr.fixed_window_days.or(fr.fixed_window_days).unwrap_or(pd.fixed_window_days),
        },
        scorer: gr.scorer.or(fr.scorer).unwrap_or(sd.scorer),
    };
    let fl = file.llm;
    let gl = flags.llm;
    let prd = ProviderConfig::default();
    let provider = ProviderConfig {
        endpoint: gl.endpoint.or(fl.endpoint).unwrap_or(prd.endpoint),
        model_id: gl.model_id.or(fl.model_id).unwrap_or(prd.model_id),
        api_key_env: gl.api_key_env.or(fl.api_key_env).unwrap_or(prd.api_key_env),
        flavor: gl.flavor.or(fl.flavor).unwrap_or(prd.flavor),
    };
    Settings {
        offline: flags.offline || file.offline.unwrap_or(false),
        snapshot_dir,
        cassette: flags.cassette.or(file.cassette),
        out: flags.out.or(file.out),
        verbose: flags.verbose || file.verbose.unwrap_or(false),
        ingest,
        force: gi.force.or(fi.force).unwrap_or(false),
        dataset,
        scoring,
        kinds: gr.kinds.or(fr.kinds).unwrap_or_else(|| ArtifactKind::ALL.to_vec()),
        label: gr.label.or(fr.label),
        failure_budget: gr.failure_budget.or(fr.failure_budget).unwrap_or(DEFAULT_FAILURE_BUDGET),
        provider,
    }
}
