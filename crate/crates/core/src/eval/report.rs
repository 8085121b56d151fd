use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DatasetError, EvalError};
use crate::eval::metrics::{misses, mrr, precision_at_1, QueryResult};
use crate::model::{ArtifactKind, SegmentId};
use crate::pipeline::RunManifest;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";

/// Identity of a recovery method: which text scorer and which fusion setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodInfo {
    pub label: String,
    pub scorer: String,
    pub alpha: f64,
    pub window_days: u32,
}

impl MethodInfo {
    pub fn uses_time(&self) -> bool {
        self.alpha < 1.0
    }
}

/// All query results of one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub method: MethodInfo,
    pub manifest: Option<RunManifest>,
    pub results: Vec<QueryResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub method: String,
    pub kind: ArtifactKind,
    pub query_count: usize,
    pub precision_at_1: f64,
    pub mrr: f64,
    /// Queries whose truth was not among the candidates.
    pub misses: usize,
}

/// Change from the time-free variant to the time-aware variant of one scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub scorer: String,
    pub kind: ArtifactKind,
    pub with_time: String,
    pub without_time: String,
    pub precision_at_1_abs: f64,
    /// `None` when the baseline is zero.
    pub precision_at_1_rel: Option<f64>,
    pub mrr_abs: f64,
    pub mrr_rel: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub method: String,
    pub kind: ArtifactKind,
    pub precision_at_1: Option<f64>,
    pub mrr: Option<f64>,
}

pub const REFERENCE_NOTE: &str = "published reference values, not reproduced by this run";

/// Published figures for the baselines and LLM variants, shown for context.
pub fn reference_table() -> Vec<ReferenceRow> {
    use ArtifactKind::*;
    let row = |method: &str, kind, p: Option<f64>, m: Option<f64>| ReferenceRow {
        method: method.to_string(),
        kind,
        precision_at_1: p,
        mrr: m,
    };
    vec![
        row("TF-IDF", PullRequest, Some(0.35), Some(0.50)),
        row("Seq2Seq", PullRequest, Some(0.48), Some(0.60)),
        row("LLaMA (no time)", PullRequest, Some(0.62), Some(0.72)),
        row("LLaMA (no time)", Commit, Some(0.52), Some(0.63)),
        row("LLaMA (no time)", Issue, Some(0.58), Some(0.68)),
        row("Gemini (no time)", PullRequest, Some(0.68), Some(0.78)),
        row("Gemini (no time)", Commit, None, Some(0.70)),
        row("Gemini (no time)", Issue, None, Some(0.75)),
        row("LLaMA + time", PullRequest, Some(0.68), None),
        row("LLaMA + time", Issue, Some(0.63), None),
        row("Gemini + time", PullRequest, Some(0.73), Some(0.82)),
        row("Gemini + time", Commit, Some(0.64), Some(0.75)),
        row("Gemini + time", Issue, Some(0.70), Some(0.80)),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub methods: Vec<MethodInfo>,
    pub rows: Vec<EvalRow>,
    pub deltas: Vec<Delta>,
    pub reference_note: String,
    pub reference: Vec<ReferenceRow>,
    pub runs: Vec<RunManifest>,
}

fn query_set(results: &[QueryResult]) -> BTreeSet<(SegmentId, ArtifactKind, String)> {
    results
        .iter()
        .map(|r| (r.segment.clone(), r.kind, r.truth.clone()))
        .collect()
}

fn relative(abs: f64, base: f64) -> Option<f64> {
    (base != 0.0).then(|| abs / base)
}

/// One row per (method, kind), deltas between with-time and without-time
/// variants of the same scorer and window, and the reference table.
pub fn compare_report(runs: &[MethodRun]) -> Result<EvalReport, EvalError> {
    let first = runs.first().ok_or(EvalError::EmptyInput)?;
    let expected = query_set(&first.results);
    for run in runs {
        let got = query_set(&run.results);
        if got.len() != run.results.len() {
            return Err(EvalError::QuerySetMismatch(format!(
                "{} contains repeated queries",
                run.method.label
            )));
        }
        if got != expected {
            let only_a = expected.difference(&got).count();
            let only_b = got.difference(&expected).count();
            return Err(EvalError::QuerySetMismatch(format!(
                "{} vs {}: {only_a} queries only in the first, {only_b} only in the second",
                first.method.label, run.method.label
            )));
        }
    }
    let labels: BTreeSet<&str> = runs.iter().map(|r| r.method.label.as_str()).collect();
    if labels.len() != runs.len() {
        return Err(EvalError::QuerySetMismatch("method labels must be distinct".into()));
    }

    let mut rows = Vec::new();
    for run in runs {
        for kind in ArtifactKind::ALL {
            let of_kind: Vec<QueryResult> = run.results.iter().filter(|r| r.kind == kind).cloned().collect();
            if of_kind.is_empty() {
                continue;
            }
            rows.push(EvalRow {
                method: run.method.label.clone(),
                kind,
                query_count: of_kind.len(),
                precision_at_1: precision_at_1(&of_kind)?,
                mrr: mrr(&of_kind)?,
                misses: misses(&of_kind),
            });
        }
    }

    let row_of = |label: &str, kind| rows.iter().find(|r| r.method == label && r.kind == kind);
    let mut deltas = Vec::new();
    for with in runs.iter().filter(|r| r.method.uses_time()) {
        for without in runs.iter().filter(|r| {
            !r.method.uses_time() && r.method.scorer == with.method.scorer
        }) {
            for kind in ArtifactKind::ALL {
                let (Some(a), Some(b)) = (row_of(&with.method.label, kind), row_of(&without.method.label, kind)) else {
                    continue;
                };
                let dp = a.precision_at_1 - b.precision_at_1;
                let dm = a.mrr - b.mrr;
                deltas.push(Delta {
                    scorer: with.method.scorer.clone(),
                    kind,
                    with_time: with.method.label.clone(),
                    without_time: without.method.label.clone(),
                    precision_at_1_abs: dp,
                    precision_at_1_rel: relative(dp, b.precision_at_1),
                    mrr_abs: dm,
                    mrr_rel: relative(dm, b.mrr),
                });
            }
        }
    }

    Ok(EvalReport {
        methods: runs.iter().map(|r| r.method.clone()).collect(),
        rows,
        deltas,
        reference_note: REFERENCE_NOTE.to_string(),
        reference: reference_table(),
        runs: runs.iter().filter_map(|r| r.manifest.clone()).collect(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}"))
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{:+.1}%", 100.0 * x))
}

impl EvalReport {
    /// Aligned plain-text rendering.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let w = self
            .rows
            .iter()
            .map(|r| r.method.len())
            .chain(self.reference.iter().map(|r| r.method.len()))
            .max()
            .unwrap_or(6)
            .max(6);
        let _ = writeln!(out, "{:<w$}  {:<12}  {:>7}  {:>11}  {:>6}  {:>6}", "method", "kind", "queries", "precision@1", "mrr", "misses");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<w$}  {:<12}  {:>7}  {:>11.4}  {:>6.4}  {:>6}",
                r.method,
                r.kind.label(),
                r.query_count,
                r.precision_at_1,
                r.mrr,
                r.misses
            );
        }
        if !self.deltas.is_empty() {
            out.push_str("\ntime-aware minus time-free (absolute, relative)\n");
            for d in &self.deltas {
                let _ = writeln!(
                    out,
                    "{} vs {} [{}]: precision@1 {:+.4} ({}), mrr {:+.4} ({})",
                    d.with_time,
                    d.without_time,
                    d.kind.label(),
                    d.precision_at_1_abs,
                    pct(d.precision_at_1_rel),
                    d.mrr_abs,
                    pct(d.mrr_rel)
                );
            }
        }
        let _ = writeln!(out, "\n{}", self.reference_note);
        let _ = writeln!(out, "{:<w$}  {:<12}  {:>11}  {:>6}", "method", "kind", "precision@1", "mrr");
        for r in &self.reference {
            let _ = writeln!(
                out,
                "{:<w$}  {:<12}  {:>11}  {:>6}",
                r.method,
                r.kind.label(),
                opt(r.precision_at_1),
                opt(r.mrr)
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// Writes `report.json` and `report.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), DatasetError> {
        fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
        for (name, body) in [(REPORT_JSON, self.to_json()), (REPORT_TXT, self.render_text())] {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| DatasetError::io(&p, e))?;
        }
        Ok(())
    }
}
