//! Response parsing and resumable experiment runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::examples::{select_examples, ExampleSelection};
use super::prompt::{build_prompt, Condition, TEMPLATE_VERSION};
use super::provider::{request_generation, ProviderConfig, Transport};
use crate::ingest::compact::{graph_from_json, graph_to_json};
use crate::ingest::{ModelBundle, SchemaError};
use crate::model::DecisionGraph;
use crate::validate::{validate_graph, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Validity {
    Parsed,
    SchemaError,
    ValidationError,
    ProviderError,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseFailure {
    Schema(SchemaError),
    Validation(ValidationReport),
}

impl std::fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseFailure::Schema(e) => write!(f, "{e}"),
            ParseFailure::Validation(r) => write!(f, "{r}"),
        }
    }
}

impl ParseFailure {
    pub fn validity(&self) -> Validity {
        match self {
            ParseFailure::Schema(_) => Validity::SchemaError,
            ParseFailure::Validation(_) => Validity::ValidationError,
        }
    }
}

/// Removes one surrounding Markdown code fence, if present.
pub fn strip_code_fences(raw: &str) -> &str {
    let t = raw.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let body = match rest.find('\n') {
        Some(i) => &rest[i + 1..],
        None => rest,
    };
    body.trim_end().strip_suffix("```").unwrap_or(body).trim()
}

pub fn parse_generation(raw: &str) -> Result<DecisionGraph, ParseFailure> {
    let text = strip_code_fences(raw);
    let json: serde_json::Value = serde_json::from_str(text).map_err(|e| {
        ParseFailure::Schema(SchemaError {
            path: "$".into(),
            message: e.to_string(),
        })
    })?;
    let graph = graph_from_json(&json).map_err(ParseFailure::Schema)?;
    let report = validate_graph(&graph);
    if report.is_ok() {
        Ok(graph)
    } else {
        Err(ParseFailure::Validation(report))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RunKey {
    pub target_model_id: String,
    pub condition: Condition,
    pub run_index: usize,
}

impl RunKey {
    pub fn text(&self) -> String {
        format!(
            "{}\t{}\t{}",
            self.target_model_id,
            self.condition.as_str(),
            self.run_index
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub target_model_id: String,
    pub condition: Condition,
    pub run_index: usize,
    pub example_model_id: Option<String>,
    #[serde(default)]
    pub example_with_replacement: bool,
    pub template_version: String,
    pub prompt_hash: Option<String>,
    #[serde(default)]
    pub srl_missing: bool,
    pub raw_response: Option<String>,
    /// Compact graph document; present exactly when `validity` is `Parsed`.
    pub parsed_graph: Option<serde_json::Value>,
    pub validity: Validity,
    pub error: Option<String>,
    pub attempts: u32,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    /// Wall-clock request time; omitted in deterministic runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl RunRecord {
    pub fn key(&self) -> RunKey {
        RunKey {
            target_model_id: self.target_model_id.clone(),
            condition: self.condition,
            run_index: self.run_index,
        }
    }

    pub fn graph(&self) -> Option<DecisionGraph> {
        self.parsed_graph.as_ref().and_then(|g| graph_from_json(g).ok())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    pub conditions: Vec<Condition>,
    pub runs: usize,
    pub seed: u64,
    /// Restrict to these target ids; all bundles otherwise.
    pub targets: Option<Vec<String>>,
    /// Produce at most this many new records in this invocation.
    pub limit: Option<usize>,
    pub record_timing: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            conditions: Condition::ALL.to_vec(),
            runs: 5,
            seed: 0,
            targets: None,
            limit: None,
            record_timing: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    /// Every record in the store, in key order of the experiment.
    pub records: Vec<RunRecord>,
    pub produced: usize,
    pub skipped: usize,
}

pub const RECORDS_FILE: &str = "runs.jsonl";
pub const COMPLETED_FILE: &str = "completed_keys.txt";

/// Reads a record file, dropping a trailing partial line left by a crash.
pub fn read_records(path: &Path) -> io::Result<Vec<RunRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RunRecord>(&line) {
            Ok(r) => out.push(r),
            Err(_) => continue,
        }
    }
    Ok(out)
}

fn repair_tail(path: &Path) -> io::Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let bytes = fs::read(path)?;
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|b| *b == b'\n').map(|i| i + 1).unwrap_or(0);
    let f = OpenOptions::new().write(true).open(path)?;
    f.set_len(keep as u64)?;
    Ok(())
}

struct Job<'a> {
    key: RunKey,
    target: &'a ModelBundle,
    example: Result<(&'a ModelBundle, bool), String>,
}

fn run_job(job: &Job, cfg: &ProviderConfig, transport: &dyn Transport, record_timing: bool) -> RunRecord {
    let mut record = RunRecord {
        target_model_id: job.key.target_model_id.clone(),
        condition: job.key.condition,
        run_index: job.key.run_index,
        example_model_id: None,
        example_with_replacement: false,
        template_version: TEMPLATE_VERSION.to_owned(),
        prompt_hash: None,
        srl_missing: false,
        raw_response: None,
        parsed_graph: None,
        validity: Validity::ProviderError,
        error: None,
        attempts: 0,
        prompt_tokens: None,
        completion_tokens: None,
        elapsed_ms: None,
    };
    let (example, replaced) = match &job.example {
        Ok(e) => *e,
        Err(message) => {
            record.error = Some(message.clone());
            return record;
        }
    };
    record.example_model_id = Some(example.graph.id.clone());
    record.example_with_replacement = replaced;
    let prompt = match build_prompt(job.key.condition, job.target, example) {
        Ok(p) => p,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    record.prompt_hash = Some(prompt.hash.clone());
    record.srl_missing = prompt.srl_missing;
    let started = Instant::now();
    let result = request_generation(&prompt, cfg, transport);
    if record_timing {
        record.elapsed_ms = Some(started.elapsed().as_millis() as u64);
    }
    match result {
        Err(e) => {
            record.attempts = e.attempts;
            record.error = Some(e.to_string());
        }
        Ok(g) => {
            record.attempts = g.attempts;
            record.prompt_tokens = g.prompt_tokens;
            record.completion_tokens = g.completion_tokens;
            match parse_generation(&g.text) {
                Ok(graph) => {
                    record.validity = Validity::Parsed;
                    record.parsed_graph = Some(graph_to_json(&graph));
                }
                Err(f) => {
                    record.validity = f.validity();
                    record.error = Some(f.to_string());
                }
            }
            record.raw_response = Some(g.text);
        }
    }
    record
}

/// Runs every target × condition × run not yet present in `out_dir`.
///
/// Records are appended to `runs.jsonl` in key order, one batch of
/// `max_concurrency` requests at a time; `completed_keys.txt` lists the keys
/// written so far.
pub fn run_experiment(
    bundles: &[ModelBundle],
    opts: &ExperimentOptions,
    cfg: &ProviderConfig,
    transport: &dyn Transport,
    out_dir: &Path,
) -> io::Result<ExperimentOutcome> {
    cfg.check()
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    fs::create_dir_all(out_dir)?;
    let records_path: PathBuf = out_dir.join(RECORDS_FILE);
    let completed_path: PathBuf = out_dir.join(COMPLETED_FILE);
    repair_tail(&records_path)?;
    let existing = read_records(&records_path)?;
    let done: BTreeSet<RunKey> = existing.iter().map(RunRecord::key).collect();

    let mut targets: Vec<&ModelBundle> = bundles
        .iter()
        .filter(|b| opts.targets.as_ref().is_none_or(|t| t.contains(&b.graph.id)))
        .collect();
    targets.sort_by(|a, b| a.graph.id.cmp(&b.graph.id));
    let by_id: BTreeMap<&str, &ModelBundle> = bundles.iter().map(|b| (b.graph.id.as_str(), b)).collect();

    let mut order = Vec::new();
    let mut jobs = Vec::new();
    for target in &targets {
        let selection: Result<ExampleSelection, String> =
            select_examples(target, bundles, opts.runs, opts.seed).map_err(|e| e.to_string());
        for &condition in &opts.conditions {
            for run_index in 0..opts.runs {
                let key = RunKey {
                    target_model_id: target.graph.id.clone(),
                    condition,
                    run_index,
                };
                order.push(key.clone());
                if done.contains(&key) {
                    continue;
                }
                let example = selection
                    .as_ref()
                    .map(|s| (by_id[s.ids[run_index].as_str()], s.with_replacement))
                    .map_err(Clone::clone);
                jobs.push(Job { key, target, example });
            }
        }
    }
    let skipped = order.len() - jobs.len();
    if let Some(limit) = opts.limit {
        jobs.truncate(limit);
    }

    let mut records_file = OpenOptions::new().create(true).append(true).open(&records_path)?;
    let mut completed_file = OpenOptions::new().create(true).append(true).open(&completed_path)?;
    let mut fresh = Vec::with_capacity(jobs.len());
    for batch in jobs.chunks(cfg.max_concurrency.max(1)) {
        let results: Vec<RunRecord> = std::thread::scope(|s| {
            let handles: Vec<_> = batch
                .iter()
                .map(|job| s.spawn(move || run_job(job, cfg, transport, opts.record_timing)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("generation worker panicked"))
                .collect()
        });
        for r in results {
            let line = serde_json::to_string(&r).map_err(io::Error::other)?;
            records_file.write_all(line.as_bytes())?;
            records_file.write_all(b"\n")?;
            records_file.flush()?;
            writeln!(completed_file, "{}", r.key().text())?;
            fresh.push(r);
        }
    }
    let produced = fresh.len();

    let mut all: BTreeMap<RunKey, RunRecord> = existing.into_iter().map(|r| (r.key(), r)).collect();
    for r in fresh {
        all.insert(r.key(), r);
    }
    let records = order.iter().filter_map(|k| all.remove(k)).collect();
    Ok(ExperimentOutcome {
        records,
        produced,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::compact::serialize_graph_pretty;
    use crate::synth;

    #[test]
    fn fences() {
        assert_eq!(strip_code_fences("```json\n{}\n```"), "{}");
        assert_eq!(strip_code_fences("  {} "), "{}");
        assert_eq!(strip_code_fences("```\n{\"a\":1}```"), "{\"a\":1}");
    }

    #[test]
    fn parse_outcomes() {
        let g = synth::wind_turbine_model();
        let text = serialize_graph_pretty(&g);
        assert_eq!(parse_generation(&format!("```json\n{text}\n```")).unwrap(), g);
        assert!(matches!(
            parse_generation(&text[..text.len() / 2]),
            Err(ParseFailure::Schema(_))
        ));
        let mut bad = g.clone();
        bad.edges.push(crate::model::Edge::new("ghost", "out_duty"));
        let err = parse_generation(&serialize_graph_pretty(&bad)).unwrap_err();
        assert_eq!(err.validity(), Validity::ValidationError);
        assert!(err.to_string().contains("ghost"), "{err}");
    }
}
