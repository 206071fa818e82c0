//! End-to-end pipeline steps shared by the command-line tool.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analytics::{analyze, emit_report, Analysis, AnalysisOptions};
use crate::engine::{Assignment, ExecMode};
use crate::genharness::provider::{EchoExampleTransport, ProviderConfig, Transport, UreqTransport};
use crate::genharness::{run_experiment, Condition, ExperimentOptions, RunRecord};
use crate::ingest::compact::serialize_graph_pretty;
use crate::ingest::corpus::manifest_json;
use crate::ingest::{load_corpus, Corpus, CorpusOptions};
use crate::model::DecisionGraph;
use crate::outcome::{assess_testability, generate_cases, OutcomeKeywords, TestabilityCaps};
use crate::simplify::{
    chain_profile, detect_placeholder_inputs, eliminate_identity_nodes, ChainProfile, SimplificationReport,
};
use crate::structeval::{descriptive_stats, METRIC_NAMES};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("corpus: {0}")]
    Corpus(String),
    #[error("configuration: {0}")]
    Config(String),
}

impl PipelineError {
    pub fn io(path: &Path, source: io::Error) -> PipelineError {
        PipelineError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Where models, articles and SRL annotations live under a corpus root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusLayout {
    pub models: PathBuf,
    pub articles: Option<PathBuf>,
    pub srl: Option<PathBuf>,
}

/// `root/models`, `root/articles` and `root/srl` when `models` exists,
/// otherwise every model file directly under `root`.
pub fn corpus_layout(root: &Path) -> CorpusLayout {
    let sub = |name: &str| {
        let p = root.join(name);
        p.is_dir().then_some(p)
    };
    match sub("models") {
        Some(models) => CorpusLayout {
            models,
            articles: sub("articles"),
            srl: sub("srl"),
        },
        None => CorpusLayout {
            models: root.to_path_buf(),
            articles: None,
            srl: None,
        },
    }
}

pub fn load_corpus_root(root: &Path, opts: &CorpusOptions) -> Result<Corpus, PipelineError> {
    if !root.is_dir() {
        return Err(PipelineError::Corpus(format!("{} is not a directory", root.display())));
    }
    let layout = corpus_layout(root);
    Ok(load_corpus(
        &layout.models,
        layout.articles.as_deref(),
        layout.srl.as_deref(),
        opts,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub conditions: Vec<Condition>,
    pub runs: usize,
    pub caps: TestabilityCaps,
    pub provider: Option<PathBuf>,
    pub keywords: Option<PathBuf>,
    pub mode: ExecMode,
    pub stub: bool,
}

impl PipelineConfig {
    pub fn new(corpus: impl Into<PathBuf>, out: impl Into<PathBuf>) -> PipelineConfig {
        PipelineConfig {
            corpus: corpus.into(),
            out: out.into(),
            seed: 0,
            conditions: Condition::ALL.to_vec(),
            runs: 5,
            caps: TestabilityCaps::default(),
            provider: None,
            keywords: None,
            mode: ExecMode::Permissive,
            stub: true,
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| PipelineError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(&item).expect("serializable");
        writeln!(w, "{line}").map_err(|e| PipelineError::io(path, e))?;
    }
    w.flush().map_err(|e| PipelineError::io(path, e))
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| PipelineError::Corpus(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn load_keywords(path: Option<&Path>) -> Result<OutcomeKeywords, PipelineError> {
    let Some(path) = path else {
        return Ok(OutcomeKeywords::default());
    };
    let bytes = fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

pub fn load_provider(path: &Path) -> Result<ProviderConfig, PipelineError> {
    let bytes = fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    let cfg: ProviderConfig =
        serde_json::from_slice(&bytes).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    cfg.check().map_err(PipelineError::Config)?;
    Ok(cfg)
}

/// `model_id,metric,value` rows for every graph.
pub fn stats_csv(graphs: &[&DecisionGraph]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model_id", "metric", "value"])
        .expect("in-memory write");
    for g in graphs {
        let s = descriptive_stats(g);
        for (name, value) in METRIC_NAMES.iter().zip(s.metrics()) {
            w.write_record([g.id.as_str(), name, &format_number(value)])
                .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Integers without a fraction, everything else with six decimals.
pub fn format_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.6}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimplifyProfile {
    pub report: SimplificationReport,
    pub chains: ChainProfile,
    pub placeholder_inputs: Vec<String>,
}

pub fn simplify_profile(g: &DecisionGraph) -> (DecisionGraph, SimplifyProfile) {
    let (simplified, report) = eliminate_identity_nodes(g);
    let profile = SimplifyProfile {
        report,
        chains: chain_profile(g),
        placeholder_inputs: detect_placeholder_inputs(g),
    };
    (simplified, profile)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproduceSummary {
    pub models: usize,
    pub load_errors: usize,
    pub testable_models: usize,
    pub total_cases: usize,
    pub records: usize,
    pub produced: usize,
    pub report_files: Vec<String>,
}

/// Relative paths of everything `reproduce` writes under the output directory.
pub mod layout {
    pub const CONFIG: &str = "config.json";
    pub const MANIFEST: &str = "ingest/manifest.json";
    pub const LOAD_ERRORS: &str = "ingest/errors.json";
    pub const COMPACT_DIR: &str = "ingest/compact";
    pub const STATS: &str = "stats.csv";
    pub const SIMPLIFY: &str = "simplify_profile.jsonl";
    pub const TESTABILITY: &str = "testability.csv";
    pub const CASES_DIR: &str = "cases";
    pub const RUNS_DIR: &str = "runs";
    pub const ANALYSIS: &str = "analysis.json";
    pub const REPORT_DIR: &str = "report";
    pub const SUMMARY: &str = "summary.json";
}

pub fn write_analysis(a: &Analysis, path: &Path) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(a).expect("serializable");
    write_file(path, text.as_bytes())
}

/// ingest → stats → simplify profile → test cases → generation →
/// equivalence and analysis → report. `transport` overrides the one implied
/// by `cfg.stub` / `cfg.provider`.
pub fn reproduce(cfg: &PipelineConfig, transport: Option<&dyn Transport>) -> Result<ReproduceSummary, PipelineError> {
    let out = &cfg.out;
    let keywords = load_keywords(cfg.keywords.as_deref())?;
    let provider = match (&cfg.provider, cfg.stub) {
        (_, true) => ProviderConfig::stub(),
        (Some(p), false) => load_provider(p)?,
        (None, false) => {
            return Err(PipelineError::Config(
                "a provider config is required without --stub".into(),
            ))
        }
    };
    write_file(
        &out.join(layout::CONFIG),
        serde_json::to_string_pretty(cfg).expect("serializable").as_bytes(),
    )?;

    let corpus = load_corpus_root(&cfg.corpus, &CorpusOptions::default())?;
    if corpus.bundles.is_empty() {
        return Err(PipelineError::Corpus(format!(
            "no models could be loaded from {}",
            cfg.corpus.display()
        )));
    }
    write_file(&out.join(layout::MANIFEST), manifest_json(&corpus).as_bytes())?;
    write_file(
        &out.join(layout::LOAD_ERRORS),
        serde_json::to_string_pretty(&corpus.errors)
            .expect("serializable")
            .as_bytes(),
    )?;
    for b in &corpus.bundles {
        let p = out.join(layout::COMPACT_DIR).join(format!("{}.json", b.graph.id));
        write_file(&p, serialize_graph_pretty(&b.graph).as_bytes())?;
    }

    let graphs: Vec<&DecisionGraph> = corpus.graphs().collect();
    write_file(&out.join(layout::STATS), stats_csv(&graphs).as_bytes())?;
    write_jsonl(
        &out.join(layout::SIMPLIFY),
        graphs.iter().map(|g| simplify_profile(g).1),
    )?;

    let mut testability = csv::Writer::from_writer(Vec::new());
    testability
        .write_record(["model_id", "model_type", "eligible", "reason", "case_count"])
        .expect("in-memory write");
    let mut testable_models = 0;
    let mut total_cases = 0;
    for g in &graphs {
        let v = assess_testability(g, &cfg.caps);
        let reason = serde_json::to_value(v.reason).expect("serializable");
        testability
            .write_record([
                g.id.as_str(),
                g.model_type.as_str(),
                if v.eligible { "true" } else { "false" },
                reason.as_str().unwrap_or(""),
                &v.case_count.to_string(),
            ])
            .expect("in-memory write");
        if v.eligible {
            let cases = generate_cases(&v.domains);
            testable_models += 1;
            total_cases += cases.len();
            write_jsonl(&out.join(layout::CASES_DIR).join(format!("{}.jsonl", g.id)), &cases)?;
        }
    }
    write_file(
        &out.join(layout::TESTABILITY),
        &testability.into_inner().expect("in-memory flush"),
    )?;

    let opts = ExperimentOptions {
        conditions: cfg.conditions.clone(),
        runs: cfg.runs,
        seed: cfg.seed,
        targets: None,
        limit: None,
        record_timing: !cfg.stub,
    };
    let echo = EchoExampleTransport::default();
    let http;
    let transport: &dyn Transport = match transport {
        Some(t) => t,
        None if cfg.stub => &echo,
        None => {
            http = UreqTransport::new();
            &http
        }
    };
    let runs_dir = out.join(layout::RUNS_DIR);
    let outcome = run_experiment(&corpus.bundles, &opts, &provider, transport, &runs_dir)
        .map_err(|e| PipelineError::io(&runs_dir, e))?;

    let analysis_opts = AnalysisOptions {
        caps: cfg.caps,
        keywords,
        ..AnalysisOptions::default()
    };
    let analysis = analyze(&corpus.bundles, &outcome.records, &analysis_opts);
    write_analysis(&analysis, &out.join(layout::ANALYSIS))?;
    let report_dir = out.join(layout::REPORT_DIR);
    let files = emit_report(&analysis, &analysis_opts, &report_dir).map_err(|e| PipelineError::io(&report_dir, e))?;

    let summary = ReproduceSummary {
        models: corpus.bundles.len(),
        load_errors: corpus.errors.len(),
        testable_models,
        total_cases,
        records: outcome.records.len(),
        produced: outcome.produced,
        report_files: files
            .iter()
            .map(|p| p.strip_prefix(out).unwrap_or(p).display().to_string())
            .collect(),
    };
    write_file(
        &out.join(layout::SUMMARY),
        serde_json::to_string_pretty(&summary).expect("serializable").as_bytes(),
    )?;
    Ok(summary)
}

/// Reads run records from a `runs.jsonl` file or a directory holding one.
pub fn load_records(path: &Path) -> Result<Vec<RunRecord>, PipelineError> {
    let file = if path.is_dir() {
        path.join(crate::genharness::run::RECORDS_FILE)
    } else {
        path.to_path_buf()
    };
    crate::genharness::run::read_records(&file).map_err(|e| PipelineError::io(&file, e))
}

pub fn read_cases(path: &Path) -> Result<Vec<Assignment>, PipelineError> {
    read_jsonl(path)
}
