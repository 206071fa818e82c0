//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analytics::{analyze, emit_report, AnalysisOptions};
use crate::engine::{ExecMode, Executor};
use crate::genharness::provider::{EchoExampleTransport, ProviderConfig, Transport, UreqTransport};
use crate::genharness::{run_experiment, Condition, ExperimentOptions};
use crate::ingest::compact::serialize_graph_pretty;
use crate::ingest::corpus::manifest_json;
use crate::ingest::{load_graph, CorpusOptions};
use crate::model::DecisionGraph;
use crate::outcome::{assess_testability, equivalence_with, generate_cases, TestabilityCaps};
use crate::pipeline::{
    format_number, load_corpus_root, load_keywords, load_provider, load_records, read_cases, reproduce,
    simplify_profile, stats_csv, write_analysis, write_file, write_jsonl, PipelineConfig, PipelineError,
};
use crate::structeval::{graphlet_similarity, sp_similarity_with, GraphletOptions, SpOptions};
use crate::validate::validate_graph;

#[derive(Debug, Parser)]
#[command(
    name = "legaldmn",
    version,
    about = "Decision-model ingestion, execution and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a corpus and write compact graphs plus a manifest.
    Ingest {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a model's structure.
    Validate { model: PathBuf },
    /// Execute a model on each assignment of a line-delimited file.
    Exec {
        model: PathBuf,
        assignments: PathBuf,
        /// Fail on unassigned inputs instead of reading them as null.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remove identity nodes and profile input chains.
    Simplify {
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Descriptive statistics for a model file or a corpus directory.
    Stats {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Similarity of each candidate to a reference model.
    Kernel {
        reference: PathBuf,
        #[arg(required = true)]
        candidates: Vec<PathBuf>,
        /// Shortest paths over the undirected skeleton.
        #[arg(long)]
        undirected: bool,
        /// Seed for graphlet sampling on large graphs.
        #[arg(long, default_value_t = GraphletOptions::default().seed)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate the exhaustive test cases of a model.
    GenCases {
        model: PathBuf,
        #[command(flatten)]
        caps: CapArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a candidate with a gold model over a case file.
    Equivalence {
        gold: PathBuf,
        candidate: PathBuf,
        cases: PathBuf,
        #[arg(long)]
        keywords: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run generation experiments over a corpus.
    Generate {
        corpus: PathBuf,
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Produce at most this many new records.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute similarity, equivalence and effect metrics over run records.
    Analyze {
        corpus: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the CSV report tables.
    Report {
        corpus: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every step end to end.
    Reproduce {
        /// Defaults to the bundled mini-corpus.
        corpus: Option<PathBuf>,
        #[command(flatten)]
        exp: ExperimentArgs,
        #[command(flatten)]
        caps: CapArgs,
        #[arg(long)]
        keywords: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct CapArgs {
    #[arg(long, default_value_t = TestabilityCaps::default().outcome_max_boolean_inputs)]
    pub max_boolean_inputs: usize,
    #[arg(long, default_value_t = TestabilityCaps::default().requirements_max_cases)]
    pub max_cases: u64,
}

impl CapArgs {
    fn caps(&self) -> TestabilityCaps {
        TestabilityCaps {
            outcome_max_boolean_inputs: self.max_boolean_inputs,
            requirements_max_cases: self.max_cases,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Comma-separated, e.g. `text,text+srl,text+io,text+srl+io`.
    #[arg(long, value_delimiter = ',', default_values_t = Condition::ALL.map(|c| c.as_str().to_owned()))]
    pub conditions: Vec<String>,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Provider configuration (JSON).
    #[arg(long, conflicts_with = "stub")]
    pub provider: Option<PathBuf>,
    /// Answer every request with the example graph instead of calling a provider.
    #[arg(long)]
    pub stub: bool,
}

impl ExperimentArgs {
    fn conditions(&self) -> Result<Vec<Condition>, CliError> {
        self.conditions
            .iter()
            .map(|c| {
                c.parse::<Condition>()
                    .map_err(|_| CliError::Usage(format!("unknown condition `{c}`")))
            })
            .collect()
    }
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    /// `runs.jsonl` or the directory holding it.
    #[arg(long)]
    pub records: PathBuf,
    #[command(flatten)]
    pub caps: CapArgs,
    #[arg(long)]
    pub keywords: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn read_model(path: &Path) -> Result<DecisionGraph, CliError> {
    if !path.is_file() {
        return Err(CliError::Data(format!("{}: no such file", path.display())));
    }
    load_graph(path, &CorpusOptions::default()).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<(), CliError> {
    match out {
        Some(dir) => Ok(write_file(&dir.join(name), text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn make_transport(stub: bool) -> Box<dyn Transport> {
    if stub {
        Box::new(EchoExampleTransport::default())
    } else {
        Box::new(UreqTransport::new())
    }
}

fn provider_for(exp: &ExperimentArgs) -> Result<ProviderConfig, CliError> {
    match (&exp.provider, exp.stub) {
        (_, true) => Ok(ProviderConfig::stub()),
        (Some(p), false) => Ok(load_provider(p)?),
        (None, false) => Err(CliError::Usage("either --provider <file> or --stub is required".into())),
    }
}

fn bundled_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join("mini_corpus")
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest { corpus, out } => {
            let c = load_corpus_root(&corpus, &CorpusOptions::default())?;
            write_file(&out.join("manifest.json"), manifest_json(&c).as_bytes())?;
            write_file(
                &out.join("errors.json"),
                serde_json::to_string_pretty(&c.errors)
                    .expect("serializable")
                    .as_bytes(),
            )?;
            for b in &c.bundles {
                write_file(
                    &out.join("compact").join(format!("{}.json", b.graph.id)),
                    serialize_graph_pretty(&b.graph).as_bytes(),
                )?;
            }
            for w in &c.warnings {
                eprintln!("warning: {w}");
            }
            for e in &c.errors {
                eprintln!("error: {}: {}", e.path, e.message);
            }
            println!("{} models loaded, {} files failed", c.bundles.len(), c.errors.len());
            if c.bundles.is_empty() {
                return Err(CliError::Data("no models loaded".into()));
            }
            Ok(())
        }
        Command::Validate { model } => {
            let g = read_model(&model)?;
            let report = validate_graph(&g);
            if report.is_ok() {
                println!("{}: ok", g.id);
                Ok(())
            } else {
                Err(CliError::Data(format!("{}: {report}", g.id)))
            }
        }
        Command::Exec {
            model,
            assignments,
            strict,
            out,
        } => {
            let g = read_model(&model)?;
            let cases = read_cases(&assignments)?;
            let executor = Executor::new(&g).map_err(|e| CliError::Data(e.to_string()))?;
            let mode = if strict { ExecMode::Strict } else { ExecMode::Permissive };
            let mut lines = String::new();
            for (i, case) in cases.iter().enumerate() {
                let result = executor
                    .execute(case, mode)
                    .map_err(|e| CliError::Data(format!("case {}: {e}", i + 1)))?;
                let doc = serde_json::json!({"case": i, "result": result});
                lines.push_str(&doc.to_string());
                lines.push('\n');
            }
            emit(out.as_deref(), &format!("{}.results.jsonl", g.id), &lines)
        }
        Command::Simplify { model, out } => {
            let g = read_model(&model)?;
            let (simplified, profile) = simplify_profile(&g);
            write_file(
                &out.join(format!("{}.simplified.json", g.id)),
                serialize_graph_pretty(&simplified).as_bytes(),
            )?;
            write_file(
                &out.join(format!("{}.simplify_report.json", g.id)),
                serde_json::to_string_pretty(&profile).expect("serializable").as_bytes(),
            )?;
            println!(
                "{}: removed {} of {} nodes",
                g.id,
                profile.report.removed_node_ids.len(),
                profile.report.nodes_before
            );
            Ok(())
        }
        Command::Stats { path, out } => {
            let text = if path.is_dir() {
                let c = load_corpus_root(&path, &CorpusOptions::default())?;
                for e in &c.errors {
                    eprintln!("error: {}: {}", e.path, e.message);
                }
                stats_csv(&c.graphs().collect::<Vec<_>>())
            } else {
                stats_csv(&[&read_model(&path)?])
            };
            emit(out.as_deref(), "stats.csv", &text)
        }
        Command::Kernel {
            reference,
            candidates,
            undirected,
            seed,
            out,
        } => {
            let r = read_model(&reference)?;
            let sp_opts = SpOptions { directed: !undirected };
            let gl_opts = GraphletOptions {
                seed,
                ..GraphletOptions::default()
            };
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["model_id", "metric", "value"])
                .expect("in-memory write");
            for c in &candidates {
                let g = read_model(c)?;
                let sp = sp_similarity_with(&g, &r, sp_opts);
                let gl = graphlet_similarity(&g, &r, &gl_opts).map_err(|e| CliError::Usage(e.to_string()))?;
                w.write_record([g.id.as_str(), "sp", &format_number(sp)])
                    .expect("in-memory write");
                w.write_record([g.id.as_str(), "graphlet", &format_number(gl)])
                    .expect("in-memory write");
            }
            let text = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
            emit(out.as_deref(), "kernel.csv", &text)
        }
        Command::GenCases { model, caps, out } => {
            let g = read_model(&model)?;
            let v = assess_testability(&g, &caps.caps());
            if !v.eligible {
                return Err(CliError::Data(format!(
                    "{} is not testable ({:?}; {} combinations; unsupported inputs: {})",
                    g.id,
                    v.reason,
                    v.case_count,
                    v.unsupported_inputs.join(", ")
                )));
            }
            let cases = generate_cases(&v.domains);
            write_jsonl(&out.join(format!("{}.cases.jsonl", g.id)), &cases)?;
            println!("{}: {} cases", g.id, cases.len());
            Ok(())
        }
        Command::Equivalence {
            gold,
            candidate,
            cases,
            keywords,
            out,
        } => {
            let g = read_model(&gold)?;
            let cand = read_model(&candidate)?;
            let cases = read_cases(&cases)?;
            let kw = load_keywords(keywords.as_deref())?;
            let r = equivalence_with(&g, &cand, &cases, &kw);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["model_id", "case_count", "agree_count", "rate", "candidate_valid"])
                .expect("in-memory write");
            w.write_record([
                r.model_id.as_str(),
                &r.case_count.to_string(),
                &r.agree_count.to_string(),
                &format!("{:.6}", r.rate),
                &r.candidate_valid.to_string(),
            ])
            .expect("in-memory write");
            let summary = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
            match out {
                Some(dir) => {
                    write_jsonl(&dir.join(format!("{}.equivalence.jsonl", g.id)), &r.verdicts)?;
                    write_file(&dir.join("equivalence_summary.csv"), summary.as_bytes())?;
                }
                None => print!("{summary}"),
            }
            if let Some(e) = &r.candidate_error {
                eprintln!("warning: candidate is invalid: {e}");
            }
            Ok(())
        }
        Command::Generate {
            corpus,
            exp,
            limit,
            out,
        } => {
            let conditions = exp.conditions()?;
            let provider = provider_for(&exp)?;
            let c = load_corpus_root(&corpus, &CorpusOptions::default())?;
            let opts = ExperimentOptions {
                conditions,
                runs: exp.runs,
                seed: exp.seed,
                targets: None,
                limit,
                record_timing: !exp.stub,
            };
            let transport = make_transport(exp.stub);
            let outcome = run_experiment(&c.bundles, &opts, &provider, transport.as_ref(), &out)
                .map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
            println!(
                "{} records ({} new, {} already present)",
                outcome.records.len(),
                outcome.produced,
                outcome.skipped
            );
            Ok(())
        }
        Command::Analyze { corpus, analysis, out } => {
            let (a, _) = run_analysis(&corpus, &analysis)?;
            write_analysis(&a, &out.join("analysis.json"))?;
            Ok(())
        }
        Command::Report { corpus, analysis, out } => {
            let (a, opts) = run_analysis(&corpus, &analysis)?;
            let files = emit_report(&a, &opts, &out).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Reproduce {
            corpus,
            exp,
            caps,
            keywords,
            strict,
            out,
        } => {
            let conditions = exp.conditions()?;
            if exp.provider.is_none() && !exp.stub {
                return Err(CliError::Usage("either --provider <file> or --stub is required".into()));
            }
            let cfg = PipelineConfig {
                corpus: corpus.unwrap_or_else(bundled_corpus),
                out,
                seed: exp.seed,
                conditions,
                runs: exp.runs,
                caps: caps.caps(),
                provider: exp.provider.clone(),
                keywords,
                mode: if strict { ExecMode::Strict } else { ExecMode::Permissive },
                stub: exp.stub,
            };
            let summary = reproduce(&cfg, None)?;
            println!(
                "{} models, {} testable ({} cases), {} run records; {} report files",
                summary.models,
                summary.testable_models,
                summary.total_cases,
                summary.records,
                summary.report_files.len()
            );
            Ok(())
        }
    }
}

fn run_analysis(corpus: &Path, args: &AnalysisArgs) -> Result<(crate::analytics::Analysis, AnalysisOptions), CliError> {
    let c = load_corpus_root(corpus, &CorpusOptions::default())?;
    let records = load_records(&args.records)?;
    let opts = AnalysisOptions {
        caps: args.caps.caps(),
        keywords: load_keywords(args.keywords.as_deref())?,
        ..AnalysisOptions::default()
    };
    Ok((analyze(&c.bundles, &records, &opts), opts))
}
