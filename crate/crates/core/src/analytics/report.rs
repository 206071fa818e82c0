//! Corpus-wide analysis and CSV report emission.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::effects::{example_effect_metrics, ExampleEffects};
use super::stats::{wilcoxon_signed_rank, StatResult};
use super::text::{tertile_table, text_features, TertileRow, TextFeature, TextFeatures};
use crate::genharness::{Condition, RunRecord, Validity};
use crate::ingest::ModelBundle;
use crate::model::{DecisionGraph, ModelType};
use crate::outcome::{
    assess_testability, equivalence_with, generate_cases, OutcomeKeywords, TestabilityCaps, TestabilityVerdict,
};
use crate::simplify::{detect_placeholder_inputs, eliminate_identity_nodes};
use crate::structeval::{descriptive_stats, mean_std, GraphStats};
use crate::structeval::{graphlet_similarity, sp_similarity, GraphletOptions};

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub caps: TestabilityCaps,
    pub keywords: OutcomeKeywords,
    pub graphlet: GraphletOptions,
    /// Feature used for the cross-reference tertiles.
    pub cross_reference_feature: TextFeature,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            caps: TestabilityCaps::default(),
            keywords: OutcomeKeywords::default(),
            graphlet: GraphletOptions::default(),
            cross_reference_feature: TextFeature::ExternalReferences,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldModelRow {
    pub model_id: String,
    pub model_type: ModelType,
    pub stats: GraphStats,
    pub identity_fraction: f64,
    pub identity_fraction_all_nodes: f64,
    pub testable: bool,
    pub case_count: u64,
    pub placeholder_inputs: Vec<String>,
    pub text: Option<TextFeatures>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityRow {
    pub target_model_id: String,
    pub model_type: ModelType,
    pub condition: Condition,
    pub run_index: usize,
    pub validity: Validity,
    pub sp: Option<f64>,
    pub graphlet: Option<f64>,
    pub stats: Option<GraphStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceRow {
    pub target_model_id: String,
    pub model_type: ModelType,
    pub condition: Condition,
    pub run_index: usize,
    pub case_count: usize,
    pub agree_count: usize,
    /// 0 for failed or invalid generations.
    pub rate: f64,
    pub candidate_valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub gold: Vec<GoldModelRow>,
    pub similarity: Vec<SimilarityRow>,
    pub equivalence: Vec<EquivalenceRow>,
    pub effects: ExampleEffects,
    pub conditions: Vec<Condition>,
}

pub fn analyze(bundles: &[ModelBundle], records: &[RunRecord], opts: &AnalysisOptions) -> Analysis {
    let gold_graphs: BTreeMap<String, DecisionGraph> =
        bundles.iter().map(|b| (b.graph.id.clone(), b.graph.clone())).collect();

    let verdicts: BTreeMap<String, TestabilityVerdict> = bundles
        .iter()
        .map(|b| (b.graph.id.clone(), assess_testability(&b.graph, &opts.caps)))
        .collect();

    let mut gold: Vec<GoldModelRow> = bundles
        .par_iter()
        .map(|b| {
            let (_, report) = eliminate_identity_nodes(&b.graph);
            let v = &verdicts[&b.graph.id];
            GoldModelRow {
                model_id: b.graph.id.clone(),
                model_type: b.graph.model_type,
                stats: descriptive_stats(&b.graph),
                identity_fraction: report.identity_fraction_before,
                identity_fraction_all_nodes: report.identity_fraction_all_nodes,
                testable: v.eligible,
                case_count: if v.eligible { v.case_count } else { 0 },
                placeholder_inputs: detect_placeholder_inputs(&b.graph),
                text: (!b.articles.is_empty()).then(|| text_features(&b.articles)),
            }
        })
        .collect();
    gold.sort_by(|a, b| a.model_id.cmp(&b.model_id));

    let similarity: Vec<SimilarityRow> = records
        .par_iter()
        .filter_map(|r| {
            let target = gold_graphs.get(&r.target_model_id)?;
            let generated = r.graph();
            Some(SimilarityRow {
                target_model_id: r.target_model_id.clone(),
                model_type: target.model_type,
                condition: r.condition,
                run_index: r.run_index,
                validity: r.validity,
                sp: generated.as_ref().map(|g| sp_similarity(g, target)),
                graphlet: generated
                    .as_ref()
                    .and_then(|g| graphlet_similarity(g, target, &opts.graphlet).ok()),
                stats: generated.as_ref().map(descriptive_stats),
            })
        })
        .collect();

    let cases: BTreeMap<&str, Vec<crate::engine::Assignment>> = verdicts
        .iter()
        .filter(|(_, v)| v.eligible)
        .map(|(id, v)| (id.as_str(), generate_cases(&v.domains)))
        .collect();
    let equivalence: Vec<EquivalenceRow> = records
        .par_iter()
        .filter_map(|r| {
            let target_cases = cases.get(r.target_model_id.as_str())?;
            let gold_graph = &gold_graphs[&r.target_model_id];
            let (case_count, agree_count, rate, valid) = match r.graph() {
                Some(candidate) => {
                    let e = equivalence_with(gold_graph, &candidate, target_cases, &opts.keywords);
                    (e.case_count, e.agree_count, e.rate, e.candidate_valid)
                }
                None => (target_cases.len(), 0, 0.0, false),
            };
            Some(EquivalenceRow {
                target_model_id: r.target_model_id.clone(),
                model_type: gold_graph.model_type,
                condition: r.condition,
                run_index: r.run_index,
                case_count,
                agree_count,
                rate,
                candidate_valid: valid,
            })
        })
        .collect();

    let mut conditions: Vec<Condition> = records.iter().map(|r| r.condition).collect();
    conditions.sort();
    conditions.dedup();

    Analysis {
        gold,
        similarity,
        equivalence,
        effects: example_effect_metrics(records, &gold_graphs),
        conditions,
    }
}

fn f(x: f64) -> String {
    format!("{x:.6}")
}

fn opt(x: Option<f64>) -> String {
    x.map(f).unwrap_or_else(|| "NA".to_owned())
}

const TYPES: [ModelType; 2] = [ModelType::Outcome, ModelType::Requirements];

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Table {
        Table {
            header: header.iter().map(|h| (*h).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn write(&self, path: &Path) -> io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()
    }
}

/// Per target, the mean of `value` over its rows; targets without values are left out.
fn per_target_mean<'a, T: 'a>(
    rows: impl Iterator<Item = &'a T>,
    key: impl Fn(&T) -> &str,
    value: impl Fn(&T) -> Option<f64>,
) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in rows {
        if let Some(v) = value(r) {
            acc.entry(key(r).to_owned()).or_default().push(v);
        }
    }
    acc.into_iter()
        .map(|(k, v)| (k, v.iter().sum::<f64>() / v.len() as f64))
        .collect()
}

fn table1(a: &Analysis) -> Table {
    let metrics: [Metric<GoldModelRow>; 7] = [
        ("nodes", |g| g.stats.nodes as f64),
        ("edges", |g| g.stats.edges as f64),
        ("ext_vars", |g| g.stats.input_nodes as f64),
        ("ext_vars_referenced", |g| g.stats.referenced_input_nodes as f64),
        ("rules", |g| g.stats.total_rules as f64),
        ("identity_fraction", |g| g.identity_fraction),
        ("identity_fraction_all_nodes", |g| g.identity_fraction_all_nodes),
    ];
    let mut header = vec!["type", "n"];
    let names: Vec<String> = metrics
        .iter()
        .flat_map(|(m, _)| [format!("{m}_mean"), format!("{m}_sd")])
        .collect();
    header.extend(names.iter().map(String::as_str));
    header.extend(["testable", "cases", "testable_with_placeholder"]);
    let mut t = Table::new(&header);
    let groups: Vec<(String, Vec<&GoldModelRow>)> = TYPES
        .iter()
        .map(|ty| {
            (
                ty.as_str().to_owned(),
                a.gold.iter().filter(|g| g.model_type == *ty).collect(),
            )
        })
        .chain(std::iter::once(("Overall".to_owned(), a.gold.iter().collect())))
        .collect();
    for (name, rows) in groups {
        let mut row = vec![name, rows.len().to_string()];
        for (_, get) in &metrics {
            let xs: Vec<f64> = rows.iter().map(|g| get(g)).collect();
            let (m, sd) = mean_std(&xs);
            row.push(f(m));
            row.push(f(sd));
        }
        let testable: Vec<&&GoldModelRow> = rows.iter().filter(|g| g.testable).collect();
        row.push(testable.len().to_string());
        row.push(testable.iter().map(|g| g.case_count).sum::<u64>().to_string());
        row.push(
            testable
                .iter()
                .filter(|g| !g.placeholder_inputs.is_empty())
                .count()
                .to_string(),
        );
        t.push(row);
    }
    t
}

fn similarity_by_target(a: &Analysis, ty: ModelType, c: Condition, graphlet: bool) -> BTreeMap<String, f64> {
    per_target_mean(
        a.similarity.iter().filter(|s| s.model_type == ty && s.condition == c),
        |s| &s.target_model_id,
        |s| if graphlet { s.graphlet } else { s.sp },
    )
}

fn table2(a: &Analysis) -> Table {
    let mut t = Table::new(&[
        "condition",
        "type",
        "targets",
        "runs",
        "parsed_runs",
        "sp_mean",
        "sp_sd",
        "graphlet_mean",
        "graphlet_sd",
    ]);
    for &c in &a.conditions {
        for ty in TYPES {
            let runs: Vec<&SimilarityRow> = a
                .similarity
                .iter()
                .filter(|s| s.model_type == ty && s.condition == c)
                .collect();
            let sp: Vec<f64> = similarity_by_target(a, ty, c, false).into_values().collect();
            let gl: Vec<f64> = similarity_by_target(a, ty, c, true).into_values().collect();
            let summary = |xs: &[f64]| {
                if xs.is_empty() {
                    (None, None)
                } else {
                    let (m, s) = mean_std(xs);
                    (Some(m), Some(s))
                }
            };
            let (spm, sps) = summary(&sp);
            let (glm, gls) = summary(&gl);
            t.push(vec![
                c.as_str().to_owned(),
                ty.as_str().to_owned(),
                sp.len().to_string(),
                runs.len().to_string(),
                runs.iter().filter(|s| s.sp.is_some()).count().to_string(),
                opt(spm),
                opt(sps),
                opt(glm),
                opt(gls),
            ]);
        }
    }
    t
}

pub const CONDITION_COMPARISONS: [(Condition, Condition); 3] = [
    (Condition::Text, Condition::TextSrl),
    (Condition::Text, Condition::TextIo),
    (Condition::TextIo, Condition::TextSrlIo),
];

/// Wilcoxon tests on per-target SP means, paired by target.
pub fn condition_tests(a: &Analysis) -> Vec<(ModelType, Condition, Condition, Option<StatResult>)> {
    let mut out = Vec::new();
    for ty in TYPES {
        for (c1, c2) in CONDITION_COMPARISONS {
            let m1 = similarity_by_target(a, ty, c1, false);
            let m2 = similarity_by_target(a, ty, c2, false);
            let (x, y): (Vec<f64>, Vec<f64>) = m1.iter().filter_map(|(k, v)| m2.get(k).map(|w| (*v, *w))).unzip();
            out.push((ty, c1, c2, wilcoxon_signed_rank(&x, &y).ok()));
        }
    }
    out
}

fn table2_tests(a: &Analysis) -> Table {
    let mut t = Table::new(&[
        "type",
        "condition_a",
        "condition_b",
        "n",
        "statistic",
        "p_value",
        "method",
    ]);
    for (ty, c1, c2, r) in condition_tests(a) {
        let (n, stat, p, method) = match &r {
            Some(r) => (
                r.n.to_string(),
                opt(r.statistic),
                opt(r.p_value),
                format!("{:?}", r.method),
            ),
            None => ("0".into(), "NA".into(), "NA".into(), "NA".into()),
        };
        t.push(vec![
            ty.as_str().into(),
            c1.as_str().into(),
            c2.as_str().into(),
            n,
            stat,
            p,
            method,
        ]);
    }
    t
}

type Metric<T> = (&'static str, fn(&T) -> f64);

const TABLE3_METRICS: [Metric<GraphStats>; 8] = [
    ("nodes", |s| s.nodes as f64),
    ("edges", |s| s.edges as f64),
    ("input_nodes", |s| s.input_nodes as f64),
    ("rules", |s| s.total_rules as f64),
    ("rules_per_node", |s| s.rules_per_decision_node),
    ("inputs_per_rule", |s| s.inputs_per_rule),
    ("depth", |s| s.depth as f64),
    ("max_width", |s| s.max_width as f64),
];

fn table3(a: &Analysis) -> Table {
    let mut header = vec!["type".to_owned(), "metric".to_owned(), "gold".to_owned()];
    header.extend(a.conditions.iter().map(|c| c.as_str().to_owned()));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&header_refs);
    for ty in TYPES {
        for (name, get) in TABLE3_METRICS {
            let gold: Vec<f64> = a
                .gold
                .iter()
                .filter(|g| g.model_type == ty)
                .map(|g| get(&g.stats))
                .collect();
            let mut row = vec![
                ty.as_str().to_owned(),
                name.to_owned(),
                opt((!gold.is_empty()).then(|| mean_std(&gold).0)),
            ];
            for &c in &a.conditions {
                let per_target: Vec<f64> = per_target_mean(
                    a.similarity.iter().filter(|s| s.model_type == ty && s.condition == c),
                    |s| &s.target_model_id,
                    |s| s.stats.as_ref().map(get),
                )
                .into_values()
                .collect();
                row.push(opt((!per_target.is_empty()).then(|| mean_std(&per_target).0)));
            }
            t.push(row);
        }
    }
    t
}

/// Per-model mean equivalence over runs, per condition and type.
pub fn equivalence_by_model(a: &Analysis, ty: Option<ModelType>, c: Condition) -> BTreeMap<String, f64> {
    per_target_mean(
        a.equivalence
            .iter()
            .filter(|e| e.condition == c && ty.is_none_or(|t| e.model_type == t)),
        |e| &e.target_model_id,
        |e| Some(e.rate),
    )
}

fn table4(a: &Analysis) -> Table {
    let mut t = Table::new(&[
        "type",
        "condition",
        "models",
        "cases",
        "macro_average",
        "full_equivalence_models",
    ]);
    let groups: [(&str, Option<ModelType>); 3] = [
        ("Outcome", Some(ModelType::Outcome)),
        ("Requirements", Some(ModelType::Requirements)),
        ("Combined", None),
    ];
    for (name, ty) in groups {
        for &c in &a.conditions {
            let per_model = equivalence_by_model(a, ty, c);
            let cases: u64 = a
                .gold
                .iter()
                .filter(|g| g.testable && ty.is_none_or(|t| g.model_type == t) && per_model.contains_key(&g.model_id))
                .map(|g| g.case_count)
                .sum();
            let rates: Vec<f64> = per_model.values().copied().collect();
            t.push(vec![
                name.to_owned(),
                c.as_str().to_owned(),
                rates.len().to_string(),
                cases.to_string(),
                opt(crate::outcome::macro_average_rates(rates.iter().copied())),
                rates.iter().filter(|r| **r == 1.0).count().to_string(),
            ]);
        }
    }
    t
}

fn table5(a: &Analysis, opts: &AnalysisOptions) -> Table {
    let mut t = Table::new(&[
        "feature",
        "type",
        "level",
        "models",
        "feature_min",
        "feature_max",
        "mean_sp",
    ]);
    // Mean SP per target over every parsed generation.
    let sp = per_target_mean(a.similarity.iter(), |s| &s.target_model_id, |s| s.sp);
    let features = [
        TextFeature::AvgSentenceLength,
        TextFeature::RecitalLength,
        opts.cross_reference_feature,
        TextFeature::ListItems,
    ];
    for feature in features {
        for ty in TYPES {
            let pairs: Vec<(f64, f64)> = a
                .gold
                .iter()
                .filter(|g| g.model_type == ty)
                .filter_map(|g| Some((feature.value(g.text.as_ref()?), *sp.get(&g.model_id)?)))
                .collect();
            match tertile_table(&pairs) {
                Ok(rows) => {
                    for TertileRow {
                        level,
                        count,
                        feature_min,
                        feature_max,
                        mean_similarity,
                    } in rows
                    {
                        t.push(vec![
                            feature.name().into(),
                            ty.as_str().into(),
                            level.into(),
                            count.to_string(),
                            f(feature_min),
                            f(feature_max),
                            f(mean_similarity),
                        ]);
                    }
                }
                Err(_) => {
                    for level in ["Low", "Medium", "High"] {
                        t.push(vec![
                            feature.name().into(),
                            ty.as_str().into(),
                            level.into(),
                            pairs.len().to_string(),
                            "NA".into(),
                            "NA".into(),
                            "NA".into(),
                        ]);
                    }
                }
            }
        }
    }
    t
}

fn table6(a: &Analysis) -> Table {
    let mut t = Table::new(&[
        "condition",
        "exsim_gensim_n",
        "exsim_gensim_rho",
        "exsim_gensim_p",
        "excon_genvar_n",
        "excon_genvar_rho",
        "excon_genvar_p",
        "failed_generations",
    ]);
    for c in &a.effects.by_condition {
        let cells = |r: &Option<StatResult>| match r {
            Some(r) => [r.n.to_string(), opt(r.statistic), opt(r.p_value)],
            None => ["0".into(), "NA".into(), "NA".into()],
        };
        let mut row = vec![c.condition.as_str().to_owned()];
        row.extend(cells(&c.ex_sim_gen_sim));
        row.extend(cells(&c.ex_con_gen_var));
        row.push(c.failed_generations.to_string());
        t.push(row);
    }
    t
}

fn run_health(a: &Analysis) -> Table {
    let mut t = Table::new(&[
        "condition",
        "records",
        "parsed",
        "schema_error",
        "validation_error",
        "provider_error",
        "failure_rate",
    ]);
    for &c in &a.conditions {
        let rows: Vec<&SimilarityRow> = a.similarity.iter().filter(|s| s.condition == c).collect();
        let count = |v: Validity| rows.iter().filter(|s| s.validity == v).count();
        let parsed = count(Validity::Parsed);
        t.push(vec![
            c.as_str().into(),
            rows.len().to_string(),
            parsed.to_string(),
            count(Validity::SchemaError).to_string(),
            count(Validity::ValidationError).to_string(),
            count(Validity::ProviderError).to_string(),
            opt((!rows.is_empty()).then(|| 1.0 - parsed as f64 / rows.len() as f64)),
        ]);
    }
    t
}

pub const REPORT_FILES: [&str; 8] = [
    "table1_gold_stats.csv",
    "table2_similarity.csv",
    "table2_condition_tests.csv",
    "table3_descriptive.csv",
    "table4_equivalence.csv",
    "table5_tertiles.csv",
    "table6_example_effects.csv",
    "run_health.csv",
];

/// Writes every report file into `out_dir` and returns their paths.
pub fn emit_report(a: &Analysis, opts: &AnalysisOptions, out_dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let tables = [
        table1(a),
        table2(a),
        table2_tests(a),
        table3(a),
        table4(a),
        table5(a, opts),
        table6(a),
        run_health(a),
    ];
    let mut paths = Vec::new();
    for (name, table) in REPORT_FILES.iter().zip(tables) {
        let p = out_dir.join(name);
        table.write(&p)?;
        paths.push(p);
    }
    Ok(paths)
}

/// Ids of gold models that pass testability.
pub fn testable_ids(a: &Analysis) -> BTreeSet<&str> {
    a.gold
        .iter()
        .filter(|g| g.testable)
        .map(|g| g.model_id.as_str())
        .collect()
}
