//! How the one-shot example relates to the generation.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::stats::{spearman, StatResult};
use crate::genharness::{Condition, RunRecord};
use crate::model::{DecisionGraph, ModelType};
use crate::structeval::mean_std;
use crate::structeval::{normalized_kernel, sp_features, KernelFeatures};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleEffectRow {
    pub target_model_id: String,
    pub model_type: ModelType,
    pub condition: Condition,
    pub run_index: usize,
    pub example_model_id: String,
    /// Example vs gold target.
    pub ex_sim: f64,
    /// Generation vs gold target; `None` for failed generations.
    pub gen_sim: Option<f64>,
    /// Mean pairwise similarity among the target's run examples.
    pub ex_con: f64,
    /// Population standard deviation of `gen_sim` over the target's parsed
    /// runs in this condition; `None` with fewer than two.
    pub gen_var: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionEffects {
    pub condition: Condition,
    pub ex_sim_gen_sim: Option<StatResult>,
    pub ex_con_gen_var: Option<StatResult>,
    pub failed_generations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleEffects {
    pub rows: Vec<ExampleEffectRow>,
    pub by_condition: Vec<ConditionEffects>,
}

/// Caches SP features per graph id.
pub struct SpCache<'a> {
    graphs: &'a BTreeMap<String, DecisionGraph>,
    features: HashMap<String, KernelFeatures>,
}

impl<'a> SpCache<'a> {
    pub fn new(graphs: &'a BTreeMap<String, DecisionGraph>) -> SpCache<'a> {
        SpCache {
            graphs,
            features: HashMap::new(),
        }
    }

    pub fn features(&mut self, id: &str) -> Option<&KernelFeatures> {
        if !self.features.contains_key(id) {
            let g = self.graphs.get(id)?;
            self.features.insert(id.to_owned(), sp_features(g));
        }
        self.features.get(id)
    }

    pub fn similarity(&mut self, a: &str, b: &str) -> Option<f64> {
        let fa = self.features(a)?.clone();
        let fb = self.features(b)?;
        Some(normalized_kernel(&fa, fb))
    }
}

/// One row per record whose example and target are known gold models.
pub fn example_effect_metrics(records: &[RunRecord], gold: &BTreeMap<String, DecisionGraph>) -> ExampleEffects {
    let mut cache = SpCache::new(gold);

    // Examples per target, by run index; identical across conditions.
    let mut examples: BTreeMap<&str, BTreeMap<usize, &str>> = BTreeMap::new();
    for r in records {
        if let Some(e) = &r.example_model_id {
            examples
                .entry(r.target_model_id.as_str())
                .or_default()
                .insert(r.run_index, e.as_str());
        }
    }
    let mut ex_con: BTreeMap<&str, f64> = BTreeMap::new();
    for (target, runs) in &examples {
        let ids: Vec<&str> = runs.values().copied().collect();
        let mut sims = Vec::new();
        for i in 0..ids.len() {
            for j in (i + 1)..ids.len() {
                if let Some(s) = cache.similarity(ids[i], ids[j]) {
                    sims.push(s);
                }
            }
        }
        ex_con.insert(
            target,
            if sims.is_empty() {
                1.0
            } else {
                sims.iter().sum::<f64>() / sims.len() as f64
            },
        );
    }

    let mut rows = Vec::new();
    for r in records {
        let Some(example) = &r.example_model_id else { continue };
        let Some(target) = gold.get(&r.target_model_id) else {
            continue;
        };
        let Some(ex_sim) = cache.similarity(example, &r.target_model_id) else {
            continue;
        };
        let target_features = cache.features(&r.target_model_id).expect("target is gold").clone();
        let gen_sim = r.graph().map(|g| normalized_kernel(&sp_features(&g), &target_features));
        rows.push(ExampleEffectRow {
            target_model_id: r.target_model_id.clone(),
            model_type: target.model_type,
            condition: r.condition,
            run_index: r.run_index,
            example_model_id: example.clone(),
            ex_sim,
            gen_sim,
            ex_con: ex_con.get(r.target_model_id.as_str()).copied().unwrap_or(1.0),
            gen_var: None,
        });
    }

    let mut per_group: BTreeMap<(String, Condition), Vec<f64>> = BTreeMap::new();
    for row in &rows {
        if let Some(s) = row.gen_sim {
            per_group
                .entry((row.target_model_id.clone(), row.condition))
                .or_default()
                .push(s);
        }
    }
    let gen_var: BTreeMap<(String, Condition), f64> = per_group
        .iter()
        .filter(|(_, v)| v.len() >= 2)
        .map(|(k, v)| (k.clone(), mean_std(v).1))
        .collect();
    for row in &mut rows {
        row.gen_var = gen_var.get(&(row.target_model_id.clone(), row.condition)).copied();
    }

    let mut conditions: Vec<Condition> = rows.iter().map(|r| r.condition).collect();
    conditions.sort();
    conditions.dedup();
    let by_condition = conditions
        .into_iter()
        .map(|c| {
            let in_c: Vec<&ExampleEffectRow> = rows.iter().filter(|r| r.condition == c).collect();
            let (xs, ys): (Vec<f64>, Vec<f64>) = in_c.iter().filter_map(|r| r.gen_sim.map(|g| (r.ex_sim, g))).unzip();
            let mut per_target: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
            for r in &in_c {
                if let Some(v) = r.gen_var {
                    per_target.insert(r.target_model_id.as_str(), (r.ex_con, v));
                }
            }
            let (cx, cy): (Vec<f64>, Vec<f64>) = per_target.values().copied().unzip();
            ConditionEffects {
                condition: c,
                ex_sim_gen_sim: spearman(&xs, &ys).ok(),
                ex_con_gen_var: spearman(&cx, &cy).ok(),
                failed_generations: in_c.iter().filter(|r| r.gen_sim.is_none()).count(),
            }
        })
        .collect();
    ExampleEffects { rows, by_condition }
}
