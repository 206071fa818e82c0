//! Descriptive graph statistics and per-type aggregation.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use crate::model::{DecisionGraph, ModelType, NodeKind};
use crate::validate::topological_order;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    /// All input variables.
    pub input_nodes: usize,
    /// Input variables read by at least one table.
    pub referenced_input_nodes: usize,
    pub decision_nodes: usize,
    pub total_rules: usize,
    /// Rules over nodes carrying a table (decisions and the output).
    pub rules_per_decision_node: f64,
    /// Non-irrelevant conditions per rule, averaged over all rules.
    pub inputs_per_rule: f64,
    /// Fraction of rules with exactly one non-irrelevant condition.
    pub single_condition_rule_fraction: f64,
    pub mean_in_degree: f64,
    pub density: f64,
    /// Longest directed path, counted in nodes.
    pub depth: usize,
    /// Longest directed path, counted in edges.
    pub depth_edges: usize,
    /// Largest number of nodes sharing a longest-distance-from-source level.
    pub max_width: usize,
}

/// Names of the metrics in [`GraphStats::metrics`] order.
pub const METRIC_NAMES: [&str; 14] = [
    "nodes",
    "edges",
    "input_nodes",
    "referenced_input_nodes",
    "decision_nodes",
    "total_rules",
    "rules_per_decision_node",
    "inputs_per_rule",
    "single_condition_rule_fraction",
    "mean_in_degree",
    "density",
    "depth",
    "depth_edges",
    "max_width",
];

impl GraphStats {
    pub fn metrics(&self) -> [f64; 14] {
        [
            self.nodes as f64,
            self.edges as f64,
            self.input_nodes as f64,
            self.referenced_input_nodes as f64,
            self.decision_nodes as f64,
            self.total_rules as f64,
            self.rules_per_decision_node,
            self.inputs_per_rule,
            self.single_condition_rule_fraction,
            self.mean_in_degree,
            self.density,
            self.depth as f64,
            self.depth_edges as f64,
            self.max_width as f64,
        ]
    }
}

pub fn descriptive_stats(g: &DecisionGraph) -> GraphStats {
    let n = g.nodes.len();
    let e = g.edges.len();
    let input_nodes = g.inputs().count();
    let referenced: HashSet<&str> = g
        .tables()
        .flat_map(|(_, t)| t.input_refs.iter().map(String::as_str))
        .collect();
    let referenced_input_nodes = g.inputs().filter(|n| referenced.contains(n.id.as_str())).count();
    let table_nodes = g.tables().count();
    let total_rules: usize = g.tables().map(|(_, t)| t.rules.len()).sum();
    let conditions: Vec<usize> = g
        .tables()
        .flat_map(|(_, t)| t.rules.iter())
        .map(|r| r.conditions.iter().filter(|c| !c.is_irrelevant()).count())
        .collect();
    let inputs_per_rule = mean_usize(&conditions);
    let single = conditions.iter().filter(|c| **c == 1).count();

    let (depth_edges, max_width) = depth_and_width(g);
    GraphStats {
        nodes: n,
        edges: e,
        input_nodes,
        referenced_input_nodes,
        decision_nodes: g.nodes.iter().filter(|n| n.kind == NodeKind::Decision).count(),
        total_rules,
        rules_per_decision_node: if table_nodes == 0 {
            0.0
        } else {
            total_rules as f64 / table_nodes as f64
        },
        inputs_per_rule,
        single_condition_rule_fraction: if conditions.is_empty() {
            0.0
        } else {
            single as f64 / conditions.len() as f64
        },
        mean_in_degree: if n == 0 { 0.0 } else { e as f64 / n as f64 },
        density: if n < 2 {
            0.0
        } else {
            (e as f64 / (n as f64 * (n as f64 - 1.0))).min(1.0)
        },
        depth: if n == 0 { 0 } else { depth_edges + 1 },
        depth_edges,
        max_width,
    }
}

fn mean_usize(xs: &[usize]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<usize>() as f64 / xs.len() as f64
    }
}

/// Longest path in edges, and the widest longest-distance level.
fn depth_and_width(g: &DecisionGraph) -> (usize, usize) {
    if g.nodes.is_empty() {
        return (0, 0);
    }
    let Ok(order) = topological_order(g) else {
        return (0, 0);
    };
    let known: HashSet<&str> = g.nodes.iter().map(|n| n.id.as_str()).collect();
    let mut preds: HashMap<&str, Vec<&str>> = HashMap::new();
    for edge in &g.edges {
        if known.contains(edge.from.as_str()) && known.contains(edge.to.as_str()) {
            preds.entry(edge.to.as_str()).or_default().push(edge.from.as_str());
        }
    }
    let mut level: HashMap<&str, usize> = HashMap::new();
    for id in &order {
        let l = preds
            .get(id.as_str())
            .into_iter()
            .flatten()
            .map(|p| level[p] + 1)
            .max()
            .unwrap_or(0);
        level.insert(id.as_str(), l);
    }
    let mut widths: BTreeMap<usize, usize> = BTreeMap::new();
    for l in level.values() {
        *widths.entry(*l).or_insert(0) += 1;
    }
    let depth = widths.keys().next_back().copied().unwrap_or(0);
    let width = widths.values().copied().max().unwrap_or(0);
    (depth, width)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub metric: &'static str,
    pub mean: f64,
    /// Population standard deviation.
    pub std_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub model_type: ModelType,
    pub count: usize,
    pub metrics: Vec<MetricSummary>,
}

impl GroupSummary {
    pub fn get(&self, metric: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.metric == metric)
    }
}

/// Mean and population standard deviation of every metric, per model type.
pub fn aggregate_stats<'a>(graphs: impl IntoIterator<Item = &'a DecisionGraph>) -> Vec<GroupSummary> {
    let mut groups: BTreeMap<ModelType, Vec<GraphStats>> = BTreeMap::new();
    for g in graphs {
        groups.entry(g.model_type).or_default().push(descriptive_stats(g));
    }
    groups
        .into_iter()
        .map(|(model_type, stats)| summarize(model_type, &stats))
        .collect()
}

pub fn summarize(model_type: ModelType, stats: &[GraphStats]) -> GroupSummary {
    let rows: Vec<[f64; 14]> = stats.iter().map(GraphStats::metrics).collect();
    let metrics = METRIC_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let xs: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            let (mean, std_dev) = mean_std(&xs);
            MetricSummary {
                metric: name,
                mean,
                std_dev,
            }
        })
        .collect();
    GroupSummary {
        model_type,
        count: stats.len(),
        metrics,
    }
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Edge;
    use crate::synth::{self, structure_from_edges};

    #[test]
    fn input_output_pair() {
        let g = structure_from_edges(2, &[Edge::new("n00", "n01")]);
        let s = descriptive_stats(&g);
        assert_eq!((s.depth, s.max_width, s.depth_edges), (2, 1, 1));
        assert!((s.density - 0.5).abs() < 1e-12);
    }

    #[test]
    fn wind_turbine_stats() {
        let s = descriptive_stats(&synth::wind_turbine_model());
        assert_eq!(s.nodes, 10);
        assert_eq!(s.edges, 9);
        assert_eq!(s.input_nodes, 4);
        assert_eq!(s.total_rules, 8 + 2 + 2);
        assert_eq!(s.depth, 4);
        assert_eq!(s.max_width, 4);
        // 8 pass-through rules and 2 output rules have one condition; the
        // aggregator has one 4-condition rule and one all-irrelevant rule.
        assert!((s.inputs_per_rule - 14.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_of_identical_graphs() {
        let g = synth::wind_turbine_model();
        let groups = aggregate_stats([&g, &g, &g]);
        assert_eq!(groups.len(), 1);
        for m in &groups[0].metrics {
            assert!(m.std_dev.abs() < 1e-12, "{}", m.metric);
        }
    }

    #[test]
    fn two_graph_means() {
        let a = structure_from_edges(2, &[Edge::new("n00", "n01")]);
        let b = structure_from_edges(
            4,
            &[
                Edge::new("n00", "n01"),
                Edge::new("n01", "n02"),
                Edge::new("n02", "n03"),
            ],
        );
        let groups = aggregate_stats([&a, &b]);
        let nodes = groups[0].get("nodes").unwrap();
        assert_eq!(nodes.mean, 3.0);
        assert_eq!(nodes.std_dev, 1.0);
        assert_eq!(groups[0].get("edges").unwrap().mean, 2.0);
    }
}
