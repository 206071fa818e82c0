//! Identity (pass-through) node elimination, UR/CR chain profiling and
//! placeholder input detection.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use serde::Serialize;

use crate::model::{DecisionGraph, Edge, HitPolicy, Node, NodeKind};
use crate::unary::UnaryTest;
use crate::validate::topological_order;

/// True when the node is a decision whose single-column table maps every
/// literal it tests to itself, with pairwise distinct literals.
///
/// `COLLECT` tables are excluded: they wrap the echoed value in a list, which
/// numeric comparisons downstream do not see through.
pub fn is_identity_node(n: &Node) -> bool {
    if n.kind != NodeKind::Decision {
        return false;
    }
    let Some(table) = &n.table else { return false };
    if table.input_refs.len() != 1 || table.rules.is_empty() || table.hit_policy == HitPolicy::Collect {
        return false;
    }
    let mut seen = Vec::with_capacity(table.rules.len());
    for rule in &table.rules {
        let [UnaryTest::EqualsLiteral(lit)] = rule.conditions.as_slice() else {
            return false;
        };
        if *lit != rule.output_value || seen.contains(&lit) {
            return false;
        }
        seen.push(lit);
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rewire {
    pub consumer: String,
    pub old_ref: String,
    pub new_ref: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplificationReport {
    pub graph_id: String,
    pub removed_node_ids: Vec<String>,
    /// Identity nodes over decision nodes, before elimination.
    pub identity_fraction_before: f64,
    /// Identity nodes over all nodes, before elimination.
    pub identity_fraction_all_nodes: f64,
    pub decision_nodes_before: usize,
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub edges_before: usize,
    pub edges_after: usize,
    pub rewired_edges: Vec<Rewire>,
    /// Identity nodes kept because a consumer already reads their upstream.
    pub kept_identity_nodes: Vec<String>,
}

/// Rewires every consumer of an identity node onto its upstream and drops
/// the node, repeating until no eliminable identity node remains.
pub fn eliminate_identity_nodes(g: &DecisionGraph) -> (DecisionGraph, SimplificationReport) {
    let decision_nodes_before = g.decisions().count();
    let identity_before = g.decisions().filter(|n| is_identity_node(n)).count();
    let mut graph = g.clone();
    let mut removed = Vec::new();
    let mut rewired = Vec::new();
    let mut blocked: BTreeSet<String> = BTreeSet::new();

    loop {
        let mut candidates: Vec<&Node> = graph
            .nodes
            .iter()
            .filter(|n| is_identity_node(n) && !blocked.contains(&n.id))
            .collect();
        candidates.sort_by(|a, b| a.id.cmp(&b.id));
        let mut progressed = false;
        for cand in candidates {
            let id = cand.id.clone();
            let upstream = cand.table.as_ref().expect("identity has table").input_refs[0].clone();
            let conflict = graph
                .consumers_of(&id)
                .any(|c| c.table.as_ref().is_some_and(|t| t.input_refs.contains(&upstream)));
            if conflict {
                blocked.insert(id);
                continue;
            }
            remove_identity(&mut graph, &id, &upstream, &mut rewired);
            removed.push(id);
            progressed = true;
            break;
        }
        if !progressed {
            break;
        }
    }

    let removed_set: HashSet<&str> = removed.iter().map(String::as_str).collect();
    let kept_identity_nodes = blocked
        .into_iter()
        .filter(|id| !removed_set.contains(id.as_str()))
        .collect();
    let report = SimplificationReport {
        graph_id: g.id.clone(),
        identity_fraction_before: ratio(identity_before, decision_nodes_before),
        identity_fraction_all_nodes: ratio(identity_before, g.nodes.len()),
        decision_nodes_before,
        nodes_before: g.nodes.len(),
        nodes_after: graph.nodes.len(),
        edges_before: g.edges.len(),
        edges_after: graph.edges.len(),
        removed_node_ids: removed,
        rewired_edges: rewired,
        kept_identity_nodes,
    };
    (graph, report)
}

fn remove_identity(graph: &mut DecisionGraph, id: &str, upstream: &str, rewired: &mut Vec<Rewire>) {
    let mut consumers = Vec::new();
    for node in &mut graph.nodes {
        if let Some(table) = node.table.as_mut() {
            for r in table.input_refs.iter_mut().filter(|r| *r == id) {
                *r = upstream.to_owned();
                consumers.push(node.id.clone());
                rewired.push(Rewire {
                    consumer: node.id.clone(),
                    old_ref: id.to_owned(),
                    new_ref: upstream.to_owned(),
                });
            }
        }
    }
    let mut edges: Vec<Edge> = Vec::with_capacity(graph.edges.len());
    let mut seen = HashSet::new();
    for e in graph.edges.drain(..) {
        let e = if e.from == id {
            if !consumers.contains(&e.to) {
                continue;
            }
            Edge::new(upstream, e.to)
        } else if e.to == id {
            continue;
        } else {
            e
        };
        if seen.insert((e.from.clone(), e.to.clone())) {
            edges.push(e);
        }
    }
    graph.edges = edges;
    graph.nodes.retain(|n| n.id != id);
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Input variables whose name contains "vaste waarde", ignoring case.
pub fn detect_placeholder_inputs(g: &DecisionGraph) -> Vec<String> {
    g.sorted_inputs()
        .into_iter()
        .filter(|n| n.name.to_lowercase().contains("vaste waarde"))
        .map(|n| n.id.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputChain {
    pub input_id: String,
    /// Node count of the shortest path to the output, when one exists.
    pub shortest: Option<usize>,
    pub longest: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainProfile {
    pub graph_id: String,
    pub chains: Vec<InputChain>,
    pub inputs_reaching_output: usize,
    pub min_shortest: Option<usize>,
    pub max_longest: Option<usize>,
    pub mean_shortest: Option<f64>,
    pub mean_longest: Option<f64>,
    pub ur_nodes: usize,
    pub cr_nodes: usize,
}

pub fn chain_profile(g: &DecisionGraph) -> ChainProfile {
    let succ = g.successors();
    let output = g.output_node_id.as_str();

    // Longest path (in nodes) from each node to the output, via reverse topological order.
    let order = topological_order(g).unwrap_or_default();
    let mut longest_to_out: BTreeMap<&str, Option<usize>> = BTreeMap::new();
    for id in order.iter().rev() {
        let id = id.as_str();
        let best = if id == output {
            Some(1)
        } else {
            succ.get(id)
                .into_iter()
                .flatten()
                .filter_map(|s| longest_to_out.get(s).copied().flatten())
                .max()
                .map(|d| d + 1)
        };
        longest_to_out.insert(id, best);
    }

    let chains: Vec<InputChain> = g
        .sorted_inputs()
        .into_iter()
        .map(|n| InputChain {
            input_id: n.id.clone(),
            shortest: shortest_nodes(&succ, &n.id, output),
            longest: longest_to_out.get(n.id.as_str()).copied().flatten(),
        })
        .collect();

    let shortest: Vec<usize> = chains.iter().filter_map(|c| c.shortest).collect();
    let longest: Vec<usize> = chains.iter().filter_map(|c| c.longest).collect();
    let mean = |xs: &[usize]| (!xs.is_empty()).then(|| xs.iter().sum::<usize>() as f64 / xs.len() as f64);

    let suffix = |n: &Node, s: &str| n.name.trim().ends_with(s);
    ChainProfile {
        graph_id: g.id.clone(),
        inputs_reaching_output: shortest.len(),
        min_shortest: shortest.iter().copied().min(),
        max_longest: longest.iter().copied().max(),
        mean_shortest: mean(&shortest),
        mean_longest: mean(&longest),
        ur_nodes: g.nodes.iter().filter(|n| suffix(n, " UR")).count(),
        cr_nodes: g.nodes.iter().filter(|n| suffix(n, " CR")).count(),
        chains,
    }
}

fn shortest_nodes(succ: &BTreeMap<&str, Vec<&str>>, from: &str, to: &str) -> Option<usize> {
    let mut dist: BTreeMap<&str, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    dist.insert(from, 1);
    queue.push_back(from);
    while let Some(u) = queue.pop_front() {
        let d = dist[u];
        if u == to {
            return Some(d);
        }
        for &v in succ.get(u).into_iter().flatten() {
            if !dist.contains_key(v) {
                dist.insert(v, d + 1);
                queue.push_back(v);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DecisionTable, Rule};
    use crate::synth;
    use crate::validate::validate_graph;
    use crate::value::{Value, ValueType};

    fn one_col(rules: Vec<Rule>) -> Node {
        Node::decision(
            "d",
            "d",
            DecisionTable {
                hit_policy: HitPolicy::Unique,
                input_refs: vec!["a".into()],
                output_name: "o".into(),
                rules,
            },
        )
    }

    fn eq(v: impl Into<Value>) -> UnaryTest {
        UnaryTest::EqualsLiteral(v.into())
    }

    #[test]
    fn identity_detection() {
        assert!(is_identity_node(&one_col(vec![
            Rule::new(vec![eq(true)], true),
            Rule::new(vec![eq(false)], false)
        ])));
        assert!(!is_identity_node(&one_col(vec![Rule::new(
            vec![UnaryTest::NotNull],
            true
        )])));
        assert!(!is_identity_node(&one_col(vec![Rule::new(vec![eq(true)], false)])));
        assert!(!is_identity_node(&one_col(vec![])));
        assert!(!is_identity_node(&one_col(vec![
            Rule::new(vec![eq("a")], "a"),
            Rule::new(vec![eq("a")], "a")
        ])));
        let mut out = one_col(vec![Rule::new(vec![eq(true)], true)]);
        out.kind = NodeKind::Output;
        assert!(!is_identity_node(&out));
    }

    #[test]
    fn chain_of_identities_collapses() {
        let pass = |id: &str, from: &str| Node::decision(id, id, synth::boolean_pass_through(from, "v"));
        let g = DecisionGraph {
            id: "g".into(),
            model_type: crate::model::ModelType::Requirements,
            nodes: vec![
                Node::input("a", "a", ValueType::Boolean),
                pass("b", "a"),
                pass("c", "b"),
                Node::output(
                    "z",
                    "z",
                    DecisionTable {
                        hit_policy: HitPolicy::First,
                        input_refs: vec!["c".into()],
                        output_name: "z".into(),
                        rules: vec![
                            Rule::new(vec![eq(true)], "yes"),
                            Rule::new(vec![UnaryTest::Irrelevant], "no"),
                        ],
                    },
                ),
            ],
            edges: vec![Edge::new("a", "b"), Edge::new("b", "c"), Edge::new("c", "z")],
            output_node_id: "z".into(),
        };
        let (s, report) = eliminate_identity_nodes(&g);
        assert_eq!(report.removed_node_ids, vec!["b", "c"]);
        assert_eq!(s.edges, vec![Edge::new("a", "z")]);
        assert_eq!(s.node("z").unwrap().table.as_ref().unwrap().input_refs, vec!["a"]);
        assert_eq!(report.nodes_after, report.nodes_before - 2);
        assert!((report.identity_fraction_before - 1.0).abs() < 1e-12);
        assert!(validate_graph(&s).is_ok());
        let (again, second) = eliminate_identity_nodes(&s);
        assert!(second.removed_node_ids.is_empty());
        assert_eq!(again, s);
    }

    #[test]
    fn conflicting_consumer_keeps_identity() {
        let mut g = synth::wind_turbine_model();
        // agg_duty now reads both in_rotor and its pass-through.
        let agg = g.node_mut("agg_duty").unwrap().table.as_mut().unwrap();
        agg.input_refs.push("in_rotor".into());
        for r in &mut agg.rules {
            r.conditions.push(UnaryTest::Irrelevant);
        }
        g.edges.push(Edge::new("in_rotor", "agg_duty"));
        let (s, report) = eliminate_identity_nodes(&g);
        assert_eq!(report.kept_identity_nodes, vec!["pt_rotor"]);
        assert!(validate_graph(&s).is_ok());
    }

    #[test]
    fn placeholders() {
        let g = synth::placeholder_outcome_model();
        assert_eq!(detect_placeholder_inputs(&g), vec!["in_fixed"]);
        assert!(detect_placeholder_inputs(&synth::wind_turbine_model()).is_empty());
        let mut g = synth::wind_turbine_model();
        g.node_mut("in_farm").unwrap().name = "Vaste Waarde FALSE kopie".into();
        assert_eq!(detect_placeholder_inputs(&g), vec!["in_farm"]);
    }

    #[test]
    fn chains() {
        let p = chain_profile(&synth::alarm_installation_model());
        assert_eq!(p.ur_nodes, 4);
        assert_eq!(p.cr_nodes, 4);
        for c in &p.chains {
            assert_eq!(c.shortest, Some(5));
            assert!(c.longest.unwrap() >= 4);
        }

        let direct = synth::constant_model(&synth::wind_turbine_model(), Value::Boolean(false));
        let mut direct = direct;
        let out = direct.node_mut("out_constant").unwrap().table.as_mut().unwrap();
        out.input_refs = vec!["in_farm".into()];
        out.rules[0].conditions = vec![UnaryTest::Irrelevant];
        direct.edges.push(Edge::new("in_farm", "out_constant"));
        let p = chain_profile(&direct);
        let farm = p.chains.iter().find(|c| c.input_id == "in_farm").unwrap();
        assert_eq!(farm.shortest, Some(2));
        assert_eq!(farm.longest, Some(2));
        assert_eq!(p.inputs_reaching_output, 1);
    }

    #[test]
    fn five_node_path() {
        let edges: Vec<Edge> = (0..4)
            .map(|i| Edge::new(format!("n{i:02}"), format!("n{:02}", i + 1)))
            .collect();
        let mut g = synth::structure_from_edges(5, &edges);
        // add a shortcut so shortest and longest differ
        g.edges.push(Edge::new("n00", "n03"));
        let p = chain_profile(&g);
        assert_eq!(p.chains[0].longest, Some(5));
        assert_eq!(p.chains[0].shortest, Some(3));
    }
}
