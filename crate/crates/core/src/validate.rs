//! Well-formedness checks and topological ordering.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::model::{DecisionGraph, NodeKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    DuplicateNodeId {
        id: String,
    },
    MissingOutputNode,
    MultipleOutputNodes {
        ids: Vec<String>,
    },
    OutputIdMismatch {
        declared: String,
        actual: String,
    },
    DanglingEdge {
        from: String,
        to: String,
    },
    DanglingInputRef {
        node: String,
        input_ref: String,
    },
    DuplicateInputRef {
        node: String,
        input_ref: String,
    },
    InputRefWithoutEdge {
        node: String,
        input_ref: String,
    },
    InputWithIncomingEdge {
        node: String,
        from: String,
    },
    InputWithTable {
        node: String,
    },
    MissingTable {
        node: String,
    },
    RuleArityMismatch {
        node: String,
        rule: usize,
        expected: usize,
        found: usize,
    },
    CycleDetected {
        nodes: Vec<String>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNodeId { id } => write!(f, "duplicate node id `{id}`"),
            Violation::MissingOutputNode => write!(f, "no output node"),
            Violation::MultipleOutputNodes { ids } => write!(f, "multiple output nodes: {}", ids.join(", ")),
            Violation::OutputIdMismatch { declared, actual } => {
                write!(f, "output node is `{actual}` but graph declares `{declared}`")
            }
            Violation::DanglingEdge { from, to } => write!(f, "edge {from} -> {to} references a missing node"),
            Violation::DanglingInputRef { node, input_ref } => {
                write!(f, "node `{node}` reads missing node `{input_ref}`")
            }
            Violation::DuplicateInputRef { node, input_ref } => {
                write!(f, "node `{node}` reads `{input_ref}` more than once")
            }
            Violation::InputRefWithoutEdge { node, input_ref } => {
                write!(
                    f,
                    "node `{node}` reads `{input_ref}` without an edge {input_ref} -> {node}"
                )
            }
            Violation::InputWithIncomingEdge { node, from } => {
                write!(f, "input variable `{node}` has incoming edge from `{from}`")
            }
            Violation::InputWithTable { node } => write!(f, "input variable `{node}` carries a decision table"),
            Violation::MissingTable { node } => write!(f, "node `{node}` has no decision table"),
            Violation::RuleArityMismatch {
                node,
                rule,
                expected,
                found,
            } => write!(
                f,
                "rule {rule} of `{node}` has {found} conditions, table has {expected} inputs"
            ),
            Violation::CycleDetected { nodes } => write!(f, "cycle through {}", nodes.join(", ")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("graph contains a cycle through {}", .nodes.join(", "))]
pub struct CycleError {
    pub nodes: Vec<String>,
}

pub fn validate_graph(g: &DecisionGraph) -> ValidationReport {
    let mut violations = Vec::new();

    let mut seen = HashSet::new();
    for n in &g.nodes {
        if !seen.insert(n.id.as_str()) {
            violations.push(Violation::DuplicateNodeId { id: n.id.clone() });
        }
    }

    let outputs: Vec<&str> = g
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Output)
        .map(|n| n.id.as_str())
        .collect();
    match outputs.as_slice() {
        [] => violations.push(Violation::MissingOutputNode),
        [only] if *only != g.output_node_id => violations.push(Violation::OutputIdMismatch {
            declared: g.output_node_id.clone(),
            actual: (*only).to_owned(),
        }),
        [_] => {}
        many => violations.push(Violation::MultipleOutputNodes {
            ids: many.iter().map(|s| (*s).to_owned()).collect(),
        }),
    }

    let kinds: HashMap<&str, NodeKind> = g.nodes.iter().map(|n| (n.id.as_str(), n.kind)).collect();
    let edge_set: HashSet<(&str, &str)> = g.edges.iter().map(|e| (e.from.as_str(), e.to.as_str())).collect();

    for e in &g.edges {
        if !kinds.contains_key(e.from.as_str()) || !kinds.contains_key(e.to.as_str()) {
            violations.push(Violation::DanglingEdge {
                from: e.from.clone(),
                to: e.to.clone(),
            });
        } else if kinds[e.to.as_str()] == NodeKind::InputVariable {
            violations.push(Violation::InputWithIncomingEdge {
                node: e.to.clone(),
                from: e.from.clone(),
            });
        }
    }

    for n in &g.nodes {
        match (&n.kind, &n.table) {
            (NodeKind::InputVariable, Some(_)) => violations.push(Violation::InputWithTable { node: n.id.clone() }),
            (NodeKind::InputVariable, None) => {}
            (_, None) => violations.push(Violation::MissingTable { node: n.id.clone() }),
            (_, Some(table)) => {
                let mut refs = HashSet::new();
                for r in &table.input_refs {
                    if !refs.insert(r.as_str()) {
                        violations.push(Violation::DuplicateInputRef {
                            node: n.id.clone(),
                            input_ref: r.clone(),
                        });
                    }
                    if !kinds.contains_key(r.as_str()) {
                        violations.push(Violation::DanglingInputRef {
                            node: n.id.clone(),
                            input_ref: r.clone(),
                        });
                    } else if !edge_set.contains(&(r.as_str(), n.id.as_str())) {
                        violations.push(Violation::InputRefWithoutEdge {
                            node: n.id.clone(),
                            input_ref: r.clone(),
                        });
                    }
                }
                for (i, rule) in table.rules.iter().enumerate() {
                    if rule.conditions.len() != table.input_refs.len() {
                        violations.push(Violation::RuleArityMismatch {
                            node: n.id.clone(),
                            rule: i,
                            expected: table.input_refs.len(),
                            found: rule.conditions.len(),
                        });
                    }
                }
            }
        }
    }

    if let Err(cycle) = topological_order(g) {
        violations.push(Violation::CycleDetected { nodes: cycle.nodes });
    }

    ValidationReport { violations }
}

/// Kahn's algorithm with the smallest available id taken first. Edges to or
/// from unknown nodes are ignored.
pub fn topological_order(g: &DecisionGraph) -> Result<Vec<String>, CycleError> {
    let ids: BTreeSet<&str> = g.nodes.iter().map(|n| n.id.as_str()).collect();
    let mut indegree: BTreeMap<&str, usize> = ids.iter().map(|id| (*id, 0)).collect();
    let mut succ: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for e in &g.edges {
        if ids.contains(e.from.as_str())
            && ids.contains(e.to.as_str())
            && succ.entry(e.from.as_str()).or_default().insert(e.to.as_str())
        {
            *indegree.get_mut(e.to.as_str()).expect("known node") += 1;
        }
    }

    let mut ready: BinaryHeap<Reverse<&str>> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(id, _)| Reverse(*id))
        .collect();
    let mut order = Vec::with_capacity(ids.len());
    while let Some(Reverse(id)) = ready.pop() {
        order.push(id.to_owned());
        if let Some(next) = succ.get(id) {
            for to in next {
                let d = indegree.get_mut(to).expect("known node");
                *d -= 1;
                if *d == 0 {
                    ready.push(Reverse(to));
                }
            }
        }
    }

    if order.len() < ids.len() {
        let nodes = indegree
            .into_iter()
            .filter(|(id, d)| *d > 0 && !order.iter().any(|o| o == id))
            .map(|(id, _)| id.to_owned())
            .collect();
        return Err(CycleError { nodes });
    }
    Ok(order)
}
