//! The canonical decision graph.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::unary::UnaryTest;
use crate::value::{Value, ValueType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HitPolicy {
    Unique,
    First,
    Any,
    Collect,
}

impl HitPolicy {
    pub const ALL: [HitPolicy; 4] = [HitPolicy::Unique, HitPolicy::First, HitPolicy::Any, HitPolicy::Collect];

    pub fn as_str(self) -> &'static str {
        match self {
            HitPolicy::Unique => "UNIQUE",
            HitPolicy::First => "FIRST",
            HitPolicy::Any => "ANY",
            HitPolicy::Collect => "COLLECT",
        }
    }
}

impl fmt::Display for HitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown hit policy `{0}`")]
pub struct UnknownHitPolicy(pub String);

impl FromStr for HitPolicy {
    type Err = UnknownHitPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "UNIQUE" | "U" => Ok(HitPolicy::Unique),
            "FIRST" | "F" => Ok(HitPolicy::First),
            "ANY" | "A" => Ok(HitPolicy::Any),
            "COLLECT" | "C" => Ok(HitPolicy::Collect),
            _ => Err(UnknownHitPolicy(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    /// One test per table input, positionally aligned with `input_refs`.
    pub conditions: Vec<UnaryTest>,
    pub output_value: Value,
}

impl Rule {
    pub fn new(conditions: Vec<UnaryTest>, output_value: impl Into<Value>) -> Rule {
        Rule {
            conditions,
            output_value: output_value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionTable {
    pub hit_policy: HitPolicy,
    pub input_refs: Vec<String>,
    pub output_name: String,
    pub rules: Vec<Rule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    InputVariable,
    Decision,
    Output,
}

impl NodeKind {
    pub fn short_name(self) -> &'static str {
        match self {
            NodeKind::InputVariable => "input",
            NodeKind::Decision => "decision",
            NodeKind::Output => "output",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub name: String,
    pub kind: NodeKind,
    /// Declared type; only meaningful for input variables.
    pub value_type: Option<ValueType>,
    /// Present for decision and output nodes.
    pub table: Option<DecisionTable>,
}

impl Node {
    pub fn input(id: impl Into<String>, name: impl Into<String>, value_type: ValueType) -> Node {
        Node {
            id: id.into(),
            name: name.into(),
            kind: NodeKind::InputVariable,
            value_type: Some(value_type),
            table: None,
        }
    }

    pub fn decision(id: impl Into<String>, name: impl Into<String>, table: DecisionTable) -> Node {
        Node {
            id: id.into(),
            name: name.into(),
            kind: NodeKind::Decision,
            value_type: None,
            table: Some(table),
        }
    }

    pub fn output(id: impl Into<String>, name: impl Into<String>, table: DecisionTable) -> Node {
        Node {
            kind: NodeKind::Output,
            ..Node::decision(id, name, table)
        }
    }

    pub fn is_input(&self) -> bool {
        self.kind == NodeKind::InputVariable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelType {
    Outcome,
    Requirements,
}

impl ModelType {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelType::Outcome => "Outcome",
            ModelType::Requirements => "Requirements",
        }
    }
}

impl fmt::Display for ModelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "outcome" => Ok(ModelType::Outcome),
            "requirements" | "requirement" => Ok(ModelType::Requirements),
            other => Err(format!("unknown model type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: String,
    pub to: String,
}

impl Edge {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Edge {
        Edge {
            from: from.into(),
            to: to.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionGraph {
    pub id: String,
    pub model_type: ModelType,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub output_node_id: String,
}

impl DecisionGraph {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut Node> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    /// Node id → position in `nodes`.
    pub fn index(&self) -> HashMap<&str, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect()
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::InputVariable)
    }

    /// Input variables sorted by id.
    pub fn sorted_inputs(&self) -> Vec<&Node> {
        let mut inputs: Vec<&Node> = self.inputs().collect();
        inputs.sort_by(|a, b| a.id.cmp(&b.id));
        inputs
    }

    pub fn decisions(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Decision)
    }

    pub fn tables(&self) -> impl Iterator<Item = (&Node, &DecisionTable)> {
        self.nodes.iter().filter_map(|n| n.table.as_ref().map(|t| (n, t)))
    }

    pub fn output_node(&self) -> Option<&Node> {
        self.node(&self.output_node_id)
    }

    /// Direct successors of every node, sorted and de-duplicated.
    pub fn successors(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut map: BTreeMap<&str, Vec<&str>> = self.nodes.iter().map(|n| (n.id.as_str(), Vec::new())).collect();
        for e in &self.edges {
            if let Some(list) = map.get_mut(e.from.as_str()) {
                list.push(e.to.as_str());
            }
        }
        for list in map.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        map
    }

    /// Nodes whose table references `id`.
    pub fn consumers_of<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Node> + 'a {
        self.nodes
            .iter()
            .filter(move |n| n.table.as_ref().is_some_and(|t| t.input_refs.iter().any(|r| r == id)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hit_policy_parsing() {
        assert_eq!("first".parse::<HitPolicy>().unwrap(), HitPolicy::First);
        assert_eq!("C".parse::<HitPolicy>().unwrap(), HitPolicy::Collect);
        assert!("PRIORITY".parse::<HitPolicy>().is_err());
        for p in HitPolicy::ALL {
            assert_eq!(p.as_str().parse::<HitPolicy>().unwrap(), p);
        }
    }

    #[test]
    fn model_type_parsing() {
        assert_eq!("Outcome".parse::<ModelType>().unwrap(), ModelType::Outcome);
        assert_eq!("requirements".parse::<ModelType>().unwrap(), ModelType::Requirements);
    }
}
