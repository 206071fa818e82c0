//! Compact JSON representation of a decision graph.
//!
//! ```json
//! {
//!   "format": "legaldmn-compact/1",
//!   "id": "Outcome - GeluidProdWindturbine",
//!   "model_type": "Outcome",
//!   "output": "out_duty",
//!   "nodes": [
//!     {"id": "in_rotor", "name": "...", "kind": "input", "type": "boolean"},
//!     {"id": "out_duty", "name": "...", "kind": "output",
//!      "table": {"hit_policy": "UNIQUE", "inputs": ["in_rotor"], "output": "duty",
//!                "rules": [{"when": ["true"], "then": true}]}}
//!   ],
//!   "edges": [["in_rotor", "out_duty"]]
//! }
//! ```
//!
//! Conditions are unary-test text; rule outputs are JSON literals.

use serde::{Deserialize, Serialize};

use crate::model::{DecisionGraph, DecisionTable, Edge, HitPolicy, ModelType, Node, NodeKind, Rule};
use crate::unary::parse_unary_test;
use crate::value::{Value, ValueType};

pub const FORMAT_TAG: &str = "legaldmn-compact/1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("schema error at `{path}`: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> SchemaError {
        SchemaError {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    format: Option<String>,
    id: String,
    model_type: String,
    output: String,
    nodes: Vec<RawNode>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct RawNode {
    id: String,
    #[serde(default)]
    name: String,
    kind: String,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    value_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<RawTable>,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    hit_policy: String,
    inputs: Vec<String>,
    #[serde(default)]
    output: String,
    rules: Vec<RawRule>,
}

#[derive(Serialize, Deserialize)]
struct RawRule {
    when: Vec<String>,
    #[serde(default)]
    then: serde_json::Value,
}

fn kind_name(kind: NodeKind) -> &'static str {
    kind.short_name()
}

fn to_raw(g: &DecisionGraph) -> RawGraph {
    RawGraph {
        format: Some(FORMAT_TAG.to_owned()),
        id: g.id.clone(),
        model_type: g.model_type.as_str().to_owned(),
        output: g.output_node_id.clone(),
        nodes: g
            .nodes
            .iter()
            .map(|n| RawNode {
                id: n.id.clone(),
                name: n.name.clone(),
                kind: kind_name(n.kind).to_owned(),
                value_type: n.value_type.map(|t| t.as_str().to_owned()),
                table: n.table.as_ref().map(|t| RawTable {
                    hit_policy: t.hit_policy.as_str().to_owned(),
                    inputs: t.input_refs.clone(),
                    output: t.output_name.clone(),
                    rules: t
                        .rules
                        .iter()
                        .map(|r| RawRule {
                            when: r.conditions.iter().map(|c| c.render()).collect(),
                            then: r.output_value.to_json(),
                        })
                        .collect(),
                }),
            })
            .collect(),
        edges: g.edges.iter().map(|e| (e.from.clone(), e.to.clone())).collect(),
    }
}

/// Single-line JSON.
pub fn serialize_graph(g: &DecisionGraph) -> Vec<u8> {
    serde_json::to_vec(&to_raw(g)).expect("graph serialization is infallible")
}

pub fn serialize_graph_pretty(g: &DecisionGraph) -> String {
    serde_json::to_string_pretty(&to_raw(g)).expect("graph serialization is infallible")
}

pub fn graph_to_json(g: &DecisionGraph) -> serde_json::Value {
    serde_json::to_value(to_raw(g)).expect("graph serialization is infallible")
}

pub fn deserialize_graph(bytes: &[u8]) -> Result<DecisionGraph, SchemaError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let raw: RawGraph = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        SchemaError::at(
            if path == "." { "$".to_owned() } else { path },
            e.into_inner().to_string(),
        )
    })?;
    de.end().map_err(|e| SchemaError::at("$", e.to_string()))?;
    from_raw(raw)
}

pub fn graph_from_json(value: &serde_json::Value) -> Result<DecisionGraph, SchemaError> {
    let raw: RawGraph = serde_path_to_error::deserialize(value)
        .map_err(|e| SchemaError::at(e.path().to_string(), e.into_inner().to_string()))?;
    from_raw(raw)
}

fn from_raw(raw: RawGraph) -> Result<DecisionGraph, SchemaError> {
    if let Some(format) = &raw.format {
        if format != FORMAT_TAG {
            return Err(SchemaError::at("format", format!("unsupported format `{format}`")));
        }
    }
    let model_type: ModelType = raw
        .model_type
        .parse()
        .map_err(|e: String| SchemaError::at("model_type", e))?;

    let mut nodes = Vec::with_capacity(raw.nodes.len());
    for (i, n) in raw.nodes.into_iter().enumerate() {
        let path = format!("nodes[{i}]");
        let kind = match n.kind.trim().to_ascii_lowercase().as_str() {
            "input" | "inputvariable" | "input_variable" => NodeKind::InputVariable,
            "decision" => NodeKind::Decision,
            "output" => NodeKind::Output,
            other => {
                return Err(SchemaError::at(
                    format!("{path}.kind"),
                    format!("unknown node kind `{other}`"),
                ))
            }
        };
        let value_type = match (&kind, &n.value_type) {
            (NodeKind::InputVariable, Some(t)) => Some(
                ValueType::from_type_ref(t)
                    .ok_or_else(|| SchemaError::at(format!("{path}.type"), format!("unknown value type `{t}`")))?,
            ),
            (NodeKind::InputVariable, None) => {
                return Err(SchemaError::at(format!("{path}.type"), "input variables need a type"))
            }
            _ => None,
        };
        let table = match (kind, n.table) {
            (NodeKind::InputVariable, Some(_)) => {
                return Err(SchemaError::at(
                    format!("{path}.table"),
                    "input variables carry no table",
                ))
            }
            (NodeKind::InputVariable, None) => None,
            (_, None) => return Err(SchemaError::at(format!("{path}.table"), "missing decision table")),
            (_, Some(t)) => Some(table_from_raw(t, &format!("{path}.table"))?),
        };
        nodes.push(Node {
            id: n.id,
            name: n.name,
            kind,
            value_type,
            table,
        });
    }

    Ok(DecisionGraph {
        id: raw.id,
        model_type,
        nodes,
        edges: raw.edges.into_iter().map(|(a, b)| Edge::new(a, b)).collect(),
        output_node_id: raw.output,
    })
}

fn table_from_raw(t: RawTable, path: &str) -> Result<DecisionTable, SchemaError> {
    let hit_policy: HitPolicy = t
        .hit_policy
        .parse()
        .map_err(|e: crate::model::UnknownHitPolicy| SchemaError::at(format!("{path}.hit_policy"), e.to_string()))?;
    let mut rules = Vec::with_capacity(t.rules.len());
    for (j, r) in t.rules.into_iter().enumerate() {
        let conditions = r
            .when
            .iter()
            .enumerate()
            .map(|(k, text)| {
                parse_unary_test(text)
                    .map_err(|e| SchemaError::at(format!("{path}.rules[{j}].when[{k}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let output_value =
            Value::from_json(&r.then).map_err(|e| SchemaError::at(format!("{path}.rules[{j}].then"), e))?;
        if matches!(output_value, Value::List(_)) {
            return Err(SchemaError::at(
                format!("{path}.rules[{j}].then"),
                "rule outputs must be scalar literals",
            ));
        }
        rules.push(Rule {
            conditions,
            output_value,
        });
    }
    Ok(DecisionTable {
        hit_policy,
        input_refs: t.inputs,
        output_name: t.output,
        rules,
    })
}
