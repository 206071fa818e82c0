//! DMN 1.x XML reading and writing.
//!
//! Element matching ignores namespaces so DMN 1.1 to 1.5 documents load the
//! same way.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use roxmltree::{Document, Node as XmlNode};

use crate::model::{DecisionGraph, DecisionTable, Edge, HitPolicy, ModelType, Node, NodeKind, Rule};
use crate::unary::{parse_literal, parse_unary_test, UnaryTest};
use crate::validate::{validate_graph, ValidationReport};
use crate::value::{Value, ValueType};

#[derive(Debug, thiserror::Error)]
pub enum DmnError {
    #[error("XML syntax error: {0}")]
    Xml(String),
    #[error("unsupported construct at {path}: {message}")]
    Unsupported { path: String, message: String },
    #[error("missing output decision: {0}")]
    MissingOutput(String),
    #[error("cannot infer model type from `{0}`; pass it explicitly")]
    UnknownModelType(String),
    #[error("parsed graph is invalid: {0}")]
    Invalid(ValidationReport),
}

#[derive(Debug, Clone, Default)]
pub struct DmnOptions {
    /// Graph id; defaults to the `definitions` name, then its id.
    pub model_id: Option<String>,
    pub model_type: Option<ModelType>,
    /// Node id of the final decision, when the graph has several sinks.
    pub output_id: Option<String>,
    /// File name or path used to infer the model type.
    pub file_hint: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedDmn {
    pub graph: DecisionGraph,
    /// `locationURI` values of knowledge sources, in document order.
    pub article_links: Vec<String>,
}

/// Infers the model type from a file name or model name.
pub fn infer_model_type(hint: &str) -> Option<ModelType> {
    let lower = hint.to_lowercase();
    if lower.contains("outcome") || lower.contains("conclusie") {
        Some(ModelType::Outcome)
    } else if lower.contains("requirement") || lower.contains("indieningsvereist") {
        Some(ModelType::Requirements)
    } else {
        None
    }
}

pub fn parse_dmn(xml: &[u8]) -> Result<DecisionGraph, DmnError> {
    parse_dmn_with(xml, &DmnOptions::default()).map(|p| p.graph)
}

fn children<'a, 'i>(node: XmlNode<'a, 'i>, name: &'a str) -> impl Iterator<Item = XmlNode<'a, 'i>> + 'a {
    node.children()
        .filter(move |c| c.is_element() && c.tag_name().name() == name)
}

fn child<'a, 'i>(node: XmlNode<'a, 'i>, name: &'a str) -> Option<XmlNode<'a, 'i>> {
    children(node, name).next()
}

fn text_of(node: Option<XmlNode>) -> String {
    node.and_then(|n| child(n, "text"))
        .and_then(|t| t.text())
        .unwrap_or("")
        .trim()
        .to_owned()
}

fn href_id(href: &str) -> &str {
    match href.rfind('#') {
        Some(i) => &href[i + 1..],
        None => href,
    }
}

fn unsupported(path: impl Into<String>, message: impl Into<String>) -> DmnError {
    DmnError::Unsupported {
        path: path.into(),
        message: message.into(),
    }
}

struct RawDecision<'a, 'i> {
    id: String,
    name: String,
    requires: Vec<String>,
    table: Option<XmlNode<'a, 'i>>,
    path: String,
}

pub fn parse_dmn_with(xml: &[u8], opts: &DmnOptions) -> Result<ParsedDmn, DmnError> {
    let text = std::str::from_utf8(xml).map_err(|e| DmnError::Xml(e.to_string()))?;
    let doc = Document::parse(text).map_err(|e| DmnError::Xml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "definitions" {
        return Err(unsupported(root.tag_name().name(), "root element is not `definitions`"));
    }

    let model_id = opts
        .model_id
        .clone()
        .or_else(|| root.attribute("name").map(str::to_owned))
        .or_else(|| root.attribute("id").map(str::to_owned))
        .unwrap_or_default();
    let model_type = match opts.model_type {
        Some(t) => t,
        None => {
            let hint = opts.file_hint.as_deref().unwrap_or(&model_id);
            infer_model_type(hint)
                .or_else(|| infer_model_type(&model_id))
                .ok_or_else(|| DmnError::UnknownModelType(hint.to_owned()))?
        }
    };

    let mut inputs: Vec<(String, String, Option<String>)> = Vec::new();
    let mut decisions: Vec<RawDecision> = Vec::new();
    let mut article_links = Vec::new();
    for el in root.children().filter(XmlNode::is_element) {
        let id = el.attribute("id").unwrap_or("").to_owned();
        match el.tag_name().name() {
            "inputData" => {
                let type_ref = child(el, "variable")
                    .and_then(|v| v.attribute("typeRef"))
                    .map(str::to_owned);
                inputs.push((id, el.attribute("name").unwrap_or("").to_owned(), type_ref));
            }
            "decision" => {
                let mut requires = Vec::new();
                for req in children(el, "informationRequirement") {
                    for r in req.children().filter(XmlNode::is_element) {
                        if matches!(r.tag_name().name(), "requiredInput" | "requiredDecision") {
                            if let Some(href) = r.attribute("href") {
                                requires.push(href_id(href).to_owned());
                            }
                        }
                    }
                }
                let path = format!("definitions/decision[@id='{id}']");
                let mut table = None;
                for body in el.children().filter(XmlNode::is_element) {
                    match body.tag_name().name() {
                        "decisionTable" => table = Some(body),
                        "literalExpression" | "context" | "invocation" | "relation" | "list" | "functionDefinition" => {
                            return Err(unsupported(
                                format!("{path}/{}", body.tag_name().name()),
                                "only decision tables are supported as decision logic",
                            ))
                        }
                        _ => {}
                    }
                }
                decisions.push(RawDecision {
                    name: el.attribute("name").unwrap_or("").to_owned(),
                    id,
                    requires,
                    table,
                    path,
                });
            }
            "knowledgeSource" => {
                if let Some(uri) = el.attribute("locationURI") {
                    article_links.push(uri.trim().to_owned());
                }
            }
            _ => {}
        }
    }

    let consumed: BTreeSet<&str> = decisions
        .iter()
        .flat_map(|d| d.requires.iter().map(String::as_str))
        .collect();
    let output_id = match &opts.output_id {
        Some(id) => {
            if !decisions.iter().any(|d| &d.id == id) {
                return Err(DmnError::MissingOutput(format!("no decision with id `{id}`")));
            }
            id.clone()
        }
        None => {
            let sinks: Vec<&str> = decisions
                .iter()
                .map(|d| d.id.as_str())
                .filter(|id| !consumed.contains(id))
                .collect();
            match sinks.as_slice() {
                [one] => (*one).to_owned(),
                [] => return Err(DmnError::MissingOutput("the document has no final decision".into())),
                many => {
                    return Err(DmnError::MissingOutput(format!(
                        "several final decisions ({}); choose one explicitly",
                        many.join(", ")
                    )))
                }
            }
        }
    };

    // Names resolve to ids so input expressions may use either.
    let mut by_alias: HashMap<String, String> = HashMap::new();
    for (id, name, _) in &inputs {
        by_alias.insert(id.clone(), id.clone());
        by_alias.entry(name.clone()).or_insert_with(|| id.clone());
    }
    for d in &decisions {
        by_alias.insert(d.id.clone(), d.id.clone());
        by_alias.entry(d.name.clone()).or_insert_with(|| d.id.clone());
    }

    let mut nodes = Vec::new();
    let mut column_types: HashMap<String, String> = HashMap::new();
    let mut decision_nodes = Vec::new();
    let mut edges = Vec::new();
    for d in &decisions {
        let Some(table_el) = d.table else {
            return Err(unsupported(&d.path, "decision has no decision table"));
        };
        let table = convert_table(table_el, d, &by_alias, &mut column_types)?;
        for r in &d.requires {
            edges.push(Edge::new(r.clone(), d.id.clone()));
        }
        let kind = if d.id == output_id {
            NodeKind::Output
        } else {
            NodeKind::Decision
        };
        decision_nodes.push(Node {
            id: d.id.clone(),
            name: d.name.clone(),
            kind,
            value_type: None,
            table: Some(table),
        });
    }
    for (id, name, type_ref) in &inputs {
        let value_type = type_ref
            .as_deref()
            .and_then(ValueType::from_type_ref)
            .or_else(|| column_types.get(id).and_then(|t| ValueType::from_type_ref(t)))
            .unwrap_or(ValueType::String);
        nodes.push(Node::input(id.clone(), name.clone(), value_type));
    }
    nodes.extend(decision_nodes);

    let graph = DecisionGraph {
        id: model_id,
        model_type,
        nodes,
        edges,
        output_node_id: output_id,
    };
    let report = validate_graph(&graph);
    if !report.is_ok() {
        return Err(DmnError::Invalid(report));
    }
    Ok(ParsedDmn { graph, article_links })
}

fn convert_table(
    table_el: XmlNode,
    d: &RawDecision,
    by_alias: &HashMap<String, String>,
    column_types: &mut HashMap<String, String>,
) -> Result<DecisionTable, DmnError> {
    let path = format!("{}/decisionTable", d.path);
    let hit_text = table_el.attribute("hitPolicy").unwrap_or("UNIQUE");
    let hit_policy: HitPolicy = hit_text.parse().map_err(|_| {
        unsupported(
            format!("{path}/@hitPolicy"),
            format!("hit policy `{hit_text}` is not supported"),
        )
    })?;
    if let Some(agg) = table_el.attribute("aggregation") {
        return Err(unsupported(
            format!("{path}/@aggregation"),
            format!("COLLECT aggregation `{agg}` is not supported"),
        ));
    }

    let columns: Vec<XmlNode> = children(table_el, "input").collect();
    let mut input_refs = Vec::with_capacity(columns.len());
    for (i, col) in columns.iter().enumerate() {
        let expr = child(*col, "inputExpression");
        let expr_text = text_of(expr);
        let label = col.attribute("label").unwrap_or("").trim();
        let resolved = by_alias
            .get(expr_text.as_str())
            .or_else(|| by_alias.get(label))
            .filter(|id| d.requires.contains(id))
            .cloned()
            .or_else(|| (columns.len() == d.requires.len()).then(|| d.requires[i].clone()));
        let Some(id) = resolved else {
            return Err(unsupported(
                format!("{path}/input[{}]/inputExpression", i + 1),
                format!("input expression `{expr_text}` does not name a required input or decision"),
            ));
        };
        if let Some(t) = expr.and_then(|e| e.attribute("typeRef")) {
            column_types.entry(id.clone()).or_insert_with(|| t.to_owned());
        }
        input_refs.push(id);
    }

    let outputs: Vec<XmlNode> = children(table_el, "output").collect();
    if outputs.len() != 1 {
        return Err(unsupported(
            format!("{path}/output"),
            format!("expected exactly one output column, found {}", outputs.len()),
        ));
    }
    let output_name = outputs[0]
        .attribute("name")
        .or_else(|| outputs[0].attribute("label"))
        .unwrap_or(&d.name)
        .to_owned();

    let mut rules = Vec::new();
    for (j, rule) in children(table_el, "rule").enumerate() {
        let rule_path = format!("{path}/rule[{}]", j + 1);
        let mut conditions = Vec::new();
        for (k, entry) in children(rule, "inputEntry").enumerate() {
            let t = entry
                .children()
                .find(|c| c.is_element() && c.tag_name().name() == "text")
                .and_then(|t| t.text())
                .unwrap_or("")
                .trim();
            let test = if t.is_empty() {
                UnaryTest::Irrelevant
            } else {
                parse_unary_test(t)
                    .map_err(|e| unsupported(format!("{rule_path}/inputEntry[{}]", k + 1), e.to_string()))?
            };
            conditions.push(test);
        }
        let entries: Vec<XmlNode> = children(rule, "outputEntry").collect();
        if entries.len() != 1 {
            return Err(unsupported(
                format!("{rule_path}/outputEntry"),
                format!("expected one output entry, found {}", entries.len()),
            ));
        }
        let out_text = text_of(Some(entries[0]));
        let output_value = if out_text.is_empty() {
            Value::Null
        } else {
            parse_literal(&out_text).map_err(|e| {
                unsupported(
                    format!("{rule_path}/outputEntry[1]"),
                    format!("output is not a literal: {e}"),
                )
            })?
        };
        rules.push(Rule {
            conditions,
            output_value,
        });
    }
    Ok(DecisionTable {
        hit_policy,
        input_refs,
        output_name,
        rules,
    })
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn xml_id(s: &str) -> String {
    let mut id: String = s
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if !id.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
        id.insert(0, '_');
    }
    id
}

fn output_type(table: &DecisionTable) -> &'static str {
    let mut kinds = table.rules.iter().map(|r| &r.output_value).filter(|v| !v.is_null());
    match kinds.next() {
        Some(Value::Boolean(_)) => "boolean",
        Some(Value::Number(_)) => "number",
        _ => "string",
    }
}

/// Writes a DMN 1.3 document that [`parse_dmn_with`] reads back to `g`.
/// Article links become knowledge sources.
pub fn to_dmn_xml(g: &DecisionGraph, article_links: &[String]) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<definitions xmlns=\"https://www.omg.org/spec/DMN/20191111/MODEL/\" id=\"{}\" name=\"{}\" namespace=\"https://example.org/legaldmn\">",
        escape(&xml_id(&g.id)),
        escape(&g.id)
    );
    let mut preds: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in &g.edges {
        preds.entry(e.to.as_str()).or_default().push(e.from.as_str());
    }
    let kinds: HashMap<&str, NodeKind> = g.nodes.iter().map(|n| (n.id.as_str(), n.kind)).collect();
    for n in &g.nodes {
        if n.kind == NodeKind::InputVariable {
            let t = n.value_type.unwrap_or(ValueType::String).as_str();
            let _ = writeln!(
                out,
                "  <inputData id=\"{}\" name=\"{}\">",
                escape(&n.id),
                escape(&n.name)
            );
            let _ = writeln!(out, "    <variable name=\"{}\" typeRef=\"{t}\"/>", escape(&n.name));
            out.push_str("  </inputData>\n");
        }
    }
    for n in &g.nodes {
        let Some(table) = &n.table else { continue };
        let _ = writeln!(
            out,
            "  <decision id=\"{}\" name=\"{}\">",
            escape(&n.id),
            escape(&n.name)
        );
        let _ = writeln!(
            out,
            "    <variable name=\"{}\" typeRef=\"{}\"/>",
            escape(&n.name),
            output_type(table)
        );
        for p in preds.get(n.id.as_str()).into_iter().flatten() {
            let tag = if kinds.get(p) == Some(&NodeKind::InputVariable) {
                "requiredInput"
            } else {
                "requiredDecision"
            };
            let _ = writeln!(
                out,
                "    <informationRequirement>\n      <{tag} href=\"#{}\"/>\n    </informationRequirement>",
                escape(p)
            );
        }
        let _ = writeln!(out, "    <decisionTable hitPolicy=\"{}\">", table.hit_policy.as_str());
        for r in &table.input_refs {
            let _ = writeln!(
                out,
                "      <input>\n        <inputExpression>\n          <text>{}</text>\n        </inputExpression>\n      </input>",
                escape(r)
            );
        }
        let _ = writeln!(
            out,
            "      <output name=\"{}\" typeRef=\"{}\"/>",
            escape(&table.output_name),
            output_type(table)
        );
        for rule in &table.rules {
            out.push_str("      <rule>\n");
            for c in &rule.conditions {
                let _ = writeln!(
                    out,
                    "        <inputEntry>\n          <text>{}</text>\n        </inputEntry>",
                    escape(&c.render())
                );
            }
            let _ = writeln!(
                out,
                "        <outputEntry>\n          <text>{}</text>\n        </outputEntry>",
                escape(&rule.output_value.render())
            );
            out.push_str("      </rule>\n");
        }
        out.push_str("    </decisionTable>\n  </decision>\n");
    }
    for (i, link) in article_links.iter().enumerate() {
        let _ = writeln!(
            out,
            "  <knowledgeSource id=\"ks_{i}\" name=\"{}\" locationURI=\"{}\"/>",
            escape(link),
            escape(link)
        );
    }
    out.push_str("</definitions>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn opts_for(g: &DecisionGraph) -> DmnOptions {
        DmnOptions {
            output_id: Some(g.output_node_id.clone()),
            ..DmnOptions::default()
        }
    }

    #[test]
    fn writer_round_trips_fixtures() {
        for g in synth::mini_corpus_graphs() {
            let xml = to_dmn_xml(&g, &["bal:art1".to_owned()]);
            let parsed = parse_dmn_with(xml.as_bytes(), &opts_for(&g)).unwrap();
            let mut expected = g.clone();
            // Inputs come first in the document.
            expected.nodes.sort_by_key(|n| n.kind != NodeKind::InputVariable);
            let mut got = parsed.graph.clone();
            got.edges.sort_by(|a, b| (&a.to, &a.from).cmp(&(&b.to, &b.from)));
            expected.edges.sort_by(|a, b| (&a.to, &a.from).cmp(&(&b.to, &b.from)));
            assert_eq!(got, expected, "{}", g.id);
            assert_eq!(parsed.article_links, vec!["bal:art1".to_owned()]);
        }
    }

    #[test]
    fn minimal_document() {
        let xml = r##"<?xml version="1.0"?>
<definitions xmlns="https://www.omg.org/spec/DMN/20191111/MODEL/" id="m" name="Outcome - Mini">
  <inputData id="a" name="Heeft A"><variable name="Heeft A" typeRef="boolean"/></inputData>
  <decision id="d" name="Besluit">
    <informationRequirement><requiredInput href="#a"/></informationRequirement>
    <decisionTable>
      <input label="Heeft A"><inputExpression typeRef="boolean"><text>Heeft A</text></inputExpression></input>
      <output name="uitkomst" typeRef="boolean"/>
      <rule><inputEntry><text>true</text></inputEntry><outputEntry><text>true</text></outputEntry></rule>
      <rule><inputEntry><text>-</text></inputEntry><outputEntry><text>false</text></outputEntry></rule>
    </decisionTable>
  </decision>
</definitions>"##;
        let g = parse_dmn(xml.as_bytes()).unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.model_type, ModelType::Outcome);
        assert_eq!(g.output_node_id, "d");
        let t = g.node("d").unwrap().table.as_ref().unwrap();
        assert_eq!(t.hit_policy, HitPolicy::Unique);
        assert_eq!(t.input_refs, vec!["a".to_owned()]);
        assert_eq!(t.rules[1].conditions[0], UnaryTest::Irrelevant);
    }

    #[test]
    fn reports_non_literal_output_with_path() {
        let xml = r##"<definitions id="m" name="Outcome - X">
  <inputData id="a" name="a"><variable typeRef="number"/></inputData>
  <decision id="d" name="d">
    <informationRequirement><requiredInput href="#a"/></informationRequirement>
    <decisionTable hitPolicy="FIRST">
      <input><inputExpression><text>a</text></inputExpression></input>
      <output name="o"/>
      <rule><inputEntry><text>&gt; 3</text></inputEntry><outputEntry><text>a * 2</text></outputEntry></rule>
    </decisionTable>
  </decision>
</definitions>"##;
        match parse_dmn(xml.as_bytes()) {
            Err(DmnError::Unsupported { path, .. }) => {
                assert_eq!(
                    path,
                    "definitions/decision[@id='d']/decisionTable/rule[1]/outputEntry[1]"
                )
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unsupported_policies_and_bad_xml() {
        let xml = r##"<definitions name="Outcome - X"><decision id="d" name="d">
            <decisionTable hitPolicy="PRIORITY"><output name="o"/></decisionTable></decision></definitions>"##;
        assert!(matches!(parse_dmn(xml.as_bytes()), Err(DmnError::Unsupported { .. })));
        assert!(matches!(parse_dmn(b"<definitions"), Err(DmnError::Xml(_))));
        assert!(matches!(
            parse_dmn(b"<definitions name='Outcome - X'/>"),
            Err(DmnError::MissingOutput(_))
        ));
        assert!(matches!(
            parse_dmn(b"<definitions name='Something'/>"),
            Err(DmnError::UnknownModelType(_))
        ));
    }

    #[test]
    fn model_type_from_file_name() {
        assert_eq!(
            infer_model_type("models/Requirements - KoelwaterLozen.dmn"),
            Some(ModelType::Requirements)
        );
        assert_eq!(infer_model_type("Outcome - LozenIndustrieel"), Some(ModelType::Outcome));
        assert_eq!(infer_model_type("misc.dmn"), None);
    }

    #[test]
    fn deterministic() {
        let g = synth::alarm_installation_model();
        let xml = to_dmn_xml(&g, &[]);
        let a = parse_dmn_with(xml.as_bytes(), &opts_for(&g)).unwrap();
        let b = parse_dmn_with(xml.as_bytes(), &opts_for(&g)).unwrap();
        assert_eq!(a, b);
    }
}
