//! Experimental conditions, I/O specifications and prompt assembly.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ingest::compact::{serialize_graph_pretty, FORMAT_TAG};
use crate::ingest::{LegalArticle, ModelBundle};
use crate::model::{DecisionGraph, ModelType};
use crate::value::ValueType;

pub const TEMPLATE_VERSION: &str = "v1";
const SYSTEM_TEMPLATE: &str = include_str!("../../templates/system_v1.txt");
const USER_TEMPLATE: &str = include_str!("../../templates/user_v1.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    Text,
    TextSrl,
    TextIo,
    TextSrlIo,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::Text,
        Condition::TextSrl,
        Condition::TextIo,
        Condition::TextSrlIo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Text => "Text",
            Condition::TextSrl => "Text+SRL",
            Condition::TextIo => "Text+IO",
            Condition::TextSrlIo => "Text+SRL+IO",
        }
    }

    pub fn uses_srl(self) -> bool {
        matches!(self, Condition::TextSrl | Condition::TextSrlIo)
    }

    pub fn uses_io(self) -> bool {
        matches!(self, Condition::TextIo | Condition::TextSrlIo)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        match key.as_str() {
            "text" => Ok(Condition::Text),
            "textsrl" => Ok(Condition::TextSrl),
            "textio" => Ok(Condition::TextIo),
            "textsrlio" => Ok(Condition::TextSrlIo),
            _ => Err(format!("unknown condition `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoInput {
    pub id: String,
    pub name: String,
    pub value_type: ValueType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IoOutputType {
    Boolean,
    /// Texts the outcome must be one of.
    OutcomeClasses {
        labels: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoSpecification {
    pub inputs: Vec<IoInput>,
    pub output_name: String,
    pub output_type: IoOutputType,
}

/// Labels offered for Outcome models, one per regulatory outcome class.
pub const OUTCOME_LABELS: [&str; 4] = [
    "Niet van toepassing",
    "Vergunningplicht",
    "Algemene regels",
    "Meldingsplicht",
];

pub fn build_io_spec(g: &DecisionGraph) -> IoSpecification {
    let inputs = g
        .sorted_inputs()
        .into_iter()
        .map(|n| IoInput {
            id: n.id.clone(),
            name: n.name.clone(),
            value_type: n.value_type.unwrap_or(ValueType::String),
        })
        .collect();
    let output_name = g.output_node().map(|n| n.name.clone()).unwrap_or_default();
    let output_type = match g.model_type {
        ModelType::Requirements => IoOutputType::Boolean,
        ModelType::Outcome => IoOutputType::OutcomeClasses {
            labels: OUTCOME_LABELS.iter().map(|s| (*s).to_owned()).collect(),
        },
    };
    IoSpecification {
        inputs,
        output_name,
        output_type,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template variable `{0}` is not resolved")]
    Unresolved(String),
}

fn placeholder() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{\s*([A-Za-z0-9_]+)\s*\}\}").expect("valid regex"))
}

/// Substitutes `{{name}}` placeholders in one pass.
pub fn render_template(template: &str, vars: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len());
    let mut last = 0;
    for caps in placeholder().captures_iter(template) {
        let whole = caps.get(0).expect("match");
        let name = &caps[1];
        let value = vars
            .get(name)
            .ok_or_else(|| TemplateError::Unresolved(name.to_owned()))?;
        out.push_str(&template[last..whole.start()]);
        out.push_str(value);
        last = whole.end();
    }
    out.push_str(&template[last..]);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
    pub hash: String,
    /// The condition asked for SRL annotations but the target has none.
    pub srl_missing: bool,
}

pub fn prompt_hash(system: &str, user: &str) -> String {
    let mut h = Sha256::new();
    h.update(TEMPLATE_VERSION.as_bytes());
    h.update([0]);
    h.update(system.as_bytes());
    h.update([0]);
    h.update(user.as_bytes());
    hex::encode(h.finalize())
}

fn render_articles(articles: &[LegalArticle]) -> String {
    let mut out = String::new();
    for (i, a) in articles.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = write!(out, "### {}", a.id);
        if !a.title.is_empty() {
            let _ = write!(out, " {}", a.title);
        }
        out.push('\n');
        out.push_str(&a.body_text);
        out.push('\n');
    }
    if out.is_empty() {
        out.push_str("(none)\n");
    }
    out.trim_end().to_owned()
}

/// The SRL block, including its trailing blank line.
pub fn render_srl_block(srl: &crate::ingest::SrlRecord) -> String {
    let mut out = String::from("## Semantic roles in the target articles\n\n");
    for (label, items) in [
        ("Actors", &srl.actors),
        ("Actions", &srl.actions),
        ("Objects", &srl.objects),
        ("Recipients", &srl.recipients),
    ] {
        let _ = writeln!(
            out,
            "{label}: {}",
            if items.is_empty() {
                "(none)".to_owned()
            } else {
                items.join("; ")
            }
        );
    }
    out.push('\n');
    out
}

/// The I/O block, including its trailing blank line.
pub fn render_io_block(io: &IoSpecification) -> String {
    let mut out = String::from("## Required interface\n\nUse exactly these input nodes:\n");
    for i in &io.inputs {
        let _ = writeln!(out, "- id `{}`, name \"{}\", type {}", i.id, i.name, i.value_type);
    }
    let _ = write!(out, "The output node is named \"{}\" and returns ", io.output_name);
    match &io.output_type {
        IoOutputType::Boolean => out.push_str("a boolean.\n"),
        IoOutputType::OutcomeClasses { labels } => {
            let quoted: Vec<String> = labels.iter().map(|l| format!("\"{l}\"")).collect();
            let _ = writeln!(out, "one of {}.", quoted.join(", "));
        }
    }
    out.push('\n');
    out
}

pub fn build_prompt(
    condition: Condition,
    target: &ModelBundle,
    example: &ModelBundle,
) -> Result<Prompt, TemplateError> {
    let mut system_vars = BTreeMap::new();
    system_vars.insert("format_tag", FORMAT_TAG.to_owned());
    let system = render_template(SYSTEM_TEMPLATE, &system_vars)?;

    let mut srl_missing = false;
    let srl_block = if condition.uses_srl() {
        match &target.srl {
            Some(srl) => render_srl_block(srl),
            None => {
                srl_missing = true;
                String::new()
            }
        }
    } else {
        String::new()
    };
    let io_block = if condition.uses_io() {
        render_io_block(&build_io_spec(&target.graph))
    } else {
        String::new()
    };

    let mut vars = BTreeMap::new();
    vars.insert("model_type", target.graph.model_type.as_str().to_owned());
    vars.insert("example_articles", render_articles(&example.articles));
    vars.insert("example_graph", serialize_graph_pretty(&example.graph));
    vars.insert("target_articles", render_articles(&target.articles));
    vars.insert("srl_block", srl_block);
    vars.insert("io_block", io_block);
    let user = render_template(USER_TEMPLATE, &vars)?;
    let hash = prompt_hash(&system, &user);
    Ok(Prompt {
        system,
        user,
        hash,
        srl_missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unresolved_variable_is_named() {
        let vars = BTreeMap::from([("a", "1".to_owned())]);
        assert_eq!(
            render_template("{{a}} {{ b }}", &vars),
            Err(TemplateError::Unresolved("b".into()))
        );
        assert_eq!(render_template("x{{a}}y", &vars).unwrap(), "x1y");
    }

    #[test]
    fn values_are_not_re_expanded() {
        let vars = BTreeMap::from([("a", "{{b}}".to_owned())]);
        assert_eq!(render_template("{{a}}", &vars).unwrap(), "{{b}}");
    }

    #[test]
    fn condition_names() {
        for c in Condition::ALL {
            assert_eq!(c.as_str().parse::<Condition>().unwrap(), c);
        }
        assert_eq!("text_srl_io".parse::<Condition>().unwrap(), Condition::TextSrlIo);
    }

    #[test]
    fn templates_have_only_known_variables() {
        let names: Vec<String> = placeholder()
            .captures_iter(USER_TEMPLATE)
            .map(|c| c[1].to_owned())
            .collect();
        for n in names {
            assert!(
                [
                    "model_type",
                    "example_articles",
                    "example_graph",
                    "target_articles",
                    "srl_block",
                    "io_block"
                ]
                .contains(&n.as_str()),
                "{n}"
            );
        }
    }
}
