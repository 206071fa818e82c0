//! Legal-article XML and cross-reference expansion.
//!
//! Accepted shape: any document containing `artikel` (or `article`) elements.
//! Each article carries an `id` (or `label`) attribute, optionally an `act`
//! attribute inherited from the nearest ancestor that has one, a `kop/titel`
//! or `titel`/`title` heading, body text, `li` list items, `IntRef`/`ExtRef`
//! references through their `ref` (or `doc`, `href`) attribute, and an optional
//! `toelichting`/`recital` child holding the explanatory text.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;
use roxmltree::{Document, Node as XmlNode};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LegalArticle {
    pub id: String,
    pub act_id: String,
    pub title: String,
    pub body_text: String,
    pub recital_text: String,
    pub internal_refs: Vec<String>,
    pub external_refs: Vec<String>,
    pub list_item_count: usize,
    pub source_xml_path: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ArticleError {
    #[error("XML syntax error: {0}")]
    Xml(String),
    #[error("article without id at {0}")]
    MissingId(String),
}

fn is(node: &XmlNode, names: &[&str]) -> bool {
    node.is_element() && names.iter().any(|n| node.tag_name().name().eq_ignore_ascii_case(n))
}

const ARTICLE: &[&str] = &["artikel", "article"];
const TITLE: &[&str] = &["titel", "title"];
const HEADING: &[&str] = &["kop", "heading"];
const RECITAL: &[&str] = &["toelichting", "recital"];
const INT_REF: &[&str] = &["intref"];
const EXT_REF: &[&str] = &["extref"];
const BLOCKS: &[&str] = &["al", "p", "li", "lid", "para", "lijst", "list"];

fn ref_target(node: &XmlNode) -> Option<String> {
    ["ref", "doc", "href"]
        .iter()
        .find_map(|a| node.attribute(*a))
        .map(|s| s.trim().trim_start_matches('#').to_owned())
        .filter(|s| !s.is_empty())
}

fn enumeration_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^\s*(?:[a-z]\.|\d+°|-)\s+\S").expect("valid regex"))
}

fn collect_text(node: XmlNode, out: &mut String) {
    for c in node.children() {
        if c.is_text() {
            out.push_str(c.text().unwrap_or(""));
        } else if c.is_element() {
            if is(&c, BLOCKS) && !out.ends_with('\n') && !out.is_empty() {
                out.push('\n');
            }
            collect_text(c, out);
            if is(&c, BLOCKS) && !out.ends_with('\n') {
                out.push('\n');
            }
        }
    }
}

fn normalize(text: &str) -> String {
    text.lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses every article in one XML document.
pub fn parse_articles(xml: &str, source_path: &str) -> Result<Vec<LegalArticle>, ArticleError> {
    let doc = Document::parse(xml).map_err(|e| ArticleError::Xml(e.to_string()))?;
    let mut out = Vec::new();
    for el in doc.descendants().filter(|n| is(n, ARTICLE)) {
        let id = el
            .attribute("id")
            .or_else(|| el.attribute("label"))
            .ok_or_else(|| ArticleError::MissingId(format!("{source_path}:{}", doc.text_pos_at(el.range().start))))?
            .trim()
            .to_owned();
        let act_id = el.ancestors().find_map(|a| a.attribute("act")).unwrap_or("").to_owned();

        let mut title = String::new();
        let mut body = String::new();
        let mut recital = String::new();
        for c in el.children() {
            if is(&c, HEADING) {
                if let Some(t) = c.children().find(|n| is(n, TITLE)) {
                    collect_text(t, &mut title);
                }
            } else if is(&c, TITLE) {
                collect_text(c, &mut title);
            } else if is(&c, RECITAL) {
                collect_text(c, &mut recital);
            } else if c.is_element() {
                if !body.is_empty() && !body.ends_with('\n') {
                    body.push('\n');
                }
                collect_text(c, &mut body);
            } else if c.is_text() {
                body.push_str(c.text().unwrap_or(""));
            }
        }
        let body_text = normalize(&body);

        let in_recital = |n: &XmlNode| n.ancestors().any(|a| is(&a, RECITAL));
        let mut internal_refs = Vec::new();
        let mut external_refs = Vec::new();
        let mut seen_int = BTreeSet::new();
        let mut seen_ext = BTreeSet::new();
        for r in el.descendants().filter(|n| !in_recital(n)) {
            if is(&r, INT_REF) {
                if let Some(t) = ref_target(&r) {
                    if t != id && seen_int.insert(t.clone()) {
                        internal_refs.push(t);
                    }
                }
            } else if is(&r, EXT_REF) {
                if let Some(t) = ref_target(&r) {
                    if seen_ext.insert(t.clone()) {
                        external_refs.push(t);
                    }
                }
            }
        }

        let li = el.descendants().filter(|n| is(n, &["li"]) && !in_recital(n)).count();
        let list_item_count = if li > 0 {
            li
        } else {
            enumeration_marker().find_iter(&body_text).count()
        };

        out.push(LegalArticle {
            id,
            act_id,
            title: normalize(&title).replace('\n', " "),
            body_text,
            recital_text: normalize(&recital),
            internal_refs,
            external_refs,
            list_item_count,
            source_xml_path: source_path.to_owned(),
        });
    }
    Ok(out)
}

pub type ArticleStore = BTreeMap<String, LegalArticle>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Expansion {
    pub ids: Vec<String>,
    pub warnings: Vec<String>,
}

/// Seed plus the same-act internal references of seed articles, one level deep.
/// Order: seed order, then newly added ids ascending.
pub fn expand_cross_references(seed: &[String], corpus: &ArticleStore) -> Expansion {
    let mut ids: Vec<String> = Vec::new();
    let mut present = BTreeSet::new();
    let mut warnings = Vec::new();
    for s in seed {
        if present.insert(s.clone()) {
            ids.push(s.clone());
        }
    }
    let mut added = BTreeSet::new();
    for s in seed {
        let Some(article) = corpus.get(s) else {
            warnings.push(format!("seed article `{s}` is not in the corpus"));
            continue;
        };
        for r in &article.internal_refs {
            match corpus.get(r) {
                None => warnings.push(format!("`{s}` references unknown article `{r}`")),
                Some(target) if target.act_id == article.act_id => {
                    if !present.contains(r) {
                        added.insert(r.clone());
                    }
                }
                Some(_) => {}
            }
        }
    }
    ids.extend(added);
    Expansion { ids, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"<wet act="bal">
  <artikel id="A">
    <kop><label>Artikel</label><nr>1</nr><titel>Aanwijzing</titel></kop>
    <al>Dit artikel verwijst naar <IntRef ref="B"/> en <IntRef ref="C">artikel C</IntRef>.</al>
    <al>Zie ook <IntRef ref="B"/>, <IntRef ref="A"/> en <ExtRef ref="bwbr:1">de wet</ExtRef>.</al>
    <lijst><li>a. een</li><li>b. twee</li></lijst>
    <toelichting><al>Uitleg bij <IntRef ref="Z"/>.</al></toelichting>
  </artikel>
  <artikel id="B"><al>Tekst <IntRef ref="D"/>.</al></artikel>
  <artikel id="C"><titel>C</titel><al>Zonder lijst:
a. eerste
b. tweede
c. derde</al></artikel>
  <artikel id="D"><al>Einde.</al></artikel>
  <hoofdstuk act="bbl"><artikel id="E"><al>Ander besluit.</al></artikel></hoofdstuk>
</wet>"#;

    fn store() -> ArticleStore {
        parse_articles(DOC, "doc.xml")
            .unwrap()
            .into_iter()
            .map(|a| (a.id.clone(), a))
            .collect()
    }

    #[test]
    fn parses_fields() {
        let s = store();
        let a = &s["A"];
        assert_eq!(a.title, "Aanwijzing");
        assert_eq!(a.act_id, "bal");
        assert_eq!(a.internal_refs, vec!["B", "C"]);
        assert_eq!(a.external_refs, vec!["bwbr:1"]);
        assert_eq!(a.list_item_count, 2);
        assert_eq!(a.recital_text, "Uitleg bij .");
        assert!(!a.body_text.contains("Uitleg"));
        assert_eq!(s["C"].list_item_count, 3);
        assert_eq!(s["E"].act_id, "bbl");
        assert_eq!(s["D"].recital_text, "");
    }

    #[test]
    fn one_level_expansion() {
        let s = store();
        let e = expand_cross_references(&["A".to_owned()], &s);
        assert_eq!(e.ids, vec!["A", "B", "C"]);
        assert!(e.warnings.is_empty());
        let e = expand_cross_references(&["D".to_owned()], &s);
        assert_eq!(e.ids, vec!["D"]);
    }

    #[test]
    fn expansion_order_and_filters() {
        let mut s = store();
        s.get_mut("D").unwrap().internal_refs = vec!["E".into(), "C".into(), "Q".into(), "B".into()];
        let e = expand_cross_references(&["D".to_owned(), "B".to_owned()], &s);
        // E belongs to another act; Q is dangling.
        assert_eq!(e.ids, vec!["D", "B", "C"]);
        assert_eq!(e.warnings.len(), 1);
    }

    #[test]
    fn malformed_xml() {
        assert!(parse_articles("<wet><artikel id='x'>", "x").is_err());
        assert!(matches!(
            parse_articles("<wet><artikel/></wet>", "x"),
            Err(ArticleError::MissingId(_))
        ));
    }
}
