//! Loading a model directory together with its articles and SRL annotations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::articles::{expand_cross_references, parse_articles, ArticleStore, LegalArticle};
use super::compact::{deserialize_graph, serialize_graph};
use super::dmn::{parse_dmn_with, DmnOptions};
use crate::model::{DecisionGraph, ModelType};

/// Semantic-role annotation of one model's articles.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SrlRecord {
    #[serde(default)]
    pub actors: Vec<String>,
    #[serde(default)]
    pub actions: Vec<String>,
    #[serde(default)]
    pub objects: Vec<String>,
    #[serde(default)]
    pub recipients: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleFlag {
    MissingArticles,
    MissingSrl,
    UnresolvedArticleLink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub graph: DecisionGraph,
    /// Articles linked by the model, before expansion.
    pub seed_article_ids: Vec<String>,
    /// Linked articles followed by their one-level expansion.
    pub articles: Vec<LegalArticle>,
    pub srl: Option<SrlRecord>,
    pub flags: Vec<BundleFlag>,
    pub source_path: String,
    pub source_bytes: usize,
    pub compact_bytes: usize,
}

impl ModelBundle {
    /// A bundle with no articles or annotations.
    pub fn new(graph: DecisionGraph) -> ModelBundle {
        let compact_bytes = serialize_graph(&graph).len();
        ModelBundle {
            graph,
            seed_article_ids: Vec::new(),
            articles: Vec::new(),
            srl: None,
            flags: vec![BundleFlag::MissingArticles],
            source_path: String::new(),
            source_bytes: 0,
            compact_bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub bundles: Vec<ModelBundle>,
    pub errors: Vec<FileError>,
    pub warnings: Vec<String>,
}

impl Corpus {
    pub fn graphs(&self) -> impl Iterator<Item = &DecisionGraph> {
        self.bundles.iter().map(|b| &b.graph)
    }

    pub fn bundle(&self, id: &str) -> Option<&ModelBundle> {
        self.bundles.iter().find(|b| b.graph.id == id)
    }

    pub fn count(&self, t: ModelType) -> usize {
        self.bundles.iter().filter(|b| b.graph.model_type == t).count()
    }

    /// Mean source/compact byte ratio, over bundles with a non-empty source.
    pub fn mean_byte_ratio(&self) -> Option<f64> {
        let ratios: Vec<f64> = self
            .bundles
            .iter()
            .filter(|b| b.compact_bytes > 0 && b.source_bytes > 0)
            .map(|b| b.source_bytes as f64 / b.compact_bytes as f64)
            .collect();
        (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64)
    }

    pub fn total_article_refs(&self, expanded: bool) -> usize {
        self.bundles
            .iter()
            .map(|b| {
                if expanded {
                    b.articles.len()
                } else {
                    b.seed_article_ids.len()
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone, Default)]
pub struct CorpusOptions {
    /// Overrides the type inferred from file names.
    pub model_type: Option<ModelType>,
}

fn files_with(dir: &Path, exts: &[&str]) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| exts.iter().any(|x| e.eq_ignore_ascii_case(x)))
        })
        .collect();
    files.sort();
    files
}

fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_owned()
}

struct LoadedModel {
    graph: DecisionGraph,
    links: Vec<String>,
    source_bytes: usize,
    path: String,
}

fn load_model(path: &Path, opts: &CorpusOptions) -> Result<LoadedModel, String> {
    let bytes = fs::read(path).map_err(|e| e.to_string())?;
    let id = stem(path);
    let path_text = path.display().to_string();
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let (mut graph, links) = if is_json {
        let g = deserialize_graph(&bytes).map_err(|e| e.to_string())?;
        (g, Vec::new())
    } else {
        let dmn_opts = DmnOptions {
            model_id: Some(id.clone()),
            model_type: opts.model_type,
            output_id: None,
            file_hint: Some(path_text.clone()),
        };
        let parsed = parse_dmn_with(&bytes, &dmn_opts).map_err(|e| e.to_string())?;
        (parsed.graph, parsed.article_links)
    };
    graph.id = id;
    if let Some(t) = opts.model_type {
        graph.model_type = t;
    }
    Ok(LoadedModel {
        graph,
        links,
        source_bytes: if is_json { 0 } else { bytes.len() },
        path: path_text,
    })
}

/// Reads a single model file the same way [`load_corpus`] does.
pub fn load_graph(path: &Path, opts: &CorpusOptions) -> Result<DecisionGraph, String> {
    load_model(path, opts).map(|m| m.graph)
}

fn resolve_link<'a>(link: &'a str, store: &ArticleStore) -> Option<&'a str> {
    if store.contains_key(link) {
        return Some(link);
    }
    let tail = link.rsplit(['#', '/']).next().unwrap_or(link);
    store.contains_key(tail).then_some(tail)
}

/// Loads every model under `model_dir` (`.dmn`, `.xml`, compact `.json`),
/// every article under `article_dir`, and SRL records `<model id>.json` from
/// `srl_dir`. Unreadable files become entries in [`Corpus::errors`].
pub fn load_corpus(
    model_dir: &Path,
    article_dir: Option<&Path>,
    srl_dir: Option<&Path>,
    opts: &CorpusOptions,
) -> Corpus {
    let mut corpus = Corpus::default();

    let mut store = ArticleStore::new();
    if let Some(dir) = article_dir {
        let parsed: Vec<(PathBuf, Result<Vec<LegalArticle>, String>)> = files_with(dir, &["xml"])
            .into_par_iter()
            .map(|p| {
                let r = fs::read_to_string(&p)
                    .map_err(|e| e.to_string())
                    .and_then(|t| parse_articles(&t, &p.display().to_string()).map_err(|e| e.to_string()));
                (p, r)
            })
            .collect();
        for (p, r) in parsed {
            match r {
                Ok(articles) => {
                    for a in articles {
                        if store.contains_key(&a.id) {
                            corpus
                                .warnings
                                .push(format!("duplicate article id `{}` in {}", a.id, p.display()));
                            continue;
                        }
                        store.insert(a.id.clone(), a);
                    }
                }
                Err(message) => corpus.errors.push(FileError {
                    path: p.display().to_string(),
                    message,
                }),
            }
        }
    }

    let loaded: Vec<(PathBuf, Result<LoadedModel, String>)> = files_with(model_dir, &["dmn", "xml", "json"])
        .into_par_iter()
        .map(|p| {
            let r = load_model(&p, opts);
            (p, r)
        })
        .collect();

    let mut by_id: BTreeMap<String, LoadedModel> = BTreeMap::new();
    for (p, r) in loaded {
        match r {
            Ok(m) => {
                if by_id.contains_key(&m.graph.id) {
                    corpus.errors.push(FileError {
                        path: p.display().to_string(),
                        message: format!("duplicate model id `{}`", m.graph.id),
                    });
                } else {
                    by_id.insert(m.graph.id.clone(), m);
                }
            }
            Err(message) => corpus.errors.push(FileError {
                path: p.display().to_string(),
                message,
            }),
        }
    }

    for (id, m) in by_id {
        let mut flags = Vec::new();
        let mut seed = Vec::new();
        for link in &m.links {
            match resolve_link(link, &store) {
                Some(a) if !seed.iter().any(|s| s == a) => seed.push(a.to_owned()),
                Some(_) => {}
                None => {
                    corpus
                        .warnings
                        .push(format!("model `{id}` links unknown article `{link}`"));
                    if !flags.contains(&BundleFlag::UnresolvedArticleLink) {
                        flags.push(BundleFlag::UnresolvedArticleLink);
                    }
                }
            }
        }
        let expansion = expand_cross_references(&seed, &store);
        corpus
            .warnings
            .extend(expansion.warnings.into_iter().map(|w| format!("model `{id}`: {w}")));
        let articles: Vec<LegalArticle> = expansion.ids.iter().filter_map(|a| store.get(a).cloned()).collect();
        if articles.is_empty() {
            flags.push(BundleFlag::MissingArticles);
        }

        let srl = match srl_dir {
            Some(dir) => {
                let p = dir.join(format!("{id}.json"));
                if p.is_file() {
                    match fs::read(&p)
                        .map_err(|e| e.to_string())
                        .and_then(|b| serde_json::from_slice::<SrlRecord>(&b).map_err(|e| e.to_string()))
                    {
                        Ok(r) => Some(r),
                        Err(message) => {
                            corpus.errors.push(FileError {
                                path: p.display().to_string(),
                                message,
                            });
                            None
                        }
                    }
                } else {
                    None
                }
            }
            None => None,
        };
        if srl_dir.is_some() && srl.is_none() {
            flags.push(BundleFlag::MissingSrl);
        }
        flags.sort();

        let compact_bytes = serialize_graph(&m.graph).len();
        corpus.bundles.push(ModelBundle {
            graph: m.graph,
            seed_article_ids: seed,
            articles,
            srl,
            flags,
            source_path: m.path,
            source_bytes: m.source_bytes,
            compact_bytes,
        });
    }
    corpus
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    model_type: ModelType,
    source: &'a str,
    articles: Vec<&'a str>,
    seed_articles: &'a [String],
    flags: &'a [BundleFlag],
}

/// Model id → article ids and flags, as pretty JSON.
pub fn manifest_json(corpus: &Corpus) -> String {
    let entries: BTreeMap<&str, ManifestEntry> = corpus
        .bundles
        .iter()
        .map(|b| {
            (
                b.graph.id.as_str(),
                ManifestEntry {
                    model_type: b.graph.model_type,
                    source: &b.source_path,
                    articles: b.articles.iter().map(|a| a.id.as_str()).collect(),
                    seed_articles: &b.seed_article_ids,
                    flags: &b.flags,
                },
            )
        })
        .collect();
    serde_json::to_string_pretty(&entries).expect("manifest serialization is infallible")
}
