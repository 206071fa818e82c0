//! Reading and writing decision models and legal texts.

pub mod articles;
pub mod compact;
pub mod corpus;
pub mod dmn;

pub use articles::{expand_cross_references, parse_articles, ArticleStore, Expansion, LegalArticle};
pub use compact::{deserialize_graph, serialize_graph, SchemaError};
pub use corpus::{load_corpus, load_graph, Corpus, CorpusOptions, ModelBundle, SrlRecord};
pub use dmn::{parse_dmn, parse_dmn_with, to_dmn_xml, DmnError, DmnOptions};
