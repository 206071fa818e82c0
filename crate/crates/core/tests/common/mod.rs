#![allow(dead_code)]

use std::path::PathBuf;

use legaldmn::ingest::{Corpus, CorpusOptions};
use legaldmn::pipeline::load_corpus_root;

pub fn mini_corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini_corpus")
}

pub fn mini_corpus() -> Corpus {
    let c = load_corpus_root(&mini_corpus_dir(), &CorpusOptions::default()).expect("mini corpus loads");
    assert!(c.errors.is_empty(), "{:?}", c.errors);
    c
}
