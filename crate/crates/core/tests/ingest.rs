mod common;

use legaldmn::engine::{ExecMode, Executor};
use legaldmn::ingest::corpus::BundleFlag;
use legaldmn::outcome::{assess_testability, generate_cases, TestabilityCaps};
use legaldmn::structeval::descriptive_stats;
use legaldmn::synth;
use legaldmn::ModelType;

#[test]
fn bundled_dmn_files_match_their_generator() {
    let dir = common::mini_corpus_dir().join("models");
    for (name, xml) in synth::mini_corpus_model_files() {
        let on_disk = std::fs::read_to_string(dir.join(&name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(
            on_disk, xml,
            "{name} is stale; rerun `cargo run --example write_mini_corpus`"
        );
    }
}

#[test]
fn mini_corpus_loads_with_articles_and_srl() {
    let c = common::mini_corpus();
    assert_eq!(c.bundles.len(), 6);
    assert_eq!(c.count(ModelType::Outcome), 3);
    assert_eq!(c.count(ModelType::Requirements), 3);
    assert!(c.warnings.is_empty(), "{:?}", c.warnings);
    for b in &c.bundles {
        assert!(
            b.articles.len() >= 3,
            "{} has {} articles",
            b.graph.id,
            b.articles.len()
        );
        assert!(!b.flags.contains(&BundleFlag::MissingArticles));
    }
    let koel = c.bundle("Requirements - KoelwaterLozen").unwrap();
    let srl = koel.srl.as_ref().unwrap();
    assert!(srl.objects.contains(&"koelwater".to_owned()));
    assert!(srl.objects.contains(&"de maximale warmtevracht".to_owned()));
    let tank = c.bundle("Outcome - OpslaanOpslagtank").unwrap();
    assert!(tank.srl.is_none());
    assert!(tank.flags.contains(&BundleFlag::MissingSrl));
}

#[test]
fn linked_articles_expand_one_level() {
    let c = common::mini_corpus();
    let wind = c.bundle("Outcome - GeluidProdWindturbine").unwrap();
    assert_eq!(wind.seed_article_ids, vec!["bal-3.10", "bal-3.11"]);
    let ids: Vec<&str> = wind.articles.iter().map(|a| a.id.as_str()).collect();
    assert_eq!(ids, vec!["bal-3.10", "bal-3.11", "bal-3.12"]);
    let tank = c.bundle("Outcome - OpslaanOpslagtank").unwrap();
    let ids: Vec<&str> = tank.articles.iter().map(|a| a.id.as_str()).collect();
    assert_eq!(ids, vec!["bal-4.30", "bal-4.31", "bal-4.32"]);
}

#[test]
fn parsed_models_behave_like_their_sources() {
    let c = common::mini_corpus();
    for source in synth::mini_corpus_graphs() {
        let parsed = &c.bundle(&source.id).unwrap().graph;
        assert_eq!(descriptive_stats(parsed), descriptive_stats(&source), "{}", source.id);
        let v = assess_testability(&source, &TestabilityCaps::default());
        assert!(v.eligible, "{}", source.id);
        let a = Executor::new(&source).unwrap();
        let b = Executor::new(parsed).unwrap();
        for case in generate_cases(&v.domains) {
            let x = a.execute(&case, ExecMode::Strict).unwrap();
            let y = b.execute(&case, ExecMode::Strict).unwrap();
            assert_eq!(x.output_value, y.output_value, "{} on {case:?}", source.id);
        }
    }
}

#[test]
fn compact_form_is_smaller_than_dmn() {
    let c = common::mini_corpus();
    let ratio = c.mean_byte_ratio().unwrap();
    assert!(ratio > 1.0, "{ratio}");
}
