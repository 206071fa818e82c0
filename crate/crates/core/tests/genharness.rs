mod common;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;

use legaldmn::genharness::prompt::{render_srl_block, Condition};
use legaldmn::genharness::provider::{
    completion_body, request_generation, EchoExampleTransport, FixedTransport, ProviderConfig, ScriptedTransport,
    TransportError,
};
use legaldmn::genharness::run::{read_records, COMPLETED_FILE, RECORDS_FILE};
use legaldmn::genharness::{build_prompt, run_experiment, select_examples, ExperimentOptions, Validity};

const TARGETS: [&str; 2] = ["Outcome - GeluidProdWindturbine", "Requirements - KoelwaterLozen"];

fn options(limit: Option<usize>) -> ExperimentOptions {
    ExperimentOptions {
        conditions: Condition::ALL.to_vec(),
        runs: 5,
        seed: 7,
        targets: Some(TARGETS.iter().map(|t| (*t).to_owned()).collect()),
        limit,
        record_timing: false,
    }
}

#[test]
fn forty_records_and_resume_after_seventeen() {
    let corpus = common::mini_corpus();
    let cfg = ProviderConfig::stub();

    let whole = tempfile::tempdir().unwrap();
    let out = run_experiment(
        &corpus.bundles,
        &options(None),
        &cfg,
        &EchoExampleTransport::default(),
        whole.path(),
    )
    .unwrap();
    assert_eq!(out.records.len(), 40);
    assert_eq!(out.produced, 40);
    assert!(out.records.iter().all(|r| r.validity == Validity::Parsed));

    let split = tempfile::tempdir().unwrap();
    let first = run_experiment(
        &corpus.bundles,
        &options(Some(17)),
        &cfg,
        &EchoExampleTransport::default(),
        split.path(),
    )
    .unwrap();
    assert_eq!(first.produced, 17);
    assert_eq!(first.records.len(), 17);
    let second = run_experiment(
        &corpus.bundles,
        &options(None),
        &cfg,
        &EchoExampleTransport::default(),
        split.path(),
    )
    .unwrap();
    assert_eq!(second.produced, 23);
    assert_eq!(second.skipped, 17);
    assert_eq!(second.records, out.records);

    let a = fs::read(whole.path().join(RECORDS_FILE)).unwrap();
    let b = fs::read(split.path().join(RECORDS_FILE)).unwrap();
    assert_eq!(a, b);
    let keys = fs::read_to_string(split.path().join(COMPLETED_FILE)).unwrap();
    assert_eq!(keys.lines().count(), 40);

    let third = run_experiment(
        &corpus.bundles,
        &options(None),
        &cfg,
        &EchoExampleTransport::default(),
        split.path(),
    )
    .unwrap();
    assert_eq!(third.produced, 0);
    assert_eq!(fs::read(split.path().join(RECORDS_FILE)).unwrap(), a);
}

#[test]
fn truncated_last_line_is_dropped_and_redone() {
    let corpus = common::mini_corpus();
    let cfg = ProviderConfig::stub();
    let dir = tempfile::tempdir().unwrap();
    run_experiment(
        &corpus.bundles,
        &options(Some(5)),
        &cfg,
        &EchoExampleTransport::default(),
        dir.path(),
    )
    .unwrap();
    let path = dir.path().join(RECORDS_FILE);
    let mut f = fs::OpenOptions::new().append(true).open(&path).unwrap();
    f.write_all(b"{\"target_model_id\":\"Outc").unwrap();
    drop(f);
    assert_eq!(read_records(&path).unwrap().len(), 5);
    let out = run_experiment(
        &corpus.bundles,
        &options(None),
        &cfg,
        &EchoExampleTransport::default(),
        dir.path(),
    )
    .unwrap();
    assert_eq!(out.records.len(), 40);
    assert_eq!(read_records(&path).unwrap().len(), 40);
}

#[test]
fn examples_are_fixed_per_target_and_run() {
    let corpus = common::mini_corpus();
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(
        &corpus.bundles,
        &options(None),
        &ProviderConfig::stub(),
        &EchoExampleTransport::default(),
        dir.path(),
    )
    .unwrap();
    let mut seen: BTreeMap<(&str, usize), &str> = BTreeMap::new();
    for r in &out.records {
        let e = r.example_model_id.as_deref().unwrap();
        let prev = *seen.entry((r.target_model_id.as_str(), r.run_index)).or_insert(e);
        assert_eq!(prev, e);
        assert_ne!(e, r.target_model_id);
        let target = corpus.bundle(&r.target_model_id).unwrap();
        assert_eq!(corpus.bundle(e).unwrap().graph.model_type, target.graph.model_type);
    }
    assert_eq!(seen.len(), 10);

    // Selection depends on (seed, target) only, not on which other targets run.
    let target = corpus.bundle(TARGETS[0]).unwrap();
    let s1 = select_examples(target, &corpus.bundles, 5, 7).unwrap();
    let s2 = select_examples(target, &corpus.bundles, 5, 7).unwrap();
    assert_eq!(s1, s2);
    for run in 0..5 {
        assert_eq!(seen[&(TARGETS[0], run)], s1.ids[run]);
    }
}

#[test]
fn srl_and_io_blocks_compose() {
    let corpus = common::mini_corpus();
    let target = corpus.bundle("Requirements - KoelwaterLozen").unwrap();
    let example = corpus.bundle("Requirements - AlarminstallatieHebben").unwrap();
    let p = |c| build_prompt(c, target, example).unwrap();
    let srl = render_srl_block(target.srl.as_ref().unwrap());
    let text = p(Condition::Text);
    let with_srl = p(Condition::TextSrl);
    let with_io = p(Condition::TextIo);
    let both = p(Condition::TextSrlIo);
    assert_eq!(text.system, both.system);
    assert_eq!(with_srl.user.replacen(&srl, "", 1), text.user);
    assert_eq!(both.user.replacen(&srl, "", 1), with_io.user);
    assert!(with_srl.user.contains("koelwater"));
    assert!(!text.user.contains("de maximale warmtevracht\n"));
    let hashes: std::collections::BTreeSet<_> = [&text, &with_srl, &with_io, &both]
        .iter()
        .map(|p| p.hash.clone())
        .collect();
    assert_eq!(hashes.len(), 4);
}

#[test]
fn missing_srl_is_flagged() {
    let corpus = common::mini_corpus();
    let target = corpus.bundle("Outcome - OpslaanOpslagtank").unwrap();
    let example = corpus.bundle("Outcome - LozenIndustrieel").unwrap();
    let p = build_prompt(Condition::TextSrl, target, example).unwrap();
    assert!(p.srl_missing);
    assert_eq!(p.user, build_prompt(Condition::Text, target, example).unwrap().user);
}

fn retry_config() -> ProviderConfig {
    ProviderConfig {
        max_attempts: 3,
        ..ProviderConfig::stub()
    }
}

#[test]
fn transient_failures_are_retried() {
    let corpus = common::mini_corpus();
    let target = &corpus.bundles[0];
    let prompt = build_prompt(Condition::Text, target, &corpus.bundles[1]).unwrap();
    let t = ScriptedTransport::new(vec![
        Ok((429, "slow down".into())),
        Err(TransportError::Timeout),
        Ok((200, completion_body("{}"))),
    ]);
    let g = request_generation(&prompt, &retry_config(), &t).unwrap();
    assert_eq!(g.attempts, 3);
    assert_eq!(t.calls(), 3);

    let t = ScriptedTransport::new(vec![Ok((503, String::new()))]);
    let e = request_generation(&prompt, &retry_config(), &t).unwrap_err();
    assert_eq!((e.attempts, e.last_status), (3, Some(503)));
}

#[test]
fn client_errors_fail_at_once() {
    let corpus = common::mini_corpus();
    let prompt = build_prompt(Condition::Text, &corpus.bundles[0], &corpus.bundles[1]).unwrap();
    let t = ScriptedTransport::new(vec![Ok((400, "bad request".into())), Ok((200, completion_body("{}")))]);
    let e = request_generation(&prompt, &retry_config(), &t).unwrap_err();
    assert_eq!((e.attempts, e.last_status), (1, Some(400)));
    assert_eq!(t.calls(), 1);
}

#[test]
fn malformed_generations_are_recorded_not_fatal() {
    let corpus = common::mini_corpus();
    let dir = tempfile::tempdir().unwrap();
    let t = FixedTransport {
        content: "Here is the model: not json".into(),
    };
    let out = run_experiment(
        &corpus.bundles,
        &options(Some(4)),
        &ProviderConfig::stub(),
        &t,
        dir.path(),
    )
    .unwrap();
    assert_eq!(out.records.len(), 4);
    for r in &out.records {
        assert_eq!(r.validity, Validity::SchemaError);
        assert!(r.graph().is_none());
        assert!(r.error.is_some());
    }
    let cyclic = r#"{"id":"x","model_type":"Outcome","output":"b","nodes":[
        {"id":"a","name":"a","kind":"decision","table":{"hit_policy":"UNIQUE","inputs":["b"],"output":"a","rules":[{"when":["-"],"then":true}]}},
        {"id":"b","name":"b","kind":"output","table":{"hit_policy":"UNIQUE","inputs":["a"],"output":"b","rules":[{"when":["-"],"then":true}]}}],
        "edges":[["a","b"],["b","a"]]}"#;
    let dir = tempfile::tempdir().unwrap();
    let t = FixedTransport { content: cyclic.into() };
    let out = run_experiment(
        &corpus.bundles,
        &options(Some(1)),
        &ProviderConfig::stub(),
        &t,
        dir.path(),
    )
    .unwrap();
    assert_eq!(out.records[0].validity, Validity::ValidationError);
}

#[test]
fn missing_credential_is_a_provider_error() {
    let corpus = common::mini_corpus();
    let prompt = build_prompt(Condition::Text, &corpus.bundles[0], &corpus.bundles[1]).unwrap();
    let cfg = ProviderConfig {
        credential_env: Some("LEGALDMN_TEST_UNSET_CREDENTIAL".into()),
        ..ProviderConfig::stub()
    };
    let e = request_generation(&prompt, &cfg, &FixedTransport { content: "{}".into() }).unwrap_err();
    assert_eq!(e.attempts, 0);
    assert!(e.message.contains("LEGALDMN_TEST_UNSET_CREDENTIAL"));
}
