use std::io::{BufReader, Cursor};

use proptest::prelude::*;
use rolebench::transport::{decode, encode, serve_stream, spawn_server, NdjsonClient};
use rolebench_core::backend::{
    Backend, BackendError, Capability, DistributionRequest, DistributionResponse, Envelope, ErrorCode, ErrorReply,
    Hello, Message, PositionDistribution, ServerInfo, TuneRequest, TuneResponse,
};
use rolebench_core::mlm::{train_mlm, Init, TrainConfig};
use rolebench_core::paradigm::{closed_vocabulary, gen_corpus, gen_tuning_set, CorpusSpec, MASK};
use rolebench_core::probing::{FinetuneConfig, TuneStatus, TuneTrace};
use rolebench_core::{Checkpoint, Frame, ModelConfig, ProbeSentence, Role, ToyBackend, Vocab, Voice};

fn text() -> impl Strategy<Value = String> {
    prop_oneof!["[a-z]{1,8}", "\\PC{0,12}", Just("naïve ☃ 日本 \"q\" \\ \n\t".to_string())]
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e3f64..0.0,
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        Just(-0.0),
        Just(f64::MIN_POSITIVE)
    ]
}

fn sentence() -> impl Strategy<Value = ProbeSentence> {
    (prop::collection::vec(text(), 1..6), any::<bool>(), any::<bool>(), any::<bool>(), text(), prop::option::of(text()))
        .prop_map(|(tokens, f, v, r, verb, novel)| ProbeSentence {
            slots: vec![(tokens.len() - 1, if r { Role::Theme } else { Role::Recipient })],
            tokens,
            frame: if f { Frame::DoubleObject } else { Frame::Prepositional },
            voice: if v { Voice::Active } else { Voice::Passive },
            verb_lemma: verb,
            novel_token: novel,
        })
}

fn finetune() -> impl Strategy<Value = FinetuneConfig> {
    (
        text(),
        text(),
        1e-5f32..1.0,
        1usize..500,
        1usize..5,
        prop_oneof![0.01f64..5.0, Just(f64::INFINITY)],
        1usize..20,
        any::<u64>(),
    )
        .prop_map(|(theme_token, recipient_token, lr, max_epochs, patience, delta, n_runs, seed)| FinetuneConfig {
            theme_token,
            recipient_token,
            lr,
            max_epochs,
            patience,
            delta,
            n_runs,
            seed,
        })
}

fn message() -> impl Strategy<Value = Message> {
    let code = prop::sample::select(vec![
        ErrorCode::BadRequest,
        ErrorCode::VersionMismatch,
        ErrorCode::UnknownToken,
        ErrorCode::MultiPiece,
        ErrorCode::UnknownSession,
        ErrorCode::NotMasked,
        ErrorCode::TooLong,
        ErrorCode::NoCapability,
        ErrorCode::TuneFailed,
        ErrorCode::Internal,
    ]);
    let status = prop::sample::select(vec![TuneStatus::EarlyStopped, TuneStatus::MaxEpochs, TuneStatus::Diverged]);
    let position = (
        any::<usize>(),
        prop::collection::btree_map(text(), finite(), 0..4),
        finite(),
        prop::collection::vec((text(), finite()), 0..3),
    )
        .prop_map(|(position, log_probs, entropy, top_k)| PositionDistribution {
            position,
            log_probs,
            entropy,
            top_k,
        });
    prop_oneof![
        text().prop_map(|client| Message::Hello(Hello { client })),
        (text(), any::<bool>(), any::<usize>()).prop_map(|(server, tune, vocab_size)| {
            let mut capabilities = vec![Capability::Query];
            if tune {
                capabilities.push(Capability::Tune);
            }
            Message::Welcome(ServerInfo { server, capabilities, vocab_size })
        }),
        (
            any::<u64>(),
            prop::option::of(text()),
            prop::collection::vec(text(), 0..6),
            prop::collection::vec(any::<usize>(), 0..3),
            prop::collection::vec(text(), 1..4),
            any::<usize>()
        )
            .prop_map(|(id, session, tokens, positions, query, top_k)| Message::Query(DistributionRequest {
                id,
                session,
                tokens,
                positions,
                query,
                top_k
            })),
        (any::<u64>(), prop::collection::vec(position, 0..3))
            .prop_map(|(id, positions)| Message::Distribution(DistributionResponse { id, positions })),
        (any::<u64>(), text(), prop::collection::vec(sentence(), 0..4), finetune(), any::<u64>()).prop_map(
            |(id, session, sentences, config, seed)| Message::Tune(TuneRequest {
                id,
                session,
                sentences,
                config,
                seed
            })
        ),
        (any::<u64>(), text(), prop::collection::vec(finite(), 0..5), any::<usize>(), status).prop_map(
            |(id, session, mean_log_prob, best_epoch, status)| {
                Message::Tuned(TuneResponse { id, session, trace: TuneTrace { mean_log_prob, best_epoch, status } })
            }
        ),
        (prop::option::of(any::<u64>()), code, text(), prop::collection::vec(text(), 0..3))
            .prop_map(|(id, code, message, tokens)| Message::Error(ErrorReply { id, code, message, tokens })),
    ]
}

proptest! {
    #[test]
    fn messages_round_trip(m in message()) {
        let line = encode(&m);
        prop_assert!(!line.contains('\n'));
        prop_assert_eq!(decode(&line).unwrap(), m);
    }
}

#[test]
fn every_line_carries_the_version() {
    let line = encode(&Message::Hello(Hello { client: "x".into() }));
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(v["v"], 1);
    assert_eq!(v["type"], "hello");
}

#[test]
fn infinite_delta_travels_as_null() {
    let cfg = FinetuneConfig { delta: f64::INFINITY, ..FinetuneConfig::default() };
    let m = Message::Tune(TuneRequest { id: 0, session: "s".into(), sentences: vec![], config: cfg, seed: 0 });
    let line = encode(&m);
    assert!(line.contains("\"delta\":null"), "{line}");
    assert_eq!(decode(&line).unwrap(), m);
}

#[test]
fn other_versions_are_rejected() {
    let line = r#"{"v":2,"type":"hello","client":"x"}"#;
    assert_eq!(decode(line), Err(BackendError::Version { expected: 1, got: 2 }));
    assert!(matches!(decode(r#"{"type":"hello","client":"x"}"#), Err(BackendError::Protocol(_))));
    assert!(matches!(decode("not json"), Err(BackendError::Protocol(_))));
}

fn client_with_replies(replies: &[Message]) -> NdjsonClient<BufReader<Cursor<Vec<u8>>>, Vec<u8>> {
    let mut text = String::new();
    for r in replies {
        text.push_str(&encode(r));
        text.push('\n');
    }
    NdjsonClient::new(BufReader::new(Cursor::new(text.into_bytes())), Vec::new())
}

fn query(id: u64) -> DistributionRequest {
    DistributionRequest {
        id,
        session: None,
        tokens: ["the", "teacher", "gave", "the", MASK, "a", MASK, "."].map(String::from).to_vec(),
        positions: vec![4, 6],
        query: vec!["dog".into(), "book".into()],
        top_k: 2,
    }
}

#[test]
fn canned_responses_surface_unchanged() {
    let canned = DistributionResponse {
        id: 3,
        positions: vec![PositionDistribution {
            position: 4,
            log_probs: [("dog".to_string(), -0.1234567890123), ("book".to_string(), -7.5)].into(),
            entropy: 2.25,
            top_k: vec![("dog".into(), -0.1234567890123)],
        }],
    };
    let mut c = client_with_replies(&[Message::Distribution(canned.clone())]);
    assert_eq!(c.query(&query(3)).unwrap(), canned);

    let err =
        ErrorReply { id: Some(3), code: ErrorCode::MultiPiece, message: "split".into(), tokens: vec!["thax".into()] };
    let mut c = client_with_replies(&[Message::Error(err)]);
    assert_eq!(
        c.query(&query(3)),
        Err(BackendError::Server { code: ErrorCode::MultiPiece, message: "split".into(), tokens: vec!["thax".into()] })
    );

    let mut c = client_with_replies(&[Message::Welcome(ServerInfo {
        server: "s".into(),
        capabilities: vec![],
        vocab_size: 1,
    })]);
    assert!(matches!(c.query(&query(3)), Err(BackendError::Protocol(_))));

    let mut c = client_with_replies(&[]);
    assert!(matches!(c.query(&query(3)), Err(BackendError::Transport(_))));
}

#[test]
fn server_answers_garbage_and_foreign_versions_with_errors() {
    let input = "garbage\n{\"v\":9,\"type\":\"hello\",\"client\":\"x\"}\n\n{\"v\":1,\"type\":\"welcome\",\"server\":\"x\",\"capabilities\":[],\"vocab_size\":0}\n";
    let mut out = Vec::new();
    let mut b = ToyBackend::new(tiny());
    serve_stream(&mut b, input.as_bytes(), &mut out).unwrap();
    let replies: Vec<Message> = String::from_utf8(out).unwrap().lines().map(|l| decode(l).unwrap()).collect();
    let codes: Vec<ErrorCode> = replies
        .iter()
        .map(|m| match m {
            Message::Error(e) => e.code,
            other => panic!("{other:?}"),
        })
        .collect();
    assert_eq!(codes, [ErrorCode::BadRequest, ErrorCode::VersionMismatch, ErrorCode::BadRequest]);
}

fn tiny() -> Checkpoint {
    Checkpoint::init(ModelConfig::tiny(0), Vocab::from_words(closed_vocabulary())).unwrap()
}

fn trained_tiny() -> Checkpoint {
    let corpus = gen_corpus(&CorpusSpec { n_sentences: 400, ..CorpusSpec::default() }).unwrap();
    let tc = TrainConfig { steps: 30, batch: 8, ..TrainConfig::default() };
    train_mlm(&corpus, Init::Fresh(ModelConfig::tiny(0)), &tc, |_, _| {}).unwrap()
}

fn tune_request(session: &str, seed: u64) -> TuneRequest {
    let config = FinetuneConfig { max_epochs: 6, ..FinetuneConfig::default() };
    TuneRequest {
        id: seed,
        session: session.into(),
        sentences: gen_tuning_set(Frame::DoubleObject, "give", &config.theme_token, &config.recipient_token).unwrap(),
        config,
        seed,
    }
}

#[test]
fn loopback_server_matches_local_calls_bit_for_bit() {
    let ck = trained_tiny();
    let mut local = ToyBackend::new(ck.clone());
    let addr = spawn_server("127.0.0.1:0", ToyBackend::new(ck)).unwrap();
    let mut remote = NdjsonClient::connect(addr).unwrap();
    assert_eq!(remote.info().unwrap(), local.info().unwrap());

    assert_eq!(remote.query(&query(1)).unwrap(), local.query(&query(1)).unwrap());
    let req = tune_request("s", 4);
    assert_eq!(remote.tune(&req).unwrap(), local.tune(&req).unwrap());
    let q = DistributionRequest {
        session: Some("s".into()),
        query: vec!["thax".into(), "ricket".into(), "dog".into()],
        ..query(2)
    };
    assert_eq!(remote.query(&q).unwrap(), local.query(&q).unwrap());

    let bad = DistributionRequest { session: Some("missing".into()), ..query(5) };
    assert_eq!(remote.query(&bad), local.query(&bad));
    let unknown = DistributionRequest { query: vec!["zyzzyva".into()], ..query(6) };
    assert_eq!(remote.query(&unknown), local.query(&unknown));
}

#[test]
fn remote_sessions_are_independent_per_seed_and_per_connection() {
    let addr = spawn_server("127.0.0.1:0", ToyBackend::new(trained_tiny())).unwrap();
    let mut a = NdjsonClient::connect(addr).unwrap();
    let t1 = a.tune(&tune_request("one", 1)).unwrap().trace;
    let t2 = a.tune(&tune_request("two", 2)).unwrap().trace;
    assert_ne!(t1, t2);
    let q = DistributionRequest { session: Some("one".into()), query: vec!["thax".into()], ..query(9) };
    assert!(a.query(&q).is_ok());
    let mut b = NdjsonClient::connect(addr).unwrap();
    assert!(matches!(b.query(&q), Err(BackendError::Server { code: ErrorCode::UnknownSession, .. })));
}

#[test]
fn remote_server_without_tune_reports_a_capability_error() {
    let addr = spawn_server("127.0.0.1:0", ToyBackend::query_only(tiny())).unwrap();
    let mut c = NdjsonClient::connect(addr).unwrap();
    assert_eq!(c.tune(&tune_request("s", 0)), Err(BackendError::Capability(Capability::Tune)));
    c.info().unwrap();
    assert_eq!(c.tune(&tune_request("s", 0)), Err(BackendError::Capability(Capability::Tune)));
}

#[test]
fn envelope_field_order_is_stable() {
    let line = encode(&Message::Query(query(1)));
    assert!(line.starts_with(r#"{"v":1,"type":"query","id":1,"#), "{line}");
    let env: Envelope = serde_json::from_str(&line).unwrap();
    assert_eq!(env.v, 1);
}
