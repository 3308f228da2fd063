use proptest::prelude::*;
use rolebench::checkpoint::{
    from_bytes, load, load_file, save, save_file, to_bytes, CheckpointError, FORMAT_VERSION, MAGIC,
};
use rolebench_core::mlm::TrainMeta;
use rolebench_core::paradigm::closed_vocabulary;
use rolebench_core::probing::add_novel_tokens;
use rolebench_core::{Checkpoint, ModelConfig, Vocab};

fn tiny(seed: u64) -> Checkpoint {
    let mut ck =
        Checkpoint::init(ModelConfig { seed, ..ModelConfig::tiny(0) }, Vocab::from_words(closed_vocabulary())).unwrap();
    ck.meta = TrainMeta { steps: 123, seed, corpus_hash: 0xdead_beef_0bad_f00d };
    ck
}

fn bits(ck: &Checkpoint) -> Vec<(String, Vec<u32>)> {
    ck.params.named().into_iter().map(|(n, t)| (n, t.iter().map(|x| x.to_bits()).collect())).collect()
}

fn assert_bit_identical(a: &Checkpoint, b: &Checkpoint) {
    assert_eq!(a.config, b.config);
    assert_eq!(a.meta, b.meta);
    assert_eq!(a.vocab, b.vocab);
    assert_eq!(bits(a), bits(b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn round_trip_is_bit_exact(seed in any::<u64>()) {
        let ck = tiny(seed);
        let back = from_bytes(&to_bytes(&ck).unwrap()).unwrap();
        assert_bit_identical(&ck, &back);
    }
}

#[test]
fn round_trip_keeps_novel_tokens_and_odd_floats() {
    let mut ck = add_novel_tokens(&tiny(1), ["thax", "ricket"], 9).unwrap();
    let emb = ck.params.named_mut().into_iter().find(|(n, _)| n == "token_embedding").unwrap().1;
    emb[0] = -0.0;
    emb[1] = f32::MIN_POSITIVE / 4.0;
    emb[2] = f32::MAX;
    let back = from_bytes(&to_bytes(&ck).unwrap()).unwrap();
    assert_bit_identical(&ck, &back);
    assert_eq!(back.vocab.n_base(), ck.vocab.n_base());
    assert_eq!(back.vocab.id("ricket"), ck.vocab.id("ricket"));
}

#[test]
fn files_and_streams_agree() {
    let ck = tiny(2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.rbck");
    save_file(&ck, &path).unwrap();
    let mut buf = Vec::new();
    save(&ck, &mut buf).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), buf);
    assert_bit_identical(&load_file(&path).unwrap(), &load(buf.as_slice()).unwrap());
    assert!(matches!(load_file(&dir.path().join("missing")), Err(CheckpointError::Io(_))));
}

#[test]
fn header_layout_is_fixed() {
    let bytes = to_bytes(&tiny(3)).unwrap();
    assert_eq!(&bytes[..8], &MAGIC);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), FORMAT_VERSION);
    let body_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    assert_eq!(bytes.len(), 20 + body_len + 4);
    let crc = u32::from_le_bytes(bytes[20 + body_len..].try_into().unwrap());
    assert_eq!(crc, crc32fast::hash(&bytes[20..20 + body_len]));
}

#[test]
fn foreign_version_is_rejected() {
    let mut bytes = to_bytes(&tiny(4)).unwrap();
    bytes[8..12].copy_from_slice(&2u32.to_le_bytes());
    assert!(matches!(from_bytes(&bytes), Err(CheckpointError::Version(2))));
}

#[test]
fn corruption_fails_the_checksum() {
    let good = to_bytes(&tiny(5)).unwrap();
    for at in [20, good.len() / 2, good.len() - 5] {
        let mut bytes = good.clone();
        bytes[at] ^= 0x10;
        assert!(matches!(from_bytes(&bytes), Err(CheckpointError::Checksum { .. })), "byte {at}");
    }
}

#[test]
fn truncation_is_detected_at_every_length() {
    let good = to_bytes(&tiny(6)).unwrap();
    for n in (8..good.len()).step_by(97).chain([good.len() - 1, 12, 19]) {
        assert!(matches!(from_bytes(&good[..n]), Err(CheckpointError::Truncated)), "length {n}");
    }
    let mut long = good.clone();
    long.push(0);
    assert!(matches!(from_bytes(&long), Err(CheckpointError::Malformed(_))));
}

#[test]
fn bad_magic_is_rejected() {
    let mut bytes = to_bytes(&tiny(7)).unwrap();
    bytes[0] = b'X';
    assert!(matches!(from_bytes(&bytes), Err(CheckpointError::Magic)));
    assert!(matches!(from_bytes(b"RB"), Err(CheckpointError::Magic)));
    assert!(matches!(from_bytes(b""), Err(CheckpointError::Magic)));
}

#[test]
fn inconsistent_checkpoints_are_not_written() {
    let mut ck = tiny(8);
    ck.config.vocab_size += 1;
    assert!(matches!(to_bytes(&ck), Err(CheckpointError::Model(_))));
}
