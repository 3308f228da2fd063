use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::paradigm::MASK;

pub const PAD_ID: u32 = 0;
pub const MASK_ID: u32 = 1;
pub const UNK_ID: u32 = 2;
pub const RESERVED: [&str; 3] = ["[PAD]", MASK, "[UNK]"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabError {
    #[error("token '{0}' already in the vocabulary")]
    Collision(String),
    #[error("token list must start with the reserved tokens")]
    MissingReserved,
    #[error("duplicate token '{0}'")]
    Duplicate(String),
}

/// Token list indexed by id. Ids below `n_base` come from training; novel
/// tokens are appended after them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabRepr", into = "VocabRepr")]
pub struct Vocab {
    tokens: Vec<String>,
    n_base: usize,
    index: BTreeMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tokens: Vec<String>,
    n_base: usize,
}

impl TryFrom<VocabRepr> for Vocab {
    type Error = VocabError;
    fn try_from(r: VocabRepr) -> Result<Self, VocabError> {
        Vocab::from_parts(r.tokens, r.n_base)
    }
}

impl From<Vocab> for VocabRepr {
    fn from(v: Vocab) -> Self {
        VocabRepr { tokens: v.tokens, n_base: v.n_base }
    }
}

impl Vocab {
    /// Reserved tokens followed by `words` (lowercased, first occurrence wins).
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Vocab { tokens: Vec::new(), n_base: 0, index: BTreeMap::new() };
        for r in RESERVED {
            v.insert(r.to_string());
        }
        for w in words {
            let w = w.as_ref().to_lowercase();
            if !v.index.contains_key(&w) {
                v.insert(w);
            }
        }
        v.n_base = v.tokens.len();
        v
    }

    /// Rebuild from a stored token list.
    pub fn from_parts(tokens: Vec<String>, n_base: usize) -> Result<Self, VocabError> {
        if tokens.len() < RESERVED.len() || tokens[..RESERVED.len()] != RESERVED || n_base > tokens.len() {
            return Err(VocabError::MissingReserved);
        }
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(VocabError::Duplicate(t.clone()));
            }
        }
        Ok(Vocab { tokens, n_base, index })
    }

    fn insert(&mut self, t: String) -> u32 {
        let id = self.tokens.len() as u32;
        self.index.insert(t.clone(), id);
        self.tokens.push(t);
        id
    }

    /// Append a novel token after the trained region.
    pub fn push_novel(&mut self, name: &str) -> Result<u32, VocabError> {
        let name = name.to_lowercase();
        if self.index.contains_key(&name) {
            return Err(VocabError::Collision(name));
        }
        Ok(self.insert(name))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of tokens present at training time.
    pub fn n_base(&self) -> usize {
        self.n_base
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Lookup applying the tokenizer's normalization.
    pub fn lookup(&self, token: &str) -> u32 {
        if token.eq_ignore_ascii_case(MASK) {
            return MASK_ID;
        }
        self.index.get(&token.to_lowercase()).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        text.split_whitespace().map(|t| self.lookup(t)).collect()
    }

    pub fn tokenize_words<S: AsRef<str>>(&self, words: &[S]) -> Vec<u32> {
        words.iter().map(|t| self.lookup(t.as_ref())).collect()
    }

    pub fn detokenize(&self, ids: &[u32]) -> String {
        let words: Vec<&str> = ids.iter().map(|&i| self.token(i)).collect();
        words.join(" ")
    }
}

/// Split on whitespace, lowercase, map unknowns to UNK and the mask
/// placeholder to MASK.
pub fn tokenize(text: &str, vocab: &Vocab) -> Vec<u32> {
    vocab.tokenize(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paradigm::closed_vocabulary;

    fn vocab() -> Vocab {
        Vocab::from_words(closed_vocabulary())
    }

    #[test]
    fn mask_placeholder_maps_to_mask_id() {
        let v = vocab();
        let ids = tokenize("I gave the [MASK] a ball .", &v);
        assert_eq!(ids.len(), 7);
        assert_eq!(ids[3], MASK_ID);
        assert!(ids.iter().all(|&i| i != UNK_ID));
        // The noun "mask" is an ordinary word.
        assert_ne!(v.lookup("mask"), MASK_ID);
    }

    #[test]
    fn oov_maps_to_unk() {
        assert_eq!(tokenize("xyzzy", &vocab()), [UNK_ID]);
    }

    #[test]
    fn round_trip_lowercases() {
        let v = vocab();
        let s = "The Teacher gave A dog the BOOK .";
        assert_eq!(v.detokenize(&tokenize(s, &v)), s.to_lowercase());
    }

    #[test]
    fn novel_tokens_append() {
        let mut v = vocab();
        let n = v.len();
        assert_eq!(v.push_novel("thax"), Ok(n as u32));
        assert_eq!(v.n_base(), n);
        assert_eq!(v.push_novel("THAX"), Err(VocabError::Collision("thax".into())));
        assert_eq!(v.push_novel("dog"), Err(VocabError::Collision("dog".into())));
        assert_eq!(v.lookup("[MASK]"), MASK_ID);
        assert_eq!(v.token(UNK_ID), "[UNK]");
    }

    #[test]
    fn from_parts_validates() {
        let v = vocab();
        assert_eq!(Vocab::from_parts(v.tokens().to_vec(), v.n_base()).unwrap(), v);
        assert_eq!(Vocab::from_parts(alloc::vec!["a".into()], 0), Err(VocabError::MissingReserved));
        let mut dup = v.tokens().to_vec();
        dup.push("dog".into());
        assert_eq!(Vocab::from_parts(dup, v.n_base()), Err(VocabError::Duplicate("dog".into())));
    }
}
