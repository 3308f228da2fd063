//! Bracketed treebank reading, a tregex-style pattern matcher, and the
//! ditransitive extraction built on both.

mod extract;
mod pattern;
mod tree;

pub use extract::{extract_ditransitives, extract_from, head_noun, verb_lemma, ExtractedSentence, HeadError};
pub use pattern::{
    compile_pattern, match_pattern, CaptureMap, Match, NodeId, NodePredicate, PatternError, Relation, TreePattern,
    TreeView,
};
pub use tree::{parse_ptb, ParseError, ParseTree};
