//! Synthetic sentence sets: tuning paradigms, masked evaluation sets, and
//! the frequency-controlled training corpus.

mod corpus;
mod generate;
mod lexicon;
mod probe;

pub use corpus::{
    default_verb_frame_weights, default_verb_usage_weights, gen_corpus, gen_corpus_labeled, only, CellWeight,
    CorpusSpec, Template, Usage, UsageWeight,
};
pub use generate::{gen_eval_set, gen_tuning_set, mask_roles, position_roles, ParadigmError};
pub use lexicon::{
    closed_vocabulary, verb_forms, NounInventory, VerbForms, ANIMATE_NOUNS, CONTROL_COMPLEMENTS, DITRANSITIVE_VERBS,
    EXTRA_THEMES, INANIMATE_NOUNS,
};
pub use probe::{Frame, ProbeSentence, Role, UnknownName, Voice, MASK};
