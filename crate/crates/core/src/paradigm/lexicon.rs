use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Noun sets used for animacy confidence and as corpus fillers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounInventory {
    pub animate: Vec<String>,
    pub inanimate: Vec<String>,
}

pub const ANIMATE_NOUNS: [&str; 31] = [
    "person", "man", "woman", "student", "teacher", "king", "queen", "prince", "princess", "writer", "author",
    "builder", "driver", "human", "dog", "bird", "dancer", "player", "angel", "actor", "actress", "singer", "director",
    "bee", "friend", "wolf", "lion", "scholar", "pirate", "spirit", "fox",
];

pub const INANIMATE_NOUNS: [&str; 30] = [
    "apple", "book", "chair", "table", "phone", "shoe", "water", "earth", "land", "light", "sun", "moon", "plate",
    "eye", "ear", "branch", "tree", "time", "energy", "bottle", "can", "mask", "leaf", "tile", "couch", "button",
    "box", "cap", "wire", "paper",
];

impl Default for NounInventory {
    fn default() -> Self {
        NounInventory {
            animate: ANIMATE_NOUNS.iter().map(|s| s.to_string()).collect(),
            inanimate: INANIMATE_NOUNS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl NounInventory {
    pub fn is_disjoint(&self) -> bool {
        self.animate.iter().all(|a| !self.inanimate.contains(a))
    }

    /// Animate then inanimate, the order used for backend queries.
    pub fn all(&self) -> Vec<String> {
        self.animate.iter().chain(&self.inanimate).cloned().collect()
    }

    /// Same nouns with the two classes exchanged.
    pub fn swapped(&self) -> Self {
        NounInventory { animate: self.inanimate.clone(), inanimate: self.animate.clone() }
    }
}

/// Inflected forms of a ditransitive verb.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerbForms {
    pub lemma: &'static str,
    pub past: &'static str,
    pub participle: &'static str,
}

pub const DITRANSITIVE_VERBS: [VerbForms; 4] = [
    VerbForms { lemma: "give", past: "gave", participle: "given" },
    VerbForms { lemma: "send", past: "sent", participle: "sent" },
    VerbForms { lemma: "teach", past: "taught", participle: "taught" },
    VerbForms { lemma: "tell", past: "told", participle: "told" },
];

pub fn verb_forms(lemma: &str) -> Option<VerbForms> {
    DITRANSITIVE_VERBS.iter().copied().find(|v| v.lemma == lemma)
}

/// Nouns used only as corpus themes (not part of the animacy sets).
pub const EXTRA_THEMES: [&str; 8] = ["camera", "ball", "letter", "gift", "story", "lesson", "song", "message"];

pub const PRONOUN_SUBJECTS: [&str; 5] = ["i", "he", "she", "we", "they"];

/// Monotransitive verbs as (past, participle, takes animate objects too).
pub const TRANSITIVE_VERBS: [(&str, &str, bool); 10] = [
    ("saw", "seen", true),
    ("found", "found", true),
    ("liked", "liked", true),
    ("took", "taken", false),
    ("made", "made", false),
    ("broke", "broken", false),
    ("held", "held", false),
    ("carried", "carried", false),
    ("threw", "thrown", false),
    ("bought", "bought", false),
];

pub const ANIMATE_INTRANSITIVES: [&str; 5] = ["slept", "laughed", "arrived", "smiled", "ran"];
pub const INANIMATE_INTRANSITIVES: [&str; 2] = ["fell", "moved"];
pub const DETERMINERS: [&str; 2] = ["the", "a"];
/// Bare verbs completing an object-control clause ("told the student to leave").
pub const CONTROL_COMPLEMENTS: [&str; 4] = ["leave", "stay", "wait", "go"];

/// Every word the generators can emit, lowercased and sorted.
pub fn closed_vocabulary() -> Vec<String> {
    let mut words: Vec<String> = Vec::new();
    let mut add = |w: &str| words.push(w.to_string());
    ANIMATE_NOUNS.iter().for_each(|w| add(w));
    INANIMATE_NOUNS.iter().for_each(|w| add(w));
    EXTRA_THEMES.iter().for_each(|w| add(w));
    PRONOUN_SUBJECTS.iter().for_each(|w| add(w));
    DETERMINERS.iter().for_each(|w| add(w));
    for v in DITRANSITIVE_VERBS {
        add(v.past);
        add(v.participle);
    }
    for (p, pp, _) in TRANSITIVE_VERBS {
        add(p);
        add(pp);
    }
    ANIMATE_INTRANSITIVES.iter().for_each(|w| add(w));
    INANIMATE_INTRANSITIVES.iter().for_each(|w| add(w));
    CONTROL_COMPLEMENTS.iter().for_each(|w| add(w));
    for w in ["was", "to", "by", "."] {
        add(w);
    }
    words.sort();
    words.dedup();
    words
}
