use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::pattern::{compile_pattern, NodeId, TreePattern, TreeView};
use super::tree::ParseTree;
use crate::paradigm::{Frame, Voice};

const NOMINAL_TAGS: [&str; 4] = ["NN", "NNS", "NNP", "NNPS"];
const BE_FORMS: [&str; 10] = ["be", "is", "are", "was", "were", "been", "being", "am", "'s", "'re"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeadError {
    #[error("'{0}' is not an NP")]
    NotNounPhrase(String),
    #[error("NP has no nominal leaf: {0}")]
    Headless(String),
}

/// A ditransitive clause with located argument heads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedSentence {
    pub tokens: Vec<String>,
    pub frame: Frame,
    pub voice: Voice,
    pub theme_head_index: usize,
    pub recipient_head_index: usize,
    pub verb_lemma: String,
    pub source_id: String,
}

/// Leaf index (in the enclosing sentence) of the NP's head noun: the
/// rightmost nominal preterminal among its children, or failing that the
/// head of its first NP child.
pub fn head_noun(np: &ParseTree) -> Result<usize, HeadError> {
    if !np.label.starts_with("NP") {
        return Err(HeadError::NotNounPhrase(np.label.clone()));
    }
    fn go(np: &ParseTree) -> Option<usize> {
        if let Some(leaf) = np.children.iter().rev().find(|c| c.is_leaf() && NOMINAL_TAGS.contains(&c.category())) {
            return Some(leaf.span.0);
        }
        np.children.iter().find(|c| !c.is_leaf() && c.category() == "NP").and_then(go)
    }
    go(np).ok_or_else(|| HeadError::Headless(np.render()))
}

/// Base form for the verbs the workbench cares about; other verbs are
/// lowercased as-is.
pub fn verb_lemma(form: &str) -> String {
    let lower = form.to_lowercase();
    let lemma = match lower.as_str() {
        "give" | "gives" | "gave" | "given" | "giving" => "give",
        "send" | "sends" | "sent" | "sending" => "send",
        "teach" | "teaches" | "taught" | "teaching" => "teach",
        "tell" | "tells" | "told" | "telling" => "tell",
        "offer" | "offers" | "offered" | "offering" => "offer",
        "show" | "shows" | "showed" | "shown" | "showing" => "show",
        "lend" | "lends" | "lent" | "lending" => "lend",
        "sell" | "sells" | "sold" | "selling" => "sell",
        "pay" | "pays" | "paid" | "paying" => "pay",
        "bring" | "brings" | "brought" | "bringing" => "bring",
        "hand" | "hands" | "handed" | "handing" => "hand",
        "grant" | "grants" | "granted" | "granting" => "grant",
        "award" | "awards" | "awarded" | "awarding" => "award",
        "owe" | "owes" | "owed" | "owing" => "owe",
        _ => return lower,
    };
    lemma.to_owned()
}

struct Patterns {
    do_active: TreePattern,
    pd_active: TreePattern,
    do_passive: TreePattern,
    pd_passive: TreePattern,
}

impl Patterns {
    fn new() -> Self {
        let c = |s: &str| compile_pattern(s).expect("built-in pattern");
        Patterns {
            do_active: c("VP < /^VB/=verb < NP=first < NP=second"),
            pd_active: c("VP < /^VB/=verb < NP=theme < (PP=pp < TO=to < NP=rec)"),
            do_passive: c("VP < VBN=verb < NP=theme"),
            pd_passive: c("VP < VBN=verb < (PP=pp < TO=to < NP=rec)"),
        }
    }

    fn get(&self, frame: Frame, voice: Voice) -> &TreePattern {
        match (frame, voice) {
            (Frame::DoubleObject, Voice::Active) => &self.do_active,
            (Frame::Prepositional, Voice::Active) => &self.pd_active,
            (Frame::DoubleObject, Voice::Passive) => &self.do_passive,
            (Frame::Prepositional, Voice::Passive) => &self.pd_passive,
        }
    }
}

fn consecutive(view: &TreeView<'_>, ids: &[NodeId]) -> bool {
    let parent = match view.parent(ids[0]) {
        Some(p) => p,
        None => return false,
    };
    let kids = view.children(parent);
    let first = match kids.iter().position(|&k| k == ids[0]) {
        Some(i) => i,
        None => return false,
    };
    ids.iter().enumerate().all(|(j, &id)| kids.get(first + j) == Some(&id))
}

fn token_of(view: &TreeView<'_>, id: NodeId) -> String {
    view.node(id).token.clone().unwrap_or_default().to_lowercase()
}

/// If `verb` (a VBN) heads a passive VP, the subject NP of the clause.
/// `Some(None)` means passive without an overt subject.
fn passive_subject(view: &TreeView<'_>, verb: NodeId) -> Option<Option<NodeId>> {
    if view.node(verb).category() != "VBN" {
        return None;
    }
    let vp = view.parent(verb)?;
    let upper = view.parent(vp)?;
    if view.node(upper).category() != "VP" {
        return None;
    }
    let idx = view.child_index(vp)?;
    let aux = *view.children(upper).get(idx.checked_sub(1)?)?;
    if !view.node(aux).is_leaf() || !BE_FORMS.contains(&token_of(view, aux).as_str()) {
        return None;
    }
    let mut cur = upper;
    while let Some(p) = view.parent(cur) {
        if view.node(p).category() != "VP" {
            let at = view.child_index(cur).unwrap_or(0);
            let subj = view.children(p)[..at].iter().rev().copied().find(|&c| view.node(c).category() == "NP");
            return Some(subj);
        }
        cur = p;
    }
    Some(None)
}

/// Sentences instantiating one frame/voice cell, with theme and recipient
/// heads located. Trees are identified by their index in `trees`.
pub fn extract_ditransitives(trees: &[ParseTree], frame: Frame, voice: Voice) -> Vec<ExtractedSentence> {
    extract_from(trees.iter().enumerate().map(|(i, t)| (i.to_string(), t)), frame, voice)
}

/// As [`extract_ditransitives`] with caller-supplied source ids.
pub fn extract_from<'a, I>(trees: I, frame: Frame, voice: Voice) -> Vec<ExtractedSentence>
where
    I: IntoIterator<Item = (String, &'a ParseTree)>,
{
    let patterns = Patterns::new();
    let pattern = patterns.get(frame, voice);
    let mut out = Vec::new();
    for (id, raw) in trees {
        let Some(tree) = raw.strip_empty() else { continue };
        let view = TreeView::new(&tree);
        let mut seen = BTreeSet::new();
        for m in view.find(pattern) {
            let cap = |n: &str| m.captures[n];
            let verb = cap("verb");
            let passive = passive_subject(&view, verb);
            let (theme, recipient) = match (frame, voice) {
                (Frame::DoubleObject, Voice::Active) => {
                    if passive.is_some() || !consecutive(&view, &[verb, cap("first"), cap("second")]) {
                        continue;
                    }
                    (cap("second"), cap("first"))
                }
                (Frame::Prepositional, Voice::Active) => {
                    if passive.is_some()
                        || !consecutive(&view, &[verb, cap("theme"), cap("pp")])
                        || !pp_headed_by_to(&view, cap("pp"), cap("to"))
                    {
                        continue;
                    }
                    (cap("theme"), cap("rec"))
                }
                (Frame::DoubleObject, Voice::Passive) => {
                    let Some(Some(subj)) = passive else { continue };
                    if !consecutive(&view, &[verb, cap("theme")]) || has_second_np(&view, cap("theme")) {
                        continue;
                    }
                    (cap("theme"), subj)
                }
                (Frame::Prepositional, Voice::Passive) => {
                    let Some(Some(subj)) = passive else { continue };
                    if !consecutive(&view, &[verb, cap("pp")]) || !pp_headed_by_to(&view, cap("pp"), cap("to")) {
                        continue;
                    }
                    (subj, cap("rec"))
                }
            };
            let (Ok(th), Ok(rc)) = (head_noun(view.node(theme)), head_noun(view.node(recipient))) else {
                continue;
            };
            if th == rc || !seen.insert((verb, th, rc)) {
                continue;
            }
            out.push(ExtractedSentence {
                tokens: tree.tokens(),
                frame,
                voice,
                theme_head_index: th,
                recipient_head_index: rc,
                verb_lemma: verb_lemma(view.node(verb).token.as_deref().unwrap_or("")),
                source_id: id.clone(),
            });
        }
    }
    out
}

fn pp_headed_by_to(view: &TreeView<'_>, pp: NodeId, to: NodeId) -> bool {
    view.children(pp).first() == Some(&to) && token_of(view, to) == "to"
}

/// A DO passive leaves one object after the verb; a second NP sister means
/// the match is something else (a DO active under a perfect, say).
fn has_second_np(view: &TreeView<'_>, obj: NodeId) -> bool {
    let Some(p) = view.parent(obj) else { return false };
    let kids = view.children(p);
    let i = kids.iter().position(|&k| k == obj).unwrap_or(0);
    kids.get(i + 1).is_some_and(|&k| view.node(k).category() == "NP")
}
