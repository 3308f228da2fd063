use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use thiserror::Error;

use super::lexicon::{verb_forms, NounInventory, VerbForms, DETERMINERS};
use super::probe::{Frame, ProbeSentence, Role, Voice, MASK};
use crate::rng;
use crate::treebank::ExtractedSentence;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParadigmError {
    #[error("no template for verb '{0}'")]
    UnknownVerb(String),
    #[error("novel theme and recipient tokens must differ (both '{0}')")]
    SameNovelTokens(String),
    #[error("n_variants must be at least 1")]
    NoVariants,
    #[error("corpus weights are all zero")]
    ZeroWeights,
    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),
}

fn forms(verb: &str) -> Result<VerbForms, ParadigmError> {
    verb_forms(verb).ok_or_else(|| ParadigmError::UnknownVerb(verb.to_string()))
}

fn words(s: &[&str]) -> Vec<String> {
    s.iter().map(|w| w.to_string()).collect()
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// The four-sentence tuning paradigm for one frame and verb: two sentences
/// put the recipient-like novel token in the recipient slot, two put the
/// theme-like one in the theme slot. No sentence has both.
pub fn gen_tuning_set(
    frame: Frame,
    verb: &str,
    novel_theme: &str,
    novel_recipient: &str,
) -> Result<Vec<ProbeSentence>, ParadigmError> {
    if novel_theme == novel_recipient {
        return Err(ParadigmError::SameNovelTokens(novel_theme.to_string()));
    }
    let v = forms(verb)?;
    // (first det, first noun, second det, second noun, which one is novel)
    // in the DO order recipient-then-theme.
    let material: [(&str, &str, &str, &str, Role); 4] = [
        ("the", novel_recipient, "a", "box", Role::Recipient),
        ("a", novel_recipient, "the", "camera", Role::Recipient),
        ("the", "teacher", "a", novel_theme, Role::Theme),
        ("a", "student", "the", novel_theme, Role::Theme),
    ];
    let out = material
        .iter()
        .map(|&(d1, rec, d2, theme, role)| {
            let novel = if role == Role::Recipient { rec } else { theme };
            let tokens = match frame {
                Frame::DoubleObject => words(&["I", v.past, d1, rec, d2, theme, "."]),
                // Determiners keep their positions; the nouns swap.
                Frame::Prepositional => words(&["I", v.past, d1, theme, "to", d2, rec, "."]),
            };
            let idx = tokens.iter().position(|t| t == novel).expect("novel token placed");
            ProbeSentence {
                tokens,
                slots: vec![(idx, role)],
                frame,
                voice: Voice::Active,
                verb_lemma: v.lemma.to_string(),
                novel_token: Some(novel.to_string()),
            }
        })
        .collect();
    Ok(out)
}

/// Evaluation sentences with both argument positions masked, `n_variants`
/// per (frame, voice, verb) cell, cells ordered frame, voice, verb.
/// Variation comes from determiners and the agent noun of actives.
pub fn gen_eval_set(
    frames: &[Frame],
    voices: &[Voice],
    verbs: &[&str],
    n_variants: usize,
    seed: u64,
) -> Result<Vec<ProbeSentence>, ParadigmError> {
    if n_variants == 0 {
        return Err(ParadigmError::NoVariants);
    }
    let verb_forms: Vec<VerbForms> = verbs.iter().map(|v| forms(v)).collect::<Result<_, _>>()?;
    let agents = NounInventory::default().animate;
    let mut rng = rng::stream(seed, "eval");
    let mut out = Vec::new();
    for &frame in frames {
        for &voice in voices {
            for v in &verb_forms {
                for _ in 0..n_variants {
                    let mut det = || DETERMINERS[rng.random_range(0..DETERMINERS.len())];
                    let (d1, d2, d3) = (det(), det(), det());
                    let agent = agents[rng.random_range(0..agents.len())].as_str();
                    out.push(eval_sentence(frame, voice, v, d1, agent, d2, d3));
                }
            }
        }
    }
    Ok(out)
}

fn eval_sentence(
    frame: Frame,
    voice: Voice,
    v: &VerbForms,
    agent_det: &str,
    agent: &str,
    d2: &str,
    d3: &str,
) -> ProbeSentence {
    let (tokens, slots) = match (frame, voice) {
        (Frame::DoubleObject, Voice::Active) => (
            vec![
                capitalize(agent_det),
                agent.into(),
                v.past.into(),
                d2.into(),
                MASK.into(),
                d3.into(),
                MASK.into(),
                ".".into(),
            ],
            vec![(4, Role::Recipient), (6, Role::Theme)],
        ),
        (Frame::DoubleObject, Voice::Passive) => (
            vec![capitalize(d2), MASK.into(), "was".into(), v.participle.into(), d3.into(), MASK.into(), ".".into()],
            vec![(1, Role::Recipient), (5, Role::Theme)],
        ),
        (Frame::Prepositional, Voice::Active) => (
            vec![
                capitalize(agent_det),
                agent.into(),
                v.past.into(),
                d2.into(),
                MASK.into(),
                "to".into(),
                d3.into(),
                MASK.into(),
                ".".into(),
            ],
            vec![(4, Role::Theme), (7, Role::Recipient)],
        ),
        (Frame::Prepositional, Voice::Passive) => (
            vec![
                capitalize(d2),
                MASK.into(),
                "was".into(),
                v.participle.into(),
                "to".into(),
                d3.into(),
                MASK.into(),
                ".".into(),
            ],
            vec![(1, Role::Theme), (6, Role::Recipient)],
        ),
    };
    ProbeSentence { tokens, slots, frame, voice, verb_lemma: v.lemma.to_string(), novel_token: None }
}

/// Mask both argument heads of an extracted sentence.
pub fn mask_roles(s: &ExtractedSentence) -> ProbeSentence {
    let mut tokens = s.tokens.clone();
    tokens[s.theme_head_index] = MASK.to_string();
    tokens[s.recipient_head_index] = MASK.to_string();
    let mut slots = vec![(s.theme_head_index, Role::Theme), (s.recipient_head_index, Role::Recipient)];
    slots.sort();
    ProbeSentence { tokens, slots, frame: s.frame, voice: s.voice, verb_lemma: s.verb_lemma.clone(), novel_token: None }
}

/// Role of the subject and of each object position, by structure.
pub fn position_roles(frame: Frame, voice: Voice) -> &'static [Role] {
    match (frame, voice) {
        (Frame::DoubleObject, Voice::Active) => &[Role::Recipient, Role::Theme],
        (Frame::DoubleObject, Voice::Passive) => &[Role::Recipient, Role::Theme],
        (Frame::Prepositional, Voice::Active) => &[Role::Theme, Role::Recipient],
        (Frame::Prepositional, Voice::Passive) => &[Role::Theme, Role::Recipient],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{extract_ditransitives, parse_ptb};

    fn texts(ps: &[ProbeSentence]) -> Vec<String> {
        ps.iter().map(|p| p.text()).collect()
    }

    #[test]
    fn do_give_tuning_set_matches_reference() {
        let set = gen_tuning_set(Frame::DoubleObject, "give", "thax", "ricket").unwrap();
        assert_eq!(
            texts(&set),
            [
                "I gave the ricket a box .",
                "I gave a ricket the camera .",
                "I gave the teacher a thax .",
                "I gave a student the thax .",
            ]
        );
        assert_eq!(set[0].slots, [(3, Role::Recipient)]);
        assert_eq!(set[2].slots, [(5, Role::Theme)]);
        assert!(set.iter().all(|s| s.is_well_formed()));
    }

    #[test]
    fn pd_give_tuning_set() {
        let set = gen_tuning_set(Frame::Prepositional, "give", "thax", "ricket").unwrap();
        assert_eq!(
            texts(&set),
            [
                "I gave the box to a ricket .",
                "I gave a camera to the ricket .",
                "I gave the thax to a teacher .",
                "I gave a thax to the student .",
            ]
        );
        assert_eq!(set[0].slots, [(6, Role::Recipient)]);
        assert_eq!(set[2].slots, [(3, Role::Theme)]);
    }

    #[test]
    fn tuning_sentences_hold_one_novel_token() {
        for frame in Frame::ALL {
            for verb in ["give", "send", "teach", "tell"] {
                for s in gen_tuning_set(frame, verb, "thax", "ricket").unwrap() {
                    let n = s.tokens.iter().filter(|t| *t == "thax" || *t == "ricket").count();
                    assert_eq!(n, 1, "{s}");
                }
            }
        }
    }

    #[test]
    fn tuning_set_errors() {
        assert_eq!(
            gen_tuning_set(Frame::DoubleObject, "give", "thax", "thax"),
            Err(ParadigmError::SameNovelTokens("thax".into()))
        );
        assert_eq!(
            gen_tuning_set(Frame::DoubleObject, "donate", "thax", "ricket"),
            Err(ParadigmError::UnknownVerb("donate".into()))
        );
    }

    #[test]
    fn do_passive_give_variant() {
        let set = gen_eval_set(&[Frame::DoubleObject], &[Voice::Passive], &["give"], 40, 3).unwrap();
        let target = set.iter().find(|s| s.text() == "A [MASK] was given the [MASK] .").expect("variant present");
        assert_eq!(target.slots, [(1, Role::Recipient), (5, Role::Theme)]);
    }

    #[test]
    fn pd_passive_send_variant() {
        let set = gen_eval_set(&[Frame::Prepositional], &[Voice::Passive], &["send"], 40, 3).unwrap();
        let target = set.iter().find(|s| s.text() == "The [MASK] was sent to a [MASK] .").expect("variant present");
        assert_eq!(target.slots, [(1, Role::Theme), (6, Role::Recipient)]);
    }

    #[test]
    fn eval_set_shape_and_determinism() {
        let verbs = ["give", "send", "teach", "tell"];
        let a = gen_eval_set(&Frame::ALL, &Voice::ALL, &verbs, 5, 11).unwrap();
        let b = gen_eval_set(&Frame::ALL, &Voice::ALL, &verbs, 5, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2 * 2 * 4 * 5);
        assert!(a.iter().all(|s| s.is_well_formed() && s.slots.len() == 2));
        assert_ne!(a, gen_eval_set(&Frame::ALL, &Voice::ALL, &verbs, 5, 12).unwrap());
    }

    #[test]
    fn eval_set_errors() {
        assert_eq!(gen_eval_set(&Frame::ALL, &Voice::ALL, &["give"], 0, 0), Err(ParadigmError::NoVariants));
        assert_eq!(
            gen_eval_set(&Frame::ALL, &Voice::ALL, &["donate"], 1, 0),
            Err(ParadigmError::UnknownVerb("donate".into()))
        );
    }

    #[test]
    fn role_map_by_structure() {
        // Passive subjects sit at index 1; active first objects at index 4.
        let set = gen_eval_set(&Frame::ALL, &Voice::ALL, &["give", "tell"], 3, 5).unwrap();
        for s in &set {
            let first = s.slots[0].1;
            let second = s.slots[1].1;
            assert_eq!([first, second], position_roles(s.frame, s.voice), "{s}");
            match (s.frame, s.voice) {
                (Frame::DoubleObject, Voice::Passive) => assert_eq!(s.role_at(1), Some(Role::Recipient)),
                (Frame::Prepositional, Voice::Passive) => assert_eq!(s.role_at(1), Some(Role::Theme)),
                _ => assert_eq!(s.slots[0].0, 4),
            }
        }
    }

    #[test]
    fn mask_roles_on_fixtures() {
        let trees = parse_ptb(
            "(S (NP (PRP I)) (VP (VBD gave) (NP (DT the) (NN dog)) (NP (DT a) (NN ball))))\n\
             (S (NP-SBJ-1 (DT The) (NN ball)) (VP (VBD was) (VP (VBN given) (NP (-NONE- *-1)) (PP (TO to) (NP (DT the) (NN dog))))))",
        )
        .unwrap();
        let ex = extract_ditransitives(&trees, Frame::DoubleObject, Voice::Active);
        let p = mask_roles(&ex[0]);
        assert_eq!(p.text(), "I gave the [MASK] a [MASK]");
        assert_eq!(p.slots, [(3, Role::Recipient), (5, Role::Theme)]);

        let ex = extract_ditransitives(&trees, Frame::Prepositional, Voice::Passive);
        let p = mask_roles(&ex[0]);
        assert_eq!(p.text(), "The [MASK] was given to the [MASK]");
        assert_eq!(p.slots, [(1, Role::Theme), (6, Role::Recipient)]);
        for (i, t) in ex[0].tokens.iter().enumerate() {
            if i != 1 && i != 6 {
                assert_eq!(&p.tokens[i], t);
            }
        }
    }
}
