//! Synthetic pretraining corpus with controllable verb/frame frequencies.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::generate::ParadigmError;
use super::lexicon::{
    verb_forms, NounInventory, ANIMATE_INTRANSITIVES, CONTROL_COMPLEMENTS, DETERMINERS, EXTRA_THEMES,
    INANIMATE_INTRANSITIVES, PRONOUN_SUBJECTS, TRANSITIVE_VERBS,
};
use super::probe::{Frame, Voice};
use crate::rng::{self, Rng};

/// Weight of one ditransitive (verb, frame, voice) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellWeight {
    pub verb: String,
    pub frame: Frame,
    pub voice: Voice,
    pub weight: f64,
}

/// Non-ditransitive uses of a ditransitive verb.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Usage {
    /// "told the student ."
    AnimateObject,
    /// "sent the letter ."
    InanimateObject,
    /// "told the student to leave ."
    ObjectControl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageWeight {
    pub verb: String,
    pub usage: Usage,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSpec {
    pub n_sentences: usize,
    pub seed: u64,
    pub verb_frame_weights: Vec<CellWeight>,
    pub verb_usage_weights: Vec<UsageWeight>,
    pub fillers: NounInventory,
    /// Extra inanimate nouns that may fill theme slots.
    pub extra_themes: Vec<String>,
    pub determiners: Vec<String>,
    /// Probability that an argument slot takes a noun of the other animacy class.
    pub leak: f64,
    pub transitive_weight: f64,
    pub transitive_passive_weight: f64,
    pub intransitive_weight: f64,
    /// Chance a passive carries a `by` agent phrase.
    pub by_phrase: f64,
    /// Chance a subject is a pronoun rather than a full NP.
    pub pronoun_subject: f64,
}

fn cell(verb: &str, frame: Frame, voice: Voice, weight: f64) -> CellWeight {
    CellWeight { verb: verb.to_string(), frame, voice, weight }
}

/// Frame preferences for the four verbs: `give` alternates freely, `send`
/// strongly prefers the prepositional dative, `tell` never takes it, and
/// `teach` is rare and leans double-object. Passives are half as frequent as
/// their actives.
pub fn default_verb_frame_weights() -> Vec<CellWeight> {
    let mut w = Vec::new();
    for (verb, do_w, pd_w) in [("give", 1.0, 1.0), ("send", 0.04, 1.0), ("teach", 0.3, 0.1), ("tell", 1.0, 0.0)] {
        for (frame, base) in [(Frame::DoubleObject, do_w), (Frame::Prepositional, pd_w)] {
            w.push(cell(verb, frame, Voice::Active, base));
            w.push(cell(verb, frame, Voice::Passive, base * 0.5));
        }
    }
    w
}

/// `tell` mostly takes a person as its object, often followed by a control
/// clause; `send` mostly takes a thing.
pub fn default_verb_usage_weights() -> Vec<UsageWeight> {
    [("tell", Usage::AnimateObject, 0.5), ("tell", Usage::ObjectControl, 0.5), ("send", Usage::InanimateObject, 0.5)]
        .into_iter()
        .map(|(verb, usage, weight)| UsageWeight { verb: verb.to_string(), usage, weight })
        .collect()
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            n_sentences: 50_000,
            seed: 0,
            verb_frame_weights: default_verb_frame_weights(),
            verb_usage_weights: default_verb_usage_weights(),
            fillers: NounInventory::default(),
            extra_themes: EXTRA_THEMES.iter().map(|s| s.to_string()).collect(),
            determiners: DETERMINERS.iter().map(|s| s.to_string()).collect(),
            leak: 0.05,
            transitive_weight: 2.0,
            transitive_passive_weight: 0.6,
            intransitive_weight: 1.0,
            by_phrase: 0.3,
            pronoun_subject: 0.2,
        }
    }
}

/// What produced a corpus sentence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Template {
    Ditransitive { verb: String, frame: Frame, voice: Voice },
    VerbUsage { verb: String, usage: Usage },
    Transitive,
    TransitivePassive,
    Intransitive,
}

impl CorpusSpec {
    pub fn set_weight(&mut self, verb: &str, frame: Frame, voice: Voice, weight: f64) {
        match self.verb_frame_weights.iter_mut().find(|c| c.verb == verb && c.frame == frame && c.voice == voice) {
            Some(c) => c.weight = weight,
            None => self.verb_frame_weights.push(cell(verb, frame, voice, weight)),
        }
    }

    fn validate(&self) -> Result<(), ParadigmError> {
        let bad = |m: &str| Err(ParadigmError::InvalidSpec(m.to_string()));
        let all = self
            .verb_frame_weights
            .iter()
            .map(|c| c.weight)
            .chain(self.verb_usage_weights.iter().map(|u| u.weight))
            .chain([self.transitive_weight, self.transitive_passive_weight, self.intransitive_weight]);
        let mut total = 0.0;
        for w in all {
            if !(w >= 0.0 && w.is_finite()) {
                return bad("weights must be finite and nonnegative");
            }
            total += w;
        }
        if total <= 0.0 {
            return Err(ParadigmError::ZeroWeights);
        }
        let verbs =
            self.verb_frame_weights.iter().map(|c| &c.verb).chain(self.verb_usage_weights.iter().map(|u| &u.verb));
        for v in verbs {
            if verb_forms(v).is_none() {
                return Err(ParadigmError::UnknownVerb(v.clone()));
            }
        }
        if self.fillers.animate.is_empty() || self.fillers.inanimate.is_empty() || self.determiners.is_empty() {
            return bad("filler and determiner lists must be nonempty");
        }
        if !self.fillers.is_disjoint() {
            return bad("animate and inanimate fillers overlap");
        }
        for p in [self.leak, self.by_phrase, self.pronoun_subject] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1]");
            }
        }
        Ok(())
    }

    /// Templates with their normalized probabilities, in a fixed order.
    pub fn template_distribution(&self) -> Result<Vec<(Template, f64)>, ParadigmError> {
        self.validate()?;
        let mut t: Vec<(Template, f64)> = self
            .verb_frame_weights
            .iter()
            .map(|c| (Template::Ditransitive { verb: c.verb.clone(), frame: c.frame, voice: c.voice }, c.weight))
            .collect();
        t.extend(
            self.verb_usage_weights
                .iter()
                .map(|u| (Template::VerbUsage { verb: u.verb.clone(), usage: u.usage }, u.weight)),
        );
        t.push((Template::Transitive, self.transitive_weight));
        t.push((Template::TransitivePassive, self.transitive_passive_weight));
        t.push((Template::Intransitive, self.intransitive_weight));
        let total: f64 = t.iter().map(|x| x.1).sum();
        for x in &mut t {
            x.1 /= total;
        }
        Ok(t)
    }
}

struct Filler<'a> {
    spec: &'a CorpusSpec,
    rng: Rng,
}

impl Filler<'_> {
    fn pick<'s>(&mut self, items: &'s [String]) -> &'s str {
        &items[self.rng.random_range(0..items.len())]
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.random::<f64>() < p
    }

    fn det(&mut self) -> String {
        self.pick(&self.spec.determiners).to_string()
    }

    fn animate(&mut self) -> String {
        self.pick(&self.spec.fillers.animate).to_string()
    }

    fn inanimate(&mut self) -> String {
        let n_inv = self.spec.fillers.inanimate.len();
        let i = self.rng.random_range(0..n_inv + self.spec.extra_themes.len());
        if i < n_inv {
            self.spec.fillers.inanimate[i].clone()
        } else {
            self.spec.extra_themes[i - n_inv].clone()
        }
    }

    fn recipient(&mut self) -> String {
        if self.chance(self.spec.leak) {
            self.inanimate()
        } else {
            self.animate()
        }
    }

    fn theme(&mut self) -> String {
        if self.chance(self.spec.leak) {
            self.animate()
        } else {
            self.inanimate()
        }
    }

    fn subject(&mut self, out: &mut Vec<String>) {
        if self.chance(self.spec.pronoun_subject) {
            out.push(PRONOUN_SUBJECTS[self.rng.random_range(0..PRONOUN_SUBJECTS.len())].to_string());
        } else {
            out.push(self.det());
            out.push(self.animate());
        }
    }

    fn np(&mut self, noun: String, out: &mut Vec<String>) {
        out.push(self.det());
        out.push(noun);
    }

    fn by_phrase(&mut self, out: &mut Vec<String>) {
        if self.chance(self.spec.by_phrase) {
            out.push("by".into());
            let agent = self.animate();
            self.np(agent, out);
        }
    }

    fn sentence(&mut self, template: &Template) -> Vec<String> {
        let mut s = Vec::with_capacity(12);
        match template {
            Template::Ditransitive { verb, frame, voice } => {
                let v = verb_forms(verb).expect("validated");
                let (rec, theme) = (self.recipient(), self.theme());
                match (frame, voice) {
                    (Frame::DoubleObject, Voice::Active) => {
                        self.subject(&mut s);
                        s.push(v.past.into());
                        self.np(rec, &mut s);
                        self.np(theme, &mut s);
                    }
                    (Frame::Prepositional, Voice::Active) => {
                        self.subject(&mut s);
                        s.push(v.past.into());
                        self.np(theme, &mut s);
                        s.push("to".into());
                        self.np(rec, &mut s);
                    }
                    (Frame::DoubleObject, Voice::Passive) => {
                        self.np(rec, &mut s);
                        s.extend(["was".into(), v.participle.into()]);
                        self.np(theme, &mut s);
                        self.by_phrase(&mut s);
                    }
                    (Frame::Prepositional, Voice::Passive) => {
                        self.np(theme, &mut s);
                        s.extend(["was".into(), v.participle.into(), "to".into()]);
                        self.np(rec, &mut s);
                        self.by_phrase(&mut s);
                    }
                }
            }
            Template::VerbUsage { verb, usage } => {
                let v = verb_forms(verb).expect("validated");
                self.subject(&mut s);
                s.push(v.past.into());
                let object = match usage {
                    Usage::InanimateObject => self.theme(),
                    Usage::AnimateObject | Usage::ObjectControl => self.recipient(),
                };
                self.np(object, &mut s);
                if *usage == Usage::ObjectControl {
                    s.push("to".into());
                    s.push(CONTROL_COMPLEMENTS[self.rng.random_range(0..CONTROL_COMPLEMENTS.len())].into());
                }
            }
            Template::Transitive | Template::TransitivePassive => {
                let (past, part, any_object) = TRANSITIVE_VERBS[self.rng.random_range(0..TRANSITIVE_VERBS.len())];
                let object = if any_object && self.chance(0.5) { self.animate() } else { self.theme() };
                if *template == Template::Transitive {
                    self.subject(&mut s);
                    s.push(past.into());
                    self.np(object, &mut s);
                } else {
                    self.np(object, &mut s);
                    s.extend(["was".into(), part.into()]);
                    self.by_phrase(&mut s);
                }
            }
            Template::Intransitive => {
                if self.chance(0.75) {
                    let n = self.animate();
                    self.np(n, &mut s);
                    s.push(ANIMATE_INTRANSITIVES[self.rng.random_range(0..ANIMATE_INTRANSITIVES.len())].into());
                } else {
                    let n = self.inanimate();
                    self.np(n, &mut s);
                    s.push(INANIMATE_INTRANSITIVES[self.rng.random_range(0..INANIMATE_INTRANSITIVES.len())].into());
                }
            }
        }
        s.push(".".into());
        s
    }
}

/// Corpus sentences with the template that produced each.
pub fn gen_corpus_labeled(spec: &CorpusSpec) -> Result<Vec<(Template, Vec<String>)>, ParadigmError> {
    let dist = spec.template_distribution()?;
    let mut cumulative = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for (_, p) in &dist {
        acc += p;
        cumulative.push(acc);
    }
    let mut pick_rng = rng::stream(spec.seed, "corpus-template");
    let mut filler = Filler { spec, rng: rng::stream(spec.seed, "corpus-fill") };
    let mut out = Vec::with_capacity(spec.n_sentences);
    for _ in 0..spec.n_sentences {
        let u: f64 = pick_rng.random();
        let mut k = cumulative.partition_point(|&c| c <= u).min(dist.len() - 1);
        // Skip zero-weight templates that a boundary draw could land on.
        while dist[k].1 == 0.0 {
            k = if k + 1 < dist.len() { k + 1 } else { 0 };
        }
        let template = dist[k].0.clone();
        let sentence = filler.sentence(&template);
        out.push((template, sentence));
    }
    Ok(out)
}

/// `n_sentences` lowercase token sequences drawn i.i.d. from the template
/// distribution. Pure function of the spec.
pub fn gen_corpus(spec: &CorpusSpec) -> Result<Vec<Vec<String>>, ParadigmError> {
    Ok(gen_corpus_labeled(spec)?.into_iter().map(|(_, s)| s).collect())
}

/// A single-template spec, handy for tests and overfitting checks.
pub fn only(verb: &str, frame: Frame, voice: Voice, n_sentences: usize, seed: u64) -> CorpusSpec {
    CorpusSpec {
        n_sentences,
        seed,
        verb_frame_weights: vec![cell(verb, frame, voice, 1.0)],
        verb_usage_weights: Vec::new(),
        transitive_weight: 0.0,
        transitive_passive_weight: 0.0,
        intransitive_weight: 0.0,
        ..CorpusSpec::default()
    }
}
