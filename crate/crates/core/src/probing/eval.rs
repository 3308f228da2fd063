use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::metrics::log_odds;
use super::ProbeError;
use crate::backend::{query_checked, Backend, DistributionRequest};
use crate::mlm::MaskDistribution;
use crate::paradigm::{Frame, ProbeSentence, Role, Voice};

/// One accuracy cell: frame × voice × verb × role.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub frame: Frame,
    pub voice: Voice,
    pub verb: String,
    pub role: Role,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| 100.0 * self.correct as f64 / self.total as f64)
    }
}

pub type RunTable = BTreeMap<CellKey, Tally>;

/// A THEME slot is right when the theme token out-scores the recipient
/// token, a RECIPIENT slot when it is the other way round. Ties are wrong.
pub fn verdict(role: Role, theme_vs_recipient: f64) -> bool {
    match role {
        Role::Theme => theme_vs_recipient > 0.0,
        Role::Recipient => theme_vs_recipient < 0.0,
    }
}

/// Score every masked slot of `eval` with the log-odds rule, querying
/// `session` (or the base model) through `backend`.
pub fn eval_accuracy<B: Backend + ?Sized>(
    backend: &mut B,
    session: Option<&str>,
    eval: &[ProbeSentence],
    theme_token: &str,
    recipient_token: &str,
) -> Result<RunTable, ProbeError> {
    let mut table = RunTable::new();
    for (i, s) in eval.iter().enumerate() {
        let req = DistributionRequest {
            id: i as u64,
            session: session.map(Into::into),
            tokens: s.tokens.clone(),
            positions: s.mask_positions(),
            query: vec![theme_token.into(), recipient_token.into()],
            top_k: 0,
        };
        let resp = query_checked(backend, &req)?;
        for (pd, &(_, role)) in resp.positions.into_iter().zip(&s.slots) {
            let d = MaskDistribution::from(pd);
            let lo = log_odds(&d, theme_token, recipient_token)?;
            let key = CellKey { frame: s.frame, voice: s.voice, verb: s.verb_lemma.clone(), role };
            let t = table.entry(key).or_default();
            t.total += 1;
            t.correct += usize::from(verdict(role, lo));
        }
    }
    Ok(table)
}

/// Per-cell accuracy averaged over runs; each run pools its positions
/// first. A cell missing from some runs averages over the runs that have it.
pub fn average_runs(runs: &[RunTable]) -> BTreeMap<CellKey, f64> {
    let mut acc: BTreeMap<CellKey, (f64, usize)> = BTreeMap::new();
    for run in runs {
        for (k, t) in run {
            if let Some(a) = t.accuracy() {
                let e = acc.entry(k.clone()).or_insert((0.0, 0));
                e.0 += a;
                e.1 += 1;
            }
        }
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Merge cells across verbs into verb `"*"`, pooling counts.
pub fn pool_verbs(run: &RunTable) -> RunTable {
    let mut out = RunTable::new();
    for (k, t) in run {
        let e = out.entry(CellKey { verb: "*".into(), ..k.clone() }).or_default();
        e.correct += t.correct;
        e.total += t.total;
    }
    out
}

/// Keep only the cells of `verb`.
pub fn select_verb(run: &RunTable, verb: &str) -> RunTable {
    run.iter().filter(|(k, _)| k.verb == verb).map(|(k, t)| (k.clone(), *t)).collect()
}

/// Cells in presentation order: frame, voice, role (THEME first).
pub fn column_order() -> Vec<(Frame, Voice, Role)> {
    let mut out = Vec::new();
    for f in [Frame::DoubleObject, Frame::Prepositional] {
        for v in [Voice::Active, Voice::Passive] {
            for r in [Role::Theme, Role::Recipient] {
                out.push((f, v, r));
            }
        }
    }
    out
}
