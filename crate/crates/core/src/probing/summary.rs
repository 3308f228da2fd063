use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::metrics::{animacy_confidence, entropy};
use super::welch::{welch_t, Welch};
use super::ProbeError;
use crate::backend::{query_checked, Backend, DistributionRequest};
use crate::mlm::MaskDistribution;
use crate::paradigm::{Frame, NounInventory, ProbeSentence, Role, Voice};

/// Animacy confidence and entropy at one masked argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AconfRecord {
    pub sentence_id: usize,
    pub frame: Frame,
    pub voice: Voice,
    pub verb: String,
    pub role: Role,
    pub position: usize,
    pub aconf: f64,
    pub saturated: bool,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub frame: Frame,
    pub voice: Voice,
    pub verb: String,
    pub role: Role,
    pub mean_aconf: f64,
    pub mean_entropy: f64,
    pub accuracy: Option<f64>,
    pub n: usize,
    /// This role against the opposite role of the same cell.
    pub welch_aconf: Welch,
    pub welch_entropy: Welch,
}

/// Query every masked slot of `probes` for the inventory nouns and score it.
pub fn aconf_records<B: Backend + ?Sized>(
    backend: &mut B,
    probes: &[ProbeSentence],
    inv: &NounInventory,
) -> Result<Vec<AconfRecord>, ProbeError> {
    let query = inv.all();
    let mut out = Vec::new();
    for (i, s) in probes.iter().enumerate() {
        let req = DistributionRequest {
            id: i as u64,
            session: None,
            tokens: s.tokens.clone(),
            positions: s.mask_positions(),
            query: query.clone(),
            top_k: 0,
        };
        let resp = query_checked(backend, &req)?;
        for (pd, &(position, role)) in resp.positions.into_iter().zip(&s.slots) {
            let d = MaskDistribution::from(pd);
            let a = animacy_confidence(&d, inv)?;
            out.push(AconfRecord {
                sentence_id: i,
                frame: s.frame,
                voice: s.voice,
                verb: s.verb_lemma.clone(),
                role,
                position,
                aconf: a.value,
                saturated: a.saturated,
                entropy: entropy(&d)?,
            });
        }
    }
    Ok(out)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Per frame × voice cell (verbs pooled as `"*"`): role means and Welch
/// tests of THEME against RECIPIENT for aconf and entropy. Reports come
/// ordered by frame, voice, role.
pub fn summarize_exp1(records: &[AconfRecord]) -> Result<Vec<CellReport>, ProbeError> {
    let mut cells: BTreeMap<(Frame, Voice), BTreeMap<Role, (Vec<f64>, Vec<f64>)>> = BTreeMap::new();
    for r in records {
        let e = cells.entry((r.frame, r.voice)).or_default().entry(r.role).or_default();
        e.0.push(r.aconf);
        e.1.push(r.entropy);
    }
    let mut out = Vec::new();
    for ((frame, voice), roles) in cells {
        let empty = (vec![], vec![]);
        let th = roles.get(&Role::Theme).unwrap_or(&empty);
        let re = roles.get(&Role::Recipient).unwrap_or(&empty);
        if th.0.len() < 2 || re.0.len() < 2 {
            return Err(ProbeError::Degenerate(format!(
                "{frame}-{voice} has {} theme and {} recipient records",
                th.0.len(),
                re.0.len()
            )));
        }
        let wa = welch_t(&th.0, &re.0)?;
        let we = welch_t(&th.1, &re.1)?;
        for (role, (a, h), sign) in [(Role::Theme, th, 1.0), (Role::Recipient, re, -1.0)] {
            out.push(CellReport {
                frame,
                voice,
                verb: "*".into(),
                role,
                mean_aconf: mean(a),
                mean_entropy: mean(h),
                accuracy: None,
                n: a.len(),
                welch_aconf: Welch { t: sign * wa.t, ..wa },
                welch_entropy: Welch { t: sign * we.t, ..we },
            });
        }
    }
    Ok(out)
}
