//! Both experiments end to end. Runs produce named in-memory artifacts so
//! that callers can compare them before (or instead of) writing files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rolebench_core::backend::{tune_checked, BackendError, TuneRequest};
use rolebench_core::paradigm::{gen_eval_set, gen_tuning_set, mask_roles, ParadigmError};
use rolebench_core::probing::{
    aconf_records, average_runs, eval_accuracy, select_verb, summarize_exp1, AconfRecord, CellReport, ProbeError,
    RunTable, TuneStatus, TuneTrace,
};
use rolebench_core::{Backend, Frame, NounInventory, ProbeSentence, ToyBackend};
use thiserror::Error;

use crate::checkpoint::{self, CheckpointError};
use crate::config::{BackendSpec, ConfigError, ExperimentConfig};
use crate::formats::{self, FormatError};
use crate::report::{self, AccuracyTable};
use crate::transport::NdjsonClient;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Paradigm(#[from] ParadigmError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("tuning diverged in {diverged} of {runs} runs")]
    Diverged { diverged: usize, runs: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

fn artifact(name: impl Into<String>, contents: String) -> Artifact {
    Artifact { name: name.into(), contents }
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), FormatError> {
    for a in artifacts {
        formats::write_file(&dir.join(&a.name), &a.contents)?;
    }
    Ok(())
}

pub fn open_backend(spec: &BackendSpec) -> Result<Box<dyn Backend + Send>, ExperimentError> {
    Ok(match spec {
        BackendSpec::Checkpoint(path) => Box::new(ToyBackend::new(checkpoint::load_file(path)?)),
        BackendSpec::Remote(addr) => Box::new(NdjsonClient::connect(addr.as_str())?),
    })
}

/// Treebank-extracted probes when configured, generated ones otherwise.
pub fn exp1_probes(cfg: &ExperimentConfig) -> Result<Vec<ProbeSentence>, ExperimentError> {
    if let Some(tb) = &cfg.treebank {
        let trees = formats::read_treebanks(&tb.paths)?;
        let exclude: BTreeSet<String> = tb.exclude.iter().cloned().collect();
        let mut out = Vec::new();
        for &frame in &cfg.frames {
            for &voice in &cfg.voices {
                out.extend(formats::extract_cell(&trees, frame, voice, tb.cap, &exclude).iter().map(mask_roles));
            }
        }
        return Ok(out);
    }
    let verbs: Vec<&str> = cfg.verbs.iter().map(String::as_str).collect();
    Ok(gen_eval_set(&cfg.frames, &cfg.voices, &verbs, cfg.n_variants, cfg.eval_seed)?)
}

pub struct Exp1Outcome {
    pub records: Vec<AconfRecord>,
    pub cells: Vec<CellReport>,
    pub artifacts: Vec<Artifact>,
}

pub fn run_exp1<B: Backend + ?Sized>(backend: &mut B, cfg: &ExperimentConfig) -> Result<Exp1Outcome, ExperimentError> {
    cfg.validate()?;
    let probes = exp1_probes(cfg)?;
    let records = aconf_records(backend, &probes, &NounInventory::default())?;
    let cells = summarize_exp1(&records)?;
    let mut artifacts = vec![
        artifact("exp1_records.csv", report::records_csv(&records)),
        artifact("exp1_cells.csv", report::cells_csv(&cells)),
        artifact("exp1_cells.md", report::cells_markdown(&cells)),
    ];
    let mut by_cell: BTreeMap<_, [Vec<f64>; 4]> = BTreeMap::new();
    for r in &records {
        let e = by_cell.entry((r.frame, r.voice)).or_default();
        let k = usize::from(r.role == rolebench_core::Role::Recipient);
        e[k].push(r.aconf);
        e[2 + k].push(r.entropy);
    }
    for ((frame, voice), [ta, ra, te, re]) in &by_cell {
        let title = format!("{frame} {voice}");
        artifacts.push(artifact(
            format!("exp1_aconf_{frame}_{voice}.svg"),
            report::histogram_svg(&format!("Animacy confidence, {title}"), "aconf", ta, ra, 20),
        ));
        artifacts.push(artifact(
            format!("exp1_entropy_{frame}_{voice}.svg"),
            report::histogram_svg(&format!("Entropy, {title}"), "entropy (nats)", te, re, 20),
        ));
    }
    Ok(Exp1Outcome { records, cells, artifacts })
}

pub struct TunedRun {
    pub regimen: Frame,
    pub run: usize,
    pub seed: u64,
    pub trace: TuneTrace,
    pub table: RunTable,
}

pub struct Exp2Outcome {
    pub runs: Vec<TunedRun>,
    /// One table per evaluation verb, in config order.
    pub tables: Vec<AccuracyTable>,
    pub artifacts: Vec<Artifact>,
}

impl Exp2Outcome {
    pub fn table(&self, verb: &str) -> Option<&AccuracyTable> {
        self.tables.iter().find(|t| t.verb == verb)
    }

    pub fn diverged(&self) -> usize {
        self.runs.iter().filter(|r| r.trace.status == TuneStatus::Diverged).count()
    }

    /// Set when more than half the runs diverged; the report is still complete.
    pub fn divergence_error(&self) -> Option<ExperimentError> {
        let d = self.diverged();
        (2 * d > self.runs.len()).then_some(ExperimentError::Diverged { diverged: d, runs: self.runs.len() })
    }
}

fn traces_csv(runs: &[TunedRun]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["training", "run", "seed", "epoch", "mean_log_prob", "best_epoch", "status"]).expect("memory");
    for r in runs {
        let status = serde_json::to_value(r.trace.status).expect("status serializes");
        for (epoch, lp) in r.trace.mean_log_prob.iter().enumerate() {
            w.write_record([
                r.regimen.to_string(),
                r.run.to_string(),
                r.seed.to_string(),
                epoch.to_string(),
                lp.to_string(),
                r.trace.best_epoch.to_string(),
                status.as_str().unwrap_or_default().to_owned(),
            ])
            .expect("memory");
        }
    }
    String::from_utf8(w.into_inner().expect("memory")).expect("UTF-8")
}

pub fn run_exp2<B: Backend + ?Sized>(backend: &mut B, cfg: &ExperimentConfig) -> Result<Exp2Outcome, ExperimentError> {
    cfg.validate()?;
    let ft = &cfg.finetune;
    let verbs: Vec<&str> = cfg.verbs.iter().map(String::as_str).collect();
    let mut runs = Vec::new();
    let mut id = 0u64;
    for &regimen in &cfg.regimens {
        let tuning = gen_tuning_set(regimen, &cfg.training_verb, &ft.theme_token, &ft.recipient_token)?;
        for run in 0..ft.n_runs {
            let session = format!("{regimen}-{run}");
            let seed = ft.run_seed(run);
            let req = TuneRequest { id, session: session.clone(), sentences: tuning.clone(), config: ft.clone(), seed };
            id += 1;
            let trace = tune_checked(backend, &req)?.trace;
            // Runs differ in the evaluation sample as well as the initialization.
            let eval = gen_eval_set(&cfg.frames, &cfg.voices, &verbs, cfg.n_variants, cfg.eval_seed + run as u64)?;
            let table = eval_accuracy(backend, Some(&session), &eval, &ft.theme_token, &ft.recipient_token)?;
            runs.push(TunedRun { regimen, run, seed, trace, table });
        }
    }

    let mut tables = Vec::new();
    for verb in &cfg.verbs {
        let rows = cfg
            .regimens
            .iter()
            .map(|&regimen| {
                let per_run: Vec<RunTable> =
                    runs.iter().filter(|r| r.regimen == regimen).map(|r| select_verb(&r.table, verb)).collect();
                let cells = average_runs(&per_run).into_iter().map(|(k, a)| ((k.frame, k.voice, k.role), a)).collect();
                (regimen, cells)
            })
            .collect();
        tables.push(AccuracyTable { verb: verb.clone(), rows });
    }

    let mut artifacts = Vec::new();
    let mut summary = format!(
        "Novel tokens tuned on '{}', averaged over {} runs. Rows are training frames, columns evaluation cells.\n",
        cfg.training_verb, ft.n_runs
    );
    for t in &tables {
        artifacts.push(artifact(format!("exp2_{}.csv", t.verb), t.to_csv()));
        artifacts.push(artifact(format!("exp2_{}.md", t.verb), t.to_markdown()));
        summary.push('\n');
        summary.push_str(&t.to_markdown());
    }
    artifacts.push(artifact("exp2_summary.md", summary));
    artifacts.push(artifact("exp2_traces.csv", traces_csv(&runs)));
    Ok(Exp2Outcome { runs, tables, artifacts })
}
