use std::collections::BTreeSet;
use std::io::{self, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rolebench::checkpoint;
use rolebench::config::{BackendSpec, Experiment, ExperimentConfig};
use rolebench::experiment::{open_backend, run_exp1, run_exp2, write_artifacts};
use rolebench::formats;
use rolebench::report;
use rolebench::transport::serve_tcp;
use rolebench_core::mlm::{train_mlm, Init, TrainConfig};
use rolebench_core::paradigm::{gen_corpus, CorpusSpec};
use rolebench_core::{Frame, ModelConfig, ToyBackend, Voice};

#[derive(Parser)]
#[command(name = "rolebench", version, about = "Thematic-role probing workbench for masked language models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Extract ditransitive sentences from bracketed treebank files.
    Extract(ExtractArgs),
    /// Generate a synthetic training corpus.
    GenCorpus(GenCorpusArgs),
    /// Train the toy masked language model.
    Train(TrainArgs),
    /// Animacy confidence and entropy at THEME and RECIPIENT positions.
    Exp1(ExpArgs),
    /// Novel-token generalization across frames, voices and verbs.
    Exp2(ExpArgs),
    /// Double-object and prepositional-dative counts per verb.
    CorpusStats(CorpusStatsArgs),
    /// Serve a checkpoint over the NDJSON protocol.
    ServeToy(ServeArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Treebank files.
    #[arg(required = true)]
    treebank: Vec<PathBuf>,
    /// Frames to extract (DO, PD); all by default.
    #[arg(long = "frame")]
    frames: Vec<Frame>,
    /// Voices to extract (active, passive); all by default.
    #[arg(long = "voice")]
    voices: Vec<Voice>,
    /// Sentences kept per cell, first in corpus order.
    #[arg(long, default_value_t = 50)]
    cap: usize,
    /// File of source ids to drop, one per line.
    #[arg(long)]
    exclude: Option<PathBuf>,
    /// Output CSV; standard output when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenCorpusArgs {
    /// Corpus spec (JSON); defaults apply to missing fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    n_sentences: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective spec as JSON instead of generating.
    #[arg(long)]
    dump_spec: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Corpus text, one sentence per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Checkpoint to write.
    #[arg(long, short)]
    out: PathBuf,
    /// Continue from this checkpoint instead of a fresh model.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Model shape (JSON); defaults apply to missing fields.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Training settings (JSON); defaults apply to missing fields.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    lr: Option<f32>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Step-loss CSV.
    #[arg(long)]
    loss_csv: Option<PathBuf>,
}

#[derive(Args)]
struct ExpArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Serve this checkpoint in-process.
    #[arg(long, conflicts_with = "remote")]
    checkpoint: Option<PathBuf>,
    /// Protocol server at host:port.
    #[arg(long)]
    remote: Option<String>,
    /// Output directory; the ROLEBENCH_OUT environment variable wins over the config.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CorpusStatsArgs {
    #[arg(required = true)]
    treebank: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "give,send,teach,tell")]
    verbs: Vec<String>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value = "127.0.0.1:7878")]
    addr: String,
    /// Refuse tune requests.
    #[arg(long)]
    query_only: bool,
}

fn read_json<T: serde::de::DeserializeOwned + Default>(path: Option<&PathBuf>) -> Result<T> {
    match path {
        Some(p) => {
            let text = formats::read_file(p)?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
        None => Ok(T::default()),
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => formats::write_file(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn extract(a: ExtractArgs) -> Result<()> {
    let trees = formats::read_treebanks(&a.treebank)?;
    let exclude: BTreeSet<String> = match &a.exclude {
        Some(p) => formats::read_file(p)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect(),
        None => BTreeSet::new(),
    };
    let frames = if a.frames.is_empty() { Frame::ALL.to_vec() } else { a.frames };
    let voices = if a.voices.is_empty() { Voice::ALL.to_vec() } else { a.voices };
    let mut rows = Vec::new();
    for &f in &frames {
        for &v in &voices {
            let cell = formats::extract_cell(&trees, f, v, a.cap, &exclude);
            eprintln!("{f} {v}: {}", cell.len());
            rows.extend(cell);
        }
    }
    emit(a.out.as_ref(), &formats::extracted_to_csv(&rows)?)
}

fn gen(a: GenCorpusArgs) -> Result<()> {
    let mut spec: CorpusSpec = read_json(a.spec.as_ref())?;
    if let Some(n) = a.n_sentences {
        spec.n_sentences = n;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if a.dump_spec {
        return emit(a.out.as_ref(), &(serde_json::to_string_pretty(&spec)? + "\n"));
    }
    let corpus = gen_corpus(&spec)?;
    eprintln!("{} sentences", corpus.len());
    emit(a.out.as_ref(), &formats::corpus_to_text(&corpus))
}

fn train(a: TrainArgs) -> Result<()> {
    let corpus = formats::corpus_from_text(&formats::read_file(&a.corpus)?);
    let mut tc: TrainConfig = read_json(a.train.as_ref())?;
    if let Some(v) = a.steps {
        tc.steps = v;
    }
    if let Some(v) = a.lr {
        tc.lr = v;
    }
    if let Some(v) = a.batch {
        tc.batch = v;
    }
    if let Some(v) = a.seed {
        tc.seed = v;
    }
    let init = match &a.resume {
        Some(p) => Init::Resume(checkpoint::load_file(p)?),
        None => Init::Fresh(read_json::<ModelConfig>(a.model.as_ref())?),
    };
    let mut losses = Vec::with_capacity(tc.steps);
    let every = (tc.steps / 20).max(1);
    let ck = train_mlm(&corpus, init, &tc, |step, loss| {
        losses.push((step as u64, loss));
        if step % every == 0 || step + 1 == tc.steps {
            eprintln!("step {step:>6}  loss {loss:.4}");
        }
    })?;
    checkpoint::save_file(&ck, &a.out)?;
    if let Some(p) = &a.loss_csv {
        formats::write_file(p, report::loss_csv(&losses))?;
    }
    eprintln!("wrote {} (vocabulary {}, {} steps)", a.out.display(), ck.vocab.len(), ck.meta.steps);
    Ok(())
}

fn experiment(which: Experiment, a: ExpArgs) -> Result<()> {
    let mut cfg: ExperimentConfig = read_json(a.config.as_ref())?;
    cfg.experiment = which;
    if let Some(p) = a.checkpoint {
        cfg.backend = BackendSpec::Checkpoint(p);
    }
    if let Some(r) = a.remote {
        cfg.backend = BackendSpec::Remote(r);
    }
    if let Some(o) = a.out {
        cfg.output_dir = o;
    }
    cfg.validate()?;
    let dir = cfg.resolved_output_dir();
    let mut backend = open_backend(&cfg.backend)?;
    match which {
        Experiment::Exp1 => {
            let o = run_exp1(&mut *backend, &cfg)?;
            write_artifacts(&dir, &o.artifacts)?;
            print!("{}", report::cells_markdown(&o.cells));
        }
        Experiment::Exp2 => {
            let o = run_exp2(&mut *backend, &cfg)?;
            write_artifacts(&dir, &o.artifacts)?;
            for t in &o.tables {
                println!("{}", t.to_markdown());
            }
            if let Some(e) = o.divergence_error() {
                bail!(e);
            }
        }
    }
    eprintln!("artifacts in {}", dir.display());
    Ok(())
}

fn corpus_stats(a: CorpusStatsArgs) -> Result<()> {
    let trees = formats::read_treebanks(&a.treebank)?;
    let none = BTreeSet::new();
    let mut all = Vec::new();
    for f in Frame::ALL {
        for v in Voice::ALL {
            all.extend(formats::extract_cell(&trees, f, v, usize::MAX, &none));
        }
    }
    let counts = formats::frame_counts(&all, &a.verbs);
    print!("{}", formats::frame_counts_table(&counts, &a.verbs));
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let ck = checkpoint::load_file(&a.checkpoint)?;
    let backend = if a.query_only { ToyBackend::query_only(ck) } else { ToyBackend::new(ck) };
    let listener = TcpListener::bind(&a.addr).with_context(|| format!("binding {}", a.addr))?;
    println!("listening on {}", listener.local_addr()?);
    io::stdout().flush()?;
    serve_tcp(listener, backend)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Extract(a) => extract(a),
        Cmd::GenCorpus(a) => gen(a),
        Cmd::Train(a) => train(a),
        Cmd::Exp1(a) => experiment(Experiment::Exp1, a),
        Cmd::Exp2(a) => experiment(Experiment::Exp2, a),
        Cmd::CorpusStats(a) => corpus_stats(a),
        Cmd::ServeToy(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
