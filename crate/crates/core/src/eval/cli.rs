//! Command-line entry point.
//!
//! Every subcommand writes its CSV/JSONL outputs plus a JSON run manifest
//! under `--out`. Failures exit nonzero and print a JSON error record to
//! stderr (also saved as `error.json`).

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{ConfigError, RunConfig};
use super::{
    compliance_report, na_accuracy, nonce_evaluation, write_outcomes, write_report_csv, EvalError, EvalReport,
    NonceItem,
};
use crate::conllu::{build_vocab, parse_files, serialize_conllu, Corpus, ParseMode, VocabOptions, Vocabulary};
use crate::extraction::{
    extract_corpus, generate_nonce, generate_synthetic_corpus, mark_scoreable, read_instances,
    write_instance_records, write_instances, AgreementInstance, AgreementKind, ExtractOptions, InstanceRecord,
    MorphLexicon, NONCE_VARIANTS,
};
use crate::heuristics::{heuristic_accuracy, profile_all, stratify, Heuristic, HeuristicOptions};
use crate::intervention::{intervention_report_with_scope, write_intervention_csv, LayerScope, MaskCondition};
use crate::lm::{
    encode_corpus, load_checkpoint, perplexity, save_checkpoint, train_with_callback, TransformerLM,
};
use crate::probing::{
    average_cells, extract_representations, pattern_items, positional_probe_suite, region_probe_suite,
    write_records,
};
use crate::util::{derive_seed, salt_of};

#[derive(Debug, Parser)]
#[command(name = "accord", version, about = "French long-distance agreement toolkit")]
pub struct Cli {
    /// Base seed; every derived seed not set in the config comes from it.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Plain-text `key = value` configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Abort on malformed CoNLL-U instead of dropping the sentence.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Evaluate every `*.ckpt` in this directory and average the reports.
    #[arg(long, global = true)]
    pub ensemble: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract agreement instances from CoNLL-U files into JSONL.
    Extract(ExtractArgs),
    /// Split an instance file into one file per difficulty bucket.
    Stratify(InstancesArgs),
    /// Accuracy of each surface heuristic.
    Heuristics(InstancesArgs),
    /// Generate a synthetic training corpus and a held-out corpus.
    Synth,
    /// Train a language model.
    Train(TrainArgs),
    /// Perplexity of a model on a corpus.
    Ppl(ModelArgs),
    /// Baseline agreement accuracy by difficulty.
    Eval(EvalArgs),
    /// Accuracy under attention-masking interventions.
    Intervene(InterveneArgs),
    /// Region-wise linear probes.
    ProbeRegions(EvalArgs),
    /// Position-wise probes on fixed-pattern instances.
    ProbePositions(EvalArgs),
    /// Generate nonce variants and compare accuracy.
    Nonce(NonceArgs),
    /// Share of attested object participles that agree with their antecedent.
    Compliance(CorpusArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// CoNLL-U input files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Corpora to build the morphological lexicon from (default: the inputs).
    #[arg(long)]
    pub lexicon: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InstancesArgs {
    /// Instance file (default: OUT/instances.jsonl).
    #[arg(long)]
    pub instances: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// CoNLL-U files (default: OUT/synth.conllu).
    #[arg(long)]
    pub corpus: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training corpus (default: OUT/synth.conllu).
    #[arg(long)]
    pub corpus: Vec<PathBuf>,
    /// Validation corpus (default: OUT/heldout.conllu when present).
    #[arg(long)]
    pub valid: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Evaluation corpus (default: OUT/heldout.conllu).
    #[arg(long)]
    pub corpus: Vec<PathBuf>,
    /// Checkpoint (default: OUT/model.ckpt).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Vocabulary (default: OUT/vocab.txt).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Instance file (default: extract from the corpus).
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Corpora for the morphological lexicon, added to the evaluation corpus
    /// (default: OUT/synth.conllu when present).
    #[arg(long)]
    pub lexicon: Vec<PathBuf>,
    /// Restrict to one agreement kind.
    #[arg(long)]
    pub kind: Option<AgreementKind>,
}

#[derive(Debug, Args)]
pub struct InterveneArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    /// Conditions to run (default: all four).
    #[arg(long, value_delimiter = ',')]
    pub conditions: Vec<MaskCondition>,
    /// Mask only these 0-based layers (default: all).
    #[arg(long, value_delimiter = ',')]
    pub layers: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct NonceArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    /// Score at most this many originals.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Corpus supplying substitute words (default: OUT/synth.conllu).
    #[arg(long)]
    pub donor: Vec<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Model(String),
    #[error("{0}")]
    Probe(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// Stable identifier for the error record.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Input(_) => "InputError",
            CliError::Eval(EvalError::EmptyInput) => "EmptyInput",
            CliError::Eval(_) => "EvalError",
            CliError::Model(_) => "ModelError",
            CliError::Probe(_) => "ProbeError",
            CliError::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<crate::lm::LmError> for CliError {
    fn from(e: crate::lm::LmError) -> Self {
        CliError::Model(e.to_string())
    }
}

impl From<crate::probing::ProbeError> for CliError {
    fn from(e: crate::probing::ProbeError) -> Self {
        CliError::Probe(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: BTreeMap<String, String>,
    inputs: Vec<FileEntry>,
    outputs: Vec<FileEntry>,
    elapsed_ms: u128,
    notes: Vec<String>,
}

/// Shared state of one invocation.
struct Run {
    cfg: RunConfig,
    seed: u64,
    out: PathBuf,
    mode: ParseMode,
    ensemble: Option<PathBuf>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    notes: Vec<String>,
}

fn sha256_file(path: &Path) -> String {
    match fs::read(path) {
        Ok(bytes) => hex::encode(Sha256::digest(&bytes)),
        Err(_) => String::new(),
    }
}

impl Run {
    fn default_path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn paths_or(&self, given: &[PathBuf], default: &str) -> Vec<PathBuf> {
        if given.is_empty() {
            vec![self.default_path(default)]
        } else {
            given.to_vec()
        }
    }

    fn corpus(&mut self, paths: &[PathBuf]) -> Result<Corpus> {
        for p in paths {
            if !p.exists() {
                return Err(CliError::Input(format!("{} does not exist", p.display())));
            }
        }
        let outcome = parse_files(paths, self.mode).map_err(|e| CliError::Input(e.to_string()))?;
        if !outcome.dropped.is_empty() {
            self.notes.push(format!("{} malformed sentences dropped", outcome.dropped.len()));
        }
        self.inputs.extend(paths.iter().cloned());
        Ok(outcome.corpus)
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        self.outputs.push(path.clone());
        Ok(BufWriter::new(File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?))
    }

    fn vocab(&mut self, given: &Option<PathBuf>) -> Result<Vocabulary> {
        let path = given.clone().unwrap_or_else(|| self.default_path("vocab.txt"));
        let file = File::open(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        self.inputs.push(path);
        Vocabulary::read(BufReader::new(file)).map_err(|e| CliError::Input(e.to_string()))
    }

    /// Checkpoints to evaluate: the ensemble directory's, or the single model.
    fn models(&mut self, given: &Option<PathBuf>, vocab: &Vocabulary) -> Result<Vec<(String, TransformerLM<f32>)>> {
        let paths = match &self.ensemble {
            Some(dir) => {
                let mut v: Vec<PathBuf> = fs::read_dir(dir)?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "ckpt"))
                    .collect();
                v.sort();
                if v.is_empty() {
                    return Err(CliError::Input(format!("no .ckpt files in {}", dir.display())));
                }
                v
            }
            None => vec![given.clone().unwrap_or_else(|| self.default_path("model.ckpt"))],
        };
        let mut out = Vec::new();
        for p in paths {
            let ck = load_checkpoint::<f32>(&p).map_err(|e| CliError::Model(format!("{}: {e}", p.display())))?;
            if ck.vocab_hash != vocab.content_hash() {
                return Err(CliError::Input(format!("{} was trained with a different vocabulary", p.display())));
            }
            let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            self.inputs.push(p);
            out.push((id, ck.model));
        }
        Ok(out)
    }

    fn lexicon(&mut self, eval_corpus: &Corpus, extra: &[PathBuf]) -> Result<MorphLexicon> {
        let extra = if extra.is_empty() {
            let d = self.default_path("synth.conllu");
            if d.exists() { vec![d] } else { vec![] }
        } else {
            extra.to_vec()
        };
        let mut lex = MorphLexicon::from_corpus(eval_corpus);
        if !extra.is_empty() {
            for s in &self.corpus(&extra)?.sentences {
                lex.add_sentence(s);
            }
        }
        Ok(lex)
    }

    /// Instances from a file or extracted from the corpus, profiled and
    /// marked scoreable against `lexicon`.
    fn instances(
        &mut self,
        given: &Option<PathBuf>,
        corpus: &Corpus,
        lexicon: &MorphLexicon,
        kind: Option<AgreementKind>,
    ) -> Result<Vec<AgreementInstance>> {
        let mut v = match given {
            Some(p) => {
                let file = File::open(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                self.inputs.push(p.clone());
                read_instances(BufReader::new(file))
                    .map_err(|e| CliError::Input(e.to_string()))?
                    .into_iter()
                    .map(|r| r.instance)
                    .collect()
            }
            None => extract_corpus(corpus, self.extract_options()),
        };
        if let Some(k) = kind {
            v.retain(|i| i.kind == k);
        }
        profile_all(&mut v, corpus, self.heuristic_options()).map_err(|e| CliError::Input(e.to_string()))?;
        mark_scoreable(&mut v, corpus, lexicon);
        Ok(v)
    }

    fn extract_options(&self) -> ExtractOptions {
        ExtractOptions { include_cue_in_context: self.cfg.include_cue_in_context }
    }

    fn heuristic_options(&self) -> HeuristicOptions {
        HeuristicOptions { adjacent_que: self.cfg.adjacent_que }
    }

    fn manifest(&mut self, command: &str, started: Instant) -> Result<()> {
        let entries = |paths: &[PathBuf]| {
            paths.iter().map(|p| FileEntry { path: p.display().to_string(), sha256: sha256_file(p) }).collect()
        };
        let m = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            config: self.cfg.to_map(),
            inputs: entries(&self.inputs),
            outputs: entries(&self.outputs),
            elapsed_ms: started.elapsed().as_millis(),
            notes: self.notes.clone(),
        };
        let path = self.out.join(format!("{command}.manifest.json"));
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &m).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    }
}

fn records_for(instances: &[AgreementInstance], corpus: &Corpus) -> Vec<InstanceRecord> {
    let index = corpus.index();
    instances
        .iter()
        .map(|i| InstanceRecord {
            instance: i.clone(),
            forms: index.get(i.sent_id.as_str()).map(|s| s.forms()).unwrap_or_default(),
        })
        .collect()
}

fn kinds_of(instances: &[AgreementInstance]) -> Vec<AgreementKind> {
    let mut k: Vec<AgreementKind> = instances.iter().map(|i| i.kind).collect();
    k.sort();
    k.dedup();
    k
}

fn of_kind(instances: &[AgreementInstance], kind: AgreementKind) -> Vec<AgreementInstance> {
    instances.iter().filter(|i| i.kind == kind).cloned().collect()
}

fn cmd_extract(run: &mut Run, a: &ExtractArgs) -> Result<()> {
    let corpus = run.corpus(&a.inputs)?;
    let lexicon = if a.lexicon.is_empty() {
        MorphLexicon::from_corpus(&corpus)
    } else {
        MorphLexicon::from_corpus(&run.corpus(&a.lexicon)?)
    };
    let instances = run.instances(&None, &corpus, &lexicon, None)?;
    let index = corpus.index();
    let sentences: Vec<_> = instances.iter().map(|i| index[i.sent_id.as_str()]).collect();
    write_instances(&mut run.create("instances.jsonl")?, &instances, &sentences)?;
    let mut w = csv::Writer::from_writer(run.create("extract_summary.csv")?);
    w.write_record(["kind", "instances", "scoreable", "with_attractor"])?;
    for k in kinds_of(&instances) {
        let v = of_kind(&instances, k);
        w.write_record([
            k.as_str().to_string(),
            v.len().to_string(),
            v.iter().filter(|i| i.scoreable).count().to_string(),
            v.iter().filter(|i| i.has_attractor()).count().to_string(),
        ])?;
    }
    w.flush()?;
    log::info!("{} instances from {} sentences", instances.len(), corpus.len());
    Ok(())
}

fn read_instance_file(run: &mut Run, given: &Option<PathBuf>) -> Result<Vec<InstanceRecord>> {
    let path = given.clone().unwrap_or_else(|| run.default_path("instances.jsonl"));
    let file = File::open(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    run.inputs.push(path);
    read_instances(BufReader::new(file)).map_err(|e| CliError::Input(e.to_string()))
}

fn cmd_stratify(run: &mut Run, a: &InstancesArgs) -> Result<()> {
    let records = read_instance_file(run, &a.instances)?;
    let instances: Vec<AgreementInstance> = records.iter().map(|r| r.instance.clone()).collect();
    let buckets = stratify(&instances).map_err(|e| CliError::Input(e.to_string()))?;
    let mut w = csv::Writer::from_writer(run.create("stratify.csv")?);
    w.write_record(["bucket", "kind", "n"])?;
    for (b, members) in &buckets {
        let recs: Vec<InstanceRecord> = records
            .iter()
            .filter(|r| r.instance.difficulty_bucket() == Some(*b))
            .cloned()
            .collect();
        write_instance_records(&mut run.create(&format!("buckets/bucket_{b}.jsonl"))?, &recs)?;
        for k in [AgreementKind::ObjPp, AgreementKind::SubjVerb] {
            w.write_record([b.to_string(), k.as_str().into(), members.iter().filter(|i| i.kind == k).count().to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_heuristics(run: &mut Run, a: &InstancesArgs) -> Result<()> {
    let records = read_instance_file(run, &a.instances)?;
    let instances: Vec<AgreementInstance> = records.into_iter().map(|r| r.instance).collect();
    if instances.is_empty() {
        return Err(EvalError::EmptyInput.into());
    }
    let mut w = csv::Writer::from_writer(run.create("heuristics.csv")?);
    w.write_record(["kind", "heuristic", "name", "n", "accuracy"])?;
    for k in kinds_of(&instances) {
        let v = of_kind(&instances, k);
        let acc = heuristic_accuracy(&v).map_err(|e| CliError::Input(e.to_string()))?;
        for h in Heuristic::ALL {
            w.write_record([
                k.as_str().to_string(),
                h.id().to_string(),
                h.name().to_string(),
                v.len().to_string(),
                format!("{:.6}", acc[&h]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_synth(run: &mut Run) -> Result<()> {
    let train = generate_synthetic_corpus(&run.cfg.synth);
    let mut held_cfg = run.cfg.synth.clone();
    held_cfg.sentences = run.cfg.heldout_sentences;
    held_cfg.seed = run.cfg.heldout_seed();
    let held = generate_synthetic_corpus(&held_cfg);
    let mut held_corpus = held.corpus.clone();
    for s in &mut held_corpus.sentences {
        s.sent_id = format!("heldout-{}", s.sent_id);
    }
    serialize_conllu(&mut run.create("synth.conllu")?, &train.corpus)?;
    serialize_conllu(&mut run.create("heldout.conllu")?, &held_corpus)?;
    let mut held_gold = held.gold.clone();
    for g in &mut held_gold {
        g.sent_id = format!("heldout-{}", g.sent_id);
    }
    write_instance_records(&mut run.create("synth_gold.jsonl")?, &records_for(&train.gold, &train.corpus))?;
    write_instance_records(&mut run.create("heldout_gold.jsonl")?, &records_for(&held_gold, &held_corpus))?;
    log::info!(
        "{} training sentences ({} tokens), {} held-out",
        train.corpus.len(),
        train.corpus.token_count(),
        held_corpus.len()
    );
    Ok(())
}

fn cmd_train(run: &mut Run, a: &TrainArgs) -> Result<()> {
    let corpus_paths = run.paths_or(&a.corpus, "synth.conllu");
    let corpus = run.corpus(&corpus_paths)?;
    let valid_paths = if a.valid.is_empty() {
        let d = run.default_path("heldout.conllu");
        if d.exists() { vec![d] } else { vec![] }
    } else {
        a.valid.clone()
    };
    let valid = if valid_paths.is_empty() { None } else { Some(run.corpus(&valid_paths)?) };
    let vocab = build_vocab(&corpus, run.cfg.min_freq, VocabOptions { lowercase: run.cfg.lowercase })
        .map_err(|e| CliError::Input(e.to_string()))?;
    let mut mcfg = run.cfg.model.clone();
    mcfg.vocab_size = vocab.len();
    let longest = corpus.sentences.iter().map(|s| s.len() + 2).max().unwrap_or(0);
    if longest > mcfg.max_len {
        return Err(CliError::Input(format!("longest sentence needs {longest} positions, max_len is {}", mcfg.max_len)));
    }
    let mut model = TransformerLM::<f32>::init(mcfg)?;
    let data = encode_corpus(&corpus, &vocab);
    let valid_data = valid.as_ref().map(|v| {
        encode_corpus(v, &vocab).into_iter().filter(|s| s.len() <= model.config.max_len + 1).collect::<Vec<_>>()
    });
    let curve = train_with_callback(&mut model, &data, valid_data.as_deref(), &run.cfg.train, |e| {
        eprintln!("epoch {} lr {:.5} loss {:.4}", e.epoch, e.lr, e.train_loss);
    })?;
    vocab.write(&mut run.create("vocab.txt")?)?;
    let ckpt = run.out.join("model.ckpt");
    save_checkpoint(&ckpt, &model, &vocab.content_hash())?;
    run.outputs.push(ckpt);
    curve.write_csv(run.create("loss.csv")?)?;
    Ok(())
}

fn cmd_ppl(run: &mut Run, a: &ModelArgs) -> Result<()> {
    let paths = run.paths_or(&a.corpus, "heldout.conllu");
    let corpus = run.corpus(&paths)?;
    let vocab = run.vocab(&a.vocab)?;
    let models = run.models(&a.model, &vocab)?;
    let data = encode_corpus(&corpus, &vocab);
    let mut w = csv::Writer::from_writer(run.create("ppl.csv")?);
    w.write_record(["model", "sentences", "tokens", "perplexity"])?;
    for (id, m) in &models {
        let kept: Vec<Vec<u32>> = data.iter().filter(|s| s.len() <= m.config.max_len + 1).cloned().collect();
        if kept.len() < data.len() {
            run.notes.push(format!("{} sentences longer than max_len skipped", data.len() - kept.len()));
        }
        let ppl = perplexity(m, &kept)?;
        let tokens: usize = kept.iter().map(|s| s.len() - 1).sum();
        w.write_record([id.clone(), kept.len().to_string(), tokens.to_string(), format!("{ppl:.6}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Evaluation inputs shared by eval, intervene, probes and nonce.
struct EvalInputs {
    corpus: Corpus,
    vocab: Vocabulary,
    lexicon: MorphLexicon,
    models: Vec<(String, TransformerLM<f32>)>,
    instances: Vec<AgreementInstance>,
}

fn eval_inputs(run: &mut Run, a: &EvalArgs) -> Result<EvalInputs> {
    let paths = run.paths_or(&a.model.corpus, "heldout.conllu");
    let corpus = run.corpus(&paths)?;
    let vocab = run.vocab(&a.model.vocab)?;
    let models = run.models(&a.model.model, &vocab)?;
    let lexicon = run.lexicon(&corpus, &a.lexicon)?;
    let instances = run.instances(&a.instances, &corpus, &lexicon, a.kind)?;
    if instances.is_empty() {
        return Err(EvalError::EmptyInput.into());
    }
    Ok(EvalInputs { corpus, vocab, lexicon, models, instances })
}

/// Per-model reports, followed by their average when there are several.
fn with_average(mut reports: Vec<EvalReport>, n_models: usize) -> Vec<EvalReport> {
    if n_models > 1 {
        let per = reports.len() / n_models;
        let mut avg = Vec::new();
        for j in 0..per {
            let group: Vec<EvalReport> = (0..n_models).map(|m| reports[m * per + j].clone()).collect();
            avg.extend(EvalReport::average(&group, "ensemble_mean"));
        }
        reports.extend(avg);
    }
    reports
}

fn cmd_eval(run: &mut Run, a: &EvalArgs) -> Result<()> {
    let inp = eval_inputs(run, a)?;
    let mut reports = Vec::new();
    let mut outcomes = Vec::new();
    for (id, model) in &inp.models {
        for k in kinds_of(&inp.instances) {
            let e = na_accuracy(model, &inp.vocab, &inp.lexicon, &of_kind(&inp.instances, k), &inp.corpus, id)?;
            reports.push(e.report);
            outcomes.extend(e.outcomes);
        }
    }
    let reports = with_average(reports, inp.models.len());
    write_report_csv(&reports, run.create("eval_report.csv")?)?;
    write_outcomes(&outcomes, run.create("eval_outcomes.csv")?)?;
    for r in &reports {
        for (reason, n) in &r.skipped {
            run.notes.push(format!("{} {}: {n} skipped ({})", r.model_id, r.task, reason.as_str()));
        }
    }
    Ok(())
}

fn cmd_intervene(run: &mut Run, a: &InterveneArgs) -> Result<()> {
    let inp = eval_inputs(run, &a.eval)?;
    let conditions = if a.conditions.is_empty() { MaskCondition::ALL.to_vec() } else { a.conditions.clone() };
    if !a.layers.is_empty() {
        run.notes.push(format!("masking restricted to layers {:?}", a.layers));
    }
    let scope = if a.layers.is_empty() { LayerScope::All } else { LayerScope::Layers(a.layers.iter().copied().collect()) };
    let mut reports = Vec::new();
    for (id, model) in &inp.models {
        for k in kinds_of(&inp.instances) {
            reports.extend(intervention_report_with_scope(
                model,
                &inp.vocab,
                &inp.lexicon,
                &of_kind(&inp.instances, k),
                &inp.corpus,
                &conditions,
                id,
                &scope,
            )?);
        }
    }
    let reports = with_average(reports, inp.models.len());
    write_intervention_csv(&reports, run.create("intervention.csv")?)?;
    write_report_csv(&reports, run.create("intervention_report.csv")?)?;
    Ok(())
}

fn cmd_probe_regions(run: &mut Run, a: &EvalArgs) -> Result<()> {
    let inp = eval_inputs(run, a)?;
    let (id, model) = &inp.models[0];
    let mut w = csv::Writer::from_writer(run.create("probe_regions.csv")?);
    w.write_record(["kind", "cell", "n_train", "n_test", "accuracy", "seed", "control_accuracy", "chance"])?;
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
    for k in kinds_of(&inp.instances) {
        let records = extract_representations(model, &inp.vocab, &of_kind(&inp.instances, k), &inp.corpus)?;
        write_records(run.create(&format!("representations_{}.bin", k.as_str()))?, &records)
            .map_err(|e| CliError::Io(e.to_string()))?;
        let mut pcfg = run.cfg.positional.probe.clone();
        pcfg.split_seed = derive_seed(pcfg.split_seed, salt_of(k.as_str()));
        let result = region_probe_suite(&records, &pcfg)?;
        for c in &result.cells {
            w.write_record([
                k.as_str().to_string(),
                c.cell.clone(),
                c.n_train.to_string(),
                c.n_test.to_string(),
                format!("{:.6}", c.accuracy),
                c.seed.to_string(),
                opt(c.control_accuracy),
                opt(c.chance),
            ])?;
        }
        for m in &result.region_means {
            w.write_record([
                k.as_str().to_string(),
                format!("mean/{}", m.region),
                String::new(),
                String::new(),
                format!("{:.6}", m.mean),
                String::new(),
                String::new(),
                format!("{:.6}", m.weighted_mean),
            ])?;
        }
        for (cell, why) in &result.skipped {
            run.notes.push(format!("{} {cell}: {why}", k.as_str()));
        }
    }
    w.flush()?;
    if inp.models.len() > 1 {
        run.notes.push(format!("probes use the first checkpoint only ({id})"));
    }
    Ok(())
}

fn cmd_probe_positions(run: &mut Run, a: &EvalArgs) -> Result<()> {
    let inp = eval_inputs(run, a)?;
    let (_, model) = &inp.models[0];
    let cfg = run.cfg.positional.clone();
    let mut w = csv::Writer::from_writer(run.create("probe_positions.csv")?);
    w.write_record(["kind", "cell", "n_train", "n_test", "accuracy", "seed", "split", "control_accuracy"])?;
    let mut s = csv::Writer::from_writer(run.create("probe_positions_mean.csv")?);
    s.write_record(["kind", "cell", "accuracy", "runs"])?;
    for k in kinds_of(&inp.instances) {
        let items = pattern_items(model, &inp.vocab, &of_kind(&inp.instances, k), &inp.corpus, cfg.window)?;
        let result = match positional_probe_suite(&items, &cfg) {
            Ok(r) => r,
            Err(crate::probing::ProbeError::InsufficientData(why)) => {
                run.notes.push(format!("{}: {why}", k.as_str()));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        run.notes.extend(result.warnings.iter().map(|x| format!("{}: {x}", k.as_str())));
        for c in &result.cells {
            w.write_record([
                k.as_str().to_string(),
                c.cell.clone(),
                c.n_train.to_string(),
                c.n_test.to_string(),
                format!("{:.6}", c.accuracy),
                c.seed.to_string(),
                c.split.to_string(),
                c.control_accuracy.map(|v| format!("{v:.6}")).unwrap_or_default(),
            ])?;
        }
        for (cell, acc, runs) in average_cells(&result) {
            s.write_record([k.as_str().to_string(), cell, format!("{acc:.6}"), runs.to_string()])?;
        }
    }
    w.flush()?;
    s.flush()?;
    Ok(())
}

fn cmd_nonce(run: &mut Run, a: &NonceArgs) -> Result<()> {
    let inp = eval_inputs(run, &a.eval)?;
    let donor_paths = run.paths_or(&a.donor, "synth.conllu");
    let donor = MorphLexicon::from_corpus(&run.corpus(&donor_paths)?);
    let mut originals: Vec<AgreementInstance> = inp.instances.iter().filter(|i| i.scoreable).cloned().collect();
    if let Some(n) = a.limit {
        originals.truncate(n);
    }
    if originals.is_empty() {
        return Err(EvalError::EmptyInput.into());
    }
    let index = inp.corpus.index();
    let mut items = Vec::new();
    let mut nonce_corpus = Corpus::new("nonce");
    let mut gaps = 0usize;
    for inst in &originals {
        let s = index[inst.sent_id.as_str()];
        let seed = derive_seed(run.seed, salt_of(&format!("{}#{}", inst.sent_id, inst.target_index)));
        let variants = generate_nonce(inst, s, &donor, seed).map_err(|e| CliError::Input(e.to_string()))?;
        for v in variants {
            gaps += v.lexicon_gaps;
            let mut vi = inst.clone();
            vi.sent_id = v.sentence.sent_id.clone();
            let mut sentence = v.sentence.clone();
            sentence.sent_id = format!("{}#{}", sentence.sent_id, inst.target_index);
            vi.sent_id = sentence.sent_id.clone();
            nonce_corpus.sentences.push(sentence.clone());
            items.push(NonceItem { instance: vi, sentence, target_gap: v.target_gap });
        }
    }
    let mut lexicon = inp.lexicon.clone();
    for it in &items {
        lexicon.add_sentence(&it.sentence);
    }
    for s in &nonce_corpus.sentences {
        lexicon.add_sentence(s);
    }
    serialize_conllu(&mut run.create("nonce.conllu")?, &nonce_corpus)?;
    let mut reports = Vec::new();
    let mut deltas = csv::Writer::from_writer(run.create("nonce_delta.csv")?);
    deltas.write_record([
        "model",
        "kind",
        "bucket",
        "original",
        "nonce",
        "original_singular",
        "nonce_singular",
        "original_plural",
        "nonce_plural",
    ])?;
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
    for (id, model) in &inp.models {
        for k in kinds_of(&originals) {
            let orig = of_kind(&originals, k);
            let var: Vec<NonceItem> = items.iter().filter(|i| i.instance.kind == k).cloned().collect();
            let e = nonce_evaluation(model, &inp.vocab, &lexicon, &orig, &inp.corpus, &var, id)?;
            for d in &e.deltas {
                deltas.write_record([
                    id.clone(),
                    k.as_str().to_string(),
                    d.bucket.clone(),
                    opt(d.original),
                    opt(d.nonce),
                    opt(d.original_singular),
                    opt(d.nonce_singular),
                    opt(d.original_plural),
                    opt(d.nonce_plural),
                ])?;
            }
            reports.push(e.original.report);
            reports.push(e.nonce.report);
        }
    }
    deltas.flush()?;
    write_report_csv(&reports, run.create("nonce_report.csv")?)?;
    run.notes.push(format!(
        "{} originals, {} variants ({} per original), {gaps} word-level lexicon gaps",
        originals.len(),
        items.len(),
        NONCE_VARIANTS
    ));
    Ok(())
}

fn cmd_compliance(run: &mut Run, a: &CorpusArgs) -> Result<()> {
    let paths = run.paths_or(&a.corpus, "synth.conllu");
    let corpus = run.corpus(&paths)?;
    let lexicon = MorphLexicon::from_corpus(&corpus);
    let r = compliance_report(&corpus, &lexicon);
    let mut w = csv::Writer::from_writer(run.create("compliance.csv")?);
    w.write_record(["sentences", "sentences_with_instance", "instances", "compliant", "unmarked", "without_variant", "fraction"])?;
    w.write_record([
        r.sentences.to_string(),
        r.sentences_with_instance.to_string(),
        r.instances.to_string(),
        r.compliant.to_string(),
        r.unmarked.to_string(),
        r.without_variant.to_string(),
        r.fraction.map(|f| format!("{f:.6}")).unwrap_or_default(),
    ])?;
    w.flush()?;
    Ok(())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Extract(_) => "extract",
        Command::Stratify(_) => "stratify",
        Command::Heuristics(_) => "heuristics",
        Command::Synth => "synth",
        Command::Train(_) => "train",
        Command::Ppl(_) => "ppl",
        Command::Eval(_) => "eval",
        Command::Intervene(_) => "intervene",
        Command::ProbeRegions(_) => "probe-regions",
        Command::ProbePositions(_) => "probe-positions",
        Command::Nonce(_) => "nonce",
        Command::Compliance(_) => "compliance",
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_seed(cli.seed);
    fs::create_dir_all(&cli.out)?;
    let mut run = Run {
        cfg,
        seed: cli.seed,
        out: cli.out.clone(),
        mode: if cli.strict { ParseMode::Strict } else { ParseMode::Lenient },
        ensemble: cli.ensemble.clone(),
        inputs: Vec::new(),
        outputs: Vec::new(),
        notes: Vec::new(),
    };
    if let Some(p) = &cli.config {
        run.inputs.push(p.clone());
    }
    let started = Instant::now();
    match &cli.command {
        Command::Extract(a) => cmd_extract(&mut run, a)?,
        Command::Stratify(a) => cmd_stratify(&mut run, a)?,
        Command::Heuristics(a) => cmd_heuristics(&mut run, a)?,
        Command::Synth => cmd_synth(&mut run)?,
        Command::Train(a) => cmd_train(&mut run, a)?,
        Command::Ppl(a) => cmd_ppl(&mut run, a)?,
        Command::Eval(a) => cmd_eval(&mut run, a)?,
        Command::Intervene(a) => cmd_intervene(&mut run, a)?,
        Command::ProbeRegions(a) => cmd_probe_regions(&mut run, a)?,
        Command::ProbePositions(a) => cmd_probe_positions(&mut run, a)?,
        Command::Nonce(a) => cmd_nonce(&mut run, a)?,
        Command::Compliance(a) => cmd_compliance(&mut run, a)?,
    }
    run.manifest(command_name(&cli.command), started)
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    command: &'a str,
    error: &'a str,
    message: String,
}

/// Parses `args` and runs the subcommand; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let record = ErrorRecord { command: command_name(&cli.command), error: e.kind(), message: e.to_string() };
            let json = serde_json::to_string(&record).unwrap_or_default();
            eprintln!("{json}");
            if fs::create_dir_all(&cli.out).is_ok() {
                let _ = fs::write(cli.out.join("error.json"), format!("{json}\n"));
            }
            1
        }
    }
}
