//! Number-agreement scoring and report aggregation.
//!
//! An instance is scored by feeding every token before the target and
//! comparing the log-probability of the form agreeing with the cue against
//! its opposite-number counterpart.

pub mod cli;
mod config;
mod report;
pub use config::{ConfigError, RunConfig};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use report::{write_outcomes, write_report_csv, EvalReport, ReportRow, REPORT_HEADER};

use crate::conllu::{Vocabulary, UNK};
use crate::conllu::{Corpus, Number, Sentence};
use crate::extraction::{extract_obj_pp, AgreementInstance, AgreementKind, MorphLexicon};
use crate::intervention::MaskSpec;
use crate::lm::{LmError, Scalar, TransformerLM};

/// Why an instance contributes to no accuracy denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    NotScoreable,
    NoVariantAttested,
    TargetOutOfVocab,
    VariantOutOfVocab,
    MissingSentence,
    Unprofiled,
    SequenceTooLong,
    EmptyMask,
    LexiconGap,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::NotScoreable => "not_scoreable",
            SkipReason::NoVariantAttested => "no_variant_attested",
            SkipReason::TargetOutOfVocab => "target_out_of_vocab",
            SkipReason::VariantOutOfVocab => "variant_out_of_vocab",
            SkipReason::MissingSentence => "missing_sentence",
            SkipReason::Unprofiled => "unprofiled",
            SkipReason::SequenceTooLong => "sequence_too_long",
            SkipReason::EmptyMask => "empty_mask",
            SkipReason::LexiconGap => "lexicon_gap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("no instances to evaluate")]
    EmptyInput,
    #[error("instance skipped: {}", .0.as_str())]
    Skipped(SkipReason),
    #[error(transparent)]
    Model(#[from] LmError),
}

/// One scored instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub sent_id: String,
    pub kind: AgreementKind,
    pub target_index: usize,
    pub bucket: usize,
    pub number: Number,
    pub correct_form: String,
    pub wrong_form: String,
    pub logprob_correct: f64,
    pub logprob_wrong: f64,
    /// The agreeing form scored strictly higher.
    pub correct: bool,
}

impl InstanceOutcome {
    pub fn key(&self) -> (String, AgreementKind, usize) {
        (self.sent_id.clone(), self.kind, self.target_index)
    }
}

/// Agreeing and non-agreeing target forms. The agreeing form carries the
/// cue's number; when the attested target violates agreement the roles swap.
pub fn target_pair(
    lexicon: &MorphLexicon,
    instance: &AgreementInstance,
    sentence: &Sentence,
) -> Result<(String, String), SkipReason> {
    let target = sentence.get(instance.target_index).ok_or(SkipReason::MissingSentence)?;
    let variant = lexicon.variant_form(target).map_err(|_| SkipReason::NoVariantAttested)?;
    if target.number() == Some(instance.target_number) {
        Ok((target.form.clone(), variant))
    } else {
        Ok((variant, target.form.clone()))
    }
}

/// Scores one instance, optionally under an attention mask.
pub fn score_instance<F: Scalar>(
    model: &TransformerLM<F>,
    vocab: &Vocabulary,
    lexicon: &MorphLexicon,
    instance: &AgreementInstance,
    sentence: &Sentence,
    mask: Option<&MaskSpec>,
) -> Result<InstanceOutcome, EvalError> {
    let skip = |r| EvalError::Skipped(r);
    if !instance.scoreable {
        return Err(skip(SkipReason::NotScoreable));
    }
    let bucket = instance.difficulty_bucket().ok_or(skip(SkipReason::Unprofiled))?;
    let (good, bad) = target_pair(lexicon, instance, sentence).map_err(skip)?;
    let (g, b) = (vocab.encode(&good), vocab.encode(&bad));
    if g == UNK {
        return Err(skip(SkipReason::TargetOutOfVocab));
    }
    if b == UNK || b == g {
        return Err(skip(SkipReason::VariantOutOfVocab));
    }
    if instance.target_index > model.config.max_len {
        return Err(skip(SkipReason::SequenceTooLong));
    }
    let prefix: Vec<u32> = vocab
        .encode_with_bos(sentence.tokens[..instance.target_index - 1].iter().map(|t| t.form.as_str()))
        .into_iter()
        .map(|i| i as u32)
        .collect();
    let scores = model.score_candidates(&prefix, &[g as u32, b as u32], mask)?;
    let (lc, lw) = (scores[0].to_f64().expect("finite"), scores[1].to_f64().expect("finite"));
    Ok(InstanceOutcome {
        sent_id: instance.sent_id.clone(),
        kind: instance.kind,
        target_index: instance.target_index,
        bucket,
        number: instance.target_number,
        correct_form: good,
        wrong_form: bad,
        logprob_correct: lc,
        logprob_wrong: lw,
        correct: lc > lw,
    })
}

/// `obj_pp`, `subj_verb`, or `mixed`.
pub fn task_label(instances: &[AgreementInstance]) -> String {
    let mut kinds = instances.iter().map(|i| i.kind);
    match kinds.next() {
        Some(k) if kinds.all(|o| o == k) => k.as_str().to_string(),
        Some(_) => "mixed".to_string(),
        None => "empty".to_string(),
    }
}

/// A report together with the per-instance outcomes it aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub outcomes: Vec<InstanceOutcome>,
}

fn evaluate_pairs<'a, F: Scalar>(
    model: &TransformerLM<F>,
    vocab: &Vocabulary,
    lexicon: &MorphLexicon,
    pairs: impl Iterator<Item = (&'a AgreementInstance, Option<&'a Sentence>)>,
    task: &str,
    model_id: &str,
    condition: &str,
) -> Result<Evaluation, EvalError> {
    let mut outcomes = Vec::new();
    let mut skipped = BTreeMap::new();
    for (inst, sentence) in pairs {
        let Some(sentence) = sentence else {
            *skipped.entry(SkipReason::MissingSentence).or_default() += 1;
            continue;
        };
        match score_instance(model, vocab, lexicon, inst, sentence, None) {
            Ok(o) => outcomes.push(o),
            Err(EvalError::Skipped(r)) => *skipped.entry(r).or_default() += 1,
            Err(e) => return Err(e),
        }
    }
    let report = EvalReport::from_outcomes(task, model_id, condition, &outcomes, skipped);
    Ok(Evaluation { report, outcomes })
}

/// Baseline agreement accuracy by difficulty bucket and target number.
pub fn na_accuracy<F: Scalar>(
    model: &TransformerLM<F>,
    vocab: &Vocabulary,
    lexicon: &MorphLexicon,
    instances: &[AgreementInstance],
    corpus: &Corpus,
    model_id: &str,
) -> Result<Evaluation, EvalError> {
    if instances.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let index = corpus.index();
    let pairs = instances.iter().map(|i| (i, index.get(i.sent_id.as_str()).copied()));
    evaluate_pairs(model, vocab, lexicon, pairs, &task_label(instances), model_id, "baseline")
}

/// A nonce sentence and the instance re-anchored on it.
#[derive(Debug, Clone, PartialEq)]
pub struct NonceItem {
    pub instance: AgreementInstance,
    pub sentence: Sentence,
    /// The target had no substitute and kept its original form.
    pub target_gap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonceDelta {
    pub bucket: String,
    pub original: Option<f64>,
    pub nonce: Option<f64>,
    pub original_singular: Option<f64>,
    pub nonce_singular: Option<f64>,
    pub original_plural: Option<f64>,
    pub nonce_plural: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonceEvaluation {
    pub original: Evaluation,
    pub nonce: Evaluation,
    pub deltas: Vec<NonceDelta>,
}

/// Scores originals and their nonce variants. Variants whose target kept
/// its original form for lack of a substitute are skipped as lexicon gaps.
pub fn nonce_evaluation<F: Scalar>(
    model: &TransformerLM<F>,
    vocab: &Vocabulary,
    lexicon: &MorphLexicon,
    originals: &[AgreementInstance],
    corpus: &Corpus,
    variants: &[NonceItem],
    model_id: &str,
) -> Result<NonceEvaluation, EvalError> {
    let original = na_accuracy(model, vocab, lexicon, originals, corpus, model_id)?;
    let task = task_label(originals);
    let mut gaps = 0;
    let kept: Vec<&NonceItem> = variants
        .iter()
        .filter(|v| {
            gaps += v.target_gap as usize;
            !v.target_gap
        })
        .collect();
    let pairs = kept.iter().map(|v| (&v.instance, Some(&v.sentence)));
    let mut nonce = evaluate_pairs(model, vocab, lexicon, pairs, &task, model_id, "nonce")?;
    if gaps > 0 {
        *nonce.report.skipped.entry(SkipReason::LexiconGap).or_default() += gaps;
    }
    let deltas = original
        .report
        .rows
        .iter()
        .zip(&nonce.report.rows)
        .map(|(o, n)| NonceDelta {
            bucket: o.bucket.clone(),
            original: o.accuracy,
            nonce: n.accuracy,
            original_singular: o.accuracy_singular,
            nonce_singular: n.accuracy_singular,
            original_plural: o.accuracy_plural,
            nonce_plural: n.accuracy_plural,
        })
        .collect();
    Ok(NonceEvaluation { original, nonce, deltas })
}

/// Agreement compliance of attested obj_pp participles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub sentences: usize,
    pub sentences_with_instance: usize,
    pub instances: usize,
    pub compliant: usize,
    /// Participles bearing no Number feature; counted as non-compliant.
    pub unmarked: usize,
    pub fraction: Option<f64>,
    /// Instances whose participle has no attested opposite-number form.
    pub without_variant: usize,
}

pub fn compliance_report(corpus: &Corpus, lexicon: &MorphLexicon) -> ComplianceReport {
    let mut r = ComplianceReport {
        sentences: corpus.len(),
        sentences_with_instance: 0,
        instances: 0,
        compliant: 0,
        unmarked: 0,
        fraction: None,
        without_variant: 0,
    };
    for s in &corpus.sentences {
        let found = extract_obj_pp(s);
        if !found.is_empty() {
            r.sentences_with_instance += 1;
        }
        for inst in found {
            r.instances += 1;
            let target = s.token(inst.target_index);
            match target.number() {
                Some(n) if n == inst.target_number => r.compliant += 1,
                Some(_) => {}
                None => r.unmarked += 1,
            }
            if lexicon.variant_form(target).is_err() {
                r.without_variant += 1;
            }
        }
    }
    r.fraction = (r.instances > 0).then(|| r.compliant as f64 / r.instances as f64);
    r
}
