//! Attention-masking interventions at the target-prediction step.
//!
//! A [`MaskSpec`] hides a set of key positions from one query position: the
//! position whose logits predict the target. Every other position, and so
//! every earlier prediction, is computed exactly as in an unmasked run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conllu::{Corpus, Number, Sentence};
use crate::conllu::Vocabulary;
use crate::eval::{score_instance, EvalError, EvalReport, InstanceOutcome, SkipReason};
use crate::extraction::{AgreementInstance, MorphLexicon};
use crate::lm::{Scalar, TransformerLM};

/// Which layers the mask applies to. Every head of a covered layer is masked.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerScope {
    #[default]
    All,
    /// 0-based layer indices.
    Layers(BTreeSet<usize>),
}

/// Keys hidden from one query position, in model coordinates (position 0 is
/// the sentence marker, so sentence token `k` sits at position `k`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub query_position: usize,
    pub masked_key_positions: BTreeSet<usize>,
    pub scope: LayerScope,
}

impl MaskSpec {
    /// Drops the sentence marker and any key at or after the query.
    pub fn new(query_position: usize, keys: impl IntoIterator<Item = usize>) -> Self {
        let masked_key_positions = keys.into_iter().filter(|&k| k > 0 && k < query_position).collect();
        MaskSpec { query_position, masked_key_positions, scope: LayerScope::All }
    }

    pub fn with_scope(mut self, scope: LayerScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.masked_key_positions.is_empty()
    }

    pub fn applies_to_layer(&self, layer: usize) -> bool {
        match &self.scope {
            LayerScope::All => true,
            LayerScope::Layers(set) => set.contains(&layer),
        }
    }

    /// Whether attention from `query` to `key` is suppressed in `layer`.
    pub fn hides(&self, layer: usize, query: usize, key: usize) -> bool {
        query == self.query_position && self.applies_to_layer(layer) && self.masked_key_positions.contains(&key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskCondition {
    MaskCue,
    MaskQue,
    MaskCuePlusQue,
    MaskContextExceptCueQue,
}

impl MaskCondition {
    pub const ALL: [MaskCondition; 4] = [
        MaskCondition::MaskContextExceptCueQue,
        MaskCondition::MaskCue,
        MaskCondition::MaskQue,
        MaskCondition::MaskCuePlusQue,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MaskCondition::MaskCue => "mask_cue",
            MaskCondition::MaskQue => "mask_que",
            MaskCondition::MaskCuePlusQue => "mask_cue_plus_que",
            MaskCondition::MaskContextExceptCueQue => "mask_context_except_cue_que",
        }
    }
}

impl fmt::Display for MaskCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskCondition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        MaskCondition::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown condition {s:?} (expected one of mask_cue, mask_que, mask_cue_plus_que, mask_context_except_cue_que)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InterventionError {
    #[error("{condition} masks nothing for {sent_id} (target {target})")]
    EmptyMask { condition: MaskCondition, sent_id: String, target: usize },
}

fn cue_group(instance: &AgreementInstance) -> BTreeSet<usize> {
    std::iter::once(instance.cue_index).chain(instance.cue_dependent_indices.iter().copied()).collect()
}

/// Mask for `condition` on `instance`, querying from the position that
/// predicts the target.
pub fn build_mask_spec(instance: &AgreementInstance, condition: MaskCondition) -> Result<MaskSpec, InterventionError> {
    let cue = cue_group(instance);
    let keys: BTreeSet<usize> = match condition {
        MaskCondition::MaskCue => cue,
        MaskCondition::MaskQue => [instance.que_index].into(),
        MaskCondition::MaskCuePlusQue => cue.into_iter().chain([instance.que_index]).collect(),
        MaskCondition::MaskContextExceptCueQue => {
            instance.context_span.ids().filter(|i| !cue.contains(i) && *i != instance.que_index).collect()
        }
    };
    let spec = MaskSpec::new(instance.target_index - 1, keys);
    if spec.is_empty() {
        return Err(InterventionError::EmptyMask {
            condition,
            sent_id: instance.sent_id.clone(),
            target: instance.target_index,
        });
    }
    Ok(spec)
}

/// Log-probabilities of the attested target and its opposite-number form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskedScore {
    pub logprob_correct: f64,
    pub logprob_wrong: f64,
    pub predicted_number: Number,
}

/// Scores `instance` under `condition` (or unmasked when `None`).
pub fn masked_score<F: Scalar>(
    model: &TransformerLM<F>,
    vocab: &Vocabulary,
    lexicon: &MorphLexicon,
    instance: &AgreementInstance,
    sentence: &Sentence,
    condition: Option<MaskCondition>,
) -> Result<MaskedScore, EvalError> {
    let mask = condition.map(|c| build_mask_spec(instance, c)).transpose().map_err(|e| match e {
        InterventionError::EmptyMask { .. } => EvalError::Skipped(SkipReason::EmptyMask),
    })?;
    let outcome = score_instance(model, vocab, lexicon, instance, sentence, mask.as_ref())?;
    Ok(MaskedScore {
        logprob_correct: outcome.logprob_correct,
        logprob_wrong: outcome.logprob_wrong,
        predicted_number: if outcome.correct { instance.target_number } else { instance.target_number.opposite() },
    })
}

pub const BASELINE: &str = "baseline";

/// Baseline report followed by one report per condition. Instances whose
/// mask resolves to nothing are skipped for that condition and counted.
pub fn intervention_report<F: Scalar>(
    model: &TransformerLM<F>,
    vocab: &Vocabulary,
    lexicon: &MorphLexicon,
    instances: &[AgreementInstance],
    corpus: &Corpus,
    conditions: &[MaskCondition],
    model_id: &str,
) -> Result<Vec<EvalReport>, EvalError> {
    intervention_report_with_scope(model, vocab, lexicon, instances, corpus, conditions, model_id, &LayerScope::All)
}

/// As [`intervention_report`], masking only in the layers of `scope`.
#[allow(clippy::too_many_arguments)]
pub fn intervention_report_with_scope<F: Scalar>(
    model: &TransformerLM<F>,
    vocab: &Vocabulary,
    lexicon: &MorphLexicon,
    instances: &[AgreementInstance],
    corpus: &Corpus,
    conditions: &[MaskCondition],
    model_id: &str,
    scope: &LayerScope,
) -> Result<Vec<EvalReport>, EvalError> {
    if instances.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let index = corpus.index();
    let task = crate::eval::task_label(instances);
    let run = |condition: Option<MaskCondition>| {
        let mut outcomes = Vec::new();
        let mut skipped: BTreeMap<SkipReason, usize> = BTreeMap::new();
        for inst in instances {
            let Some(sentence) = index.get(inst.sent_id.as_str()) else {
                *skipped.entry(SkipReason::MissingSentence).or_default() += 1;
                continue;
            };
            let mask = match condition.map(|c| build_mask_spec(inst, c).map(|m| m.with_scope(scope.clone()))).transpose() {
                Ok(m) => m,
                Err(_) => {
                    *skipped.entry(SkipReason::EmptyMask).or_default() += 1;
                    continue;
                }
            };
            match score_instance(model, vocab, lexicon, inst, sentence, mask.as_ref()) {
                Ok(o) => outcomes.push(o),
                Err(EvalError::Skipped(r)) => *skipped.entry(r).or_default() += 1,
                Err(e) => return Err(e),
            }
        }
        let cond = condition.map(|c| c.as_str()).unwrap_or(BASELINE);
        Ok(EvalReport::from_outcomes(&task, model_id, cond, &outcomes, skipped))
    };
    let mut reports = vec![run(None)?];
    for &c in conditions {
        reports.push(run(Some(c))?);
    }
    Ok(reports)
}

/// Long-format CSV: `condition,bucket,number,n,accuracy`, where `number` is
/// `all`, `Sing` or `Plur`. Empty cells have an empty accuracy.
pub fn write_intervention_csv<W: Write>(reports: &[EvalReport], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["condition", "bucket", "number", "n", "accuracy"])?;
    for r in reports {
        for row in &r.rows {
            for (number, n, acc) in [
                ("all", row.n, row.accuracy),
                ("Sing", row.n_singular, row.accuracy_singular),
                ("Plur", row.n_plural, row.accuracy_plural),
            ] {
                w.write_record([
                    r.condition.clone(),
                    row.bucket.clone(),
                    number.to_string(),
                    n.to_string(),
                    acc.map(|a| format!("{a:.6}")).unwrap_or_default(),
                ])?;
            }
        }
    }
    w.flush()
}

/// Per-instance outcome pairs (baseline, masked) for the same instance keys.
pub fn paired_outcomes<'a>(
    baseline: &'a [InstanceOutcome],
    masked: &'a [InstanceOutcome],
) -> Vec<(&'a InstanceOutcome, &'a InstanceOutcome)> {
    let by_key: BTreeMap<_, _> = masked.iter().map(|o| (o.key(), o)).collect();
    baseline.iter().filter_map(|b| by_key.get(&b.key()).map(|m| (b, *m))).collect()
}
