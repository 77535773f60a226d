//! Mining long-distance agreement instances from parsed sentences.
//!
//! Two constructions are extracted:
//!
//! * **object–past-participle** (`obj_pp`): a past participle with auxiliary
//!   *avoir* whose direct object is the relative pronoun *que*; the participle
//!   agrees with the antecedent noun the relative clause attaches to.
//! * **subject–verb across an object relative** (`subj_verb`): a finite verb
//!   whose nominal subject precedes it with at least one object relative
//!   clause in between.
//!
//! In both cases the agreement controller is the *cue* and the inflected item
//! is the *target*. Tokens before the cue form the prefix, tokens between cue
//! and target the context, and tokens after the target the suffix.

mod lexicon;
mod nonce;
mod patterns;
pub mod synth;

pub use lexicon::{LexKey, MorphLexicon, NoVariantAttested};
pub use nonce::{generate_nonce, NonceError, NonceVariant, CONTENT_UPOS, NONCE_VARIANTS};
pub use patterns::{
    cue_dependents, extract_corpus, extract_obj_pp, extract_obj_pp_with, extract_subj_verb, extract_subj_verb_with,
    find_attractors, mark_scoreable, segment_regions, ExtractOptions, RegionError,
};
pub use synth::{generate_synthetic_corpus, SyntheticCorpus, SyntheticGrammarConfig};

use std::fmt;
use std::io::{self, BufRead, Write};
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conllu::{Number, Sentence};
use crate::heuristics::HeuristicProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementKind {
    ObjPp,
    SubjVerb,
}

impl AgreementKind {
    pub const ALL: [AgreementKind; 2] = [AgreementKind::ObjPp, AgreementKind::SubjVerb];

    pub fn as_str(self) -> &'static str {
        match self {
            AgreementKind::ObjPp => "obj_pp",
            AgreementKind::SubjVerb => "subj_verb",
        }
    }
}

impl fmt::Display for AgreementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgreementKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "obj_pp" => Ok(AgreementKind::ObjPp),
            "subj_verb" => Ok(AgreementKind::SubjVerb),
            other => Err(format!("unknown agreement kind {other:?}")),
        }
    }
}

/// Half-open interval `[start, end)` of 1-based token ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end: end.max(start) }
    }

    /// `first..=last`; empty when `last < first`.
    pub fn inclusive(first: usize, last: usize) -> Self {
        Span::new(first, last + 1)
    }

    pub fn empty_at(at: usize) -> Self {
        Span { start: at, end: at }
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn contains(&self, id: usize) -> bool {
        id >= self.start && id < self.end
    }

    pub fn ids(&self) -> Range<usize> {
        self.start..self.end
    }
}

/// One (cue, target) agreement pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementInstance {
    pub sent_id: String,
    pub kind: AgreementKind,
    pub cue_index: usize,
    /// Determiners and adjectives governed by the cue.
    pub cue_dependent_indices: Vec<usize>,
    pub que_index: usize,
    pub target_index: usize,
    pub target_number: Number,
    pub prefix_span: Span,
    pub context_span: Span,
    pub suffix_span: Span,
    pub attractor_indices: Vec<usize>,
    /// Relative clauses headed strictly between cue and target.
    pub nesting_depth: usize,
    /// False when the target has no attested opposite-number form.
    pub scoreable: bool,
    pub heuristic_profile: Option<HeuristicProfile>,
}

impl AgreementInstance {
    pub fn has_attractor(&self) -> bool {
        !self.attractor_indices.is_empty()
    }

    /// Number of surface heuristics agreeing with the target, if profiled.
    pub fn difficulty_bucket(&self) -> Option<usize> {
        self.heuristic_profile.as_ref().map(|p| p.count)
    }

    /// Stable key used to compare instance sets.
    pub fn key(&self) -> (String, AgreementKind, usize, usize, usize) {
        (self.sent_id.clone(), self.kind, self.cue_index, self.que_index, self.target_index)
    }
}

const INSTANCE_FORMAT: &str = "accord-instances";
const INSTANCE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct InstanceHeader {
    format: String,
    version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    #[serde(flatten)]
    pub instance: AgreementInstance,
    pub forms: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceIoError {
    #[error("instance file: {0}")]
    Format(String),
    #[error("instance file line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writes the versioned JSON-lines instance file.
pub fn write_instances<W: Write>(
    out: &mut W,
    instances: &[AgreementInstance],
    sentences: &[&Sentence],
) -> io::Result<()> {
    let records: Vec<InstanceRecord> = instances
        .iter()
        .zip(sentences)
        .map(|(inst, sent)| InstanceRecord { instance: inst.clone(), forms: sent.forms() })
        .collect();
    write_instance_records(out, &records)
}

/// Writes already-paired records under the same header.
pub fn write_instance_records<W: Write>(out: &mut W, records: &[InstanceRecord]) -> io::Result<()> {
    let header = InstanceHeader { format: INSTANCE_FORMAT.into(), version: INSTANCE_VERSION };
    serde_json::to_writer(&mut *out, &header)?;
    writeln!(out)?;
    for rec in records {
        serde_json::to_writer(&mut *out, rec)?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_instances<R: BufRead>(reader: R) -> Result<Vec<InstanceRecord>, InstanceIoError> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| InstanceIoError::Format("missing header line".into()))??;
    let header: InstanceHeader =
        serde_json::from_str(&header).map_err(|source| InstanceIoError::Json { line: 1, source })?;
    if header.format != INSTANCE_FORMAT || header.version != INSTANCE_VERSION {
        return Err(InstanceIoError::Format(format!(
            "unsupported header {}/v{}",
            header.format, header.version
        )));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| InstanceIoError::Json { line: i + 2, source })?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_arithmetic() {
        let s = Span::inclusive(1, 3);
        assert_eq!(s.len(), 3);
        assert!(s.contains(1) && s.contains(3) && !s.contains(4));
        assert!(Span::inclusive(1, 0).is_empty());
        assert_eq!(Span::new(5, 2).len(), 0);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in AgreementKind::ALL {
            assert_eq!(k.as_str().parse::<AgreementKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.as_str()));
        }
    }
}
