//! Surface heuristics for predicting the number of an agreement target, and
//! the difficulty scale obtained by counting how many of them are right.
//!
//! Every heuristic reads only tokens strictly before the target:
//!
//! 1. number of the first noun of the sentence;
//! 2. number of the closest noun;
//! 3. number of the closest token bearing a Number feature, whatever its category;
//! 4. number of the closest noun before the last *que*;
//! 5. majority number over all number-marked tokens, `None` on a tie.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::conllu::{Corpus, Number, Sentence};
use crate::extraction::AgreementInstance;

pub const N_HEURISTICS: usize = 5;
pub const N_BUCKETS: usize = N_HEURISTICS + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heuristic {
    FirstNoun = 1,
    ClosestNoun = 2,
    ClosestNumber = 3,
    NounBeforeQue = 4,
    Majority = 5,
}

impl Heuristic {
    pub const ALL: [Heuristic; N_HEURISTICS] = [
        Heuristic::FirstNoun,
        Heuristic::ClosestNoun,
        Heuristic::ClosestNumber,
        Heuristic::NounBeforeQue,
        Heuristic::Majority,
    ];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Heuristic> {
        Heuristic::ALL.get(id.checked_sub(1)?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Heuristic::FirstNoun => "first_noun",
            Heuristic::ClosestNoun => "closest_noun",
            Heuristic::ClosestNumber => "closest_number",
            Heuristic::NounBeforeQue => "noun_before_que",
            Heuristic::Majority => "majority",
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HeuristicOptions {
    /// Heuristic 4 reads the token right before *que* instead of searching
    /// back for the nearest noun.
    pub adjacent_que: bool,
}

/// Index `i` of each array refers to heuristic `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicProfile {
    pub predictions: [Option<Number>; N_HEURISTICS],
    pub matches: [bool; N_HEURISTICS],
    pub count: usize,
}

impl HeuristicProfile {
    pub fn prediction(&self, h: Heuristic) -> Option<Number> {
        self.predictions[h.id() - 1]
    }

    pub fn matched(&self, h: Heuristic) -> bool {
        self.matches[h.id() - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HeuristicError {
    #[error("no instances")]
    EmptyInput,
    #[error("instance {0} has no heuristic profile")]
    Unprofiled(String),
    #[error("sentence {0} not found")]
    MissingSentence(String),
}

fn before_target<'s>(s: &'s Sentence, inst: &AgreementInstance) -> &'s [crate::conllu::Token] {
    let end = inst.target_index.saturating_sub(1).min(s.len());
    &s.tokens[..end]
}

pub fn heuristic_predict(h: Heuristic, s: &Sentence, inst: &AgreementInstance) -> Option<Number> {
    heuristic_predict_with(h, s, inst, HeuristicOptions::default())
}

pub fn heuristic_predict_with(
    h: Heuristic,
    s: &Sentence,
    inst: &AgreementInstance,
    opts: HeuristicOptions,
) -> Option<Number> {
    let toks = before_target(s, inst);
    match h {
        Heuristic::FirstNoun => toks.iter().find(|t| t.is_nominal())?.number(),
        Heuristic::ClosestNoun => toks.iter().rev().find(|t| t.is_nominal())?.number(),
        Heuristic::ClosestNumber => toks.iter().rev().find_map(|t| t.number()),
        Heuristic::NounBeforeQue => {
            let q = toks.iter().rposition(|t| t.is_que())?;
            if opts.adjacent_que {
                let prev = toks[..q].last()?;
                return if prev.is_nominal() { prev.number() } else { None };
            }
            toks[..q].iter().rev().find(|t| t.is_nominal())?.number()
        }
        Heuristic::Majority => {
            let (mut sing, mut plur) = (0usize, 0usize);
            for n in toks.iter().filter_map(|t| t.number()) {
                match n {
                    Number::Sing => sing += 1,
                    Number::Plur => plur += 1,
                }
            }
            match sing.cmp(&plur) {
                std::cmp::Ordering::Greater => Some(Number::Sing),
                std::cmp::Ordering::Less => Some(Number::Plur),
                std::cmp::Ordering::Equal => None,
            }
        }
    }
}

pub fn profile_instance(s: &Sentence, inst: &AgreementInstance) -> HeuristicProfile {
    profile_instance_with(s, inst, HeuristicOptions::default())
}

pub fn profile_instance_with(s: &Sentence, inst: &AgreementInstance, opts: HeuristicOptions) -> HeuristicProfile {
    let predictions = Heuristic::ALL.map(|h| heuristic_predict_with(h, s, inst, opts));
    let matches = predictions.map(|p| p == Some(inst.target_number));
    let count = matches.iter().filter(|&&m| m).count();
    HeuristicProfile { predictions, matches, count }
}

/// Attaches a profile to every instance, looking sentences up by id.
pub fn profile_all(
    instances: &mut [AgreementInstance],
    corpus: &Corpus,
    opts: HeuristicOptions,
) -> Result<(), HeuristicError> {
    let index = corpus.index();
    for inst in instances {
        let s = index
            .get(inst.sent_id.as_str())
            .ok_or_else(|| HeuristicError::MissingSentence(inst.sent_id.clone()))?;
        inst.heuristic_profile = Some(profile_instance_with(s, inst, opts));
    }
    Ok(())
}

/// Partition by heuristic count; all six buckets are always present.
pub fn stratify(
    instances: &[AgreementInstance],
) -> Result<BTreeMap<usize, Vec<AgreementInstance>>, HeuristicError> {
    let mut out: BTreeMap<usize, Vec<AgreementInstance>> = (0..N_BUCKETS).map(|b| (b, Vec::new())).collect();
    for inst in instances {
        let b = inst.difficulty_bucket().ok_or_else(|| HeuristicError::Unprofiled(inst.sent_id.clone()))?;
        out.get_mut(&b).expect("count <= 5").push(inst.clone());
    }
    Ok(out)
}

/// Fraction of instances on which each heuristic is right.
pub fn heuristic_accuracy(instances: &[AgreementInstance]) -> Result<BTreeMap<Heuristic, f64>, HeuristicError> {
    if instances.is_empty() {
        return Err(HeuristicError::EmptyInput);
    }
    let mut hits = [0usize; N_HEURISTICS];
    for inst in instances {
        let p = inst
            .heuristic_profile
            .as_ref()
            .ok_or_else(|| HeuristicError::Unprofiled(inst.sent_id.clone()))?;
        for (h, m) in hits.iter_mut().zip(p.matches) {
            *h += m as usize;
        }
    }
    let n = instances.len() as f64;
    Ok(Heuristic::ALL.iter().zip(hits).map(|(&h, k)| (h, k as f64 / n)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::{parse_str, ParseMode};
    use crate::extraction::{AgreementKind, Span};

    /// "Les chats que Noûr aime bien jouent"
    fn example() -> (Sentence, AgreementInstance) {
        let text = "\
1\tLes\tle\tDET\t_\tNumber=Plur\t2\tdet\t_\t_
2\tchats\tchat\tNOUN\t_\tNumber=Plur\t7\tnsubj\t_\t_
3\tque\tque\tPRON\t_\tPronType=Rel\t5\tobj\t_\t_
4\tNoûr\tNoûr\tPROPN\t_\tNumber=Sing\t5\tnsubj\t_\t_
5\taime\taimer\tVERB\t_\tNumber=Sing|VerbForm=Fin\t2\tacl:relcl\t_\t_
6\tbien\tbien\tADV\t_\t_\t5\tadvmod\t_\t_
7\tjouent\tjouer\tVERB\t_\tNumber=Plur|VerbForm=Fin\t0\troot\t_\t_
";
        let s = parse_str(text, "ex", ParseMode::Strict).unwrap().corpus.sentences.remove(0);
        let inst = AgreementInstance {
            sent_id: s.sent_id.clone(),
            kind: AgreementKind::SubjVerb,
            cue_index: 2,
            cue_dependent_indices: vec![1],
            que_index: 3,
            target_index: 7,
            target_number: Number::Plur,
            prefix_span: Span::new(1, 2),
            context_span: Span::new(3, 7),
            suffix_span: Span::new(8, 8),
            attractor_indices: vec![4],
            nesting_depth: 1,
            scoreable: true,
            heuristic_profile: None,
        };
        (s, inst)
    }

    #[test]
    fn worked_example() {
        let (s, inst) = example();
        let p = profile_instance(&s, &inst);
        assert_eq!(
            p.predictions,
            [Some(Number::Plur), Some(Number::Sing), Some(Number::Sing), Some(Number::Plur), None]
        );
        assert_eq!(p.matches, [true, false, false, true, false]);
        assert_eq!(p.count, 2);
    }

    #[test]
    fn adjacent_variant_reads_token_before_que() {
        let (mut s, inst) = example();
        let opts = HeuristicOptions { adjacent_que: true };
        assert_eq!(heuristic_predict_with(Heuristic::NounBeforeQue, &s, &inst, opts), Some(Number::Plur));
        s.tokens[1].upos = "ADJ".into();
        assert_eq!(heuristic_predict_with(Heuristic::NounBeforeQue, &s, &inst, opts), None);
        assert_eq!(heuristic_predict(Heuristic::NounBeforeQue, &s, &inst), None);
    }

    #[test]
    fn no_noun_before_target() {
        let (mut s, inst) = example();
        for t in &mut s.tokens {
            if t.is_nominal() {
                t.upos = "X".into();
            }
        }
        for h in [Heuristic::FirstNoun, Heuristic::ClosestNoun, Heuristic::NounBeforeQue] {
            assert_eq!(heuristic_predict(h, &s, &inst), None);
        }
    }

    #[test]
    fn ids_round_trip() {
        for h in Heuristic::ALL {
            assert_eq!(Heuristic::from_id(h.id()), Some(h));
        }
        assert_eq!(Heuristic::from_id(0), None);
        assert_eq!(Heuristic::from_id(6), None);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(heuristic_accuracy(&[]), Err(HeuristicError::EmptyInput));
        let buckets = stratify(&[]).unwrap();
        assert_eq!(buckets.len(), 6);
        assert!(buckets.values().all(Vec::is_empty));
    }

    #[test]
    fn unprofiled_is_an_error() {
        let (_, inst) = example();
        assert!(matches!(stratify(&[inst]), Err(HeuristicError::Unprofiled(_))));
    }
}
