//! Dependency-pattern matchers and region bookkeeping.

use crate::conllu::{Corpus, Sentence, Token};

use super::{AgreementInstance, AgreementKind, MorphLexicon, Span};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractOptions {
    /// Count the cue as the first context token instead of leaving it
    /// outside every region.
    pub include_cue_in_context: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegionError {
    #[error("degenerate span: target {target} does not follow cue {cue}")]
    DegenerateSpan { cue: usize, target: usize },
}

fn is_past_participle(t: &Token) -> bool {
    t.upos == "VERB" && t.feat("VerbForm") == Some("Part") && t.feat("Tense") == Some("Past")
}

fn is_avoir(t: &Token) -> bool {
    t.upos == "AUX" && t.lemma == "avoir"
}

fn has_avoir_auxiliary(s: &Sentence, participle: &Token) -> bool {
    if s.children(participle.id).any(|c| c.base_deprel() == "aux" && is_avoir(c)) {
        return true;
    }
    // Fall back to linear adjacency, skipping adverbs ("a souvent vus").
    s.tokens[..participle.id - 1]
        .iter()
        .rev()
        .find(|t| t.upos != "ADV")
        .is_some_and(is_avoir)
}

fn is_relcl(t: &Token) -> bool {
    t.deprel == "acl:relcl"
}

/// Determiner and adjective children of the cue.
pub fn cue_dependents(s: &Sentence, cue: usize) -> Vec<usize> {
    s.children(cue).filter(|c| c.upos == "DET" || c.upos == "ADJ").map(|c| c.id).collect()
}

fn nesting_depth(s: &Sentence, cue: usize, target: usize) -> usize {
    s.tokens.iter().filter(|t| t.id > cue && t.id < target && is_relcl(t)).count()
}

/// NOUN/PROPN tokens strictly between cue and target whose number differs
/// from the target's.
pub fn find_attractors(instance: &AgreementInstance, s: &Sentence) -> Vec<usize> {
    s.tokens
        .iter()
        .filter(|t| t.id > instance.cue_index && t.id < instance.target_index && t.is_nominal())
        .filter(|t| t.number().is_some_and(|n| n != instance.target_number))
        .map(|t| t.id)
        .collect()
}

/// Fills prefix, context and suffix spans for a sentence of `n_tokens` tokens.
/// The target belongs to no region; the cue belongs to the context only when
/// `include_cue_in_context` is set.
pub fn segment_regions(
    instance: &AgreementInstance,
    n_tokens: usize,
    include_cue_in_context: bool,
) -> Result<AgreementInstance, RegionError> {
    let (cue, target) = (instance.cue_index, instance.target_index);
    if target <= cue || cue == 0 {
        return Err(RegionError::DegenerateSpan { cue, target });
    }
    let mut out = instance.clone();
    out.prefix_span = Span::new(1, cue);
    out.context_span = if include_cue_in_context { Span::new(cue, target) } else { Span::new(cue + 1, target) };
    out.suffix_span = Span::new(target + 1, n_tokens + 1);
    Ok(out)
}

fn finish(
    s: &Sentence,
    kind: AgreementKind,
    cue: &Token,
    que: usize,
    target: usize,
    opts: ExtractOptions,
) -> AgreementInstance {
    let target_number = cue.number().expect("cue number checked by caller");
    let bare = AgreementInstance {
        sent_id: s.sent_id.clone(),
        kind,
        cue_index: cue.id,
        cue_dependent_indices: cue_dependents(s, cue.id),
        que_index: que,
        target_index: target,
        target_number,
        prefix_span: Span::default(),
        context_span: Span::default(),
        suffix_span: Span::default(),
        attractor_indices: Vec::new(),
        nesting_depth: nesting_depth(s, cue.id, target),
        scoreable: true,
        heuristic_profile: None,
    };
    let mut inst = segment_regions(&bare, s.len(), opts.include_cue_in_context)
        .expect("cue < que < target holds for every match");
    inst.attractor_indices = find_attractors(&inst, s);
    inst
}

/// Object relative past participles with auxiliary *avoir* whose clause
/// attaches to a preceding noun carrying a Number feature.
pub fn extract_obj_pp(s: &Sentence) -> Vec<AgreementInstance> {
    extract_obj_pp_with(s, ExtractOptions::default())
}

pub fn extract_obj_pp_with(s: &Sentence, opts: ExtractOptions) -> Vec<AgreementInstance> {
    let mut out = Vec::new();
    for p in s.tokens.iter().filter(|t| is_past_participle(t) && is_relcl(t)) {
        let Some(antecedent) = s.get(p.head) else { continue };
        if antecedent.upos != "NOUN" || antecedent.number().is_none() {
            continue;
        }
        if !has_avoir_auxiliary(s, p) {
            continue;
        }
        let que = s
            .children(p.id)
            .find(|c| c.base_deprel() == "obj" && c.is_que() && c.id > antecedent.id && c.id < p.id);
        if let Some(que) = que {
            out.push(finish(s, AgreementKind::ObjPp, antecedent, que.id, p.id, opts));
        }
    }
    out
}

/// Finite verbs whose nominal subject precedes them with an object relative
/// pronoun in between. Copulas and auxiliaries take the subject of their head.
pub fn extract_subj_verb(s: &Sentence) -> Vec<AgreementInstance> {
    extract_subj_verb_with(s, ExtractOptions::default())
}

pub fn extract_subj_verb_with(s: &Sentence, opts: ExtractOptions) -> Vec<AgreementInstance> {
    let mut out = Vec::new();
    for v in s.tokens.iter().filter(|t| t.is_finite() && (t.upos == "VERB" || t.upos == "AUX")) {
        let host = if matches!(v.base_deprel(), "aux" | "cop") { s.get(v.head) } else { Some(v) };
        let Some(host) = host else { continue };
        let Some(subject) = s.children(host.id).find(|c| c.base_deprel() == "nsubj") else { continue };
        if subject.upos != "NOUN" || subject.number().is_none() || subject.id >= v.id {
            continue;
        }
        let ques: Vec<&Token> = s
            .tokens
            .iter()
            .filter(|t| t.id > subject.id && t.id < v.id && t.is_que() && t.base_deprel() == "obj")
            .collect();
        if ques.is_empty() {
            continue;
        }
        // Prefer the relative clause that modifies the subject itself.
        let attached = ques.iter().find(|q| {
            s.get(q.head).is_some_and(|clause| is_relcl(clause) && clause.head == subject.id)
        });
        let que = attached.unwrap_or(&ques[0]);
        out.push(finish(s, AgreementKind::SubjVerb, subject, que.id, v.id, opts));
    }
    out
}

/// Both extractors over a whole corpus, in sentence order; within a sentence
/// obj_pp instances come first, each group ordered by target position.
pub fn extract_corpus(corpus: &Corpus, opts: ExtractOptions) -> Vec<AgreementInstance> {
    let mut out = Vec::new();
    for s in &corpus.sentences {
        out.extend(extract_obj_pp_with(s, opts));
        out.extend(extract_subj_verb_with(s, opts));
    }
    out
}

/// Flags instances whose target has no attested opposite-number form.
pub fn mark_scoreable(instances: &mut [AgreementInstance], corpus: &Corpus, lexicon: &MorphLexicon) {
    let index = corpus.index();
    for inst in instances {
        inst.scoreable = index
            .get(inst.sent_id.as_str())
            .and_then(|s| s.get(inst.target_index))
            .is_some_and(|t| lexicon.variant_form(t).is_ok());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::{parse_str, Number, ParseMode};

    fn moments() -> Sentence {
        let text = include_str!("../../tests/fixtures/moments.conllu");
        parse_str(text, "fig1", ParseMode::Strict).unwrap().corpus.sentences.remove(0)
    }

    #[test]
    fn moments_fixture_parses_as_drawn() {
        let s = moments();
        let que = s.token(7);
        assert_eq!(que.form, "que");
        assert_eq!(que.deprel, "obj");
        assert_eq!(que.head, 12);
    }

    #[test]
    fn moments_obj_pp() {
        let s = moments();
        let found = extract_obj_pp(&s);
        assert_eq!(found.len(), 1);
        let i = &found[0];
        assert_eq!((i.cue_index, i.que_index, i.target_index), (4, 7, 12));
        assert_eq!(s.token(i.cue_index).form, "moments");
        assert_eq!(s.token(i.target_index).form, "donnés");
        assert_eq!(i.target_number, Number::Plur);
        assert_eq!(i.attractor_indices, vec![6, 9]);
        assert_eq!(i.cue_dependent_indices, vec![3]);
    }

    #[test]
    fn moments_subj_verb() {
        let s = moments();
        let found = extract_subj_verb(&s);
        assert_eq!(found.len(), 1);
        let i = &found[0];
        assert_eq!((i.cue_index, i.que_index, i.target_index), (4, 7, 13));
        assert_eq!(s.token(13).form, "resteront");
        assert_eq!(i.target_number, Number::Plur);
        assert_eq!(i.attractor_indices, vec![6, 9]);
    }

    #[test]
    fn moments_regions() {
        let s = moments();
        let i = extract_obj_pp(&s).remove(0);
        assert_eq!(i.prefix_span, Span::inclusive(1, 3));
        assert_eq!(i.context_span, Span::inclusive(5, 11));
        assert_eq!(i.suffix_span, Span::inclusive(13, 14));
        let with_cue = segment_regions(&i, s.len(), true).unwrap();
        assert_eq!(with_cue.context_span, Span::inclusive(4, 11));
        assert_eq!(with_cue.prefix_span, Span::inclusive(1, 3));
    }

    #[test]
    fn cue_at_sentence_start_has_empty_prefix() {
        let s = moments();
        let mut i = extract_obj_pp(&s).remove(0);
        i.cue_index = 1;
        let i = segment_regions(&i, s.len(), false).unwrap();
        assert!(i.prefix_span.is_empty());
    }

    #[test]
    fn adjacent_cue_and_target_yield_empty_context() {
        let s = moments();
        let mut i = extract_obj_pp(&s).remove(0);
        i.target_index = i.cue_index + 1;
        let i = segment_regions(&i, s.len(), false).unwrap();
        assert!(i.context_span.is_empty());
        let mut bad = i.clone();
        bad.target_index = bad.cue_index;
        assert!(matches!(segment_regions(&bad, s.len(), false), Err(RegionError::DegenerateSpan { .. })));
    }

    #[test]
    fn no_relative_clause_no_instance() {
        let text = "1\tIl\til\tPRON\t_\tNumber=Sing\t2\tnsubj\t_\t_\n2\tdort\tdormir\tVERB\t_\tNumber=Sing|VerbForm=Fin\t0\troot\t_\t_\n3\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_\n";
        let s = parse_str(text, "t", ParseMode::Strict).unwrap().corpus.sentences.remove(0);
        assert!(extract_obj_pp(&s).is_empty());
        assert!(extract_subj_verb(&s).is_empty());
    }

    #[test]
    fn adjacent_subject_verb_is_not_an_instance() {
        let text = "1\tLes\tle\tDET\t_\tNumber=Plur\t2\tdet\t_\t_\n2\tchats\tchat\tNOUN\t_\tNumber=Plur\t3\tnsubj\t_\t_\n3\tjouent\tjouer\tVERB\t_\tNumber=Plur|VerbForm=Fin\t0\troot\t_\t_\n4\t.\t.\tPUNCT\t_\t_\t3\tpunct\t_\t_\n";
        let s = parse_str(text, "t", ParseMode::Strict).unwrap().corpus.sentences.remove(0);
        assert!(extract_subj_verb(&s).is_empty());
    }

    #[test]
    fn same_number_intervening_noun_is_not_an_attractor() {
        let mut s = moments();
        s.tokens[5].feats.insert("Number".into(), "Plur".into());
        let i = extract_obj_pp(&s).remove(0);
        assert_eq!(i.attractor_indices, vec![9]);
    }

    #[test]
    fn elided_que_is_matched() {
        let mut s = moments();
        s.tokens[6].form = "qu'".into();
        assert_eq!(extract_obj_pp(&s).len(), 1);
    }
}
