mod common;

use accord::conllu::{parse_str, Number, ParseMode, Sentence};
use accord::extraction::{extract_corpus, extract_subj_verb, AgreementKind, ExtractOptions};
use accord::heuristics::{
    heuristic_accuracy, profile_all, profile_instance, stratify, Heuristic, HeuristicOptions,
};
use accord::extraction::{generate_synthetic_corpus, SyntheticGrammarConfig};
use proptest::prelude::*;

#[test]
fn ladder_rows_score_five_down_to_zero() {
    let corpus = common::ladder();
    let counts: Vec<usize> = corpus
        .sentences
        .iter()
        .map(|s| {
            let found = extract_subj_verb(s);
            let last = found.last().unwrap_or_else(|| panic!("{}: no subject-verb instance", s.sent_id));
            profile_instance(s, last).count
        })
        .collect();
    assert_eq!(counts, vec![5, 4, 3, 2, 1, 0]);
}

#[test]
fn ladder_targets_are_the_expected_verbs() {
    let corpus = common::ladder();
    let targets: Vec<(String, String)> = corpus
        .sentences
        .iter()
        .map(|s| {
            let i = extract_subj_verb(s).pop().unwrap();
            (s.token(i.cue_index).form.clone(), s.token(i.target_index).form.clone())
        })
        .collect();
    let expect = [
        ("idées", "sont"),
        ("choses", "touchent"),
        ("idées", "auront"),
        ("emblèmes", "disent"),
        ("qualités", "doivent"),
        ("hommes", "prendront"),
    ];
    for ((c, t), (ec, et)) in targets.iter().zip(expect) {
        assert_eq!((c.as_str(), t.as_str()), (ec, et));
    }
}

const CATS: &str = "# sent_id = chats
1	Les	le	DET	_	Number=Plur	2	det	_	_
2	chats	chat	NOUN	_	Number=Plur	7	nsubj	_	_
3	que	que	PRON	_	PronType=Rel	5	obj	_	_
4	Noûr	Noûr	PROPN	_	Number=Sing	5	nsubj	_	_
5	aime	aimer	VERB	_	Number=Sing|VerbForm=Fin	2	acl:relcl	_	_
6	bien	bien	ADV	_	_	5	advmod	_	_
7	jouent	jouer	VERB	_	Number=Plur|VerbForm=Fin	0	root	_	_
";

fn cats() -> Sentence {
    parse_str(CATS, "cats", ParseMode::Strict).unwrap().corpus.sentences.remove(0)
}

#[test]
fn simplified_example_has_a_tied_majority() {
    let s = cats();
    let inst = extract_subj_verb(&s).remove(0);
    let p = profile_instance(&s, &inst);
    assert_eq!(p.prediction(Heuristic::FirstNoun), Some(Number::Plur));
    assert_eq!(p.prediction(Heuristic::ClosestNoun), Some(Number::Sing));
    assert_eq!(p.prediction(Heuristic::ClosestNumber), Some(Number::Sing));
    assert_eq!(p.prediction(Heuristic::NounBeforeQue), Some(Number::Plur));
    assert_eq!(p.prediction(Heuristic::Majority), None);
    assert_eq!(p.count, 2);
}

#[test]
fn adjacent_que_variant_reads_the_token_before_que() {
    let corpus = common::moments();
    let mut v = extract_corpus(&corpus, ExtractOptions::default());
    profile_all(&mut v, &corpus, HeuristicOptions { adjacent_que: true }).unwrap();
    let obj = v.iter().find(|i| i.kind == AgreementKind::ObjPp).unwrap();
    // "bonheur" sits right before "que" in both readings.
    assert_eq!(obj.heuristic_profile.as_ref().unwrap().prediction(Heuristic::NounBeforeQue), Some(Number::Sing));
}

#[test]
fn all_five_right_gives_perfect_heuristic_accuracy() {
    let corpus = common::ladder();
    let mut v = extract_corpus(&corpus, ExtractOptions::default());
    profile_all(&mut v, &corpus, HeuristicOptions::default()).unwrap();
    let easy: Vec<_> = v.into_iter().filter(|i| i.difficulty_bucket() == Some(5)).collect();
    assert!(!easy.is_empty());
    assert!(heuristic_accuracy(&easy).unwrap().values().all(|&a| a == 1.0));
    assert!(heuristic_accuracy(&[]).is_err());
}

fn synthetic(seed: u64) -> (accord::conllu::Corpus, Vec<accord::extraction::AgreementInstance>) {
    let cfg = SyntheticGrammarConfig { sentences: 150, seed, ..SyntheticGrammarConfig::default() };
    let c = generate_synthetic_corpus(&cfg).corpus;
    let mut v = extract_corpus(&c, ExtractOptions::default());
    profile_all(&mut v, &c, HeuristicOptions::default()).unwrap();
    (c, v)
}

#[test]
fn heuristic_accuracy_equals_recount() {
    let (c, v) = synthetic(4);
    let acc = heuristic_accuracy(&v).unwrap();
    let index = c.index();
    for h in Heuristic::ALL {
        let hits = v
            .iter()
            .filter(|i| {
                let s = index[i.sent_id.as_str()];
                let before = &s.tokens[..i.target_index - 1];
                let nominal = |t: &&accord::conllu::Token| t.upos == "NOUN" || t.upos == "PROPN";
                let pred = match h {
                    Heuristic::FirstNoun => before.iter().find(nominal).and_then(|t| t.number()),
                    Heuristic::ClosestNoun => before.iter().rev().find(nominal).and_then(|t| t.number()),
                    Heuristic::ClosestNumber => before.iter().rev().find_map(|t| t.number()),
                    Heuristic::NounBeforeQue => before.iter().rposition(|t| t.is_que()).and_then(|q| {
                        before[..q].iter().rev().find(nominal).and_then(|t| t.number())
                    }),
                    Heuristic::Majority => {
                        let plur = before.iter().filter(|t| t.number() == Some(Number::Plur)).count();
                        let sing = before.iter().filter(|t| t.number() == Some(Number::Sing)).count();
                        match plur.cmp(&sing) {
                            std::cmp::Ordering::Greater => Some(Number::Plur),
                            std::cmp::Ordering::Less => Some(Number::Sing),
                            std::cmp::Ordering::Equal => None,
                        }
                    }
                };
                pred == Some(i.target_number)
            })
            .count();
        assert!((acc[&h] - hits as f64 / v.len() as f64).abs() < 1e-12, "{h}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn stratification_partitions_and_counts_match(seed in 0u64..1000) {
        let (_, v) = synthetic(seed);
        let buckets = stratify(&v).unwrap();
        prop_assert_eq!(buckets.len(), 6);
        prop_assert_eq!(buckets.values().map(|b| b.len()).sum::<usize>(), v.len());
        for (b, members) in &buckets {
            for i in members {
                let p = i.heuristic_profile.as_ref().unwrap();
                prop_assert_eq!(p.count, *b);
                prop_assert_eq!(p.matches.iter().filter(|&&m| m).count(), p.count);
            }
        }
    }

    #[test]
    fn heuristics_never_look_past_the_target(seed in 0u64..1000) {
        let (c, v) = synthetic(seed);
        let index = c.index();
        for i in &v {
            let s = index[i.sent_id.as_str()];
            let mut cut = s.clone();
            // Keep the target slot but scramble everything from it onwards.
            for t in cut.tokens.iter_mut().skip(i.target_index - 1) {
                t.feats.clear();
                t.upos = "X".into();
                t.form = "que".into();
            }
            prop_assert_eq!(profile_instance(&cut, i).predictions, profile_instance(s, i).predictions);
        }
    }
}
