//! Score the five surface heuristics on hand-annotated sentences and on a
//! synthetic corpus, then stratify instances by difficulty.
//!
//! cargo run --example heuristics

use accord::conllu::{parse_str, ParseMode};
use accord::extraction::{extract_corpus, extract_subj_verb, generate_synthetic_corpus, ExtractOptions, SyntheticGrammarConfig};
use accord::heuristics::{heuristic_accuracy, profile_all, profile_instance, stratify, Heuristic, HeuristicOptions};

const LADDER: &str = include_str!("../tests/fixtures/ladder.conllu");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = parse_str(LADDER, "ladder", ParseMode::Strict)?.corpus;
    println!("{:<60} {:>5}  per heuristic", "sentence", "count");
    for s in &corpus.sentences {
        let inst = extract_subj_verb(s).pop().ok_or("no subject-verb instance")?;
        let p = profile_instance(s, &inst);
        let marks: String = p.matches.iter().map(|&m| if m { '+' } else { '.' }).collect();
        let text: String = s.surface().chars().take(58).collect();
        println!("{text:<60} {:>5}  {marks}", p.count);
    }

    let cfg = SyntheticGrammarConfig { sentences: 3000, seed: 5, ..SyntheticGrammarConfig::default() };
    let synth = generate_synthetic_corpus(&cfg).corpus;
    let mut instances = extract_corpus(&synth, ExtractOptions::default());
    profile_all(&mut instances, &synth, HeuristicOptions::default())?;
    println!("\nsynthetic corpus, {} instances", instances.len());
    for (h, acc) in heuristic_accuracy(&instances)? {
        println!("  h{} {:<16} {:>5.1}%", h.id(), h.name(), 100.0 * acc);
    }
    for (bucket, members) in stratify(&instances)?.iter().rev() {
        println!("  {bucket} heuristics: {:>5} instances", members.len());
    }
    let adjacent = HeuristicOptions { adjacent_que: true };
    profile_all(&mut instances, &synth, adjacent)?;
    let acc = heuristic_accuracy(&instances)?;
    println!("  with h4 reading only the token before que: {:.1}%", 100.0 * acc[&Heuristic::NounBeforeQue]);
    Ok(())
}
