//! Extract object-participle and subject-verb agreement instances, with
//! their prefix/context/suffix regions and attractors.
//!
//! cargo run --example extract_instances

use accord::conllu::{parse_str, ParseMode, Sentence};
use accord::extraction::{extract_corpus, AgreementInstance, ExtractOptions, Span};

const MOMENTS: &str = include_str!("../tests/fixtures/moments.conllu");

fn words(s: &Sentence, span: &Span) -> String {
    span.ids().map(|i| s.token(i).form.as_str()).collect::<Vec<_>>().join(" ")
}

fn show(s: &Sentence, inst: &AgreementInstance) {
    println!("  {} {} -> {} ({})", inst.kind.as_str(), s.token(inst.cue_index).form, s.token(inst.target_index).form, inst.target_number.as_str());
    println!("    prefix  [{}]", words(s, &inst.prefix_span));
    println!("    context [{}]", words(s, &inst.context_span));
    println!("    suffix  [{}]", words(s, &inst.suffix_span));
    let attractors: Vec<&str> = inst.attractor_indices.iter().map(|&i| s.token(i).form.as_str()).collect();
    println!("    attractors {attractors:?}, nesting depth {}", inst.nesting_depth);
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = parse_str(MOMENTS, "moments", ParseMode::Strict)?.corpus;
    let s = &corpus.sentences[0];
    println!("{}", s.surface());
    for inst in extract_corpus(&corpus, ExtractOptions::default()) {
        show(s, &inst);
    }

    let with_cue = ExtractOptions { include_cue_in_context: true };
    let alt = extract_corpus(&corpus, with_cue);
    println!("with the cue counted as context: context = [{}]", words(s, &alt[0].context_span));
    Ok(())
}
