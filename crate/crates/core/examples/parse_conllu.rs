//! Parse a CoNLL-U file, validate it, build a vocabulary and write it back.
//!
//! cargo run --example parse_conllu -- [FILE.conllu]

use accord::conllu::{build_vocab, parse_files, parse_str, to_conllu_string, ParseMode, VocabOptions};

const FALLBACK: &str = include_str!("../tests/fixtures/ladder.conllu");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let outcome = match std::env::args().nth(1) {
        Some(path) => parse_files(&[path], ParseMode::Lenient)?,
        None => parse_str(FALLBACK, "ladder", ParseMode::Lenient)?,
    };
    let corpus = outcome.corpus;
    println!("{} sentences, {} tokens, {} dropped", corpus.len(), corpus.token_count(), outcome.dropped.len());
    for s in corpus.sentences.iter().take(3) {
        println!("{:>6}  {}", s.sent_id, s.surface());
        for t in &s.tokens {
            let number = t.number().map(|n| n.as_str()).unwrap_or("-");
            println!("        {:>2} {:<14} {:<6} {:<5} -> {:>2} {}", t.id, t.form, t.upos, number, t.head, t.deprel);
        }
    }

    let vocab = build_vocab(&corpus, 1, VocabOptions::default())?;
    println!("vocabulary: {} entries (hash {})", vocab.len(), &vocab.content_hash()[..12]);

    let text = to_conllu_string(&corpus);
    let again = parse_str(&text, "round-trip", ParseMode::Strict)?.corpus;
    assert_eq!(again.sentences, corpus.sentences);
    println!("round trip ok ({} bytes)", text.len());
    Ok(())
}
