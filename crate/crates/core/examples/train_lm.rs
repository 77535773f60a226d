//! Train a small causal transformer on a synthetic corpus with plain SGD,
//! save a checkpoint, reload it and check held-out perplexity.
//!
//! cargo run --release --example train_lm -- [SENTENCES] [EPOCHS]

mod common;

use accord::lm::{encode_corpus, load_checkpoint, perplexity, save_checkpoint};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let sentences = args.next().transpose()?.unwrap_or(12000);
    let epochs = args.next().transpose()?.unwrap_or(4);

    let d = common::desk(sentences, epochs);
    println!("{} parameters, vocabulary {}", d.model.params.count(), d.vocab.len());

    let heldout = encode_corpus(&d.heldout, &d.vocab);
    let ppl = perplexity(&d.model, &heldout)?;
    println!("held-out perplexity {ppl:.3}");

    let path = std::env::temp_dir().join("accord_example.ckpt");
    save_checkpoint(&path, &d.model, &d.vocab.content_hash())?;
    let ckpt = load_checkpoint::<f32>(&path)?;
    assert_eq!(ckpt.vocab_hash, d.vocab.content_hash());
    assert_eq!(perplexity(&ckpt.model, &heldout)?, ppl);
    println!("checkpoint {} reloads with identical perplexity", path.display());
    Ok(())
}
