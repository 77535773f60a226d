//! A small trained model shared by the model-facing examples.

#![allow(dead_code)]

use accord::conllu::{build_vocab, Corpus, VocabOptions, Vocabulary};
use accord::extraction::{
    extract_corpus, generate_synthetic_corpus, mark_scoreable, AgreementInstance, ExtractOptions, MorphLexicon,
    SyntheticGrammarConfig,
};
use accord::heuristics::{profile_all, HeuristicOptions};
use accord::lm::{encode_corpus, train_with_callback, ModelConfig, TrainHyperparams, TransformerLM};

pub struct Desk {
    pub train: Corpus,
    pub heldout: Corpus,
    pub vocab: Vocabulary,
    pub lexicon: MorphLexicon,
    pub model: TransformerLM<f32>,
    /// Profiled, scoreable-marked instances from the held-out corpus.
    pub instances: Vec<AgreementInstance>,
}

/// Trains a narrow two-layer model on `sentences` synthetic sentences.
pub fn desk(sentences: usize, epochs: usize) -> Desk {
    let train_cfg = SyntheticGrammarConfig { sentences, seed: 11, ..SyntheticGrammarConfig::default() };
    let heldout_cfg = SyntheticGrammarConfig { sentences: sentences / 5, seed: 12, ..train_cfg.clone() };
    let train = generate_synthetic_corpus(&train_cfg).corpus;
    let heldout = generate_synthetic_corpus(&heldout_cfg).corpus;
    let vocab = build_vocab(&train, 1, VocabOptions::default()).expect("non-empty corpus");

    let cfg = ModelConfig { n_layers: 2, n_heads: 4, d_model: 48, d_ffn: 128, dropout: 0.0, seed: 3, ..ModelConfig::desk(vocab.len()) };
    let mut model = TransformerLM::<f32>::init(cfg).expect("valid config");
    let hp = TrainHyperparams { epochs, seed: 3, ..TrainHyperparams::default() };
    let valid = encode_corpus(&heldout, &vocab);
    train_with_callback(&mut model, &encode_corpus(&train, &vocab), Some(&valid), &hp, |e| {
        eprintln!("epoch {} loss {:.3} valid ppl {:.2}", e.epoch, e.train_loss, e.valid_ppl.unwrap_or(f64::NAN));
    })
    .expect("training runs");

    let mut lexicon = MorphLexicon::from_corpus(&train);
    for s in &heldout.sentences {
        lexicon.add_sentence(s);
    }
    let mut instances = extract_corpus(&heldout, ExtractOptions::default());
    profile_all(&mut instances, &heldout, HeuristicOptions::default()).expect("instances come from the corpus");
    mark_scoreable(&mut instances, &heldout, &lexicon);
    Desk { train, heldout, vocab, lexicon, model, instances }
}
