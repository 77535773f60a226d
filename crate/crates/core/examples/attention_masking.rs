//! Build the four attention masks for an object-participle instance and show
//! what each hides from the query that predicts the participle.
//!
//! cargo run --example attention_masking

use accord::conllu::{build_vocab, parse_str, ParseMode, VocabOptions};
use accord::extraction::{extract_obj_pp, AgreementInstance};
use accord::intervention::{build_mask_spec, LayerScope, MaskCondition};
use accord::lm::{ModelConfig, TransformerLM};

const MOMENTS: &str = include_str!("../tests/fixtures/moments.conllu");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = parse_str(MOMENTS, "moments", ParseMode::Strict)?.corpus;
    let s = &corpus.sentences[0];
    let inst: AgreementInstance = extract_obj_pp(s).into_iter().next().ok_or("no obj_pp instance")?;
    let vocab = build_vocab(&corpus, 1, VocabOptions::default())?;
    let cfg = ModelConfig { n_layers: 2, n_heads: 2, d_model: 16, d_ffn: 32, dropout: 0.0, ..ModelConfig::desk(vocab.len()) };
    let model = TransformerLM::<f64>::init(cfg)?;

    let ids: Vec<u32> = vocab.encode_with_bos(s.tokens.iter().map(|t| t.form.as_str())).into_iter().map(|i| i as u32).collect();
    let prefix = &ids[..inst.target_index];
    let query = inst.target_index - 1;
    let label = |p: usize| if p == 0 { "<s>".to_string() } else { s.token(p).form.clone() };
    println!("query position {query} ({}) predicts {:?}", label(query), s.token(inst.target_index).form);

    let plain = model.forward(prefix, None)?;
    for condition in MaskCondition::ALL {
        let spec = build_mask_spec(&inst, condition)?;
        let hidden: Vec<String> = spec.masked_key_positions.iter().map(|&p| label(p)).collect();
        let trace = model.forward(prefix, Some(&spec))?;
        let row = trace.attention[0][0].row(query);
        let mass: f64 = spec.masked_key_positions.iter().map(|&k| row[k]).sum();
        let moved = (trace.log_probs_at(query)[0] - plain.log_probs_at(query)[0]).abs();
        let earlier_same = (0..query).all(|q| trace.logits.row(q) == plain.logits.row(q));
        println!(
            "{:<28} hides {:<28} masked mass {mass:.1}  row sum {:.6}  earlier rows unchanged {earlier_same}  |dlogp| {moved:.2e}",
            condition.as_str(),
            hidden.join(" "),
            row.sum(),
        );
    }

    let spec = build_mask_spec(&inst, MaskCondition::MaskCuePlusQue)?.with_scope(LayerScope::Layers([1].into()));
    let trace = model.forward(prefix, Some(&spec))?;
    let k = *spec.masked_key_positions.first().expect("non-empty");
    println!("scoped to layer 1: layer 0 weight on {} = {:.3}, layer 1 = {:.3}", label(k), trace.attention[0][0][[query, k]], trace.attention[1][0][[query, k]]);
    Ok(())
}
