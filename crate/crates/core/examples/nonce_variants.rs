//! Replace every content word with a random lexicon item of the same
//! category and features, keeping the tree, and compare agreement accuracy
//! on originals and variants.
//!
//! cargo run --release --example nonce_variants -- [SENTENCES] [EPOCHS]

mod common;

use accord::eval::{nonce_evaluation, NonceItem};
use accord::extraction::{generate_nonce, AgreementKind};
use accord::util::{derive_seed, salt_of};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let sentences = args.next().transpose()?.unwrap_or(12000);
    let epochs = args.next().transpose()?.unwrap_or(4);
    let d = common::desk(sentences, epochs);

    let originals: Vec<_> = d.instances.iter().filter(|i| i.scoreable && i.kind == AgreementKind::ObjPp).take(300).cloned().collect();
    let index = d.heldout.index();
    let mut items = Vec::new();
    let mut lexicon = d.lexicon.clone();
    for inst in &originals {
        let s = index[inst.sent_id.as_str()];
        let seed = derive_seed(7, salt_of(&format!("{}#{}", inst.sent_id, inst.target_index)));
        for v in generate_nonce(inst, s, &d.lexicon, seed)? {
            assert_eq!(v.sentence.len(), s.len());
            let mut instance = inst.clone();
            instance.sent_id = v.sentence.sent_id.clone();
            lexicon.add_sentence(&v.sentence);
            items.push(NonceItem { instance, sentence: v.sentence, target_gap: v.target_gap });
        }
    }
    if let Some(first) = items.first() {
        println!("original  {}", index[originals[0].sent_id.as_str()].surface());
        println!("variant   {}", first.sentence.surface());
    }

    let e = nonce_evaluation(&d.model, &d.vocab, &lexicon, &originals, &d.heldout, &items, "desk")?;
    println!("{:<8} {:>9} {:>9}", "bucket", "original", "nonce");
    let pct = |x: Option<f64>| x.map(|v| format!("{:>8.1}%", 100.0 * v)).unwrap_or_else(|| "        -".into());
    for delta in &e.deltas {
        println!("{:<8} {} {}", delta.bucket, pct(delta.original), pct(delta.nonce));
    }
    Ok(())
}
