//! Train a small model, score agreement by difficulty bucket, then repeat
//! under each attention mask.
//!
//! cargo run --release --example evaluate_agreement -- [SENTENCES] [EPOCHS]

mod common;

use accord::eval::{na_accuracy, EvalReport};
use accord::extraction::AgreementKind;
use accord::intervention::{intervention_report, MaskCondition};

fn show(r: &EvalReport) {
    let cells: Vec<String> = r
        .rows
        .iter()
        .map(|row| row.accuracy.map(|a| format!("{:>5.1}", 100.0 * a)).unwrap_or_else(|| "    -".into()))
        .collect();
    println!("  {:<10} {:<28} {}", r.task, r.condition, cells.join(" "));
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let sentences = args.next().transpose()?.unwrap_or(12000);
    let epochs = args.next().transpose()?.unwrap_or(4);
    let d = common::desk(sentences, epochs);

    println!("accuracy (%) by bucket 0..5, then overall");
    for kind in [AgreementKind::ObjPp, AgreementKind::SubjVerb] {
        let of_kind: Vec<_> = d.instances.iter().filter(|i| i.kind == kind).cloned().collect();
        let eval = na_accuracy(&d.model, &d.vocab, &d.lexicon, &of_kind, &d.heldout, "desk")?;
        let o = eval.report.overall();
        println!(
            "{}: {} scored, singular {:.1}%, plural {:.1}%",
            kind.as_str(),
            o.n,
            100.0 * o.accuracy_singular.unwrap_or(0.0),
            100.0 * o.accuracy_plural.unwrap_or(0.0)
        );
        for r in intervention_report(&d.model, &d.vocab, &d.lexicon, &of_kind, &d.heldout, &MaskCondition::ALL, "desk")? {
            show(&r);
        }
    }
    Ok(())
}
