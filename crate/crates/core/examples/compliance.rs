//! Measure how often attested object participles agree with their
//! antecedent, on a clean and on a deliberately noisy synthetic corpus.
//!
//! cargo run --example compliance

use accord::eval::compliance_report;
use accord::extraction::{generate_synthetic_corpus, MorphLexicon, SyntheticGrammarConfig};

fn main() {
    for violation_rate in [0.0, 0.1, 0.3] {
        let cfg = SyntheticGrammarConfig { sentences: 3000, seed: 2, violation_rate, ..SyntheticGrammarConfig::default() };
        let corpus = generate_synthetic_corpus(&cfg).corpus;
        let r = compliance_report(&corpus, &MorphLexicon::from_corpus(&corpus));
        println!(
            "violation rate {violation_rate:.1}: {} of {} participles agree ({:.1}%), {} unmarked, {} without a variant",
            r.compliant,
            r.instances,
            100.0 * r.fraction.unwrap_or(0.0),
            r.unmarked,
            r.without_variant
        );
    }
}
