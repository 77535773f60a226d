//! Long-distance number agreement in French: treebank extraction, a small
//! causal transformer language model, difficulty-stratified evaluation,
//! attention-masking interventions and linear probes.

pub mod conllu;
pub mod eval;
pub mod extraction;
pub mod heuristics;
pub mod intervention;
pub mod lm;
pub mod probing;
pub mod util;
