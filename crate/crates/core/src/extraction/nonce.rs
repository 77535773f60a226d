//! Nonce variants: content words replaced by random words of the same
//! category and feature bundle, syntax left untouched.

use rand::Rng;

use crate::conllu::Sentence;
use crate::util::{derive_seed, rng};

use super::{AgreementInstance, LexKey, MorphLexicon};

/// Categories that get substituted.
pub const CONTENT_UPOS: [&str; 5] = ["NOUN", "PROPN", "VERB", "ADJ", "ADV"];

pub const NONCE_VARIANTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct NonceVariant {
    pub sentence: Sentence,
    /// 0-based variant number.
    pub variant: usize,
    /// Content words kept because the lexicon had no substitute.
    pub lexicon_gaps: usize,
    /// Whether the target itself could not be substituted.
    pub target_gap: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NonceError {
    #[error("instance {sent_id} does not belong to sentence {sentence}")]
    SentenceMismatch { sent_id: String, sentence: String },
}

/// Three nonce variants of `sentence`, each drawn from its own derived seed.
///
/// Every NOUN, PROPN, VERB, ADJ and ADV is replaced by a form sampled
/// uniformly among lexicon entries with the same category and feature map.
/// The target is restricted to lexemes that also have an opposite-number
/// form, so the variant stays scoreable. Token count, heads, relations and
/// all function words are preserved.
pub fn generate_nonce(
    instance: &AgreementInstance,
    sentence: &Sentence,
    lexicon: &MorphLexicon,
    seed: u64,
) -> Result<Vec<NonceVariant>, NonceError> {
    if instance.sent_id != sentence.sent_id {
        return Err(NonceError::SentenceMismatch {
            sent_id: instance.sent_id.clone(),
            sentence: sentence.sent_id.clone(),
        });
    }
    let mut variants = Vec::with_capacity(NONCE_VARIANTS);
    for k in 0..NONCE_VARIANTS {
        let mut rng = rng(derive_seed(seed, k as u64));
        let mut out = sentence.clone();
        out.sent_id = format!("{}~nonce{}", sentence.sent_id, k + 1);
        let mut gaps = 0;
        let mut target_gap = false;
        for tok in out.tokens.iter_mut() {
            if !CONTENT_UPOS.contains(&tok.upos.as_str()) {
                continue;
            }
            let is_target = tok.id == instance.target_index;
            let candidates: Vec<&LexKey> = lexicon
                .class(&tok.upos, &tok.feats)
                .iter()
                .filter(|key| !is_target || lexicon.has_variant(key))
                .collect();
            // Uniform over (lexeme, form) pairs.
            let pairs: Vec<(&LexKey, &str)> = candidates
                .iter()
                .flat_map(|key| {
                    lexicon
                        .forms(key)
                        .into_iter()
                        .flat_map(|forms| forms.keys())
                        .map(move |f| (*key, f.as_str()))
                })
                .collect();
            if pairs.is_empty() {
                gaps += 1;
                target_gap |= is_target;
                continue;
            }
            let (key, form) = pairs[rng.gen_range(0..pairs.len())];
            tok.form = form.to_string();
            tok.lemma = key.lemma.clone();
        }
        out.text = Some(out.surface());
        variants.push(NonceVariant { sentence: out, variant: k, lexicon_gaps: gaps, target_gap });
    }
    Ok(variants)
}
