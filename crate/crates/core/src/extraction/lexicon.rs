use std::collections::BTreeMap;

use crate::conllu::{Corpus, Feats, Sentence, Token};

/// A lexeme in one inflected cell: lemma, category and full feature bundle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LexKey {
    pub lemma: String,
    pub upos: String,
    pub feats: Feats,
}

impl LexKey {
    pub fn of(t: &Token) -> Self {
        LexKey { lemma: t.lemma.clone(), upos: t.upos.clone(), feats: t.feats.clone() }
    }

    fn with_number_swapped(&self) -> Option<LexKey> {
        let n = self.feats.get("Number").and_then(|n| crate::conllu::Number::parse(n))?;
        let mut feats = self.feats.clone();
        feats.insert("Number".into(), n.opposite().as_str().into());
        Some(LexKey { lemma: self.lemma.clone(), upos: self.upos.clone(), feats })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no opposite-number form attested for {form:?} ({lemma}, {upos})")]
pub struct NoVariantAttested {
    pub form: String,
    pub lemma: String,
    pub upos: String,
}

/// Attested surface forms per (lemma, upos, feats), with counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MorphLexicon {
    entries: BTreeMap<LexKey, BTreeMap<String, u64>>,
    classes: BTreeMap<(String, Feats), Vec<LexKey>>,
}

impl MorphLexicon {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut lex = MorphLexicon::default();
        for s in &corpus.sentences {
            lex.add_sentence(s);
        }
        lex
    }

    pub fn add_sentence(&mut self, s: &Sentence) {
        for t in &s.tokens {
            self.add(t);
        }
    }

    pub fn add(&mut self, t: &Token) {
        let key = LexKey::of(t);
        let forms = self.entries.entry(key.clone()).or_default();
        if forms.is_empty() {
            let class = self.classes.entry((key.upos.clone(), key.feats.clone())).or_default();
            if let Err(pos) = class.binary_search(&key) {
                class.insert(pos, key);
            }
        }
        *forms.entry(t.form.clone()).or_default() += 1;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn forms(&self, key: &LexKey) -> Option<&BTreeMap<String, u64>> {
        self.entries.get(key)
    }

    /// Every lexeme attested with exactly this category and feature bundle.
    pub fn class(&self, upos: &str, feats: &Feats) -> &[LexKey] {
        self.classes
            .get(&(upos.to_string(), feats.clone()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Most frequent form of a cell, ties broken lexicographically.
    pub fn preferred_form(&self, key: &LexKey) -> Option<&str> {
        let forms = self.entries.get(key)?;
        // Lexicographic iteration; only a strictly higher count replaces the best.
        forms
            .iter()
            .fold(None::<(&String, u64)>, |best, (f, &c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((f, c)),
            })
            .map(|(f, _)| f.as_str())
    }

    /// The form of the same lemma, category and features with Number swapped.
    pub fn variant_form(&self, t: &Token) -> Result<String, NoVariantAttested> {
        let missing = || NoVariantAttested { form: t.form.clone(), lemma: t.lemma.clone(), upos: t.upos.clone() };
        let key = LexKey::of(t).with_number_swapped().ok_or_else(missing)?;
        self.preferred_form(&key).map(str::to_string).ok_or_else(missing)
    }

    /// Whether a lexeme cell has an attested opposite-number counterpart.
    pub fn has_variant(&self, key: &LexKey) -> bool {
        key.with_number_swapped().is_some_and(|k| self.entries.contains_key(&k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::{parse_feats, Number};

    fn tok(form: &str, lemma: &str, upos: &str, feats: &str) -> Token {
        Token {
            id: 1,
            form: form.into(),
            lemma: lemma.into(),
            upos: upos.into(),
            feats: parse_feats(feats).unwrap(),
            head: 0,
            deprel: "root".into(),
        }
    }

    fn lexicon(tokens: &[Token]) -> MorphLexicon {
        let mut lex = MorphLexicon::default();
        for t in tokens {
            lex.add(t);
        }
        lex
    }

    const PART_PL: &str = "Gender=Masc|Number=Plur|Tense=Past|VerbForm=Part";
    const PART_SG: &str = "Gender=Masc|Number=Sing|Tense=Past|VerbForm=Part";

    #[test]
    fn variant_of_plural_participle() {
        let lex = lexicon(&[
            tok("adoptés", "adopter", "VERB", PART_PL),
            tok("adopté", "adopter", "VERB", PART_SG),
            tok("donnés", "donner", "VERB", PART_PL),
            tok("donné", "donner", "VERB", PART_SG),
        ]);
        assert_eq!(lex.variant_form(&tok("adoptés", "adopter", "VERB", PART_PL)).unwrap(), "adopté");
        assert_eq!(lex.variant_form(&tok("donnés", "donner", "VERB", PART_PL)).unwrap(), "donné");
        assert_eq!(lex.variant_form(&tok("donné", "donner", "VERB", PART_SG)).unwrap(), "donnés");
    }

    #[test]
    fn missing_variant() {
        let lex = lexicon(&[tok("adoptés", "adopter", "VERB", PART_PL)]);
        assert!(lex.variant_form(&tok("adoptés", "adopter", "VERB", PART_PL)).is_err());
        assert!(lex.variant_form(&tok("et", "et", "CCONJ", "_")).is_err());
    }

    #[test]
    fn tie_break_prefers_frequency_then_lexicographic() {
        let lex = lexicon(&[
            tok("b", "x", "NOUN", "Number=Sing"),
            tok("a", "x", "NOUN", "Number=Sing"),
            tok("c", "x", "NOUN", "Number=Sing"),
            tok("c", "x", "NOUN", "Number=Sing"),
        ]);
        let key = LexKey { lemma: "x".into(), upos: "NOUN".into(), feats: parse_feats("Number=Sing").unwrap() };
        assert_eq!(lex.preferred_form(&key), Some("c"));
        let lex = lexicon(&[tok("b", "x", "NOUN", "Number=Sing"), tok("a", "x", "NOUN", "Number=Sing")]);
        assert_eq!(lex.preferred_form(&key), Some("a"));
    }

    #[test]
    fn swapped_lookup_returns_attested_forms() {
        let lex = lexicon(&[tok("chats", "chat", "NOUN", "Gender=Masc|Number=Plur"), tok("chat", "chat", "NOUN", "Gender=Masc|Number=Sing")]);
        let t = tok("chat", "chat", "NOUN", "Gender=Masc|Number=Sing");
        assert_eq!(t.number(), Some(Number::Sing));
        assert_eq!(lex.variant_form(&t).unwrap(), "chats");
        assert!(lex.has_variant(&LexKey::of(&t)));
        assert_eq!(lex.class("NOUN", &t.feats).len(), 1);
    }
}
