use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Write};

use sha2::{Digest, Sha256};

use super::Corpus;

pub const BOS: usize = 0;
pub const EOS: usize = 1;
pub const UNK: usize = 2;

const RESERVED: [&str; 3] = ["<bos>", "<eos>", "<unk>"];
const HEADER: &str = "#accord-vocab";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VocabOptions {
    /// Lowercase forms before counting and encoding. Off by default: case
    /// carries no number information but collapsing it changes the event space.
    pub lowercase: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum VocabError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("min_freq must be at least 1")]
    InvalidMinFreq,
    #[error("vocabulary file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Dense form-to-id map with reserved `<bos>`, `<eos>`, `<unk>` at 0, 1, 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    forms: Vec<String>,
    freqs: Vec<u64>,
    index: HashMap<String, usize>,
    lowercase: bool,
}

/// Counts forms and keeps those seen at least `min_freq` times. Ids after the
/// reserved markers are assigned by decreasing frequency, ties broken by form.
pub fn build_vocab(corpus: &Corpus, min_freq: u64, options: VocabOptions) -> Result<Vocabulary, VocabError> {
    if min_freq < 1 {
        return Err(VocabError::InvalidMinFreq);
    }
    if corpus.token_count() == 0 {
        return Err(VocabError::EmptyCorpus);
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for s in &corpus.sentences {
        for t in &s.tokens {
            let form = if options.lowercase { t.form.to_lowercase() } else { t.form.clone() };
            *counts.entry(form).or_default() += 1;
        }
    }
    let mut kept: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|(f, c)| *c >= min_freq && !RESERVED.contains(&f.as_str()))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut forms: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
    let mut freqs = vec![0u64; RESERVED.len()];
    for (f, c) in kept {
        forms.push(f);
        freqs.push(c);
    }
    Ok(Vocabulary::from_parts(forms, freqs, options.lowercase))
}

impl Vocabulary {
    fn from_parts(forms: Vec<String>, freqs: Vec<u64>, lowercase: bool) -> Self {
        let index = forms.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        Vocabulary { forms, freqs, index, lowercase }
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    /// Id of `form`, or [`UNK`] when it is out of vocabulary.
    pub fn encode(&self, form: &str) -> usize {
        self.get(form).unwrap_or(UNK)
    }

    /// Id of `form` if it is in the vocabulary.
    pub fn get(&self, form: &str) -> Option<usize> {
        if self.lowercase {
            self.index.get(&form.to_lowercase()).copied()
        } else {
            self.index.get(form).copied()
        }
    }

    pub fn contains(&self, form: &str) -> bool {
        self.get(form).is_some_and(|id| id >= RESERVED.len())
    }

    pub fn decode(&self, id: usize) -> Option<&str> {
        self.forms.get(id).map(String::as_str)
    }

    pub fn freq(&self, id: usize) -> u64 {
        self.freqs.get(id).copied().unwrap_or(0)
    }

    /// `<bos>` followed by the encoded forms.
    pub fn encode_with_bos<'a, I: IntoIterator<Item = &'a str>>(&self, forms: I) -> Vec<usize> {
        std::iter::once(BOS).chain(forms.into_iter().map(|f| self.encode(f))).collect()
    }

    pub fn write<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{HEADER}\tv{FORMAT_VERSION}\tlowercase={}", self.lowercase)?;
        for (i, (f, c)) in self.forms.iter().zip(&self.freqs).enumerate() {
            writeln!(out, "{f}\t{i}\t{c}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("forms are UTF-8")
    }

    /// SHA-256 of the serialized vocabulary; checkpoints record it.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Vocabulary, VocabError> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| VocabError::Format("missing header".into()))??;
        let mut parts = header.split('\t');
        if parts.next() != Some(HEADER) {
            return Err(VocabError::Format(format!("bad header {header:?}")));
        }
        if parts.next() != Some(&format!("v{FORMAT_VERSION}")) {
            return Err(VocabError::Format(format!("unsupported version in {header:?}")));
        }
        let lowercase = match parts.next() {
            Some("lowercase=true") => true,
            Some("lowercase=false") | None => false,
            Some(other) => return Err(VocabError::Format(format!("bad option {other:?}"))),
        };
        let mut forms = Vec::new();
        let mut freqs = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(VocabError::Format(format!("line {}: expected 3 columns", n + 2)));
            }
            let id: usize = cols[1]
                .parse()
                .map_err(|_| VocabError::Format(format!("line {}: bad id", n + 2)))?;
            if id != forms.len() {
                return Err(VocabError::Format(format!("line {}: ids must be dense", n + 2)));
            }
            let freq: u64 = cols[2]
                .parse()
                .map_err(|_| VocabError::Format(format!("line {}: bad frequency", n + 2)))?;
            forms.push(cols[0].to_string());
            freqs.push(freq);
        }
        if forms.len() < RESERVED.len() || forms.iter().zip(RESERVED).any(|(f, r)| f != r) {
            return Err(VocabError::Format("reserved markers missing".into()));
        }
        Ok(Vocabulary::from_parts(forms, freqs, lowercase))
    }
}
