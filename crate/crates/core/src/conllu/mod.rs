//! CoNLL-U ingestion: the dependency-annotated substrate every other module
//! reads from.
//!
//! Only the fields the toolkit actually consults are modelled (ID, FORM,
//! LEMMA, UPOS, FEATS, HEAD, DEPREL). XPOS, DEPS and MISC are accepted on
//! input and written back as `_`. Multiword-token ranges (`3-4`) and empty
//! nodes (`5.1`) are skipped.
//!
//! Annotation conventions follow Universal Dependencies: `Number=Sing|Plur`,
//! `Gender=Masc|Fem`, `VerbForm=Fin|Part|Inf`, `Tense=Past|Pres`, and the
//! usual `nsubj` / `obj` / `acl:relcl` / `aux` relations.

mod vocab;

pub use vocab::{build_vocab, VocabError, VocabOptions, Vocabulary, BOS, EOS, UNK};

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Morphological feature map. Ordered so that serialization is canonical.
pub type Feats = BTreeMap<String, String>;

/// Grammatical number, the only agreement feature this toolkit scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Number {
    Sing,
    Plur,
}

impl Number {
    pub fn opposite(self) -> Number {
        match self {
            Number::Sing => Number::Plur,
            Number::Plur => Number::Sing,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Number::Sing => "Sing",
            Number::Plur => "Plur",
        }
    }

    pub fn parse(s: &str) -> Option<Number> {
        match s {
            "Sing" => Some(Number::Sing),
            "Plur" => Some(Number::Plur),
            _ => None,
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based position within the sentence.
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub feats: Feats,
    /// Governor id, 0 for the root.
    pub head: usize,
    pub deprel: String,
}

impl Token {
    pub fn feat(&self, key: &str) -> Option<&str> {
        self.feats.get(key).map(String::as_str)
    }

    pub fn number(&self) -> Option<Number> {
        self.feat("Number").and_then(Number::parse)
    }

    /// NOUN or PROPN.
    pub fn is_nominal(&self) -> bool {
        self.upos == "NOUN" || self.upos == "PROPN"
    }

    /// True for `que` and its elided form `qu'`, case-insensitively.
    pub fn is_que(&self) -> bool {
        is_que_form(&self.form)
    }

    pub fn is_finite(&self) -> bool {
        self.feat("VerbForm") == Some("Fin")
    }

    /// Relation label without its subtype (`aux:tense` -> `aux`).
    pub fn base_deprel(&self) -> &str {
        self.deprel.split(':').next().unwrap_or("")
    }
}

/// Normalizes elided `qu'` (and the typographic apostrophe) to `que`.
pub fn is_que_form(form: &str) -> bool {
    let lower = form.to_lowercase();
    matches!(lower.as_str(), "que" | "qu'" | "qu’")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub sent_id: String,
    pub tokens: Vec<Token>,
    pub text: Option<String>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token by 1-based id.
    pub fn token(&self, id: usize) -> &Token {
        &self.tokens[id - 1]
    }

    pub fn get(&self, id: usize) -> Option<&Token> {
        id.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    /// Ids of the tokens governed by `id`, in sentence order.
    pub fn children(&self, id: usize) -> impl Iterator<Item = &Token> + '_ {
        self.tokens.iter().filter(move |t| t.head == id)
    }

    pub fn forms(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.form.clone()).collect()
    }

    /// Space-joined forms.
    pub fn surface(&self) -> String {
        self.tokens.iter().map(|t| t.form.as_str()).collect::<Vec<_>>().join(" ")
    }

    /// Checks the structural invariants: contiguous ids, heads in range,
    /// no self-loops, exactly one root.
    pub fn validate(&self) -> Result<(), ConlluError> {
        let n = self.tokens.len();
        for (i, t) in self.tokens.iter().enumerate() {
            if t.id != i + 1 {
                return Err(ConlluError::NonContiguousIds {
                    sent_id: self.sent_id.clone(),
                    line: 0,
                    expected: i + 1,
                    found: t.id,
                });
            }
            if t.head > n || t.head == t.id {
                return Err(ConlluError::InvalidHead {
                    sent_id: self.sent_id.clone(),
                    line: 0,
                    id: t.id,
                    head: t.head,
                });
            }
        }
        let roots = self.tokens.iter().filter(|t| t.head == 0).count();
        match roots {
            1 => Ok(()),
            0 => Err(ConlluError::MissingRoot { sent_id: self.sent_id.clone(), line: 0 }),
            k => Err(ConlluError::MultipleRoots { sent_id: self.sent_id.clone(), line: 0, count: k }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub source_name: String,
}

impl Corpus {
    pub fn new(source_name: impl Into<String>) -> Self {
        Corpus { sentences: Vec::new(), source_name: source_name.into() }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    pub fn find(&self, sent_id: &str) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.sent_id == sent_id)
    }

    /// Map from sentence id to sentence, for instance lookups.
    pub fn index(&self) -> BTreeMap<&str, &Sentence> {
        self.sentences.iter().map(|s| (s.sent_id.as_str(), s)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConlluError {
    #[error("{sent_id}, line {line}: malformed line ({reason})")]
    MalformedLine { sent_id: String, line: usize, reason: String },
    #[error("{sent_id}, line {line}: non-contiguous token ids (expected {expected}, found {found})")]
    NonContiguousIds { sent_id: String, line: usize, expected: usize, found: usize },
    #[error("{sent_id}, line {line}: no token has head 0")]
    MissingRoot { sent_id: String, line: usize },
    #[error("{sent_id}, line {line}: {count} tokens have head 0")]
    MultipleRoots { sent_id: String, line: usize, count: usize },
    #[error("{sent_id}, line {line}: token {id} has invalid head {head}")]
    InvalidHead { sent_id: String, line: usize, id: usize, head: usize },
    #[error("{sent_id}, line {line}: duplicate sentence id")]
    DuplicateSentId { sent_id: String, line: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<io::Error> for ConlluError {
    fn from(e: io::Error) -> Self {
        ConlluError::Io(e.to_string())
    }
}

/// Whether a malformed sentence aborts the parse or is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    Strict,
    #[default]
    Lenient,
}

#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub corpus: Corpus,
    /// Sentences dropped in lenient mode, with the reason.
    pub dropped: Vec<ConlluError>,
}

struct Block {
    start_line: usize,
    sent_id: Option<String>,
    text: Option<String>,
    lines: Vec<(usize, String)>,
}

/// Parses a CoNLL-U stream. Sentence order is preserved.
pub fn parse_conllu<R: BufRead>(
    reader: R,
    source_name: &str,
    mode: ParseMode,
) -> Result<ParseOutcome, ConlluError> {
    let mut corpus = Corpus::new(source_name);
    let mut dropped = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut ordinal = 0usize;

    let mut block: Option<Block> = None;
    let mut flush = |block: Block, corpus: &mut Corpus, dropped: &mut Vec<ConlluError>| {
        ordinal += 1;
        let result = build_sentence(block, ordinal).and_then(|s| match s {
            Some(s) if seen.contains(&s.sent_id) => Err(ConlluError::DuplicateSentId {
                sent_id: s.sent_id.clone(),
                line: 0,
            }),
            other => Ok(other),
        });
        match result {
            Ok(Some(s)) => {
                seen.insert(s.sent_id.clone());
                corpus.sentences.push(s);
                Ok(())
            }
            Ok(None) => Ok(()),
            Err(e) if mode == ParseMode::Lenient => {
                log::warn!("dropping sentence: {e}");
                dropped.push(e);
                Ok(())
            }
            Err(e) => Err(e),
        }
    };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line).to_string();
        if line.trim().is_empty() {
            if let Some(b) = block.take() {
                flush(b, &mut corpus, &mut dropped)?;
            }
            continue;
        }
        let b = block.get_or_insert_with(|| Block {
            start_line: lineno,
            sent_id: None,
            text: None,
            lines: Vec::new(),
        });
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("sent_id") {
                if let Some(v) = v.trim_start().strip_prefix('=') {
                    b.sent_id = Some(v.trim().to_string());
                }
            } else if let Some(v) = comment.strip_prefix("text") {
                if let Some(v) = v.trim_start().strip_prefix('=') {
                    b.text = Some(v.trim().to_string());
                }
            }
            continue;
        }
        b.lines.push((lineno, line));
    }
    if let Some(b) = block.take() {
        flush(b, &mut corpus, &mut dropped)?;
    }
    Ok(ParseOutcome { corpus, dropped })
}

pub fn parse_str(input: &str, source_name: &str, mode: ParseMode) -> Result<ParseOutcome, ConlluError> {
    parse_conllu(input.as_bytes(), source_name, mode)
}

/// Parses several files and concatenates them in argument order.
pub fn parse_files<P: AsRef<Path>>(paths: &[P], mode: ParseMode) -> Result<ParseOutcome, ConlluError> {
    let name = paths
        .iter()
        .map(|p| p.as_ref().display().to_string())
        .collect::<Vec<_>>()
        .join(",");
    let mut corpus = Corpus::new(name);
    let mut dropped = Vec::new();
    let mut seen = HashSet::new();
    for p in paths {
        let file = File::open(p.as_ref())?;
        let src = p.as_ref().display().to_string();
        let out = parse_conllu(BufReader::new(file), &src, mode)?;
        dropped.extend(out.dropped);
        for s in out.corpus.sentences {
            if !seen.insert(s.sent_id.clone()) {
                let e = ConlluError::DuplicateSentId { sent_id: s.sent_id.clone(), line: 0 };
                if mode == ParseMode::Strict {
                    return Err(e);
                }
                dropped.push(e);
                continue;
            }
            corpus.sentences.push(s);
        }
    }
    Ok(ParseOutcome { corpus, dropped })
}

fn empty_to_underscore(s: &str) -> &str {
    if s.is_empty() {
        "_"
    } else {
        s
    }
}

fn underscore_to_empty(s: &str) -> String {
    if s == "_" {
        String::new()
    } else {
        s.to_string()
    }
}

fn build_sentence(block: Block, ordinal: usize) -> Result<Option<Sentence>, ConlluError> {
    let sent_id = block.sent_id.clone().unwrap_or_else(|| format!("s{ordinal}"));
    let malformed = |line: usize, reason: String| ConlluError::MalformedLine {
        sent_id: sent_id.clone(),
        line,
        reason,
    };
    let mut tokens = Vec::with_capacity(block.lines.len());
    let mut last_line = block.start_line;
    for (lineno, line) in &block.lines {
        last_line = *lineno;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(malformed(*lineno, format!("expected 10 columns, found {}", cols.len())));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| malformed(*lineno, format!("bad id {:?}", cols[0])))?;
        if id == 0 {
            return Err(malformed(*lineno, "token id 0".into()));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| malformed(*lineno, format!("bad head {:?}", cols[6])))?;
        let feats = parse_feats(cols[5]).map_err(|r| malformed(*lineno, r))?;
        let expected = tokens.len() + 1;
        if id != expected {
            return Err(ConlluError::NonContiguousIds {
                sent_id: sent_id.clone(),
                line: *lineno,
                expected,
                found: id,
            });
        }
        tokens.push(Token {
            id,
            form: cols[1].to_string(),
            lemma: underscore_to_empty(cols[2]),
            upos: underscore_to_empty(cols[3]),
            feats,
            head,
            deprel: underscore_to_empty(cols[7]),
        });
    }
    if tokens.is_empty() {
        return Ok(None);
    }
    let sentence = Sentence { sent_id, tokens, text: block.text };
    sentence.validate().map_err(|e| with_line(e, last_line))?;
    Ok(Some(sentence))
}

fn with_line(e: ConlluError, l: usize) -> ConlluError {
    match e {
        ConlluError::NonContiguousIds { sent_id, expected, found, .. } => {
            ConlluError::NonContiguousIds { sent_id, line: l, expected, found }
        }
        ConlluError::MissingRoot { sent_id, .. } => ConlluError::MissingRoot { sent_id, line: l },
        ConlluError::MultipleRoots { sent_id, count, .. } => {
            ConlluError::MultipleRoots { sent_id, line: l, count }
        }
        ConlluError::InvalidHead { sent_id, id, head, .. } => {
            ConlluError::InvalidHead { sent_id, line: l, id, head }
        }
        other => other,
    }
}

/// Parses `a=b|c=d`; `_` is the empty map.
pub fn parse_feats(s: &str) -> Result<Feats, String> {
    let mut feats = Feats::new();
    if s == "_" || s.is_empty() {
        return Ok(feats);
    }
    for pair in s.split('|') {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| format!("feature without '=': {pair:?}"))?;
        if k.is_empty() || v.is_empty() {
            return Err(format!("empty feature key or value: {pair:?}"));
        }
        if feats.insert(k.to_string(), v.to_string()).is_some() {
            return Err(format!("duplicate feature key {k:?}"));
        }
    }
    Ok(feats)
}

pub fn format_feats(feats: &Feats) -> String {
    if feats.is_empty() {
        return "_".to_string();
    }
    feats.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join("|")
}

pub fn write_sentence<W: Write>(out: &mut W, s: &Sentence) -> io::Result<()> {
    writeln!(out, "# sent_id = {}", s.sent_id)?;
    if let Some(text) = &s.text {
        writeln!(out, "# text = {text}")?;
    }
    for t in &s.tokens {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t_\t{}\t{}\t{}\t_\t_",
            t.id,
            t.form,
            empty_to_underscore(&t.lemma),
            empty_to_underscore(&t.upos),
            format_feats(&t.feats),
            t.head,
            empty_to_underscore(&t.deprel),
        )?;
    }
    writeln!(out)
}

/// Writes the corpus as CoNLL-U, one blank line after each sentence.
pub fn serialize_conllu<W: Write>(out: &mut W, corpus: &Corpus) -> io::Result<()> {
    for s in &corpus.sentences {
        write_sentence(out, s)?;
    }
    Ok(())
}

pub fn to_conllu_string(corpus: &Corpus) -> String {
    let mut buf = Vec::new();
    serialize_conllu(&mut buf, corpus).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("corpus fields are UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "1\tchats\tchat\tNOUN\t_\tNumber=Plur\t0\troot\t_\t_\n";

    #[test]
    fn minimal_sentence() {
        let out = parse_str(MINIMAL, "t", ParseMode::Strict).unwrap();
        assert_eq!(out.corpus.len(), 1);
        let s = &out.corpus.sentences[0];
        assert_eq!(s.len(), 1);
        assert_eq!(s.tokens[0].feats.get("Number").map(String::as_str), Some("Plur"));
        assert_eq!(s.tokens[0].number(), Some(Number::Plur));
    }

    #[test]
    fn serialize_minimal_gives_same_line_back() {
        let out = parse_str(MINIMAL, "t", ParseMode::Strict).unwrap();
        let text = to_conllu_string(&out.corpus);
        let token_line = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(format!("{token_line}\n"), MINIMAL);
    }

    #[test]
    fn empty_corpus_serializes_to_nothing() {
        assert_eq!(to_conllu_string(&Corpus::new("e")), "");
    }

    #[test]
    fn skips_ranges_and_empty_nodes() {
        let input = "# sent_id = a\n1-2\tau\t_\t_\t_\t_\t_\t_\t_\t_\n1\tà\tà\tADP\t_\t_\t3\tcase\t_\t_\n2\tle\tle\tDET\t_\tNumber=Sing\t3\tdet\t_\t_\n2.1\tx\t_\t_\t_\t_\t_\t_\t_\t_\n3\tgrade\tgrade\tNOUN\t_\tNumber=Sing\t0\troot\t_\t_\n";
        let out = parse_str(input, "t", ParseMode::Strict).unwrap();
        assert_eq!(out.corpus.sentences[0].len(), 3);
    }

    #[test]
    fn wrong_column_count_reports_line() {
        let input = "# sent_id = bad\n1\tchats\tchat\tNOUN\n";
        let err = parse_str(input, "t", ParseMode::Strict).unwrap_err();
        assert!(matches!(err, ConlluError::MalformedLine { ref sent_id, line: 2, .. } if sent_id == "bad"));
    }

    #[test]
    fn non_contiguous_ids() {
        let input = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n3\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n";
        let err = parse_str(input, "t", ParseMode::Strict).unwrap_err();
        assert!(matches!(err, ConlluError::NonContiguousIds { expected: 2, found: 3, line: 2, .. }));
    }

    #[test]
    fn missing_root() {
        let input = "1\ta\ta\tX\t_\t_\t2\tdep\t_\t_\n2\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n";
        let err = parse_str(input, "t", ParseMode::Strict).unwrap_err();
        assert!(matches!(err, ConlluError::MissingRoot { .. }));
    }

    #[test]
    fn lenient_mode_drops_bad_sentences() {
        let input = format!(
            "# sent_id = bad\n1\ta\ta\tX\t_\t_\t2\tdep\t_\t_\n2\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n\n# sent_id = good\n{MINIMAL}"
        );
        let out = parse_str(&input, "t", ParseMode::Lenient).unwrap();
        assert_eq!(out.corpus.len(), 1);
        assert_eq!(out.corpus.sentences[0].sent_id, "good");
        assert_eq!(out.dropped.len(), 1);
        assert!(parse_str(&input, "t", ParseMode::Strict).is_err());
    }

    #[test]
    fn duplicate_feature_key_is_malformed() {
        let input = "1\ta\ta\tX\t_\tNumber=Sing|Number=Plur\t0\troot\t_\t_\n";
        assert!(matches!(
            parse_str(input, "t", ParseMode::Strict),
            Err(ConlluError::MalformedLine { .. })
        ));
    }

    #[test]
    fn self_loop_head_rejected() {
        let input = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t2\tdep\t_\t_\n";
        assert!(matches!(
            parse_str(input, "t", ParseMode::Strict),
            Err(ConlluError::InvalidHead { id: 2, head: 2, .. })
        ));
    }

    #[test]
    fn duplicate_sent_ids() {
        let input = format!("# sent_id = x\n{MINIMAL}\n# sent_id = x\n{MINIMAL}");
        assert!(matches!(
            parse_str(&input, "t", ParseMode::Strict),
            Err(ConlluError::DuplicateSentId { .. })
        ));
        let out = parse_str(&input, "t", ParseMode::Lenient).unwrap();
        assert_eq!(out.corpus.len(), 1);
    }

    #[test]
    fn order_is_preserved() {
        let input = format!("# sent_id = b\n{MINIMAL}\n# sent_id = a\n{MINIMAL}\n# sent_id = c\n{MINIMAL}");
        let out = parse_str(&input, "t", ParseMode::Strict).unwrap();
        let ids: Vec<_> = out.corpus.sentences.iter().map(|s| s.sent_id.as_str()).collect();
        assert_eq!(ids, ["b", "a", "c"]);
    }

    #[test]
    fn que_normalization() {
        assert!(is_que_form("que"));
        assert!(is_que_form("qu'"));
        assert!(is_que_form("Qu’"));
        assert!(!is_que_form("qui"));
    }
}
