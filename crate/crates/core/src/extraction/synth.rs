//! Template grammar producing French-like, dependency-annotated sentences
//! together with gold agreement annotations.
//!
//! Sentence shapes:
//!
//! * object focus: `[intro] SUBJ V OBJ-NP[rel] .` where the object carries an
//!   object relative (compound with *avoir* or simple present);
//! * subject focus: `[intro] SUBJ-NP[rel] V [OBJ] .` where the subject NP
//!   contains at least one object relative;
//! * fixed patterns: `DET N ADP N que PRON AUX PART` inside an object NP, and
//!   `DET N ADP N que PRON V V` as a subject;
//! * fillers without relative clauses.
//!
//! Relative subjects can themselves carry relatives, up to `max_depth`.
//! Gold instances are recorded while the tree is built, from the
//! generator's own bookkeeping rather than by pattern matching.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::conllu::{parse_feats, Corpus, Feats, Number, Sentence, Token};
use crate::util::rng;

use super::{AgreementInstance, AgreementKind, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gender {
    Masc,
    Fem,
}

impl Gender {
    fn as_str(self) -> &'static str {
        match self {
            Gender::Masc => "Masc",
            Gender::Fem => "Fem",
        }
    }
}

use Gender::{Fem, Masc};

const NOUNS: &[(&str, &str, Gender)] = &[
    ("chef", "chefs", Masc),
    ("femme", "femmes", Fem),
    ("roi", "rois", Masc),
    ("fille", "filles", Fem),
    ("garçon", "garçons", Masc),
    ("reine", "reines", Fem),
    ("voisin", "voisins", Masc),
    ("voisine", "voisines", Fem),
    ("livre", "livres", Masc),
    ("maison", "maisons", Fem),
    ("bureau", "bureaux", Masc),
    ("table", "tables", Fem),
    ("moment", "moments", Masc),
    ("lettre", "lettres", Fem),
    ("frère", "frères", Masc),
    ("sœur", "sœurs", Fem),
    ("soldat", "soldats", Masc),
    ("fleur", "fleurs", Fem),
    ("médecin", "médecins", Masc),
    ("porte", "portes", Fem),
    ("juge", "juges", Masc),
    ("route", "routes", Fem),
    ("paysan", "paysans", Masc),
    ("ville", "villes", Fem),
    ("marin", "marins", Masc),
    ("mère", "mères", Fem),
    ("prince", "princes", Masc),
    ("chanson", "chansons", Fem),
    ("cheval", "chevaux", Masc),
    ("robe", "robes", Fem),
    ("journal", "journaux", Masc),
    ("lampe", "lampes", Fem),
    ("tableau", "tableaux", Masc),
    ("pomme", "pommes", Fem),
    ("chapeau", "chapeaux", Masc),
    ("chaise", "chaises", Fem),
    ("docteur", "docteurs", Masc),
    ("voiture", "voitures", Fem),
    ("pêcheur", "pêcheurs", Masc),
    ("danseuse", "danseuses", Fem),
    ("professeur", "professeurs", Masc),
    ("chanteuse", "chanteuses", Fem),
    ("jardin", "jardins", Masc),
    ("princesse", "princesses", Fem),
    ("château", "châteaux", Masc),
    ("poule", "poules", Fem),
    ("bateau", "bateaux", Masc),
    ("vache", "vaches", Fem),
    ("gâteau", "gâteaux", Masc),
    ("chèvre", "chèvres", Fem),
    ("cadeau", "cadeaux", Masc),
    ("plume", "plumes", Fem),
    ("voleur", "voleurs", Masc),
    ("carte", "cartes", Fem),
    ("chien", "chiens", Masc),
    ("photo", "photos", Fem),
    ("loup", "loups", Masc),
    ("machine", "machines", Fem),
    ("peintre", "peintres", Masc),
    ("fenêtre", "fenêtres", Fem),
    ("ministre", "ministres", Masc),
    ("bouteille", "bouteilles", Fem),
    ("tigre", "tigres", Masc),
    ("montagne", "montagnes", Fem),
];

/// lemma, 3sg, 3pl, masculine singular participle.
const TRANSITIVE: &[(&str, &str, &str, &str)] = &[
    ("voir", "voit", "voient", "vu"),
    ("trouver", "trouve", "trouvent", "trouvé"),
    ("donner", "donne", "donnent", "donné"),
    ("regarder", "regarde", "regardent", "regardé"),
    ("chercher", "cherche", "cherchent", "cherché"),
    ("porter", "porte", "portent", "porté"),
    ("garder", "garde", "gardent", "gardé"),
    ("montrer", "montre", "montrent", "montré"),
    ("cacher", "cache", "cachent", "caché"),
    ("laver", "lave", "lavent", "lavé"),
    ("vendre", "vend", "vendent", "vendu"),
    ("perdre", "perd", "perdent", "perdu"),
    ("rendre", "rend", "rendent", "rendu"),
    ("défendre", "défend", "défendent", "défendu"),
    ("battre", "bat", "battent", "battu"),
    ("connaître", "connaît", "connaissent", "connu"),
    ("lire", "lit", "lisent", "lu"),
    ("choisir", "choisit", "choisissent", "choisi"),
    ("punir", "punit", "punissent", "puni"),
    ("servir", "sert", "servent", "servi"),
    ("suivre", "suit", "suivent", "suivi"),
    ("tenir", "tient", "tiennent", "tenu"),
    ("recevoir", "reçoit", "reçoivent", "reçu"),
    ("appeler", "appelle", "appellent", "appelé"),
    ("visiter", "visite", "visitent", "visité"),
    ("quitter", "quitte", "quittent", "quitté"),
    ("préparer", "prépare", "préparent", "préparé"),
    ("dessiner", "dessine", "dessinent", "dessiné"),
    ("saluer", "salue", "saluent", "salué"),
    ("sauver", "sauve", "sauvent", "sauvé"),
    ("réveiller", "réveille", "réveillent", "réveillé"),
    ("soigner", "soigne", "soignent", "soigné"),
    ("peindre", "peint", "peignent", "peint"),
    ("adopter", "adopte", "adoptent", "adopté"),
    ("accepter", "accepte", "acceptent", "accepté"),
    ("écrire", "écrit", "écrivent", "écrit"),
];

/// lemma, 3sg, 3pl.
const INTRANSITIVE: &[(&str, &str, &str)] = &[
    ("dormir", "dort", "dorment"),
    ("rester", "reste", "restent"),
    ("partir", "part", "partent"),
    ("arriver", "arrive", "arrivent"),
    ("tomber", "tombe", "tombent"),
    ("chanter", "chante", "chantent"),
    ("danser", "danse", "dansent"),
    ("rire", "rit", "rient"),
    ("pleurer", "pleure", "pleurent"),
    ("marcher", "marche", "marchent"),
    ("sourire", "sourit", "sourient"),
    ("travailler", "travaille", "travaillent"),
    ("venir", "vient", "viennent"),
    ("courir", "court", "courent"),
    ("vivre", "vit", "vivent"),
    ("parler", "parle", "parlent"),
    ("crier", "crie", "crient"),
    ("disparaître", "disparaît", "disparaissent"),
];

/// masc sg, fem sg, masc pl, fem pl.
const ADJECTIVES: &[(&str, &str, &str, &str)] = &[
    ("grand", "grande", "grands", "grandes"),
    ("petit", "petite", "petits", "petites"),
    ("joli", "jolie", "jolis", "jolies"),
    ("noir", "noire", "noirs", "noires"),
    ("blanc", "blanche", "blancs", "blanches"),
    ("vert", "verte", "verts", "vertes"),
    ("rouge", "rouge", "rouges", "rouges"),
    ("jeune", "jeune", "jeunes", "jeunes"),
    ("riche", "riche", "riches", "riches"),
    ("pauvre", "pauvre", "pauvres", "pauvres"),
    ("célèbre", "célèbre", "célèbres", "célèbres"),
    ("triste", "triste", "tristes", "tristes"),
    ("fort", "forte", "forts", "fortes"),
    ("lourd", "lourde", "lourds", "lourdes"),
    ("froid", "froide", "froids", "froides"),
    ("content", "contente", "contents", "contentes"),
    ("fier", "fière", "fiers", "fières"),
    ("gentil", "gentille", "gentils", "gentilles"),
    ("sombre", "sombre", "sombres", "sombres"),
    ("calme", "calme", "calmes", "calmes"),
];

const ADVERBS: &[&str] = &["souvent", "bien", "toujours", "encore", "déjà", "rarement", "vraiment", "beaucoup"];

const NAMES: &[(&str, Gender)] = &[
    ("Paul", Masc),
    ("Marie", Fem),
    ("Jean", Masc),
    ("Léa", Fem),
    ("Noûr", Fem),
    ("Pierre", Masc),
    ("Sophie", Fem),
    ("Louis", Masc),
    ("Claire", Fem),
    ("Hugo", Masc),
];

const PREPOSITIONS: &[&str] = &["avec", "sans", "pour", "sur", "dans", "chez", "contre"];
const BARE_PREPOSITIONS: &[&str] = &["en", "de"];

/// (ms, fs, pl, lemma, extra features)
const DETERMINERS: &[(&str, &str, &str, &str, &str)] = &[
    ("le", "la", "les", "le", "Definite=Def|PronType=Art"),
    ("un", "une", "des", "un", "Definite=Ind|PronType=Art"),
    ("ce", "cette", "ces", "ce", "PronType=Dem"),
    ("son", "sa", "ses", "son", "Poss=Yes|PronType=Prs"),
];

/// Head `-1` attaches to the main verb, otherwise to the intro-local index.
type IntroToken = (&'static str, &'static str, &'static str, &'static str, &'static str, i8);

const INTROS: &[&[IntroToken]] = &[
    &[("sans", "sans", "ADP", "_", "case", 1), ("doute", "doute", "NOUN", "Gender=Masc|Number=Sing", "obl:mod", -1)],
    &[
        ("ce", "ce", "DET", "Gender=Masc|Number=Sing|PronType=Dem", "det", 1),
        ("soir", "soir", "NOUN", "Gender=Masc|Number=Sing", "obl:mod", -1),
    ],
    &[("hier", "hier", "ADV", "_", "advmod", -1)],
    &[("en", "en", "ADP", "_", "case", 1), ("fait", "fait", "NOUN", "Gender=Masc|Number=Sing", "obl:mod", -1)],
    &[
        ("depuis", "depuis", "ADP", "_", "case", 2),
        ("des", "un", "DET", "Definite=Ind|Number=Plur|PronType=Art", "det", 2),
        ("années", "année", "NOUN", "Gender=Fem|Number=Plur", "obl:mod", -1),
    ],
    &[
        ("à", "à", "ADP", "_", "case", 2),
        ("ces", "ce", "DET", "Number=Plur|PronType=Dem", "det", 2),
        ("mots", "mot", "NOUN", "Gender=Masc|Number=Plur", "obl:mod", -1),
    ],
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("{key}: invalid value {value:?}")]
    Value { key: String, value: String },
    #[error("{key} = {value} is outside {range}")]
    Range { key: String, value: String, range: &'static str },
    #[error("{0}")]
    Io(String),
}

/// Generator knobs. Lexicon sizes are capped at the built-in list lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticGrammarConfig {
    pub sentences: usize,
    pub seed: u64,
    pub nouns: usize,
    pub transitive_verbs: usize,
    pub intransitive_verbs: usize,
    pub adjectives: usize,
    pub adverbs: usize,
    pub names: usize,
    /// Chance that an eligible embedded NP carries its own relative clause.
    pub relative_prob: f64,
    /// Chance that an NP gets a prepositional modifier.
    pub pp_prob: f64,
    /// Chance that a nested NP or pronoun departs from its governor's number.
    pub attractor_rate: f64,
    /// Share of plural among freshly drawn numbers.
    pub plural_rate: f64,
    /// Share of participles inflected against the agreement rule.
    pub violation_rate: f64,
    /// Share of object relatives in the compound past (the rest use the present).
    pub compound_rate: f64,
    pub fixed_pattern_rate: f64,
    pub filler_rate: f64,
    /// Among the remaining sentences, share built around the subject.
    pub subject_focus_rate: f64,
    pub adjective_prob: f64,
    pub adverb_prob: f64,
    pub intro_prob: f64,
    pub max_depth: usize,
}

impl Default for SyntheticGrammarConfig {
    fn default() -> Self {
        SyntheticGrammarConfig {
            sentences: 10_000,
            seed: 1,
            nouns: NOUNS.len(),
            transitive_verbs: TRANSITIVE.len(),
            intransitive_verbs: INTRANSITIVE.len(),
            adjectives: ADJECTIVES.len(),
            adverbs: ADVERBS.len(),
            names: NAMES.len(),
            relative_prob: 0.25,
            pp_prob: 0.4,
            attractor_rate: 0.5,
            plural_rate: 0.35,
            violation_rate: 0.0,
            compound_rate: 0.6,
            fixed_pattern_rate: 0.1,
            filler_rate: 0.2,
            subject_focus_rate: 0.5,
            adjective_prob: 0.2,
            adverb_prob: 0.1,
            intro_prob: 0.3,
            max_depth: 2,
        }
    }
}

macro_rules! config_fields {
    ($m:ident) => {
        $m!(
            usize: sentences, nouns, transitive_verbs, intransitive_verbs, adjectives, adverbs, names, max_depth;
            u64: seed;
            f64: relative_prob, pp_prob, attractor_rate, plural_rate, violation_rate, compound_rate,
                 fixed_pattern_rate, filler_rate, subject_focus_rate, adjective_prob, adverb_prob, intro_prob
        )
    };
}

impl SyntheticGrammarConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SynthConfigError> {
        let bad = || SynthConfigError::Value { key: key.into(), value: value.into() };
        macro_rules! assign {
            (usize: $($u:ident),*; u64: $($s:ident),*; f64: $($f:ident),*) => {
                match key {
                    $(stringify!($u) => self.$u = value.parse().map_err(|_| bad())?,)*
                    $(stringify!($s) => self.$s = value.parse().map_err(|_| bad())?,)*
                    $(stringify!($f) => self.$f = value.parse().map_err(|_| bad())?,)*
                    _ => return Err(SynthConfigError::UnknownKey { line: 0, key: key.into() }),
                }
            };
        }
        config_fields!(assign);
        Ok(())
    }

    /// Parses `key = value` lines over the defaults; `#` starts a comment.
    pub fn from_kv_str(text: &str) -> Result<Self, SynthConfigError> {
        let mut cfg = SyntheticGrammarConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(SynthConfigError::Syntax { line: i + 1 })?;
            cfg.set(k.trim(), v.trim()).map_err(|e| match e {
                SynthConfigError::UnknownKey { key, .. } => SynthConfigError::UnknownKey { line: i + 1, key },
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, SynthConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| SynthConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::from_kv_str(&text)
    }

    pub fn validate(&self) -> Result<(), SynthConfigError> {
        macro_rules! check {
            (usize: $($u:ident),*; u64: $($s:ident),*; f64: $($f:ident),*) => {
                $(if self.$u < 1 {
                    return Err(SynthConfigError::Range { key: stringify!($u).into(), value: self.$u.to_string(), range: ">= 1" });
                })*
                $(if !(0.0..=1.0).contains(&self.$f) {
                    return Err(SynthConfigError::Range { key: stringify!($f).into(), value: self.$f.to_string(), range: "[0, 1]" });
                })*
            };
        }
        config_fields!(check);
        Ok(())
    }
}

impl fmt::Display for SyntheticGrammarConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        macro_rules! show {
            (usize: $($u:ident),*; u64: $($s:ident),*; f64: $($g:ident),*) => {
                $(writeln!(f, "{} = {}", stringify!($u), self.$u)?;)*
                $(writeln!(f, "{} = {}", stringify!($s), self.$s)?;)*
                $(writeln!(f, "{} = {}", stringify!($g), self.$g)?;)*
            };
        }
        config_fields!(show);
        Ok(())
    }
}

impl FromStr for SyntheticGrammarConfig {
    type Err = SynthConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_kv_str(s)
    }
}

/// Per-gold-instance facts known only to the generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldDetail {
    /// Built by a fixed-pattern template.
    pub fixed_pattern: bool,
    /// The target's opposite-number form of the same lexeme.
    pub variant_form: String,
    /// The attested target number equals the cue number.
    pub compliant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Gold instances, per sentence ordered by kind then target.
    pub gold: Vec<AgreementInstance>,
    /// Parallel to `gold`.
    pub details: Vec<GoldDetail>,
}

/// Every surface form the grammar can emit under `cfg`'s lexicon sizes.
pub fn template_forms(cfg: &SyntheticGrammarConfig) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for &(s, p, _) in &NOUNS[..cfg.nouns.min(NOUNS.len())] {
        out.extend([s.into(), p.into()]);
    }
    for &(_, s, p, part) in &TRANSITIVE[..cfg.transitive_verbs.min(TRANSITIVE.len())] {
        out.extend([s.into(), p.into(), part.into(), format!("{part}e"), format!("{part}s"), format!("{part}es")]);
    }
    for &(_, s, p) in &INTRANSITIVE[..cfg.intransitive_verbs.min(INTRANSITIVE.len())] {
        out.extend([s.into(), p.into()]);
    }
    for &(a, b, c, d) in &ADJECTIVES[..cfg.adjectives.min(ADJECTIVES.len())] {
        out.extend([a.into(), b.into(), c.into(), d.into()]);
    }
    out.extend(ADVERBS[..cfg.adverbs.min(ADVERBS.len())].iter().map(|s| s.to_string()));
    out.extend(NAMES[..cfg.names.min(NAMES.len())].iter().map(|(s, _)| s.to_string()));
    out.extend(PREPOSITIONS.iter().chain(BARE_PREPOSITIONS).map(|s| s.to_string()));
    for &(a, b, c, _, _) in DETERMINERS {
        out.extend([a.into(), b.into(), c.into()]);
    }
    for intro in INTROS {
        out.extend(intro.iter().map(|t| t.0.to_string()));
    }
    out.extend(["que", "qui", "a", "ont", "il", "elle", "ils", "elles", "on", "."].map(String::from));
    out.sort();
    out.dedup();
    out
}

/// Deterministic corpus plus gold annotations.
pub fn generate_synthetic_corpus(cfg: &SyntheticGrammarConfig) -> SyntheticCorpus {
    let mut rng = rng(cfg.seed);
    let mut corpus = Corpus::new(format!("synthetic-seed{}", cfg.seed));
    let mut gold = Vec::new();
    let mut details = Vec::new();
    for i in 0..cfg.sentences {
        let sent_id = format!("synth-{:06}", i + 1);
        let mut b = Builder::new(cfg, &mut rng);
        b.sentence();
        let (sentence, g, d) = b.finish(sent_id);
        corpus.sentences.push(sentence);
        gold.extend(g);
        details.extend(d);
    }
    SyntheticCorpus { corpus, gold, details }
}

fn feats(s: &str) -> Feats {
    parse_feats(s).expect("built-in feature strings are well formed")
}

fn starts_with_vowel(s: &str) -> bool {
    s.chars()
        .next()
        .is_some_and(|c| "aeiouyàâéèêëîïôûAEIOUYÀÂÉÈÊÎÔÛ".contains(c))
}

struct Np {
    head: usize,
    number: Number,
    gender: Gender,
    deps: Vec<usize>,
    /// Object relative pronouns inside the NP, in order.
    ques: Vec<usize>,
    /// Pronoun of an object relative attached to the head itself.
    direct_que: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rel {
    None,
    Optional,
    /// An object relative on the head.
    Object,
    /// Any relative, provided the NP ends up containing an object relative.
    WithQue,
}

enum Subject {
    Noun(Np),
    Other { number: Number },
}

impl Subject {
    fn number(&self) -> Number {
        match self {
            Subject::Noun(np) => np.number,
            Subject::Other { number } => *number,
        }
    }
}

struct Gold {
    kind: AgreementKind,
    cue: usize,
    deps: Vec<usize>,
    que: usize,
    target: usize,
    fixed: bool,
}

struct Builder<'a> {
    cfg: &'a SyntheticGrammarConfig,
    rng: &'a mut ChaCha8Rng,
    toks: Vec<Token>,
    /// id -> number, for NOUN and PROPN tokens.
    nouns: BTreeMap<usize, Number>,
    relcl: Vec<usize>,
    variants: BTreeMap<usize, String>,
    gold: Vec<Gold>,
}

impl<'a> Builder<'a> {
    fn new(cfg: &'a SyntheticGrammarConfig, rng: &'a mut ChaCha8Rng) -> Self {
        Builder {
            cfg,
            rng,
            toks: Vec::new(),
            nouns: BTreeMap::new(),
            relcl: Vec::new(),
            variants: BTreeMap::new(),
            gold: Vec::new(),
        }
    }

    fn push(&mut self, form: &str, lemma: &str, upos: &str, f: Feats, deprel: &str) -> usize {
        let id = self.toks.len() + 1;
        self.toks.push(Token {
            id,
            form: form.into(),
            lemma: lemma.into(),
            upos: upos.into(),
            feats: f,
            head: 0,
            deprel: deprel.into(),
        });
        id
    }

    fn attach(&mut self, dep: usize, head: usize) {
        self.toks[dep - 1].head = head;
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn pick<T: Copy>(&mut self, items: &[T], cap: usize) -> T {
        let n = cap.clamp(1, items.len());
        items[self.rng.gen_range(0..n)]
    }

    fn fresh_number(&mut self) -> Number {
        if self.chance(self.cfg.plural_rate) {
            Number::Plur
        } else {
            Number::Sing
        }
    }

    /// Number of a non-cue dependent: flipped with the attractor rate.
    fn dependent_number(&mut self, governor: Number) -> Number {
        if self.chance(self.cfg.attractor_rate) {
            governor.opposite()
        } else {
            governor
        }
    }

    /// Number of an embedded NP that may itself be a cue: with the attractor
    /// rate it is redrawn from the plural rate, otherwise copied. This keeps
    /// the plural share of cues at the configured rate at every depth.
    fn embedded_number(&mut self, governor: Number) -> Number {
        if self.chance(self.cfg.attractor_rate) {
            self.fresh_number()
        } else {
            governor
        }
    }

    /// Masculine determiner; `fix_determiner` adjusts it once the noun is known.
    fn determiner(&mut self, number: Number) -> usize {
        let (ms, _, pl, lemma, extra) = self.pick(DETERMINERS, DETERMINERS.len());
        let (form, f) = match number {
            Number::Plur => (pl, format!("{extra}|Number=Plur")),
            Number::Sing => (ms, format!("{extra}|Gender=Masc|Number=Sing")),
        };
        self.push(form, lemma, "DET", feats(&f), "det")
    }

    fn noun(&mut self, number: Number, deprel: &str) -> (usize, Gender) {
        let (sg, pl, gender) = self.pick(NOUNS, self.cfg.nouns);
        let form = if number == Number::Sing { sg } else { pl };
        let f = format!("Gender={}|Number={}", gender.as_str(), number);
        let id = self.push(form, sg, "NOUN", feats(&f), deprel);
        self.nouns.insert(id, number);
        (id, gender)
    }

    fn adjective(&mut self, head: usize, number: Number, gender: Gender) -> usize {
        let (ms, fs, mp, fp) = self.pick(ADJECTIVES, self.cfg.adjectives);
        let form = match (gender, number) {
            (Masc, Number::Sing) => ms,
            (Fem, Number::Sing) => fs,
            (Masc, Number::Plur) => mp,
            (Fem, Number::Plur) => fp,
        };
        let f = format!("Gender={}|Number={}", gender.as_str(), number);
        let id = self.push(form, ms, "ADJ", feats(&f), "amod");
        self.attach(id, head);
        id
    }

    fn adverb(&mut self) -> usize {
        let form = self.pick(ADVERBS, self.cfg.adverbs);
        self.push(form, form, "ADV", Feats::new(), "advmod")
    }

    fn pronoun(&mut self, number: Number, deprel: &str) -> usize {
        let options: &[(&str, &str, &str)] = match number {
            Number::Sing => &[
                ("il", "il", "Gender=Masc|Number=Sing|Person=3|PronType=Prs"),
                ("elle", "il", "Gender=Fem|Number=Sing|Person=3|PronType=Prs"),
                ("on", "on", "Number=Sing|Person=3|PronType=Ind"),
            ],
            Number::Plur => &[
                ("ils", "il", "Gender=Masc|Number=Plur|Person=3|PronType=Prs"),
                ("elles", "il", "Gender=Fem|Number=Plur|Person=3|PronType=Prs"),
            ],
        };
        let (form, lemma, f) = self.pick(options, options.len());
        self.push(form, lemma, "PRON", feats(f), deprel)
    }

    fn name(&mut self, deprel: &str) -> usize {
        let (form, gender) = self.pick(NAMES, self.cfg.names);
        let f = format!("Gender={}|Number=Sing", gender.as_str());
        let id = self.push(form, form, "PROPN", feats(&f), deprel);
        self.nouns.insert(id, Number::Sing);
        id
    }

    fn finite_feats(number: Number) -> Feats {
        feats(&format!("Mood=Ind|Number={number}|Person=3|Tense=Pres|VerbForm=Fin"))
    }

    fn finite_verb(&mut self, transitive: bool, number: Number, deprel: &str) -> usize {
        let (lemma, sg, pl) = if transitive {
            let (l, s, p, _) = self.pick(TRANSITIVE, self.cfg.transitive_verbs);
            (l, s, p)
        } else {
            self.pick(INTRANSITIVE, self.cfg.intransitive_verbs)
        };
        let (form, other) = if number == Number::Sing { (sg, pl) } else { (pl, sg) };
        let id = self.push(form, lemma, "VERB", Self::finite_feats(number), deprel);
        self.variants.insert(id, other.into());
        id
    }

    fn auxiliary(&mut self, number: Number) -> usize {
        let (form, other) = if number == Number::Sing { ("a", "ont") } else { ("ont", "a") };
        let id = self.push(form, "avoir", "AUX", Self::finite_feats(number), "aux:tense");
        self.variants.insert(id, other.into());
        id
    }

    fn participle(&mut self, number: Number, gender: Gender) -> usize {
        let (lemma, _, _, stem) = self.pick(TRANSITIVE, self.cfg.transitive_verbs);
        let cell = |n: Number| {
            let g = if gender == Fem { "e" } else { "" };
            let s = if n == Number::Plur { "s" } else { "" };
            format!("{stem}{g}{s}")
        };
        let f = format!("Gender={}|Number={number}|Tense=Past|VerbForm=Part", gender.as_str());
        let id = self.push(&cell(number), lemma, "VERB", feats(&f), "acl:relcl");
        self.variants.insert(id, cell(number.opposite()));
        id
    }

    fn intro(&mut self) -> Vec<usize> {
        let choice = self.rng.gen_range(0..INTROS.len());
        let base = self.toks.len() + 1;
        let mut to_root = Vec::new();
        for &(form, lemma, upos, f, deprel, head) in INTROS[choice] {
            let id = self.push(form, lemma, upos, feats(f), deprel);
            if upos == "NOUN" {
                let n = self.toks[id - 1].number().expect("intro nouns carry Number");
                self.nouns.insert(id, n);
            }
            if head < 0 {
                to_root.push(id);
            } else {
                self.attach(id, base + head as usize);
            }
        }
        to_root
    }

    /// `DET N [ADJ] [PP] [relative]`; the head's relation is set by the caller.
    fn noun_np(&mut self, number: Number, depth: usize, allow_pp: bool, rel: Rel) -> Np {
        let det = self.determiner(number);
        let (head, gender) = self.noun(number, "");
        self.fix_determiner(det, number, gender);
        self.attach(det, head);
        let mut deps = vec![det];
        if self.chance(self.cfg.adjective_prob) {
            deps.push(self.adjective(head, number, gender));
        }
        if allow_pp && self.chance(self.cfg.pp_prob) {
            self.prepositional(head, number);
        }
        let mut np = Np { head, number, gender, deps, ques: Vec::new(), direct_que: None };
        let can_nest = depth < self.cfg.max_depth;
        match rel {
            Rel::None => {}
            Rel::Optional => {
                if can_nest && self.chance(self.cfg.relative_prob) {
                    let kind = self.rng.gen_range(0..3);
                    if kind < 2 {
                        self.object_relative(&mut np, depth + 1);
                    } else {
                        self.qui_relative(&mut np, depth + 1, false);
                    }
                }
            }
            Rel::Object => self.object_relative(&mut np, depth + 1),
            Rel::WithQue => {
                // A qui-relative only guarantees a que when its object can nest.
                if depth + 2 <= self.cfg.max_depth && self.chance(1.0 / 3.0) {
                    self.qui_relative(&mut np, depth + 1, true);
                } else {
                    self.object_relative(&mut np, depth + 1);
                }
            }
        }
        np
    }

    fn fix_determiner(&mut self, det: usize, number: Number, gender: Gender) {
        if number == Number::Plur || gender == Masc {
            return;
        }
        let lemma = self.toks[det - 1].lemma.clone();
        let &(_, fs, _, _, extra) = DETERMINERS.iter().find(|d| d.3 == lemma).expect("known determiner");
        let tok = &mut self.toks[det - 1];
        tok.form = fs.into();
        tok.feats = feats(&format!("{extra}|Gender=Fem|Number=Sing"));
    }

    /// `ADP DET N` modifying `head`.
    fn prepositional(&mut self, head: usize, governor: Number) {
        let prep = self.pick(PREPOSITIONS, PREPOSITIONS.len());
        let adp = self.push(prep, prep, "ADP", Feats::new(), "case");
        let number = self.dependent_number(governor);
        let det = self.determiner(number);
        let (noun, gender) = self.noun(number, "nmod");
        self.fix_determiner(det, number, gender);
        self.attach(adp, noun);
        self.attach(det, noun);
        self.attach(noun, head);
    }

    /// Subject of a relative clause whose antecedent has `governor` number.
    fn relative_subject(&mut self, governor: Number, depth: usize) -> Subject {
        let r: f64 = self.rng.gen();
        if r < 0.3 {
            let number = self.dependent_number(governor);
            self.pronoun(number, "nsubj");
            return Subject::Other { number };
        }
        let number = self.embedded_number(governor);
        if r < 0.45 && number == Number::Sing {
            self.name("nsubj");
            return Subject::Other { number };
        }
        let np = self.noun_np(number, depth, true, Rel::Optional);
        self.toks[np.head - 1].deprel = "nsubj".into();
        Subject::Noun(np)
    }

    /// `que SUBJ (AUX [ADV] PART | V)` attached to `np`'s head.
    fn object_relative(&mut self, np: &mut Np, depth: usize) {
        let que = self.push("que", "que", "PRON", feats("PronType=Rel"), "obj");
        let subject = self.relative_subject(np.number, depth);
        let subject_head = match &subject {
            Subject::Noun(s) => s.head,
            Subject::Other { .. } => self.toks.len(),
        };
        let compound = self.chance(self.cfg.compound_rate);
        let (verb, finite) = if compound {
            let aux = self.auxiliary(subject.number());
            let adv = if self.chance(self.cfg.adverb_prob) { Some(self.adverb()) } else { None };
            let number = if self.chance(self.cfg.violation_rate) { np.number.opposite() } else { np.number };
            let part = self.participle(number, np.gender);
            self.attach(aux, part);
            if let Some(adv) = adv {
                self.attach(adv, part);
            }
            self.gold.push(Gold {
                kind: AgreementKind::ObjPp,
                cue: np.head,
                deps: np.deps.clone(),
                que,
                target: part,
                fixed: false,
            });
            (part, aux)
        } else {
            let v = self.finite_verb(true, subject.number(), "acl:relcl");
            (v, v)
        };
        self.attach(que, verb);
        self.attach(subject_head, verb);
        self.attach(verb, np.head);
        self.relcl.push(verb);
        let mut ques = vec![que];
        if let Subject::Noun(s) = &subject {
            ques.extend(&s.ques);
            self.clause_gold(s, finite, false);
        }
        np.ques.extend(ques);
        np.direct_que.get_or_insert(que);
    }

    /// `qui V OBJ-NP` attached to `np`'s head.
    fn qui_relative(&mut self, np: &mut Np, depth: usize, need_que: bool) {
        let qui = self.push("qui", "qui", "PRON", feats("PronType=Rel"), "nsubj");
        let v = self.finite_verb(true, np.number, "acl:relcl");
        let number = self.embedded_number(np.number);
        let rel = if need_que { Rel::Object } else { Rel::Optional };
        let obj = self.noun_np(number, depth, false, rel);
        self.toks[obj.head - 1].deprel = "obj".into();
        self.attach(qui, v);
        self.attach(obj.head, v);
        self.attach(v, np.head);
        self.relcl.push(v);
        np.ques.extend(&obj.ques);
    }

    /// Records a subject-verb instance when the nominal subject's span holds
    /// an object relative.
    fn clause_gold(&mut self, subject: &Np, finite: usize, fixed: bool) {
        let Some(que) = subject.direct_que.or_else(|| subject.ques.first().copied()) else { return };
        self.gold.push(Gold {
            kind: AgreementKind::SubjVerb,
            cue: subject.head,
            deps: subject.deps.clone(),
            que,
            target: finite,
            fixed,
        });
    }

    /// Main-clause subject without relatives.
    fn simple_subject(&mut self, allow_pp: bool) -> (usize, Number) {
        let r: f64 = self.rng.gen();
        let number = self.fresh_number();
        if r < 0.2 {
            (self.pronoun(number, "nsubj"), number)
        } else if r < 0.3 && number == Number::Sing {
            (self.name("nsubj"), number)
        } else {
            let np = self.noun_np(number, 0, allow_pp, Rel::None);
            self.toks[np.head - 1].deprel = "nsubj".into();
            (np.head, number)
        }
    }

    fn sentence(&mut self) {
        let to_root = if self.chance(self.cfg.intro_prob) { self.intro() } else { Vec::new() };
        let r: f64 = self.rng.gen();
        let fixed = self.cfg.fixed_pattern_rate;
        let root = if r < fixed / 2.0 {
            self.fixed_object()
        } else if r < fixed {
            self.fixed_subject()
        } else if r < fixed + self.cfg.filler_rate {
            self.filler()
        } else if self.chance(self.cfg.subject_focus_rate) {
            self.subject_focus()
        } else {
            self.object_focus()
        };
        for id in to_root {
            self.attach(id, root);
        }
        if self.chance(self.cfg.adverb_prob) {
            let adv = self.adverb();
            self.attach(adv, root);
        }
        let punct = self.push(".", ".", "PUNCT", Feats::new(), "punct");
        self.attach(punct, root);
    }

    fn object_focus(&mut self) -> usize {
        let (subj, number) = self.simple_subject(false);
        let root = self.finite_verb(true, number, "root");
        self.attach(subj, root);
        let n = self.fresh_number();
        let obj = self.noun_np(n, 0, true, Rel::Object);
        self.toks[obj.head - 1].deprel = "obj".into();
        self.attach(obj.head, root);
        root
    }

    fn subject_focus(&mut self) -> usize {
        let n = self.fresh_number();
        let subj = self.noun_np(n, 0, true, Rel::WithQue);
        self.toks[subj.head - 1].deprel = "nsubj".into();
        let transitive = self.chance(0.5);
        let root = self.finite_verb(transitive, n, "root");
        self.attach(subj.head, root);
        self.clause_gold(&subj, root, false);
        if transitive {
            let m = self.fresh_number();
            let obj = self.noun_np(m, 0, false, Rel::None);
            self.toks[obj.head - 1].deprel = "obj".into();
            self.attach(obj.head, root);
        }
        root
    }

    fn filler(&mut self) -> usize {
        let (subj, number) = self.simple_subject(true);
        let transitive = self.chance(0.5);
        let root = self.finite_verb(transitive, number, "root");
        self.attach(subj, root);
        if transitive {
            let m = self.fresh_number();
            let obj = self.noun_np(m, 0, true, Rel::None);
            self.toks[obj.head - 1].deprel = "obj".into();
            self.attach(obj.head, root);
        }
        root
    }

    /// `DET N ADP N que PRON` with the relative verb still to come.
    fn fixed_np(&mut self) -> (Np, usize, usize, Number) {
        let number = self.fresh_number();
        let det = self.determiner(number);
        let (head, gender) = self.noun(number, "");
        self.fix_determiner(det, number, gender);
        self.attach(det, head);
        let prep = self.pick(BARE_PREPOSITIONS, BARE_PREPOSITIONS.len());
        let adp = self.push(prep, prep, "ADP", Feats::new(), "case");
        let pp_number = self.dependent_number(number);
        let (pp, _) = self.noun(pp_number, "nmod");
        self.attach(adp, pp);
        self.attach(pp, head);
        let que = self.push("que", "que", "PRON", feats("PronType=Rel"), "obj");
        let pron_number = self.dependent_number(number);
        let pron = self.pronoun(pron_number, "nsubj");
        let np = Np { head, number, gender, deps: vec![det], ques: vec![que], direct_que: Some(que) };
        (np, que, pron, pron_number)
    }

    fn fixed_object(&mut self) -> usize {
        let (subj, number) = self.simple_subject(false);
        let root = self.finite_verb(true, number, "root");
        self.attach(subj, root);
        let (np, que, pron, pron_number) = self.fixed_np();
        let aux = self.auxiliary(pron_number);
        let target = if self.chance(self.cfg.violation_rate) { np.number.opposite() } else { np.number };
        let part = self.participle(target, np.gender);
        for dep in [que, pron, aux] {
            self.attach(dep, part);
        }
        self.attach(part, np.head);
        self.relcl.push(part);
        self.toks[np.head - 1].deprel = "obj".into();
        self.attach(np.head, root);
        self.gold.push(Gold {
            kind: AgreementKind::ObjPp,
            cue: np.head,
            deps: np.deps.clone(),
            que,
            target: part,
            fixed: true,
        });
        root
    }

    fn fixed_subject(&mut self) -> usize {
        let (np, que, pron, pron_number) = self.fixed_np();
        let v = self.finite_verb(true, pron_number, "acl:relcl");
        self.attach(que, v);
        self.attach(pron, v);
        self.attach(v, np.head);
        self.relcl.push(v);
        let root = self.finite_verb(false, np.number, "root");
        self.toks[np.head - 1].deprel = "nsubj".into();
        self.attach(np.head, root);
        self.clause_gold(&np, root, true);
        root
    }

    fn finish(mut self, sent_id: String) -> (Sentence, Vec<AgreementInstance>, Vec<GoldDetail>) {
        for i in 0..self.toks.len().saturating_sub(1) {
            if self.toks[i].form == "que" && starts_with_vowel(&self.toks[i + 1].form) {
                self.toks[i].form = "qu'".into();
            }
        }
        let n = self.toks.len();
        let mut gold = std::mem::take(&mut self.gold);
        gold.sort_by_key(|g| (g.kind, g.target));
        let mut instances = Vec::with_capacity(gold.len());
        let mut details = Vec::with_capacity(gold.len());
        for g in gold {
            let target_number = self.nouns[&g.cue];
            let mut deps = g.deps.clone();
            deps.sort_unstable();
            let attractors = self
                .nouns
                .range(g.cue + 1..g.target)
                .filter(|(_, &num)| num != target_number)
                .map(|(&id, _)| id)
                .collect();
            let nesting = self.relcl.iter().filter(|&&r| r > g.cue && r < g.target).count();
            let attested = self.toks[g.target - 1].number();
            instances.push(AgreementInstance {
                sent_id: sent_id.clone(),
                kind: g.kind,
                cue_index: g.cue,
                cue_dependent_indices: deps,
                que_index: g.que,
                target_index: g.target,
                target_number,
                prefix_span: Span::new(1, g.cue),
                context_span: Span::new(g.cue + 1, g.target),
                suffix_span: Span::new(g.target + 1, n + 1),
                attractor_indices: attractors,
                nesting_depth: nesting,
                scoreable: true,
                heuristic_profile: None,
            });
            details.push(GoldDetail {
                fixed_pattern: g.fixed,
                variant_form: self.variants[&g.target].clone(),
                compliant: attested == Some(target_number),
            });
        }
        let mut sentence = Sentence { sent_id, tokens: self.toks, text: None };
        sentence.text = Some(sentence.surface());
        (sentence, instances, details)
    }
}
