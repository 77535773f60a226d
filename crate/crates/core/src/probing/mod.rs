//! Linear probes on last-layer token representations.
//!
//! Every token of an instance's sentence is encoded incrementally and tagged
//! with the region it falls in and the number of the instance's target. A
//! probe that recovers the target number from a region's vectors shows the
//! information is linearly available there.

mod logistic;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use logistic::{fit_logistic, LogisticProbe};
pub use store::{read_records, write_records, StoreError};

use crate::conllu::{is_que_form, Corpus, Number, Sentence, Vocabulary};
use crate::extraction::{AgreementInstance, AgreementKind};
use crate::lm::{LmError, Scalar, TransformerLM};
use crate::util::{derive_seed, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Prefix,
    Context,
    Suffix,
    Cue,
    Target,
}

impl Region {
    pub const ALL: [Region; 5] = [Region::Prefix, Region::Context, Region::Suffix, Region::Cue, Region::Target];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Prefix => "prefix",
            Region::Context => "context",
            Region::Suffix => "suffix",
            Region::Cue => "cue",
            Region::Target => "target",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Region> {
        Region::ALL.get(c as usize).copied()
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One token's representation, labelled with its instance's target number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReprRecord {
    pub sent_id: String,
    pub kind: AgreementKind,
    /// 1-based token id.
    pub position: usize,
    pub region: Region,
    pub upos: String,
    pub vector: Vec<f32>,
    pub label: Number,
    pub has_attractor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Inverse L2 strength.
    pub c: f64,
    pub max_iter: usize,
    /// Stop once every gradient entry is below `tol` times the total sample
    /// weight.
    pub tol: f64,
    /// Weight classes by inverse frequency.
    pub balanced: bool,
    pub split_seed: u64,
    pub test_fraction: f64,
    /// Cells with fewer records are skipped.
    pub min_cell: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { c: 1.0, max_iter: 1000, tol: 1e-8, balanced: true, split_seed: 0, test_fraction: 0.2, min_cell: 50 }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<(), ProbeError> {
        if self.max_iter == 0 || !(self.c > 0.0) || !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(ProbeError::InvalidConfig);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbeError {
    #[error("probe needs both labels in its training set")]
    SingleClassInput,
    #[error("records have differing vector widths")]
    WidthMismatch,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid probe config: need max_iter >= 1, c > 0, 0 < test_fraction < 1")]
    InvalidConfig,
    #[error("sentence {0} not found")]
    MissingSentence(String),
    #[error(transparent)]
    Model(#[from] LmError),
}

fn encode(vocab: &Vocabulary, s: &Sentence) -> Vec<u32> {
    vocab.encode_with_bos(s.tokens.iter().map(|t| t.form.as_str())).into_iter().map(|i| i as u32).collect()
}

/// Last-layer vectors (model positions `1..=n`) for one sentence.
pub fn sentence_vectors<F: Scalar>(
    model: &TransformerLM<F>,
    vocab: &Vocabulary,
    s: &Sentence,
) -> Result<Vec<Vec<f32>>, LmError> {
    let trace = model.forward(&encode(vocab, s), None)?;
    Ok(trace
        .final_hidden
        .rows()
        .into_iter()
        .skip(1)
        .map(|r| r.iter().map(|x| x.to_f32().expect("finite")).collect())
        .collect())
}

fn region_of(inst: &AgreementInstance, id: usize) -> Option<Region> {
    if id == inst.cue_index {
        Some(Region::Cue)
    } else if id == inst.target_index {
        Some(Region::Target)
    } else if inst.prefix_span.contains(id) {
        Some(Region::Prefix)
    } else if inst.context_span.contains(id) {
        Some(Region::Context)
    } else if inst.suffix_span.contains(id) {
        Some(Region::Suffix)
    } else {
        None
    }
}

/// One record per token per instance. Sentences are encoded once each.
pub fn extract_representations<F: Scalar>(
    model: &TransformerLM<F>,
    vocab: &Vocabulary,
    instances: &[AgreementInstance],
    corpus: &Corpus,
) -> Result<Vec<ReprRecord>, ProbeError> {
    let index = corpus.index();
    let mut cache: Option<(&str, Vec<Vec<f32>>)> = None;
    let mut out = Vec::new();
    for inst in instances {
        let s = *index.get(inst.sent_id.as_str()).ok_or_else(|| ProbeError::MissingSentence(inst.sent_id.clone()))?;
        if cache.as_ref().is_none_or(|(id, _)| *id != s.sent_id.as_str()) {
            cache = Some((s.sent_id.as_str(), sentence_vectors(model, vocab, s)?));
        }
        let vectors = &cache.as_ref().expect("filled").1;
        for t in &s.tokens {
            let Some(region) = region_of(inst, t.id) else { continue };
            out.push(ReprRecord {
                sent_id: inst.sent_id.clone(),
                kind: inst.kind,
                position: t.id,
                region,
                upos: t.upos.clone(),
                vector: vectors[t.id - 1].clone(),
                label: inst.target_number,
                has_attractor: inst.has_attractor(),
            });
        }
    }
    Ok(out)
}

/// Sentence ids on each side of one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub seed: u64,
    pub split: usize,
    pub train_ids: BTreeSet<String>,
    pub test_ids: BTreeSet<String>,
}

impl SplitRecord {
    pub fn shared_ids(&self) -> usize {
        self.train_ids.intersection(&self.test_ids).count()
    }
}

/// One trained probe's score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeCell {
    pub cell: String,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    pub seed: u64,
    pub split: usize,
    /// Control-task accuracy: probe fit on permuted training labels, scored
    /// against permuted test labels.
    pub control_accuracy: Option<f64>,
    /// Accuracy expected from predictions independent of the labels.
    pub chance: Option<f64>,
    /// Binomial standard deviation around `chance` at `n_test`.
    pub chance_sd: Option<f64>,
}

impl ProbeCell {
    /// Control lies within `k` standard deviations of chance.
    pub fn control_within(&self, k: f64) -> Option<bool> {
        Some((self.control_accuracy? - self.chance?).abs() <= k * self.chance_sd?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMean {
    pub region: Region,
    pub cells: usize,
    /// Unweighted mean over upos cells.
    pub mean: f64,
    /// Mean weighted by test-set size.
    pub weighted_mean: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub cells: Vec<ProbeCell>,
    pub region_means: Vec<RegionMean>,
    pub splits: Vec<SplitRecord>,
    pub skipped: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl ProbeResult {
    pub fn region_mean(&self, r: Region) -> Option<f64> {
        self.region_means.iter().find(|m| m.region == r).map(|m| m.mean)
    }

    /// CSV: `cell,n_train,n_test,accuracy,seed,split,control_accuracy,chance`.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cell", "n_train", "n_test", "accuracy", "seed", "split", "control_accuracy", "chance"])?;
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        for c in &self.cells {
            w.write_record([
                c.cell.clone(),
                c.n_train.to_string(),
                c.n_test.to_string(),
                format!("{:.6}", c.accuracy),
                c.seed.to_string(),
                c.split.to_string(),
                opt(c.control_accuracy),
                opt(c.chance),
            ])?;
        }
        for m in &self.region_means {
            w.write_record([
                format!("mean/{}", m.region),
                String::new(),
                String::new(),
                format!("{:.6}", m.mean),
                String::new(),
                String::new(),
                String::new(),
                format!("{:.6}", m.weighted_mean),
            ])?;
        }
        w.flush()
    }
}

/// Trains on `train`, scores on `test`, and reruns as a control task with
/// training and test labels permuted independently.
fn probe_cell(
    cell: String,
    train: &[(&[f32], bool)],
    test: &[(&[f32], bool)],
    cfg: &ProbeConfig,
    seed: u64,
    split: usize,
) -> Result<ProbeCell, ProbeError> {
    let xs: Vec<&[f32]> = train.iter().map(|p| p.0).collect();
    let ys: Vec<bool> = train.iter().map(|p| p.1).collect();
    let probe = fit_logistic(&xs, &ys, cfg)?;
    let accuracy = probe.accuracy(test.iter().copied()).unwrap_or(0.0);
    let mut shuffle_rng = rng(derive_seed(seed, crate::util::salt_of(&cell) ^ split as u64));
    let mut shuffled = ys.clone();
    shuffled.shuffle(&mut shuffle_rng);
    let mut test_labels: Vec<bool> = test.iter().map(|t| t.1).collect();
    test_labels.shuffle(&mut shuffle_rng);
    let (control_accuracy, chance, chance_sd) = match fit_logistic(&xs, &shuffled, cfg) {
        Ok(ctrl) => {
            let n = test.len() as f64;
            let p_pos = test_labels.iter().filter(|&&y| y).count() as f64 / n;
            let q_pos = test.iter().filter(|t| ctrl.predict(t.0)).count() as f64 / n;
            let chance = q_pos * p_pos + (1.0 - q_pos) * (1.0 - p_pos);
            let control = ctrl.accuracy(test.iter().zip(&test_labels).map(|(t, &y)| (t.0, y)));
            (control, Some(chance), Some((chance * (1.0 - chance) / n).sqrt()))
        }
        Err(_) => (None, None, None),
    };
    Ok(ProbeCell {
        cell,
        n_train: train.len(),
        n_test: test.len(),
        accuracy,
        seed,
        split,
        control_accuracy,
        chance,
        chance_sd,
    })
}

/// Sentence-level split: a seeded shuffle of the distinct ids, the first
/// `1 - test_fraction` of them for training.
pub fn split_sentences(ids: &BTreeSet<&str>, test_fraction: f64, seed: u64) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut v: Vec<&str> = ids.iter().copied().collect();
    v.shuffle(&mut rng(seed));
    let n_test = ((v.len() as f64) * test_fraction).round() as usize;
    let (test, train) = v.split_at(n_test.min(v.len()));
    (train.iter().map(|s| s.to_string()).collect(), test.iter().map(|s| s.to_string()).collect())
}

/// One probe per (region, upos) cell with an 80/20 sentence-level split,
/// plus unweighted and test-size-weighted means per region.
pub fn region_probe_suite(records: &[ReprRecord], cfg: &ProbeConfig) -> Result<ProbeResult, ProbeError> {
    cfg.validate()?;
    let ids: BTreeSet<&str> = records.iter().map(|r| r.sent_id.as_str()).collect();
    if ids.len() < 2 {
        return Err(ProbeError::InsufficientData(format!("{} sentences", ids.len())));
    }
    let (train_ids, test_ids) = split_sentences(&ids, cfg.test_fraction, cfg.split_seed);
    let mut cells: BTreeMap<(Region, &str), Vec<&ReprRecord>> = BTreeMap::new();
    for r in records {
        cells.entry((r.region, r.upos.as_str())).or_default().push(r);
    }
    let mut result = ProbeResult::default();
    for ((region, upos), recs) in cells {
        let name = format!("{region}/{upos}");
        if recs.len() < cfg.min_cell {
            result.skipped.push((name, format!("InsufficientData: {} < {}", recs.len(), cfg.min_cell)));
            continue;
        }
        let side = |ids: &BTreeSet<String>| -> Vec<(&[f32], bool)> {
            recs.iter()
                .filter(|r| ids.contains(&r.sent_id))
                .map(|r| (r.vector.as_slice(), r.label == Number::Plur))
                .collect()
        };
        let (train, test) = (side(&train_ids), side(&test_ids));
        if test.is_empty() {
            result.skipped.push((name, "InsufficientData: empty test set".into()));
            continue;
        }
        match probe_cell(name.clone(), &train, &test, cfg, cfg.split_seed, 0) {
            Ok(c) => result.cells.push(c),
            Err(ProbeError::SingleClassInput) => result.skipped.push((name, "SingleClassInput".into())),
            Err(e) => return Err(e),
        }
    }
    for region in Region::ALL {
        let prefix = format!("{region}/");
        let cs: Vec<&ProbeCell> = result.cells.iter().filter(|c| c.cell.starts_with(&prefix)).collect();
        if cs.is_empty() {
            continue;
        }
        let total: usize = cs.iter().map(|c| c.n_test).sum();
        result.region_means.push(RegionMean {
            region,
            cells: cs.len(),
            mean: cs.iter().map(|c| c.accuracy).sum::<f64>() / cs.len() as f64,
            weighted_mean: cs.iter().map(|c| c.accuracy * c.n_test as f64).sum::<f64>() / total as f64,
        });
    }
    result.splits.push(SplitRecord { seed: cfg.split_seed, split: 0, train_ids, test_ids });
    for (cell, why) in &result.skipped {
        log::info!("probe cell {cell} skipped: {why}");
    }
    Ok(result)
}

/// Whether the tokens from the cue onward read `cue ADP NOUN que PRON`
/// followed by `AUX` (obj_pp) or a finite `VERB` (subj_verb), with the target
/// right after.
pub fn match_fixed_pattern(instance: &AgreementInstance, s: &Sentence) -> bool {
    let c = instance.cue_index;
    if instance.target_index != c + 6 || c + 6 > s.len() {
        return false;
    }
    let t = |k: usize| s.token(c + k);
    let head = match instance.kind {
        AgreementKind::ObjPp => t(5).upos == "AUX",
        AgreementKind::SubjVerb => t(5).upos == "VERB" && t(5).is_finite(),
    };
    t(0).upos == "NOUN"
        && t(1).upos == "ADP"
        && t(2).upos == "NOUN"
        && is_que_form(&t(3).form)
        && t(4).upos == "PRON"
        && head
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionalConfig {
    pub probe: ProbeConfig,
    /// Positions probed before the cue and after the target.
    pub window: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub seeds: Vec<u64>,
    pub splits: usize,
}

impl Default for PositionalConfig {
    fn default() -> Self {
        PositionalConfig { probe: ProbeConfig::default(), window: 3, n_train: 800, n_test: 200, seeds: vec![0, 1, 2], splits: 3 }
    }
}

pub const PATTERN_SLOTS: [&str; 7] = ["cue", "adp", "noun", "que", "pron", "verb", "target"];

/// Slot names in order: `b{window}..b1`, the pattern slots, `a1..a{window}`.
pub fn position_labels(window: usize) -> Vec<String> {
    (1..=window)
        .rev()
        .map(|k| format!("b{k}"))
        .chain(PATTERN_SLOTS.iter().map(|s| s.to_string()))
        .chain((1..=window).map(|k| format!("a{k}")))
        .collect()
}

/// Per-slot vectors of one pattern instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternItem {
    pub sent_id: String,
    pub label: Number,
    /// The embedded noun's number differs from the cue's.
    pub attractor: bool,
    /// Indexed like [`position_labels`]; `None` past either sentence edge.
    pub vectors: Vec<Option<Vec<f32>>>,
}

/// Encodes every pattern-matching instance, keeping the first per sentence.
pub fn pattern_items<F: Scalar>(
    model: &TransformerLM<F>,
    vocab: &Vocabulary,
    instances: &[AgreementInstance],
    corpus: &Corpus,
    window: usize,
) -> Result<Vec<PatternItem>, ProbeError> {
    let index = corpus.index();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for inst in instances {
        let s = *index.get(inst.sent_id.as_str()).ok_or_else(|| ProbeError::MissingSentence(inst.sent_id.clone()))?;
        if !match_fixed_pattern(inst, s) || !seen.insert(inst.sent_id.as_str()) {
            continue;
        }
        let vecs = sentence_vectors(model, vocab, s)?;
        let c = inst.cue_index as isize;
        let first = c - window as isize;
        let n_slots = 2 * window + PATTERN_SLOTS.len();
        let vectors = (0..n_slots)
            .map(|k| {
                let id = first + k as isize;
                (id >= 1 && id as usize <= s.len()).then(|| vecs[id as usize - 1].clone())
            })
            .collect();
        let embedded = s.token(inst.cue_index + 2).number();
        out.push(PatternItem {
            sent_id: inst.sent_id.clone(),
            label: inst.target_number,
            attractor: embedded.is_some_and(|n| n != s.token(inst.cue_index).number().unwrap_or(inst.target_number)),
            vectors,
        });
    }
    Ok(out)
}

fn slot_pairs<'a>(set: &[&'a PatternItem], slot: usize, attractor: Option<bool>) -> Vec<(&'a [f32], bool)> {
    set.iter()
        .filter(|i| attractor.is_none_or(|a| i.attractor == a))
        .filter_map(|i| i.vectors[slot].as_deref().map(|v| (v, i.label == Number::Plur)))
        .collect()
}

/// Number-balanced train/test draws of pattern items, one probe per slot,
/// test accuracy reported overall and split by attractor condition. Sizes
/// shrink proportionally when a class is short.
pub fn positional_probe_suite(items: &[PatternItem], cfg: &PositionalConfig) -> Result<ProbeResult, ProbeError> {
    cfg.probe.validate()?;
    let by_class: [Vec<&PatternItem>; 2] = [
        items.iter().filter(|i| i.label == Number::Sing).collect(),
        items.iter().filter(|i| i.label == Number::Plur).collect(),
    ];
    let want = (cfg.n_train + cfg.n_test) / 2;
    let have = by_class[0].len().min(by_class[1].len());
    if have < 2 {
        return Err(ProbeError::InsufficientData(format!("{have} pattern items in the smaller class")));
    }
    let mut result = ProbeResult::default();
    let (mut per_train, mut per_test) = (cfg.n_train / 2, cfg.n_test / 2);
    if have < want {
        let f = have as f64 / want as f64;
        per_train = ((per_train as f64 * f).floor() as usize).max(1);
        per_test = (have - per_train).min(((per_test as f64 * f).ceil() as usize).max(1));
        result.warnings.push(format!(
            "only {have} items per class; using {} train / {} test per draw",
            2 * per_train,
            2 * per_test
        ));
        log::warn!("{}", result.warnings.last().expect("pushed"));
    }
    let labels = position_labels(cfg.window);
    for &seed in &cfg.seeds {
        let mut pool: [Vec<&PatternItem>; 2] = by_class.clone();
        for (c, p) in pool.iter_mut().enumerate() {
            p.shuffle(&mut rng(derive_seed(seed, c as u64)));
            p.truncate(per_train + per_test);
        }
        for split in 0..cfg.splits {
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (c, p) in pool.iter().enumerate() {
                let mut p = p.clone();
                p.shuffle(&mut rng(derive_seed(derive_seed(seed, 100 + split as u64), c as u64)));
                test.extend_from_slice(&p[..per_test]);
                train.extend_from_slice(&p[per_test..]);
            }
            result.splits.push(SplitRecord {
                seed,
                split,
                train_ids: train.iter().map(|i| i.sent_id.clone()).collect(),
                test_ids: test.iter().map(|i| i.sent_id.clone()).collect(),
            });
            for (slot, name) in labels.iter().enumerate() {
                let tr = slot_pairs(&train, slot, None);
                for (cond, filter) in [("all", None), ("attractor", Some(true)), ("no_attractor", Some(false))] {
                    let te = slot_pairs(&test, slot, filter);
                    let cell = format!("{name}/{cond}");
                    if te.is_empty() {
                        continue;
                    }
                    match probe_cell(cell.clone(), &tr, &te, &cfg.probe, seed, split) {
                        Ok(c) => result.cells.push(c),
                        Err(ProbeError::SingleClassInput) => {
                            result.skipped.push((cell, "SingleClassInput".into()));
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(result)
}

/// Mean accuracy per cell name across seeds and splits, in slot order.
pub fn average_cells(result: &ProbeResult) -> Vec<(String, f64, usize)> {
    let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let mut order = Vec::new();
    for c in &result.cells {
        let e = acc.entry(c.cell.as_str()).or_insert_with(|| {
            order.push(c.cell.as_str());
            (0.0, 0)
        });
        e.0 += c.accuracy;
        e.1 += 1;
    }
    order.into_iter().map(|k| (k.to_string(), acc[k].0 / acc[k].1 as f64, acc[k].1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::{parse_str, ParseMode};
    use crate::extraction::extract_obj_pp;

    const SENT: &str = "# sent_id = p1
1\tIl\til\tPRON\t_\tNumber=Sing|Person=3\t2\tnsubj\t_\t_
2\tvend\tvendre\tVERB\t_\tMood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin\t0\troot\t_\t_
3\tles\tle\tDET\t_\tDefinite=Def|Number=Plur\t4\tdet\t_\t_
4\tbureaux\tbureau\tNOUN\t_\tGender=Masc|Number=Plur\t2\tobj\t_\t_
5\ten\ten\tADP\t_\t_\t6\tcase\t_\t_
6\tmétal\tmétal\tNOUN\t_\tGender=Masc|Number=Sing\t4\tnmod\t_\t_
7\tqu'\tque\tPRON\t_\tPronType=Rel\t10\tobj\t_\t_
8\til\til\tPRON\t_\tNumber=Sing|Person=3\t10\tnsubj\t_\t_
9\ta\tavoir\tAUX\t_\tMood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin\t10\taux\t_\t_
10\ttrouvés\ttrouver\tVERB\t_\tGender=Masc|Number=Plur|Tense=Past|VerbForm=Part\t4\tacl:relcl\t_\t_
11\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_

";

    #[test]
    fn fixed_pattern_example() {
        let corpus = parse_str(SENT, "t", ParseMode::Strict).unwrap().corpus;
        let s = &corpus.sentences[0];
        let inst = extract_obj_pp(s).remove(0);
        assert!(match_fixed_pattern(&inst, s));
        let mut off = inst.clone();
        off.cue_index = 3;
        assert!(!match_fixed_pattern(&off, s));
    }

    #[test]
    fn labels_window() {
        let l = position_labels(2);
        assert_eq!(l.first().unwrap(), "b2");
        assert_eq!(l[2], "cue");
        assert_eq!(l.last().unwrap(), "a2");
        assert_eq!(l.len(), 11);
    }

    #[test]
    fn sentence_split_is_disjoint() {
        let ids: BTreeSet<&str> = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"].into();
        let (tr, te) = split_sentences(&ids, 0.2, 4);
        assert_eq!(te.len(), 2);
        assert_eq!(tr.len(), 8);
        assert!(tr.is_disjoint(&te));
    }

    #[test]
    fn region_codes_round_trip() {
        for r in Region::ALL {
            assert_eq!(Region::from_code(r.code()), Some(r));
        }
    }
}
