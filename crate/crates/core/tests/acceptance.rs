//! Acceptance harness: one PASS/FAIL line per criterion.
//!
//! Runs the whole desk-scale reproduction (about 20 minutes on one core).
//! A FAIL line does not fail `cargo test` unless `ACCORD_ACCEPTANCE_STRICT`
//! is set; set `ACCORD_ACCEPTANCE_ONLY=1,4,5` to run a subset.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use accord::conllu::{build_vocab, Corpus, Sentence, VocabOptions, Vocabulary};
use accord::eval::{nonce_evaluation, EvalReport, NonceItem, RunConfig};
use accord::extraction::{
    extract_corpus, extract_subj_verb, generate_nonce, generate_synthetic_corpus, mark_scoreable,
    AgreementInstance, AgreementKind, ExtractOptions, MorphLexicon, SyntheticGrammarConfig, CONTENT_UPOS,
    NONCE_VARIANTS,
};
use accord::heuristics::{profile_all, profile_instance, HeuristicOptions};
use accord::intervention::{build_mask_spec, intervention_report, MaskCondition};
use accord::lm::{encode_corpus, train_with_callback, TransformerLM};
use accord::probing::{extract_representations, pattern_items, positional_probe_suite, region_probe_suite, Region};
use accord::util::{derive_seed, rng, salt_of};
use rand::Rng;

const SEED: u64 = 1;
/// Desk-scale corpus: about 1M tokens.
const TRAIN_SENTENCES: usize = 80_000;
const TRAIN_EPOCHS: usize = 2;
const EVAL_SENTENCES: usize = 6_000;
const TRAIN_BUDGET_SECS: f64 = 30.0 * 60.0;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn criterion_1() -> Verdict {
    let started = Instant::now();
    let model = common::toy_model(true, true, 42);
    let mut r = rng(7);
    let mut checked = 0usize;
    let mut broken = 0usize;
    for _ in 0..100 {
        let len = r.gen_range(2..=model.config.max_len);
        let ids: Vec<u32> = (0..len).map(|_| r.gen_range(0..model.config.vocab_size as u32)).collect();
        let base = model.forward(&ids, None).unwrap();
        for j in 0..len {
            let mut other = ids.clone();
            other[j] = (ids[j] + 1 + r.gen_range(0..model.config.vocab_size as u32 - 1)) % model.config.vocab_size as u32;
            let pert = model.forward(&other, None).unwrap();
            for i in 0..j {
                checked += 1;
                let same_logits = base.logits.row(i).iter().zip(pert.logits.row(i)).all(|(a, b)| a.to_bits() == b.to_bits());
                let same_hidden = base.hidden.iter().zip(&pert.hidden).all(|(a, b)| {
                    a.row(i).iter().zip(b.row(i)).all(|(x, y)| x.to_bits() == y.to_bits())
                });
                if !(same_logits && same_hidden) {
                    broken += 1;
                }
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(broken == 0 && secs < 60.0, format!("{checked} earlier positions compared, {broken} differ, {secs:.1}s"))
}

fn criterion_2() -> Verdict {
    let cfg = SyntheticGrammarConfig { sentences: 400, seed: 3, ..SyntheticGrammarConfig::default() };
    let synth = generate_synthetic_corpus(&cfg);
    let vocab = build_vocab(&synth.corpus, 1, VocabOptions::default()).unwrap();
    let mut mcfg = accord::lm::ModelConfig::desk(vocab.len());
    mcfg.seed = 5;
    let model = TransformerLM::<f32>::init(mcfg).unwrap();
    let index = synth.corpus.index();
    let instances: Vec<&AgreementInstance> = synth.gold.iter().take(100).collect();
    let (mut runs, mut empty, mut bad_prefix, mut bad_zero, mut worst_row) = (0usize, 0usize, 0usize, 0usize, 0f64);
    for inst in &instances {
        let s = index[inst.sent_id.as_str()];
        let ids: Vec<u32> = vocab
            .encode_with_bos(s.tokens[..inst.target_index - 1].iter().map(|t| t.form.as_str()))
            .into_iter()
            .map(|i| i as u32)
            .collect();
        let plain = model.forward(&ids, None).unwrap();
        for cond in MaskCondition::ALL {
            let Ok(mask) = build_mask_spec(inst, cond) else {
                empty += 1;
                continue;
            };
            runs += 1;
            let masked = model.forward(&ids, Some(&mask)).unwrap();
            for i in 0..mask.query_position {
                if plain.log_probs_at(i).iter().zip(masked.log_probs_at(i).iter()).any(|(a, b)| a.to_bits() != b.to_bits()) {
                    bad_prefix += 1;
                }
            }
            for heads in &masked.attention {
                for a in heads {
                    for &k in &mask.masked_key_positions {
                        if a[[mask.query_position, k]] != 0.0 {
                            bad_zero += 1;
                        }
                    }
                    for row in a.rows() {
                        worst_row = worst_row.max((row.sum() as f64 - 1.0).abs());
                    }
                }
            }
        }
    }
    verdict(
        runs > 0 && bad_prefix == 0 && bad_zero == 0 && worst_row <= 1e-5,
        format!(
            "{} instances, {runs} masked runs ({empty} empty masks), {bad_prefix} pre-query rows differ, \
             {bad_zero} masked entries non-zero, max |row sum - 1| = {worst_row:.2e}",
            instances.len()
        ),
    )
}

fn criterion_3() -> Verdict {
    let mut worst_fwd = 0f64;
    let mut worst_grad = 0f64;
    let mut sampled = 0;
    for (pre, tie) in [(true, true), (false, false)] {
        let m = common::toy_model(pre, tie, 13);
        worst_fwd = worst_fwd.max(common::forward_gap(&m, &[0, 4, 9, 1, 16, 3, 3, 7, 12], None));
        let a = [0u32, 2, 11, 5, 5, 8, 1];
        let b = [0u32, 14, 6, 1];
        let (g, n) = common::gradient_gap(&m, &[&a, &b], 30);
        worst_grad = worst_grad.max(g);
        sampled += n;
    }
    verdict(
        worst_fwd <= 1e-5 && worst_grad <= 1e-4 && sampled >= 20,
        format!("forward max |diff| = {worst_fwd:.2e}, gradient max rel err = {worst_grad:.2e} over {sampled} parameters"),
    )
}

fn criterion_4() -> Verdict {
    let corpus = common::ladder();
    let counts: Vec<Option<usize>> = corpus
        .sentences
        .iter()
        .map(|s| extract_subj_verb(s).last().map(|i| profile_instance(s, i).count))
        .collect();
    let want = [5, 4, 3, 2, 1, 0].map(Some).to_vec();
    verdict(counts == want, format!("counts {counts:?}"))
}

fn criterion_5() -> Verdict {
    let cfg = SyntheticGrammarConfig { sentences: 10_000, seed: SEED, ..SyntheticGrammarConfig::default() };
    let synth = generate_synthetic_corpus(&cfg);
    let found = extract_corpus(&synth.corpus, ExtractOptions::default());
    let mut lines = Vec::new();
    let mut pass = true;
    for kind in [AgreementKind::ObjPp, AgreementKind::SubjVerb] {
        let gold: BTreeMap<_, _> = synth.gold.iter().filter(|i| i.kind == kind).map(|i| (i.key(), i)).collect();
        let got: BTreeMap<_, _> = found.iter().filter(|i| i.kind == kind).map(|i| (i.key(), i)).collect();
        let tp = got.keys().filter(|k| gold.contains_key(*k)).count();
        let precision = tp as f64 / got.len().max(1) as f64;
        let recall = tp as f64 / gold.len().max(1) as f64;
        let spans_differ = gold
            .iter()
            .filter_map(|(k, g)| got.get(k).map(|f| (g, f)))
            .filter(|(g, f)| {
                g.prefix_span != f.prefix_span
                    || g.context_span != f.context_span
                    || g.suffix_span != f.suffix_span
                    || g.attractor_indices != f.attractor_indices
            })
            .count();
        pass &= precision == 1.0 && recall == 1.0 && spans_differ == 0 && !gold.is_empty();
        lines.push(format!(
            "{}: {} gold, P={precision:.4} R={recall:.4}, {spans_differ} span/attractor mismatches",
            kind.as_str(),
            gold.len()
        ));
    }
    verdict(pass, lines.join("; "))
}

/// Trained desk model plus the held-out material scored against it.
struct Desk {
    model: TransformerLM<f32>,
    vocab: Vocabulary,
    train: Corpus,
    eval: Corpus,
    lexicon: MorphLexicon,
    instances: Vec<AgreementInstance>,
    train_secs: f64,
    train_tokens: usize,
}

fn train_desk() -> Desk {
    let mut cfg = RunConfig::default();
    cfg.apply_seed(SEED);
    cfg.synth.sentences = TRAIN_SENTENCES;
    cfg.train.epochs = TRAIN_EPOCHS;
    let train = generate_synthetic_corpus(&cfg.synth).corpus;
    let mut eval_cfg = cfg.synth.clone();
    eval_cfg.sentences = EVAL_SENTENCES;
    eval_cfg.seed = cfg.heldout_seed();
    let mut eval = generate_synthetic_corpus(&eval_cfg).corpus;
    for s in &mut eval.sentences {
        s.sent_id = format!("heldout-{}", s.sent_id);
    }
    let vocab = build_vocab(&train, 1, VocabOptions::default()).unwrap();
    let mut mcfg = cfg.model.clone();
    mcfg.vocab_size = vocab.len();
    let mut model = TransformerLM::<f32>::init(mcfg).unwrap();
    let data = encode_corpus(&train, &vocab);
    let train_tokens: usize = data.iter().map(|s| s.len() - 1).sum();
    let started = Instant::now();
    train_with_callback(&mut model, &data, None, &cfg.train, |e| {
        eprintln!("  epoch {} lr {:.4} loss {:.4} ({:.0}s)", e.epoch, e.lr, e.train_loss, started.elapsed().as_secs_f64());
    })
    .unwrap();
    let train_secs = started.elapsed().as_secs_f64();
    let mut lexicon = MorphLexicon::from_corpus(&train);
    for s in &eval.sentences {
        lexicon.add_sentence(s);
    }
    let mut instances = extract_corpus(&eval, ExtractOptions::default());
    profile_all(&mut instances, &eval, HeuristicOptions::default()).unwrap();
    mark_scoreable(&mut instances, &eval, &lexicon);
    Desk { model, vocab, train, eval, lexicon, instances, train_secs, train_tokens }
}

fn of_kind(v: &[AgreementInstance], k: AgreementKind) -> Vec<AgreementInstance> {
    v.iter().filter(|i| i.kind == k).cloned().collect()
}

fn pooled(reports: &[&EvalReport], buckets: &[usize]) -> Option<f64> {
    let (mut n, mut c) = (0usize, 0usize);
    for r in reports {
        for &b in buckets {
            n += r.bucket(b).n;
            c += r.bucket(b).correct;
        }
    }
    (n > 0).then(|| c as f64 / n as f64)
}

fn pct(x: Option<f64>) -> String {
    x.map(|v| format!("{:.1}", 100.0 * v)).unwrap_or_else(|| "n/a".into())
}

fn criterion_6(d: &Desk) -> Verdict {
    let obj = of_kind(&d.instances, AgreementKind::ObjPp);
    let subj = of_kind(&d.instances, AgreementKind::SubjVerb);
    let conds = [MaskCondition::MaskQue, MaskCondition::MaskCuePlusQue];
    let obj_r = intervention_report(&d.model, &d.vocab, &d.lexicon, &obj, &d.eval, &conds, "desk").unwrap();
    let subj_r = intervention_report(&d.model, &d.vocab, &d.lexicon, &subj, &d.eval, &conds, "desk").unwrap();
    let (obj_base, obj_que, obj_both) = (&obj_r[0], &obj_r[1], &obj_r[2]);
    let (subj_base, subj_que) = (&subj_r[0], &subj_r[1]);

    let by_bucket: Vec<Option<f64>> = (0..=5).map(|b| pooled(&[obj_base, subj_base], &[b])).collect();
    let top = by_bucket[5].unwrap_or(0.0);
    let present: Vec<f64> = by_bucket.iter().rev().flatten().copied().collect();
    let inversions = present.windows(2).filter(|w| w[1] >= w[0]).count();
    let a = top >= 0.95 && inversions <= 1;

    let hard = [0, 1];
    let base_hard = pooled(&[obj_base], &hard);
    let both_hard = pooled(&[obj_both], &hard);
    let drop_b = base_hard.zip(both_hard).map(|(x, y)| x - y);
    let b = drop_b.is_some_and(|v| v >= 0.15);

    let hardest = [0, 1, 2];
    let obj_drop = pooled(&[obj_base], &hardest).zip(pooled(&[obj_que], &hardest)).map(|(x, y)| x - y);
    let subj_drop = pooled(&[subj_base], &hardest).zip(pooled(&[subj_que], &hardest)).map(|(x, y)| x - y);
    let c = matches!((obj_drop, subj_drop), (Some(o), Some(s)) if o > s);

    let time_ok = d.train_secs < TRAIN_BUDGET_SECS;
    let buckets: Vec<String> = (0..=5).rev().map(|b| format!("{b}:{}", pct(by_bucket[b]))).collect();
    verdict(
        a && b && c && time_ok,
        format!(
            "trained on {} tokens in {:.0}s; (a) {} [{}] with {inversions} inversions; \
             (b) obj_pp 0-1 baseline {} vs mask_cue_plus_que {} (drop {}); \
             (c) mask_que drop on buckets 0-2: obj_pp {} vs subj_verb {}",
            d.train_tokens,
            d.train_secs,
            if a { "ok" } else { "no" },
            buckets.join(" "),
            pct(base_hard),
            pct(both_hard),
            pct(drop_b),
            pct(obj_drop),
            pct(subj_drop),
        ),
    )
}

fn criterion_7(d: &Desk) -> Verdict {
    let mut lines = Vec::new();
    let mut pass = true;
    let cfg = RunConfig::default();
    let mut controls = (0usize, 0usize);
    for kind in [AgreementKind::ObjPp, AgreementKind::SubjVerb] {
        let inst = of_kind(&d.instances, kind);
        let records = extract_representations(&d.model, &d.vocab, &inst, &d.eval).unwrap();
        let mut pcfg = cfg.positional.probe.clone();
        pcfg.split_seed = derive_seed(SEED, salt_of(kind.as_str()));
        let r = region_probe_suite(&records, &pcfg).unwrap();
        let prefix = r.region_mean(Region::Prefix);
        let context = r.region_mean(Region::Context);
        let ordered = matches!((prefix, context), (Some(p), Some(c)) if p < c);
        pass &= ordered && r.splits.iter().all(|s| s.shared_ids() == 0);
        for c in &r.cells {
            controls.0 += 1;
            controls.1 += c.control_within(3.0).unwrap_or(false) as usize;
        }
        lines.push(format!("{}: prefix {} < context {}", kind.as_str(), pct(prefix), pct(context)));
    }
    let items = pattern_items(&d.model, &d.vocab, &d.instances, &d.eval, cfg.positional.window).unwrap();
    match positional_probe_suite(&items, &cfg.positional) {
        Ok(r) => {
            let shared: usize = r.splits.iter().map(|s| s.shared_ids()).sum();
            pass &= shared == 0 && r.splits.len() == 9;
            for c in &r.cells {
                controls.0 += 1;
                controls.1 += c.control_within(3.0).unwrap_or(false) as usize;
            }
            lines.push(format!("{} positional splits, {shared} shared sentence ids", r.splits.len()));
        }
        Err(e) => {
            pass = false;
            lines.push(format!("positional suite failed: {e}"));
        }
    }
    pass &= controls.0 > 0 && controls.0 == controls.1;
    lines.push(format!("{}/{} permutation controls within 3 sd of chance", controls.1, controls.0));
    verdict(pass, lines.join("; "))
}

fn function_words_equal(a: &Sentence, b: &Sentence) -> bool {
    a.tokens
        .iter()
        .zip(&b.tokens)
        .all(|(x, y)| CONTENT_UPOS.contains(&y.upos.as_str()) || x.form == y.form)
}

fn criterion_8(d: &Desk) -> Verdict {
    let donor = MorphLexicon::from_corpus(&d.train);
    let index = d.eval.index();
    let originals: Vec<AgreementInstance> = d.instances.iter().filter(|i| i.scoreable).take(1000).cloned().collect();
    let mut items = Vec::new();
    let mut broken = 0usize;
    for inst in &originals {
        let s = index[inst.sent_id.as_str()];
        let seed = derive_seed(SEED, salt_of(&format!("{}#{}", inst.sent_id, inst.target_index)));
        let variants = generate_nonce(inst, s, &donor, seed).unwrap();
        for v in variants {
            let ok = v.sentence.len() == s.len()
                && v.sentence.tokens.iter().zip(&s.tokens).all(|(x, y)| x.upos == y.upos && x.number() == y.number())
                && function_words_equal(&v.sentence, s);
            broken += !ok as usize;
            let mut sentence = v.sentence;
            sentence.sent_id = format!("{}#{}", sentence.sent_id, inst.target_index);
            let mut vi = inst.clone();
            vi.sent_id = sentence.sent_id.clone();
            items.push(NonceItem { instance: vi, sentence, target_gap: v.target_gap });
        }
    }
    let mut lexicon = d.lexicon.clone();
    for it in &items {
        lexicon.add_sentence(&it.sentence);
    }
    let e = nonce_evaluation(&d.model, &d.vocab, &lexicon, &originals, &d.eval, &items, "desk").unwrap();
    let orig = e.original.report.overall().accuracy;
    let nonce = e.nonce.report.overall().accuracy;
    let gap = orig.zip(nonce).map(|(a, b)| (a - b).abs());
    verdict(
        originals.len() == 1000 && items.len() == 1000 * NONCE_VARIANTS && broken == 0 && gap.is_some_and(|g| g <= 0.10),
        format!(
            "{} originals, {} variants, {broken} structural mismatches; accuracy original {} vs nonce {}",
            originals.len(),
            items.len(),
            pct(orig),
            pct(nonce)
        ),
    )
}

const PIPELINE_CONFIG: &str = "synth.sentences = 3000
heldout.sentences = 600
train.epochs = 2
probe.min_cell = 20
positional.n_train = 60
positional.n_test = 20
";

fn run_pipeline(dir: &Path) -> Result<(), String> {
    std::fs::write(dir.join("run.cfg"), PIPELINE_CONFIG).map_err(|e| e.to_string())?;
    let steps: [&[&str]; 9] = [
        &["synth"],
        &["train"],
        &["ppl"],
        &["eval"],
        &["intervene"],
        &["probe-regions"],
        &["probe-positions"],
        &["nonce", "--limit", "200"],
        &["compliance"],
    ];
    for step in steps {
        let o = Command::new(env!("CARGO_BIN_EXE_accord"))
            .arg("--seed")
            .arg("7")
            .arg("--config")
            .arg(dir.join("run.cfg"))
            .arg("--out")
            .arg(dir.join("out"))
            .args(step)
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(format!("{step:?}: {}", String::from_utf8_lossy(&o.stderr)));
        }
    }
    Ok(())
}

fn criterion_9() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        std::fs::create_dir_all(d).unwrap();
        if let Err(e) = run_pipeline(d) {
            return verdict(false, format!("pipeline failed: {e}"));
        }
    }
    let files = |d: &Path| -> BTreeSet<String> {
        std::fs::read_dir(d.join("out"))
            .unwrap()
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| [".csv", ".ckpt", ".jsonl", ".conllu", ".txt", ".bin"].iter().any(|x| n.ends_with(x)))
            .collect()
    };
    let (fa, fb) = (files(&a), files(&b));
    let differing: Vec<&String> = fa
        .iter()
        .filter(|n| std::fs::read(a.join("out").join(n)).ok() != std::fs::read(b.join("out").join(n)).ok())
        .collect();
    let csvs = fa.iter().filter(|n| n.ends_with(".csv")).count();
    verdict(
        fa == fb && differing.is_empty() && fa.contains("model.ckpt") && csvs >= 8,
        format!("{} artifacts compared ({csvs} CSVs), differing: {differing:?}", fa.len()),
    )
}

fn main() {
    let only: Option<BTreeSet<usize>> =
        std::env::var("ACCORD_ACCEPTANCE_ONLY").ok().map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |n: usize| only.as_ref().is_none_or(|s| s.contains(&n));
    let names = [
        "causality",
        "intervention locality",
        "forward/gradient oracles",
        "heuristics oracle",
        "extraction oracle",
        "desk-scale end-to-end",
        "probing suite",
        "nonce suite",
        "determinism audit",
    ];
    let mut failures = 0;
    let mut report = |n: usize, v: Verdict| {
        println!("{} criterion {n} ({}): {}", if v.pass { "PASS" } else { "FAIL" }, names[n - 1], v.detail);
        failures += !v.pass as usize;
    };
    let quick: [(usize, fn() -> Verdict); 5] =
        [(1, criterion_1), (2, criterion_2), (3, criterion_3), (4, criterion_4), (5, criterion_5)];
    for (n, f) in quick {
        if wanted(n) {
            report(n, f());
        }
    }
    if wanted(6) || wanted(7) || wanted(8) {
        eprintln!("training the desk model on {TRAIN_SENTENCES} synthetic sentences");
        let desk = train_desk();
        let trained: [(usize, fn(&Desk) -> Verdict); 3] = [(6, criterion_6), (7, criterion_7), (8, criterion_8)];
        for (n, f) in trained {
            if wanted(n) {
                report(n, f(&desk));
            }
        }
    }
    if wanted(9) {
        report(9, criterion_9());
    }
    if failures > 0 && std::env::var_os("ACCORD_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
