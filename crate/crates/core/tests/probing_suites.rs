use accord::conllu::Number;
use accord::extraction::AgreementKind;
use accord::probing::{
    average_cells, fit_logistic, position_labels, positional_probe_suite, read_records, region_probe_suite,
    write_records, PatternItem, PositionalConfig, ProbeConfig, Region, ReprRecord,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Records whose first coordinate carries the label with strength `signal[region]`.
fn planted(n_sent: usize, seed: u64) -> Vec<ReprRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signal = |r: Region| match r {
        Region::Prefix => 0.0,
        Region::Context => 1.5,
        _ => 3.0,
    };
    let mut out = Vec::new();
    for s in 0..n_sent {
        let label = if rng.gen_bool(0.5) { Number::Plur } else { Number::Sing };
        let y = if label == Number::Plur { 1.0 } else { -1.0 };
        for (pos, region) in Region::ALL.into_iter().enumerate() {
            let mut v: Vec<f32> = (0..6).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
            v[0] += (y * signal(region)) as f32 * rng.gen_range(0.2f32..1.0);
            out.push(ReprRecord {
                sent_id: format!("s{s}"),
                kind: AgreementKind::ObjPp,
                position: pos + 1,
                region,
                upos: "NOUN".into(),
                vector: v,
                label,
                has_attractor: s % 3 == 0,
            });
        }
    }
    out
}

#[test]
fn region_suite_recovers_planted_ordering() {
    let recs = planted(600, 1);
    let cfg = ProbeConfig { split_seed: 4, ..ProbeConfig::default() };
    let r = region_probe_suite(&recs, &cfg).unwrap();
    let prefix = r.region_mean(Region::Prefix).unwrap();
    let context = r.region_mean(Region::Context).unwrap();
    let cue = r.region_mean(Region::Cue).unwrap();
    assert!(prefix < 0.62, "{prefix}");
    assert!(prefix < context && context < cue, "{prefix} {context} {cue}");
    assert_eq!(r.splits.len(), 1);
    assert_eq!(r.splits[0].shared_ids(), 0);
    for c in &r.cells {
        assert_eq!(c.control_within(3.0), Some(true), "{c:?}");
    }
}

#[test]
fn small_cells_are_skipped_not_fatal() {
    let recs = planted(20, 2);
    let r = region_probe_suite(&recs, &ProbeConfig::default()).unwrap();
    assert!(r.cells.is_empty());
    assert_eq!(r.skipped.len(), 5);
}

#[test]
fn store_round_trips_planted_records() {
    let recs = planted(30, 3);
    let mut buf = Vec::new();
    write_records(&mut buf, &recs).unwrap();
    assert_eq!(read_records(buf.as_slice()).unwrap(), recs);
}

fn items(n: usize, seed: u64) -> Vec<PatternItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slots = position_labels(3).len();
    (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { Number::Plur } else { Number::Sing };
            let y = if label == Number::Plur { 1.0f32 } else { -1.0 };
            PatternItem {
                sent_id: format!("p{i}"),
                label,
                attractor: rng.gen_bool(0.5),
                vectors: (0..slots)
                    .map(|s| Some((0..4).map(|k| rng.gen_range(-1.0f32..1.0) + if k == 0 { y * s as f32 * 0.3 } else { 0.0 }).collect()))
                    .collect(),
            }
        })
        .collect()
}

#[test]
fn positional_splits_never_share_sentences() {
    let cfg = PositionalConfig { n_train: 200, n_test: 60, ..PositionalConfig::default() };
    let r = positional_probe_suite(&items(400, 5), &cfg).unwrap();
    assert_eq!(r.splits.len(), 9);
    assert!(r.splits.iter().all(|s| s.shared_ids() == 0 && s.train_ids.len() == 200 && s.test_ids.len() == 60));
    let means = average_cells(&r);
    let all: Vec<f64> = means.iter().filter(|(c, _, _)| c.ends_with("/all")).map(|m| m.1).collect();
    assert!(all.first().unwrap() < all.last().unwrap());
}

#[test]
fn short_classes_scale_down_with_a_warning() {
    let cfg = PositionalConfig { n_train: 800, n_test: 200, seeds: vec![0], splits: 1, ..PositionalConfig::default() };
    let r = positional_probe_suite(&items(100, 6), &cfg).unwrap();
    assert_eq!(r.warnings.len(), 1);
    assert_eq!(r.splits[0].shared_ids(), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn probe_predictions_flip_with_negated_inputs(
        pts in proptest::collection::vec((-3.0f32..3.0, -3.0f32..3.0), 6..40),
    ) {
        let ys: Vec<bool> = pts.iter().map(|p| p.0 + 0.5 * p.1 > 0.0).collect();
        prop_assume!(ys.iter().any(|&y| y) && ys.iter().any(|&y| !y));
        let fwd: Vec<[f32; 2]> = pts.iter().map(|p| [p.0, p.1]).collect();
        let neg: Vec<[f32; 2]> = pts.iter().map(|p| [-p.0, -p.1]).collect();
        let xf: Vec<&[f32]> = fwd.iter().map(|p| p.as_slice()).collect();
        let xn: Vec<&[f32]> = neg.iter().map(|p| p.as_slice()).collect();
        let cfg = ProbeConfig::default();
        let a = fit_logistic(&xf, &ys, &cfg).unwrap();
        let b = fit_logistic(&xn, &ys, &cfg).unwrap();
        for (w, v) in a.weights.iter().zip(&b.weights) {
            prop_assert!((w + v).abs() < 1e-6);
        }
        prop_assert!((a.bias - b.bias).abs() < 1e-6);
    }
}
