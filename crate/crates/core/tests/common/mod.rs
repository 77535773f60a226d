//! Helpers shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use accord::conllu::{parse_str, Corpus, ParseMode};
use accord::intervention::MaskSpec;
use accord::lm::{ModelConfig, TransformerLM};

pub fn ladder() -> Corpus {
    parse_str(include_str!("../fixtures/ladder.conllu"), "ladder", ParseMode::Strict).unwrap().corpus
}

pub fn moments() -> Corpus {
    parse_str(include_str!("../fixtures/moments.conllu"), "moments", ParseMode::Strict).unwrap().corpus
}

pub fn toy_config(pre_norm: bool, tie: bool, seed: u64) -> ModelConfig {
    ModelConfig {
        n_layers: 2,
        n_heads: 2,
        d_model: 8,
        d_ffn: 12,
        vocab_size: 17,
        dropout: 0.0,
        max_len: 24,
        seed,
        pre_norm,
        tie_embeddings: tie,
    }
}

pub fn toy_model(pre_norm: bool, tie: bool, seed: u64) -> TransformerLM<f64> {
    let mut m = TransformerLM::<f64>::init(toy_config(pre_norm, tie, seed)).unwrap();
    // Non-trivial biases and gains so the oracle exercises every parameter.
    let mut k = 0u64;
    for t in m.params.tensors_mut() {
        for x in t.iter_mut() {
            k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *x += ((k >> 33) as f64 / (1u64 << 31) as f64 - 0.5) * 0.2;
        }
    }
    m
}

/// Output of the reference implementation for one sequence.
pub struct Naive {
    pub logits: Vec<Vec<f64>>,
    /// `[layer][head][query][key]`.
    pub attention: Vec<Vec<Vec<Vec<f64>>>>,
}

fn vecmat(x: &[f64], w: &ndarray::Array2<f64>, b: &ndarray::Array1<f64>) -> Vec<f64> {
    (0..w.ncols()).map(|j| b[j] + (0..w.nrows()).map(|i| x[i] * w[[i, j]]).sum::<f64>()).collect()
}

fn norm(x: &[f64], g: &ndarray::Array1<f64>, b: &ndarray::Array1<f64>) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let r = 1.0 / (var + 1e-5).sqrt();
    x.iter().enumerate().map(|(i, v)| (v - mean) * r * g[i] + b[i]).collect()
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + ((2.0 / std::f64::consts::PI).sqrt() * (x + 0.044715 * x.powi(3))).tanh())
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Position-by-position recomputation with plain loops, independent of the
/// batched matrix code.
pub fn naive_forward(model: &TransformerLM<f64>, ids: &[u32], mask: Option<&MaskSpec>) -> Naive {
    let cfg = &model.config;
    let p = &model.params;
    let d = cfg.d_model;
    let dh = d / cfg.n_heads;
    let t = ids.len();
    let mut x: Vec<Vec<f64>> = (0..t)
        .map(|pos| {
            (0..d)
                .map(|i| {
                    let freq = 1.0 / 10_000f64.powf((2 * (i / 2)) as f64 / d as f64);
                    let pe = if i % 2 == 0 { (pos as f64 * freq).sin() } else { (pos as f64 * freq).cos() };
                    p.embed[[ids[pos] as usize, i]] * (d as f64).sqrt() + pe
                })
                .collect()
        })
        .collect();
    let mut attention = Vec::new();
    for (li, lp) in p.layers.iter().enumerate() {
        let h1: Vec<Vec<f64>> =
            if cfg.pre_norm { x.iter().map(|r| norm(r, &lp.ln1_g, &lp.ln1_b)).collect() } else { x.clone() };
        let q: Vec<Vec<f64>> = h1.iter().map(|r| vecmat(r, &lp.wq, &lp.bq)).collect();
        let k: Vec<Vec<f64>> = h1.iter().map(|r| vecmat(r, &lp.wk, &lp.bk)).collect();
        let v: Vec<Vec<f64>> = h1.iter().map(|r| vecmat(r, &lp.wv, &lp.bv)).collect();
        let mut ctx = vec![vec![0.0; d]; t];
        let mut heads = Vec::new();
        for h in 0..cfg.n_heads {
            let mut probs = vec![vec![0.0; t]; t];
            for i in 0..t {
                let hidden = |j: usize| {
                    mask.is_some_and(|m| m.applies_to_layer(li) && m.query_position == i && m.masked_key_positions.contains(&j))
                };
                let scores: Vec<Option<f64>> = (0..t)
                    .map(|j| {
                        (j <= i && !hidden(j)).then(|| {
                            (0..dh).map(|c| q[i][h * dh + c] * k[j][h * dh + c]).sum::<f64>() / (dh as f64).sqrt()
                        })
                    })
                    .collect();
                let max = scores.iter().flatten().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let z: f64 = scores.iter().flatten().map(|s| (s - max).exp()).sum();
                for j in 0..t {
                    probs[i][j] = scores[j].map_or(0.0, |s| (s - max).exp() / z);
                    for c in 0..dh {
                        ctx[i][h * dh + c] += probs[i][j] * v[j][h * dh + c];
                    }
                }
            }
            heads.push(probs);
        }
        attention.push(heads);
        let a: Vec<Vec<f64>> = ctx.iter().map(|r| vecmat(r, &lp.wo, &lp.bo)).collect();
        let mut mid: Vec<Vec<f64>> = x.iter().zip(&a).map(|(r, s)| add(r, s)).collect();
        if !cfg.pre_norm {
            mid = mid.iter().map(|r| norm(r, &lp.ln1_g, &lp.ln1_b)).collect();
        }
        let h2: Vec<Vec<f64>> =
            if cfg.pre_norm { mid.iter().map(|r| norm(r, &lp.ln2_g, &lp.ln2_b)).collect() } else { mid.clone() };
        let f: Vec<Vec<f64>> = h2
            .iter()
            .map(|r| {
                let inner: Vec<f64> = vecmat(r, &lp.w1, &lp.b1).into_iter().map(gelu).collect();
                vecmat(&inner, &lp.w2, &lp.b2)
            })
            .collect();
        x = mid.iter().zip(&f).map(|(r, s)| add(r, s)).collect();
        if !cfg.pre_norm {
            x = x.iter().map(|r| norm(r, &lp.ln2_g, &lp.ln2_b)).collect();
        }
    }
    if let (Some(g), Some(b)) = (&p.lnf_g, &p.lnf_b) {
        x = x.iter().map(|r| norm(r, g, b)).collect();
    }
    let w_out = p.out_w.as_ref().unwrap_or(&p.embed);
    let logits = x
        .iter()
        .map(|r| (0..cfg.vocab_size).map(|tok| p.out_b[tok] + (0..d).map(|i| r[i] * w_out[[tok, i]]).sum::<f64>()).collect())
        .collect();
    Naive { logits, attention }
}

/// Largest absolute difference between the model's logits and the reference.
pub fn forward_gap(model: &TransformerLM<f64>, ids: &[u32], mask: Option<&MaskSpec>) -> f64 {
    let fast = model.forward(ids, mask).unwrap();
    let slow = naive_forward(model, ids, mask);
    let mut gap = 0.0f64;
    for (i, row) in slow.logits.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            gap = gap.max((fast.logits[[i, j]] - v).abs());
        }
    }
    for (l, heads) in slow.attention.iter().enumerate() {
        for (h, probs) in heads.iter().enumerate() {
            for (i, row) in probs.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    gap = gap.max((fast.attention[l][h][[i, j]] - v).abs());
                }
            }
        }
    }
    gap
}

/// Worst relative error of analytic gradients against central differences
/// over `samples` parameters chosen by stride. Magnitudes below 1e-4 are
/// compared on an absolute scale.
pub fn gradient_gap(model: &TransformerLM<f64>, batch: &[&[u32]], samples: usize) -> (f64, usize) {
    let (_, grad) = model.loss_and_grad(batch, None);
    let flat_grad: Vec<f64> = grad.tensors().iter().flat_map(|(_, _, d)| d.iter().copied()).collect();
    let total = flat_grad.len();
    let stride = (total / samples).max(1);
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for idx in (0..total).step_by(stride).take(samples) {
        let loss_at = |delta: f64| {
            let mut m = model.clone();
            let mut seen = 0;
            for t in m.params.tensors_mut() {
                if idx < seen + t.len() {
                    t[idx - seen] += delta;
                    break;
                }
                seen += t.len();
            }
            m.loss_and_grad(batch, None).0
        };
        let numeric = (loss_at(h) - loss_at(-h)) / (2.0 * h);
        let analytic = flat_grad[idx];
        let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-4);
        worst = worst.max(rel);
        checked += 1;
    }
    (worst, checked)
}
