use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{LmError, ModelConfig, Params, Scalar};
use crate::intervention::MaskSpec;

const LN_EPS: f64 = 1e-5;

/// Everything a forward pass over one sequence exposes.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace<F> {
    /// `[T, vocab]`; row `i` scores the token at position `i + 1`.
    pub logits: Array2<F>,
    /// Residual stream: entry 0 is the embedding output, entry `l + 1` the
    /// output of block `l`.
    pub hidden: Vec<Array2<F>>,
    /// Input to the output projection (after the final norm when present).
    pub final_hidden: Array2<F>,
    /// `[layer][head]`, each `[T, T]` (query × key).
    pub attention: Vec<Vec<Array2<F>>>,
}

impl<F: Scalar> ForwardTrace<F> {
    /// Log-softmax of the logits at `position`.
    pub fn log_probs_at(&self, position: usize) -> Array1<F> {
        log_softmax(self.logits.row(position).to_owned())
    }
}

pub(crate) fn log_softmax<F: Scalar>(mut row: Array1<F>) -> Array1<F> {
    let max = row.iter().fold(F::neg_infinity(), |m, &x| m.max(x));
    let lse = row.iter().map(|&x| (x - max).exp()).sum::<F>().ln() + max;
    row.mapv_inplace(|x| x - lse);
    row
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformerLM<F> {
    pub config: ModelConfig,
    pub params: Params<F>,
    positions: Array2<F>,
}

struct LnCache<F> {
    xhat: Array2<F>,
    rstd: Array1<F>,
}

struct LayerCache<F> {
    x_in: Array2<F>,
    ln1: LnCache<F>,
    h1: Array2<F>,
    q: Array2<F>,
    k: Array2<F>,
    v: Array2<F>,
    /// Index `seq * n_heads + head`.
    probs: Vec<Array2<F>>,
    ctx: Array2<F>,
    drop1: Option<Array2<F>>,
    ln2: LnCache<F>,
    h2: Array2<F>,
    ff_pre: Array2<F>,
    ff_act: Array2<F>,
    drop2: Option<Array2<F>>,
}

struct Cache<F> {
    ids: Vec<u32>,
    spans: Vec<(usize, usize)>,
    drop0: Option<Array2<F>>,
    layers: Vec<LayerCache<F>>,
    x_last: Array2<F>,
    lnf: Option<LnCache<F>>,
    xf: Array2<F>,
    logits: Array2<F>,
}

fn sinusoidal<F: Scalar>(max_len: usize, d: usize) -> Array2<F> {
    Array2::from_shape_fn((max_len, d), |(pos, i)| {
        let freq = 1.0 / 10_000f64.powf((2 * (i / 2)) as f64 / d as f64);
        let angle = pos as f64 * freq;
        F::of(if i % 2 == 0 { angle.sin() } else { angle.cos() })
    })
}

fn gelu<F: Scalar>(x: F) -> F {
    let c = F::of((2.0 / std::f64::consts::PI).sqrt());
    let k = F::of(0.044715);
    let half = F::of(0.5);
    half * x * (F::one() + (c * (x + k * x * x * x)).tanh())
}

fn gelu_grad<F: Scalar>(x: F) -> F {
    let c = F::of((2.0 / std::f64::consts::PI).sqrt());
    let k = F::of(0.044715);
    let half = F::of(0.5);
    let t = (c * (x + k * x * x * x)).tanh();
    half * (F::one() + t) + half * x * (F::one() - t * t) * c * (F::one() + F::of(3.0) * k * x * x)
}

fn layer_norm<F: Scalar>(x: &Array2<F>, g: &Array1<F>, b: &Array1<F>) -> (Array2<F>, LnCache<F>) {
    let d = F::of(x.ncols() as f64);
    let eps = F::of(LN_EPS);
    let mut xhat = x.clone();
    let mut rstd = Array1::zeros(x.nrows());
    for (mut row, r) in xhat.rows_mut().into_iter().zip(rstd.iter_mut()) {
        let mean = row.sum() / d;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() / d;
        *r = F::one() / (var + eps).sqrt();
        let rs = *r;
        row.mapv_inplace(|v| (v - mean) * rs);
    }
    let y = &xhat * g + b;
    (y, LnCache { xhat, rstd })
}

fn layer_norm_back<F: Scalar>(
    dy: &Array2<F>,
    c: &LnCache<F>,
    g: &Array1<F>,
    dg: &mut Array1<F>,
    db: &mut Array1<F>,
) -> Array2<F> {
    *dg += &(dy * &c.xhat).sum_axis(Axis(0));
    *db += &dy.sum_axis(Axis(0));
    let d = F::of(dy.ncols() as f64);
    let mut dx = dy * g;
    for ((mut row, xh), &r) in dx.rows_mut().into_iter().zip(c.xhat.rows()).zip(c.rstd.iter()) {
        let m1 = row.sum() / d;
        let m2 = row.iter().zip(xh.iter()).map(|(&a, &b)| a * b).sum::<F>() / d;
        Zip::from(&mut row).and(&xh).for_each(|v, &h| *v = (*v - m1 - h * m2) * r);
    }
    dx
}

fn linear<F: Scalar>(x: &Array2<F>, w: &Array2<F>, b: &Array1<F>) -> Array2<F> {
    let mut y = x.dot(w);
    y += b;
    y
}

/// `dW += xᵀ dy`, `db += Σ dy`, returns `dy Wᵀ`.
fn linear_back<F: Scalar>(
    x: &Array2<F>,
    dy: &Array2<F>,
    w: &Array2<F>,
    dw: &mut Array2<F>,
    db: &mut Array1<F>,
) -> Array2<F> {
    general_mat_mul(F::one(), &x.t(), dy, F::one(), dw);
    *db += &dy.sum_axis(Axis(0));
    dy.dot(&w.t())
}

fn dropout_mask<F: Scalar>(rng: &mut ChaCha8Rng, shape: (usize, usize), p: f64) -> Array2<F> {
    let keep = F::of(1.0 / (1.0 - p));
    Array2::from_shape_simple_fn(shape, || if rng.gen::<f64>() < p { F::zero() } else { keep })
}

/// Softmax over the allowed keys of one row; all other entries are exactly 0.
fn masked_softmax_row<F: Scalar>(scores: &mut [F], allowed: impl Fn(usize) -> bool) {
    let mut max = F::neg_infinity();
    for (j, &s) in scores.iter().enumerate() {
        if allowed(j) && s > max {
            max = s;
        }
    }
    let mut sum = F::zero();
    for (j, s) in scores.iter_mut().enumerate() {
        if allowed(j) {
            *s = (*s - max).exp();
            sum += *s;
        } else {
            *s = F::zero();
        }
    }
    for (j, s) in scores.iter_mut().enumerate() {
        if allowed(j) {
            *s /= sum;
        }
    }
}

impl<F: Scalar> TransformerLM<F> {
    pub fn init(config: ModelConfig) -> Result<Self, LmError> {
        config.validate()?;
        let params = Params::init(&config);
        Ok(Self::from_params(config, params))
    }

    pub fn from_params(config: ModelConfig, params: Params<F>) -> Self {
        let positions = sinusoidal(config.max_len, config.d_model);
        TransformerLM { config, params, positions }
    }

    /// Same weights in another precision.
    pub fn convert<G: Scalar>(&self) -> TransformerLM<G> {
        let params = self.params.map(|x| G::of(x.to_f64().expect("finite")));
        TransformerLM::from_params(self.config.clone(), params)
    }

    pub fn check_ids(&self, ids: &[u32]) -> Result<(), LmError> {
        if ids.is_empty() {
            return Err(LmError::EmptySequence);
        }
        if ids.len() > self.config.max_len {
            return Err(LmError::SequenceTooLong { len: ids.len(), max: self.config.max_len });
        }
        if let Some(&id) = ids.iter().find(|&&id| id as usize >= self.config.vocab_size) {
            return Err(LmError::OutOfVocabId { id, vocab: self.config.vocab_size });
        }
        Ok(())
    }

    fn check_mask(&self, len: usize, mask: &MaskSpec) -> Result<(), LmError> {
        let q = mask.query_position;
        if q >= len {
            return Err(LmError::InvalidMask(format!("query position {q} outside sequence of length {len}")));
        }
        if let Some(&k) = mask.masked_key_positions.iter().find(|&&k| k == 0 || k >= q) {
            return Err(LmError::InvalidMask(format!("key {k} is the sentence marker, the query or after it")));
        }
        Ok(())
    }

    /// Evaluation-mode forward pass (no dropout) over one sequence.
    pub fn forward(&self, ids: &[u32], mask: Option<&MaskSpec>) -> Result<ForwardTrace<F>, LmError> {
        self.check_ids(ids)?;
        if let Some(m) = mask {
            self.check_mask(ids.len(), m)?;
        }
        let cache = self.run(&[ids], &[mask], None);
        let mut hidden: Vec<Array2<F>> = cache.layers.iter().map(|l| l.x_in.clone()).collect();
        hidden.push(cache.x_last);
        let attention = cache.layers.into_iter().map(|l| l.probs).collect();
        Ok(ForwardTrace { logits: cache.logits, hidden, final_hidden: cache.xf, attention })
    }

    /// `log P(candidate | prefix)` from the final position's logits.
    pub fn score_candidates(
        &self,
        prefix: &[u32],
        candidates: &[u32],
        mask: Option<&MaskSpec>,
    ) -> Result<Vec<F>, LmError> {
        if candidates.is_empty() {
            return Err(LmError::NoCandidates);
        }
        self.check_ids(candidates)?;
        let trace = self.forward(prefix, mask)?;
        let lp = trace.log_probs_at(prefix.len() - 1);
        Ok(candidates.iter().map(|&c| lp[c as usize]).collect())
    }

    /// Summed next-token negative log-likelihood and number of predictions
    /// for each sequence (inputs `s[..n-1]`, targets `s[1..]`).
    pub fn sequence_nll(&self, seq: &[u32]) -> Result<(f64, usize), LmError> {
        if seq.len() < 2 {
            return Ok((0.0, 0));
        }
        self.check_ids(seq)?;
        let input = &seq[..seq.len() - 1];
        let cache = self.run(&[input], &[None], None);
        let mut nll = 0.0;
        for (row, &t) in cache.logits.rows().into_iter().zip(&seq[1..]) {
            let lp = log_softmax(row.to_owned());
            nll -= lp[t as usize].to_f64().expect("finite");
        }
        Ok((nll, seq.len() - 1))
    }

    /// Mean cross-entropy over every next-token prediction in `batch` and its
    /// gradient. Dropout is active iff `rng` is given.
    pub fn loss_and_grad(&self, batch: &[&[u32]], rng: Option<&mut ChaCha8Rng>) -> (F, Params<F>) {
        let inputs: Vec<&[u32]> = batch.iter().map(|s| &s[..s.len() - 1]).collect();
        let masks = vec![None; inputs.len()];
        let cache = self.run(&inputs, &masks, rng);
        let targets: Vec<u32> = batch.iter().flat_map(|s| s[1..].iter().copied()).collect();
        let n = F::of(targets.len() as f64);
        let mut dlogits = cache.logits.clone();
        let mut loss = F::zero();
        for (mut row, &t) in dlogits.rows_mut().into_iter().zip(&targets) {
            let max = row.iter().fold(F::neg_infinity(), |m, &x| m.max(x));
            row.mapv_inplace(|x| (x - max).exp());
            let sum = row.sum();
            loss -= (row[t as usize] / sum).ln();
            row.mapv_inplace(|x| x / sum / n);
            row[t as usize] -= F::one() / n;
        }
        let grad = self.backward(&cache, &dlogits);
        (loss / n, grad)
    }

    fn run(&self, seqs: &[&[u32]], masks: &[Option<&MaskSpec>], mut rng: Option<&mut ChaCha8Rng>) -> Cache<F> {
        let cfg = &self.config;
        let p = &self.params;
        let d = cfg.d_model;
        let mut spans = Vec::with_capacity(seqs.len());
        let mut ids = Vec::new();
        for s in seqs {
            spans.push((ids.len(), s.len()));
            ids.extend_from_slice(s);
        }
        let n = ids.len();
        let scale = F::of((d as f64).sqrt());
        let mut x = Array2::zeros((n, d));
        for &(start, len) in &spans {
            for i in 0..len {
                let e = p.embed.row(ids[start + i] as usize);
                let pe = self.positions.row(i);
                Zip::from(x.row_mut(start + i)).and(&e).and(&pe).for_each(|o, &a, &b| *o = a * scale + b);
            }
        }
        let drop = cfg.dropout;
        let mask_for = |rng: &mut Option<&mut ChaCha8Rng>, shape| match rng {
            Some(r) if drop > 0.0 => Some(dropout_mask::<F>(r, shape, drop)),
            _ => None,
        };
        let drop0 = mask_for(&mut rng, (n, d));
        if let Some(m) = &drop0 {
            x *= m;
        }
        let mut layers = Vec::with_capacity(cfg.n_layers);
        for (li, lp) in p.layers.iter().enumerate() {
            let x_in = x;
            let (h1, ln1) = if cfg.pre_norm {
                layer_norm(&x_in, &lp.ln1_g, &lp.ln1_b)
            } else {
                (x_in.clone(), LnCache { xhat: Array2::zeros((0, 0)), rstd: Array1::zeros(0) })
            };
            let q = linear(&h1, &lp.wq, &lp.bq);
            let k = linear(&h1, &lp.wk, &lp.bk);
            let v = linear(&h1, &lp.wv, &lp.bv);
            let (probs, ctx) = self.attend(li, &q, &k, &v, &spans, masks);
            let mut a = linear(&ctx, &lp.wo, &lp.bo);
            let drop1 = mask_for(&mut rng, (n, d));
            if let Some(m) = &drop1 {
                a *= m;
            }
            let mut mid = &x_in + &a;
            let (h2, ln1, ln2_pre) = if cfg.pre_norm {
                let (h2, ln2) = layer_norm(&mid, &lp.ln2_g, &lp.ln2_b);
                (h2, ln1, Some(ln2))
            } else {
                let (normed, c) = layer_norm(&mid, &lp.ln1_g, &lp.ln1_b);
                mid = normed;
                (mid.clone(), c, None)
            };
            let ff_pre = linear(&h2, &lp.w1, &lp.b1);
            let ff_act = ff_pre.mapv(gelu);
            let mut f = linear(&ff_act, &lp.w2, &lp.b2);
            let drop2 = mask_for(&mut rng, (n, d));
            if let Some(m) = &drop2 {
                f *= m;
            }
            let out = &mid + &f;
            let (x_out, ln2) = match ln2_pre {
                Some(c) => (out, c),
                None => layer_norm(&out, &lp.ln2_g, &lp.ln2_b),
            };
            layers.push(LayerCache {
                x_in,
                ln1,
                h1,
                q,
                k,
                v,
                probs,
                ctx,
                drop1,
                ln2,
                h2,
                ff_pre,
                ff_act,
                drop2,
            });
            x = x_out;
        }
        let (xf, lnf) = match (&p.lnf_g, &p.lnf_b) {
            (Some(g), Some(b)) => {
                let (y, c) = layer_norm(&x, g, b);
                (y, Some(c))
            }
            _ => (x.clone(), None),
        };
        let w_out = p.out_w.as_ref().unwrap_or(&p.embed);
        let mut logits = xf.dot(&w_out.t());
        logits += &p.out_b;
        Cache { ids, spans, drop0, layers, x_last: x, lnf, xf, logits }
    }

    fn attend(
        &self,
        layer: usize,
        q: &Array2<F>,
        k: &Array2<F>,
        v: &Array2<F>,
        spans: &[(usize, usize)],
        masks: &[Option<&MaskSpec>],
    ) -> (Vec<Array2<F>>, Array2<F>) {
        let h = self.config.n_heads;
        let dh = self.config.head_dim();
        let scale = F::of(1.0 / (dh as f64).sqrt());
        let mut probs = Vec::with_capacity(spans.len() * h);
        let mut ctx = Array2::zeros(q.raw_dim());
        for (&(start, len), mask) in spans.iter().zip(masks) {
            let mask = mask.filter(|m| m.applies_to_layer(layer));
            for head in 0..h {
                let cols = head * dh..(head + 1) * dh;
                let qs = q.slice(s![start..start + len, cols.clone()]);
                let ks = k.slice(s![start..start + len, cols.clone()]);
                let vs = v.slice(s![start..start + len, cols.clone()]);
                let mut sc = qs.dot(&ks.t());
                sc *= scale;
                for (i, mut row) in sc.rows_mut().into_iter().enumerate() {
                    let row = row.as_slice_mut().expect("contiguous");
                    match mask {
                        Some(m) if m.query_position == i => {
                            masked_softmax_row(row, |j| j <= i && !m.masked_key_positions.contains(&j))
                        }
                        _ => masked_softmax_row(row, |j| j <= i),
                    }
                }
                ctx.slice_mut(s![start..start + len, cols]).assign(&sc.dot(&vs));
                probs.push(sc);
            }
        }
        (probs, ctx)
    }

    fn attend_back(
        &self,
        c: &LayerCache<F>,
        spans: &[(usize, usize)],
        dctx: &Array2<F>,
    ) -> (Array2<F>, Array2<F>, Array2<F>) {
        let h = self.config.n_heads;
        let dh = self.config.head_dim();
        let scale = F::of(1.0 / (dh as f64).sqrt());
        let mut dq = Array2::zeros(c.q.raw_dim());
        let mut dk = Array2::zeros(c.k.raw_dim());
        let mut dv = Array2::zeros(c.v.raw_dim());
        for (si, &(start, len)) in spans.iter().enumerate() {
            for head in 0..h {
                let p = &c.probs[si * h + head];
                let cols = head * dh..(head + 1) * dh;
                let rows = start..start + len;
                let qs = c.q.slice(s![rows.clone(), cols.clone()]);
                let ks = c.k.slice(s![rows.clone(), cols.clone()]);
                let vs = c.v.slice(s![rows.clone(), cols.clone()]);
                let dc = dctx.slice(s![rows.clone(), cols.clone()]);
                let mut ds = dc.dot(&vs.t());
                dv.slice_mut(s![rows.clone(), cols.clone()]).assign(&p.t().dot(&dc));
                for (mut drow, prow) in ds.rows_mut().into_iter().zip(p.rows()) {
                    let dot = drow.iter().zip(prow.iter()).map(|(&a, &b)| a * b).sum::<F>();
                    Zip::from(&mut drow).and(&prow).for_each(|g, &pp| *g = pp * (*g - dot) * scale);
                }
                dq.slice_mut(s![rows.clone(), cols.clone()]).assign(&ds.dot(&ks));
                dk.slice_mut(s![rows, cols]).assign(&ds.t().dot(&qs));
            }
        }
        (dq, dk, dv)
    }

    fn backward(&self, cache: &Cache<F>, dlogits: &Array2<F>) -> Params<F> {
        let cfg = &self.config;
        let p = &self.params;
        let mut g = p.zeros_like();
        g.out_b += &dlogits.sum_axis(Axis(0));
        let w_out = p.out_w.as_ref().unwrap_or(&p.embed);
        {
            let dw = g.out_w.as_mut().unwrap_or(&mut g.embed);
            general_mat_mul(F::one(), &dlogits.t(), &cache.xf, F::one(), dw);
        }
        let dxf = dlogits.dot(w_out);
        let mut dx = match (&cache.lnf, &p.lnf_g, g.lnf_g.as_mut(), g.lnf_b.as_mut()) {
            (Some(c), Some(gain), Some(dg), Some(db)) => layer_norm_back(&dxf, c, gain, dg, db),
            _ => dxf,
        };
        for (li, (lp, c)) in p.layers.iter().zip(&cache.layers).enumerate().rev() {
            let lg = &mut g.layers[li];
            // Gradient w.r.t. the sum feeding the second residual.
            let d_out = if cfg.pre_norm {
                dx
            } else {
                layer_norm_back(&dx, &c.ln2, &lp.ln2_g, &mut lg.ln2_g, &mut lg.ln2_b)
            };
            let mut df = d_out.clone();
            if let Some(m) = &c.drop2 {
                df *= m;
            }
            let dact = linear_back(&c.ff_act, &df, &lp.w2, &mut lg.w2, &mut lg.b2);
            let dpre = Zip::from(&dact).and(&c.ff_pre).map_collect(|&a, &x| a * gelu_grad(x));
            let dh2 = linear_back(&c.h2, &dpre, &lp.w1, &mut lg.w1, &mut lg.b1);
            let mut dmid = d_out;
            if cfg.pre_norm {
                dmid += &layer_norm_back(&dh2, &c.ln2, &lp.ln2_g, &mut lg.ln2_g, &mut lg.ln2_b);
            } else {
                dmid += &dh2;
            }
            // Gradient w.r.t. the sum feeding the first residual.
            let d_sum = if cfg.pre_norm {
                dmid
            } else {
                layer_norm_back(&dmid, &c.ln1, &lp.ln1_g, &mut lg.ln1_g, &mut lg.ln1_b)
            };
            let mut da = d_sum.clone();
            if let Some(m) = &c.drop1 {
                da *= m;
            }
            let dctx = linear_back(&c.ctx, &da, &lp.wo, &mut lg.wo, &mut lg.bo);
            let (dq, dk, dv) = self.attend_back(c, &cache.spans, &dctx);
            let mut dh1 = linear_back(&c.h1, &dq, &lp.wq, &mut lg.wq, &mut lg.bq);
            dh1 += &linear_back(&c.h1, &dk, &lp.wk, &mut lg.wk, &mut lg.bk);
            dh1 += &linear_back(&c.h1, &dv, &lp.wv, &mut lg.wv, &mut lg.bv);
            let mut dx_in = d_sum;
            if cfg.pre_norm {
                dx_in += &layer_norm_back(&dh1, &c.ln1, &lp.ln1_g, &mut lg.ln1_g, &mut lg.ln1_b);
            } else {
                dx_in += &dh1;
            }
            dx = dx_in;
        }
        if let Some(m) = &cache.drop0 {
            dx *= m;
        }
        let scale = F::of((cfg.d_model as f64).sqrt());
        for (row, &id) in dx.rows().into_iter().zip(&cache.ids) {
            let mut e = g.embed.row_mut(id as usize);
            Zip::from(&mut e).and(&row).for_each(|a, &b| *a += b * scale);
        }
        g
    }

    /// Sinusoidal position table, `[max_len, d_model]`.
    pub fn positions(&self) -> ArrayView2<'_, F> {
        self.positions.view()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(pre_norm: bool) -> TransformerLM<f64> {
        let cfg = ModelConfig {
            n_layers: 2,
            n_heads: 2,
            d_model: 8,
            d_ffn: 16,
            vocab_size: 13,
            dropout: 0.0,
            max_len: 16,
            seed: 3,
            pre_norm,
            tie_embeddings: true,
        };
        TransformerLM::init(cfg).unwrap()
    }

    #[test]
    fn single_token_attends_to_itself() {
        let m = tiny(true);
        let t = m.forward(&[0], None).unwrap();
        for layer in &t.attention {
            for head in layer {
                assert_eq!(head[[0, 0]], 1.0);
            }
        }
    }

    #[test]
    fn rows_are_distributions_and_causal() {
        let m = tiny(true);
        let t = m.forward(&[0, 4, 7, 2, 9], None).unwrap();
        for head in t.attention.iter().flatten() {
            for (i, row) in head.rows().into_iter().enumerate() {
                assert!((row.sum() - 1.0).abs() < 1e-12);
                assert!(row.iter().skip(i + 1).all(|&w| w == 0.0));
            }
        }
    }

    #[test]
    fn input_validation() {
        let m = tiny(true);
        assert_eq!(m.forward(&[], None), Err(LmError::EmptySequence));
        assert_eq!(m.forward(&[0, 13], None), Err(LmError::OutOfVocabId { id: 13, vocab: 13 }));
        assert_eq!(m.forward(&[0; 17], None), Err(LmError::SequenceTooLong { len: 17, max: 16 }));
        assert_eq!(m.score_candidates(&[0], &[], None), Err(LmError::NoCandidates));
    }

    #[test]
    fn zero_output_layer_gives_uniform_scores() {
        let mut m = tiny(false);
        m.params.embed.fill(0.0);
        let (nll, n) = m.sequence_nll(&[0, 1, 2, 3]).unwrap();
        assert!(((nll / n as f64).exp() - 13.0).abs() < 1e-9);
    }

    #[test]
    fn identical_candidates_score_identically() {
        let m = tiny(true);
        let s = m.score_candidates(&[0, 5, 6], &[4, 4], None).unwrap();
        assert_eq!(s[0], s[1]);
    }

    #[test]
    fn loss_matches_sequence_nll() {
        for pre in [true, false] {
            let m = tiny(pre);
            let seqs: [&[u32]; 2] = [&[0, 3, 4, 5, 1], &[0, 7, 1]];
            let (loss, _) = m.loss_and_grad(&seqs, None);
            let (a, na) = m.sequence_nll(seqs[0]).unwrap();
            let (b, nb) = m.sequence_nll(seqs[1]).unwrap();
            assert!((loss - (a + b) / (na + nb) as f64).abs() < 1e-12);
        }
    }
}
