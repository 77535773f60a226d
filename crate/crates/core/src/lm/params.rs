use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

use super::{ModelConfig, Scalar};
use crate::util::rng;

/// Weights of one transformer block. Matrices map row vectors: `y = x W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<F> {
    pub ln1_g: Array1<F>,
    pub ln1_b: Array1<F>,
    pub wq: Array2<F>,
    pub bq: Array1<F>,
    pub wk: Array2<F>,
    pub bk: Array1<F>,
    pub wv: Array2<F>,
    pub bv: Array1<F>,
    pub wo: Array2<F>,
    pub bo: Array1<F>,
    pub ln2_g: Array1<F>,
    pub ln2_b: Array1<F>,
    pub w1: Array2<F>,
    pub b1: Array1<F>,
    pub w2: Array2<F>,
    pub b2: Array1<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params<F> {
    /// `[vocab, d_model]`.
    pub embed: Array2<F>,
    /// Separate output matrix when embeddings are untied.
    pub out_w: Option<Array2<F>>,
    pub out_b: Array1<F>,
    pub layers: Vec<LayerParams<F>>,
    /// Final norm, present in pre-norm models.
    pub lnf_g: Option<Array1<F>>,
    pub lnf_b: Option<Array1<F>>,
}

impl<F: Scalar> LayerParams<F> {
    fn zeros(d: usize, f: usize) -> Self {
        let m = |r, c| Array2::zeros((r, c));
        let v = |n| Array1::zeros(n);
        LayerParams {
            ln1_g: v(d),
            ln1_b: v(d),
            wq: m(d, d),
            bq: v(d),
            wk: m(d, d),
            bk: v(d),
            wv: m(d, d),
            bv: v(d),
            wo: m(d, d),
            bo: v(d),
            ln2_g: v(d),
            ln2_b: v(d),
            w1: m(d, f),
            b1: v(f),
            w2: m(f, d),
            b2: v(d),
        }
    }
}

enum Slot<'a, F> {
    Vector(&'a Array1<F>),
    Matrix(&'a Array2<F>),
}

impl<F: Scalar> Params<F> {
    /// All-zero parameters shaped for `config`.
    pub fn zeros(config: &ModelConfig) -> Self {
        let (d, v) = (config.d_model, config.vocab_size);
        Params {
            embed: Array2::zeros((v, d)),
            out_w: (!config.tie_embeddings).then(|| Array2::zeros((v, d))),
            out_b: Array1::zeros(v),
            layers: (0..config.n_layers).map(|_| LayerParams::zeros(d, config.d_ffn)).collect(),
            lnf_g: config.pre_norm.then(|| Array1::zeros(d)),
            lnf_b: config.pre_norm.then(|| Array1::zeros(d)),
        }
    }

    pub fn zeros_like(&self) -> Self {
        self.map(|_| F::zero())
    }

    /// Seeded initialization: embeddings uniform in ±0.1, matrices N(0, 0.02)
    /// with residual output projections shrunk by `1/sqrt(2L)`, biases zero,
    /// norm gains one.
    pub fn init(config: &ModelConfig) -> Self {
        let mut p = Self::zeros(config);
        let mut rng = rng(config.seed);
        let normal = Normal::new(0.0, 0.02).expect("valid std");
        let residual = 1.0 / (2.0 * config.n_layers as f64).sqrt();
        p.embed.mapv_inplace(|_| F::of(rng.gen_range(-0.1..0.1)));
        for layer in &mut p.layers {
            for g in [&mut layer.ln1_g, &mut layer.ln2_g] {
                g.fill(F::one());
            }
            for w in [&mut layer.wq, &mut layer.wk, &mut layer.wv, &mut layer.w1] {
                w.mapv_inplace(|_| F::of(normal.sample(&mut rng)));
            }
            for w in [&mut layer.wo, &mut layer.w2] {
                w.mapv_inplace(|_| F::of(normal.sample(&mut rng) * residual));
            }
        }
        if let Some(w) = &mut p.out_w {
            w.mapv_inplace(|_| F::of(normal.sample(&mut rng)));
        }
        if let Some(g) = &mut p.lnf_g {
            g.fill(F::one());
        }
        p
    }

    fn slots(&self) -> Vec<(String, Slot<'_, F>)> {
        use Slot::{Matrix as M, Vector as V};
        let mut out = vec![("embed".to_string(), M(&self.embed))];
        if let Some(w) = &self.out_w {
            out.push(("out_w".into(), M(w)));
        }
        out.push(("out_b".into(), V(&self.out_b)));
        for (i, l) in self.layers.iter().enumerate() {
            let n = |s: &str| format!("layers.{i}.{s}");
            out.extend([
                (n("ln1_g"), V(&l.ln1_g)),
                (n("ln1_b"), V(&l.ln1_b)),
                (n("wq"), M(&l.wq)),
                (n("bq"), V(&l.bq)),
                (n("wk"), M(&l.wk)),
                (n("bk"), V(&l.bk)),
                (n("wv"), M(&l.wv)),
                (n("bv"), V(&l.bv)),
                (n("wo"), M(&l.wo)),
                (n("bo"), V(&l.bo)),
                (n("ln2_g"), V(&l.ln2_g)),
                (n("ln2_b"), V(&l.ln2_b)),
                (n("w1"), M(&l.w1)),
                (n("b1"), V(&l.b1)),
                (n("w2"), M(&l.w2)),
                (n("b2"), V(&l.b2)),
            ]);
        }
        if let (Some(g), Some(b)) = (&self.lnf_g, &self.lnf_b) {
            out.push(("lnf_g".into(), V(g)));
            out.push(("lnf_b".into(), V(b)));
        }
        out
    }

    /// Named tensors in a fixed order: name, shape, row-major data.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[F])> {
        self.slots()
            .into_iter()
            .map(|(name, slot)| match slot {
                Slot::Vector(a) => (name, a.shape().to_vec(), a.as_slice().expect("contiguous")),
                Slot::Matrix(a) => (name, a.shape().to_vec(), a.as_slice().expect("contiguous")),
            })
            .collect()
    }

    /// Mutable views in the same order as [`Params::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [F]> {
        let mut out: Vec<&mut [F]> = vec![self.embed.as_slice_mut().expect("contiguous")];
        if let Some(w) = &mut self.out_w {
            out.push(w.as_slice_mut().expect("contiguous"));
        }
        out.push(self.out_b.as_slice_mut().expect("contiguous"));
        for l in &mut self.layers {
            out.push(l.ln1_g.as_slice_mut().expect("contiguous"));
            out.push(l.ln1_b.as_slice_mut().expect("contiguous"));
            out.push(l.wq.as_slice_mut().expect("contiguous"));
            out.push(l.bq.as_slice_mut().expect("contiguous"));
            out.push(l.wk.as_slice_mut().expect("contiguous"));
            out.push(l.bk.as_slice_mut().expect("contiguous"));
            out.push(l.wv.as_slice_mut().expect("contiguous"));
            out.push(l.bv.as_slice_mut().expect("contiguous"));
            out.push(l.wo.as_slice_mut().expect("contiguous"));
            out.push(l.bo.as_slice_mut().expect("contiguous"));
            out.push(l.ln2_g.as_slice_mut().expect("contiguous"));
            out.push(l.ln2_b.as_slice_mut().expect("contiguous"));
            out.push(l.w1.as_slice_mut().expect("contiguous"));
            out.push(l.b1.as_slice_mut().expect("contiguous"));
            out.push(l.w2.as_slice_mut().expect("contiguous"));
            out.push(l.b2.as_slice_mut().expect("contiguous"));
        }
        if let (Some(g), Some(b)) = (&mut self.lnf_g, &mut self.lnf_b) {
            out.push(g.as_slice_mut().expect("contiguous"));
            out.push(b.as_slice_mut().expect("contiguous"));
        }
        out
    }

    /// Elementwise map into another scalar type (or the same one).
    pub fn map<G: Scalar>(&self, f: impl Fn(F) -> G + Copy) -> Params<G> {
        let m = |a: &Array2<F>| a.mapv(f);
        let v = |a: &Array1<F>| a.mapv(f);
        Params {
            embed: m(&self.embed),
            out_w: self.out_w.as_ref().map(m),
            out_b: v(&self.out_b),
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    ln1_g: v(&l.ln1_g),
                    ln1_b: v(&l.ln1_b),
                    wq: m(&l.wq),
                    bq: v(&l.bq),
                    wk: m(&l.wk),
                    bk: v(&l.bk),
                    wv: m(&l.wv),
                    bv: v(&l.bv),
                    wo: m(&l.wo),
                    bo: v(&l.bo),
                    ln2_g: v(&l.ln2_g),
                    ln2_b: v(&l.ln2_b),
                    w1: m(&l.w1),
                    b1: v(&l.b1),
                    w2: m(&l.w2),
                    b2: v(&l.b2),
                })
                .collect(),
            lnf_g: self.lnf_g.as_ref().map(v),
            lnf_b: self.lnf_b.as_ref().map(v),
        }
    }

    pub fn count(&self) -> usize {
        self.tensors().iter().map(|(_, _, d)| d.len()).sum()
    }

    /// SHA-256 over names, shapes and little-endian values.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        let mut buf = Vec::new();
        for (name, shape, data) in self.tensors() {
            h.update(name.as_bytes());
            for s in shape {
                h.update((s as u64).to_le_bytes());
            }
            buf.clear();
            for &x in data {
                x.write_le(&mut buf);
            }
            h.update(&buf);
        }
        hex::encode(h.finalize())
    }

    pub fn global_norm(&self) -> F {
        self.tensors()
            .iter()
            .flat_map(|(_, _, d)| d.iter())
            .fold(F::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    pub fn scale(&mut self, k: F) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= k);
        }
    }

    /// `self -= lr * grad`.
    pub fn sgd_step(&mut self, grad: &Params<F>, lr: F) {
        let grads: Vec<&[F]> = grad.tensors().into_iter().map(|(_, _, d)| d).collect();
        for (p, g) in self.tensors_mut().into_iter().zip(grads) {
            for (x, &dx) in p.iter_mut().zip(g) {
                *x -= lr * dx;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::REFERENCE_VOCAB;

    #[test]
    fn count_matches_formula() {
        for cfg in [
            ModelConfig::desk(57),
            ModelConfig { tie_embeddings: false, ..ModelConfig::desk(57) },
            ModelConfig { pre_norm: false, n_layers: 2, ..ModelConfig::desk(31) },
        ] {
            assert_eq!(Params::<f32>::zeros(&cfg).count(), cfg.param_count());
        }
    }

    #[test]
    fn reference_shapes() {
        let cfg = ModelConfig::reference(REFERENCE_VOCAB);
        let per_layer = 4 * (768 * 768 + 768) + 4 * 768 + 2 * 768 * 2048 + 2048 + 768;
        assert_eq!(cfg.param_count(), REFERENCE_VOCAB * 769 + 16 * per_layer);
    }

    #[test]
    fn init_is_seeded() {
        let cfg = ModelConfig { n_layers: 2, d_model: 16, d_ffn: 32, ..ModelConfig::desk(20) };
        let a = Params::<f32>::init(&cfg);
        assert_eq!(a.checksum(), Params::<f32>::init(&cfg).checksum());
        let b = Params::<f32>::init(&ModelConfig { seed: 1, ..cfg });
        assert_ne!(a.checksum(), b.checksum());
    }

    #[test]
    fn tensor_orders_agree() {
        let cfg = ModelConfig { n_layers: 2, d_model: 8, d_ffn: 16, n_heads: 2, ..ModelConfig::desk(9) };
        let mut p = Params::<f64>::init(&cfg);
        let lens: Vec<usize> = p.tensors().iter().map(|t| t.2.len()).collect();
        let lens_mut: Vec<usize> = p.tensors_mut().iter().map(|t| t.len()).collect();
        assert_eq!(lens, lens_mut);
    }
}
