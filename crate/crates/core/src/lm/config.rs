use serde::{Deserialize, Serialize};

use super::LmError;

/// Vocabulary size under which the reference preset has exactly the
/// published parameter count.
pub const REFERENCE_VOCAB: usize = 50_001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_model: usize,
    pub d_ffn: usize,
    pub vocab_size: usize,
    pub dropout: f64,
    pub max_len: usize,
    pub seed: u64,
    /// Layer norm before each sublayer (plus a final norm) instead of after
    /// each residual addition.
    pub pre_norm: bool,
    /// Output projection shares the token embedding matrix.
    pub tie_embeddings: bool,
}

impl ModelConfig {
    /// 4 layers, 4 heads, width 128: trains in minutes on one core.
    pub fn desk(vocab_size: usize) -> Self {
        ModelConfig {
            n_layers: 4,
            n_heads: 4,
            d_model: 128,
            d_ffn: 512,
            vocab_size,
            dropout: 0.2,
            max_len: 128,
            seed: 0,
            pre_norm: true,
            tie_embeddings: true,
        }
    }

    /// 16 layers, 16 heads, width 768, post-norm. Shape reference only.
    pub fn reference(vocab_size: usize) -> Self {
        ModelConfig {
            n_layers: 16,
            n_heads: 16,
            d_model: 768,
            d_ffn: 2048,
            vocab_size,
            dropout: 0.1,
            max_len: 512,
            seed: 0,
            pre_norm: false,
            tie_embeddings: true,
        }
    }

    pub fn preset(name: &str, vocab_size: usize) -> Option<Self> {
        match name {
            "desk" => Some(Self::desk(vocab_size)),
            "reference" => Some(Self::reference(vocab_size)),
            _ => None,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<(), LmError> {
        let bad = |m: String| Err(LmError::InvalidConfig(m));
        if self.n_layers == 0 || self.n_heads == 0 || self.d_model == 0 || self.d_ffn == 0 {
            return bad("layer, head and width counts must be positive".into());
        }
        if self.d_model % self.n_heads != 0 {
            return bad(format!("d_model {} is not divisible by n_heads {}", self.d_model, self.n_heads));
        }
        if self.vocab_size < 2 {
            return bad(format!("vocab_size {} is too small", self.vocab_size));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} is outside [0, 1)", self.dropout));
        }
        if self.max_len == 0 {
            return bad("max_len must be positive".into());
        }
        Ok(())
    }

    /// Trainable parameters; the sinusoidal position table is not counted.
    pub fn param_count(&self) -> usize {
        let (d, f, v) = (self.d_model, self.d_ffn, self.vocab_size);
        let attention = 4 * (d * d + d);
        let norms = 2 * 2 * d;
        let ffn = d * f + f + f * d + d;
        let per_layer = attention + norms + ffn;
        let embed = v * d;
        let output = v + if self.tie_embeddings { 0 } else { v * d };
        let final_norm = if self.pre_norm { 2 * d } else { 0 };
        embed + output + self.n_layers * per_layer + final_norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn head_width() {
        let c = ModelConfig { d_model: 64, n_heads: 8, ..ModelConfig::desk(10) };
        assert_eq!(c.head_dim(), 8);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn rejects_bad_configs() {
        let base = ModelConfig::desk(100);
        assert!(ModelConfig { n_heads: 3, ..base.clone() }.validate().is_err());
        assert!(ModelConfig { dropout: 1.0, ..base.clone() }.validate().is_err());
        assert!(ModelConfig { n_layers: 0, ..base.clone() }.validate().is_err());
        assert!(ModelConfig { vocab_size: 1, ..base }.validate().is_err());
    }

    #[test]
    fn untied_and_prenorm_terms() {
        let tied = ModelConfig::reference(REFERENCE_VOCAB);
        let untied = ModelConfig { tie_embeddings: false, ..tied.clone() };
        assert_eq!(untied.param_count() - tied.param_count(), REFERENCE_VOCAB * 768);
        let pre = ModelConfig { pre_norm: true, ..tied.clone() };
        assert_eq!(pre.param_count() - tied.param_count(), 2 * 768);
    }
}
