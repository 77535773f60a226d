//! Plain-text run configuration: `key = value` lines, `#` comments.
//!
//! Keys are namespaced: `synth.*` (grammar), `heldout.sentences`,
//! `model.*` (`model.preset` resets every other model field, so it should
//! come first), `train.*`, `vocab.*`, `extract.*`, `heuristics.*`,
//! `probe.*` and `positional.*`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::extraction::SyntheticGrammarConfig;
use crate::lm::{ModelConfig, TrainHyperparams};
use crate::probing::PositionalConfig;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("config line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: bad value {value:?} for {key}")]
    Value { line: usize, key: String, value: String },
    #[error("config: {0}")]
    Invalid(String),
    #[error("config file {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub synth: SyntheticGrammarConfig,
    pub heldout_sentences: usize,
    /// `vocab_size` is filled in from the vocabulary at training time.
    pub model: ModelConfig,
    pub train: TrainHyperparams,
    pub min_freq: u64,
    pub lowercase: bool,
    pub include_cue_in_context: bool,
    pub adjacent_que: bool,
    pub positional: PositionalConfig,
    /// Keys set explicitly, in file order, with their raw values.
    pub explicit: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            synth: SyntheticGrammarConfig::default(),
            heldout_sentences: 2000,
            model: ModelConfig::desk(0),
            train: TrainHyperparams::default(),
            min_freq: 1,
            lowercase: false,
            include_cue_in_context: false,
            adjacent_que: false,
            positional: PositionalConfig::default(),
            explicit: BTreeMap::new(),
        }
    }
}

fn parse<T: std::str::FromStr>(v: &str) -> Option<T> {
    v.parse().ok()
}

fn parse_list(v: &str) -> Option<Vec<u64>> {
    v.split(',').map(|x| x.trim().parse().ok()).collect()
}

impl RunConfig {
    /// Applies one assignment. Returns `None` for an unknown key and
    /// `Some(false)` for an unparsable value.
    fn assign(&mut self, key: &str, v: &str) -> Option<bool> {
        let ok = |x: Option<()>| Some(x.is_some());
        if let Some(k) = key.strip_prefix("synth.") {
            return match self.synth.set(k, v) {
                Ok(()) => Some(true),
                Err(crate::extraction::synth::SynthConfigError::UnknownKey { .. }) => None,
                Err(_) => Some(false),
            };
        }
        let m = &mut self.model;
        let t = &mut self.train;
        let p = &mut self.positional;
        match key {
            "heldout.sentences" => ok(parse(v).map(|x| self.heldout_sentences = x)),
            "model.preset" => ok(ModelConfig::preset(v, 0).map(|c| *m = c)),
            "model.n_layers" => ok(parse(v).map(|x| m.n_layers = x)),
            "model.n_heads" => ok(parse(v).map(|x| m.n_heads = x)),
            "model.d_model" => ok(parse(v).map(|x| m.d_model = x)),
            "model.d_ffn" => ok(parse(v).map(|x| m.d_ffn = x)),
            "model.dropout" => ok(parse(v).map(|x| m.dropout = x)),
            "model.max_len" => ok(parse(v).map(|x| m.max_len = x)),
            "model.seed" => ok(parse(v).map(|x| m.seed = x)),
            "model.pre_norm" => ok(parse(v).map(|x| m.pre_norm = x)),
            "model.tie_embeddings" => ok(parse(v).map(|x| m.tie_embeddings = x)),
            "train.learning_rate" => ok(parse(v).map(|x| t.learning_rate = x)),
            "train.min_learning_rate" => ok(parse(v).map(|x| t.min_learning_rate = x)),
            "train.epochs" => ok(parse(v).map(|x| t.epochs = x)),
            "train.batch_size" => ok(parse(v).map(|x| t.batch_size = x)),
            "train.clip_norm" => ok(if v == "none" {
                Some(t.clip_norm = None)
            } else {
                parse(v).map(|x| t.clip_norm = Some(x))
            }),
            "train.seed" => ok(parse(v).map(|x| t.seed = x)),
            "vocab.min_freq" => ok(parse(v).map(|x| self.min_freq = x)),
            "vocab.lowercase" => ok(parse(v).map(|x| self.lowercase = x)),
            "extract.include_cue_in_context" => ok(parse(v).map(|x| self.include_cue_in_context = x)),
            "heuristics.adjacent_que" => ok(parse(v).map(|x| self.adjacent_que = x)),
            "probe.c" => ok(parse(v).map(|x| p.probe.c = x)),
            "probe.max_iter" => ok(parse(v).map(|x| p.probe.max_iter = x)),
            "probe.tol" => ok(parse(v).map(|x| p.probe.tol = x)),
            "probe.balanced" => ok(parse(v).map(|x| p.probe.balanced = x)),
            "probe.test_fraction" => ok(parse(v).map(|x| p.probe.test_fraction = x)),
            "probe.min_cell" => ok(parse(v).map(|x| p.probe.min_cell = x)),
            "probe.split_seed" => ok(parse(v).map(|x| p.probe.split_seed = x)),
            "positional.window" => ok(parse(v).map(|x| p.window = x)),
            "positional.n_train" => ok(parse(v).map(|x| p.n_train = x)),
            "positional.n_test" => ok(parse(v).map(|x| p.n_test = x)),
            "positional.seeds" => ok(parse_list(v).map(|x| p.seeds = x)),
            "positional.splits" => ok(parse(v).map(|x| p.splits = x)),
            _ => None,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match self.assign(key, value) {
            None => Err(ConfigError::UnknownKey { line: 0, key: key.into() }),
            Some(false) => Err(ConfigError::Value { line: 0, key: key.into(), value: value.into() }),
            Some(true) => {
                self.explicit.insert(key.to_string(), value.to_string());
                Ok(())
            }
        }
    }

    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            cfg.set(k.trim(), v.trim()).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line: i + 1, key },
                ConfigError::Value { key, value, .. } => ConfigError::Value { line: i + 1, key, value },
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::from_kv_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.synth.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.train.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.positional.probe.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.min_freq < 1 {
            return Err(ConfigError::Invalid("vocab.min_freq must be at least 1".into()));
        }
        let mut m = self.model.clone();
        m.vocab_size = 2;
        m.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Fills every seed not set explicitly from one base seed.
    pub fn apply_seed(&mut self, seed: u64) {
        use crate::util::{derive_seed, salt_of};
        if !self.explicit.contains_key("synth.seed") {
            self.synth.seed = seed;
        }
        if !self.explicit.contains_key("model.seed") {
            self.model.seed = derive_seed(seed, salt_of("model"));
        }
        if !self.explicit.contains_key("train.seed") {
            self.train.seed = derive_seed(seed, salt_of("train"));
        }
        if !self.explicit.contains_key("probe.split_seed") {
            self.positional.probe.split_seed = derive_seed(seed, salt_of("probe"));
        }
    }

    /// Seed of the held-out synthetic corpus.
    pub fn heldout_seed(&self) -> u64 {
        crate::util::derive_seed(self.synth.seed, crate::util::salt_of("heldout"))
    }

    /// Effective values of every key, for run manifests.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for line in self.synth.to_string().lines() {
            if let Some((k, v)) = line.split_once('=') {
                out.insert(format!("synth.{}", k.trim()), v.trim().to_string());
            }
        }
        let m = &self.model;
        let t = &self.train;
        let p = &self.positional;
        let pairs: Vec<(&str, String)> = vec![
            ("heldout.sentences", self.heldout_sentences.to_string()),
            ("model.n_layers", m.n_layers.to_string()),
            ("model.n_heads", m.n_heads.to_string()),
            ("model.d_model", m.d_model.to_string()),
            ("model.d_ffn", m.d_ffn.to_string()),
            ("model.dropout", m.dropout.to_string()),
            ("model.max_len", m.max_len.to_string()),
            ("model.seed", m.seed.to_string()),
            ("model.pre_norm", m.pre_norm.to_string()),
            ("model.tie_embeddings", m.tie_embeddings.to_string()),
            ("train.learning_rate", t.learning_rate.to_string()),
            ("train.min_learning_rate", t.min_learning_rate.to_string()),
            ("train.epochs", t.epochs.to_string()),
            ("train.batch_size", t.batch_size.to_string()),
            ("train.clip_norm", t.clip_norm.map(|c| c.to_string()).unwrap_or_else(|| "none".into())),
            ("train.seed", t.seed.to_string()),
            ("vocab.min_freq", self.min_freq.to_string()),
            ("vocab.lowercase", self.lowercase.to_string()),
            ("extract.include_cue_in_context", self.include_cue_in_context.to_string()),
            ("heuristics.adjacent_que", self.adjacent_que.to_string()),
            ("probe.c", p.probe.c.to_string()),
            ("probe.max_iter", p.probe.max_iter.to_string()),
            ("probe.tol", p.probe.tol.to_string()),
            ("probe.balanced", p.probe.balanced.to_string()),
            ("probe.test_fraction", p.probe.test_fraction.to_string()),
            ("probe.min_cell", p.probe.min_cell.to_string()),
            ("probe.split_seed", p.probe.split_seed.to_string()),
            ("positional.window", p.window.to_string()),
            ("positional.n_train", p.n_train.to_string()),
            ("positional.n_test", p.n_test.to_string()),
            ("positional.seeds", p.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")),
            ("positional.splits", p.splits.to_string()),
        ];
        out.extend(pairs.into_iter().map(|(k, v)| (k.to_string(), v)));
        out
    }
}
