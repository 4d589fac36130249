//! Singleton and coreference networks, their hyperparameter presets, the
//! training loop and the singleton feature-group sweep.

mod coref;
mod singleton;
mod sweep;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusDocument, Mention};
use crate::embeddings::EmbeddingTable;
use crate::features::{
    context_window, embed_sequence, mention_features, mention_word_sequence, FeatureError, MENTION_FEATURES,
};
use crate::nn::{Matrix, NnError, ParamsError};
use crate::pairgen::PairStrategy;

pub use coref::{CorefInput, CorefModel, DocumentScorer};
pub use singleton::SingletonModel;
pub use sweep::{binary_f1, singleton_feature_group_sweep, SweepRow};
pub use train::{accuracy, train_coref, train_network, train_singleton, TrainReport};

/// Default probability below which a mention is treated as a singleton.
pub const DEFAULT_SINGLETON_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("feature selection enables no feature group")]
    EmptySelection,
    #[error("invalid hyperparameters: {0}")]
    InvalidConfig(String),
    #[error("no training examples")]
    NoExamples,
    #[error("embedding dimension {found} does not match the model's {expected}")]
    EmbeddingDim { expected: usize, found: usize },
    #[error("document {doc_id}: unknown mention {mention_id}")]
    UnknownMention { doc_id: String, mention_id: String },
    #[error("unknown document {0}")]
    UnknownDocument(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Params(#[from] ParamsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Proposed,
    WuMa,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Proposed => "proposed",
            Preset::WuMa => "wu_ma",
        })
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proposed" => Ok(Preset::Proposed),
            "wu_ma" => Ok(Preset::WuMa),
            other => Err(format!("unknown preset {other:?} (expected proposed|wu_ma)")),
        }
    }
}

/// Convolution stage applied to every embedding sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvPlan {
    /// One parallel branch per width.
    pub widths: Vec<usize>,
    pub filters: usize,
    /// Convolutions stacked in each branch before pooling.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperConfig {
    pub preset: Preset,
    pub conv: ConvPlan,
    /// FCN applied directly to hand-built feature vectors.
    pub input_fcn: Vec<usize>,
    /// FCN applied after every concatenation of group representations.
    pub post_concat_fcn: Vec<usize>,
    /// FCN before the sigmoid head.
    pub final_fcn: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl HyperConfig {
    /// Three filter widths (2, 3, 4) with 64 filters each and small FCNs.
    pub fn proposed() -> Self {
        HyperConfig {
            preset: Preset::Proposed,
            conv: ConvPlan {
                widths: vec![2, 3, 4],
                filters: 64,
                depth: 1,
            },
            input_fcn: vec![32, 16],
            post_concat_fcn: vec![64, 32, 16],
            final_fcn: vec![32, 8],
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 50,
            seed: 0,
        }
    }

    /// Five stacked width-2 convolutions with 200 filters; five 200-wide
    /// layers per FCN and ten in the final FCN.
    pub fn wu_ma() -> Self {
        HyperConfig {
            preset: Preset::WuMa,
            conv: ConvPlan {
                widths: vec![2],
                filters: 200,
                depth: 5,
            },
            input_fcn: vec![200; 5],
            post_concat_fcn: vec![200; 5],
            final_fcn: vec![200; 10],
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 50,
            seed: 0,
        }
    }

    pub fn for_preset(preset: Preset) -> Self {
        match preset {
            Preset::Proposed => HyperConfig::proposed(),
            Preset::WuMa => HyperConfig::wu_ma(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidConfig(m.to_string()));
        if self.conv.widths.is_empty() || self.conv.widths.contains(&0) {
            return bad("convolution widths must be non-empty and positive");
        }
        if self.conv.filters == 0 || self.conv.depth == 0 {
            return bad("convolution filters and depth must be positive");
        }
        for (name, plan) in [
            ("input_fcn", &self.input_fcn),
            ("post_concat_fcn", &self.post_concat_fcn),
            ("final_fcn", &self.final_fcn),
        ] {
            if plan.is_empty() || plan.contains(&0) {
                return bad(&format!("{name} must list positive layer widths"));
            }
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        Ok(())
    }
}

/// Which feature groups feed the singleton classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureGroupSelection {
    pub use_mention_words: bool,
    pub use_context: bool,
    pub use_mention_feats: bool,
}

impl FeatureGroupSelection {
    pub const ALL: FeatureGroupSelection = FeatureGroupSelection {
        use_mention_words: true,
        use_context: true,
        use_mention_feats: true,
    };

    /// The seven non-empty combinations, numbered 1 to 7: words, context,
    /// mention features, words+context, words+features, context+features,
    /// all.
    pub fn combinations() -> [FeatureGroupSelection; 7] {
        let s = |w, c, f| FeatureGroupSelection {
            use_mention_words: w,
            use_context: c,
            use_mention_feats: f,
        };
        [
            s(true, false, false),
            s(false, true, false),
            s(false, false, true),
            s(true, true, false),
            s(true, false, true),
            s(false, true, true),
            s(true, true, true),
        ]
    }

    pub fn is_empty(&self) -> bool {
        !(self.use_mention_words || self.use_context || self.use_mention_feats)
    }

    /// Parses a comma-separated list of `words`, `context`, `feats` (or `all`).
    pub fn parse(s: &str) -> Result<Self, String> {
        let mut sel = FeatureGroupSelection {
            use_mention_words: false,
            use_context: false,
            use_mention_feats: false,
        };
        for part in s.split(',').map(str::trim) {
            match part {
                "all" => sel = FeatureGroupSelection::ALL,
                "words" => sel.use_mention_words = true,
                "context" => sel.use_context = true,
                "feats" => sel.use_mention_feats = true,
                other => return Err(format!("unknown feature group {other:?} (expected words|context|feats|all)")),
            }
        }
        if sel.is_empty() {
            return Err("no feature group selected".into());
        }
        Ok(sel)
    }
}

impl fmt::Display for FeatureGroupSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.use_mention_words {
            parts.push("words");
        }
        if self.use_context {
            parts.push("context");
        }
        if self.use_mention_feats {
            parts.push("feats");
        }
        f.write_str(&parts.join(","))
    }
}

/// Network-ready encoding of one mention.
#[derive(Debug, Clone, PartialEq)]
pub struct MentionInput {
    /// Mention tokens, `L × dim`.
    pub words: Matrix,
    /// Ten preceding then ten following tokens, `20 × dim` (or longer when a
    /// deep convolution stack needs more rows).
    pub context: Matrix,
    pub feats: [f64; MENTION_FEATURES],
}

/// Encodes a mention; sequences are padded to at least `min_len` rows.
pub fn encode_mention(doc: &CorpusDocument, mention: &Mention, table: &EmbeddingTable, min_len: usize) -> MentionInput {
    let words = mention_word_sequence(mention, doc);
    let context = context_window(doc, mention).joined();
    MentionInput {
        words: embed_sequence(table, &words, min_len),
        context: embed_sequence(table, &context, min_len),
        feats: mention_features(mention).to_vector(),
    }
}

/// Which network a saved model file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Singleton,
    Coreference,
}

/// Sidecar record stored next to a parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMetadata {
    pub kind: ModelKind,
    pub config: HyperConfig,
    pub selection: FeatureGroupSelection,
    pub seed: u64,
    pub embedding_dim: usize,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_strategy: Option<PairStrategy>,
    #[serde(default)]
    pub approximation: bool,
}
