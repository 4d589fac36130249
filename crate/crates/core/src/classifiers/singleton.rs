use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{encode_mention, ClassifierError, FeatureGroupSelection, HyperConfig, MentionInput};
use crate::corpus::{CorpusDocument, Mention};
use crate::embeddings::EmbeddingTable;
use crate::features::MENTION_FEATURES;
use crate::nn::{Activation, CnnBlock, Mlp, Network, NnError, ParamSpec, Parameters};

/// Predicts whether a mention belongs to a multi-mention entity.
///
/// Each enabled feature group is encoded separately (a CNN block for the
/// mention's words, another for its context window, an FCN for the mention
/// features); the encodings are concatenated and passed through the
/// post-concatenation FCN, the final FCN and a one-unit sigmoid head.
#[derive(Debug, Clone, PartialEq)]
pub struct SingletonModel {
    pub config: HyperConfig,
    pub selection: FeatureGroupSelection,
    pub embedding_dim: usize,
    words: Option<CnnBlock>,
    context: Option<CnnBlock>,
    feats: Option<Mlp>,
    post: Mlp,
    head: Mlp,
}

impl SingletonModel {
    pub fn new(
        config: &HyperConfig,
        selection: FeatureGroupSelection,
        embedding_dim: usize,
    ) -> Result<Self, ClassifierError> {
        if selection.is_empty() {
            return Err(ClassifierError::EmptySelection);
        }
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let conv = &config.conv;
        let mut block = |on: bool| {
            on.then(|| CnnBlock::new(&conv.widths, conv.filters, conv.depth, embedding_dim, &mut rng))
        };
        let words = block(selection.use_mention_words);
        let context = block(selection.use_context);
        let feats = selection
            .use_mention_feats
            .then(|| Mlp::new(MENTION_FEATURES, &config.input_fcn, Activation::Relu, &mut rng));

        let concat = words.as_ref().map_or(0, CnnBlock::out_dim)
            + context.as_ref().map_or(0, CnnBlock::out_dim)
            + feats.as_ref().map_or(0, Mlp::out_dim);
        let post = Mlp::new(concat, &config.post_concat_fcn, Activation::Relu, &mut rng);
        let mut head = Mlp::new(post.out_dim(), &config.final_fcn, Activation::Relu, &mut rng);
        let sigmoid = Mlp::new(head.out_dim(), &[1], Activation::Sigmoid, &mut rng);
        head.layers.extend(sigmoid.layers);

        Ok(SingletonModel {
            config: config.clone(),
            selection,
            embedding_dim,
            words,
            context,
            feats,
            post,
            head,
        })
    }

    /// Width of the concatenated group representations.
    pub fn concat_width(&self) -> usize {
        self.post.in_dim()
    }

    /// Rows every input sequence must have.
    pub fn min_sequence_len(&self) -> usize {
        let conv = self.words.as_ref().or(self.context.as_ref()).map_or(1, CnnBlock::min_len);
        conv.max(crate::features::MIN_MENTION_LEN)
    }

    pub fn encode(&self, doc: &CorpusDocument, mention: &Mention, table: &EmbeddingTable) -> Result<MentionInput, ClassifierError> {
        if table.dim() != self.embedding_dim {
            return Err(ClassifierError::EmbeddingDim {
                expected: self.embedding_dim,
                found: table.dim(),
            });
        }
        Ok(encode_mention(doc, mention, table, self.min_sequence_len()))
    }

    /// Probability that `mention` is not a singleton.
    pub fn predict_singleton(
        &self,
        doc: &CorpusDocument,
        mention: &Mention,
        table: &EmbeddingTable,
    ) -> Result<f64, ClassifierError> {
        Ok(self.predict(&self.encode(doc, mention, table)?)?)
    }
}

impl Parameters for SingletonModel {
    fn specs(&self, prefix: &str, out: &mut Vec<ParamSpec>) {
        if let Some(b) = &self.words {
            b.specs(&format!("{prefix}.words"), out);
        }
        if let Some(b) = &self.context {
            b.specs(&format!("{prefix}.context"), out);
        }
        if let Some(m) = &self.feats {
            m.specs(&format!("{prefix}.feats"), out);
        }
        self.post.specs(&format!("{prefix}.post"), out);
        self.head.specs(&format!("{prefix}.final"), out);
    }

    fn slices<'a>(&'a self, out: &mut Vec<&'a [f64]>) {
        if let Some(b) = &self.words {
            b.slices(out);
        }
        if let Some(b) = &self.context {
            b.slices(out);
        }
        if let Some(m) = &self.feats {
            m.slices(out);
        }
        self.post.slices(out);
        self.head.slices(out);
    }

    fn slices_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>) {
        if let Some(b) = &mut self.words {
            b.slices_mut(out);
        }
        if let Some(b) = &mut self.context {
            b.slices_mut(out);
        }
        if let Some(m) = &mut self.feats {
            m.slices_mut(out);
        }
        self.post.slices_mut(out);
        self.head.slices_mut(out);
    }
}

impl Network for SingletonModel {
    type Input = MentionInput;

    fn predict(&self, input: &MentionInput) -> Result<f64, NnError> {
        let mut concat = Vec::with_capacity(self.concat_width());
        if let Some(b) = &self.words {
            concat.extend(b.forward(&input.words)?);
        }
        if let Some(b) = &self.context {
            concat.extend(b.forward(&input.context)?);
        }
        if let Some(m) = &self.feats {
            concat.extend(m.forward(&input.feats)?);
        }
        let hidden = self.post.forward(&concat)?;
        Ok(self.head.forward(&hidden)?[0])
    }

    fn accumulate_gradient(
        &self,
        input: &MentionInput,
        label: f64,
        scale: f64,
        grad: &mut Self,
    ) -> Result<f64, NnError> {
        let mut concat = Vec::with_capacity(self.concat_width());
        let words = match &self.words {
            Some(b) => {
                let (v, cache) = b.forward_cached(&input.words)?;
                concat.extend(&v);
                Some((v.len(), cache))
            }
            None => None,
        };
        let context = match &self.context {
            Some(b) => {
                let (v, cache) = b.forward_cached(&input.context)?;
                concat.extend(&v);
                Some((v.len(), cache))
            }
            None => None,
        };
        let feats = match &self.feats {
            Some(m) => {
                let outs = m.forward_cached(&input.feats)?;
                concat.extend(outs.last().expect("non-empty fcn"));
                Some(outs)
            }
            None => None,
        };
        let post_outs = self.post.forward_cached(&concat)?;
        let hidden = post_outs.last().expect("non-empty fcn");
        let head_outs = self.head.forward_cached(hidden)?;
        let p = head_outs.last().expect("non-empty fcn")[0];
        let loss = crate::nn::bce_loss(p, label);

        let d_hidden = self.head.backward(hidden, &head_outs, &[(p - label) * scale], true, &mut grad.head);
        let d_concat = self.post.backward(&concat, &post_outs, &d_hidden, false, &mut grad.post);

        let mut offset = 0;
        if let (Some((n, cache)), Some(b)) = (words, &self.words) {
            b.backward(&input.words, &cache, &d_concat[offset..offset + n], grad.words.as_mut().expect("grad mirrors model"));
            offset += n;
        }
        if let (Some((n, cache)), Some(b)) = (context, &self.context) {
            b.backward(&input.context, &cache, &d_concat[offset..offset + n], grad.context.as_mut().expect("grad mirrors model"));
            offset += n;
        }
        if let (Some(outs), Some(m)) = (feats, &self.feats) {
            m.backward(&input.feats, &outs, &d_concat[offset..], false, grad.feats.as_mut().expect("grad mirrors model"));
        }
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_widths() {
        let cfg = HyperConfig::proposed();
        let all = SingletonModel::new(&cfg, FeatureGroupSelection::ALL, 6).unwrap();
        assert_eq!(all.concat_width(), 192 + 192 + 16);
        let words = SingletonModel::new(&cfg, FeatureGroupSelection::combinations()[0], 6).unwrap();
        assert_eq!(words.concat_width(), 192);
        let empty = FeatureGroupSelection {
            use_mention_words: false,
            use_context: false,
            use_mention_feats: false,
        };
        assert!(matches!(SingletonModel::new(&cfg, empty, 6), Err(ClassifierError::EmptySelection)));
    }

    #[test]
    fn same_seed_same_weights() {
        let cfg = HyperConfig::proposed().with_seed(4);
        let a = SingletonModel::new(&cfg, FeatureGroupSelection::ALL, 3).unwrap();
        let b = SingletonModel::new(&cfg, FeatureGroupSelection::ALL, 3).unwrap();
        assert_eq!(a.to_model_params(), b.to_model_params());
    }
}
