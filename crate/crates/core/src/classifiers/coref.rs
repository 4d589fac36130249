use std::collections::HashMap;
use std::sync::Arc;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{encode_mention, ClassifierError, HyperConfig, MentionInput};
use crate::corpus::{CorpusDocument, Mention};
use crate::embeddings::EmbeddingTable;
use crate::features::{pair_features, MENTION_FEATURES, PAIR_FEATURES};
use crate::nn::{bce_loss, Activation, CnnBlock, Mlp, Network, NnError, ParamSpec, Parameters};

/// An encoded (antecedent, anaphor) pair.
#[derive(Debug, Clone)]
pub struct CorefInput {
    pub antecedent: Arc<MentionInput>,
    pub anaphor: Arc<MentionInput>,
    pub relation: [f64; PAIR_FEATURES],
}

/// Scores the confidence that two mentions corefer.
///
/// Both mentions go through the same per-group encoders. For each group the
/// two encodings are concatenated and reduced by that group's similarity FCN.
/// The similarity vectors and the encoded pair-relation features are then
/// concatenated and fed to the final FCN and a sigmoid head.
#[derive(Debug, Clone, PartialEq)]
pub struct CorefModel {
    pub config: HyperConfig,
    pub embedding_dim: usize,
    words: CnnBlock,
    context: CnnBlock,
    feats: Mlp,
    words_sim: Mlp,
    context_sim: Mlp,
    feats_sim: Mlp,
    relation: Mlp,
    head: Mlp,
}

/// Group encodings of one mention.
#[derive(Debug, Clone)]
struct MentionReps {
    words: Vec<f64>,
    context: Vec<f64>,
    feats: Vec<f64>,
}

impl CorefModel {
    pub fn new(config: &HyperConfig, embedding_dim: usize) -> Result<Self, ClassifierError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let conv = &config.conv;
        let words = CnnBlock::new(&conv.widths, conv.filters, conv.depth, embedding_dim, &mut rng);
        let context = CnnBlock::new(&conv.widths, conv.filters, conv.depth, embedding_dim, &mut rng);
        let feats = Mlp::new(MENTION_FEATURES, &config.input_fcn, Activation::Relu, &mut rng);
        let mut sim = |width: usize| Mlp::new(2 * width, &config.post_concat_fcn, Activation::Relu, &mut rng);
        let words_sim = sim(words.out_dim());
        let context_sim = sim(context.out_dim());
        let feats_sim = sim(feats.out_dim());
        let relation = Mlp::new(PAIR_FEATURES, &config.input_fcn, Activation::Relu, &mut rng);
        let concat = words_sim.out_dim() + context_sim.out_dim() + feats_sim.out_dim() + relation.out_dim();
        let mut head = Mlp::new(concat, &config.final_fcn, Activation::Relu, &mut rng);
        let sigmoid = Mlp::new(head.out_dim(), &[1], Activation::Sigmoid, &mut rng);
        head.layers.extend(sigmoid.layers);
        Ok(CorefModel {
            config: config.clone(),
            embedding_dim,
            words,
            context,
            feats,
            words_sim,
            context_sim,
            feats_sim,
            relation,
            head,
        })
    }

    /// Input widths of the words, context and mention-feature similarity FCNs.
    pub fn similarity_input_widths(&self) -> [usize; 3] {
        [self.words_sim.in_dim(), self.context_sim.in_dim(), self.feats_sim.in_dim()]
    }

    /// Width of the concatenation feeding the final FCN.
    pub fn final_input_width(&self) -> usize {
        self.head.in_dim()
    }

    pub fn min_sequence_len(&self) -> usize {
        self.words.min_len().max(crate::features::MIN_MENTION_LEN)
    }

    fn check_dim(&self, table: &EmbeddingTable) -> Result<(), ClassifierError> {
        if table.dim() != self.embedding_dim {
            return Err(ClassifierError::EmbeddingDim {
                expected: self.embedding_dim,
                found: table.dim(),
            });
        }
        Ok(())
    }

    pub fn encode_mention(
        &self,
        doc: &CorpusDocument,
        mention: &Mention,
        table: &EmbeddingTable,
    ) -> Result<MentionInput, ClassifierError> {
        self.check_dim(table)?;
        Ok(encode_mention(doc, mention, table, self.min_sequence_len()))
    }

    pub fn encode_pair(
        &self,
        doc: &CorpusDocument,
        antecedent: &Mention,
        anaphor: &Mention,
        table: &EmbeddingTable,
    ) -> Result<CorefInput, ClassifierError> {
        let relation = pair_features(doc, antecedent, anaphor)?.to_vector();
        Ok(CorefInput {
            antecedent: Arc::new(self.encode_mention(doc, antecedent, table)?),
            anaphor: Arc::new(self.encode_mention(doc, anaphor, table)?),
            relation,
        })
    }

    /// Confidence in `(0, 1)` that the pair corefers.
    pub fn score_pair(
        &self,
        doc: &CorpusDocument,
        antecedent: &Mention,
        anaphor: &Mention,
        table: &EmbeddingTable,
    ) -> Result<f64, ClassifierError> {
        let input = self.encode_pair(doc, antecedent, anaphor, table)?;
        Ok(self.predict(&input)?)
    }

    fn reps(&self, m: &MentionInput) -> Result<MentionReps, NnError> {
        Ok(MentionReps {
            words: self.words.forward(&m.words)?,
            context: self.context.forward(&m.context)?,
            feats: self.feats.forward(&m.feats)?,
        })
    }

    fn score_reps(&self, a: &MentionReps, b: &MentionReps, relation: &[f64]) -> Result<f64, NnError> {
        let mut concat = Vec::with_capacity(self.final_input_width());
        concat.extend(self.words_sim.forward(&[a.words.as_slice(), &b.words].concat())?);
        concat.extend(self.context_sim.forward(&[a.context.as_slice(), &b.context].concat())?);
        concat.extend(self.feats_sim.forward(&[a.feats.as_slice(), &b.feats].concat())?);
        concat.extend(self.relation.forward(relation)?);
        Ok(self.head.forward(&concat)?[0])
    }

    /// Precomputes every mention's encodings so that all pairs of `doc` can be
    /// scored cheaply.
    pub fn document_scorer<'a>(
        &'a self,
        doc: &CorpusDocument,
        table: &EmbeddingTable,
    ) -> Result<DocumentScorer<'a>, ClassifierError> {
        self.check_dim(table)?;
        let mut reps = HashMap::with_capacity(doc.mentions.len());
        for m in &doc.mentions {
            let input = encode_mention(doc, m, table, self.min_sequence_len());
            reps.insert(m.id.clone(), self.reps(&input)?);
        }
        Ok(DocumentScorer {
            model: self,
            doc_id: doc.doc_id.clone(),
            reps,
        })
    }
}

/// Pair scorer bound to one document; see [`CorefModel::document_scorer`].
pub struct DocumentScorer<'a> {
    model: &'a CorefModel,
    doc_id: String,
    reps: HashMap<String, MentionReps>,
}

impl DocumentScorer<'_> {
    pub fn score(&self, doc: &CorpusDocument, antecedent: &Mention, anaphor: &Mention) -> Result<f64, ClassifierError> {
        if doc.doc_id != self.doc_id {
            return Err(ClassifierError::UnknownDocument(doc.doc_id.clone()));
        }
        let rep = |m: &Mention| {
            self.reps.get(&m.id).ok_or_else(|| ClassifierError::UnknownMention {
                doc_id: doc.doc_id.clone(),
                mention_id: m.id.clone(),
            })
        };
        let relation = pair_features(doc, antecedent, anaphor)?.to_vector();
        Ok(self.model.score_reps(rep(antecedent)?, rep(anaphor)?, &relation)?)
    }
}

impl Parameters for CorefModel {
    fn specs(&self, prefix: &str, out: &mut Vec<ParamSpec>) {
        self.words.specs(&format!("{prefix}.words"), out);
        self.context.specs(&format!("{prefix}.context"), out);
        self.feats.specs(&format!("{prefix}.feats"), out);
        self.words_sim.specs(&format!("{prefix}.words_sim"), out);
        self.context_sim.specs(&format!("{prefix}.context_sim"), out);
        self.feats_sim.specs(&format!("{prefix}.feats_sim"), out);
        self.relation.specs(&format!("{prefix}.relation"), out);
        self.head.specs(&format!("{prefix}.final"), out);
    }

    fn slices<'a>(&'a self, out: &mut Vec<&'a [f64]>) {
        self.words.slices(out);
        self.context.slices(out);
        self.feats.slices(out);
        self.words_sim.slices(out);
        self.context_sim.slices(out);
        self.feats_sim.slices(out);
        self.relation.slices(out);
        self.head.slices(out);
    }

    fn slices_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>) {
        self.words.slices_mut(out);
        self.context.slices_mut(out);
        self.feats.slices_mut(out);
        self.words_sim.slices_mut(out);
        self.context_sim.slices_mut(out);
        self.feats_sim.slices_mut(out);
        self.relation.slices_mut(out);
        self.head.slices_mut(out);
    }
}

/// Forward pass of one group's similarity FCN with everything needed for
/// the backward pass.
struct SimPass {
    input: Vec<f64>,
    outs: Vec<Vec<f64>>,
}

impl SimPass {
    fn run(fcn: &Mlp, a: &[f64], b: &[f64]) -> Result<Self, NnError> {
        let input = [a, b].concat();
        let outs = fcn.forward_cached(&input)?;
        Ok(SimPass { input, outs })
    }

    fn output(&self) -> &[f64] {
        self.outs.last().expect("non-empty fcn")
    }
}

impl Network for CorefModel {
    type Input = CorefInput;

    fn predict(&self, input: &CorefInput) -> Result<f64, NnError> {
        let a = self.reps(&input.antecedent)?;
        let b = self.reps(&input.anaphor)?;
        self.score_reps(&a, &b, &input.relation)
    }

    fn accumulate_gradient(&self, input: &CorefInput, label: f64, scale: f64, grad: &mut Self) -> Result<f64, NnError> {
        let (ma, mb) = (&*input.antecedent, &*input.anaphor);
        let (wa, wa_cache) = self.words.forward_cached(&ma.words)?;
        let (wb, wb_cache) = self.words.forward_cached(&mb.words)?;
        let (ca, ca_cache) = self.context.forward_cached(&ma.context)?;
        let (cb, cb_cache) = self.context.forward_cached(&mb.context)?;
        let fa = self.feats.forward_cached(&ma.feats)?;
        let fb = self.feats.forward_cached(&mb.feats)?;
        let last = |outs: &[Vec<f64>]| outs.last().expect("non-empty fcn").clone();

        let words_sim = SimPass::run(&self.words_sim, &wa, &wb)?;
        let context_sim = SimPass::run(&self.context_sim, &ca, &cb)?;
        let feats_sim = SimPass::run(&self.feats_sim, &last(&fa), &last(&fb))?;
        let rel = self.relation.forward_cached(&input.relation)?;

        let mut concat = Vec::with_capacity(self.final_input_width());
        concat.extend(words_sim.output());
        concat.extend(context_sim.output());
        concat.extend(feats_sim.output());
        concat.extend(rel.last().expect("non-empty fcn"));
        let head_outs = self.head.forward_cached(&concat)?;
        let p = head_outs.last().expect("non-empty fcn")[0];
        let loss = bce_loss(p, label);

        let d_concat = self.head.backward(&concat, &head_outs, &[(p - label) * scale], true, &mut grad.head);
        let mut offset = 0;
        let mut take = |n: usize| {
            let part = &d_concat[offset..offset + n];
            offset += n;
            part
        };
        let d_words_sim = take(words_sim.output().len());
        let d_context_sim = take(context_sim.output().len());
        let d_feats_sim = take(feats_sim.output().len());
        let d_rel = take(self.relation.out_dim());

        self.relation.backward(&input.relation, &rel, d_rel, false, &mut grad.relation);

        let d = self.words_sim.backward(&words_sim.input, &words_sim.outs, d_words_sim, false, &mut grad.words_sim);
        self.words.backward(&ma.words, &wa_cache, &d[..wa.len()], &mut grad.words);
        self.words.backward(&mb.words, &wb_cache, &d[wa.len()..], &mut grad.words);

        let d = self.context_sim.backward(&context_sim.input, &context_sim.outs, d_context_sim, false, &mut grad.context_sim);
        self.context.backward(&ma.context, &ca_cache, &d[..ca.len()], &mut grad.context);
        self.context.backward(&mb.context, &cb_cache, &d[ca.len()..], &mut grad.context);

        let d = self.feats_sim.backward(&feats_sim.input, &feats_sim.outs, d_feats_sim, false, &mut grad.feats_sim);
        let n = self.feats.out_dim();
        self.feats.backward(&ma.feats, &fa, &d[..n], false, &mut grad.feats);
        self.feats.backward(&mb.feats, &fb, &d[n..], false, &mut grad.feats);
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proposed_wiring_widths() {
        let model = CorefModel::new(&HyperConfig::proposed(), 5).unwrap();
        assert_eq!(model.similarity_input_widths(), [384, 384, 32]);
        assert_eq!(model.final_input_width(), 64);
    }

    #[test]
    fn wu_ma_wiring_widths() {
        let model = CorefModel::new(&HyperConfig::wu_ma(), 3).unwrap();
        assert_eq!(model.similarity_input_widths(), [400, 400, 400]);
        assert_eq!(model.final_input_width(), 800);
        assert_eq!(model.min_sequence_len(), 6);
    }
}
