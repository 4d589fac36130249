use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ClassifierError, CorefInput, CorefModel, HyperConfig, MentionInput, SingletonModel};
use crate::corpus::{gold_singletons, CorpusDocument};
use crate::embeddings::EmbeddingTable;
use crate::features::pair_features;
use crate::nn::{adam_step, backward, AdamState, Network};
use crate::pairgen::PairExample;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Mean training loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub warnings: Vec<String>,
    pub examples: usize,
    pub positives: usize,
}

/// Mini-batch Adam over `epochs` passes, reshuffling with a seeded
/// permutation each epoch.
pub fn train_network<N: Network>(
    network: &mut N,
    inputs: &[N::Input],
    labels: &[f64],
    config: &HyperConfig,
) -> Result<TrainReport, ClassifierError> {
    if inputs.is_empty() {
        return Err(ClassifierError::NoExamples);
    }
    let positives = labels.iter().filter(|&&y| y > 0.5).count();
    let mut report = TrainReport {
        examples: inputs.len(),
        positives,
        ..TrainReport::default()
    };
    if positives == 0 {
        report.warnings.push("training data has no positive examples".into());
    }
    if positives == inputs.len() {
        report.warnings.push("training data has no negative examples".into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));
    let mut state = AdamState::for_params(network);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xs: Vec<&N::Input> = batch.iter().map(|&i| &inputs[i]).collect();
            let ys: Vec<f64> = batch.iter().map(|&i| labels[i]).collect();
            let (loss, grad) = backward(network, &xs, &ys)?;
            epoch_loss += loss * batch.len() as f64;
            adam_step(network, &grad, &mut state, config.learning_rate);
        }
        report.epoch_losses.push(epoch_loss / inputs.len() as f64);
    }
    Ok(report)
}

/// Fraction of examples whose prediction lands on the right side of 0.5.
pub fn accuracy<N: Network>(network: &N, inputs: &[N::Input], labels: &[f64]) -> Result<f64, ClassifierError> {
    if inputs.is_empty() {
        return Ok(0.0);
    }
    let predictions: Result<Vec<f64>, _> = inputs.par_iter().map(|x| network.predict(x)).collect();
    let correct = predictions?
        .iter()
        .zip(labels)
        .filter(|(p, &y)| (**p >= 0.5) == (y > 0.5))
        .count();
    Ok(correct as f64 / inputs.len() as f64)
}

impl CorefModel {
    /// Encodes labeled pairs. Mention encodings are shared between the pairs
    /// that use them.
    pub fn training_data(
        &self,
        pairs: &[PairExample],
        corpus: &[CorpusDocument],
        table: &EmbeddingTable,
    ) -> Result<(Vec<CorefInput>, Vec<f64>), ClassifierError> {
        let docs: HashMap<&str, &CorpusDocument> = corpus.iter().map(|d| (d.doc_id.as_str(), d)).collect();
        let mut cache: HashMap<(&str, &str), Arc<MentionInput>> = HashMap::new();
        let mut inputs = Vec::with_capacity(pairs.len());
        let mut labels = Vec::with_capacity(pairs.len());
        for pair in pairs {
            let doc = docs
                .get(pair.doc_id.as_str())
                .ok_or_else(|| ClassifierError::UnknownDocument(pair.doc_id.clone()))?;
            let mut encoded = |id: &str| -> Result<Arc<MentionInput>, ClassifierError> {
                let mention = doc.mention(id).ok_or_else(|| ClassifierError::UnknownMention {
                    doc_id: doc.doc_id.clone(),
                    mention_id: id.to_string(),
                })?;
                if let Some(hit) = cache.get(&(doc.doc_id.as_str(), mention.id.as_str())) {
                    return Ok(Arc::clone(hit));
                }
                let input = Arc::new(self.encode_mention(doc, mention, table)?);
                cache.insert((doc.doc_id.as_str(), mention.id.as_str()), Arc::clone(&input));
                Ok(input)
            };
            let antecedent = encoded(&pair.antecedent_id)?;
            let anaphor = encoded(&pair.anaphor_id)?;
            let relation = pair_features(
                doc,
                doc.mention(&pair.antecedent_id).expect("checked above"),
                doc.mention(&pair.anaphor_id).expect("checked above"),
            )?
            .to_vector();
            inputs.push(CorefInput { antecedent, anaphor, relation });
            labels.push(if pair.label { 1.0 } else { 0.0 });
        }
        Ok((inputs, labels))
    }
}

/// Trains the coreference classifier on labeled pairs drawn from `corpus`.
pub fn train_coref(
    model: &mut CorefModel,
    pairs: &[PairExample],
    corpus: &[CorpusDocument],
    table: &EmbeddingTable,
) -> Result<TrainReport, ClassifierError> {
    let (inputs, labels) = model.training_data(pairs, corpus, table)?;
    let config = model.config.clone();
    train_network(model, &inputs, &labels, &config)
}

impl SingletonModel {
    /// Every mention of `corpus`, labeled 1 when it belongs to a gold entity.
    pub fn training_data(
        &self,
        corpus: &[CorpusDocument],
        table: &EmbeddingTable,
    ) -> Result<(Vec<MentionInput>, Vec<f64>), ClassifierError> {
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for doc in corpus {
            let singletons = gold_singletons(doc);
            for m in &doc.mentions {
                inputs.push(self.encode(doc, m, table)?);
                labels.push(if singletons.contains(&m.id) { 0.0 } else { 1.0 });
            }
        }
        Ok((inputs, labels))
    }
}

/// Trains the singleton classifier on every mention of `corpus`.
pub fn train_singleton(
    model: &mut SingletonModel,
    corpus: &[CorpusDocument],
    table: &EmbeddingTable,
) -> Result<TrainReport, ClassifierError> {
    let (inputs, labels) = model.training_data(corpus, table)?;
    let config = model.config.clone();
    train_network(model, &inputs, &labels, &config)
}
