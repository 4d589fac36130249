use serde::Serialize;

use super::train::{train_singleton, TrainReport};
use super::{ClassifierError, FeatureGroupSelection, HyperConfig, Preset, SingletonModel, DEFAULT_SINGLETON_THRESHOLD};
use crate::corpus::CorpusDocument;
use crate::embeddings::EmbeddingTable;
use crate::nn::Network;

/// F1 of the class `positive` given predicted and gold labels.
pub fn binary_f1(predicted: &[bool], gold: &[bool], positive: bool) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&p, &g) in predicted.iter().zip(gold) {
        match (p == positive, g == positive) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    2.0 * precision * recall / (precision + recall)
}

/// One row of the singleton feature-group experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub preset: Preset,
    /// 1-based index into [`FeatureGroupSelection::combinations`].
    pub group: usize,
    pub selection: String,
    pub non_singleton_f1: f64,
    pub singleton_f1: f64,
    /// Support-weighted mean of the two class F1 scores.
    pub weighted_f1: f64,
    pub final_loss: f64,
}

/// Trains one singleton classifier per (config, feature-group combination)
/// on `train` and scores it on `test`.
pub fn singleton_feature_group_sweep(
    train: &[CorpusDocument],
    test: &[CorpusDocument],
    table: &EmbeddingTable,
    configs: &[HyperConfig],
) -> Result<Vec<SweepRow>, ClassifierError> {
    let mut rows = Vec::new();
    for config in configs {
        for (i, selection) in FeatureGroupSelection::combinations().into_iter().enumerate() {
            let mut model = SingletonModel::new(config, selection, table.dim())?;
            let report: TrainReport = train_singleton(&mut model, train, table)?;
            let (inputs, labels) = model.training_data(test, table)?;
            let mut predicted = Vec::with_capacity(inputs.len());
            for x in &inputs {
                predicted.push(model.predict(x)? >= DEFAULT_SINGLETON_THRESHOLD);
            }
            let gold: Vec<bool> = labels.iter().map(|&y| y > 0.5).collect();
            let non_singleton_f1 = binary_f1(&predicted, &gold, true);
            let singleton_f1 = binary_f1(&predicted, &gold, false);
            let support_non = gold.iter().filter(|&&g| g).count() as f64;
            let total = gold.len().max(1) as f64;
            let weighted_f1 = (support_non * non_singleton_f1 + (total - support_non) * singleton_f1) / total;
            rows.push(SweepRow {
                preset: config.preset,
                group: i + 1,
                selection: selection.to_string(),
                non_singleton_f1,
                singleton_f1,
                weighted_f1,
                final_loss: report.epoch_losses.last().copied().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_by_class() {
        let pred = [true, true, false, false];
        let gold = [true, false, true, false];
        assert!((binary_f1(&pred, &gold, true) - 0.5).abs() < 1e-12);
        assert!((binary_f1(&pred, &gold, false) - 0.5).abs() < 1e-12);
        assert_eq!(binary_f1(&[false], &[true], true), 0.0);
        assert_eq!(binary_f1(&[true, false], &[true, false], true), 1.0);
    }
}
