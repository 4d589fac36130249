//! Trains a coreference classifier on a synthetic corpus, resolves the same
//! documents with and without gold singleton exclusion, and scores them.
//!
//! Usage: cargo run --release --example train_and_resolve [epochs] [docs]

use std::collections::BTreeSet;
use std::time::Instant;

use mpcoref::classifiers::{accuracy, CorefModel, HyperConfig};
use mpcoref::clustering::{best_first_cluster, exclude_singletons, ClusteringConfig, SingletonMode};
use mpcoref::corpus::{generate_synthetic_corpus, gold_partition};
use mpcoref::embeddings::random_table;
use mpcoref::metrics::score_system;
use mpcoref::nn::Parameters;
use mpcoref::pairgen::generate_pairs_default;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map_or(Ok(20), |a| a.parse())?;
    let doc_count: usize = args.next().map_or(Ok(40), |a| a.parse())?;

    let docs = generate_synthetic_corpus(42, doc_count)?;
    let vocab: BTreeSet<&str> = docs.iter().flat_map(|d| d.sentences.iter().flatten()).map(String::as_str).collect();
    let vocab: Vec<&str> = vocab.into_iter().collect();
    let table = random_table(42, &vocab, 16)?;

    let pairs: Vec<_> = docs.iter().flat_map(generate_pairs_default).collect();
    let config = HyperConfig::proposed().with_seed(42).with_epochs(epochs);
    let mut model = CorefModel::new(&config, table.dim())?;
    let (inputs, labels) = model.training_data(&pairs, &docs, &table)?;
    println!("{} documents, {} pairs, {} parameters", docs.len(), pairs.len(), model.param_count());

    let start = Instant::now();
    let report = mpcoref::classifiers::train_network(&mut model, &inputs, &labels, &config)?;
    for (i, loss) in report.epoch_losses.iter().enumerate() {
        println!("epoch {:>2} loss {loss:.5}", i + 1);
    }
    println!("trained in {:.1}s", start.elapsed().as_secs_f64());
    println!("pair accuracy {:.4}", accuracy(&model, &inputs, &labels)?);

    let key: Vec<_> = docs.iter().map(|d| (d.doc_id.clone(), gold_partition(d))).collect();
    let thresholds: Vec<Option<f64>> = match std::env::var("THRESHOLDS") {
        Ok(v) => v.split(',').map(|t| t.parse().ok()).collect(),
        Err(_) => vec![None, Some(0.5)],
    };
    for (mode, threshold) in thresholds
        .iter()
        .flat_map(|&t| [(SingletonMode::None, t), (SingletonMode::Gold, t)])
    {
        let cfg = ClusteringConfig { link_threshold: threshold, singleton_mode: mode };
        let mut response = Vec::new();
        for doc in &docs {
            let excluded = exclude_singletons(doc, mode, None, 0.5)?;
            let scorer = model.document_scorer(doc, &table)?;
            response.push((doc.doc_id.clone(), best_first_cluster(doc, &scorer, &excluded, &cfg)?));
        }
        let scores = score_system(&key, &response)?;
        let shown = threshold.map_or("none".to_string(), |t| t.to_string());
        println!("\nsingleton mode {mode}, link threshold {shown}\n{}", scores.table());
    }
    Ok(())
}
