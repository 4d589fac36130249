//! Resolves a synthetic corpus with seeded random confidences. Without a
//! link threshold every mention links somewhere, so each document collapses
//! into one cluster whatever the seed; a threshold makes the seed matter.
//!
//! Usage: cargo run --release --example random_baseline [docs] [seeds]

use std::collections::BTreeSet;

use mpcoref::clustering::{best_first_cluster, random_scorer, ClusteringConfig, SingletonMode};
use mpcoref::corpus::{generate_synthetic_corpus, gold_partition};
use mpcoref::metrics::score_system;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().map_or(Ok(40), |a| a.parse())?;
    let seeds: u64 = args.next().map_or(Ok(3), |a| a.parse())?;

    let docs = generate_synthetic_corpus(42, count)?;
    let key: Vec<_> = docs.iter().map(|d| (d.doc_id.clone(), gold_partition(d))).collect();
    for threshold in [None, Some(0.5), Some(0.9)] {
        let config = ClusteringConfig {
            link_threshold: threshold,
            singleton_mode: SingletonMode::None,
        };
        for seed in 1..=seeds {
            let scorer = random_scorer(seed);
            let mut response = Vec::new();
            for doc in &docs {
                let p = best_first_cluster(doc, &scorer, &BTreeSet::new(), &config)?;
                response.push((doc.doc_id.clone(), p));
            }
            let report = score_system(&key, &response)?;
            println!(
                "threshold {:<5} seed {seed}: MUC {:6.2}  B3 {:6.2}  CEAF_e {:6.2}  CoNLL {:6.2}",
                threshold.map_or("none".into(), |t| t.to_string()),
                report.muc.f1 * 100.0,
                report.b_cubed.f1 * 100.0,
                report.ceaf_e.f1 * 100.0,
                report.conll_avg_f1 * 100.0
            );
        }
    }
    Ok(())
}
