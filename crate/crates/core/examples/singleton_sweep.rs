//! Trains one singleton classifier per feature-group combination and
//! reports per-class F1 on held-out synthetic documents.
//!
//! Usage: cargo run --release --example singleton_sweep [epochs] [train_docs]

use std::collections::BTreeSet;

use mpcoref::classifiers::{singleton_feature_group_sweep, HyperConfig};
use mpcoref::corpus::generate_synthetic_corpus;
use mpcoref::embeddings::random_table;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map_or(Ok(5), |a| a.parse())?;
    let count: usize = args.next().map_or(Ok(20), |a| a.parse())?;

    let train = generate_synthetic_corpus(42, count)?;
    let test = generate_synthetic_corpus(43, count / 2 + 1)?;
    let vocab: BTreeSet<&str> = train
        .iter()
        .chain(&test)
        .flat_map(|d| d.sentences.iter().flatten())
        .map(String::as_str)
        .collect();
    let vocab: Vec<&str> = vocab.into_iter().collect();
    let table = random_table(42, &vocab, 16)?;

    let config = HyperConfig::proposed().with_seed(42).with_epochs(epochs);
    let rows = singleton_feature_group_sweep(&train, &test, &table, &[config])?;
    println!("{:<3}{:<22}{:>14}{:>14}{:>10}", "#", "groups", "non-singleton", "singleton", "weighted");
    for r in rows {
        println!(
            "{:<3}{:<22}{:>14.2}{:>14.2}{:>10.2}",
            r.group,
            r.selection,
            r.non_singleton_f1 * 100.0,
            r.singleton_f1 * 100.0,
            r.weighted_f1 * 100.0
        );
    }
    Ok(())
}
