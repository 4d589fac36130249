//! Drives the command-line interface in-process: writes a corpus and
//! embeddings, trains, resolves with trained singleton exclusion and scores.
//!
//! Usage: cargo run --release --example cli_pipeline [docs] [epochs]

use std::collections::BTreeSet;

use mpcoref::corpus::{generate_synthetic_corpus, write_corpus};
use mpcoref::embeddings::random_table;

fn mpcoref(args: &[&str]) -> Result<(), String> {
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    match mpcoref::cli::run(std::iter::once("mpcoref").chain(args.iter().copied()), &mut out, &mut err) {
        0 => Ok(()),
        code => Err(format!("{} exited with {code}", args[0])),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().map_or(Ok(10), |a| a.parse())?;
    let epochs = args.next().unwrap_or_else(|| "5".into());

    let dir = tempfile::tempdir()?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let docs = generate_synthetic_corpus(42, count)?;
    write_corpus(std::fs::File::create(path("corpus.jsonl"))?, &docs)?;
    let vocab: BTreeSet<&str> = docs.iter().flat_map(|d| d.sentences.iter().flatten()).map(String::as_str).collect();
    let vocab: Vec<&str> = vocab.into_iter().collect();
    random_table(42, &vocab, 16)?.write_word2vec_text(std::fs::File::create(path("emb.txt"))?)?;

    let (corpus, emb, models, pred) = (path("corpus.jsonl"), path("emb.txt"), path("models"), path("pred.jsonl"));
    mpcoref(&["validate", "--corpus", &corpus])?;
    mpcoref(&["train", "--corpus", &corpus, "--embeddings", &emb, "--model-dir", &models, "--epochs", &epochs, "--seed", "42"])?;
    mpcoref(&[
        "resolve", "--corpus", &corpus, "--embeddings", &emb, "--model-dir", &models,
        "--singleton-mode", "trained", "--link-threshold", "0.5", "--out", &pred,
    ])?;
    mpcoref(&["score", "--corpus", &corpus, "--predictions", &pred])?;
    mpcoref(&["baseline", "--corpus", &corpus, "--seed", "1"])?;
    Ok(())
}
