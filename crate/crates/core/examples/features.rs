//! Shows the inputs built for one mention and one mention pair: the
//! embedded word sequence, the context window and the binary features.
//!
//! Usage: cargo run --example features

use std::collections::BTreeSet;

use mpcoref::corpus::generate_synthetic_corpus;
use mpcoref::embeddings::{load_word2vec_text, random_table};
use mpcoref::features::{context_window, embed_sequence, mention_features, mention_word_sequence, pair_features};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let docs = generate_synthetic_corpus(7, 1)?;
    let doc = &docs[0];
    let vocab: BTreeSet<&str> = doc.sentences.iter().flatten().map(String::as_str).collect();
    let vocab: Vec<&str> = vocab.into_iter().collect();

    // Round-trip the table through the word2vec text format.
    let mut text = Vec::new();
    random_table(7, &vocab, 4)?.write_word2vec_text(&mut text)?;
    let table = load_word2vec_text(text.as_slice())?;
    println!("{} vectors of dimension {}", table.len(), table.dim());

    let m = &doc.mentions[1];
    let words = mention_word_sequence(m, doc);
    let window = context_window(doc, m);
    println!("\nmention {} = {:?}", m.id, doc.mention_tokens(m).join(" "));
    println!("word sequence {words:?}");
    println!("preceding {:?}", window.preceding);
    println!("following {:?}", window.following);
    println!("features {:?}", mention_features(m).to_vector());
    let embedded = embed_sequence(&table, &words, 2);
    println!("embedded {} x {}", embedded.rows(), embedded.cols());

    println!("\npairs ending at the last mention:");
    let anaphor = doc.mentions.last().unwrap();
    for antecedent in doc.mentions.iter().rev().skip(1).take(4) {
        let f = pair_features(doc, antecedent, anaphor)?;
        println!("  {} -> {}: {:?}", antecedent.id, anaphor.id, f.to_vector());
    }
    Ok(())
}
