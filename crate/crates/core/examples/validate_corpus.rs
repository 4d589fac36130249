//! Generates a synthetic corpus, writes it as JSON Lines, validates it, then
//! breaks one document and validates again.
//!
//! Usage: cargo run --example validate_corpus [docs] [seed]

use mpcoref::corpus::{generate_synthetic_corpus, validate_corpus, write_corpus};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().map_or(Ok(5), |a| a.parse())?;
    let seed: u64 = args.next().map_or(Ok(42), |a| a.parse())?;

    let mut docs = generate_synthetic_corpus(seed, count)?;
    let mut buf = Vec::new();
    write_corpus(&mut buf, &docs)?;
    println!("{}\n", validate_corpus(buf.as_slice())?);

    let doc = &docs[0];
    println!("{}: {} sentences, {} mentions, {} entities", doc.doc_id, doc.sentences.len(), doc.mentions.len(), doc.entities.len());
    for m in doc.mentions.iter().take(6) {
        println!("  {} {:?} {:?}", m.id, doc.mention_tokens(m).join(" "), m.entity_type);
    }

    docs[0].mentions[0].end_token = 10_000;
    if let Some(entity) = docs.iter_mut().find_map(|d| d.entities.first_mut()) {
        entity.truncate(1);
    }
    let mut buf = Vec::new();
    write_corpus(&mut buf, &docs)?;
    println!("\nafter corruption:\n{}", validate_corpus(buf.as_slice())?);
    Ok(())
}
