//! Compares the exhaustive and the reduced pair generators on a synthetic
//! corpus: pair counts and class balance per document.
//!
//! Usage: cargo run --example gen_pairs [docs]

use mpcoref::corpus::generate_synthetic_corpus;
use mpcoref::pairgen::{class_balance, generate_pairs_default, generate_pairs_reduced};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let count: usize = std::env::args().nth(1).map_or(Ok(8), |a| a.parse())?;
    let docs = generate_synthetic_corpus(42, count)?;

    println!("{:<10}{:>9}{:>10}{:>18}{:>10}{:>18}", "doc", "mentions", "default", "balance", "reduced", "balance");
    let (mut all_default, mut all_reduced) = (Vec::new(), Vec::new());
    for doc in &docs {
        let d = generate_pairs_default(doc);
        let r = generate_pairs_reduced(doc);
        let (bd, br) = (class_balance(&d), class_balance(&r));
        println!(
            "{:<10}{:>9}{:>10}{:>18}{:>10}{:>18}",
            doc.doc_id,
            doc.mentions.len(),
            d.len(),
            format!("{}+/{}-", bd.positives, bd.negatives),
            r.len(),
            format!("{}+/{}-", br.positives, br.negatives),
        );
        all_default.extend(d);
        all_reduced.extend(r);
    }
    println!("\ndefault ratio {:?}", class_balance(&all_default).ratio);
    println!("reduced ratio {:?}", class_balance(&all_reduced).ratio);
    for p in all_reduced.iter().take(5) {
        println!("{p}");
    }
    Ok(())
}
