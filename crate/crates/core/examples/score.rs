//! Scores a hand-written response against a key with MUC, B3 and CEAF_e,
//! and shows the entity alignment behind CEAF_e.
//!
//! Usage: cargo run --example score

use mpcoref::corpus::Partition;
use mpcoref::metrics::{b_cubed, ceaf_e, hungarian, muc, phi4, score_system};

fn partition(clusters: &[&[&str]]) -> Partition {
    Partition::new(clusters.iter().map(|c| c.iter().map(|s| s.to_string()).collect()).collect())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let key = partition(&[&["a", "b", "c", "d"], &["e", "f"], &["g"]]);
    let response = partition(&[&["a", "b"], &["c", "d", "e"], &["f", "g"]]);

    println!("MUC    {:?}", muc(&key, &response)?);
    println!("B3     {:?}", b_cubed(&key, &response)?);
    println!("CEAF_e {:?}", ceaf_e(&key, &response)?);

    // CEAF_e aligns entities one-to-one to maximize total phi4 similarity.
    let index = |p: &Partition| -> Vec<Vec<usize>> {
        p.clusters.iter().map(|c| c.iter().map(|m| (m.as_bytes()[0] - b'a') as usize).collect()).collect()
    };
    let (k, r) = (index(&key), index(&response));
    let sim: Vec<Vec<f64>> = k.iter().map(|ki| r.iter().map(|rj| phi4(ki, rj)).collect()).collect();
    for (i, j) in hungarian(&sim) {
        println!("key {:?} <-> response {:?}: phi4 {:.3}", key.clusters[i], response.clusters[j], sim[i][j]);
    }

    // A second document with a mention the response forgot; it is scored as
    // a response singleton.
    let key2 = partition(&[&["x", "y"], &["z"]]);
    let response2 = partition(&[&["x", "y"]]);
    let report = score_system(
        &[("d1".into(), key), ("d2".into(), key2)],
        &[("d1".into(), response), ("d2".into(), response2)],
    )?;
    println!("\n{}", report.table());
    println!("{}", report.to_json());
    Ok(())
}
