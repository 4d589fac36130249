//! Labeled mention-pair generation from gold-annotated documents.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusDocument;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairExample {
    pub doc_id: String,
    pub antecedent_id: String,
    pub anaphor_id: String,
    pub label: bool,
}

impl fmt::Display for PairExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.doc_id,
            self.antecedent_id,
            self.anaphor_id,
            u8::from(self.label)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStrategy {
    /// Every mention paired with every other mention.
    #[default]
    Default,
    /// Nearest gold antecedent plus the mentions between it and the anaphor.
    Reduced,
}

impl PairStrategy {
    /// The reduced scheme stands in for a method whose exact rules are not
    /// published.
    pub fn is_approximation(self) -> bool {
        matches!(self, PairStrategy::Reduced)
    }

    pub fn generate(self, doc: &CorpusDocument) -> Vec<PairExample> {
        match self {
            PairStrategy::Default => generate_pairs_default(doc),
            PairStrategy::Reduced => generate_pairs_reduced(doc),
        }
    }
}

impl FromStr for PairStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(PairStrategy::Default),
            "reduced" => Ok(PairStrategy::Reduced),
            other => Err(format!("unknown pair strategy {other:?} (expected default|reduced)")),
        }
    }
}

fn example(doc: &CorpusDocument, i: usize, j: usize, label: bool) -> PairExample {
    PairExample {
        doc_id: doc.doc_id.clone(),
        antecedent_id: doc.mentions[i].id.clone(),
        anaphor_id: doc.mentions[j].id.clone(),
        label,
    }
}

/// All `n(n-1)/2` pairs, oriented earlier to later.
pub fn generate_pairs_default(doc: &CorpusDocument) -> Vec<PairExample> {
    let entity_of = doc.entity_of();
    let entity = |i: usize| entity_of.get(doc.mentions[i].id.as_str()).copied();
    let n = doc.mentions.len();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for j in 1..n {
        for i in 0..j {
            let label = matches!((entity(i), entity(j)), (Some(a), Some(b)) if a == b);
            pairs.push(example(doc, i, j, label));
        }
    }
    pairs
}

/// For each mention with a gold antecedent: a positive pair with the nearest
/// one, and negatives with every mention in between.
pub fn generate_pairs_reduced(doc: &CorpusDocument) -> Vec<PairExample> {
    let entity_of = doc.entity_of();
    let entity = |i: usize| entity_of.get(doc.mentions[i].id.as_str()).copied();
    let mut pairs = Vec::new();
    for j in 1..doc.mentions.len() {
        let Some(e) = entity(j) else { continue };
        let Some(nearest) = (0..j).rev().find(|&i| entity(i) == Some(e)) else {
            continue;
        };
        pairs.push(example(doc, nearest, j, true));
        for i in nearest + 1..j {
            pairs.push(example(doc, i, j, false));
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BalanceRatio {
    Finite(f64),
    /// Negatives but no positives.
    Infinite,
    /// No pairs at all.
    Undefined,
}

impl fmt::Display for BalanceRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BalanceRatio::Finite(r) => write!(f, "{r:.3}"),
            BalanceRatio::Infinite => f.write_str("inf"),
            BalanceRatio::Undefined => f.write_str("undefined"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassBalance {
    pub positives: usize,
    pub negatives: usize,
    /// Negatives per positive.
    pub ratio: BalanceRatio,
}

pub fn class_balance(pairs: &[PairExample]) -> ClassBalance {
    let positives = pairs.iter().filter(|p| p.label).count();
    let negatives = pairs.len() - positives;
    let ratio = match (positives, negatives) {
        (0, 0) => BalanceRatio::Undefined,
        (0, _) => BalanceRatio::Infinite,
        (p, n) => BalanceRatio::Finite(n as f64 / p as f64),
    };
    ClassBalance { positives, negatives, ratio }
}
