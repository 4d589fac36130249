//! Mention-pair coreference resolution: feature extraction over word
//! embeddings, CNN/FCN singleton and coreference classifiers trained from
//! scratch, greedy best-first clustering with singleton exclusion, and the
//! MUC, B³, CEAF_e and CoNLL average metrics.

pub mod classifiers;
pub mod cli;
pub mod clustering;
pub mod corpus;
pub mod embeddings;
pub mod features;
pub mod metrics;
pub mod nn;
pub mod pairgen;
