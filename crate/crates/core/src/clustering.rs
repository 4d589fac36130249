//! Greedy best-first clustering of mentions from pairwise confidences, with
//! optional singleton exclusion, plus the random-confidence baseline.

use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classifiers::{DocumentScorer, SingletonModel};
use crate::corpus::{gold_singletons, CorpusDocument, Mention, Partition};
use crate::embeddings::EmbeddingTable;

#[derive(Debug, Error)]
pub enum ClusteringError {
    #[error("document {doc_id}: scoring ({antecedent}, {anaphor}) failed: {message}")]
    Scorer {
        doc_id: String,
        antecedent: String,
        anaphor: String,
        message: String,
    },
    #[error("singleton mode \"trained\" requires a singleton model")]
    MissingModel,
    #[error("document {doc_id}: singleton classifier failed: {message}")]
    Classifier { doc_id: String, message: String },
    #[error("line {line}: malformed prediction record: {message}")]
    MalformedPrediction { line: usize, message: String },
}

/// Union-find over `0..n` with path compression and union by rank.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns false if they were already one.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }

    /// Groups of indices, each sorted, ordered by their smallest member.
    pub fn groups(&mut self) -> Vec<Vec<usize>> {
        let mut by_root: Vec<Option<usize>> = vec![None; self.len()];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.len() {
            let r = self.find(i);
            match by_root[r] {
                Some(g) => groups[g].push(i),
                None => {
                    by_root[r] = Some(groups.len());
                    groups.push(vec![i]);
                }
            }
        }
        groups
    }
}

/// Confidence that `anaphor` corefers with the earlier `antecedent`.
pub trait PairScorer {
    fn score(&self, doc: &CorpusDocument, antecedent: &Mention, anaphor: &Mention) -> Result<f64, String>;
}

impl<F> PairScorer for F
where
    F: Fn(&CorpusDocument, &Mention, &Mention) -> Result<f64, String>,
{
    fn score(&self, doc: &CorpusDocument, antecedent: &Mention, anaphor: &Mention) -> Result<f64, String> {
        self(doc, antecedent, anaphor)
    }
}

impl PairScorer for DocumentScorer<'_> {
    fn score(&self, doc: &CorpusDocument, antecedent: &Mention, anaphor: &Mention) -> Result<f64, String> {
        DocumentScorer::score(self, doc, antecedent, anaphor).map_err(|e| e.to_string())
    }
}

/// Uniform pseudo-random confidence derived from the seed, document id and
/// both mention ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomScorer {
    pub seed: u64,
}

pub fn random_scorer(seed: u64) -> RandomScorer {
    RandomScorer { seed }
}

impl RandomScorer {
    pub fn value(&self, doc_id: &str, antecedent: &str, anaphor: &str) -> f64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        for part in [doc_id, antecedent, anaphor] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        let digest = h.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        // 53 random bits mapped onto [0, 1].
        (u64::from_le_bytes(bytes) >> 11) as f64 / ((1u64 << 53) - 1) as f64
    }
}

impl PairScorer for RandomScorer {
    fn score(&self, doc: &CorpusDocument, antecedent: &Mention, anaphor: &Mention) -> Result<f64, String> {
        Ok(self.value(&doc.doc_id, &antecedent.id, &anaphor.id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingletonMode {
    #[default]
    None,
    Trained,
    Gold,
}

impl FromStr for SingletonMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(SingletonMode::None),
            "trained" => Ok(SingletonMode::Trained),
            "gold" => Ok(SingletonMode::Gold),
            other => Err(format!("unknown singleton mode {other:?} (expected none|trained|gold)")),
        }
    }
}

impl fmt::Display for SingletonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SingletonMode::None => "none",
            SingletonMode::Trained => "trained",
            SingletonMode::Gold => "gold",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusteringConfig {
    /// Minimum confidence (exclusive) for a link; `None` links every mention
    /// that has a candidate.
    pub link_threshold: Option<f64>,
    pub singleton_mode: SingletonMode,
}

/// Mentions to keep out of clustering under `mode`.
pub fn exclude_singletons(
    doc: &CorpusDocument,
    mode: SingletonMode,
    model: Option<(&SingletonModel, &EmbeddingTable)>,
    threshold: f64,
) -> Result<BTreeSet<String>, ClusteringError> {
    match mode {
        SingletonMode::None => Ok(BTreeSet::new()),
        SingletonMode::Gold => Ok(gold_singletons(doc)),
        SingletonMode::Trained => {
            let (model, table) = model.ok_or(ClusteringError::MissingModel)?;
            let mut excluded = BTreeSet::new();
            for m in &doc.mentions {
                let p = model
                    .predict_singleton(doc, m, table)
                    .map_err(|e| ClusteringError::Classifier {
                        doc_id: doc.doc_id.clone(),
                        message: e.to_string(),
                    })?;
                if p < threshold {
                    excluded.insert(m.id.clone());
                }
            }
            Ok(excluded)
        }
    }
}

/// Links each non-excluded mention, in document order, to its
/// highest-scoring earlier non-excluded mention. Ties go to the nearest
/// antecedent. Excluded mentions end up as single-member clusters.
pub fn best_first_cluster<S: PairScorer + ?Sized>(
    doc: &CorpusDocument,
    scorer: &S,
    excluded: &BTreeSet<String>,
    config: &ClusteringConfig,
) -> Result<Partition, ClusteringError> {
    let n = doc.mentions.len();
    let active: Vec<bool> = doc.mentions.iter().map(|m| !excluded.contains(&m.id)).collect();
    let mut sets = DisjointSet::new(n);

    for j in 0..n {
        if !active[j] {
            continue;
        }
        let anaphor = &doc.mentions[j];
        let mut best: Option<(usize, f64)> = None;
        for i in (0..j).rev().filter(|&i| active[i]) {
            let antecedent = &doc.mentions[i];
            let s = scorer
                .score(doc, antecedent, anaphor)
                .map_err(|message| ClusteringError::Scorer {
                    doc_id: doc.doc_id.clone(),
                    antecedent: antecedent.id.clone(),
                    anaphor: anaphor.id.clone(),
                    message,
                })?;
            // Scanning from nearest to farthest with a strict comparison
            // keeps the nearest antecedent on ties.
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        if let Some((i, s)) = best {
            if config.link_threshold.is_none_or(|t| s > t) {
                sets.union(i, j);
            }
        }
    }

    Ok(Partition::new(
        sets.groups()
            .into_iter()
            .map(|g| g.into_iter().map(|i| doc.mentions[i].id.clone()).collect())
            .collect(),
    ))
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub doc_id: String,
    pub system_entities: Vec<Vec<String>>,
}

impl PredictionRecord {
    pub fn new(doc_id: impl Into<String>, partition: &Partition) -> Self {
        PredictionRecord {
            doc_id: doc_id.into(),
            system_entities: partition.clusters.clone(),
        }
    }

    pub fn partition(&self) -> Partition {
        Partition::new(self.system_entities.clone())
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

pub fn parse_predictions<R: BufRead>(reader: R) -> Result<Vec<PredictionRecord>, ClusteringError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ClusteringError::MalformedPrediction {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| ClusteringError::MalformedPrediction {
                line: i + 1,
                message: e.to_string(),
            })?;
        record
            .partition()
            .check(None)
            .map_err(|message| ClusteringError::MalformedPrediction { line: i + 1, message })?;
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EntityType;
    use std::collections::HashMap;

    fn doc(n: usize, entities: Vec<Vec<String>>) -> CorpusDocument {
        let mentions = (0..n)
            .map(|i| Mention {
                id: format!("m{}", i + 1),
                sentence_index: 0,
                start_token: i,
                end_token: i,
                is_pronoun: false,
                entity_type: EntityType::Other,
                is_proper_name: false,
                is_first_person: false,
            })
            .collect();
        CorpusDocument::new("d", vec![vec!["w".to_string(); n]], mentions, entities).unwrap()
    }

    fn table_scorer(scores: &[(&str, &str, f64)]) -> impl Fn(&CorpusDocument, &Mention, &Mention) -> Result<f64, String> {
        let map: HashMap<(String, String), f64> = scores
            .iter()
            .map(|(a, b, s)| ((a.to_string(), b.to_string()), *s))
            .collect();
        move |_: &CorpusDocument, a: &Mention, b: &Mention| {
            map.get(&(a.id.clone(), b.id.clone()))
                .copied()
                .ok_or_else(|| "no score".to_string())
        }
    }

    /// Reference tracer: for each anaphor, list every candidate score, pick
    /// the maximum, break ties by the largest antecedent index, and collect
    /// links as explicit edges before taking connected components.
    fn brute_force_trace(
        n: usize,
        score: &dyn Fn(usize, usize) -> f64,
        excluded: &[usize],
        threshold: Option<f64>,
    ) -> Vec<Vec<usize>> {
        let mut edges = Vec::new();
        for j in (0..n).filter(|j| !excluded.contains(j)) {
            let cands: Vec<(usize, f64)> = (0..j)
                .filter(|i| !excluded.contains(i))
                .map(|i| (i, score(i, j)))
                .collect();
            let Some(max) = cands.iter().map(|c| c.1).reduce(f64::max) else { continue };
            let best = cands.iter().filter(|c| c.1 == max).map(|c| c.0).max().unwrap();
            if threshold.is_none_or(|t| max > t) {
                edges.push((best, j));
            }
        }
        let mut label: Vec<usize> = (0..n).collect();
        loop {
            let mut changed = false;
            for &(a, b) in &edges {
                let m = label[a].min(label[b]);
                if label[a] != m || label[b] != m {
                    label[a] = m;
                    label[b] = m;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            match groups.iter_mut().find(|g| label[g[0]] == label[i]) {
                Some(g) => g.push(i),
                None => groups.push(vec![i]),
            }
        }
        groups
    }

    fn ids(groups: Vec<Vec<usize>>) -> Vec<Vec<String>> {
        groups
            .into_iter()
            .map(|g| g.into_iter().map(|i| format!("m{}", i + 1)).collect())
            .collect()
    }

    #[test]
    fn worked_examples() {
        let d = doc(3, vec![]);
        let scorer = table_scorer(&[("m1", "m2", 0.9), ("m1", "m3", 0.2), ("m2", "m3", 0.8)]);
        let none = ClusteringConfig::default();
        let p = best_first_cluster(&d, &scorer, &BTreeSet::new(), &none).unwrap();
        assert_eq!(p.clusters, vec![vec!["m1", "m2", "m3"]]);

        let excluded = BTreeSet::from(["m2".to_string()]);
        let half = ClusteringConfig { link_threshold: Some(0.5), ..none };
        let p = best_first_cluster(&d, &scorer, &excluded, &half).unwrap();
        assert_eq!(p.canonical().clusters, vec![vec!["m1"], vec!["m2"], vec!["m3"]]);
        let p = best_first_cluster(&d, &scorer, &excluded, &none).unwrap();
        assert_eq!(p.canonical().clusters, vec![vec!["m1".to_string(), "m3".into()], vec!["m2".into()]]);

        let s = |i: usize, j: usize| [[0.0, 0.9, 0.2], [0.0, 0.0, 0.8], [0.0; 3]][i][j];
        assert_eq!(ids(brute_force_trace(3, &s, &[], None)), vec![vec!["m1", "m2", "m3"]]);
        assert_eq!(
            ids(brute_force_trace(3, &s, &[1], None)).len(),
            2,
            "tracer agrees on the exclusion case"
        );
    }

    #[test]
    fn single_mention_is_one_cluster() {
        let d = doc(1, vec![]);
        let p = best_first_cluster(&d, &random_scorer(1), &BTreeSet::new(), &ClusteringConfig::default()).unwrap();
        assert_eq!(p.clusters, vec![vec!["m1"]]);
    }

    #[test]
    fn ties_prefer_nearest_antecedent() {
        let d = doc(3, vec![]);
        let scorer = |_: &CorpusDocument, _: &Mention, _: &Mention| Ok::<f64, String>(0.7);
        let cfg = ClusteringConfig { link_threshold: Some(0.5), ..Default::default() };
        let mut links = Vec::new();
        let recording = |doc: &CorpusDocument, a: &Mention, b: &Mention| {
            scorer(doc, a, b)
        };
        let p = best_first_cluster(&d, &recording, &BTreeSet::new(), &cfg).unwrap();
        links.push(p);
        assert_eq!(links[0].clusters.len(), 1);
        let s = |_: usize, _: usize| 0.7;
        assert_eq!(ids(brute_force_trace(3, &s, &[], Some(0.5))), vec![vec!["m1", "m2", "m3"]]);
    }

    #[test]
    fn scorer_errors_carry_pair_identity() {
        let d = doc(2, vec![]);
        let failing = |_: &CorpusDocument, _: &Mention, _: &Mention| Err::<f64, String>("boom".into());
        let err = best_first_cluster(&d, &failing, &BTreeSet::new(), &ClusteringConfig::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("m1") && msg.contains("m2") && msg.contains("boom"), "{msg}");
    }

    #[test]
    fn matches_brute_force_tracer_on_random_scores() {
        for seed in 0..200u64 {
            let n = 1 + (seed % 9) as usize;
            let d = doc(n, vec![]);
            let rs = random_scorer(seed);
            let excluded: Vec<usize> = (0..n).filter(|i| rs.value("x", &i.to_string(), "ex") < 0.3).collect();
            let excluded_ids: BTreeSet<String> = excluded.iter().map(|i| format!("m{}", i + 1)).collect();
            let threshold = if seed % 2 == 0 { None } else { Some(0.5) };
            let cfg = ClusteringConfig { link_threshold: threshold, ..Default::default() };
            let got = best_first_cluster(&d, &rs, &excluded_ids, &cfg).unwrap();
            let s = |i: usize, j: usize| rs.value("d", &format!("m{}", i + 1), &format!("m{}", j + 1));
            let want = ids(brute_force_trace(n, &s, &excluded, threshold));
            assert_eq!(got.clusters, want, "seed {seed}");

            let universe: BTreeSet<&str> = d.mentions.iter().map(|m| m.id.as_str()).collect();
            got.check(Some(&universe)).unwrap();
            for id in &excluded_ids {
                assert!(got.clusters.contains(&vec![id.clone()]));
            }
            if threshold.is_none() && excluded.is_empty() && n >= 2 {
                assert!(got.clusters.iter().any(|c| c.len() > 1));
            }
        }
    }

    #[test]
    fn random_scorer_is_stable_and_bounded() {
        let r = random_scorer(3);
        assert_eq!(r.value("d", "a", "b"), r.value("d", "a", "b"));
        assert_ne!(r.value("d", "a", "b"), random_scorer(4).value("d", "a", "b"));
        for i in 0..500 {
            let v = r.value("doc", &format!("m{i}"), "z");
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn exclusion_modes() {
        let d = doc(4, vec![vec!["m1".into(), "m3".into()]]);
        assert!(exclude_singletons(&d, SingletonMode::None, None, 0.5).unwrap().is_empty());
        assert_eq!(
            exclude_singletons(&d, SingletonMode::Gold, None, 0.5).unwrap(),
            BTreeSet::from(["m2".to_string(), "m4".into()])
        );
        assert!(matches!(
            exclude_singletons(&d, SingletonMode::Trained, None, 0.5),
            Err(ClusteringError::MissingModel)
        ));
    }

    #[test]
    fn disjoint_set_basics() {
        let mut s = DisjointSet::new(5);
        assert!(s.union(0, 3));
        assert!(!s.union(3, 0));
        assert!(s.union(4, 3));
        let r = s.find(4);
        assert_eq!(s.find(r), r);
        assert_eq!(s.find(0), s.find(4));
        assert_eq!(s.groups(), vec![vec![0, 3, 4], vec![1], vec![2]]);
    }

    #[test]
    fn prediction_records_round_trip() {
        let p = Partition::new(vec![vec!["m1".into(), "m2".into()], vec!["m3".into()]]);
        let line = PredictionRecord::new("d", &p).to_json_line();
        assert_eq!(line, r#"{"doc_id":"d","system_entities":[["m1","m2"],["m3"]]}"#);
        let back = parse_predictions(line.as_bytes()).unwrap();
        assert_eq!(back[0].partition(), p);
        let bad = r#"{"doc_id":"d","system_entities":[["m1"],["m1"]]}"#;
        assert!(parse_predictions(bad.as_bytes()).is_err());
    }
}
