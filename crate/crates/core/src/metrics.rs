//! MUC, B³, CEAF_e and the CoNLL average over key/response partitions.
//!
//! Each metric is computed as recall and precision numerator/denominator
//! pairs so that corpus scores can sum them across documents before
//! dividing. Mentions present in only one partition are added to the other
//! as singletons.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Partition;

/// Absolute slack when comparing assignment totals.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("{side} partition is invalid: {message}")]
    InvalidPartition { side: &'static str, message: String },
    #[error("document {0} appears more than once")]
    DuplicateDocument(String),
    #[error(
        "document sets differ: missing from response [{}], missing from key [{}]",
        missing_from_response.join(", "),
        missing_from_key.join(", ")
    )]
    UnmatchedDocuments {
        missing_from_response: Vec<String>,
        missing_from_key: Vec<String>,
    },
}

/// Precision, recall and their harmonic mean, all in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PRF {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PRF {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        PRF { precision, recall, f1 }
    }

    /// Precision and recall exchanged.
    pub fn swapped(&self) -> PRF {
        PRF::new(self.recall, self.precision)
    }
}

/// Summable recall and precision fractions of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricCounts {
    pub recall_num: f64,
    pub recall_den: f64,
    pub precision_num: f64,
    pub precision_den: f64,
}

impl MetricCounts {
    /// When neither side has anything to count (no links, or no mentions)
    /// the partitions agree trivially and both fractions are 1; a zero
    /// denominator on one side alone gives 0 for that side.
    pub fn prf(&self) -> PRF {
        if self.recall_den == 0.0 && self.precision_den == 0.0 {
            return PRF::new(1.0, 1.0);
        }
        let ratio = |n: f64, d: f64| if d > 0.0 { n / d } else { 0.0 };
        PRF::new(
            ratio(self.precision_num, self.precision_den),
            ratio(self.recall_num, self.recall_den),
        )
    }

    pub fn add(&mut self, other: &MetricCounts) {
        self.recall_num += other.recall_num;
        self.recall_den += other.recall_den;
        self.precision_num += other.precision_num;
        self.precision_den += other.precision_den;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DocumentCounts {
    pub muc: MetricCounts,
    pub b_cubed: MetricCounts,
    pub ceaf_e: MetricCounts,
}

impl DocumentCounts {
    pub fn add(&mut self, other: &DocumentCounts) {
        self.muc.add(&other.muc);
        self.b_cubed.add(&other.b_cubed);
        self.ceaf_e.add(&other.ceaf_e);
    }

    pub fn report(&self) -> ScoreReport {
        ScoreReport::new(self.muc.prf(), self.b_cubed.prf(), self.ceaf_e.prf())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub muc: PRF,
    pub b_cubed: PRF,
    pub ceaf_e: PRF,
    pub conll_avg_f1: f64,
}

impl ScoreReport {
    pub fn new(muc: PRF, b_cubed: PRF, ceaf_e: PRF) -> Self {
        ScoreReport {
            muc,
            b_cubed,
            ceaf_e,
            conll_avg_f1: conll_avg([muc.f1, b_cubed.f1, ceaf_e.f1]),
        }
    }

    /// Plain-text table, one row per value, scores ×100 with two decimals.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for (name, prf) in [("MUC", &self.muc), ("B3", &self.b_cubed), ("CEAF_e", &self.ceaf_e)] {
            for (i, (label, value)) in [("Precision", prf.precision), ("Recall", prf.recall), ("F1", prf.f1)]
                .into_iter()
                .enumerate()
            {
                let head = if i == 0 { name } else { "" };
                let _ = writeln!(out, "{head:<8}{label:<10}{:>8}", percent(value));
            }
        }
        let _ = writeln!(out, "{:<18}{:>8}", "CoNLL Average F1", percent(self.conll_avg_f1));
        out
    }

    /// The same numbers as [`ScoreReport::table`], ×100 and rounded, as JSON.
    pub fn to_json(&self) -> serde_json::Value {
        let prf = |p: &PRF| {
            serde_json::json!({
                "precision": round2(p.precision * 100.0),
                "recall": round2(p.recall * 100.0),
                "f1": round2(p.f1 * 100.0),
            })
        };
        serde_json::json!({
            "muc": prf(&self.muc),
            "b_cubed": prf(&self.b_cubed),
            "ceaf_e": prf(&self.ceaf_e),
            "conll_avg_f1": round2(self.conll_avg_f1 * 100.0),
        })
    }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.table())
    }
}

/// Rounds to two decimals.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Formats a `[0, 1]` score as a percentage with two decimals.
pub fn percent(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

/// Arithmetic mean of the MUC, B³ and CEAF_e F1 scores.
pub fn conll_avg(f1s: [f64; 3]) -> f64 {
    (f1s[0] + f1s[1] + f1s[2]) / 3.0
}

/// Both partitions as clusters of dense mention indices over the union of
/// their mention sets.
struct Aligned {
    key: Vec<Vec<usize>>,
    response: Vec<Vec<usize>>,
    mentions: usize,
}

fn align(key: &Partition, response: &Partition) -> Result<Aligned, MetricsError> {
    key.check(None)
        .map_err(|message| MetricsError::InvalidPartition { side: "key", message })?;
    response
        .check(None)
        .map_err(|message| MetricsError::InvalidPartition { side: "response", message })?;

    fn convert<'a>(p: &'a Partition, index: &mut HashMap<&'a str, usize>) -> Vec<Vec<usize>> {
        p.clusters
            .iter()
            .map(|c| {
                c.iter()
                    .map(|id| {
                        let next = index.len();
                        *index.entry(id.as_str()).or_insert(next)
                    })
                    .collect()
            })
            .collect()
    }
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut k = convert(key, &mut index);
    let mut r = convert(response, &mut index);
    let n = index.len();

    for clusters in [&mut k, &mut r] {
        let mut covered = vec![false; n];
        for &m in clusters.iter().flatten() {
            covered[m] = true;
        }
        clusters.extend((0..n).filter(|&m| !covered[m]).map(|m| vec![m]));
    }
    Ok(Aligned {
        key: k,
        response: r,
        mentions: n,
    })
}

fn cluster_of(clusters: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut owner = vec![0; n];
    for (c, members) in clusters.iter().enumerate() {
        for &m in members {
            owner[m] = c;
        }
    }
    owner
}

/// Σ (|S| − partitions of S induced by `other`) and Σ (|S| − 1).
fn muc_side(clusters: &[Vec<usize>], other_owner: &[usize]) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for s in clusters.iter().filter(|s| s.len() >= 2) {
        let parts: BTreeSet<usize> = s.iter().map(|&m| other_owner[m]).collect();
        num += (s.len() - parts.len()) as f64;
        den += (s.len() - 1) as f64;
    }
    (num, den)
}

fn muc_counts(a: &Aligned) -> MetricCounts {
    let key_owner = cluster_of(&a.key, a.mentions);
    let resp_owner = cluster_of(&a.response, a.mentions);
    let (recall_num, recall_den) = muc_side(&a.key, &resp_owner);
    let (precision_num, precision_den) = muc_side(&a.response, &key_owner);
    MetricCounts {
        recall_num,
        recall_den,
        precision_num,
        precision_den,
    }
}

fn b_cubed_counts(a: &Aligned) -> MetricCounts {
    let key_owner = cluster_of(&a.key, a.mentions);
    let resp_owner = cluster_of(&a.response, a.mentions);
    let mut overlap: HashMap<(usize, usize), usize> = HashMap::new();
    for m in 0..a.mentions {
        *overlap.entry((key_owner[m], resp_owner[m])).or_default() += 1;
    }
    let mut recall_num = 0.0;
    let mut precision_num = 0.0;
    for m in 0..a.mentions {
        let (k, r) = (key_owner[m], resp_owner[m]);
        let shared = overlap[&(k, r)] as f64;
        recall_num += shared / a.key[k].len() as f64;
        precision_num += shared / a.response[r].len() as f64;
    }
    MetricCounts {
        recall_num,
        recall_den: a.mentions as f64,
        precision_num,
        precision_den: a.mentions as f64,
    }
}

/// Entity similarity 2|K∩R| / (|K| + |R|).
pub fn phi4(key: &[usize], response: &[usize]) -> f64 {
    let shared = key.iter().filter(|m| response.contains(m)).count();
    2.0 * shared as f64 / (key.len() + response.len()) as f64
}

fn ceaf_e_counts(a: &Aligned) -> MetricCounts {
    let sim: Vec<Vec<f64>> = a
        .key
        .iter()
        .map(|k| a.response.iter().map(|r| phi4(k, r)).collect())
        .collect();
    let total: f64 = hungarian(&sim).iter().map(|&(i, j)| sim[i][j]).sum();
    MetricCounts {
        recall_num: total,
        recall_den: a.key.len() as f64,
        precision_num: total,
        precision_den: a.response.len() as f64,
    }
}

pub fn muc(key: &Partition, response: &Partition) -> Result<PRF, MetricsError> {
    Ok(muc_counts(&align(key, response)?).prf())
}

pub fn b_cubed(key: &Partition, response: &Partition) -> Result<PRF, MetricsError> {
    Ok(b_cubed_counts(&align(key, response)?).prf())
}

pub fn ceaf_e(key: &Partition, response: &Partition) -> Result<PRF, MetricsError> {
    Ok(ceaf_e_counts(&align(key, response)?).prf())
}

/// Per-metric counts of one document.
pub fn document_counts(key: &Partition, response: &Partition) -> Result<DocumentCounts, MetricsError> {
    let a = align(key, response)?;
    Ok(DocumentCounts {
        muc: muc_counts(&a),
        b_cubed: b_cubed_counts(&a),
        ceaf_e: ceaf_e_counts(&a),
    })
}

/// Scores a corpus by summing every document's counts before dividing.
/// Documents are matched by id; both sides must name the same set.
pub fn score_system(key: &[(String, Partition)], response: &[(String, Partition)]) -> Result<ScoreReport, MetricsError> {
    let mut by_id: HashMap<&str, &Partition> = HashMap::new();
    for (id, p) in response {
        if by_id.insert(id.as_str(), p).is_some() {
            return Err(MetricsError::DuplicateDocument(id.clone()));
        }
    }
    let mut key_ids = BTreeSet::new();
    for (id, _) in key {
        if !key_ids.insert(id.as_str()) {
            return Err(MetricsError::DuplicateDocument(id.clone()));
        }
    }
    let missing_from_response: Vec<String> = key
        .iter()
        .filter(|(id, _)| !by_id.contains_key(id.as_str()))
        .map(|(id, _)| id.clone())
        .collect();
    let missing_from_key: Vec<String> = response
        .iter()
        .filter(|(id, _)| !key_ids.contains(id.as_str()))
        .map(|(id, _)| id.clone())
        .collect();
    if !missing_from_response.is_empty() || !missing_from_key.is_empty() {
        return Err(MetricsError::UnmatchedDocuments {
            missing_from_response,
            missing_from_key,
        });
    }

    let per_doc: Result<Vec<DocumentCounts>, MetricsError> = key
        .par_iter()
        .map(|(id, k)| document_counts(k, by_id[id.as_str()]))
        .collect();
    let mut total = DocumentCounts::default();
    for counts in per_doc? {
        total.add(&counts);
    }
    Ok(total.report())
}

/// Minimum-cost perfect assignment on a square matrix. Returns the column
/// of each row.
fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    // p[j]: row (1-based) matched to column j; column 0 is a sentinel.
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    assignment
}

/// Best assignment of `rows` to `cols` within a square score matrix.
/// Returns the column chosen for each row (in `cols` coordinates) and the
/// total.
fn best_subassignment(score: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> (Vec<usize>, f64) {
    if rows.is_empty() {
        return (Vec::new(), 0.0);
    }
    let cost: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| cols.iter().map(|&j| -score[i][j]).collect())
        .collect();
    let local = min_cost_assignment(&cost);
    let chosen: Vec<usize> = local.iter().map(|&k| cols[k]).collect();
    let total = rows.iter().zip(&chosen).map(|(&i, &j)| score[i][j]).sum();
    (chosen, total)
}

/// Row-to-column assignment of size `min(n, m)` maximizing the total score.
/// Among optimal assignments the lexicographically smallest one (by column
/// of row 0, then row 1, ...) is returned. Pairs are sorted by row.
pub fn hungarian(matrix: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let n = rows.max(cols);
    let mut score = vec![vec![0.0; n]; n];
    for (i, row) in matrix.iter().enumerate() {
        assert_eq!(row.len(), cols, "ragged score matrix");
        score[i][..cols].copy_from_slice(row);
    }

    // Fix rows in order, each to the smallest column that still admits an
    // optimal completion of the remaining rows.
    let all_rows: Vec<usize> = (0..n).collect();
    let mut free: Vec<usize> = (0..n).collect();
    let (mut current, mut target) = best_subassignment(&score, &all_rows, &free);
    let mut result = vec![0; n];
    for r in 0..n {
        let rest_rows = &all_rows[r + 1..];
        let mut pick = current[0];
        let mut pick_rest: Vec<usize> = current[1..].to_vec();
        for &c in free.iter().take_while(|&&c| c < current[0]) {
            let others: Vec<usize> = free.iter().copied().filter(|&x| x != c).collect();
            let (rest, rest_total) = best_subassignment(&score, rest_rows, &others);
            if score[r][c] + rest_total >= target - TIE_TOLERANCE {
                pick = c;
                pick_rest = rest;
                break;
            }
        }
        result[r] = pick;
        target -= score[r][pick];
        free.retain(|&x| x != pick);
        current = pick_rest;
    }

    (0..rows)
        .filter(|&i| result[i] < cols)
        .map(|i| (i, result[i]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn part(clusters: &[&[&str]]) -> Partition {
        Partition::new(
            clusters
                .iter()
                .map(|c| c.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    /// Counts links: recall = key links recovered through response
    /// connectivity, computed as a spanning-forest size instead of the
    /// partition count.
    fn muc_link_oracle(key: &[Vec<usize>], response: &[Vec<usize>], n: usize) -> (f64, f64) {
        let side = |a: &[Vec<usize>], b: &[Vec<usize>]| {
            let owner_b = {
                let mut o = vec![usize::MAX; n];
                for (c, ms) in b.iter().enumerate() {
                    for &m in ms {
                        o[m] = c;
                    }
                }
                o
            };
            let mut num = 0usize;
            let mut den = 0usize;
            for cluster in a {
                den += cluster.len().saturating_sub(1);
                // Union-find over the cluster restricted to b-links.
                let mut parent: Vec<usize> = (0..cluster.len()).collect();
                fn root(p: &mut [usize], x: usize) -> usize {
                    if p[x] == x {
                        x
                    } else {
                        let r = root(p, p[x]);
                        p[x] = r;
                        r
                    }
                }
                for i in 0..cluster.len() {
                    for j in i + 1..cluster.len() {
                        if owner_b[cluster[i]] == owner_b[cluster[j]] && owner_b[cluster[i]] != usize::MAX {
                            let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                            if ri != rj {
                                parent[ri] = rj;
                                num += 1;
                            }
                        }
                    }
                }
            }
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        (side(key, response), side(response, key))
    }

    /// Per-mention overlap computed directly on string ids.
    fn b_cubed_oracle(key: &Partition, response: &Partition) -> (f64, f64) {
        let find = |p: &Partition, m: &str| p.clusters.iter().find(|c| c.iter().any(|x| x == m)).unwrap().clone();
        let mentions: Vec<String> = key.clusters.iter().flatten().cloned().collect();
        let (mut r, mut p) = (0.0, 0.0);
        for m in &mentions {
            let k = find(key, m);
            let s = find(response, m);
            let shared = k.iter().filter(|x| s.contains(x)).count() as f64;
            r += shared / k.len() as f64;
            p += shared / s.len() as f64;
        }
        (r / mentions.len() as f64, p / mentions.len() as f64)
    }

    fn brute_force_ceaf(key: &[Vec<usize>], response: &[Vec<usize>]) -> f64 {
        fn go(i: usize, key: &[Vec<usize>], response: &[Vec<usize>], used: &mut Vec<bool>) -> f64 {
            if i == key.len() {
                return 0.0;
            }
            let mut best = go(i + 1, key, response, used);
            for j in 0..response.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.max(phi4(&key[i], &response[j]) + go(i + 1, key, response, used));
                    used[j] = false;
                }
            }
            best
        }
        go(0, key, response, &mut vec![false; response.len()])
    }

    fn random_partition(rng: &mut ChaCha8Rng, n: usize, max_clusters: usize) -> Vec<Vec<usize>> {
        let k = rng.gen_range(1..=max_clusters.min(n));
        let mut clusters = vec![Vec::new(); k];
        for m in 0..n {
            clusters[rng.gen_range(0..k)].push(m);
        }
        clusters.retain(|c| !c.is_empty());
        clusters
    }

    fn to_partition(clusters: &[Vec<usize>]) -> Partition {
        Partition::new(
            clusters
                .iter()
                .map(|c| c.iter().map(|m| format!("m{m}")).collect())
                .collect(),
        )
    }

    #[test]
    fn muc_worked_example() {
        let p = muc(&part(&[&["a", "b", "c"]]), &part(&[&["a", "b"], &["c"]])).unwrap();
        assert!(close(p.recall, 0.5));
        assert!(close(p.precision, 1.0));
        assert!(close(p.f1, 2.0 / 3.0));
        let (r, pr) = muc_link_oracle(&[vec![0, 1, 2]], &[vec![0, 1], vec![2]], 3);
        assert!(close(r, 0.5) && close(pr, 1.0));

        let all_single = muc(&part(&[&["a", "b", "c"]]), &part(&[&["a"], &["b"], &["c"]])).unwrap();
        assert_eq!(all_single.recall, 0.0);
        assert_eq!(all_single.f1, 0.0);
    }

    #[test]
    fn b_cubed_worked_example() {
        let key = part(&[&["a", "b", "c"], &["d"]]);
        let response = part(&[&["a", "b"], &["c", "d"]]);
        let p = b_cubed(&key, &response).unwrap();
        // d sits alone in the key, so its recall term is |{d}| / |{d}| = 1.
        assert!(close(p.recall, (2.0 / 3.0 + 2.0 / 3.0 + 1.0 / 3.0 + 1.0) / 4.0));
        assert!(close(p.precision, 0.75));
        let (r, pr) = b_cubed_oracle(&key, &response);
        assert!(close(p.recall, r) && close(p.precision, pr));

        let singles = b_cubed(&part(&[&["a", "b", "c"], &["d"]]), &part(&[&["a"], &["b"], &["c"], &["d"]])).unwrap();
        assert!(close(singles.precision, 1.0));
        assert!(close(singles.recall, (3.0 * (1.0 / 3.0) + 1.0) / 4.0));
    }

    #[test]
    fn ceaf_worked_example() {
        let p = ceaf_e(&part(&[&["a", "b"]]), &part(&[&["a"], &["b"]])).unwrap();
        assert!(close(p.recall, 2.0 / 3.0));
        assert!(close(p.precision, 1.0 / 3.0));
    }

    #[test]
    fn missing_mentions_become_singletons() {
        let key = part(&[&["a", "b"], &["c"]]);
        let explicit = document_counts(&key, &part(&[&["a", "b"], &["c"]])).unwrap();
        let implicit = document_counts(&key, &part(&[&["a", "b"]])).unwrap();
        assert_eq!(explicit, implicit);
        let bad = Partition::new(vec![vec!["a".into()], vec!["a".into()]]);
        assert!(matches!(
            muc(&key, &bad),
            Err(MetricsError::InvalidPartition { side: "response", .. })
        ));
    }

    #[test]
    fn conll_average_of_published_triplets() {
        assert_eq!(format!("{:.2}", conll_avg([18.12, 2.21, 0.66])), "7.00");
        assert_eq!(format!("{:.2}", conll_avg([67.07, 56.32, 57.26])), "60.22");
        assert_eq!(conll_avg([1.0, 1.0, 1.0]), 1.0);
    }

    #[test]
    fn hungarian_examples() {
        assert_eq!(hungarian(&[vec![0.3]]), vec![(0, 0)]);
        assert_eq!(hungarian(&[vec![1.0, 2.0], vec![3.0, 4.0]]), vec![(0, 0), (1, 1)]);
        assert_eq!(hungarian(&[vec![0.0, 5.0, 1.0]]), vec![(0, 1)]);
        assert_eq!(hungarian(&[vec![1.0], vec![4.0], vec![2.0]]), vec![(1, 0)]);
        assert_eq!(hungarian(&vec![vec![1.0; 3]; 3]), vec![(0, 0), (1, 1), (2, 2)]);
        assert!(hungarian(&[]).is_empty());
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn hungarian_matches_permutation_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut perms = permutations(5);
        perms.sort();
        for trial in 0..100 {
            // Coarse integer scores make ties common.
            let m: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..5).map(|_| rng.gen_range(0..4) as f64).collect())
                .collect();
            let total = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| m[i][j]).sum::<f64>();
            let best = perms.iter().map(|p| total(p)).fold(f64::MIN, f64::max);
            let lexi_first = perms.iter().find(|p| total(p) == best).unwrap();
            let got = hungarian(&m);
            let got_cols: Vec<usize> = got.iter().map(|&(_, j)| j).collect();
            assert_eq!(&got_cols, lexi_first, "trial {trial}");
        }
    }

    #[test]
    fn ceaf_matches_exhaustive_alignment() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..200 {
            let n = rng.gen_range(1..=10);
            let k = random_partition(&mut rng, n, 5);
            let r = random_partition(&mut rng, n, 5);
            let got = ceaf_e(&to_partition(&k), &to_partition(&r)).unwrap();
            let total = brute_force_ceaf(&k, &r);
            assert!((got.recall - total / k.len() as f64).abs() < 1e-9, "trial {trial}");
            assert!((got.precision - total / r.len() as f64).abs() < 1e-9, "trial {trial}");
        }
    }

    #[test]
    fn muc_matches_link_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let n = rng.gen_range(1..=10);
            let k = random_partition(&mut rng, n, 5);
            let r = random_partition(&mut rng, n, 5);
            let got = muc(&to_partition(&k), &to_partition(&r)).unwrap();
            let linkless = |p: &[Vec<usize>]| p.iter().all(|c| c.len() < 2);
            let (recall, precision) = if linkless(&k) && linkless(&r) {
                (1.0, 1.0)
            } else {
                muc_link_oracle(&k, &r, n)
            };
            assert!(close(got.recall, recall) && close(got.precision, precision));
        }
    }

    #[test]
    fn two_documents_aggregate_micro() {
        let d1 = (part(&[&["a", "b", "c"]]), part(&[&["a", "b"], &["c"]]));
        let d2 = (part(&[&["x", "y"]]), part(&[&["x", "y"]]));
        let key = vec![("1".to_string(), d1.0.clone()), ("2".to_string(), d2.0.clone())];
        let resp = vec![("2".to_string(), d2.1.clone()), ("1".to_string(), d1.1.clone())];
        let report = score_system(&key, &resp).unwrap();
        // MUC recall: (1 + 1) / (2 + 1); precision: (1 + 1) / (1 + 1).
        assert!(close(report.muc.recall, 2.0 / 3.0));
        assert!(close(report.muc.precision, 1.0));
        // B³ over 5 mentions: recall (2/3 + 2/3 + 1/3 + 1 + 1) / 5.
        assert!(close(report.b_cubed.recall, (5.0 / 3.0 + 2.0) / 5.0));
        // CEAF_e: φ4 totals 0.8 + 1 over 2 key and 3 response entities.
        assert!(close(report.ceaf_e.recall, 1.8 / 2.0));
        assert!(close(report.ceaf_e.precision, 1.8 / 3.0));

        let single = score_system(&key[..1], &resp[1..]).unwrap();
        assert_eq!(single.muc, muc(&d1.0, &d1.1).unwrap());
    }

    #[test]
    fn unmatched_documents_are_reported() {
        let key = vec![("1".to_string(), part(&[&["a"]])), ("2".to_string(), part(&[&["b"]]))];
        let resp = vec![("1".to_string(), part(&[&["a"]])), ("3".to_string(), part(&[&["c"]]))];
        match score_system(&key, &resp) {
            Err(MetricsError::UnmatchedDocuments {
                missing_from_response,
                missing_from_key,
            }) => {
                assert_eq!(missing_from_response, vec!["2"]);
                assert_eq!(missing_from_key, vec!["3"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn table_layout() {
        let report = ScoreReport::new(PRF::new(0.0996, 1.0), PRF::new(0.0112, 1.0), PRF::new(0.0161, 0.0033));
        let table = report.table();
        assert_eq!(table.lines().count(), 10);
        assert!(table.starts_with("MUC     Precision     9.96"));
        assert!(table.lines().last().unwrap().starts_with("CoNLL Average F1"));
        assert_eq!(report.to_json()["muc"]["recall"], 100.0);
    }

    proptest! {
        #[test]
        fn perfect_response_and_swap_symmetry(seed in any::<u64>(), n in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = to_partition(&random_partition(&mut rng, n, 6));
            let r = to_partition(&random_partition(&mut rng, n, 6));
            let perfect = score_system(&[("d".into(), k.clone())], &[("d".into(), k.clone())]).unwrap();
            for prf in [perfect.muc, perfect.b_cubed, perfect.ceaf_e] {
                prop_assert_eq!(prf, PRF::new(1.0, 1.0));
            }
            let fwd = document_counts(&k, &r).unwrap().report();
            let back = document_counts(&r, &k).unwrap().report();
            for (a, b) in [(fwd.muc, back.muc), (fwd.b_cubed, back.b_cubed), (fwd.ceaf_e, back.ceaf_e)] {
                prop_assert!((a.precision - b.recall).abs() < 1e-12);
                prop_assert!((a.recall - b.precision).abs() < 1e-12);
                for x in [a.precision, a.recall, a.f1] {
                    prop_assert!((0.0..=1.0).contains(&x));
                }
            }
        }
    }
}
