//! Feature groups for single mentions and mention pairs.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::corpus::{CorpusDocument, EntityType, Mention};
use crate::embeddings::{EmbeddingTable, PAD};
use crate::nn::Matrix;

/// Tokens taken on each side of a mention.
pub const CONTEXT_SIDE: usize = 10;
/// Minimum padded length of a mention's word sequence (largest filter width).
pub const MIN_MENTION_LEN: usize = 4;
/// Distances are clipped here and scaled into `[0, 1]`.
pub const DISTANCE_CAP: usize = 63;

pub const MENTION_FEATURES: usize = 7;
pub const PAIR_FEATURES: usize = 9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("mention {0} is not part of document {1}")]
    UnknownMention(String, String),
    #[error("anaphor {anaphor} does not follow antecedent {antecedent}")]
    OrderViolation { antecedent: String, anaphor: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MentionFeatures {
    pub is_pronoun: bool,
    pub entity_type: EntityType,
    pub is_proper_name: bool,
    pub is_first_person: bool,
}

impl MentionFeatures {
    /// Layout: pronoun, entity-type one-hot (4), proper name, first person.
    pub fn to_vector(&self) -> [f64; MENTION_FEATURES] {
        let mut v = [0.0; MENTION_FEATURES];
        v[0] = f64::from(u8::from(self.is_pronoun));
        v[1 + self.entity_type.index()] = 1.0;
        v[5] = f64::from(u8::from(self.is_proper_name));
        v[6] = f64::from(u8::from(self.is_first_person));
        v
    }
}

pub fn mention_features(mention: &Mention) -> MentionFeatures {
    MentionFeatures {
        is_pronoun: mention.is_pronoun,
        entity_type: mention.entity_type,
        is_proper_name: mention.is_proper_name,
        is_first_person: mention.is_first_person,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairRelationFeatures {
    pub exact_match: bool,
    pub same_word_set: bool,
    pub substring: bool,
    pub abbreviation: bool,
    pub appositive: bool,
    pub nearest_candidate: bool,
    pub sentence_distance: usize,
    pub word_distance: usize,
    pub mention_distance: usize,
}

fn scaled_distance(d: usize) -> f64 {
    d.min(DISTANCE_CAP) as f64 / DISTANCE_CAP as f64
}

impl PairRelationFeatures {
    pub fn to_vector(&self) -> [f64; PAIR_FEATURES] {
        let b = |x: bool| f64::from(u8::from(x));
        [
            b(self.exact_match),
            b(self.same_word_set),
            b(self.substring),
            b(self.abbreviation),
            b(self.appositive),
            b(self.nearest_candidate),
            scaled_distance(self.sentence_distance),
            scaled_distance(self.word_distance),
            scaled_distance(self.mention_distance),
        ]
    }
}

fn lower_tokens(doc: &CorpusDocument, m: &Mention) -> Vec<String> {
    doc.mention_tokens(m).iter().map(|t| t.to_lowercase()).collect()
}

fn is_abbreviation(short: &[String], long: &[String]) -> bool {
    if short.len() != 1 || long.len() < 2 {
        return false;
    }
    let initials: String = long.iter().filter_map(|t| t.chars().next()).collect();
    initials == short[0]
}

fn index_of(doc: &CorpusDocument, m: &Mention) -> Result<usize, FeatureError> {
    doc.mention_index(&m.id)
        .ok_or_else(|| FeatureError::UnknownMention(m.id.clone(), doc.doc_id.clone()))
}

/// Relation features for an ordered pair. `antecedent` must come first in
/// document order.
pub fn pair_features(
    doc: &CorpusDocument,
    antecedent: &Mention,
    anaphor: &Mention,
) -> Result<PairRelationFeatures, FeatureError> {
    let i = index_of(doc, antecedent)?;
    let j = index_of(doc, anaphor)?;
    if i >= j {
        return Err(FeatureError::OrderViolation {
            antecedent: antecedent.id.clone(),
            anaphor: anaphor.id.clone(),
        });
    }

    let a = lower_tokens(doc, antecedent);
    let b = lower_tokens(doc, anaphor);
    let a_joined = a.join(" ");
    let b_joined = b.join(" ");
    let a_set: BTreeSet<&String> = a.iter().collect();
    let b_set: BTreeSet<&String> = b.iter().collect();

    let appositive = antecedent.sentence_index == anaphor.sentence_index
        && anaphor.start_token == antecedent.end_token + 2
        && doc.sentences[antecedent.sentence_index][antecedent.end_token + 1] == ",";

    let a_end = doc.sentence_offset(antecedent.sentence_index) + antecedent.end_token;
    let b_start = doc.sentence_offset(anaphor.sentence_index) + anaphor.start_token;
    let mention_distance = j - i - 1;

    Ok(PairRelationFeatures {
        exact_match: a_joined == b_joined,
        same_word_set: a_set == b_set,
        substring: a_joined.contains(&b_joined) || b_joined.contains(&a_joined),
        abbreviation: is_abbreviation(&a, &b) || is_abbreviation(&b, &a),
        appositive,
        nearest_candidate: mention_distance == 0,
        sentence_distance: anaphor.sentence_index - antecedent.sentence_index,
        word_distance: b_start.saturating_sub(a_end + 1),
        mention_distance,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextWindow {
    pub preceding: Vec<String>,
    pub following: Vec<String>,
}

impl ContextWindow {
    /// Preceding tokens followed by following tokens.
    pub fn joined(&self) -> Vec<String> {
        self.preceding.iter().chain(&self.following).cloned().collect()
    }
}

/// The ten tokens on each side of a mention in the flattened document,
/// padded with [`PAD`] at the document boundaries.
pub fn context_window(doc: &CorpusDocument, mention: &Mention) -> ContextWindow {
    let flat: Vec<&String> = doc.sentences.iter().flatten().collect();
    let start = doc.sentence_offset(mention.sentence_index) + mention.start_token;
    let end = start + (mention.end_token - mention.start_token);

    let preceding = (0..CONTEXT_SIDE)
        .map(|k| {
            (start + k)
                .checked_sub(CONTEXT_SIDE)
                .map_or_else(|| PAD.to_string(), |p| flat[p].clone())
        })
        .collect();
    let following = (1..=CONTEXT_SIDE)
        .map(|k| flat.get(end + k).map_or_else(|| PAD.to_string(), |t| (*t).clone()))
        .collect();
    ContextWindow { preceding, following }
}

/// The mention's tokens right-padded with [`PAD`] to at least
/// [`MIN_MENTION_LEN`].
pub fn mention_word_sequence(mention: &Mention, doc: &CorpusDocument) -> Vec<String> {
    let mut tokens = doc.mention_tokens(mention).to_vec();
    while tokens.len() < MIN_MENTION_LEN {
        tokens.push(PAD.to_string());
    }
    tokens
}

/// Embeds a token sequence as an `L × dim` matrix, adding zero (PAD) rows
/// until it has at least `min_len` rows.
pub fn embed_sequence(table: &EmbeddingTable, tokens: &[String], min_len: usize) -> Matrix {
    let dim = table.dim();
    let rows = tokens.len().max(min_len);
    let mut m = Matrix::zeros(rows, dim);
    for (r, token) in tokens.iter().enumerate() {
        table.lookup_into(token, m.row_mut(r));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;

    fn m(id: &str, s: usize, start: usize, end: usize, pronoun: bool) -> Mention {
        Mention {
            id: id.into(),
            sentence_index: s,
            start_token: start,
            end_token: end,
            is_pronoun: pronoun,
            entity_type: EntityType::Other,
            is_proper_name: false,
            is_first_person: false,
        }
    }

    fn doc(sentences: &[&str], mentions: Vec<Mention>) -> CorpusDocument {
        let sentences = sentences
            .iter()
            .map(|s| s.split(' ').map(String::from).collect())
            .collect();
        CorpusDocument::new("t", sentences, mentions, vec![]).unwrap()
    }

    #[test]
    fn mention_feature_layout() {
        let mut dia = m("a", 0, 0, 0, true);
        dia.entity_type = EntityType::Person;
        assert_eq!(mention_features(&dia).to_vector(), [1., 1., 0., 0., 0., 0., 0.]);
        let mut budi = m("b", 0, 0, 0, false);
        budi.entity_type = EntityType::Person;
        budi.is_proper_name = true;
        assert_eq!(mention_features(&budi).to_vector(), [0., 1., 0., 0., 0., 1., 0.]);
        let mut saya = dia.clone();
        saya.is_first_person = true;
        let v = mention_features(&saya).to_vector();
        assert_eq!((v[0], v[6]), (1.0, 1.0));
    }

    #[test]
    fn kursi_dia_contains_kursi() {
        let d = doc(
            &["ini kursi dia .", "kursi itu rusak ."],
            vec![m("a", 0, 1, 2, false), m("b", 1, 0, 0, false)],
        );
        let f = pair_features(&d, &d.mentions[0], &d.mentions[1]).unwrap();
        assert!(f.substring);
        assert!(!f.exact_match);
        assert!(!f.same_word_set);
        assert_eq!(f.sentence_distance, 1);
        // "." after "dia", then "kursi".
        assert_eq!(f.word_distance, 1);
    }

    #[test]
    fn exact_match_and_adjacency() {
        let d = doc(
            &["Budi dan budi ."],
            vec![m("a", 0, 0, 0, false), m("b", 0, 2, 2, false)],
        );
        let f = pair_features(&d, &d.mentions[0], &d.mentions[1]).unwrap();
        assert!(f.exact_match && f.same_word_set && f.substring);
        assert!(f.nearest_candidate);
        assert_eq!(f.mention_distance, 0);
        assert_eq!(f.word_distance, 1);
    }

    /// Independent initials oracle: first letter of each token of the longer
    /// mention against the shorter mention, lowercased.
    fn initials_oracle(long: &str, short: &str) -> bool {
        let acronym: String = long
            .split_whitespace()
            .map(|w| w.chars().next().unwrap().to_ascii_lowercase())
            .collect();
        long.split_whitespace().count() > 1 && acronym == short.to_ascii_lowercase()
    }

    #[test]
    fn abbreviation_matches_initials_oracle() {
        let d = doc(
            &["Institut Teknologi Bandung , ITB , dan IT ."],
            vec![m("a", 0, 0, 2, false), m("b", 0, 4, 4, false), m("c", 0, 8, 8, false)],
        );
        let [a, b, c] = [&d.mentions[0], &d.mentions[1], &d.mentions[2]];
        let f = pair_features(&d, a, b).unwrap();
        assert_eq!(f.abbreviation, initials_oracle("Institut Teknologi Bandung", "ITB"));
        assert!(f.abbreviation);
        assert!(f.appositive);
        let g = pair_features(&d, a, c).unwrap();
        assert_eq!(g.abbreviation, initials_oracle("Institut Teknologi Bandung", "IT"));
        assert!(!g.abbreviation);
        assert!(!g.appositive);
        assert!(!g.nearest_candidate);
    }

    #[test]
    fn order_violation_is_an_error() {
        let d = doc(&["a b ."], vec![m("a", 0, 0, 0, false), m("b", 0, 1, 1, false)]);
        assert!(matches!(
            pair_features(&d, &d.mentions[1], &d.mentions[0]),
            Err(FeatureError::OrderViolation { .. })
        ));
    }

    #[test]
    fn nested_mentions_have_zero_word_distance() {
        let d = doc(&["kursi dia rusak ."], vec![m("a", 0, 0, 1, false), m("b", 0, 1, 1, true)]);
        let f = pair_features(&d, &d.mentions[0], &d.mentions[1]).unwrap();
        assert_eq!(f.word_distance, 0);
        assert!(f.substring);
    }

    #[test]
    fn distances_are_clipped_and_scaled() {
        let f = PairRelationFeatures { sentence_distance: 500, word_distance: 63, mention_distance: 0, ..Default::default() };
        let v = f.to_vector();
        assert_eq!(&v[6..], &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn context_windows() {
        let d = doc(&["t0 t1 t2", "t3 t4"], vec![m("a", 0, 2, 2, false), m("b", 0, 0, 0, false)]);
        let p = PAD.to_string();
        let w = context_window(&d, d.mention("a").unwrap());
        let mut pre = vec![p.clone(); 8];
        pre.extend(["t0".to_string(), "t1".to_string()]);
        let mut fol = vec!["t3".to_string(), "t4".to_string()];
        fol.extend(vec![p.clone(); 8]);
        assert_eq!(w.preceding, pre);
        assert_eq!(w.following, fol);
        assert_eq!(w.joined().len(), 20);

        let w = context_window(&d, d.mention("b").unwrap());
        assert_eq!(w.preceding, vec![p; 10]);

        let long: Vec<String> = (0..30).map(|i| format!("w{i}")).collect();
        let d = doc(&[&long.join(" ")], vec![m("a", 0, 15, 15, false)]);
        let w = context_window(&d, &d.mentions[0]);
        assert!(!w.joined().iter().any(|t| t == PAD));
        assert_eq!(w.preceding[0], "w5");
        assert_eq!(w.following[9], "w25");
    }

    #[test]
    fn word_sequences_are_padded() {
        let d = doc(&["a b c d e f g"], vec![m("x", 0, 0, 0, false), m("y", 0, 1, 4, false), m("z", 0, 1, 6, false)]);
        let p = PAD.to_string();
        assert_eq!(mention_word_sequence(&d.mentions[0], &d), vec!["a".to_string(), p.clone(), p.clone(), p]);
        assert_eq!(mention_word_sequence(&d.mentions[1], &d).len(), 4);
        assert_eq!(mention_word_sequence(&d.mentions[2], &d).len(), 6);
    }

    #[test]
    fn three_consecutive_mentions() {
        let d = parse_corpus(
            r#"{"doc_id":"x","sentences":[["a","b","c"]],"mentions":[{"id":"1","sentence":0,"start":0,"end":0,"pronoun":false,"etype":"OTHER","proper":false,"first_person":false},{"id":"2","sentence":0,"start":1,"end":1,"pronoun":false,"etype":"OTHER","proper":false,"first_person":false},{"id":"3","sentence":0,"start":2,"end":2,"pronoun":false,"etype":"OTHER","proper":false,"first_person":false}],"entities":[]}"#.as_bytes(),
        )
        .unwrap()
        .remove(0);
        let f = pair_features(&d, &d.mentions[0], &d.mentions[2]).unwrap();
        assert!(!f.nearest_candidate);
        assert_eq!(f.mention_distance, 1);
    }
}
