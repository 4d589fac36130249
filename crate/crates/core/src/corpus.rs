//! Document, mention and entity data model plus the JSON-lines interchange
//! format.
//!
//! Each line of a corpus file holds one document:
//!
//! ```json
//! {"doc_id":"d1","sentences":[["Budi","pergi","."]],
//!  "mentions":[{"id":"m1","sentence":0,"start":0,"end":0,"pronoun":false,
//!               "etype":"PERSON","proper":true,"first_person":false}],
//!  "entities":[]}
//! ```
//!
//! Singletons are implicit: a mention that appears in no entity is a
//! singleton, and entity records must have at least two members.

mod synthetic;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use synthetic::generate_synthetic_corpus;

/// Entity type attribute of a mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityType {
    Person,
    Organization,
    Location,
    Other,
}

impl EntityType {
    pub const ALL: [EntityType; 4] = [
        EntityType::Person,
        EntityType::Organization,
        EntityType::Location,
        EntityType::Other,
    ];

    pub fn index(self) -> usize {
        match self {
            EntityType::Person => 0,
            EntityType::Organization => 1,
            EntityType::Location => 2,
            EntityType::Other => 3,
        }
    }
}

/// A token span annotated with the four mention attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mention {
    pub id: String,
    #[serde(rename = "sentence")]
    pub sentence_index: usize,
    #[serde(rename = "start")]
    pub start_token: usize,
    /// Inclusive.
    #[serde(rename = "end")]
    pub end_token: usize,
    #[serde(rename = "pronoun")]
    pub is_pronoun: bool,
    #[serde(rename = "etype")]
    pub entity_type: EntityType,
    #[serde(rename = "proper")]
    pub is_proper_name: bool,
    #[serde(rename = "first_person")]
    pub is_first_person: bool,
}

impl Mention {
    /// Sort key defining document order.
    pub fn order_key(&self) -> (usize, usize, usize) {
        (self.sentence_index, self.start_token, self.end_token)
    }

    pub fn len(&self) -> usize {
        self.end_token - self.start_token + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A validated document. Mentions are kept in document order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusDocument {
    pub doc_id: String,
    pub sentences: Vec<Vec<String>>,
    pub mentions: Vec<Mention>,
    pub entities: Vec<Vec<String>>,
}

/// A set of disjoint clusters of mention ids covering a whole document.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Partition {
    pub clusters: Vec<Vec<String>>,
}

impl Partition {
    pub fn new(clusters: Vec<Vec<String>>) -> Self {
        Partition { clusters }
    }

    /// Sorts members of each cluster and the clusters themselves, giving a
    /// canonical form for comparisons.
    pub fn canonical(&self) -> Partition {
        let mut clusters: Vec<Vec<String>> = self
            .clusters
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort();
                c
            })
            .collect();
        clusters.sort();
        Partition { clusters }
    }

    pub fn mention_ids(&self) -> BTreeSet<&str> {
        self.clusters.iter().flatten().map(String::as_str).collect()
    }

    /// Checks disjointness and, when `universe` is given, exact coverage.
    pub fn check(&self, universe: Option<&BTreeSet<&str>>) -> Result<(), String> {
        let mut seen = HashSet::new();
        for cluster in &self.clusters {
            if cluster.is_empty() {
                return Err("empty cluster".into());
            }
            for id in cluster {
                if !seen.insert(id.as_str()) {
                    return Err(format!("mention {id} appears in more than one cluster"));
                }
            }
        }
        if let Some(universe) = universe {
            if seen.len() != universe.len() || !universe.iter().all(|id| seen.contains(id)) {
                return Err("clusters do not cover the document's mentions exactly".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("document {doc_id}: mention {mention_id}: {field} out of range")]
    OffsetOutOfRange {
        doc_id: String,
        mention_id: String,
        field: &'static str,
    },
    #[error("document {doc_id}: duplicate mention id {mention_id}")]
    DuplicateMentionId { doc_id: String, mention_id: String },
    #[error("document {doc_id}: entities: unknown mention id {mention_id}")]
    UnknownMentionId { doc_id: String, mention_id: String },
    #[error("document {doc_id}: entities: mention {mention_id} appears in more than one entity")]
    MentionInSeveralEntities { doc_id: String, mention_id: String },
    #[error("document {doc_id}: entities[{index}] has fewer than 2 members")]
    EntityTooSmall { doc_id: String, index: usize },
    #[error("document {doc_id}: mention {mention_id}: first_person requires pronoun")]
    FirstPersonNotPronoun { doc_id: String, mention_id: String },
    #[error("document {doc_id}: sentences: empty token at sentence {sentence}")]
    EmptyToken { doc_id: String, sentence: usize },
    #[error("document {doc_id}: sentences: token contains whitespace at sentence {sentence}")]
    WhitespaceToken { doc_id: String, sentence: usize },
    #[error("document count must be at least 1")]
    EmptyRequest,
    #[error("i/o error: {0}")]
    Io(String),
}

impl CorpusDocument {
    /// Builds a document, sorting mentions into document order and validating
    /// every invariant.
    pub fn new(
        doc_id: impl Into<String>,
        sentences: Vec<Vec<String>>,
        mentions: Vec<Mention>,
        entities: Vec<Vec<String>>,
    ) -> Result<Self, CorpusError> {
        let mut doc = CorpusDocument {
            doc_id: doc_id.into(),
            sentences,
            mentions,
            entities,
        };
        doc.sort_mentions();
        match doc.violations().into_iter().next() {
            Some(err) => Err(err),
            None => Ok(doc),
        }
    }

    fn sort_mentions(&mut self) {
        self.mentions
            .sort_by(|a, b| a.order_key().cmp(&b.order_key()).then_with(|| a.id.cmp(&b.id)));
    }

    /// Every invariant violation in this document, in a stable order.
    pub fn violations(&self) -> Vec<CorpusError> {
        let doc_id = || self.doc_id.clone();
        let mut errors = Vec::new();

        for (s, sentence) in self.sentences.iter().enumerate() {
            if sentence.iter().any(String::is_empty) {
                errors.push(CorpusError::EmptyToken { doc_id: doc_id(), sentence: s });
            }
            if sentence.iter().any(|t| t.chars().any(char::is_whitespace)) {
                errors.push(CorpusError::WhitespaceToken { doc_id: doc_id(), sentence: s });
            }
        }

        let mut ids = HashSet::new();
        for m in &self.mentions {
            if !ids.insert(m.id.as_str()) {
                errors.push(CorpusError::DuplicateMentionId {
                    doc_id: doc_id(),
                    mention_id: m.id.clone(),
                });
            }
            let out_of_range = |field| CorpusError::OffsetOutOfRange {
                doc_id: doc_id(),
                mention_id: m.id.clone(),
                field,
            };
            match self.sentences.get(m.sentence_index) {
                None => errors.push(out_of_range("sentence")),
                Some(sentence) => {
                    if m.start_token > m.end_token {
                        errors.push(out_of_range("start"));
                    } else if m.end_token >= sentence.len() {
                        errors.push(out_of_range("end"));
                    }
                }
            }
            if m.is_first_person && !m.is_pronoun {
                errors.push(CorpusError::FirstPersonNotPronoun {
                    doc_id: doc_id(),
                    mention_id: m.id.clone(),
                });
            }
        }

        let mut clustered = HashSet::new();
        for (index, entity) in self.entities.iter().enumerate() {
            if entity.len() < 2 {
                errors.push(CorpusError::EntityTooSmall { doc_id: doc_id(), index });
            }
            for id in entity {
                if !ids.contains(id.as_str()) {
                    errors.push(CorpusError::UnknownMentionId {
                        doc_id: doc_id(),
                        mention_id: id.clone(),
                    });
                } else if !clustered.insert(id.as_str()) {
                    errors.push(CorpusError::MentionInSeveralEntities {
                        doc_id: doc_id(),
                        mention_id: id.clone(),
                    });
                }
            }
        }
        errors
    }

    pub fn mention(&self, id: &str) -> Option<&Mention> {
        self.mentions.iter().find(|m| m.id == id)
    }

    /// Position of the mention in document order.
    pub fn mention_index(&self, id: &str) -> Option<usize> {
        self.mentions.iter().position(|m| m.id == id)
    }

    pub fn mention_tokens(&self, mention: &Mention) -> &[String] {
        &self.sentences[mention.sentence_index][mention.start_token..=mention.end_token]
    }

    /// Offset of the first token of `sentence` in the flattened token stream.
    pub fn sentence_offset(&self, sentence: usize) -> usize {
        self.sentences[..sentence].iter().map(Vec::len).sum()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// Map from mention id to the index of its gold entity.
    pub fn entity_of(&self) -> HashMap<&str, usize> {
        self.entities
            .iter()
            .enumerate()
            .flat_map(|(e, members)| members.iter().map(move |id| (id.as_str(), e)))
            .collect()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("document serializes")
    }
}

/// Mentions that belong to no gold entity.
pub fn gold_singletons(doc: &CorpusDocument) -> BTreeSet<String> {
    let clustered: HashSet<&str> = doc.entities.iter().flatten().map(String::as_str).collect();
    doc.mentions
        .iter()
        .filter(|m| !clustered.contains(m.id.as_str()))
        .map(|m| m.id.clone())
        .collect()
}

/// Gold entities plus one single-member cluster per gold singleton.
pub fn gold_partition(doc: &CorpusDocument) -> Partition {
    let singletons = gold_singletons(doc);
    let mut clusters = doc.entities.clone();
    // Singletons in document order.
    clusters.extend(
        doc.mentions
            .iter()
            .filter(|m| singletons.contains(&m.id))
            .map(|m| vec![m.id.clone()]),
    );
    Partition { clusters }
}

fn parse_line(line: &str, line_no: usize) -> Result<CorpusDocument, CorpusError> {
    let raw: CorpusDocument = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
        line: line_no,
        message: e.to_string(),
    })?;
    CorpusDocument::new(raw.doc_id, raw.sentences, raw.mentions, raw.entities)
}

/// Parses a JSON-lines corpus. Blank lines are skipped; the first error stops
/// parsing.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Vec<CorpusDocument>, CorpusError> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        docs.push(parse_line(&line, i + 1)?);
    }
    Ok(docs)
}

/// Result of a lenient pass over a corpus that reports every violation.
#[derive(Debug, Default)]
pub struct ValidationReport {
    pub documents: usize,
    pub errors: Vec<CorpusError>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "{e}")?;
        }
        write!(f, "{} documents, {} errors", self.documents, self.errors.len())
    }
}

/// Like [`parse_corpus`] but keeps going after errors so that every problem is
/// reported.
pub fn validate_corpus<R: BufRead>(reader: R) -> Result<ValidationReport, CorpusError> {
    let mut report = ValidationReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        report.documents += 1;
        match serde_json::from_str::<CorpusDocument>(&line) {
            Ok(doc) => report.errors.extend(doc.violations()),
            Err(e) => report.errors.push(CorpusError::Malformed {
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    Ok(report)
}

pub fn write_corpus<W: std::io::Write>(mut out: W, docs: &[CorpusDocument]) -> std::io::Result<()> {
    for doc in docs {
        writeln!(out, "{}", doc.to_json_line())?;
    }
    Ok(())
}
