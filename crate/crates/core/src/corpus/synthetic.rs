//! Deterministic generator of small annotated news-like documents.
//!
//! Coreferent mentions are tied together lexically (repeated names, short
//! forms, abbreviations) or by a third-person pronoun whose nearest preceding
//! person mention is its antecedent, no more than two sentences back.
//! Most singletons use words that occur in no other mention of the document;
//! some reuse the head noun of an object entity ("mobil" next to an entity
//! "mobil merah") so that surface overlap alone does not imply coreference.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusDocument, CorpusError, EntityType, Mention};

const FIRST_NAMES: &[&str] = &[
    "Budi", "Siti", "Andi", "Dewi", "Rina", "Agus", "Joko", "Putri", "Wati", "Hendra",
];
const SURNAMES: &[&str] = &[
    "Santoso", "Wijaya", "Pratama", "Lestari", "Hidayat", "Saputra", "Kusuma", "Nugroho",
];
const ORGANIZATIONS: &[(&[&str], &str)] = &[
    (&["Institut", "Teknologi", "Bandung"], "ITB"),
    (&["Komisi", "Pemilihan", "Umum"], "KPU"),
    (&["Badan", "Pusat", "Statistik"], "BPS"),
    (&["Perusahaan", "Listrik", "Negara"], "PLN"),
    (&["Bank", "Rakyat", "Indonesia"], "BRI"),
];
const LOCATIONS: &[&str] = &["Jakarta", "Surabaya", "Medan", "Makassar", "Semarang", "Padang"];
const OBJECTS: &[(&str, &str)] = &[
    ("mobil", "merah"),
    ("kursi", "kayu"),
    ("laptop", "hitam"),
    ("sepeda", "biru"),
    ("kapal", "besar"),
    ("lemari", "tua"),
];
const SINGLETON_NOUNS: &[&str] = &[
    "harga", "pasar", "pemerintah", "warga", "jalan", "acara", "hujan", "proyek", "laporan",
    "anggaran", "sekolah", "pertemuan", "kebijakan", "masalah", "data", "tahun", "pabrik",
];
const OTHER_ADJECTIVES: &[&str] = &["putih", "baru", "kecil", "murah"];
const PRONOUNS: &[&str] = &["dia", "ia", "beliau"];
const FILLERS: &[&str] = &[
    "mengatakan", "bahwa", "telah", "akan", "di", "dan", "yang", "pada", "hari", "ini", "untuk",
    "dengan", "sudah", "melihat", "membeli", "bertemu", "menurut", "kemarin",
];

#[derive(Debug, Clone)]
enum EntityKind {
    Person { first: &'static str, last: &'static str },
    Organization { words: &'static [&'static str], abbrev: &'static str },
    Location { name: &'static str },
    Object { noun: &'static str, adjective: &'static str },
}

impl EntityKind {
    fn entity_type(&self) -> EntityType {
        match self {
            EntityKind::Person { .. } => EntityType::Person,
            EntityKind::Organization { .. } => EntityType::Organization,
            EntityKind::Location { .. } => EntityType::Location,
            EntityKind::Object { .. } => EntityType::Other,
        }
    }

    fn proper(&self) -> bool {
        !matches!(self, EntityKind::Object { .. })
    }

    fn full_form(&self) -> Vec<&'static str> {
        match self {
            EntityKind::Person { first, last } => vec![first, last],
            EntityKind::Organization { words, .. } => words.to_vec(),
            EntityKind::Location { name } => vec![name],
            EntityKind::Object { noun, adjective } => vec![noun, adjective],
        }
    }

    fn later_form<R: Rng>(&self, rng: &mut R) -> Vec<&'static str> {
        let short = rng.gen_bool(0.6);
        match self {
            EntityKind::Person { first, .. } if short => vec![first],
            EntityKind::Organization { abbrev, .. } if short => vec![abbrev],
            EntityKind::Object { noun, .. } if short => vec![noun],
            _ => self.full_form(),
        }
    }
}

/// A planned mention before surface realization.
struct Slot {
    sentence: usize,
    key: f64,
    /// `Some(entity index)` or `None` for a singleton.
    entity: Option<usize>,
    singleton: Option<(Vec<&'static str>, EntityType, bool)>,
}

/// Generates `doc_count` documents from `seed`. Identical arguments always
/// give identical documents.
pub fn generate_synthetic_corpus(seed: u64, doc_count: usize) -> Result<Vec<CorpusDocument>, CorpusError> {
    if doc_count < 1 {
        return Err(CorpusError::EmptyRequest);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..doc_count)
        .map(|i| generate_document(&mut rng, &format!("syn-{seed}-{i:03}")))
        .collect())
}

fn pick_entities<R: Rng>(rng: &mut R, count: usize) -> Vec<EntityKind> {
    let mut firsts = FIRST_NAMES.to_vec();
    let mut lasts = SURNAMES.to_vec();
    let mut orgs = ORGANIZATIONS.to_vec();
    let mut locs = LOCATIONS.to_vec();
    let mut objs = OBJECTS.to_vec();
    firsts.shuffle(rng);
    lasts.shuffle(rng);
    orgs.shuffle(rng);
    locs.shuffle(rng);
    objs.shuffle(rng);

    (0..count)
        .map(|_| loop {
            // Persons are the most common entity type in news text.
            let kind = rng.gen_range(0..6);
            let picked = match kind {
                0..=2 => firsts
                    .pop()
                    .zip(lasts.pop())
                    .map(|(first, last)| EntityKind::Person { first, last }),
                3 => orgs
                    .pop()
                    .map(|(words, abbrev)| EntityKind::Organization { words, abbrev }),
                4 => locs.pop().map(|name| EntityKind::Location { name }),
                _ => objs
                    .pop()
                    .map(|(noun, adjective)| EntityKind::Object { noun, adjective }),
            };
            if let Some(kind) = picked {
                break kind;
            }
        })
        .collect()
}

fn generate_document<R: Rng>(rng: &mut R, doc_id: &str) -> CorpusDocument {
    let sentence_count = rng.gen_range(3..=10);
    let entity_count = rng.gen_range(2..=6);
    let singleton_count = rng.gen_range(3..=12);
    let entities = pick_entities(rng, entity_count);

    let mut slots = Vec::new();
    for e in 0..entity_count {
        let size = rng.gen_range(2..=4);
        let start = rng.gen_range(0..sentence_count);
        let last = (start + 2).min(sentence_count - 1);
        for _ in 0..size {
            slots.push(Slot {
                sentence: rng.gen_range(start..=last),
                key: rng.gen(),
                entity: Some(e),
                singleton: None,
            });
        }
    }
    let mut nouns = SINGLETON_NOUNS.to_vec();
    nouns.shuffle(rng);
    let object_nouns: Vec<&'static str> = entities
        .iter()
        .filter_map(|k| match k {
            EntityKind::Object { noun, .. } => Some(*noun),
            _ => None,
        })
        .collect();
    let mut used_first_person = false;
    for _ in 0..singleton_count {
        let singleton = if !used_first_person && rng.gen_bool(0.15) {
            used_first_person = true;
            (vec!["saya"], EntityType::Person, false)
        } else if !object_nouns.is_empty() && rng.gen_bool(0.3) {
            let noun = object_nouns[rng.gen_range(0..object_nouns.len())];
            if rng.gen_bool(0.5) {
                (vec![noun], EntityType::Other, false)
            } else {
                let adjective = OTHER_ADJECTIVES[rng.gen_range(0..OTHER_ADJECTIVES.len())];
                (vec![noun, adjective], EntityType::Other, false)
            }
        } else {
            let noun = nouns.pop().expect("enough singleton nouns");
            let etype = if rng.gen_bool(0.8) { EntityType::Other } else { EntityType::Organization };
            (vec![noun], etype, false)
        };
        slots.push(Slot {
            sentence: rng.gen_range(0..sentence_count),
            key: rng.gen(),
            entity: None,
            singleton: Some(singleton),
        });
    }
    slots.sort_by(|a, b| (a.sentence, a.key).partial_cmp(&(b.sentence, b.key)).unwrap());

    let mut sentences: Vec<Vec<String>> = vec![Vec::new(); sentence_count];
    let mut mentions = Vec::new();
    let mut members: Vec<Vec<String>> = vec![Vec::new(); entity_count];
    // Entity index and sentence of the most recent third-person person mention.
    let mut last_person: Option<(usize, usize)> = None;

    for (i, slot) in slots.iter().enumerate() {
        let sentence = &mut sentences[slot.sentence];
        for _ in 0..rng.gen_range(1..=3) {
            sentence.push(FILLERS[rng.gen_range(0..FILLERS.len())].to_string());
        }
        let id = format!("m{}", i + 1);
        let (surface, etype, proper, pronoun, first_person) = match (&slot.singleton, slot.entity) {
            (Some((words, etype, proper)), _) => {
                let fp = words[0] == "saya";
                (words.clone(), *etype, *proper, fp, fp)
            }
            (None, Some(e)) => {
                let kind = &entities[e];
                let first = members[e].is_empty();
                let may_pronoun = matches!(kind, EntityKind::Person { .. })
                    && !first
                    && matches!(last_person, Some((le, ls)) if le == e && slot.sentence - ls <= 2);
                if may_pronoun && rng.gen_bool(0.4) {
                    let p = PRONOUNS[rng.gen_range(0..PRONOUNS.len())];
                    (vec![p], kind.entity_type(), false, true, false)
                } else if first {
                    (kind.full_form(), kind.entity_type(), kind.proper(), false, false)
                } else {
                    (kind.later_form(rng), kind.entity_type(), kind.proper(), false, false)
                }
            }
            (None, None) => unreachable!("slot without entity or singleton"),
        };
        if let Some(e) = slot.entity {
            members[e].push(id.clone());
            if etype == EntityType::Person {
                last_person = Some((e, slot.sentence));
            }
        }
        let start = sentence.len();
        sentence.extend(surface.iter().map(|w| w.to_string()));
        mentions.push(Mention {
            id,
            sentence_index: slot.sentence,
            start_token: start,
            end_token: sentence.len() - 1,
            is_pronoun: pronoun,
            entity_type: etype,
            is_proper_name: proper,
            is_first_person: first_person,
        });
    }
    for sentence in &mut sentences {
        if sentence.is_empty() {
            sentence.push(FILLERS[rng.gen_range(0..FILLERS.len())].to_string());
        }
        sentence.push(".".to_string());
    }

    CorpusDocument::new(doc_id, sentences, mentions, members).expect("generated document is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{gold_singletons, parse_corpus, write_corpus};

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic_corpus(7, 5).unwrap();
        let b = generate_synthetic_corpus(7, 5).unwrap();
        let c = generate_synthetic_corpus(8, 5).unwrap();
        let bytes = |docs: &[CorpusDocument]| {
            let mut out = Vec::new();
            write_corpus(&mut out, docs).unwrap();
            out
        };
        assert_eq!(bytes(&a), bytes(&b));
        assert_ne!(bytes(&a), bytes(&c));
    }

    #[test]
    fn rejects_zero_documents() {
        assert_eq!(generate_synthetic_corpus(1, 0).unwrap_err(), CorpusError::EmptyRequest);
    }

    #[test]
    fn round_trips_and_respects_shape() {
        let docs = generate_synthetic_corpus(3, 30).unwrap();
        let mut out = Vec::new();
        write_corpus(&mut out, &docs).unwrap();
        assert_eq!(parse_corpus(out.as_slice()).unwrap(), docs);

        for doc in &docs {
            assert!((3..=10).contains(&doc.sentences.len()));
            assert!((2..=6).contains(&doc.entities.len()));
            assert!(doc.entities.iter().all(|e| (2..=4).contains(&e.len())));
            assert!((3..=12).contains(&gold_singletons(doc).len()));
            for m in &doc.mentions {
                let toks = doc.mention_tokens(m);
                if m.is_pronoun {
                    assert_eq!(toks.len(), 1);
                    assert!(PRONOUNS.contains(&toks[0].as_str()) || toks[0] == "saya");
                }
                assert_eq!(m.is_first_person, toks[0] == "saya");
            }
        }
    }

    #[test]
    fn pronouns_follow_their_antecedent_closely() {
        for doc in generate_synthetic_corpus(11, 30).unwrap() {
            let entity_of = doc.entity_of();
            for (i, m) in doc.mentions.iter().enumerate() {
                if !m.is_pronoun || m.is_first_person {
                    continue;
                }
                let prev = doc.mentions[..i]
                    .iter()
                    .rev()
                    .find(|p| p.entity_type == EntityType::Person && !p.is_first_person)
                    .expect("pronoun has a preceding person");
                assert_eq!(entity_of[prev.id.as_str()], entity_of[m.id.as_str()]);
                assert!(m.sentence_index - prev.sentence_index <= 2);
            }
        }
    }
}
