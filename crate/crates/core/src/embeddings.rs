//! Pre-trained word vectors in word2vec text format.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Pseudo-token used to pad mention and context sequences. Always maps to the
/// zero vector.
pub const PAD: &str = "<PAD>";

#[derive(Debug, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("missing or malformed header line (expected \"<vocab size> <dimension>\")")]
    BadHeader,
    #[error("header declares {declared} words but {found} vector lines were found")]
    CountMismatch { declared: usize, found: usize },
    #[error("line {line}: expected {expected} components, found {found}")]
    Dimension { line: usize, expected: usize, found: usize },
    #[error("line {line}: component {value:?} is not a finite number")]
    NonNumeric { line: usize, value: String },
    #[error("embedding dimension must be at least 1")]
    ZeroDimension,
    #[error("word list is empty")]
    EmptyVocabulary,
    #[error("i/o error: {0}")]
    Io(String),
}

/// Word vectors indexed by lowercase token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vocab: HashMap<String, usize>,
    words: Vec<String>,
    matrix: Vec<f64>,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    fn push(&mut self, word: &str, row: &[f64]) {
        let key = word.to_lowercase();
        if self.vocab.contains_key(&key) {
            return;
        }
        self.vocab.insert(key.clone(), self.words.len());
        self.words.push(key);
        self.matrix.extend_from_slice(row);
    }

    /// Row for `token` (case-folded). Unknown tokens and [`PAD`] give zeros.
    pub fn lookup(&self, token: &str) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.lookup_into(token, &mut out);
        out
    }

    /// Writes the row for `token` into `out`, which must have length `dim`.
    pub fn lookup_into(&self, token: &str, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        if token == PAD {
            out.fill(0.0);
            return;
        }
        match self.vocab.get(&token.to_lowercase()) {
            Some(&row) => out.copy_from_slice(&self.matrix[row * self.dim..(row + 1) * self.dim]),
            None => out.fill(0.0),
        }
    }

    pub fn write_word2vec_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.words.len(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(out, "{word}")?;
            for v in &self.matrix[i * self.dim..(i + 1) * self.dim] {
                write!(out, " {v:?}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Reads the word2vec text format: a `V D` header followed by `V` lines of
/// `word v1 .. vD`. Words are lowercased; later duplicates are dropped.
pub fn load_word2vec_text<R: BufRead>(reader: R) -> Result<EmbeddingTable, EmbeddingError> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or(EmbeddingError::BadHeader)?
        .map_err(|e| EmbeddingError::Io(e.to_string()))?;
    let mut parts = header.split_whitespace();
    let (declared, dim) = match (parts.next(), parts.next(), parts.next()) {
        (Some(v), Some(d), None) => (
            v.parse::<usize>().map_err(|_| EmbeddingError::BadHeader)?,
            d.parse::<usize>().map_err(|_| EmbeddingError::BadHeader)?,
        ),
        _ => return Err(EmbeddingError::BadHeader),
    };
    if dim == 0 {
        return Err(EmbeddingError::ZeroDimension);
    }

    let mut table = EmbeddingTable {
        dim,
        vocab: HashMap::new(),
        words: Vec::new(),
        matrix: Vec::new(),
    };
    let mut found = 0;
    let mut row = Vec::with_capacity(dim);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| EmbeddingError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 2;
        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let word = fields.next().expect("non-empty line has a first field");
        row.clear();
        for field in fields {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(EmbeddingError::NonNumeric {
                        line: line_no,
                        value: field.to_string(),
                    })
                }
            }
        }
        if row.len() != dim {
            return Err(EmbeddingError::Dimension {
                line: line_no,
                expected: dim,
                found: row.len(),
            });
        }
        found += 1;
        table.push(word, &row);
    }
    if found != declared {
        return Err(EmbeddingError::CountMismatch { declared, found });
    }
    Ok(table)
}

/// Table of small random vectors, uniform in `[-0.5/dim, 0.5/dim]`.
pub fn random_table<S: AsRef<str>>(seed: u64, words: &[S], dim: usize) -> Result<EmbeddingTable, EmbeddingError> {
    if dim == 0 {
        return Err(EmbeddingError::ZeroDimension);
    }
    if words.is_empty() {
        return Err(EmbeddingError::EmptyVocabulary);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 0.5 / dim as f64;
    let mut table = EmbeddingTable {
        dim,
        vocab: HashMap::new(),
        words: Vec::new(),
        matrix: Vec::new(),
    };
    let mut row = vec![0.0; dim];
    for word in words {
        for v in row.iter_mut() {
            *v = rng.gen_range(-bound..=bound);
        }
        table.push(word.as_ref(), &row);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_and_looks_up() {
        let table = load_word2vec_text("2 3\na 1 2 3\nb 4 5 6\n".as_bytes()).unwrap();
        assert_eq!(table.dim(), 3);
        assert_eq!(table.lookup("a"), vec![1.0, 2.0, 3.0]);
        assert_eq!(table.lookup("B"), vec![4.0, 5.0, 6.0]);
        assert_eq!(table.lookup("zzz"), vec![0.0; 3]);
        assert_eq!(table.lookup(PAD), vec![0.0; 3]);
    }

    #[test]
    fn case_folds_and_keeps_first() {
        let table = load_word2vec_text("2 3\nCat 1 0 0\ncat 2 0 0\n".as_bytes()).unwrap();
        assert_eq!(table.lookup("cat"), vec![1.0, 0.0, 0.0]);
        assert_eq!(table.len(), 1);
        let table = load_word2vec_text("1 2\nbudi 0.5 -1\n".as_bytes()).unwrap();
        assert_eq!(table.lookup("Budi"), vec![0.5, -1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            load_word2vec_text("2 3\na 1 2 3\nb 4 5\n".as_bytes()).unwrap_err(),
            EmbeddingError::Dimension { line: 3, expected: 3, found: 2 }
        );
        assert_eq!(
            load_word2vec_text("3 3\na 1 2 3\nb 4 5 6\n".as_bytes()).unwrap_err(),
            EmbeddingError::CountMismatch { declared: 3, found: 2 }
        );
        assert!(matches!(
            load_word2vec_text("1 2\na 1 x\n".as_bytes()).unwrap_err(),
            EmbeddingError::NonNumeric { line: 2, .. }
        ));
        assert_eq!(load_word2vec_text("".as_bytes()).unwrap_err(), EmbeddingError::BadHeader);
        assert_eq!(load_word2vec_text("a b\n".as_bytes()).unwrap_err(), EmbeddingError::BadHeader);
    }

    #[test]
    fn random_table_properties() {
        let words = ["a", "b", "c"];
        let t1 = random_table(5, &words, 4).unwrap();
        let t2 = random_table(5, &words, 4).unwrap();
        assert_eq!(t1, t2);
        for w in words {
            let row = t1.lookup(w);
            assert_eq!(row.len(), 4);
            assert!(row.iter().all(|v| v.abs() <= 0.5 / 4.0));
        }
        assert_eq!(random_table::<&str>(5, &[], 4).unwrap_err(), EmbeddingError::EmptyVocabulary);
        assert_eq!(random_table(5, &words, 0).unwrap_err(), EmbeddingError::ZeroDimension);
    }

    #[test]
    fn text_format_round_trip() {
        let table = random_table(9, &["x", "y"], 3).unwrap();
        let mut out = Vec::new();
        table.write_word2vec_text(&mut out).unwrap();
        assert_eq!(load_word2vec_text(out.as_slice()).unwrap(), table);
    }
}
