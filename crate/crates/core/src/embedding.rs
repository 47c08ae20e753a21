use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

pub const EMBEDDING_DIM: usize = 300;

/// Word vectors loaded from `word v1 ... v300` lines. A tab after the word
/// lets the word itself contain spaces.
///
/// Keys are stored lowercase; lookups lowercase the query first.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut vectors = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            // a tab ends the word when present, so keys may contain spaces
            let (word, rest) = line
                .split_once('\t')
                .or_else(|| line.split_once(' '))
                .ok_or_else(|| Error::parse(line_no, "expected a word followed by values"))?;
            let values = rest
                .split(['\t', ' '])
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::parse(line_no, format!("bad value {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if values.len() != EMBEDDING_DIM {
                return Err(Error::parse(
                    line_no,
                    format!("expected {EMBEDDING_DIM} values, got {}", values.len()),
                ));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(line_no, "non-finite value"));
            }
            vectors.insert(word.trim().to_lowercase(), values);
        }
        Ok(Self { vectors })
    }

    pub fn insert(&mut self, word: &str, vector: Vec<f64>) -> Result<()> {
        if vector.len() != EMBEDDING_DIM {
            return Err(Error::validation(
                "embedding",
                format!("vector for {word:?} has {} dims", vector.len()),
            ));
        }
        self.vectors.insert(word.to_lowercase(), vector);
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Unit-normalized mean of the vectors of `words` that are present.
    ///
    /// Multi-word labels use the mean of their component words. Returns
    /// `None` when nothing is found or the mean is the zero vector.
    pub fn mean_unit<'a>(&self, words: impl IntoIterator<Item = &'a str>) -> Option<Vec<f64>> {
        let mut sum = vec![0.0; EMBEDDING_DIM];
        let mut found = 0usize;
        for word in words {
            if let Some(v) = self.phrase_vector(word) {
                for (s, x) in sum.iter_mut().zip(&v) {
                    *s += x;
                }
                found += 1;
            }
        }
        if found == 0 {
            return None;
        }
        for s in &mut sum {
            *s /= found as f64;
        }
        normalize(sum)
    }

    fn phrase_vector(&self, phrase: &str) -> Option<Vec<f64>> {
        if let Some(v) = self.get(phrase) {
            return Some(v.to_vec());
        }
        let parts: Vec<&[f64]> = phrase
            .split_whitespace()
            .map(|w| self.get(w))
            .collect::<Option<_>>()?;
        if parts.len() < 2 {
            return None;
        }
        let mut mean = vec![0.0; EMBEDDING_DIM];
        for p in &parts {
            for (m, x) in mean.iter_mut().zip(p.iter()) {
                *m += x / parts.len() as f64;
            }
        }
        Some(mean)
    }

    /// Dot product of two unit-normalized vectors, i.e. cosine similarity.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let a = normalize(self.phrase_vector(a)?)?;
        let b = normalize(self.phrase_vector(b)?)?;
        Some(dot(&a, &b))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let norm = dot(&v, &v).sqrt();
    if norm == 0.0 {
        return None;
    }
    for x in &mut v {
        *x /= norm;
    }
    Some(v)
}
