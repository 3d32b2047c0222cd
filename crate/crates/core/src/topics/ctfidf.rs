use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::TopicError;

/// Class-based TF-IDF over clusters of tokenized documents.
///
/// `weight(t, c) = tf(t, c) * ln(1 + A / f(t))` where `tf` is the raw count
/// of `t` in class `c`, `A` the mean token count per class and `f(t)` the
/// count of `t` over all classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTfidf {
    /// Sorted vocabulary.
    pub terms: Vec<String>,
    /// Class ids in ascending order.
    pub classes: Vec<i64>,
    /// Per class, `(term index, weight)` sorted by term index; zero weights
    /// are omitted.
    pub rows: Vec<Vec<(u32, f64)>>,
    /// `ln(1 + A / f(t))` per term.
    pub idf: Vec<f64>,
    pub mean_class_tokens: f64,
}

impl ClassTfidf {
    /// Builds the model from `(class, token lists)` pairs. Noise (`-1`) is
    /// skipped.
    pub fn fit<'a, I>(docs: I) -> Result<Self, TopicError>
    where
        I: IntoIterator<Item = (i64, &'a [String])>,
    {
        let mut counts: BTreeMap<i64, HashMap<&'a str, u64>> = BTreeMap::new();
        for (class, tokens) in docs {
            if class < 0 {
                continue;
            }
            let c = counts.entry(class).or_default();
            for t in tokens {
                *c.entry(t.as_str()).or_default() += 1;
            }
        }
        if counts.is_empty() {
            return Err(TopicError::NoClusters);
        }
        let mut total: BTreeMap<&str, u64> = BTreeMap::new();
        for c in counts.values() {
            for (&t, &k) in c {
                *total.entry(t).or_default() += k;
            }
        }
        if total.is_empty() {
            return Err(TopicError::EmptyVocabulary);
        }
        let terms: Vec<String> = total.keys().map(|t| t.to_string()).collect();
        let index: HashMap<&str, u32> = total.keys().enumerate().map(|(i, &t)| (t, i as u32)).collect();
        let token_sum: u64 = total.values().sum();
        let mean = token_sum as f64 / counts.len() as f64;
        let idf: Vec<f64> = total.values().map(|&f| (1.0 + mean / f as f64).ln()).collect();
        let classes: Vec<i64> = counts.keys().copied().collect();
        let rows = counts
            .values()
            .map(|c| {
                let mut row: Vec<(u32, f64)> = c
                    .iter()
                    .map(|(&t, &k)| {
                        let i = index[t];
                        (i, k as f64 * idf[i as usize])
                    })
                    .collect();
                row.sort_unstable_by_key(|e| e.0);
                row
            })
            .collect();
        Ok(Self {
            terms,
            classes,
            rows,
            idf,
            mean_class_tokens: mean,
        })
    }

    pub fn class_position(&self, class: i64) -> Option<usize> {
        self.classes.binary_search(&class).ok()
    }

    pub fn term_position(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    /// Weight of `term` in `class`; 0 when either is unknown or the term is
    /// absent from the class.
    pub fn weight(&self, term: &str, class: i64) -> f64 {
        match (self.term_position(term), self.class_position(class)) {
            (Some(t), Some(c)) => self.rows[c]
                .binary_search_by_key(&(t as u32), |e| e.0)
                .map(|k| self.rows[c][k].1)
                .unwrap_or(0.0),
            _ => 0.0,
        }
    }

    /// Up to `n` highest-weight terms of `class`, ties broken
    /// lexicographically.
    pub fn top_keywords(&self, class: i64, n: usize) -> Vec<String> {
        let Some(c) = self.class_position(class) else {
            return Vec::new();
        };
        let mut row = self.rows[c].clone();
        row.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap_or(Ordering::Equal).then(x.0.cmp(&y.0)));
        row.into_iter().take(n).map(|(t, _)| self.terms[t as usize].clone()).collect()
    }

    /// Sparse c-TF-IDF vector of one tokenized document, with unknown terms
    /// dropped.
    pub fn document_vector(&self, tokens: &[String]) -> Vec<(u32, f64)> {
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for t in tokens {
            if let Some(i) = self.term_position(t) {
                *counts.entry(i as u32).or_default() += 1;
            }
        }
        counts.into_iter().map(|(i, k)| (i, k as f64 * self.idf[i as usize])).collect()
    }

    /// The `n` documents closest in cosine to the class vector, ties broken
    /// by record id.
    pub fn representative_docs(&self, class: i64, docs: &[(&str, &[String])], n: usize) -> Vec<String> {
        let Some(c) = self.class_position(class) else {
            return Vec::new();
        };
        let centroid = &self.rows[c];
        let mut scored: Vec<(f64, &str)> = docs
            .iter()
            .map(|&(id, tokens)| (sparse_cosine(&self.document_vector(tokens), centroid), id))
            .collect();
        scored.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(Ordering::Equal).then(x.1.cmp(y.1)));
        scored.into_iter().take(n).map(|(_, id)| id.to_string()).collect()
    }
}

/// Cosine similarity of two index-sorted sparse vectors; 0 if either is zero.
pub fn sparse_cosine(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    let na = a.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
    let nb = b.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
    if na > 0.0 && nb > 0.0 {
        dot / (na * nb)
    } else {
        0.0
    }
}
