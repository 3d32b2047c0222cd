use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::RetrievalError;
use crate::corpus::EmbeddingMatrix;
use crate::scalar::{dot, normalize_in_place, Scalar};
use crate::Matrix;

/// Rows per parallel scan chunk.
const CHUNK_ROWS: usize = 8192;

/// Exact cosine search over an owned, row-normalized matrix.
#[derive(Debug, Clone)]
pub struct CosineIndex<T> {
    ids: Vec<String>,
    /// Position of each row in ascending record-id order; breaks score ties.
    id_rank: Vec<u32>,
    data: Matrix<T>,
}

/// `(score, id rank, row)`; ordered so that the greater entry is the better
/// hit.
#[derive(Debug, Clone, Copy)]
struct Candidate<T> {
    score: T,
    rank: u32,
    row: u32,
}

impl<T: Scalar> PartialEq for Candidate<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Candidate<T> {}

impl<T: Scalar> PartialOrd for Candidate<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Candidate<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .partial_cmp(&other.score)
            .unwrap_or(Ordering::Equal)
            .then(other.rank.cmp(&self.rank))
    }
}

/// Keeps the best `k` candidates; the heap top is the worst kept one.
struct TopK<T> {
    k: usize,
    heap: BinaryHeap<std::cmp::Reverse<Candidate<T>>>,
}

impl<T: Scalar> TopK<T> {
    fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    fn offer(&mut self, c: Candidate<T>) {
        if self.heap.len() < self.k {
            self.heap.push(std::cmp::Reverse(c));
        } else if let Some(worst) = self.heap.peek() {
            if c > worst.0 {
                self.heap.pop();
                self.heap.push(std::cmp::Reverse(c));
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for c in other.heap {
            self.offer(c.0);
        }
        self
    }

    fn into_sorted(self) -> Vec<Candidate<T>> {
        let mut v: Vec<Candidate<T>> = self.heap.into_iter().map(|r| r.0).collect();
        v.sort_by(|a, b| b.cmp(a));
        v
    }
}

impl<T: Scalar> CosineIndex<T> {
    /// Takes ownership of `data` and normalizes its rows in place; zero rows
    /// stay zero and score 0 against every query.
    pub fn new(ids: Vec<String>, mut data: Matrix<T>) -> Result<Self, RetrievalError> {
        if ids.len() != data.rows() {
            return Err(RetrievalError::IdCount {
                ids: ids.len(),
                rows: data.rows(),
            });
        }
        let d = data.cols().max(1);
        data.as_mut_slice()
            .par_chunks_mut(d)
            .for_each(|row| {
                normalize_in_place(row);
            });
        let mut order: Vec<u32> = (0..ids.len() as u32).collect();
        order.sort_by(|&a, &b| ids[a as usize].cmp(&ids[b as usize]));
        let mut id_rank = vec![0u32; ids.len()];
        for (r, &i) in order.iter().enumerate() {
            id_rank[i as usize] = r as u32;
        }
        Ok(Self { ids, id_rank, data })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn normalized(&self) -> &Matrix<T> {
        &self.data
    }

    /// Exact top `k` rows by cosine similarity to `query`, best first, ties
    /// by record id ascending. Returns `(row, score)` pairs.
    pub fn topk(&self, query: &[T], k: usize) -> Result<Vec<(usize, T)>, RetrievalError> {
        if query.len() != self.dim() {
            return Err(RetrievalError::Dimension {
                expected: self.dim(),
                found: query.len(),
            });
        }
        if k == 0 || k > self.len() {
            return Err(RetrievalError::BadK { k, n: self.len() });
        }
        let mut q = query.to_vec();
        normalize_in_place(&mut q);
        let d = self.dim().max(1);
        let best = self
            .data
            .as_slice()
            .par_chunks(CHUNK_ROWS * d)
            .enumerate()
            .map(|(c, block)| {
                let mut top = TopK::new(k);
                for (j, row) in block.chunks_exact(d).enumerate() {
                    let i = c * CHUNK_ROWS + j;
                    top.offer(Candidate {
                        score: dot(row, &q),
                        rank: self.id_rank[i],
                        row: i as u32,
                    });
                }
                top
            })
            .reduce(|| TopK::new(k), TopK::merge);
        Ok(best.into_sorted().into_iter().map(|c| (c.row as usize, c.score)).collect())
    }
}

impl CosineIndex<f32> {
    pub fn from_embeddings(m: EmbeddingMatrix) -> Result<Self, RetrievalError> {
        Self::new(m.ids, m.data)
    }
}
