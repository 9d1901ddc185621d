//! Best-first enumeration of tensor-product eigenvalues.
//!
//! For a base sequence `λ_1 ≥ λ_2 ≥ ...` the product eigenvalues
//! `λ_{j_1}···λ_{j_d}` are listed in non-increasing order by expanding the
//! multi-index lattice from `(1,…,1)` with a max-heap. Incrementing any
//! coordinate never increases the product, so every popped entry is the
//! largest one not yet emitted. Ties are broken by ascending multi-index.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    value: f64,
    index: Vec<u32>,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Returns the first `count` multi-indices (1-based per coordinate) and their
/// product eigenvalues, sorted non-increasingly.
///
/// `base` must return the non-increasing base eigenvalue for a 1-based index.
pub fn enumerate(
    base: impl Fn(usize) -> f64,
    dim: usize,
    count: usize,
) -> (Vec<Vec<u32>>, Vec<f64>) {
    let mut indices = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    if count == 0 || dim == 0 {
        return (indices, values);
    }
    let product = |idx: &[u32]| idx.iter().map(|&j| base(j as usize)).product::<f64>();

    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    let start = vec![1u32; dim];
    seen.insert(start.clone());
    heap.push(Candidate {
        value: product(&start),
        index: start,
    });

    while let Some(Candidate { value, index }) = heap.pop() {
        for l in 0..dim {
            let mut next = index.clone();
            next[l] += 1;
            if seen.insert(next.clone()) {
                heap.push(Candidate {
                    value: product(&next),
                    index: next,
                });
            }
        }
        indices.push(index);
        values.push(value);
        if values.len() == count {
            break;
        }
    }
    (indices, values)
}
