use super::SparseVector;
use crate::{Error, Result};

/// Hellinger distance between the L1-normalised forms of two non-negative
/// vectors: `‖√p − √q‖₂ / √2`. Empty vs. empty is 0, empty vs. non-empty 1.
pub fn hellinger(u: &SparseVector, v: &SparseVector) -> f64 {
    HellingerRoots::new(u).distance(&HellingerRoots::new(v))
}

/// Dense variant; rejects negative or non-finite components and mismatched
/// lengths.
pub fn hellinger_dense(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Invalid("vectors differ in length".into()));
    }
    let to_sparse = |x: &[f64]| {
        SparseVector::new((0..x.len() as u32).collect(), x.to_vec())
    };
    Ok(hellinger(&to_sparse(u)?, &to_sparse(v)?))
}

/// Square roots of an L1-normalised vector, precomputed so repeated distance
/// evaluations are a sparse merge.
#[derive(Debug, Clone)]
pub struct HellingerRoots {
    indices: Vec<u32>,
    roots: Vec<f64>,
}

impl HellingerRoots {
    pub fn new(v: &SparseVector) -> Self {
        let total = v.l1_norm();
        let roots = if total > 0.0 {
            v.values().iter().map(|x| (x / total).sqrt()).collect()
        } else {
            Vec::new()
        };
        Self {
            indices: if total > 0.0 { v.indices().to_vec() } else { Vec::new() },
            roots,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn distance(&self, other: &HellingerRoots) -> f64 {
        match (self.is_empty(), other.is_empty()) {
            (true, true) => return 0.0,
            (true, false) | (false, true) => return 1.0,
            _ => {}
        }
        let (a, b) = (&self.indices, &other.indices);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() || j < b.len() {
            let d = if j == b.len() || (i < a.len() && a[i] < b[j]) {
                i += 1;
                self.roots[i - 1]
            } else if i == a.len() || b[j] < a[i] {
                j += 1;
                other.roots[j - 1]
            } else {
                i += 1;
                j += 1;
                self.roots[i - 1] - other.roots[j - 1]
            };
            acc += d * d;
        }
        (acc / 2.0).sqrt().min(1.0)
    }
}
