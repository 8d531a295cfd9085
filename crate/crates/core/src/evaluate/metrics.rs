use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{AnnotatedPair, Stratum};
use crate::cluster::NOISE;
use crate::{Error, Result};

/// How pairs of two noise points are scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierPolicy {
    /// Noise is one more cluster: two noise points are "same".
    #[default]
    TreatAsCluster,
    /// Pairs where both points are noise are left out.
    IgnoreDoubleNoise,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairConfusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl PairConfusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn label(labels: &HashMap<String, i32>, id: &str) -> Result<i32> {
    labels.get(id).copied().ok_or_else(|| Error::MissingLabel(id.to_string()))
}

pub fn pair_confusion(
    labels: &HashMap<String, i32>,
    pairs: &[AnnotatedPair],
    policy: OutlierPolicy,
) -> Result<PairConfusion> {
    let mut c = PairConfusion::default();
    for p in pairs {
        let (a, b) = (label(labels, &p.article_a)?, label(labels, &p.article_b)?);
        if a == NOISE && b == NOISE && policy == OutlierPolicy::IgnoreDoubleNoise {
            continue;
        }
        match (a == b, p.binary_label()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroF1 {
    pub score: f64,
    pub f1_same: f64,
    pub f1_diff: f64,
    /// The class had no support or no predictions, so its F1 is taken as 0.
    pub same_degenerate: bool,
    pub diff_degenerate: bool,
}

fn f1(hit: usize, false_pos: usize, false_neg: usize) -> f64 {
    let denom = 2 * hit + false_pos + false_neg;
    if denom == 0 {
        0.0
    } else {
        (2 * hit) as f64 / denom as f64
    }
}

/// Mean of the F1 of the "same" class and of the "different" class.
pub fn macro_f1(c: &PairConfusion) -> Result<MacroF1> {
    if c.total() == 0 {
        return Err(Error::NoPairs);
    }
    let f1_same = f1(c.tp, c.fp, c.fn_);
    let f1_diff = f1(c.tn, c.fn_, c.fp);
    Ok(MacroF1 {
        score: (f1_same + f1_diff) / 2.0,
        f1_same,
        f1_diff,
        same_degenerate: c.tp + c.fn_ == 0 || c.tp + c.fp == 0,
        diff_degenerate: c.tn + c.fp == 0 || c.tn + c.fn_ == 0,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub count: usize,
    /// Pair counts indexed by stratum score.
    pub by_stratum: [usize; 4],
}

impl Bucket {
    fn add(&mut self, s: Stratum) {
        self.count += 1;
        self.by_stratum[s as usize] += 1;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorPartition {
    /// At least one side is noise.
    pub outlier: Bucket,
    pub same_cluster: Bucket,
    pub different_cluster: Bucket,
}

pub fn error_partition(labels: &HashMap<String, i32>, pairs: &[AnnotatedPair]) -> Result<ErrorPartition> {
    let mut out = ErrorPartition::default();
    for p in pairs {
        let (a, b) = (label(labels, &p.article_a)?, label(labels, &p.article_b)?);
        let bucket = if a == NOISE || b == NOISE {
            &mut out.outlier
        } else if a == b {
            &mut out.same_cluster
        } else {
            &mut out.different_cluster
        };
        bucket.add(p.stratum);
    }
    Ok(out)
}
