use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::characterise::LocationProfile;
use crate::{Error, Result};

/// 1-based ranks with ties given the mean of the ranks they span.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation. `None` when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterCorrelation {
    pub cluster: usize,
    pub rho: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub clusters: Vec<ClusterCorrelation>,
    pub n_zones: usize,
    /// Profiled zones left out because their statistic is missing or null.
    pub n_suppressed: usize,
}

impl CorrelationReport {
    /// Clusters with a defined ρ, strongest positive first.
    pub fn ranked(&self) -> Vec<ClusterCorrelation> {
        let mut v: Vec<_> = self.clusters.iter().filter(|c| c.rho.is_some()).copied().collect();
        v.sort_by(|a, b| b.rho.unwrap().total_cmp(&a.rho.unwrap()).then(a.cluster.cmp(&b.cluster)));
        v
    }

    pub fn mean_rho(&self) -> Option<f64> {
        let r: Vec<f64> = self.clusters.iter().filter_map(|c| c.rho).collect();
        (!r.is_empty()).then(|| r.iter().sum::<f64>() / r.len() as f64)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cluster_id", "rho", "n"])?;
        for c in &self.clusters {
            let rho = c.rho.map(|r| r.to_string()).unwrap_or_default();
            w.write_record([c.cluster.to_string(), rho, c.n.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("correlation csv", e))?;
        Ok(())
    }
}

/// ρ between each cluster's zone mass and a zone statistic. Zones without a
/// profile or with a null statistic are skipped.
pub fn spearman_per_cluster(
    zone_profiles: &[LocationProfile],
    statistic: &BTreeMap<String, Option<f64>>,
) -> Result<CorrelationReport> {
    let mut usable = Vec::new();
    let mut n_suppressed = 0;
    for p in zone_profiles {
        match statistic.get(&p.location_id).copied().flatten() {
            Some(s) => usable.push((p, s)),
            None => n_suppressed += 1,
        }
    }
    if usable.len() < 3 {
        return Err(Error::TooFewZones(usable.len()));
    }
    let k = usable[0].0.n_clusters();
    if usable.iter().any(|(p, _)| p.n_clusters() != k) {
        return Err(Error::Invalid("zone profiles disagree on the number of clusters".into()));
    }
    let stat: Vec<f64> = usable.iter().map(|(_, s)| *s).collect();
    let clusters = (0..k)
        .map(|c| {
            let scores: Vec<f64> = usable.iter().map(|(p, _)| p.probs[c]).collect();
            ClusterCorrelation { cluster: c, rho: spearman(&scores, &stat), n: usable.len() }
        })
        .collect();
    Ok(CorrelationReport { clusters, n_zones: usable.len(), n_suppressed })
}
