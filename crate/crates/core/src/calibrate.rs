//! Per-cluster similarity statistics and the calibrated similarity.
//!
//! Raw cosine similarities have a different location and spread in each
//! cluster. A raw score `s` is z-scored against cluster `i`, mapped so that
//! `mu_i ± sigma_c·sigma_i` spans `[0, 1]`, and clipped:
//!
//! ```text
//! s_norm_i = clip(((s − mu_i)/sigma_i + sigma_c) / (2·sigma_c), 0, 1)
//! s_final  = clip(Σ_i p_i · s_norm_i, 0, 1)
//! ```
//!
//! with `p` the candidate word's posterior over clusters and `sigma_c = 3`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterModel;
use crate::embeddings::{cosine_similarity, CoverageReport, EmbeddingTable};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;

/// Number of standard deviations mapped onto each half of `[0, 1]`.
pub const SIGMA_C: f64 = 3.0;

/// Posterior mass below which a cluster with invalid statistics is ignored.
pub const NEGLIGIBLE_POSTERIOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub mu: Vec<f64>,
    /// Population standard deviation.
    pub sigma: Vec<f64>,
    pub pair_count: Vec<u64>,
    pub sigma_c: f64,
}

impl ClusterStats {
    pub fn n_clusters(&self) -> usize {
        self.mu.len()
    }

    /// Usable for normalization: at least one pair and a positive spread.
    pub fn is_valid(&self, cluster: usize) -> bool {
        self.pair_count.get(cluster).is_some_and(|&c| c > 0)
            && self.sigma[cluster] > 0.0
            && self.sigma[cluster].is_finite()
            && self.mu[cluster].is_finite()
    }

    pub fn validity(&self) -> Vec<bool> {
        (0..self.n_clusters()).map(|i| self.is_valid(i)).collect()
    }

    pub fn check_shape(&self) -> Result<()> {
        let k = self.mu.len();
        if self.sigma.len() != k || self.pair_count.len() != k {
            return Err(Error::InvalidArgument("cluster statistics have inconsistent lengths".into()));
        }
        if !(self.sigma_c > 0.0) {
            return Err(Error::InvalidArgument("sigma_c must be positive".into()));
        }
        Ok(())
    }
}

/// Hard cluster labels for the lexicon words that have embeddings.
#[derive(Clone, Debug)]
pub struct WordAssignments {
    /// `(word, cluster)` in lexicon order.
    pub labels: Vec<(String, usize)>,
    pub coverage: CoverageReport,
}

pub fn assign_words(table: &EmbeddingTable, lexicon: &Lexicon, model: &ClusterModel) -> Result<WordAssignments> {
    let mut missing = Vec::new();
    let mut present = Vec::new();
    for w in lexicon.words() {
        match table.get(w) {
            Some(v) => present.push((w, v)),
            None => missing.push(w.to_owned()),
        }
    }
    let labels = present
        .par_iter()
        .map(|(w, v)| Ok(((*w).to_owned(), model.assign(v)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(WordAssignments {
        labels,
        coverage: CoverageReport::new(lexicon.len(), missing),
    })
}

/// Mean and population standard deviation of `cos(w, w')` over unordered
/// pairs of distinct lexicon words hard-assigned to the same cluster.
pub fn compute_cluster_stats(table: &EmbeddingTable, lexicon: &Lexicon, model: &ClusterModel) -> Result<ClusterStats> {
    let assigned = assign_words(table, lexicon, model)?;
    stats_from_labels(table, &assigned.labels, model.n_clusters())
}

/// Same-cluster pair statistics for explicit `(word, cluster)` labels.
pub fn stats_from_labels(table: &EmbeddingTable, labels: &[(String, usize)], k: usize) -> Result<ClusterStats> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (w, c) in labels {
        let row = table
            .row_of(w)
            .ok_or_else(|| Error::InvalidArgument(format!("`{w}` has no embedding")))?;
        members
            .get_mut(*c)
            .ok_or_else(|| Error::InvalidArgument(format!("cluster {c} out of range for {k} clusters")))?
            .push(row);
    }
    let mut stats = ClusterStats {
        mu: vec![0.0; k],
        sigma: vec![0.0; k],
        pair_count: vec![0; k],
        sigma_c: SIGMA_C,
    };
    for (c, rows) in members.iter().enumerate() {
        let n = rows.len();
        if n < 2 {
            if n == 1 {
                log::warn!("cluster {c} has a single member; its statistics are invalid");
            }
            continue;
        }
        let pairs = (n * (n - 1) / 2) as u64;
        // row sums are computed in parallel but added in row order
        let row_sum = |f: &(dyn Fn(f64) -> f64 + Sync)| -> f64 {
            let partial: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| {
                    rows[i + 1..]
                        .iter()
                        .map(|&j| f(table.cosine_rows(rows[i], j)))
                        .sum::<f64>()
                })
                .collect();
            partial.iter().sum()
        };
        let mu = row_sum(&|s| s) / pairs as f64;
        let var = row_sum(&|s| (s - mu) * (s - mu)) / pairs as f64;
        stats.mu[c] = mu;
        stats.sigma[c] = var.sqrt();
        stats.pair_count[c] = pairs;
        if !stats.is_valid(c) {
            log::warn!("cluster {c} has zero similarity spread; its statistics are invalid");
        }
    }
    Ok(stats)
}

/// `clip(((s − mu_i)/sigma_i + sigma_c) / (2·sigma_c), 0, 1)`.
pub fn normalize_similarity(s: f64, cluster: usize, stats: &ClusterStats) -> Result<f64> {
    if !stats.is_valid(cluster) {
        return Err(Error::InvalidClusterStats { cluster });
    }
    Ok(normalize_unchecked(s, stats.mu[cluster], stats.sigma[cluster], stats.sigma_c))
}

fn normalize_unchecked(s: f64, mu: f64, sigma: f64, sigma_c: f64) -> f64 {
    (((s - mu) / sigma + sigma_c) / (2.0 * sigma_c)).clamp(0.0, 1.0)
}

/// Posterior-weighted normalized similarity for a raw score `s`. Clusters
/// with invalid statistics are skipped when their weight is at most
/// [`NEGLIGIBLE_POSTERIOR`] and are an error otherwise.
pub fn weighted_similarity(s: f64, posterior: &[f64], stats: &ClusterStats) -> Result<f64> {
    if posterior.len() != stats.n_clusters() {
        return Err(Error::DimensionMismatch {
            expected: stats.n_clusters(),
            found: posterior.len(),
        });
    }
    let mut acc = 0.0;
    for (i, &p) in posterior.iter().enumerate() {
        if !stats.is_valid(i) {
            if p > NEGLIGIBLE_POSTERIOR {
                return Err(Error::InvalidClusterStats { cluster: i });
            }
            continue;
        }
        acc += p * normalize_unchecked(s, stats.mu[i], stats.sigma[i], stats.sigma_c);
    }
    Ok(acc.clamp(0.0, 1.0))
}

/// Calibrated similarity between a candidate and a lexicon word, weighted by
/// the candidate's cluster posterior.
pub fn calibrated_similarity(
    candidate: &[f64],
    lexicon_word: &[f64],
    model: &ClusterModel,
    stats: &ClusterStats,
) -> Result<f64> {
    let s = cosine_similarity(candidate, lexicon_word)?;
    let p = model.posterior(candidate)?;
    weighted_similarity(s, &p, stats)
}
