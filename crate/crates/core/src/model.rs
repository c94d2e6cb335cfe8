//! The persisted cluster model: PCA, mixture and similarity statistics in
//! one JSON document. Every real number is written with 17 significant
//! digits so a reloaded model is bit-identical to the fitted one.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibrate::{assign_words, stats_from_labels, ClusterStats};
use crate::cluster::{ClusterModel, GmmConfig, GmmModel, GmmParams, PcaModel};
use crate::embeddings::{CoverageReport, EmbeddingTable};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug)]
pub struct FittedModel {
    pub cluster: ClusterModel,
    pub stats: ClusterStats,
}

#[derive(Serialize, Deserialize)]
struct StatsFile {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    pair_count: Vec<u64>,
    sigma_c: f64,
    valid: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    dim: usize,
    pca: PcaModel,
    gmm: GmmParams,
    stats: StatsFile,
    tool_version: String,
}

/// Writes `f64`s as `d.dddddddddddddddde±x`.
struct Sci17;

impl serde_json::ser::Formatter for Sci17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

impl FittedModel {
    /// Fits PCA and the mixture on the embedded lexicon words, then collects
    /// same-cluster similarity statistics over those words.
    pub fn fit(
        table: &EmbeddingTable,
        lexicon: &Lexicon,
        pca_dim: usize,
        gmm: &GmmConfig,
    ) -> Result<(Self, CoverageReport)> {
        let words: Vec<&str> = lexicon.words().filter(|w| table.contains(w)).collect();
        let missing: Vec<String> = lexicon
            .words()
            .filter(|w| !table.contains(w))
            .map(str::to_owned)
            .collect();
        let coverage = CoverageReport::new(lexicon.len(), missing);
        let cluster = ClusterModel::fit(table, &words, pca_dim, gmm)?;
        let labels = assign_words(table, lexicon, &cluster)?.labels;
        let stats = stats_from_labels(table, &labels, cluster.n_clusters())?;
        Ok((FittedModel { cluster, stats }, coverage))
    }

    pub fn to_json(&self) -> Vec<u8> {
        let file = ModelFile {
            dim: self.cluster.pca.dim(),
            pca: self.cluster.pca.clone(),
            gmm: self.cluster.gmm.params(),
            stats: StatsFile {
                mu: self.stats.mu.clone(),
                sigma: self.stats.sigma.clone(),
                pair_count: self.stats.pair_count.clone(),
                sigma_c: self.stats.sigma_c,
                valid: self.stats.validity(),
            },
            tool_version: TOOL_VERSION.to_owned(),
        };
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, Sci17);
        file.serialize(&mut ser).expect("model serializes to memory");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8], origin: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_slice(bytes).map_err(|e| Error::format(origin, e.line(), e.to_string()))?;
        let bad = |m: &str| Error::format(origin, 0, m.to_owned());
        if file.pca.dim() != file.dim {
            return Err(bad("pca mean length disagrees with dim"));
        }
        if file.pca.components.iter().any(|c| c.len() != file.dim) {
            return Err(bad("pca component length disagrees with dim"));
        }
        let gmm = GmmModel::from_params(&file.gmm).map_err(|e| bad(&e.to_string()))?;
        if gmm.dim() != file.pca.out_dim() {
            return Err(bad("mixture dimension disagrees with pca output dimension"));
        }
        let stats = ClusterStats {
            mu: file.stats.mu,
            sigma: file.stats.sigma,
            pair_count: file.stats.pair_count,
            sigma_c: file.stats.sigma_c,
        };
        stats.check_shape().map_err(|e| bad(&e.to_string()))?;
        if stats.n_clusters() != gmm.n_components() {
            return Err(bad("statistics and mixture disagree on the number of clusters"));
        }
        Ok(FittedModel {
            cluster: ClusterModel { pca: file.pca, gmm },
            stats,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&bytes, &path.display().to_string())
    }
}
