//! Threshold-based expansion, the threshold sweep and its diagnostics.
//!
//! For every candidate word outside the seed lexicon and every emotion, the
//! nearest seed word carrying that emotion is the one with the highest
//! calibrated similarity (ties go to the lexicographically smaller word). The
//! emotion is assigned when that similarity is strictly above `theta`.
//!
//! The nearest-word search does not depend on `theta`, so it is computed once
//! into a [`MatchTable`] and reused for every point of a sweep.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::calibrate::{weighted_similarity, ClusterStats};
use crate::cluster::ClusterModel;
use crate::embeddings::{CoverageReport, EmbeddingTable};
use crate::emotion::{Emotion, EmotionVector, EMOTIONS, NUM_EMOTIONS};
use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, LexiconEntry, Support};

pub const DEFAULT_THETA: f64 = 0.4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestMatch {
    pub nearest: String,
    pub s_final: f64,
}

/// Nearest seed word per emotion for every usable candidate.
#[derive(Clone, Debug)]
pub struct MatchTable {
    /// Sorted by candidate word.
    pub rows: Vec<(String, [Option<BestMatch>; NUM_EMOTIONS])>,
    /// Candidates without an embedding.
    pub coverage: CoverageReport,
    /// Candidates skipped because they are already in the seed lexicon.
    pub skipped_seed_words: Vec<String>,
    /// Emotions no embedded seed word carries.
    pub unexpandable: Vec<Emotion>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AssignmentKey {
    pub word: String,
    pub emotion: Emotion,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assignment {
    pub word: String,
    pub emotion: Emotion,
    pub nearest: String,
    pub s_final: f64,
}

impl Assignment {
    pub fn key(&self) -> AssignmentKey {
        AssignmentKey {
            word: self.word.clone(),
            emotion: self.emotion,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EmotionDiagnostics {
    pub count: u64,
    /// Entropy (bits) of the fraction of expanded words carrying the emotion.
    pub binary_entropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdDiagnostics {
    pub theta: f64,
    pub total_new_assignments: u64,
    pub unique_words_expanded: u64,
    pub unique_patterns: u64,
    /// Mean pairwise Hamming distance between expanded words (0..=8 bits).
    pub avg_hamming: f64,
    pub avg_hamming_norm: f64,
    /// Entropy (bits) of the assignment distribution over the eight emotions.
    pub overall_entropy: f64,
    pub per_emotion: BTreeMap<Emotion, EmotionDiagnostics>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionResult {
    pub theta: f64,
    /// Sorted by word, then emotion.
    pub assignments: Vec<Assignment>,
    #[serde(skip)]
    pub expanded_lexicon: Lexicon,
    pub diagnostics: ThresholdDiagnostics,
    pub coverage: CoverageReport,
    pub skipped_seed_words: Vec<String>,
    pub unexpandable: Vec<Emotion>,
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("theta must lie in (0, 1), got {theta}")))
    }
}

/// Finds, for each candidate and emotion, the seed word with the highest
/// calibrated similarity.
pub fn best_matches(
    candidates: &[String],
    seed: &Lexicon,
    table: &EmbeddingTable,
    model: &ClusterModel,
    stats: &ClusterStats,
) -> Result<MatchTable> {
    stats.check_shape()?;
    if stats.n_clusters() != model.n_clusters() {
        return Err(Error::DimensionMismatch {
            expected: model.n_clusters(),
            found: stats.n_clusters(),
        });
    }

    let mut targets = Vec::new();
    for entry in seed.iter() {
        match table.row_of(entry.word()) {
            Some(row) if !entry.emotions().is_empty() => targets.push((entry.word(), row, entry.emotions())),
            Some(_) => {}
            None => log::warn!("seed word `{}` has no embedding and cannot be a neighbour", entry.word()),
        }
    }
    let covered = targets.iter().fold(EmotionVector::EMPTY, |acc, t| acc.union(t.2));
    let unexpandable: Vec<Emotion> = EMOTIONS.into_iter().filter(|e| !covered.get(*e)).collect();
    for e in &unexpandable {
        log::warn!("no embedded seed word carries `{e}`; it cannot be expanded");
    }

    let unique: BTreeSet<&str> = candidates.iter().map(String::as_str).collect();
    let mut missing = Vec::new();
    let mut skipped = Vec::new();
    let mut usable = Vec::new();
    for c in unique.iter().copied() {
        if seed.contains(c) {
            skipped.push(c.to_owned());
        } else if let Some(row) = table.row_of(c) {
            usable.push((c, row));
        } else {
            missing.push(c.to_owned());
        }
    }
    let coverage = CoverageReport::new(unique.len() - skipped.len(), missing);

    let rows = usable
        .par_iter()
        .map(|&(word, row)| {
            let posterior = model.posterior(table.row(row))?;
            let mut best: [Option<BestMatch>; NUM_EMOTIONS] = Default::default();
            for &(target, trow, emotions) in &targets {
                let s = table.cosine_rows(row, trow);
                let s_final = weighted_similarity(s, &posterior, stats)?;
                for e in emotions.iter() {
                    let slot = &mut best[e.index()];
                    // targets are visited in word order, so keeping the first
                    // maximum resolves ties to the smaller word
                    if slot.as_ref().is_none_or(|b| s_final > b.s_final) {
                        *slot = Some(BestMatch {
                            nearest: target.to_owned(),
                            s_final,
                        });
                    }
                }
            }
            Ok((word.to_owned(), best))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(MatchTable {
        rows,
        coverage,
        skipped_seed_words: skipped,
        unexpandable,
    })
}

impl MatchTable {
    /// Assignments with `s_final > theta`, sorted by word then emotion.
    pub fn assignments(&self, theta: f64) -> Vec<Assignment> {
        let mut out = Vec::new();
        for (word, best) in &self.rows {
            for (e, m) in EMOTIONS.iter().zip(best) {
                if let Some(m) = m.as_ref().filter(|m| m.s_final > theta) {
                    out.push(Assignment {
                        word: word.clone(),
                        emotion: *e,
                        nearest: m.nearest.clone(),
                        s_final: m.s_final,
                    });
                }
            }
        }
        out
    }

    pub fn expand(&self, theta: f64) -> Result<ExpansionResult> {
        check_theta(theta)?;
        let assignments = self.assignments(theta);
        let expanded_lexicon = build_lexicon(&assignments)?;
        let diagnostics = diagnostics_for(theta, &assignments);
        Ok(ExpansionResult {
            theta,
            assignments,
            expanded_lexicon,
            diagnostics,
            coverage: self.coverage.clone(),
            skipped_seed_words: self.skipped_seed_words.clone(),
            unexpandable: self.unexpandable.clone(),
        })
    }

    pub fn sweep(&self, grid: &ThetaGrid) -> Vec<ThresholdDiagnostics> {
        grid.values()
            .iter()
            .map(|&theta| diagnostics_for(theta, &self.assignments(theta)))
            .collect()
    }
}

fn build_lexicon(assignments: &[Assignment]) -> Result<Lexicon> {
    let mut by_word: BTreeMap<&str, BTreeMap<Emotion, Support>> = BTreeMap::new();
    for a in assignments {
        by_word.entry(&a.word).or_default().insert(
            a.emotion,
            Support {
                nearest: a.nearest.clone(),
                sim: a.s_final,
            },
        );
    }
    Lexicon::from_entries(
        by_word
            .into_iter()
            .map(|(w, support)| LexiconEntry::expanded(w, support))
            .collect::<Result<Vec<_>>>()?,
    )
}

pub fn expand_at(
    candidates: &[String],
    seed: &Lexicon,
    table: &EmbeddingTable,
    model: &ClusterModel,
    stats: &ClusterStats,
    theta: f64,
) -> Result<ExpansionResult> {
    check_theta(theta)?;
    best_matches(candidates, seed, table, model, stats)?.expand(theta)
}

/// Threshold grid `min + k·step`, built on an integer lattice of 1e-9 so
/// that no floating-point drift accumulates along the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaGrid {
    values: Vec<f64>,
}

const GRID_SCALE: f64 = 1e9;

impl ThetaGrid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min > 0.0 && min <= max && max < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "theta grid needs 0 < min <= max < 1, got min {min}, max {max}"
            )));
        }
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!("theta step must be positive, got {step}")));
        }
        let lo = (min * GRID_SCALE).round() as i64;
        let hi = (max * GRID_SCALE).round() as i64;
        let st = (step * GRID_SCALE).round() as i64;
        if st == 0 {
            return Err(Error::InvalidArgument(format!("theta step {step} is below grid resolution")));
        }
        let values: Vec<f64> = (0..)
            .map(|k| lo + k * st)
            .take_while(|&u| u <= hi)
            .map(|u| u as f64 / GRID_SCALE)
            .collect();
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty theta grid".into()));
        }
        Ok(ThetaGrid { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Default for ThetaGrid {
    fn default() -> Self {
        ThetaGrid::new(0.05, 0.95, 0.05).expect("default grid is valid")
    }
}

pub fn sweep(
    candidates: &[String],
    seed: &Lexicon,
    table: &EmbeddingTable,
    model: &ClusterModel,
    stats: &ClusterStats,
    grid: &ThetaGrid,
) -> Result<Vec<ThresholdDiagnostics>> {
    Ok(best_matches(candidates, seed, table, model, stats)?.sweep(grid))
}

pub fn diagnostics(result: &ExpansionResult) -> ThresholdDiagnostics {
    diagnostics_for(result.theta, &result.assignments)
}

fn entropy_bits(probs: impl IntoIterator<Item = f64>) -> f64 {
    let h: f64 = probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    // -0.0 when every term vanishes
    h.max(0.0)
}

/// Diagnostics over an assignment set. Assignments must be unique per
/// (word, emotion).
pub fn diagnostics_for(theta: f64, assignments: &[Assignment]) -> ThresholdDiagnostics {
    let mut patterns: BTreeMap<&str, EmotionVector> = BTreeMap::new();
    let mut counts = [0u64; NUM_EMOTIONS];
    for a in assignments {
        let v = patterns.entry(&a.word).or_default();
        *v = v.with(a.emotion);
        counts[a.emotion.index()] += 1;
    }
    let total: u64 = counts.iter().sum();
    let words = patterns.len() as u64;
    let vectors: Vec<EmotionVector> = patterns.values().copied().collect();
    let unique_patterns = vectors.iter().collect::<BTreeSet<_>>().len() as u64;

    let avg_hamming = if vectors.len() < 2 {
        0.0
    } else {
        let mut sum = 0u64;
        for (i, a) in vectors.iter().enumerate() {
            for b in &vectors[i + 1..] {
                sum += u64::from(a.hamming(*b));
            }
        }
        let pairs = (vectors.len() * (vectors.len() - 1) / 2) as f64;
        sum as f64 / pairs
    };

    let overall_entropy = if total == 0 {
        0.0
    } else {
        entropy_bits(counts.iter().map(|&c| c as f64 / total as f64))
    };

    let per_emotion = EMOTIONS
        .iter()
        .map(|e| {
            let count = counts[e.index()];
            let binary_entropy = if words == 0 {
                0.0
            } else {
                let r = count as f64 / words as f64;
                entropy_bits([r, 1.0 - r])
            };
            (*e, EmotionDiagnostics { count, binary_entropy })
        })
        .collect();

    ThresholdDiagnostics {
        theta,
        total_new_assignments: total,
        unique_words_expanded: words,
        unique_patterns,
        avg_hamming,
        avg_hamming_norm: avg_hamming / NUM_EMOTIONS as f64,
        overall_entropy,
        per_emotion,
    }
}

pub fn sweep_csv_header() -> String {
    let mut cols = vec![
        "theta".to_owned(),
        "total_new_assignments".to_owned(),
        "unique_words_expanded".to_owned(),
        "unique_patterns".to_owned(),
        "avg_hamming".to_owned(),
        "avg_hamming_norm".to_owned(),
        "overall_entropy_bits".to_owned(),
    ];
    for e in EMOTIONS {
        cols.push(format!("count_{e}"));
        cols.push(format!("entropy_{e}"));
    }
    cols.join(",")
}

pub fn write_sweep_csv<W: Write>(rows: &[ThresholdDiagnostics], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{}", sweep_csv_header())?;
    for r in rows {
        write!(
            out,
            "{},{},{},{},{},{},{}",
            r.theta,
            r.total_new_assignments,
            r.unique_words_expanded,
            r.unique_patterns,
            r.avg_hamming,
            r.avg_hamming_norm,
            r.overall_entropy
        )?;
        for e in EMOTIONS {
            let d = r.per_emotion[&e];
            write!(out, ",{},{}", d.count, d.binary_entropy)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
