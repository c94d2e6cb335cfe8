//! Immutable word-embedding tables in word2vec text format.
//!
//! ```text
//! # optional comment lines before the header
//! 2 3
//! cat 0.1 0.2 0.3
//! dog 0.2 0.1 0.4
//! ```

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::emotion::{NUM_EMOTIONS, EMOTIONS};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;

#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    /// Squared L2 norm per row.
    norms: Vec<f64>,
}

impl EmbeddingTable {
    /// Builds a table from `(word, vector)` pairs. Later duplicates replace
    /// earlier ones.
    pub fn from_rows<I, S>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dim must be positive".into()));
        }
        let mut table = EmbeddingTable {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            norms: Vec::new(),
        };
        for (word, vector) in rows {
            table.push(word.into(), &vector).map_err(|e| match e {
                Error::Format { message, .. } => Error::InvalidArgument(message),
                other => other,
            })?;
        }
        Ok(table)
    }

    fn push(&mut self, word: String, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::format("", 0, format!("non-finite component in `{word}`")));
        }
        let n = norm_sq(vector);
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        match self.index.get(&word) {
            Some(&row) => {
                log::warn!("duplicate embedding for `{word}`; keeping the last one");
                self.data[row * self.dim..(row + 1) * self.dim].copy_from_slice(vector);
                self.norms[row] = n;
            }
            None => {
                self.index.insert(word.clone(), self.words.len());
                self.words.push(word);
                self.data.extend_from_slice(vector);
                self.norms.push(n);
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        read_text(BufReader::new(file), &path.display().to_string())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Words in file order (first occurrence).
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&row| self.row(row))
    }

    pub(crate) fn row_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub(crate) fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    /// Cosine similarity between two stored rows, using cached norms.
    pub(crate) fn cosine_rows(&self, a: usize, b: usize) -> f64 {
        cosine_with_norms(self.row(a), self.row(b), self.norms[a], self.norms[b])
    }
}

pub(crate) fn read_text<R: BufRead>(reader: R, origin: &str) -> Result<EmbeddingTable> {
    let mut lines = reader.lines().enumerate();
    let (count, dim, header_line) = loop {
        let Some((idx, line)) = lines.next() else {
            return Err(Error::format(origin, 0, "missing `<count> <dim>` header"));
        };
        let line = line.map_err(|e| Error::format(origin, idx + 1, e.to_string()))?;
        if line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |s: Option<&str>| s.and_then(|s| s.parse::<usize>().ok());
        match (parse(parts.next()), parse(parts.next()), parts.next()) {
            (Some(count), Some(dim), None) if dim > 0 => break (count, dim, idx + 1),
            _ => {
                return Err(Error::format(
                    origin,
                    idx + 1,
                    format!("bad header `{line}`, expected `<count> <dim>`"),
                ))
            }
        }
    };

    let mut table = EmbeddingTable::from_rows(dim, std::iter::empty::<(String, Vec<f64>)>())?;
    let mut rows = 0usize;
    let mut vector = Vec::with_capacity(dim);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::format(origin, lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(' ').filter(|p| !p.is_empty());
        let word = parts.next().unwrap_or_default().to_owned();
        vector.clear();
        for part in parts {
            let value: f64 = part
                .parse()
                .map_err(|_| Error::format(origin, lineno, format!("cannot parse `{part}` as a number")))?;
            vector.push(value);
        }
        table.push(word, &vector).map_err(|e| match e {
            Error::DimensionMismatch { expected, found } => Error::format(
                origin,
                lineno,
                format!("expected {expected} components, found {found}"),
            ),
            Error::ZeroNorm => Error::format(origin, lineno, "zero-norm vector"),
            Error::Format { message, .. } => Error::format(origin, lineno, message),
            other => other,
        })?;
        rows += 1;
    }
    if rows != count {
        return Err(Error::format(
            origin,
            header_line,
            format!("header declares {count} rows, file has {rows}"),
        ));
    }
    Ok(table)
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn norm_sq(u: &[f64]) -> f64 {
    dot(u, u)
}

/// Takes squared norms. `sqrt(a·b)` rather than `sqrt(a)·sqrt(b)` makes
/// `cos(v, v)` exactly 1.
fn cosine_with_norms(u: &[f64], v: &[f64], nu2: f64, nv2: f64) -> f64 {
    let prod = nu2 * nv2;
    let denom = if prod.is_normal() {
        prod.sqrt()
    } else {
        nu2.sqrt() * nv2.sqrt()
    };
    (dot(u, v) / denom).clamp(-1.0, 1.0)
}

/// `u·v / (‖u‖‖v‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let (nu, nv) = (norm_sq(u), norm_sq(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(cosine_with_norms(u, v, nu, nv))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub missing: Vec<String>,
    pub coverage_ratio: f64,
}

impl CoverageReport {
    pub fn new(total: usize, missing: Vec<String>) -> Self {
        let coverage_ratio = if total == 0 {
            1.0
        } else {
            (total - missing.len()) as f64 / total as f64
        };
        CoverageReport {
            missing,
            coverage_ratio,
        }
    }
}

/// Per-emotion counts of pairwise cosine similarities, with uniform bins over `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityHistogram {
    pub bins: usize,
    pub counts: [Vec<u64>; NUM_EMOTIONS],
    pub coverage: CoverageReport,
}

impl SimilarityHistogram {
    pub fn bin_edges(&self) -> Vec<f64> {
        (0..=self.bins)
            .map(|i| -1.0 + 2.0 * i as f64 / self.bins as f64)
            .collect()
    }

    pub fn total(&self, emotion_index: usize) -> u64 {
        self.counts[emotion_index].iter().sum()
    }
}

fn bin_of(s: f64, bins: usize) -> usize {
    let b = ((s + 1.0) / 2.0 * bins as f64).floor() as usize;
    b.min(bins - 1)
}

/// For each emotion, histogram of `cos(w, w')` over lexicon words `w` with
/// that emotion against every lexicon word `w'`. Words without an embedding
/// are reported and excluded.
pub fn similarity_histogram(
    table: &EmbeddingTable,
    lexicon: &Lexicon,
    bins: usize,
    include_self: bool,
) -> Result<SimilarityHistogram> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be positive".into()));
    }
    let mut missing = Vec::new();
    let mut present = Vec::new();
    for entry in lexicon.iter() {
        match table.row_of(entry.word()) {
            Some(row) => present.push((row, entry.emotions())),
            None => missing.push(entry.word().to_owned()),
        }
    }
    let coverage = CoverageReport::new(lexicon.len(), missing);

    // one row of bin counts per source word, merged in word order
    let per_word: Vec<Vec<u64>> = present
        .par_iter()
        .enumerate()
        .map(|(i, &(row, _))| {
            let mut counts = vec![0u64; bins];
            for (j, &(other, _)) in present.iter().enumerate() {
                if i == j && !include_self {
                    continue;
                }
                counts[bin_of(table.cosine_rows(row, other), bins)] += 1;
            }
            counts
        })
        .collect();

    let mut counts: [Vec<u64>; NUM_EMOTIONS] = std::array::from_fn(|_| vec![0u64; bins]);
    for ((_, emotions), word_counts) in present.iter().zip(&per_word) {
        for e in EMOTIONS.iter().filter(|e| emotions.get(**e)) {
            for (acc, c) in counts[e.index()].iter_mut().zip(word_counts) {
                *acc += c;
            }
        }
    }
    Ok(SimilarityHistogram {
        bins,
        counts,
        coverage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emotion::{Emotion, EmotionVector};
    use crate::lexicon::LexiconEntry;

    #[test]
    fn parses_header_and_rows() {
        let t = read_text("# note\n2 3\na 1 0 0\nb 0 1.5 -2\n".as_bytes(), "t").unwrap();
        assert_eq!((t.len(), t.dim()), (2, 3));
        assert_eq!(t.get("b").unwrap(), &[0.0, 1.5, -2.0]);
    }

    #[test]
    fn rejects_bad_rows_with_line_numbers() {
        let cases = [
            ("2 3\na 1 0 0\nb 1 0\n", 3),
            ("1 2\na 0 0\n", 2),
            ("1 2\na NaN 1\n", 2),
            ("1 2\na inf 1\n", 2),
            ("1 2\na x 1\n", 2),
            ("3 2\na 1 1\n", 1),
        ];
        for (text, line) in cases {
            match read_text(text.as_bytes(), "t") {
                Err(Error::Format { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(read_text("".as_bytes(), "t").is_err());
        assert!(read_text("2\n".as_bytes(), "t").is_err());
    }

    #[test]
    fn duplicate_words_last_wins() {
        let t = read_text("2 2\na 1 0\na 0 1\n".as_bytes(), "t").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("a").unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn cosine_reference_values() {
        let v = [0.3, -1.2, 4.0];
        assert_eq!(cosine_similarity(&v, &v).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine_similarity(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(cosine_similarity(&[0.0, 0.0], &[1.0, 2.0]), Err(Error::ZeroNorm)));
    }

    fn one_word() -> (EmbeddingTable, Lexicon) {
        let table = EmbeddingTable::from_rows(2, [("a", vec![1.0, 2.0])]).unwrap();
        let lex = Lexicon::from_entries([LexiconEntry::original("a", EmotionVector::EMPTY.with(Emotion::Joy)).unwrap()]).unwrap();
        (table, lex)
    }

    #[test]
    fn histogram_single_word() {
        let (table, lex) = one_word();
        let h = similarity_histogram(&table, &lex, 10, true).unwrap();
        assert_eq!(h.counts[Emotion::Joy.index()][9], 1);
        assert_eq!(h.total(Emotion::Joy.index()), 1);
        assert_eq!(h.total(Emotion::Fear.index()), 0);

        let h = similarity_histogram(&table, &lex, 10, false).unwrap();
        assert_eq!(h.total(Emotion::Joy.index()), 0);
    }

    #[test]
    fn histogram_reports_missing_words() {
        let (table, _) = one_word();
        let lex = Lexicon::from_entries([
            LexiconEntry::original("a", EmotionVector::EMPTY.with(Emotion::Joy)).unwrap(),
            LexiconEntry::original("zz", EmotionVector::EMPTY.with(Emotion::Joy)).unwrap(),
        ])
        .unwrap();
        let h = similarity_histogram(&table, &lex, 4, true).unwrap();
        assert_eq!(h.coverage.missing, vec!["zz".to_owned()]);
        assert_eq!(h.coverage.coverage_ratio, 0.5);
        assert_eq!(h.total(Emotion::Joy.index()), 1);
    }

    #[test]
    fn bin_edges_are_uniform() {
        assert_eq!(bin_of(-1.0, 4), 0);
        assert_eq!(bin_of(1.0, 4), 3);
        assert_eq!(bin_of(0.0, 4), 2);
        let (table, lex) = one_word();
        let h = similarity_histogram(&table, &lex, 4, true).unwrap();
        assert_eq!(h.bin_edges(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }
}
