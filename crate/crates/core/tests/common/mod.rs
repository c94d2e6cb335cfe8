#![allow(dead_code)]

use std::io::Write;

use elex_core::lexicon::{Lexicon, LexiconEntry};
use elex_core::EmotionVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Isotropic Gaussian blobs, points emitted blob by blob.
pub fn blobs(centers: &[Vec<f64>], sizes: &[usize], sigma: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for (c, &n) in centers.iter().zip(sizes) {
        for _ in 0..n {
            out.push(c.iter().map(|x| x + sigma * normal(&mut r)).collect());
        }
    }
    out
}

pub fn lexicon(entries: &[(&str, u8)]) -> Lexicon {
    Lexicon::from_entries(
        entries
            .iter()
            .map(|(w, bits)| LexiconEntry::original(w, EmotionVector::from_bits(*bits)).unwrap()),
    )
    .unwrap()
}

pub fn temp_file(contents: &str, suffix: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f.flush().unwrap();
    f
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Plain textbook cosine, kept separate from the library's implementation.
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    dot(u, v) / (dot(u, u).sqrt() * dot(v, v).sqrt())
}

pub struct ExpansionFixture {
    pub table: elex_core::embeddings::EmbeddingTable,
    pub seed: Lexicon,
    pub candidates: Vec<String>,
    pub model: elex_core::FittedModel,
}

/// Seed words and candidates drawn around three directions in `dim` dimensions.
pub fn expansion_fixture(seed: u64, n_seed: usize, n_cand: usize, dim: usize) -> ExpansionFixture {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut candidates = Vec::new();
    for i in 0..n_seed + n_cand {
        let c = i % 3;
        let v: Vec<f64> = (0..dim)
            .map(|d| f64::from(u8::from(d % 3 == c)) + 0.35 * normal(&mut r))
            .collect();
        let word = if i < n_seed { format!("s{i:02}") } else { format!("c{i:02}") };
        rows.push((word.clone(), v));
        if i < n_seed {
            let bits: u8 = r.random::<u8>() & r.random::<u8>();
            entries.push((word, bits | (1 << (i % 8))));
        } else {
            candidates.push(word);
        }
    }
    let table = elex_core::embeddings::EmbeddingTable::from_rows(dim, rows).unwrap();
    let refs: Vec<(&str, u8)> = entries.iter().map(|(w, b)| (w.as_str(), *b)).collect();
    let seed_lex = lexicon(&refs);
    let config = elex_core::cluster::GmmConfig {
        seed,
        ..Default::default()
    };
    let (model, _) = elex_core::FittedModel::fit(&table, &seed_lex, 3, &config).unwrap();
    ExpansionFixture {
        table,
        seed: seed_lex,
        candidates,
        model,
    }
}
