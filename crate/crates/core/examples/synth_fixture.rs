//! Regenerates the shipped CLI fixtures.
//!
//! ```text
//! cargo run -p elex-core --example synth_fixture -- crates/cli/tests/fixtures
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIM: usize = 16;
const SEED: u64 = 20240917;

const LEXICON: [&str; 30] = [
    "abandon", "anger", "anxious", "betray", "bitter", "brave", "calm", "cheer", "cruel", "dread", "eager", "faith",
    "fury", "glad", "grief", "hope", "horror", "joyful", "lonely", "loyal", "mourn", "panic", "peace", "praise",
    "rage", "relief", "shock", "sorrow", "trust", "wonder",
];

const CANDIDATES: [&str; 20] = [
    "afraid", "alarm", "bliss", "cherish", "delight", "despair", "disgust", "fear", "gloom", "grudge", "hostile",
    "jolly", "misery", "outrage", "proud", "scared", "serene", "startle", "thrill", "weep",
];

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/cli/tests/fixtures".into()));
    fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    // three well-separated directions sharing a common offset
    let centers: Vec<Vec<f64>> = (0..3)
        .map(|c| {
            (0..DIM)
                .map(|d| if d % 3 == c { 1.5 } else { 0.0 } + 0.5)
                .collect()
        })
        .collect();

    let mut tsv = String::new();
    let mut emb = String::new();
    let words: Vec<&str> = LEXICON.iter().chain(CANDIDATES.iter()).copied().collect();
    writeln!(emb, "# synthetic 3-cluster fixture, seed {SEED}").unwrap();
    writeln!(emb, "{} {DIM}", words.len()).unwrap();
    for (i, w) in words.iter().enumerate() {
        let c = &centers[i % 3];
        write!(emb, "{w}").unwrap();
        for x in c {
            write!(emb, " {:.6}", x + 0.25 * normal(&mut rng)).unwrap();
        }
        emb.push('\n');
    }
    let emotions = [
        "anger", "anticipation", "disgust", "fear", "joy", "negative", "positive", "sadness", "surprise", "trust",
    ];
    for (i, w) in LEXICON.iter().enumerate() {
        for e in emotions {
            // each word carries one to three emotions, biased by cluster
            let p = if ["anger", "fear", "sadness"][i % 3] == e { 0.8 } else { 0.15 };
            let flag = u8::from(rng.random::<f64>() < p);
            writeln!(tsv, "{w}\t{e}\t{flag}").unwrap();
        }
    }
    // a seed word without an embedding
    for e in emotions {
        writeln!(tsv, "quixotic\t{e}\t{}", u8::from(e == "surprise")).unwrap();
    }
    fs::write(dir.join("lexicon.tsv"), tsv).unwrap();
    fs::write(dir.join("embeddings.txt"), emb).unwrap();

    let mut cand = String::from("# expansion candidates\n");
    for w in CANDIDATES {
        writeln!(cand, "{w}").unwrap();
    }
    cand.push_str("anger\nunseen\n");
    fs::write(dir.join("candidates.txt"), cand).unwrap();

    let topics = ["Nuclear power", "School uniforms", "Tuition fees"];
    let mut corpus = String::new();
    for i in 0..12 {
        let text: Vec<&str> = (0..6 + i % 5).map(|_| words[rng.random_range(0..words.len())]).collect();
        let line = serde_json::json!({
            "id": format!("s{i:02}"),
            "topic": topics[i % 3],
            "text": format!("We {}, and the {}!", text[..3].join(" "), text[3..].join(" ")),
            "stance": if i % 2 == 0 { "For" } else { "Against" },
            "source": "amt",
        });
        writeln!(corpus, "{line}").unwrap();
    }
    fs::write(dir.join("corpus.jsonl"), corpus).unwrap();
}
