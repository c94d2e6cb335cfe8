#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(name: &str) -> String {
    fixtures().join(name).display().to_string()
}

/// Runs `elex` inside `dir` with the given arguments.
pub fn elex(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_elex"));
    cmd.current_dir(dir).args(args).env_remove("ELEX_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("elex runs")
}

pub fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// cluster -> expand -> sweep -> features with relative output paths, then
/// returns every file the run produced.
pub fn pipeline(dir: &Path, extra: &[&str], env: &[(&str, &str)]) -> BTreeMap<String, Vec<u8>> {
    let lex = fixture("lexicon.tsv");
    let emb = fixture("embeddings.txt");
    let cand = fixture("candidates.txt");
    let corpus = fixture("corpus.jsonl");
    let with = |args: &[&str]| {
        let mut v: Vec<&str> = extra.to_vec();
        v.extend_from_slice(args);
        v.into_iter().map(str::to_owned).collect::<Vec<_>>()
    };
    let steps: Vec<Vec<String>> = vec![
        with(&["cluster", "--lexicon", &lex, "--embeddings", &emb, "--out", "model.json", "--seed", "7"]),
        with(&[
            "expand", "--lexicon", &lex, "--embeddings", &emb, "--model", "model.json", "--candidates", &cand,
            "--out", "expanded.jsonl", "--merged", "enrc.jsonl",
        ]),
        with(&[
            "sweep", "--lexicon", &lex, "--embeddings", &emb, "--model", "model.json", "--candidates", &cand,
            "--out", "sweep.csv",
        ]),
        with(&["features", "--lexicon", "enrc.jsonl", "--corpus", &corpus, "--out", "features.jsonl"]),
        with(&["histogram", "--lexicon", &lex, "--embeddings", &emb, "--out", "hist.csv"]),
    ];
    for args in &steps {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        ok(&elex(dir, &refs, env));
    }
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        files.insert(
            entry.file_name().to_string_lossy().into_owned(),
            std::fs::read(entry.path()).unwrap(),
        );
    }
    files
}
