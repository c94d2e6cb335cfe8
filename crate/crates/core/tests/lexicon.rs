mod common;

use std::collections::{BTreeMap, BTreeSet};

use elex_core::lexicon::{Lexicon, LexiconEntry, LexiconFormat, LoadOptions, Source, Support};
use elex_core::{Emotion, EmotionVector, Error, EMOTIONS};
use proptest::prelude::*;
use rand::Rng;

const CATEGORIES: [&str; 10] = [
    "anger", "anticipation", "disgust", "fear", "joy", "negative", "positive", "sadness", "surprise", "trust",
];

fn load(text: &str, format: LexiconFormat, keep_zero_entries: bool) -> Lexicon {
    let suffix = if format == LexiconFormat::Jsonl { ".jsonl" } else { ".tsv" };
    let f = common::temp_file(text, suffix);
    Lexicon::load(f.path(), format, LoadOptions { keep_zero_entries }).unwrap()
}

#[test]
fn nrc_sized_fixture_matches_counting_oracle() {
    let mut r = common::rng(14182);
    let mut text = String::new();
    for i in 0..1418 {
        for c in CATEGORIES {
            let flag = u8::from(r.random::<f64>() < 0.06);
            text.push_str(&format!("word{i:04}\t{c}\t{flag}\n"));
        }
    }
    // an upper-case duplicate of an existing word and a fresh sentiment-only word
    text.push_str("WORD0007\tjoy\t1\n");
    text.push_str("extra\tpositive\t1\n");
    assert_eq!(text.lines().count(), 14182);

    let mut oracle: BTreeSet<String> = BTreeSet::new();
    for line in text.lines() {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols[1] != "positive" && cols[1] != "negative" && cols[2] == "1" {
            oracle.insert(cols[0].to_lowercase());
        }
    }
    let lex = load(&text, LexiconFormat::Tsv, false);
    assert_eq!(lex.len(), oracle.len());
    assert!(lex.words().eq(oracle.iter().map(String::as_str)));
    assert!(lex.get("word0007").unwrap().emotions().get(Emotion::Joy));

    let all = load(&text, LexiconFormat::Tsv, true);
    assert_eq!(all.len(), 1419);
}

fn random_lexicon(seed: u64, n: usize) -> Lexicon {
    let mut r = common::rng(seed);
    let entries = (0..n).map(|i| {
        let word = format!("w{i}_{}", r.random::<u16>());
        if r.random::<bool>() {
            LexiconEntry::original(&word, EmotionVector::from_bits(r.random::<u8>() | 1)).unwrap()
        } else {
            let mut support = BTreeMap::new();
            for e in EMOTIONS {
                if e == Emotion::Trust || r.random::<f64>() < 0.4 {
                    let s = Support {
                        nearest: format!("seed{}", r.random::<u8>()),
                        sim: r.random::<f64>(),
                    };
                    support.insert(e, s);
                }
            }
            LexiconEntry::expanded(&word, support).unwrap()
        }
    });
    Lexicon::from_entries(entries.collect::<Vec<_>>()).unwrap()
}

#[test]
fn fifty_entry_jsonl_round_trip() {
    let lex = random_lexicon(50, 50);
    assert_eq!(lex.len(), 50);
    let mut buf = Vec::new();
    lex.write_jsonl(&mut buf).unwrap();
    let back = load(std::str::from_utf8(&buf).unwrap(), LexiconFormat::Jsonl, false);
    assert_eq!(back, lex);
}

#[test]
fn tsv_round_trip_of_original_entries() {
    let lex = common::lexicon(&[("calm", 0b1000_0000), ("dread", 0b0000_1001), ("glad", 0b0001_0000)]);
    let mut buf = Vec::new();
    lex.write_tsv(&mut buf).unwrap();
    assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 24);
    assert_eq!(load(std::str::from_utf8(&buf).unwrap(), LexiconFormat::Tsv, false), lex);
}

#[test]
fn save_and_load_through_files() {
    let lex = random_lexicon(7, 20);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lex.jsonl");
    lex.save(&path, LexiconFormat::from_path(&path)).unwrap();
    let back = Lexicon::load(&path, LexiconFormat::Jsonl, LoadOptions::default()).unwrap();
    assert_eq!(back, lex);
}

#[test]
fn merge_keeps_base_untouched_and_rejects_collisions() {
    let base = common::lexicon(&[("anger", 0b1), ("calm", 0b1000_0000)]);
    let mut support = BTreeMap::new();
    support.insert(
        Emotion::Anger,
        Support {
            nearest: "anger".into(),
            sim: 0.9,
        },
    );
    let exp = Lexicon::from_entries([LexiconEntry::expanded("fury", support.clone()).unwrap()]).unwrap();
    let merged = Lexicon::merge(&base, &exp).unwrap();
    assert_eq!(merged.len(), 3);
    for e in base.iter() {
        assert_eq!(merged.get(e.word()), Some(e));
    }
    assert_eq!(merged.get("fury").unwrap().source(), Source::Expanded);

    let clash = Lexicon::from_entries([LexiconEntry::expanded("calm", support).unwrap()]).unwrap();
    match Lexicon::merge(&base, &clash) {
        Err(Error::Conflict { words }) => assert_eq!(words, vec!["calm".to_owned()]),
        other => panic!("expected conflict, got {other:?}"),
    }
    assert!(Lexicon::merge(&base, &base).is_err());
}

#[test]
fn unicode_words_are_nfc_lowercased() {
    // decomposed "É" + "motion"
    let lex = load("E\u{301}MOTION\tsurprise\t1\n", LexiconFormat::Tsv, false);
    assert!(lex.contains("\u{e9}motion"));
}

proptest! {
    #[test]
    fn jsonl_round_trip_any_lexicon(seed in any::<u64>(), n in 0usize..40) {
        let lex = random_lexicon(seed, n);
        let mut buf = Vec::new();
        lex.write_jsonl(&mut buf).unwrap();
        let back = load(std::str::from_utf8(&buf).unwrap(), LexiconFormat::Jsonl, false);
        prop_assert_eq!(back, lex);
    }

    #[test]
    fn merge_is_a_disjoint_union(seed in any::<u64>()) {
        let base = common::lexicon(&[("alpha", 3), ("beta", 64)]);
        let exp = Lexicon::from_entries(
            random_lexicon(seed, 10).iter().filter(|e| e.source() == Source::Expanded).cloned().collect::<Vec<_>>(),
        ).unwrap();
        let merged = Lexicon::merge(&base, &exp).unwrap();
        prop_assert_eq!(merged.len(), base.len() + exp.len());
        for e in base.iter().chain(exp.iter()) {
            prop_assert_eq!(merged.get(e.word()), Some(e));
        }
    }
}
