//! Categorical emotion lexicons in the NRC flat-file format.
//!
//! The NRC distribution is a tab-separated file with one row per
//! (word, category) pair:
//!
//! ```text
//! abandon	anger	0
//! abandon	fear	1
//! ```
//!
//! Rows for the `positive`/`negative` sentiment categories are accepted and
//! skipped; the remaining eight rows of a word fold into one [`EmotionVector`].
//! Lexicons can also be written as JSONL, which is the only format that keeps
//! provenance (original vs expanded) and the supporting evidence of expanded
//! entries.

use std::collections::btree_map::{self, BTreeMap};
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::emotion::{Emotion, EmotionVector, EMOTIONS};
use crate::error::{Error, Result};

const SENTIMENT_CATEGORIES: [&str; 2] = ["negative", "positive"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Original,
    Expanded,
}

/// Evidence for one expanded emotion: the lexicon word it was copied from
/// and the calibrated similarity that crossed the threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub nearest: String,
    pub sim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LexiconEntry {
    word: String,
    emotions: EmotionVector,
    source: Source,
    support: Option<BTreeMap<Emotion, Support>>,
}

impl LexiconEntry {
    pub fn original(word: &str, emotions: EmotionVector) -> Result<Self> {
        Ok(LexiconEntry {
            word: normalize_word(word).map_err(Error::InvalidArgument)?,
            emotions,
            source: Source::Original,
            support: None,
        })
    }

    /// An expanded entry; its emotions are exactly the keys of `support`.
    pub fn expanded(word: &str, support: BTreeMap<Emotion, Support>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "expanded entry `{word}` carries no emotion"
            )));
        }
        if let Some(s) = support.values().find(|s| !(0.0..=1.0).contains(&s.sim)) {
            return Err(Error::InvalidArgument(format!(
                "support similarity {} for `{word}` outside [0, 1]",
                s.sim
            )));
        }
        Ok(LexiconEntry {
            word: normalize_word(word).map_err(Error::InvalidArgument)?,
            emotions: support.keys().copied().collect(),
            source: Source::Expanded,
            support: Some(support),
        })
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn emotions(&self) -> EmotionVector {
        self.emotions
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn support(&self) -> Option<&BTreeMap<Emotion, Support>> {
        self.support.as_ref()
    }
}

/// Word-keyed emotion lexicon. Iteration is in lexicographic word order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<String, LexiconEntry>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    pub keep_zero_entries: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LexiconFormat {
    Tsv,
    Jsonl,
}

impl LexiconFormat {
    /// `.jsonl`/`.json` files are JSONL, everything else is NRC TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => LexiconFormat::Jsonl,
            _ => LexiconFormat::Tsv,
        }
    }
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a lexicon, rejecting duplicate words.
    pub fn from_entries(entries: impl IntoIterator<Item = LexiconEntry>) -> Result<Self> {
        let mut lex = Lexicon::new();
        for entry in entries {
            match lex.entries.entry(entry.word.clone()) {
                btree_map::Entry::Occupied(_) => {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate lexicon word `{}`",
                        entry.word
                    )))
                }
                btree_map::Entry::Vacant(slot) => {
                    slot.insert(entry);
                }
            }
        }
        Ok(lex)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&LexiconEntry> {
        self.entries.get(word)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.values()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Words flagged with `emotion`, sorted.
    pub fn words_with(&self, emotion: Emotion) -> impl Iterator<Item = &str> {
        self.entries
            .values()
            .filter(move |e| e.emotions.get(emotion))
            .map(|e| e.word.as_str())
    }

    pub fn load(path: &Path, format: LexiconFormat, options: LoadOptions) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let origin = path.display().to_string();
        let reader = BufReader::new(file);
        match format {
            LexiconFormat::Tsv => read_tsv(reader, &origin, options),
            LexiconFormat::Jsonl => read_jsonl(reader, &origin, options),
        }
    }

    pub fn save(&self, path: &Path, format: LexiconFormat) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let res = match format {
            LexiconFormat::Tsv => self.write_tsv(&mut out),
            LexiconFormat::Jsonl => self.write_jsonl(&mut out),
        };
        res.and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
    }

    /// One `word<TAB>emotion<TAB>flag` line per word and emotion.
    pub fn write_tsv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for entry in self.entries.values() {
            for e in EMOTIONS {
                writeln!(out, "{}\t{}\t{}", entry.word, e, u8::from(entry.emotions.get(e)))?;
            }
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for entry in self.entries.values() {
            let record = JsonlRecord {
                word: entry.word.clone(),
                emotions: entry.emotions.iter().collect(),
                source: entry.source,
                support: entry.support.clone(),
            };
            serde_json::to_writer(&mut *out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Adds expansion entries to `base`. Base entries are never touched; any
    /// expansion word already present in `base` is reported as a conflict.
    pub fn merge(base: &Lexicon, expansion: &Lexicon) -> Result<Lexicon> {
        if let Some(e) = expansion.iter().find(|e| e.source != Source::Expanded) {
            return Err(Error::InvalidArgument(format!(
                "merge expects expanded entries only, `{}` is original",
                e.word
            )));
        }
        let conflicts: Vec<String> = expansion
            .words()
            .filter(|w| base.contains(w))
            .map(str::to_owned)
            .collect();
        if !conflicts.is_empty() {
            return Err(Error::Conflict { words: conflicts });
        }
        let mut merged = base.clone();
        for entry in expansion.iter() {
            merged.entries.insert(entry.word.clone(), entry.clone());
        }
        Ok(merged)
    }
}

/// Lowercases and NFC-normalizes a token; rejects empty words and words
/// containing whitespace.
pub fn normalize_word(raw: &str) -> std::result::Result<String, String> {
    let word: String = raw.nfc().collect::<String>().to_lowercase().nfc().collect();
    if word.is_empty() {
        return Err("empty word".to_owned());
    }
    if word.chars().any(char::is_whitespace) {
        return Err(format!("word `{raw}` contains whitespace"));
    }
    Ok(word)
}

fn read_tsv<R: BufRead>(reader: R, origin: &str, options: LoadOptions) -> Result<Lexicon> {
    // folded word -> (vector, first raw spelling)
    let mut folded: BTreeMap<String, (EmotionVector, String)> = BTreeMap::new();
    let mut warned: HashMap<String, ()> = HashMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::format(origin, lineno, e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::format(
                origin,
                lineno,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let (raw_word, category, flag) = (fields[0], fields[1], fields[2]);
        let flag = match flag.trim_end_matches('\r') {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::format(origin, lineno, format!("flag must be 0 or 1, found `{other}`")))
            }
        };
        let word = normalize_word(raw_word).map_err(|m| Error::format(origin, lineno, m))?;
        let emotion = if SENTIMENT_CATEGORIES.contains(&category) {
            None
        } else {
            Some(
                category
                    .parse::<Emotion>()
                    .map_err(|m| Error::format(origin, lineno, m))?,
            )
        };

        let slot = folded
            .entry(word.clone())
            .or_insert_with(|| (EmotionVector::EMPTY, raw_word.to_owned()));
        if slot.1 != raw_word && warned.insert(word.clone(), ()).is_none() {
            log::warn!(
                "{origin}:{lineno}: `{raw_word}` folds onto `{}`; flags are OR-merged",
                slot.1
            );
        }
        if let (Some(e), true) = (emotion, flag) {
            slot.0.set(e, true);
        }
    }

    let entries = folded
        .into_iter()
        .filter(|(_, (v, _))| options.keep_zero_entries || !v.is_empty())
        .map(|(word, (emotions, _))| {
            (
                word.clone(),
                LexiconEntry {
                    word,
                    emotions,
                    source: Source::Original,
                    support: None,
                },
            )
        })
        .collect();
    Ok(Lexicon { entries })
}

#[derive(Serialize, Deserialize)]
struct JsonlRecord {
    word: String,
    emotions: Vec<Emotion>,
    source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    support: Option<BTreeMap<Emotion, Support>>,
}

fn read_jsonl<R: BufRead>(reader: R, origin: &str, options: LoadOptions) -> Result<Lexicon> {
    let mut entries = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::format(origin, lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonlRecord =
            serde_json::from_str(&line).map_err(|e| Error::format(origin, lineno, e.to_string()))?;
        let bad = |m: String| Error::format(origin, lineno, m);
        let entry = match record.source {
            Source::Original => {
                if record.support.is_some() {
                    return Err(bad("original entry must not carry support".into()));
                }
                LexiconEntry::original(&record.word, record.emotions.iter().copied().collect())
                    .map_err(|e| bad(e.to_string()))?
            }
            Source::Expanded => {
                let support = record
                    .support
                    .ok_or_else(|| bad("expanded entry without support".into()))?;
                let entry = LexiconEntry::expanded(&record.word, support).map_err(|e| bad(e.to_string()))?;
                let listed: EmotionVector = record.emotions.iter().copied().collect();
                if listed != entry.emotions {
                    return Err(bad("support keys do not match the emotions list".into()));
                }
                entry
            }
        };
        if entry.emotions.is_empty() && !options.keep_zero_entries {
            continue;
        }
        if entries.insert(entry.word.clone(), entry).is_some() {
            return Err(bad(format!("duplicate word `{}`", record.word)));
        }
    }
    Ok(Lexicon { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tsv(text: &str, keep_zero_entries: bool) -> Result<Lexicon> {
        read_tsv(text.as_bytes(), "test", LoadOptions { keep_zero_entries })
    }

    #[test]
    fn folds_rows_into_one_vector() {
        let lex = tsv("abandon\tfear\t1\nabandon\tsadness\t1\nabandon\tjoy\t0\n", false).unwrap();
        assert_eq!(lex.len(), 1);
        let entry = lex.get("abandon").unwrap();
        assert_eq!(entry.emotions(), EmotionVector::EMPTY.with(Emotion::Fear).with(Emotion::Sadness));
        assert_eq!(entry.source(), Source::Original);
    }

    #[test]
    fn sentiment_only_words_are_dropped() {
        assert!(tsv("calm\tpositive\t1\n", false).unwrap().is_empty());
        let kept = tsv("calm\tpositive\t1\n", true).unwrap();
        assert_eq!(kept.get("calm").unwrap().emotions(), EmotionVector::EMPTY);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let err = tsv("a\tjoy\t1\nb\tjoy\n", false).unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err}");
        let err = tsv("a\tjoy\t2\n", false).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }), "{err}");
        let err = tsv("a\tjoy\t1\na\tboredom\t1\n", false).unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err}");
    }

    #[test]
    fn case_folding_or_merges() {
        let lex = tsv("Hope\tjoy\t1\nhope\ttrust\t1\nhope\tjoy\t0\n", false).unwrap();
        assert_eq!(lex.len(), 1);
        assert_eq!(
            lex.get("hope").unwrap().emotions(),
            EmotionVector::EMPTY.with(Emotion::Joy).with(Emotion::Trust)
        );
    }

    #[test]
    fn tsv_emits_eight_lines_per_word() {
        let lex = Lexicon::from_entries([LexiconEntry::original("joyful", EmotionVector::EMPTY.with(Emotion::Joy)).unwrap()]).unwrap();
        let mut buf = Vec::new();
        lex.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 8);
        assert_eq!(lines.iter().filter(|l| l.ends_with("\t1")).count(), 1);
        assert!(lines.contains(&"joyful\tjoy\t1"));

        let mut empty = Vec::new();
        Lexicon::new().write_tsv(&mut empty).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn merge_rules() {
        let base = Lexicon::from_entries([LexiconEntry::original("joyful", EmotionVector::EMPTY.with(Emotion::Joy)).unwrap()]).unwrap();
        assert_eq!(Lexicon::merge(&base, &Lexicon::new()).unwrap(), base);

        let support = |w: &str| {
            BTreeMap::from([(Emotion::Joy, Support { nearest: w.to_owned(), sim: 0.7 })])
        };
        let expansion = Lexicon::from_entries([LexiconEntry::expanded("elated", support("joyful")).unwrap()]).unwrap();
        let merged = Lexicon::merge(&base, &expansion).unwrap();
        assert_eq!(merged.len(), 2);
        assert_eq!(merged.get("joyful"), base.get("joyful"));

        let clash = Lexicon::from_entries([LexiconEntry::expanded("joyful", support("elated")).unwrap()]).unwrap();
        match Lexicon::merge(&base, &clash) {
            Err(Error::Conflict { words }) => assert_eq!(words, vec!["joyful".to_owned()]),
            other => panic!("expected conflict, got {other:?}"),
        }

        assert!(matches!(Lexicon::merge(&base, &base), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn jsonl_rejects_inconsistent_support() {
        let origin = "t";
        let opts = LoadOptions::default();
        let line = r#"{"word":"x","emotions":["joy"],"source":"original","support":{"joy":{"nearest":"y","sim":0.5}}}"#;
        assert!(read_jsonl(line.as_bytes(), origin, opts).is_err());
        let line = r#"{"word":"x","emotions":["joy","fear"],"source":"expanded","support":{"joy":{"nearest":"y","sim":0.5}}}"#;
        assert!(read_jsonl(line.as_bytes(), origin, opts).is_err());
        let line = r#"{"word":"x","emotions":["joy"],"source":"expanded","support":{"joy":{"nearest":"y","sim":0.5}}}"#;
        let lex = read_jsonl(line.as_bytes(), origin, opts).unwrap();
        assert_eq!(lex.get("x").unwrap().source(), Source::Expanded);
    }

    #[test]
    fn normalize_word_rules() {
        assert_eq!(normalize_word("Ábc").unwrap(), "ábc");
        // decomposed e + combining acute composes under NFC
        assert_eq!(normalize_word("e\u{301}te").unwrap(), "\u{e9}te");
        assert!(normalize_word("").is_err());
        assert!(normalize_word("two words").is_err());
    }
}
