//! Stance corpora in one schema.
//!
//! Each corpus arrives as pre-flattened JSONL with source-specific field
//! names and label vocabularies. [`convert`] renames fields, projects labels
//! onto For/Against with [`map_label`], and drops segments that carry no
//! stance. The unified record is
//!
//! ```text
//! {"id":"b001:2","topic":"...","text":"...","stance":"For","source":"amt"}
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::features::tokenize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stance {
    For,
    Against,
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stance::For => "For",
            Stance::Against => "Against",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusSource {
    /// Argumentative microtexts, parts 1 and 2.
    Amt,
    /// UKP sentential argument mining.
    Ukp,
    /// Persuasive essays.
    Pe,
    /// IBM Debater claim stance.
    Ibm,
}

impl CorpusSource {
    pub fn name(self) -> &'static str {
        match self {
            CorpusSource::Amt => "amt",
            CorpusSource::Ukp => "ukp",
            CorpusSource::Pe => "pe",
            CorpusSource::Ibm => "ibm",
        }
    }
}

impl fmt::Display for CorpusSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorpusSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "amt" => Ok(CorpusSource::Amt),
            "ukp" => Ok(CorpusSource::Ukp),
            "pe" => Ok(CorpusSource::Pe),
            "ibm" => Ok(CorpusSource::Ibm),
            other => Err(format!("unknown corpus source `{other}` (amt, ukp, pe, ibm)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    Stance(Stance),
    Skip,
}

/// Projects a corpus-native label onto the binary stance. Matching is
/// case-insensitive; anything outside the source's label set is rejected.
pub fn map_label(raw: &str, source: CorpusSource) -> Result<Projection> {
    let for_ = Some(Projection::Stance(Stance::For));
    let against = Some(Projection::Stance(Stance::Against));
    let label = raw.trim().to_lowercase();
    let projected = match (source, label.as_str()) {
        (CorpusSource::Amt, "pro") => for_,
        (CorpusSource::Amt, "opp") => against,
        (CorpusSource::Ibm, "pro") => for_,
        (CorpusSource::Ibm, "con") => against,
        (CorpusSource::Ukp, "for" | "support" | "argument_for") => for_,
        (CorpusSource::Ukp, "against" | "oppose" | "argument_against") => against,
        (CorpusSource::Ukp, "noargument" | "no argument" | "no_argument") => Some(Projection::Skip),
        (CorpusSource::Pe, "for") => for_,
        (CorpusSource::Pe, "against") => against,
        _ => None,
    };
    projected.ok_or_else(|| Error::InvalidArgument(format!("unknown label `{raw}` for source {source}")))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StanceRecord {
    pub id: String,
    pub topic: String,
    pub text: String,
    pub stance: Stance,
    pub source: CorpusSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelScheme {
    /// Labels are in the source's own vocabulary and go through [`map_label`].
    Native,
    /// Labels are already `For`/`Against`.
    Unified,
}

/// Where to find each unified field in a flattened input row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappingConfig {
    pub id_field: String,
    pub topic_field: String,
    pub text_field: String,
    pub label_field: String,
    pub labels: LabelScheme,
    /// Read the source per row from this field instead of using the
    /// source passed to [`convert`].
    pub source_field: Option<String>,
}

impl MappingConfig {
    /// Field names of the flattened fixtures. Essays use the major claim as
    /// the topic.
    pub fn for_source(source: CorpusSource) -> Self {
        let topic = match source {
            CorpusSource::Pe => "major_claim",
            _ => "topic",
        };
        MappingConfig {
            id_field: "id".into(),
            topic_field: topic.into(),
            text_field: "text".into(),
            label_field: "label".into(),
            labels: LabelScheme::Native,
            source_field: None,
        }
    }

    /// Reads unified records back unchanged.
    pub fn unified() -> Self {
        MappingConfig {
            id_field: "id".into(),
            topic_field: "topic".into(),
            text_field: "text".into(),
            label_field: "stance".into(),
            labels: LabelScheme::Unified,
            source_field: Some("source".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowError {
    /// 1-based line number in its input.
    pub row: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct ConvertReport {
    pub records: Vec<StanceRecord>,
    pub rows: usize,
    pub skipped: usize,
    pub errors: Vec<RowError>,
}

impl ConvertReport {
    pub fn all_failed(&self) -> bool {
        self.rows > 0 && self.records.is_empty() && self.skipped == 0
    }

    /// Appends another input, e.g. the second part of a split corpus.
    pub fn extend(&mut self, other: ConvertReport) {
        self.records.extend(other.records);
        self.rows += other.rows;
        self.skipped += other.skipped;
        self.errors.extend(other.errors);
    }
}

fn string_field(row: &serde_json::Map<String, Value>, field: &str) -> std::result::Result<String, String> {
    match row.get(field) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        Some(_) => Err(format!("field `{field}` is not a string")),
        None => Err(format!("missing field `{field}`")),
    }
}

fn convert_row(line: &str, source: CorpusSource, config: &MappingConfig) -> std::result::Result<Option<StanceRecord>, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let Value::Object(row) = value else {
        return Err("row is not a JSON object".into());
    };
    let source = match &config.source_field {
        Some(f) => string_field(&row, f)?.parse::<CorpusSource>()?,
        None => source,
    };
    let label = string_field(&row, &config.label_field)?;
    let stance = match config.labels {
        LabelScheme::Native => match map_label(&label, source).map_err(|e| e.to_string())? {
            Projection::Stance(s) => s,
            Projection::Skip => return Ok(None),
        },
        LabelScheme::Unified => match label.as_str() {
            "For" => Stance::For,
            "Against" => Stance::Against,
            other => return Err(format!("stance must be `For` or `Against`, found `{other}`")),
        },
    };
    let id = string_field(&row, &config.id_field)?;
    let topic = string_field(&row, &config.topic_field)?;
    let text = string_field(&row, &config.text_field)?;
    if topic.trim().is_empty() {
        return Err("empty topic".into());
    }
    if text.trim().is_empty() {
        return Err("empty text".into());
    }
    Ok(Some(StanceRecord {
        id,
        topic,
        text,
        stance,
        source,
    }))
}

/// Converts one flattened JSONL input. Row-level problems are collected in
/// the report rather than aborting; only read failures are errors.
pub fn convert<R: BufRead>(input: R, origin: &str, source: CorpusSource, config: &MappingConfig) -> Result<ConvertReport> {
    let mut report = ConvertReport::default();
    for (idx, line) in input.lines().enumerate() {
        let row = idx + 1;
        let line = line.map_err(|e| Error::format(origin, row, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        report.rows += 1;
        match convert_row(&line, source, config) {
            Ok(Some(record)) => report.records.push(record),
            Ok(None) => report.skipped += 1,
            Err(message) => {
                log::warn!("{origin}:{row}: {message}");
                report.errors.push(RowError { row, message });
            }
        }
    }
    Ok(report)
}

pub fn write_unified<W: Write>(records: &[StanceRecord], out: &mut W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads unified JSONL, failing on the first invalid row.
pub fn read_unified<R: BufRead>(input: R, origin: &str) -> Result<Vec<StanceRecord>> {
    let report = convert(input, origin, CorpusSource::Amt, &MappingConfig::unified())?;
    if let Some(e) = report.errors.first() {
        return Err(Error::format(origin, e.row, e.message.clone()));
    }
    Ok(report.records)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusStats {
    pub record_count: usize,
    pub label_counts: BTreeMap<Stance, usize>,
    pub label_fractions: BTreeMap<Stance, f64>,
    pub topic_count: usize,
    pub total_tokens: usize,
    pub mean_tokens: f64,
    pub sources: Vec<CorpusSource>,
}

pub fn stats(records: &[StanceRecord]) -> Result<CorpusStats> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to summarize".into()));
    }
    let n = records.len();
    let mut label_counts = BTreeMap::from([(Stance::For, 0), (Stance::Against, 0)]);
    let mut topics = BTreeSet::new();
    let mut sources = BTreeSet::new();
    let mut total_tokens = 0;
    for r in records {
        *label_counts.get_mut(&r.stance).expect("both stances present") += 1;
        topics.insert(r.topic.as_str());
        sources.insert(r.source);
        total_tokens += tokenize(&r.text).len();
    }
    let label_fractions = label_counts
        .iter()
        .map(|(s, c)| (*s, *c as f64 / n as f64))
        .collect();
    Ok(CorpusStats {
        record_count: n,
        label_counts,
        label_fractions,
        topic_count: topics.len(),
        total_tokens,
        mean_tokens: total_tokens as f64 / n as f64,
        sources: sources.into_iter().collect(),
    })
}
