//! Lexicon-derived emotion features for a text segment.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::emotion::{EMOTIONS, NUM_EMOTIONS};
use crate::lexicon::Lexicon;

static EDGE_PUNCT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\p{P}+|\p{P}+$").unwrap());

/// Lowercase, split on whitespace, strip leading and trailing Unicode
/// punctuation, drop empties. Inner punctuation (`climate-change`) is kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|raw| EDGE_PUNCT.replace_all(&raw.to_lowercase(), "").into_owned())
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Share of tokens carrying each emotion.
    #[default]
    Fraction,
    /// Number of tokens carrying each emotion.
    Count,
    /// 1 if any token carries the emotion.
    Binary,
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fraction" => Ok(Aggregation::Fraction),
            "count" => Ok(Aggregation::Count),
            "binary" => Ok(Aggregation::Binary),
            other => Err(format!("unknown aggregation `{other}` (fraction, count, binary)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmotionFeatures {
    pub values: [f64; NUM_EMOTIONS],
    pub token_count: usize,
    /// Tokens found in the lexicon.
    pub matched_count: usize,
}

pub fn emotion_features(text: &str, lexicon: &Lexicon) -> EmotionFeatures {
    emotion_features_with(text, lexicon, Aggregation::Fraction)
}

pub fn emotion_features_with(text: &str, lexicon: &Lexicon, mode: Aggregation) -> EmotionFeatures {
    let tokens = tokenize(text);
    let mut counts = [0usize; NUM_EMOTIONS];
    let mut matched_count = 0;
    for t in &tokens {
        if let Some(entry) = lexicon.get(t) {
            matched_count += 1;
            for e in entry.emotions().iter() {
                counts[e.index()] += 1;
            }
        }
    }
    let token_count = tokens.len();
    let mut values = [0.0; NUM_EMOTIONS];
    if token_count > 0 {
        for e in EMOTIONS {
            let c = counts[e.index()];
            values[e.index()] = match mode {
                Aggregation::Fraction => c as f64 / token_count as f64,
                Aggregation::Count => c as f64,
                Aggregation::Binary => f64::from(u8::from(c > 0)),
            };
        }
    }
    EmotionFeatures {
        values,
        token_count,
        matched_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emotion::{Emotion, EmotionVector};
    use crate::lexicon::LexiconEntry;

    #[test]
    fn tokenizer_rules() {
        assert_eq!(tokenize("We must act!"), vec!["we", "must", "act"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Climate-change, NOW."), vec!["climate-change", "now"]);
        assert_eq!(tokenize("«Bonjour» ... (ok)"), vec!["bonjour", "ok"]);
        assert_eq!(tokenize("don't  \t stop"), vec!["don't", "stop"]);
    }

    #[test]
    fn single_joy_token() {
        let lex = Lexicon::from_entries([LexiconEntry::original("glad", EmotionVector::EMPTY.with(Emotion::Joy)).unwrap()]).unwrap();
        let f = emotion_features("Glad!", &lex);
        assert_eq!(f.values[Emotion::Joy.index()], 1.0);
        assert_eq!(f.values.iter().sum::<f64>(), 1.0);
        assert_eq!((f.token_count, f.matched_count), (1, 1));

        let empty = emotion_features("", &lex);
        assert_eq!(empty.values, [0.0; NUM_EMOTIONS]);
        assert_eq!(empty.token_count, 0);
    }

    #[test]
    fn aggregation_modes() {
        let lex = Lexicon::from_entries([LexiconEntry::original("glad", EmotionVector::EMPTY.with(Emotion::Joy)).unwrap()]).unwrap();
        let text = "glad glad sad day";
        assert_eq!(emotion_features_with(text, &lex, Aggregation::Fraction).values[Emotion::Joy.index()], 0.5);
        assert_eq!(emotion_features_with(text, &lex, Aggregation::Count).values[Emotion::Joy.index()], 2.0);
        assert_eq!(emotion_features_with(text, &lex, Aggregation::Binary).values[Emotion::Joy.index()], 1.0);
        assert_eq!("count".parse::<Aggregation>().unwrap(), Aggregation::Count);
        assert!("tfidf".parse::<Aggregation>().is_err());
    }
}
