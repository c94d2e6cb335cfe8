//! The eight emotion categories and the binary vector over them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const NUM_EMOTIONS: usize = 8;

/// NRC emotion categories. Declaration order is the canonical (alphabetical)
/// order used by every vector, file and report in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Anticipation,
    Disgust,
    Fear,
    Joy,
    Sadness,
    Surprise,
    Trust,
}

pub const EMOTIONS: [Emotion; NUM_EMOTIONS] = [
    Emotion::Anger,
    Emotion::Anticipation,
    Emotion::Disgust,
    Emotion::Fear,
    Emotion::Joy,
    Emotion::Sadness,
    Emotion::Surprise,
    Emotion::Trust,
];

impl Emotion {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Emotion> {
        EMOTIONS.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Anticipation => "anticipation",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
            Emotion::Trust => "trust",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EMOTIONS
            .iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown emotion `{s}`"))
    }
}

/// Binary flags over [`EMOTIONS`], bit `i` set iff `EMOTIONS[i]` is present.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EmotionVector(u8);

impl EmotionVector {
    pub const EMPTY: EmotionVector = EmotionVector(0);
    pub const ALL: EmotionVector = EmotionVector(u8::MAX);

    pub fn from_bits(bits: u8) -> Self {
        EmotionVector(bits)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_flags(flags: [bool; NUM_EMOTIONS]) -> Self {
        let mut v = EmotionVector::EMPTY;
        for (e, &on) in EMOTIONS.iter().zip(flags.iter()) {
            v.set(*e, on);
        }
        v
    }

    pub fn flags(self) -> [bool; NUM_EMOTIONS] {
        let mut out = [false; NUM_EMOTIONS];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.0 & (1 << i) != 0;
        }
        out
    }

    pub fn get(self, e: Emotion) -> bool {
        self.0 & (1 << e.index()) != 0
    }

    pub fn set(&mut self, e: Emotion, on: bool) {
        if on {
            self.0 |= 1 << e.index();
        } else {
            self.0 &= !(1 << e.index());
        }
    }

    pub fn with(mut self, e: Emotion) -> Self {
        self.set(e, true);
        self
    }

    pub fn union(self, other: EmotionVector) -> Self {
        EmotionVector(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    /// Number of differing flags (0..=8).
    pub fn hamming(self, other: EmotionVector) -> u32 {
        (self.0 ^ other.0).count_ones()
    }

    /// Emotions whose flag is set, in canonical order.
    pub fn iter(self) -> impl Iterator<Item = Emotion> {
        EMOTIONS.into_iter().filter(move |e| self.get(*e))
    }
}

impl FromIterator<Emotion> for EmotionVector {
    fn from_iter<I: IntoIterator<Item = Emotion>>(iter: I) -> Self {
        iter.into_iter().fold(EmotionVector::EMPTY, EmotionVector::with)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_is_alphabetical() {
        let names: Vec<_> = EMOTIONS.iter().map(|e| e.name()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        for (i, e) in EMOTIONS.iter().enumerate() {
            assert_eq!(e.index(), i);
            assert_eq!(Emotion::from_index(i), Some(*e));
            assert_eq!(e.name().parse::<Emotion>().unwrap(), *e);
        }
    }

    #[test]
    fn flags_round_trip() {
        for bits in 0..=u8::MAX {
            let v = EmotionVector::from_bits(bits);
            assert_eq!(EmotionVector::from_flags(v.flags()), v);
            assert_eq!(v.iter().collect::<EmotionVector>(), v);
        }
    }

    #[test]
    fn hamming_of_complements_is_eight() {
        let v = EmotionVector::from_bits(0b1010_0101);
        assert_eq!(v.hamming(EmotionVector::from_bits(!v.bits())), 8);
        assert_eq!(v.hamming(v), 0);
    }
}
