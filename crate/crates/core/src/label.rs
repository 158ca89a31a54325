use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const NUM_CLASSES: usize = 3;

/// Group-level emotion label. The discriminants are the on-disk encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Positive = 0,
    Neutral = 1,
    Negative = 2,
}

impl Label {
    pub const ALL: [Label; NUM_CLASSES] = [Label::Positive, Label::Neutral, Label::Negative];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Label::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Positive => "Positive",
            Label::Neutral => "Neutral",
            Label::Negative => "Negative",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Positive" | "positive" => Ok(Label::Positive),
            "Neutral" | "neutral" => Ok(Label::Neutral),
            "Negative" | "negative" => Ok(Label::Negative),
            other => Err(Error::invalid(format!("unknown label `{other}`"))),
        }
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(scores: &[f64; NUM_CLASSES]) -> Label {
    let mut best = 0;
    for c in 1..NUM_CLASSES {
        if scores[c] > scores[best] {
            best = c;
        }
    }
    Label::ALL[best]
}
