use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Three-way answer / verdict shared by problems, trajectories and the
/// entailment oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    True,
    False,
    Uncertain,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::True, Label::False, Label::Uncertain];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::True => "True",
            Label::False => "False",
            Label::Uncertain => "Uncertain",
        }
    }

    /// Case-insensitive mapping of answer words, including the yes/no and
    /// unknown synonyms models tend to emit.
    pub fn from_answer(word: &str) -> Option<Label> {
        match word.trim().to_ascii_lowercase().as_str() {
            "true" | "yes" => Some(Label::True),
            "false" | "no" => Some(Label::False),
            "uncertain" | "unknown" => Some(Label::Uncertain),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::from_answer(s).ok_or_else(|| format!("unknown label `{s}`"))
    }
}
