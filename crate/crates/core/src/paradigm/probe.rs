use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// The masked-slot placeholder.
pub const MASK: &str = "[MASK]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Role {
    Theme,
    Recipient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Frame {
    /// `V NP NP`
    #[serde(rename = "DO")]
    DoubleObject,
    /// `V NP to NP`
    #[serde(rename = "PD")]
    Prepositional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Voice {
    Active,
    Passive,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::Theme, Role::Recipient];

    pub fn opposite(self) -> Role {
        match self {
            Role::Theme => Role::Recipient,
            Role::Recipient => Role::Theme,
        }
    }
}

impl Frame {
    pub const ALL: [Frame; 2] = [Frame::DoubleObject, Frame::Prepositional];
}

impl Voice {
    pub const ALL: [Voice; 2] = [Voice::Active, Voice::Passive];
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Theme => "THEME",
            Role::Recipient => "RECIPIENT",
        })
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frame::DoubleObject => "DO",
            Frame::Prepositional => "PD",
        })
    }
}

impl fmt::Display for Voice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Voice::Active => "active",
            Voice::Passive => "passive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownName(pub String);

impl fmt::Display for UnknownName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unrecognized name '{}'", self.0)
    }
}

impl core::error::Error for UnknownName {}

impl FromStr for Role {
    type Err = UnknownName;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "THEME" | "TH" => Ok(Role::Theme),
            "RECIPIENT" | "RE" | "REC" => Ok(Role::Recipient),
            _ => Err(UnknownName(s.into())),
        }
    }
}

impl FromStr for Frame {
    type Err = UnknownName;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "DO" => Ok(Frame::DoubleObject),
            "PD" => Ok(Frame::Prepositional),
            _ => Err(UnknownName(s.into())),
        }
    }
}

impl FromStr for Voice {
    type Err = UnknownName;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "active" => Ok(Voice::Active),
            "passive" => Ok(Voice::Passive),
            _ => Err(UnknownName(s.into())),
        }
    }
}

/// A sentence with role-labelled slots. Slots hold either the mask
/// placeholder or, in tuning sentences, the single novel token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeSentence {
    pub tokens: Vec<String>,
    pub slots: Vec<(usize, Role)>,
    pub frame: Frame,
    pub voice: Voice,
    pub verb_lemma: String,
    pub novel_token: Option<String>,
}

impl ProbeSentence {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    /// Checks the slot and novel-token invariants.
    pub fn is_well_formed(&self) -> bool {
        let novel = self.novel_token.as_deref();
        let slots_ok =
            self.slots.iter().all(|&(i, _)| self.tokens.get(i).is_some_and(|t| t == MASK || Some(t.as_str()) == novel));
        let novel_ok = match novel {
            Some(n) => self.tokens.iter().filter(|t| *t == n).count() == 1,
            None => true,
        };
        slots_ok && novel_ok
    }

    pub fn mask_positions(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.0).collect()
    }

    pub fn role_at(&self, position: usize) -> Option<Role> {
        self.slots.iter().find(|s| s.0 == position).map(|s| s.1)
    }
}

impl fmt::Display for ProbeSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}
