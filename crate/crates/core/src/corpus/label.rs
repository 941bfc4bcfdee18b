use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Adjunct names accepted without an `AM-`/`ARGM-` prefix.
pub const KNOWN_ADJUNCTS: &[&str] = &[
    "TMP", "LOC", "MNR", "DIR", "ADV", "DIS", "EXT", "CAU", "NEG", "MOD", "PNC", "PRD", "REC",
    "GOL", "COM", "PRP", "DSP", "LVB", "PRR", "PRX", "ADJ", "TM",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unrecognized role label {0:?}")]
pub struct LabelError(pub String);

/// A PropBank role label in the canonical CoNLL-2005 space.
///
/// Both `ARG0`/`ARGM-TMP` (CoNLL-2012) and `A0`/`AM-TMP` (CoNLL-2005) parse to the same
/// value. Bare adjunct names such as `TMP` are accepted as well, since prompts list
/// non-core roles by their short names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RoleLabel {
    /// Numbered core argument: `'0'..='5'` or `'A'` for `AA`.
    Core(char),
    /// Modifier argument, stored without the `AM-` prefix.
    Adjunct(String),
    Continuation(Box<RoleLabel>),
    Reference(Box<RoleLabel>),
    Verb,
}

impl RoleLabel {
    pub fn parse(raw: &str) -> Result<Self, LabelError> {
        let upper = raw.trim().to_ascii_uppercase();
        parse_upper(&upper).ok_or_else(|| LabelError(raw.to_string()))
    }

    pub fn core(n: u8) -> Self {
        assert!(n <= 5, "core roles run from A0 to A5");
        RoleLabel::Core(char::from(b'0' + n))
    }

    pub fn adjunct(name: &str) -> Self {
        RoleLabel::Adjunct(name.to_ascii_uppercase())
    }

    /// CoNLL-2005 form: `A0`, `AM-TMP`, `C-A1`, `R-AM-LOC`, `V`.
    pub fn canonical(&self) -> String {
        match self {
            RoleLabel::Core(c) => format!("A{c}"),
            RoleLabel::Adjunct(name) => format!("AM-{name}"),
            RoleLabel::Continuation(inner) => format!("C-{}", inner.canonical()),
            RoleLabel::Reference(inner) => format!("R-{}", inner.canonical()),
            RoleLabel::Verb => "V".to_string(),
        }
    }

    /// The form used inside prompts and answers: `A0`, `TMP`, `C-A1`, `R-LOC`.
    pub fn short(&self) -> String {
        match self {
            RoleLabel::Core(c) => format!("A{c}"),
            RoleLabel::Adjunct(name) => name.clone(),
            RoleLabel::Continuation(inner) => format!("C-{}", inner.short()),
            RoleLabel::Reference(inner) => format!("R-{}", inner.short()),
            RoleLabel::Verb => "V".to_string(),
        }
    }

    /// CoNLL-2012 form: `ARG0`, `ARGM-TMP`, `C-ARG1`.
    pub fn conll2012(&self) -> String {
        match self {
            RoleLabel::Core(c) => format!("ARG{c}"),
            RoleLabel::Adjunct(name) => format!("ARGM-{name}"),
            RoleLabel::Continuation(inner) => format!("C-{}", inner.conll2012()),
            RoleLabel::Reference(inner) => format!("R-{}", inner.conll2012()),
            RoleLabel::Verb => "V".to_string(),
        }
    }

    /// The label with any `C-`/`R-` prefixes removed.
    pub fn base(&self) -> &RoleLabel {
        match self {
            RoleLabel::Continuation(inner) | RoleLabel::Reference(inner) => inner.base(),
            other => other,
        }
    }

    pub fn is_core(&self) -> bool {
        matches!(self, RoleLabel::Core(_))
    }

    pub fn is_adjunct(&self) -> bool {
        matches!(self, RoleLabel::Adjunct(_))
    }

    pub fn is_continuation(&self) -> bool {
        matches!(self, RoleLabel::Continuation(_))
    }

    pub fn is_verb(&self) -> bool {
        matches!(self, RoleLabel::Verb)
    }
}

fn parse_upper(s: &str) -> Option<RoleLabel> {
    if let Some(rest) = s.strip_prefix("C-") {
        return parse_argument(rest).map(|l| RoleLabel::Continuation(Box::new(l)));
    }
    if let Some(rest) = s.strip_prefix("R-") {
        return parse_argument(rest).map(|l| RoleLabel::Reference(Box::new(l)));
    }
    if s == "V" {
        return Some(RoleLabel::Verb);
    }
    parse_argument(s)
}

fn parse_argument(s: &str) -> Option<RoleLabel> {
    if let Some(name) = s.strip_prefix("ARGM-").or_else(|| s.strip_prefix("AM-")) {
        return valid_adjunct(name).then(|| RoleLabel::Adjunct(name.to_string()));
    }
    let digit = s.strip_prefix("ARG").or_else(|| s.strip_prefix('A'));
    if let Some(d) = digit {
        let mut chars = d.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            if ('0'..='5').contains(&c) || c == 'A' {
                return Some(RoleLabel::Core(c));
            }
        }
    }
    KNOWN_ADJUNCTS
        .contains(&s)
        .then(|| RoleLabel::Adjunct(s.to_string()))
}

fn valid_adjunct(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric())
}

impl fmt::Display for RoleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl FromStr for RoleLabel {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RoleLabel::parse(s)
    }
}

impl Serialize for RoleLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical())
    }
}

impl<'de> Deserialize<'de> for RoleLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        RoleLabel::parse(&raw).map_err(serde::de::Error::custom)
    }
}
