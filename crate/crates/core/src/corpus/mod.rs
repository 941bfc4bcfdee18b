//! SRL corpora in the CoNLL props column format.
//!
//! A [`Corpus`] holds sentences and one [`PredicateInstance`] per predicate column. Surface
//! strings are always rebuilt from tokens joined by [`JOINER`]; there is no raw-text layer.

mod exemplar;
mod label;
mod props;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exemplar::{Exemplar, ExemplarPool};
pub use label::{LabelError, RoleLabel, KNOWN_ADJUNCTS};
pub use props::{parse_props, serialize_props, SidecarEntry};

pub const JOINER: &str = " ";

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("line {line}: unbalanced bracket in predicate column {column}: {detail}")]
    UnbalancedBracket {
        line: usize,
        column: usize,
        detail: String,
    },
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCountMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: empty sentence")]
    EmptySentence { line: usize },
    #[error("line {line}: predicate column {column} has no V span")]
    MissingVerbSpan { line: usize, column: usize },
    #[error("line {line}: predicate column {column} has more than one V span")]
    DuplicateVerbSpan { line: usize, column: usize },
    #[error("line {line}: malformed tag {tag:?} in predicate column {column}")]
    MalformedTag {
        line: usize,
        column: usize,
        tag: String,
    },
    #[error("line {line}: {source}")]
    UnknownLabel {
        line: usize,
        #[source]
        source: LabelError,
    },
    #[error("overlapping spans [{first_start},{first_end}] and [{second_start},{second_end}] in one predicate column")]
    OverlappingSpansWithinColumn {
        first_start: usize,
        first_end: usize,
        second_start: usize,
        second_end: usize,
    },
    #[error("span [{start},{end}] outside a sentence of {len} tokens")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("invalid token {0:?}: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),
    #[error("sentence has no tokens")]
    EmptyTokens,
    #[error("instances passed to the serializer belong to different sentences")]
    MixedSentences,
    #[error("sidecar: {0}")]
    Sidecar(String),
    #[error("exemplar pool has {available} eligible items, {requested} requested")]
    PoolTooSmall { requested: usize, available: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<String>,
    pub text: String,
}

impl Sentence {
    pub fn new(id: impl Into<String>, tokens: Vec<String>) -> Result<Self, CorpusError> {
        if tokens.is_empty() {
            return Err(CorpusError::EmptyTokens);
        }
        if let Some(bad) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(CorpusError::InvalidToken(bad.clone()));
        }
        let text = tokens.join(JOINER);
        Ok(Sentence {
            id: id.into(),
            tokens,
            text,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Joined surface of the inclusive token range `start..=end`.
    pub fn span_text(&self, start: usize, end: usize) -> String {
        self.tokens[start..=end].join(JOINER)
    }

    /// Character offsets `[start, end)` of every token inside `text`.
    pub fn char_offsets(&self) -> Vec<(usize, usize)> {
        let joiner = JOINER.chars().count();
        let mut offsets = Vec::with_capacity(self.tokens.len());
        let mut pos = 0;
        for token in &self.tokens {
            let len = token.chars().count();
            offsets.push((pos, pos + len));
            pos += len + joiner;
        }
        offsets
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentSpan {
    pub label: RoleLabel,
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl ArgumentSpan {
    pub fn new(
        sentence: &Sentence,
        label: RoleLabel,
        start: usize,
        end: usize,
    ) -> Result<Self, CorpusError> {
        if start > end || end >= sentence.len() {
            return Err(CorpusError::SpanOutOfBounds {
                start,
                end,
                len: sentence.len(),
            });
        }
        Ok(ArgumentSpan {
            surface: sentence.span_text(start, end),
            label,
            start,
            end,
        })
    }

    pub fn overlaps(&self, start: usize, end: usize) -> bool {
        self.start <= end && start <= self.end
    }
}

/// One marked predicate of a sentence together with its gold arguments (V excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateInstance {
    pub sentence: Arc<Sentence>,
    /// First token of the V span.
    pub pred_index: usize,
    /// Last token of the V span; equal to `pred_index` for single-token predicates.
    pub pred_end: usize,
    pub lemma: String,
    pub gold_args: Vec<ArgumentSpan>,
    pub gold_sense: Option<String>,
}

impl PredicateInstance {
    pub fn id(&self) -> String {
        format!("{}:{}", self.sentence.id, self.pred_index)
    }

    pub fn predicate_text(&self) -> String {
        self.sentence.span_text(self.pred_index, self.pred_end)
    }
}

/// A parsed corpus. Sentences without predicates are kept so the corpus serializes back.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub sentences: Vec<Arc<Sentence>>,
    pub instances: Vec<PredicateInstance>,
}

impl Corpus {
    pub fn parse(text: &str, sidecar: Option<&[SidecarEntry]>) -> Result<Self, CorpusError> {
        props::parse_corpus(text, sidecar)
    }

    pub fn instances_of<'a>(
        &'a self,
        sentence: &'a Sentence,
    ) -> impl Iterator<Item = &'a PredicateInstance> + 'a {
        self.instances
            .iter()
            .filter(move |inst| inst.sentence.id == sentence.id)
    }

    pub fn to_props(&self) -> Result<String, CorpusError> {
        let mut blocks = Vec::with_capacity(self.sentences.len());
        for sentence in &self.sentences {
            let instances: Vec<PredicateInstance> =
                self.instances_of(sentence).cloned().collect();
            blocks.push(serialize_props(sentence, &instances)?);
        }
        Ok(blocks.join("\n"))
    }
}
