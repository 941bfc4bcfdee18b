//! Fuzzy grounding of predicted argument strings in the source sentence.
//!
//! [`ratio`] is the Ratcliff/Obershelp gestalt similarity: `2*M / (|a| + |b|)` where `M` is
//! the total size of the blocks found by taking the longest common substring and recursing
//! on both sides of it. There are no junk heuristics, so for inputs shorter than 200
//! elements the value agrees with Python's `difflib.SequenceMatcher(None, a, b).ratio()`.
//!
//! [`best_match`] first slides a query-sized window over the corpus with stride `step` and
//! keeps the first strictly better window, then nudges the left and right boundaries by up
//! to `flexity` positions each, accepting only strict improvements.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{RoleLabel, Sentence};
use crate::extraction::RawPrediction;

#[derive(Debug, Error, PartialEq)]
pub enum MatchError {
    #[error("cannot match a non-empty query against an empty corpus")]
    EmptyCorpus,
    #[error("step must be at least 1")]
    InvalidStep,
}

/// Gestalt similarity of two sequences. `ratio([], [])` is 1.0.
pub fn ratio_seq<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * matched_len(a, b) as f64 / total as f64
}

pub fn ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    ratio_seq(&a, &b)
}

/// Total length of the recursively found matching blocks.
pub fn matched_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut total = 0;
    let mut stack = vec![(0, a.len(), 0, b.len())];
    while let Some((alo, ahi, blo, bhi)) = stack.pop() {
        let (i, j, k) = longest_common(a, alo, ahi, b, blo, bhi);
        if k == 0 {
            continue;
        }
        total += k;
        if alo < i && blo < j {
            stack.push((alo, i, blo, j));
        }
        if i + k < ahi && j + k < bhi {
            stack.push((i + k, ahi, j + k, bhi));
        }
    }
    total
}

/// Longest common substring of `a[alo..ahi]` and `b[blo..bhi]`; ties go to the earliest
/// start in `a`, then the earliest start in `b`.
#[allow(clippy::needless_range_loop)]
fn longest_common<T: PartialEq>(
    a: &[T],
    alo: usize,
    ahi: usize,
    b: &[T],
    blo: usize,
    bhi: usize,
) -> (usize, usize, usize) {
    let width = bhi - blo;
    let mut prev = vec![0usize; width + 1];
    let mut cur = vec![0usize; width + 1];
    let (mut best_i, mut best_j, mut best_k) = (alo, blo, 0);
    for i in alo..ahi {
        for j in blo..bhi {
            let col = j - blo + 1;
            if a[i] == b[j] {
                let k = prev[col - 1] + 1;
                cur[col] = k;
                if k > best_k {
                    best_i = i + 1 - k;
                    best_j = j + 1 - k;
                    best_k = k;
                }
            } else {
                cur[col] = 0;
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (best_i, best_j, best_k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchUnit {
    #[default]
    Character,
    Token,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    pub step: usize,
    pub flexity: usize,
    #[serde(default)]
    pub unit: MatchUnit,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            step: 1,
            flexity: 8,
            unit: MatchUnit::Character,
        }
    }
}

/// A matched substring; `start..end` is a half-open range in `unit` offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub substring: String,
    pub start: usize,
    pub end: usize,
    pub similarity: f64,
}

/// Window scan followed by boundary refinement over generic sequences.
///
/// Returns `(start, end, similarity)`.
pub fn align<T: PartialEq>(query: &[T], corpus: &[T], step: usize, flexity: usize) -> (usize, usize, f64) {
    let n = corpus.len();
    let lq = query.len();
    let score = |s: usize, e: usize| {
        if s >= e {
            ratio_seq::<T>(query, &[])
        } else {
            ratio_seq(query, &corpus[s..e])
        }
    };

    let (mut sim, mut bl, mut br) = (0.0, 0, 0);
    let mut m = 0;
    loop {
        let start = m.min(n);
        let end = (m + lq).min(n);
        let s = score(start, end);
        if s > sim {
            sim = s;
            bl = start;
            br = end;
        }
        m += step;
        if m + lq >= n + step {
            break;
        }
    }

    let (mut sim_l, mut sim_r) = (sim, sim);
    let (tl, tr) = (bl, br);
    for i in 1..=flexity {
        let left = tl.saturating_sub(i);
        let s = score(left, tr);
        if s > sim_l {
            sim_l = s;
            bl = left;
        }
        let left = (tl + i).min(n);
        let s = score(left, tr);
        if s > sim_l {
            sim_l = s;
            bl = left;
        }
        let right = tr.saturating_sub(i);
        let s = score(tl, right);
        if s > sim_r {
            sim_r = s;
            br = right;
        }
        let right = (tr + i).min(n);
        let s = score(tl, right);
        if s > sim_r {
            sim_r = s;
            br = right;
        }
    }

    // The two boundaries were refined independently; if joining them loses ground, keep
    // whichever single-sided refinement scores higher. Every candidate is rescored so the
    // returned similarity always belongs to the returned window.
    let mut best = (tl, tr, score(tl, tr));
    for (s, e) in [(bl, br), (bl, tr), (tl, br)] {
        if s <= e {
            let sim = score(s, e);
            if sim > best.2 || (s, e) == (bl, br) && sim >= best.2 {
                best = (s, e, sim);
            }
        }
    }
    best
}

pub fn best_match(query: &str, corpus: &str, params: &MatchParams) -> Result<MatchResult, MatchError> {
    if params.step == 0 {
        return Err(MatchError::InvalidStep);
    }
    match params.unit {
        MatchUnit::Character => {
            let q: Vec<char> = query.chars().collect();
            let c: Vec<char> = corpus.chars().collect();
            if q.is_empty() {
                return Ok(empty_match(1.0));
            }
            if c.is_empty() {
                return Err(MatchError::EmptyCorpus);
            }
            let (start, end, similarity) = align(&q, &c, params.step, params.flexity);
            Ok(MatchResult {
                substring: c[start..end].iter().collect(),
                start,
                end,
                similarity,
            })
        }
        MatchUnit::Token => {
            let q: Vec<&str> = query.split_whitespace().collect();
            let c: Vec<&str> = corpus.split_whitespace().collect();
            if q.is_empty() {
                return Ok(empty_match(1.0));
            }
            if c.is_empty() {
                return Err(MatchError::EmptyCorpus);
            }
            let (start, end, similarity) = align(&q, &c, params.step, params.flexity);
            Ok(MatchResult {
                substring: c[start..end].join(" "),
                start,
                end,
                similarity,
            })
        }
    }
}

fn empty_match(similarity: f64) -> MatchResult {
    MatchResult {
        substring: String::new(),
        start: 0,
        end: 0,
        similarity,
    }
}

pub const DEFAULT_FLOOR: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedArgument {
    pub label: RoleLabel,
    /// The argument text as the model produced it.
    pub predicted: String,
    /// Inclusive token span.
    pub start: usize,
    pub end: usize,
    pub surface: String,
    /// Similarity between `predicted` and `surface`.
    pub similarity: f64,
    /// Similarity of the raw character or token match, before snapping; this is what the
    /// floor is checked against.
    pub match_similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Prediction {
    pub args: Vec<GroundedArgument>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Maps each predicted argument onto the minimal token span covering its best match.
///
/// Arguments whose match similarity falls below `floor`, or whose match covers no token,
/// are dropped with a note. A second argument with the same role and span is dropped too.
pub fn ground_prediction(
    pred: &RawPrediction,
    sentence: &Sentence,
    params: &MatchParams,
    floor: f64,
) -> Prediction {
    let offsets = sentence.char_offsets();
    let mut out = Prediction::default();
    for (label, text) in &pred.args {
        let found = match best_match(text, &sentence.text, params) {
            Ok(found) => found,
            Err(e) => {
                out.notes.push(format!("{label} {text:?}: {e}"));
                continue;
            }
        };
        if found.similarity < floor {
            out.notes.push(format!(
                "{label} {text:?}: best match {:?} scores {:.3}, below floor {floor}",
                found.substring, found.similarity
            ));
            continue;
        }
        let span = match params.unit {
            MatchUnit::Character => {
                let covered: Vec<usize> = offsets
                    .iter()
                    .enumerate()
                    .filter(|(_, (ts, te))| *ts < found.end && found.start < *te)
                    .map(|(i, _)| i)
                    .collect();
                covered.first().zip(covered.last()).map(|(s, e)| (*s, *e))
            }
            MatchUnit::Token => (found.end > found.start).then(|| (found.start, found.end - 1)),
        };
        let Some((start, end)) = span else {
            out.notes.push(format!("{label} {text:?}: match covers no token"));
            continue;
        };
        if out
            .args
            .iter()
            .any(|a| &a.label == label && a.start == start && a.end == end)
        {
            out.notes.push(format!("{label} {text:?}: duplicate of an earlier span"));
            continue;
        }
        let surface = sentence.span_text(start, end);
        out.args.push(GroundedArgument {
            label: label.clone(),
            predicted: text.clone(),
            start,
            end,
            surface: surface.clone(),
            similarity: ratio(text, &surface),
            match_similarity: found.similarity,
        });
    }
    out
}
