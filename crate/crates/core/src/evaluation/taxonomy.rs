use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{scoring_set, ScoredTuple};
use crate::corpus::RoleLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub discontinuity: usize,
    pub boundary: usize,
    pub wrong_label: usize,
    pub spurious: usize,
    pub missing: usize,
}

impl ErrorCounts {
    /// Number of false-positive tuples; the first four categories partition them.
    pub fn false_positives(&self) -> usize {
        self.discontinuity + self.boundary + self.wrong_label + self.spurious
    }
}

/// Assigns every unmatched prediction to exactly one category, checked in the order
/// discontinuity, boundary, wrong label, spurious. Unmatched gold tuples are `missing`.
///
/// * discontinuity: the predicted span covers both parts of a gold `X` / `C-X` pair
/// * boundary: a gold tuple with the same role overlaps the predicted span
/// * wrong label: a gold tuple has exactly the predicted span but another role
pub fn classify_errors(pred: &[ScoredTuple], gold: &[ScoredTuple]) -> ErrorCounts {
    let pred = scoring_set(pred);
    let gold = scoring_set(gold);
    let mut counts = ErrorCounts { missing: gold.difference(&pred).count(), ..Default::default() };
    let mut by_instance: HashMap<&str, Vec<&ScoredTuple>> = HashMap::new();
    for g in &gold {
        by_instance.entry(g.instance.as_str()).or_default().push(g);
    }

    for p in pred.difference(&gold) {
        let same_instance = by_instance.get(p.instance.as_str()).map_or(&[][..], Vec::as_slice);
        let spans_split_argument = same_instance.iter().any(|head| {
            p.covers(head)
                && same_instance.iter().any(|tail| {
                    tail.role == RoleLabel::Continuation(Box::new(head.role.clone())) && p.covers(tail)
                })
        });
        if spans_split_argument {
            counts.discontinuity += 1;
        } else if same_instance.iter().any(|g| g.role == p.role && g.overlaps(p)) {
            counts.boundary += 1;
        } else if same_instance.iter().any(|g| g.same_span(p)) {
            counts.wrong_label += 1;
        } else {
            counts.spurious += 1;
        }
    }
    counts
}
