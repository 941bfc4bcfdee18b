//! Span-level scoring against gold arguments.
//!
//! A tuple counts as correct only when instance, canonical role and token span all match.
//! V tuples never take part in scoring.

mod kappa;
mod render;
mod taxonomy;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use kappa::{fleiss_kappa, KappaError, RatingMatrix};
pub use taxonomy::{classify_errors, ErrorCounts};

use crate::corpus::{PredicateInstance, RoleLabel};
use crate::matcher::Prediction;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScoredTuple {
    pub instance: String,
    pub role: RoleLabel,
    pub start: usize,
    pub end: usize,
}

impl ScoredTuple {
    pub fn new(instance: impl Into<String>, role: RoleLabel, start: usize, end: usize) -> Self {
        ScoredTuple { instance: instance.into(), role, start, end }
    }

    pub fn same_span(&self, other: &ScoredTuple) -> bool {
        self.start == other.start && self.end == other.end
    }

    pub fn overlaps(&self, other: &ScoredTuple) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn covers(&self, other: &ScoredTuple) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

pub fn gold_tuples(instance: &PredicateInstance) -> Vec<ScoredTuple> {
    let id = instance.id();
    instance
        .gold_args
        .iter()
        .map(|a| ScoredTuple::new(id.clone(), a.label.clone(), a.start, a.end))
        .collect()
}

pub fn predicted_tuples(instance_id: &str, prediction: &Prediction) -> Vec<ScoredTuple> {
    prediction
        .args
        .iter()
        .map(|a| ScoredTuple::new(instance_id, a.label.clone(), a.start, a.end))
        .collect()
}

/// Deduplicated, V-free view of a tuple list.
pub(crate) fn scoring_set(tuples: &[ScoredTuple]) -> BTreeSet<&ScoredTuple> {
    tuples.iter().filter(|t| !t.role.is_verb()).collect()
}

/// Counts and rates for one slice of the data.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Score {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Score {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let rate = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = rate(tp, tp + fp);
        let recall = rate(tp, tp + fn_);
        // 2tp / (2tp + fp + fn) equals 2pr / (p + r) but takes a single rounding step
        let f1 = rate(2 * tp, 2 * tp + fp + fn_);
        Score { tp, fp, fn_, precision, recall, f1 }
    }

    /// Gold support.
    pub fn count(&self) -> usize {
        self.tp + self.fn_
    }
}

pub fn micro_prf(pred: &[ScoredTuple], gold: &[ScoredTuple]) -> Score {
    let pred = scoring_set(pred);
    let gold = scoring_set(gold);
    let tp = pred.intersection(&gold).count();
    Score::from_counts(tp, pred.len() - tp, gold.len() - tp)
}

/// Micro scores restricted to each canonical role; roles absent from both sides are omitted.
pub fn per_role_prf(pred: &[ScoredTuple], gold: &[ScoredTuple]) -> BTreeMap<RoleLabel, Score> {
    let pred = scoring_set(pred);
    let gold = scoring_set(gold);
    let mut counts: BTreeMap<RoleLabel, (usize, usize, usize)> = BTreeMap::new();
    for t in &pred {
        let c = counts.entry(t.role.clone()).or_default();
        if gold.contains(t) {
            c.0 += 1;
        } else {
            c.1 += 1;
        }
    }
    for t in gold.difference(&pred) {
        counts.entry(t.role.clone()).or_default().2 += 1;
    }
    counts
        .into_iter()
        .map(|(role, (tp, fp, fn_))| (role, Score::from_counts(tp, fp, fn_)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SenseAccuracy {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl SenseAccuracy {
    pub fn new(correct: usize, total: usize) -> Self {
        let accuracy = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
        SenseAccuracy { correct, total, accuracy }
    }
}

/// Headline micro scores plus the per-role breakdown and error taxonomy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub per_role: BTreeMap<RoleLabel, Score>,
    pub errors: ErrorCounts,
    /// Only for instances with a gold sense; never part of the headline F1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sense_accuracy: Option<SenseAccuracy>,
}

pub fn evaluate(pred: &[ScoredTuple], gold: &[ScoredTuple]) -> EvalReport {
    let micro = micro_prf(pred, gold);
    EvalReport {
        precision: micro.precision,
        recall: micro.recall,
        f1: micro.f1,
        tp: micro.tp,
        fp: micro.fp,
        fn_: micro.fn_,
        per_role: per_role_prf(pred, gold),
        errors: classify_errors(pred, gold),
        sense_accuracy: None,
    }
}

impl EvalReport {
    pub fn micro(&self) -> Score {
        Score::from_counts(self.tp, self.fp, self.fn_)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(inst: &str, role: &str, start: usize, end: usize) -> ScoredTuple {
        ScoredTuple::new(inst, RoleLabel::parse(role).unwrap(), start, end)
    }

    #[test]
    fn perfect_prediction() {
        let gold = vec![t("a", "A0", 0, 0), t("a", "A1", 2, 3), t("b", "TMP", 1, 1), t("b", "A0", 0, 0)];
        let s = micro_prf(&gold, &gold);
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn half_right() {
        let gold = vec![t("a", "A0", 0, 0), t("a", "A1", 2, 3)];
        let pred = vec![t("a", "A0", 0, 0), t("a", "A1", 1, 3)];
        let s = micro_prf(&pred, &gold);
        assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn empty_prediction() {
        let gold = vec![t("a", "A0", 0, 0)];
        let s = micro_prf(&[], &gold);
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        assert_eq!(micro_prf(&[], &[]), Score::default());
    }

    #[test]
    fn verb_tuples_and_duplicates_ignored() {
        let gold = vec![t("a", "A0", 0, 0), t("a", "V", 1, 1)];
        let pred = vec![t("a", "A0", 0, 0), t("a", "A0", 0, 0), t("a", "V", 1, 1)];
        assert_eq!(micro_prf(&pred, &gold), Score::from_counts(1, 0, 0));
    }

    #[test]
    fn per_role_cells() {
        let gold = vec![t("a", "A0", 0, 0), t("b", "A0", 0, 1), t("a", "A1", 2, 3)];
        let pred = vec![t("a", "A0", 0, 0), t("b", "A0", 0, 1), t("a", "A1", 2, 2)];
        let roles = per_role_prf(&pred, &gold);
        assert_eq!(roles[&RoleLabel::core(0)].f1, 1.0);
        assert_eq!(roles[&RoleLabel::core(1)].f1, 0.0);
        assert!(!roles.contains_key(&RoleLabel::adjunct("TMP")));
    }

    #[test]
    fn report_json_round_trip() {
        let gold = vec![t("a", "A0", 0, 0), t("a", "C-A1", 2, 3)];
        let pred = vec![t("a", "A0", 0, 1)];
        let report = evaluate(&pred, &gold);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"C-A1\""));
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    fn arb_tuples() -> impl Strategy<Value = Vec<ScoredTuple>> {
        let role = proptest::sample::select(vec!["A0", "A1", "TMP", "C-A1", "LOC"]);
        proptest::collection::vec(
            (0u8..3, role, 0usize..5, 0usize..3).prop_map(|(i, r, s, len)| t(&format!("i{i}"), r, s, s + len)),
            0..25,
        )
    }

    proptest! {
        #[test]
        fn swap_exchanges_precision_and_recall(pred in arb_tuples(), gold in arb_tuples()) {
            let a = micro_prf(&pred, &gold);
            let b = micro_prf(&gold, &pred);
            prop_assert_eq!(a.precision, b.recall);
            prop_assert_eq!(a.recall, b.precision);
            prop_assert_eq!(a.f1, b.f1);
        }

        #[test]
        fn per_role_counts_recombine(pred in arb_tuples(), gold in arb_tuples()) {
            let micro = micro_prf(&pred, &gold);
            let roles = per_role_prf(&pred, &gold);
            let (tp, fp, fn_) = roles.values().fold((0, 0, 0), |acc, s| (acc.0 + s.tp, acc.1 + s.fp, acc.2 + s.fn_));
            prop_assert_eq!(Score::from_counts(tp, fp, fn_), micro);
        }

        #[test]
        fn order_does_not_matter(mut pred in arb_tuples(), gold in arb_tuples()) {
            let before = evaluate(&pred, &gold);
            pred.reverse();
            prop_assert_eq!(evaluate(&pred, &gold), before);
        }

        #[test]
        fn f1_is_harmonic_mean(pred in arb_tuples(), gold in arb_tuples()) {
            let s = micro_prf(&pred, &gold);
            if s.precision + s.recall > 0.0 {
                let expected = 2.0 * s.precision * s.recall / (s.precision + s.recall);
                prop_assert!((s.f1 - expected).abs() < 1e-12);
            } else {
                prop_assert_eq!(s.f1, 0.0);
            }
        }
    }
}
