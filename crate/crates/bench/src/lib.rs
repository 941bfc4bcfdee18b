//! Deterministic workloads shared by the benches.

use srl_core::evaluation::ScoredTuple;
use srl_core::RoleLabel;

const WORDS: [&str; 12] = [
    "the", "company", "said", "its", "quarterly", "profit", "rose", "sharply", "after", "selling", "two",
    "divisions",
];

/// A sentence of `n` tokens cycling through a small vocabulary.
pub fn sentence(n: usize) -> String {
    (0..n).map(|i| WORDS[(i * 7 + i / 12) % WORDS.len()]).collect::<Vec<_>>().join(" ")
}

/// Gold and predicted tuples over `instances` predicates, with roughly a third of the
/// predictions off by one token or one label.
pub fn tuples(instances: usize) -> (Vec<ScoredTuple>, Vec<ScoredTuple>) {
    let roles = [RoleLabel::core(0), RoleLabel::core(1), RoleLabel::core(2), RoleLabel::adjunct("TMP")];
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for i in 0..instances {
        let id = format!("s{i}:3");
        for (j, role) in roles.iter().enumerate() {
            let start = j * 4;
            gold.push(ScoredTuple::new(&id, role.clone(), start, start + 2));
            match (i + j) % 3 {
                0 => pred.push(ScoredTuple::new(&id, role.clone(), start, start + 3)),
                1 => pred.push(ScoredTuple::new(&id, roles[(j + 1) % roles.len()].clone(), start, start + 2)),
                _ => pred.push(ScoredTuple::new(&id, role.clone(), start, start + 2)),
            }
        }
    }
    (gold, pred)
}
