use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KappaError {
    #[error("need at least 2 items, got {0}")]
    TooFewItems(usize),
    #[error("need at least 2 raters per item, got {0}")]
    TooFewRaters(u64),
    #[error("need at least 1 category")]
    NoCategories,
    #[error("row {row} has {found} ratings, expected {expected}")]
    RaggedRow { row: usize, found: u64, expected: u64 },
    #[error("row {row} has {found} categories, expected {expected}")]
    RaggedCategories { row: usize, found: usize, expected: usize },
    #[error("expected agreement is 1; kappa is undefined")]
    DegenerateAgreement,
}

/// `counts[i][j]` is how many raters put item `i` in category `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingMatrix {
    counts: Vec<Vec<u64>>,
}

impl RatingMatrix {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self, KappaError> {
        if counts.len() < 2 {
            return Err(KappaError::TooFewItems(counts.len()));
        }
        let categories = counts[0].len();
        if categories == 0 {
            return Err(KappaError::NoCategories);
        }
        let raters: u64 = counts[0].iter().sum();
        if raters < 2 {
            return Err(KappaError::TooFewRaters(raters));
        }
        for (row, r) in counts.iter().enumerate() {
            if r.len() != categories {
                return Err(KappaError::RaggedCategories { row, found: r.len(), expected: categories });
            }
            let found: u64 = r.iter().sum();
            if found != raters {
                return Err(KappaError::RaggedRow { row, found, expected: raters });
            }
        }
        Ok(RatingMatrix { counts })
    }

    /// Builds the matrix from per-item label lists (`labels[i][rater]`).
    pub fn from_labels(labels: &[Vec<usize>], categories: usize) -> Result<Self, KappaError> {
        let counts = labels
            .iter()
            .map(|item| {
                let mut row = vec![0u64; categories];
                for &l in item {
                    row[l] += 1;
                }
                row
            })
            .collect();
        Self::new(counts)
    }

    pub fn items(&self) -> usize {
        self.counts.len()
    }

    pub fn raters(&self) -> u64 {
        self.counts[0].iter().sum()
    }
}

/// Fleiss' kappa: `(P_bar - P_e) / (1 - P_e)`.
pub fn fleiss_kappa(m: &RatingMatrix) -> Result<f64, KappaError> {
    let items = m.items() as f64;
    let n = m.raters() as f64;
    let categories = m.counts[0].len();

    let mut column_totals = vec![0u64; categories];
    let mut agreement_sum = 0.0;
    for row in &m.counts {
        let squares: u64 = row.iter().map(|&c| c * c).sum();
        agreement_sum += (squares as f64 - n) / (n * (n - 1.0));
        for (total, &c) in column_totals.iter_mut().zip(row) {
            *total += c;
        }
    }
    let p_bar = agreement_sum / items;
    let p_e: f64 = column_totals
        .iter()
        .map(|&t| {
            let p = t as f64 / (items * n);
            p * p
        })
        .sum();
    if (1.0 - p_e).abs() < f64::EPSILON {
        return Err(KappaError::DegenerateAgreement);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_agreement() {
        let m = RatingMatrix::new(vec![vec![3, 0], vec![0, 3], vec![3, 0]]).unwrap();
        assert_eq!(fleiss_kappa(&m).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_matrix() {
        // p = (1/2, 1/2), P_e = 1/2; P_i = (1, 0, 1), P_bar = 2/3; kappa = (2/3 - 1/2) / (1/2)
        let m = RatingMatrix::new(vec![vec![2, 0], vec![1, 1], vec![0, 2]]).unwrap();
        assert!((fleiss_kappa(&m).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fleiss_1971_example() {
        // the 10-item, 14-rater, 5-category table from Fleiss (1971); kappa = 0.20993
        let rows = vec![
            vec![0, 0, 0, 0, 14],
            vec![0, 2, 6, 4, 2],
            vec![0, 0, 3, 5, 6],
            vec![0, 3, 9, 2, 0],
            vec![2, 2, 8, 1, 1],
            vec![7, 7, 0, 0, 0],
            vec![3, 2, 6, 3, 0],
            vec![2, 5, 3, 2, 2],
            vec![6, 5, 2, 1, 0],
            vec![0, 2, 2, 3, 7],
        ];
        let k = fleiss_kappa(&RatingMatrix::new(rows).unwrap()).unwrap();
        assert!((k - 0.20993).abs() < 5e-5, "{k}");
    }

    #[test]
    fn degenerate_and_invalid() {
        let all_same = RatingMatrix::new(vec![vec![2, 0], vec![2, 0]]).unwrap();
        assert_eq!(fleiss_kappa(&all_same), Err(KappaError::DegenerateAgreement));
        assert_eq!(RatingMatrix::new(vec![vec![2, 0]]), Err(KappaError::TooFewItems(1)));
        assert_eq!(RatingMatrix::new(vec![vec![1, 0], vec![0, 1]]), Err(KappaError::TooFewRaters(1)));
        assert!(matches!(
            RatingMatrix::new(vec![vec![2, 0], vec![1, 0]]),
            Err(KappaError::RaggedRow { row: 1, .. })
        ));
    }

    #[test]
    fn from_labels_counts() {
        let m = RatingMatrix::from_labels(&[vec![0, 0, 1], vec![1, 1, 1]], 2).unwrap();
        assert_eq!(m.counts, vec![vec![2, 1], vec![0, 3]]);
    }
}
