//! Edge-level scoring of an inferred graph against a ground truth.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::events::Graph;

/// Precision/recall/F1 over directed edges.
///
/// Corner conventions (the harmonic mean leaves them open): an empty
/// prediction has precision 0, an empty truth has recall 0, and F1 is 0
/// whenever precision + recall is 0 — except that an empty prediction
/// against an empty truth scores a perfect 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp_count: usize,
    pub predicted_count: usize,
    pub truth_count: usize,
}

pub fn score(predicted: &Graph, truth: &Graph) -> Result<ScoreReport> {
    let p = predicted.dims();
    if truth.dims() != p {
        return Err(Error::DimensionMismatch(format!(
            "predicted graph is {}x{}, truth is {}x{}",
            p,
            p,
            truth.dims(),
            truth.dims()
        )));
    }
    let mut tp = 0usize;
    for i in 0..p {
        for j in 0..p {
            if predicted.get(i, j) == 1 && truth.get(i, j) == 1 {
                tp += 1;
            }
        }
    }
    let predicted_count = predicted.edge_count();
    let truth_count = truth.edge_count();
    if predicted_count == 0 && truth_count == 0 {
        return Ok(ScoreReport {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
            tp_count: 0,
            predicted_count,
            truth_count,
        });
    }
    let precision = if predicted_count == 0 {
        0.0
    } else {
        tp as f64 / predicted_count as f64
    };
    let recall = if truth_count == 0 {
        0.0
    } else {
        tp as f64 / truth_count as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ScoreReport {
        precision,
        recall,
        f1,
        tp_count: tp,
        predicted_count,
        truth_count,
    })
}

/// Sample mean and standard deviation (divisor `N - 1`) of the F1 scores,
/// plus the mean recall ("TP score" of the prior sweeps).
pub fn aggregate(reports: &[ScoreReport]) -> (f64, f64, f64) {
    let n = reports.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = reports.iter().map(|r| r.f1).sum::<f64>() / n as f64;
    let std = if n > 1 {
        let ss = reports.iter().map(|r| (r.f1 - mean).powi(2)).sum::<f64>();
        (ss / (n as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    let mean_tp = reports.iter().map(|r| r.recall).sum::<f64>() / n as f64;
    (mean, std, mean_tp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn graph(rows: &[&[u8]]) -> Graph {
        Graph::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn perfect_prediction() {
        let mut truth = Graph::empty(7);
        truth.set(0, 0, 1);
        for i in 0..6 {
            truth.set(i + 1, i, 1);
        }
        let r = score(&truth, &truth).unwrap();
        assert_eq!(r.tp_count, 7);
        assert_relative_eq!(r.precision, 1.0);
        assert_relative_eq!(r.recall, 1.0);
        assert_relative_eq!(r.f1, 1.0);
    }

    #[test]
    fn empty_prediction_scores_zero() {
        let mut truth = Graph::empty(7);
        truth.set(0, 0, 1);
        for i in 0..6 {
            truth.set(i + 1, i, 1);
        }
        let r = score(&Graph::empty(7), &truth).unwrap();
        assert_eq!(r.recall, 0.0);
        assert_eq!(r.f1, 0.0);
    }

    #[test]
    fn hand_counted_cascade_example() {
        // Truth p=3 cascade: edges (1,1), (2,1), (3,2).
        let truth = graph(&[&[1, 0, 0], &[1, 0, 0], &[0, 1, 0]]);
        // Predicted: {(1,1), (2,1)}.
        let predicted = graph(&[&[1, 0, 0], &[1, 0, 0], &[0, 0, 0]]);
        let r = score(&predicted, &truth).unwrap();
        assert_eq!(r.tp_count, 2);
        assert_relative_eq!(r.precision, 1.0);
        assert_relative_eq!(r.recall, 2.0 / 3.0);
        assert_relative_eq!(r.f1, 0.8);
    }

    #[test]
    fn empty_empty_scores_one() {
        let r = score(&Graph::empty(3), &Graph::empty(3)).unwrap();
        assert_relative_eq!(r.f1, 1.0);
    }

    #[test]
    fn swapping_arguments_swaps_precision_and_recall() {
        let a = graph(&[&[1, 1], &[0, 0]]);
        let b = graph(&[&[1, 0], &[1, 0]]);
        let ab = score(&a, &b).unwrap();
        let ba = score(&b, &a).unwrap();
        assert_relative_eq!(ab.precision, ba.recall);
        assert_relative_eq!(ab.recall, ba.precision);
        assert_relative_eq!(ab.f1, ba.f1);
    }

    #[test]
    fn f1_invariant_under_joint_permutation() {
        let truth = graph(&[&[1, 0, 0], &[1, 0, 0], &[0, 1, 0]]);
        let predicted = graph(&[&[1, 0, 0], &[0, 0, 1], &[0, 1, 0]]);
        let perm = [2usize, 0, 1];
        let permute = |g: &Graph| {
            let mut out = Graph::empty(3);
            for i in 0..3 {
                for j in 0..3 {
                    out.set(perm[i], perm[j], g.get(i, j));
                }
            }
            out
        };
        let base = score(&predicted, &truth).unwrap();
        let perm_score = score(&permute(&predicted), &permute(&truth)).unwrap();
        assert_relative_eq!(base.f1, perm_score.f1);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(score(&Graph::empty(2), &Graph::empty(3)).is_err());
    }

    #[test]
    fn aggregate_mean_std() {
        let mk = |f1: f64| ScoreReport {
            precision: f1,
            recall: f1,
            f1,
            tp_count: 0,
            predicted_count: 0,
            truth_count: 0,
        };
        let (m, s, _) = aggregate(&[mk(0.7)]);
        assert_relative_eq!(m, 0.7);
        assert_eq!(s, 0.0);
        let (m, s, _) = aggregate(&[mk(0.8), mk(1.0)]);
        assert_relative_eq!(m, 0.9);
        assert_relative_eq!(s, 0.1414213562, epsilon = 1e-9);
    }

    #[test]
    fn aggregate_matches_external_recomputation() {
        // Values cross-checked in a spreadsheet.
        let f1s = [0.62, 0.97, 0.45, 0.88, 0.73, 0.51, 0.99, 0.64, 0.70, 0.82];
        let reports: Vec<ScoreReport> = f1s
            .iter()
            .map(|&f1| ScoreReport {
                precision: 0.0,
                recall: 0.5,
                f1,
                tp_count: 0,
                predicted_count: 0,
                truth_count: 0,
            })
            .collect();
        let (m, s, tp) = aggregate(&reports);
        assert_relative_eq!(m, 0.731, epsilon = 1e-12);
        assert_relative_eq!(s, 0.1836936, epsilon = 1e-6);
        assert_relative_eq!(tp, 0.5);
    }
}
