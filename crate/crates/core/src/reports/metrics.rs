use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Task;
use crate::numerics::Mat;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    Rmse,
    Auc,
}

impl MetricKind {
    pub fn default_for(task: Task) -> Self {
        match task {
            Task::Regression => MetricKind::Rmse,
            Task::Binary | Task::Multiclass => MetricKind::Accuracy,
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, MetricKind::Rmse)
    }
}

/// Evaluates `kind` on post-link model outputs against per-row targets.
pub fn metric<T: Scalar>(kind: MetricKind, outputs: &Mat<T>, targets: &[T]) -> Result<f64> {
    if outputs.rows() != targets.len() {
        return Err(Error::Shape {
            op: "metric",
            lhs: outputs.shape(),
            rhs: (targets.len(), 1),
        });
    }
    if targets.is_empty() {
        return Err(Error::UndefinedMetric("no samples".into()));
    }
    match kind {
        MetricKind::Accuracy => Ok(accuracy(outputs, targets)),
        MetricKind::Rmse => rmse(outputs, targets),
        MetricKind::Auc => {
            let col = match outputs.cols() {
                1 => 0,
                2 => 1,
                c => {
                    return Err(Error::UndefinedMetric(format!(
                        "AUC needs 1 or 2 output columns, got {c}"
                    )))
                }
            };
            let scores: Vec<f64> = outputs.column_values(col).iter().map(|v| v.as_f64()).collect();
            let labels: Vec<bool> = targets.iter().map(|&t| t > T::lit(0.5)).collect();
            auc(&scores, &labels)
        }
    }
}

/// Fraction of rows whose predicted class matches the target. One output
/// column is read as a probability thresholded at 0.5; otherwise the first
/// maximal column wins.
pub fn accuracy<T: Scalar>(outputs: &Mat<T>, targets: &[T]) -> f64 {
    let hits = (0..outputs.rows())
        .filter(|&r| {
            let row = outputs.row(r);
            let predicted = if row.len() == 1 {
                if row[0] >= T::lit(0.5) {
                    1
                } else {
                    0
                }
            } else {
                row.iter()
                    .enumerate()
                    .fold((0, T::neg_infinity()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
                    .0
            };
            targets[r].to_usize() == Some(predicted)
        })
        .count();
    hits as f64 / outputs.rows() as f64
}

pub fn rmse<T: Scalar>(outputs: &Mat<T>, targets: &[T]) -> Result<f64> {
    if outputs.cols() != 1 {
        return Err(Error::UndefinedMetric(format!(
            "RMSE expects one output column, got {}",
            outputs.cols()
        )));
    }
    let mse = outputs
        .as_slice()
        .iter()
        .zip(targets)
        .map(|(&o, &t)| {
            let d = (o - t).as_f64();
            d * d
        })
        .sum::<f64>()
        / targets.len() as f64;
    Ok(mse.sqrt())
}

/// Area under the ROC curve as the Mann-Whitney statistic
/// `P(score_pos > score_neg) + ½·P(tie)`, computed from tie-averaged ranks.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape {
            op: "auc",
            lhs: (scores.len(), 1),
            rhs: (labels.len(), 1),
        });
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes present".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("AUC scores".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    // twice the rank sum of positives; tied blocks share the mean rank
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1, mean = (i + j + 2) / 2
        let twice_mean = (i + j + 2) as u128;
        let block_pos = order[i..=j].iter().filter(|&&k| labels[k]).count() as u128;
        twice_rank_sum += block_pos * twice_mean;
        i = j + 1;
    }
    let (p, n) = (pos as u128, neg as u128);
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2 * p * n) as f64)
}

/// All-pairs reference for [`auc`].
pub fn auc_brute_force(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let mut twice_wins: u128 = 0;
    let (mut p, mut n) = (0u128, 0u128);
    for (i, &li) in labels.iter().enumerate() {
        if li {
            p += 1;
        } else {
            n += 1;
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            twice_wins += match scores[i].partial_cmp(&scores[j]) {
                Some(Ordering::Greater) => 2,
                Some(Ordering::Equal) => 1,
                _ => 0,
            };
        }
    }
    if p == 0 || n == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes present".into()));
    }
    Ok(twice_wins as f64 / (2 * p * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictions() {
        let out = Mat::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        assert_eq!(metric(MetricKind::Accuracy, &out, &[0.0, 1.0]).unwrap(), 1.0);
        let reg = Mat::column(vec![1.5, -2.0]).unwrap();
        assert_eq!(metric(MetricKind::Rmse, &reg, &[1.5, -2.0]).unwrap(), 0.0);
        let single = Mat::column(vec![0.7, 0.2]).unwrap();
        assert_eq!(accuracy(&single, &[1.0, 0.0]), 1.0);
    }

    #[test]
    fn auc_hand_cases() {
        assert_eq!(auc(&[0.9, 0.8, 0.3], &[true, false, true]).unwrap(), 0.5);
        assert_eq!(auc(&[0.4; 6], &[true, false, true, false, false, true]).unwrap(), 0.5);
        assert_eq!(auc(&[0.1, 0.9], &[false, true]).unwrap(), 1.0);
        assert!(matches!(auc(&[0.1, 0.2], &[true, true]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn auc_from_two_column_output() {
        let out = Mat::from_rows(&[vec![0.1, 0.9], vec![0.2, 0.8], vec![0.7, 0.3]]).unwrap();
        assert_eq!(metric(MetricKind::Auc, &out, &[1.0, 0.0, 1.0]).unwrap(), 0.5);
    }

    #[test]
    fn rmse_hand_value() {
        let out = Mat::column(vec![1.0, 3.0]).unwrap();
        assert!((rmse(&out, &[0.0, 0.0]).unwrap() - 5.0f64.sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn auc_equals_all_pairs(
            data in prop::collection::vec((0u8..20, any::<bool>()), 2..500)
        ) {
            let scores: Vec<f64> = data.iter().map(|(s, _)| *s as f64 / 7.0).collect();
            let labels: Vec<bool> = data.iter().map(|(_, l)| *l).collect();
            match (auc(&scores, &labels), auc_brute_force(&scores, &labels)) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
            }
        }
    }
}
