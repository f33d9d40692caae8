use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::matrix::Mat;
use crate::scalar::Scalar;

/// Training loss. The cross-entropy kinds take logits and fuse their link
/// function into the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean over batch and output columns of `(output − target)²`.
    Mse,
    /// Sigmoid cross-entropy on an `N × 1` logit column, targets in {0, 1}.
    BinaryCrossEntropy,
    /// Softmax cross-entropy on `N × C` logits, targets an `N × 1` column of
    /// class indices.
    SoftmaxCrossEntropy,
}

/// Mean loss over the batch and its gradient with respect to the pre-link
/// output.
pub fn loss_and_grad<T: Scalar>(
    kind: LossKind,
    output: &Mat<T>,
    target: &Mat<T>,
) -> Result<(T, Mat<T>)> {
    if !output.is_finite() {
        return Err(Error::NonFinite("loss input".into()));
    }
    let n = output.rows();
    if n == 0 {
        return Err(Error::Argument("empty batch".into()));
    }
    match kind {
        LossKind::Mse => {
            if output.shape() != target.shape() {
                return Err(Error::Shape {
                    op: "mse",
                    lhs: output.shape(),
                    rhs: target.shape(),
                });
            }
            let count = T::from_usize(output.as_slice().len()).unwrap();
            let diff = output.sub(target)?;
            let loss = diff.as_slice().iter().map(|&d| d * d).sum::<T>() / count;
            let two = T::lit(2.0);
            Ok((loss, diff.map(|d| two * d / count)))
        }
        LossKind::BinaryCrossEntropy => {
            if output.cols() != 1 || target.shape() != (n, 1) {
                return Err(Error::Shape {
                    op: "binary_cross_entropy",
                    lhs: output.shape(),
                    rhs: target.shape(),
                });
            }
            let nt = T::from_usize(n).unwrap();
            let mut grad = Mat::zeros(n, 1);
            let mut total = T::zero();
            for i in 0..n {
                let z = output.get(i, 0);
                let y = target.get(i, 0);
                if y != T::zero() && y != T::one() {
                    return Err(Error::Range(format!("binary target {y} at row {i}")));
                }
                // softplus(z) − y·z, written to avoid overflow for large |z|
                let softplus = z.max(T::zero()) + (-z.abs()).exp().ln_1p();
                total = total + softplus - y * z;
                grad.set(i, 0, (crate::numerics::activation::sigmoid(z) - y) / nt);
            }
            Ok((total / nt, grad))
        }
        LossKind::SoftmaxCrossEntropy => {
            if target.shape() != (n, 1) {
                return Err(Error::Shape {
                    op: "softmax_cross_entropy",
                    lhs: output.shape(),
                    rhs: target.shape(),
                });
            }
            let classes = output.cols();
            let nt = T::from_usize(n).unwrap();
            let mut grad = Mat::zeros(n, classes);
            let mut total = T::zero();
            for i in 0..n {
                let class = class_index(target.get(i, 0), classes, i)?;
                let row = output.row(i);
                let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
                let sum_exp: T = row.iter().map(|&v| (v - max).exp()).sum();
                let log_z = max + sum_exp.ln();
                total = total + log_z - row[class];
                let g = grad.row_mut(i);
                for (c, gc) in g.iter_mut().enumerate() {
                    let p = (row[c] - log_z).exp();
                    let y = if c == class { T::one() } else { T::zero() };
                    *gc = (p - y) / nt;
                }
            }
            Ok((total / nt, grad))
        }
    }
}

fn class_index<T: Scalar>(v: T, classes: usize, row: usize) -> Result<usize> {
    let idx = v.to_usize();
    match idx {
        Some(c) if c < classes && T::from_usize(c) == Some(v) => Ok(c),
        _ => Err(Error::Range(format!(
            "class index {v} at row {row} outside 0..{classes}"
        ))),
    }
}
