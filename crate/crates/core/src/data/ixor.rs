use crate::error::{Error, Result};
use crate::network::Task;
use crate::numerics::{Mat, Rng};
use crate::scalar::Scalar;

use super::Dataset;

/// `1` when `x¹·x² > 0` and `x³ > 0.5`, else `0`.
pub fn ixor_label(x1: f64, x2: f64, x3: f64) -> f64 {
    if x1 * x2 > 0.0 && x3 > 0.5 {
        1.0
    } else {
        0.0
    }
}

/// Independent-XOR toy data: `x¹, x² ~ U[−2, 2]`, `x³ ~ U[0, 1]`.
pub fn gen_ixor<T: Scalar>(n: usize, seed: u64) -> Result<Dataset<T>> {
    if n == 0 {
        return Err(Error::Argument("IXOR needs n >= 1".into()));
    }
    let mut rng = Rng::new(seed);
    let mut features = Vec::with_capacity(n * 3);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x1 = -2.0 + 4.0 * rng.next_f64();
        let x2 = -2.0 + 4.0 * rng.next_f64();
        let x3 = rng.next_f64();
        features.extend([T::lit(x1), T::lit(x2), T::lit(x3)]);
        labels.push(T::lit(ixor_label(x1, x2, x3)));
    }
    Dataset::new(
        Mat::from_vec(n, 3, features)?,
        labels,
        Task::Binary,
        vec!["x1".into(), "x2".into(), "x3".into()],
    )
}
