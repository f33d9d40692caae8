use crate::numerics::matrix::Mat;
use crate::scalar::Scalar;

pub fn relu<T: Scalar>(x: &Mat<T>) -> Mat<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Derivative of [`relu`]; the subgradient at exactly zero is taken as 0.
pub fn relu_grad<T: Scalar>(x: &Mat<T>) -> Mat<T> {
    x.map(|v| if v > T::zero() { T::one() } else { T::zero() })
}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}
