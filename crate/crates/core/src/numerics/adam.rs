use crate::error::{Error, Result};
use crate::numerics::matrix::Mat;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates for one parameter matrix.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub m: Mat<T>,
    pub v: Mat<T>,
    pub t: u64,
    pub config: AdamConfig,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(shape: (usize, usize), config: AdamConfig) -> Self {
        AdamState {
            m: Mat::zeros(shape.0, shape.1),
            v: Mat::zeros(shape.0, shape.1),
            t: 0,
            config,
        }
    }

    /// One bias-corrected Adam update of `param` in place.
    pub fn step(&mut self, param: &mut Mat<T>, grad: &Mat<T>) -> Result<()> {
        if param.shape() != grad.shape() || param.shape() != self.m.shape() {
            return Err(Error::Shape {
                op: "adam_step",
                lhs: param.shape(),
                rhs: grad.shape(),
            });
        }
        self.step_slice(param.as_mut_slice(), grad.as_slice())
    }

    /// Same update over a flat parameter slice whose length matches the
    /// tracked moments.
    pub fn step_slice(&mut self, param: &mut [T], grad: &[T]) -> Result<()> {
        let n = self.m.as_slice().len();
        if param.len() != n || grad.len() != n {
            return Err(Error::Shape {
                op: "adam_step",
                lhs: (param.len(), 1),
                rhs: (grad.len(), 1),
            });
        }
        self.t += 1;
        let c = self.config;
        let b1 = T::lit(c.beta1);
        let b2 = T::lit(c.beta2);
        let one = T::one();
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        let bc1 = one - T::lit(c.beta1.powi(t));
        let bc2 = one - T::lit(c.beta2.powi(t));
        let lr = T::lit(c.lr);
        let eps = T::lit(c.epsilon);
        let m = self.m.as_mut_slice();
        let v = self.v.as_mut_slice();
        for (((p, &g), mi), vi) in param.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mi = b1 * *mi + (one - b1) * g;
            *vi = b2 * *vi + (one - b2) * g * g;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            let step = lr * m_hat / (v_hat.sqrt() + eps);
            if step != T::zero() {
                *p = *p - step;
            }
        }
        Ok(())
    }
}
