//! Hard-concrete stochastic gates.
//!
//! A gate holds one location parameter `log_alpha[j]` per input dimension.
//! Training draws `u ~ U(0, 1)` and sets
//!
//! ```text
//! s̄ = sigmoid((logit(u) + log_alpha) / beta)
//! s = s̄ · (zeta − gamma) + gamma
//! z = clamp(s, 0, 1)
//! ```
//!
//! Because the stretched interval `(gamma, zeta)` overhangs `[0, 1]`, the
//! clamp puts positive probability on `z = 0` and `z = 1` exactly. A zero
//! gate routes its feature straight to the GLM head; a positive gate feeds
//! it, scaled, into the next hidden layer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{sigmoid, Rng};
use crate::scalar::Scalar;

/// Lower/upper margin for the uniform noise so `logit(u)` stays finite.
pub const NOISE_MARGIN: f64 = 1e-6;

/// Temperature and stretch interval of the relaxed distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConstants {
    pub beta: f64,
    pub gamma: f64,
    pub zeta: f64,
}

impl Default for GateConstants {
    fn default() -> Self {
        GateConstants {
            beta: 2.0 / 3.0,
            gamma: -0.1,
            zeta: 1.1,
        }
    }
}

impl GateConstants {
    pub fn validate(&self) -> Result<()> {
        let ok = self.beta > 0.0
            && self.gamma < 0.0
            && self.zeta > 1.0
            && self.beta.is_finite()
            && self.gamma.is_finite()
            && self.zeta.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "gate constants need beta > 0, gamma < 0, zeta > 1; got {self:?}"
            )))
        }
    }

    /// `beta · ln(−gamma / zeta)`, the shift between `log_alpha` and the
    /// logit of the non-zero probability.
    fn l0_shift(&self) -> f64 {
        self.beta * (-self.gamma / self.zeta).ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardConcreteGate<T> {
    pub log_alpha: Vec<T>,
    pub constants: GateConstants,
}

/// One draw of every gate dimension plus what the backward pass needs.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSample<T> {
    pub u: Vec<T>,
    /// Unstretched sigmoid value `s̄`.
    pub s_bar: Vec<T>,
    /// Stretched pre-clamp value.
    pub s: Vec<T>,
    pub z: Vec<T>,
}

#[inline]
fn clamp01<T: Scalar>(s: T) -> T {
    s.max(T::zero()).min(T::one())
}

impl<T: Scalar> HardConcreteGate<T> {
    pub fn new(log_alpha: Vec<T>, constants: GateConstants) -> Result<Self> {
        constants.validate()?;
        if log_alpha.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("log_alpha".into()));
        }
        Ok(HardConcreteGate {
            log_alpha,
            constants,
        })
    }

    /// Gate of `dim` entries all set to `log_alpha`.
    pub fn constant(dim: usize, log_alpha: f64, constants: GateConstants) -> Result<Self> {
        Self::new(vec![T::lit(log_alpha); dim], constants)
    }

    pub fn dim(&self) -> usize {
        self.log_alpha.len()
    }

    pub fn sample(&self, rng: &mut Rng) -> GateSample<T> {
        let u = (0..self.dim())
            .map(|_| T::lit(rng.next_f64().clamp(NOISE_MARGIN, 1.0 - NOISE_MARGIN)))
            .collect();
        self.sample_with_noise(u)
    }

    /// Deterministic reparameterized transform of given noise values.
    pub fn sample_with_noise(&self, u: Vec<T>) -> GateSample<T> {
        assert_eq!(u.len(), self.dim(), "noise length must match gate dimension");
        let c = self.constants;
        let (beta, gamma) = (T::lit(c.beta), T::lit(c.gamma));
        let stretch = T::lit(c.zeta - c.gamma);
        let mut s_bar = Vec::with_capacity(u.len());
        let mut s = Vec::with_capacity(u.len());
        let mut z = Vec::with_capacity(u.len());
        for (&uj, &la) in u.iter().zip(&self.log_alpha) {
            let logit = (uj / (T::one() - uj)).ln();
            let sb = sigmoid((logit + la) / beta);
            let sj = sb * stretch + gamma;
            s_bar.push(sb);
            s.push(sj);
            z.push(clamp01(sj));
        }
        GateSample { u, s_bar, s, z }
    }

    /// Test-time gate values `clamp(sigmoid(log_alpha)·(zeta − gamma) + gamma, 0, 1)`.
    pub fn deterministic(&self) -> Vec<T> {
        let c = self.constants;
        let stretch = T::lit(c.zeta - c.gamma);
        let gamma = T::lit(c.gamma);
        self.log_alpha
            .iter()
            .map(|&la| clamp01(sigmoid(la) * stretch + gamma))
            .collect()
    }

    /// Number of deterministic gate values that are exactly zero.
    pub fn routed_count(&self) -> usize {
        self.deterministic().iter().filter(|&&z| z == T::zero()).count()
    }

    pub fn open_count(&self) -> usize {
        self.dim() - self.routed_count()
    }

    /// Expected number of non-zero gates, `Σ_j P(z_j ≠ 0)`, with its
    /// gradient with respect to each `log_alpha[j]`.
    pub fn expected_l0(&self) -> (T, Vec<T>) {
        let shift = T::lit(self.constants.l0_shift());
        let mut total = T::zero();
        let mut grad = Vec::with_capacity(self.dim());
        for &la in &self.log_alpha {
            let p = sigmoid(la - shift);
            total = total + p;
            grad.push(p * (T::one() - p));
        }
        (total, grad)
    }

    /// Pulls `dL/dz` back to `dL/dlog_alpha` through the reparameterized
    /// sample. Entries whose pre-clamp value lies outside `(0, 1)` get zero.
    pub fn sample_backward(&self, sample: &GateSample<T>, upstream: &[T]) -> Vec<T> {
        assert_eq!(upstream.len(), self.dim(), "upstream length must match gate dimension");
        let c = self.constants;
        let factor = T::lit((c.zeta - c.gamma) / c.beta);
        sample
            .s
            .iter()
            .zip(&sample.s_bar)
            .zip(upstream)
            .map(|((&s, &sb), &g)| {
                if s > T::zero() && s < T::one() {
                    g * factor * sb * (T::one() - sb)
                } else {
                    T::zero()
                }
            })
            .collect()
    }
}

/// `B(z)`: 1 where the gate is exactly zero, else 0. Piecewise constant, so
/// it contributes no gradient.
pub fn binary_complement<T: Scalar>(z: &[T]) -> Vec<T> {
    z.iter()
        .map(|&v| if v == T::zero() { T::one() } else { T::zero() })
        .collect()
}
