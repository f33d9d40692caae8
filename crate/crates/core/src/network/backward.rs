use crate::error::{Error, Result};
use crate::gates::binary_complement;
use crate::numerics::{loss_and_grad, relu_grad, Mat, Rng};
use crate::scalar::Scalar;

use super::forward::{forward_train, ForwardCache};
use super::{FeatureLevelNet, Mode};

/// Gradients of the objective for every parameter of a [`FeatureLevelNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    /// `(dW_k, db_k)` per hidden layer.
    pub layers: Vec<(Mat<T>, Mat<T>)>,
    pub head_weights: Mat<T>,
    pub head_bias: Mat<T>,
    pub log_alpha: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    /// Borrowed slices in [`FeatureLevelNet::parameters_mut`] order.
    pub fn flat(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = Vec::new();
        for (w, b) in &self.layers {
            out.push(w.as_slice());
            out.push(b.as_slice());
        }
        out.push(self.head_weights.as_slice());
        out.push(self.head_bias.as_slice());
        for la in &self.log_alpha {
            out.push(la);
        }
        out
    }
}

/// Forward state plus the pieces of the objective needed for backward.
#[derive(Debug, Clone)]
pub struct ObjectiveCache<T> {
    pub forward: ForwardCache<T>,
    pub data_loss: T,
    /// `(λ/K)·Σ_k expected_l0(gate_k)`; zero in baseline mode.
    pub penalty: T,
    pub lambda: T,
    /// Loss gradient with respect to the head logits.
    pub logit_grad: Mat<T>,
}

impl<T: Scalar> ObjectiveCache<T> {
    pub fn value(&self) -> T {
        self.data_loss + self.penalty
    }
}

/// Mean data loss over the batch plus `(λ/K)·Σ_k Σ_j P(z_kj ≠ 0)`, using
/// sampled gates.
pub fn objective<T: Scalar>(
    net: &FeatureLevelNet<T>,
    batch: &Mat<T>,
    targets: &Mat<T>,
    lambda: T,
    rng: &mut Rng,
) -> Result<(T, ObjectiveCache<T>)> {
    let (_, forward) = forward_train(net, batch, rng)?;
    objective_from_forward(net, forward, targets, lambda)
}

/// Objective for an already computed forward pass (fixed noise or fixed
/// gates).
pub fn objective_from_forward<T: Scalar>(
    net: &FeatureLevelNet<T>,
    forward: ForwardCache<T>,
    targets: &Mat<T>,
    lambda: T,
) -> Result<(T, ObjectiveCache<T>)> {
    if !(lambda >= T::zero()) {
        return Err(Error::Argument(format!("lambda must be >= 0, got {lambda}")));
    }
    let (data_loss, logit_grad) = loss_and_grad(net.head.link.loss(), &forward.logits, targets)?;
    let penalty = match net.mode {
        Mode::Baseline => T::zero(),
        Mode::Proposed => {
            let k = T::from_usize(net.depth()).unwrap();
            let total: T = net.gates.iter().map(|g| g.expected_l0().0).sum();
            lambda / k * total
        }
    };
    let cache = ObjectiveCache {
        forward,
        data_loss,
        penalty,
        lambda,
        logit_grad,
    };
    Ok((cache.value(), cache))
}

/// Reverse-mode gradients of the objective. `B(z)` is treated as constant;
/// each gate value receives gradient only through the hidden path
/// `z ⊙ h_{k−1}`, and log-alpha additionally receives the penalty gradient.
/// Gates given directly (no samples) get only the penalty term.
pub fn backward<T: Scalar>(net: &FeatureLevelNet<T>, cache: &ObjectiveCache<T>) -> Result<Gradients<T>> {
    let fc = &cache.forward;
    let k = net.depth();
    let dlogits = &cache.logit_grad;

    let head_weights = dlogits.t_matmul(&fc.glm_input)?;
    let head_bias = dlogits.sum_rows();
    let d_glm = dlogits.matmul(&net.head.weights)?;

    // upstream into h_K comes only from the final GLM group
    let mut d_hidden = d_glm.column_block(net.head.group_offsets[k], net.head.group_offsets[k + 1]);
    let mut layers = vec![None; k];
    let mut d_z = vec![Vec::new(); k];
    for level in (0..k).rev() {
        let layer = &net.layers[level];
        let d_pre = d_hidden.hadamard(&relu_grad(&fc.pre[level]))?;
        let dw = d_pre.t_matmul(&fc.gated[level])?;
        let db = d_pre.sum_rows();
        layers[level] = Some((dw, db));
        let d_gated = d_pre.matmul(&layer.weights)?;

        let zk = &fc.z[level];
        let h_prev = &fc.hidden[level];
        let mut dz = vec![T::zero(); zk.len()];
        for r in 0..h_prev.rows() {
            for ((acc, &g), &h) in dz.iter_mut().zip(d_gated.row(r)).zip(h_prev.row(r)) {
                *acc = *acc + g * h;
            }
        }
        d_z[level] = dz;

        if level > 0 {
            let range = net.head.group(level);
            let d_pass = d_glm.column_block(range.start, range.end);
            let via_gate = d_gated.scale_columns(zk)?;
            let via_pass = d_pass.scale_columns(&binary_complement(zk))?;
            d_hidden = via_gate.add(&via_pass)?;
        }
    }

    let log_alpha = match net.mode {
        Mode::Baseline => net.gates.iter().map(|g| vec![T::zero(); g.dim()]).collect(),
        Mode::Proposed => {
            let scale = cache.lambda / T::from_usize(k).unwrap();
            net.gates
                .iter()
                .enumerate()
                .map(|(i, gate)| {
                    let (_, pen) = gate.expected_l0();
                    let through_sample = match &fc.samples {
                        Some(samples) => gate.sample_backward(&samples[i], &d_z[i]),
                        None => vec![T::zero(); gate.dim()],
                    };
                    through_sample
                        .iter()
                        .zip(pen)
                        .map(|(&s, p)| s + scale * p)
                        .collect()
                })
                .collect()
        }
    };

    Ok(Gradients {
        layers: layers.into_iter().map(Option::unwrap).collect(),
        head_weights,
        head_bias,
        log_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::GateConstants;
    use crate::network::forward::forward_with_gates;
    use crate::network::Task;

    #[test]
    fn objective_penalty_hand_value() {
        let mut rng = Rng::new(2);
        let mut net = FeatureLevelNet::<f64>::init(
            1,
            &[3],
            1,
            Task::Regression,
            Mode::Proposed,
            GateConstants::default(),
            &mut rng,
        )
        .unwrap();
        net.gates[0].log_alpha = vec![0.0];
        let x = Mat::column(vec![0.3, -0.7]).unwrap();
        let y = Mat::column(vec![1.0, 2.0]).unwrap();
        let (_, fwd) = forward_with_gates(&net, &x, vec![vec![0.5]]).unwrap();
        let (v0, c0) = objective_from_forward(&net, fwd.clone(), &y, 0.0).unwrap();
        assert_eq!(v0, c0.data_loss);
        let (v1, c1) = objective_from_forward(&net, fwd.clone(), &y, 0.1).unwrap();
        assert!((v1 - c1.data_loss - 0.1 * 0.83183).abs() < 1e-6);
        let (v2, _) = objective_from_forward(&net, fwd, &y, 0.2).unwrap();
        assert!(((v2 - c1.data_loss) / (v1 - c1.data_loss) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn negative_lambda_rejected() {
        let mut rng = Rng::new(2);
        let net = FeatureLevelNet::<f64>::init(
            1,
            &[1],
            1,
            Task::Regression,
            Mode::Proposed,
            GateConstants::default(),
            &mut rng,
        )
        .unwrap();
        let x = Mat::column(vec![0.3]).unwrap();
        assert!(objective(&net, &x, &x, -1.0, &mut rng).is_err());
    }

    #[test]
    fn zero_loss_gradient_leaves_only_penalty() {
        let mut rng = Rng::new(6);
        let net = FeatureLevelNet::<f64>::init(
            3,
            &[4, 2],
            1,
            Task::Regression,
            Mode::Proposed,
            GateConstants::default(),
            &mut rng,
        )
        .unwrap();
        // zero head ⇒ output 0; zero targets ⇒ zero loss gradient
        let x = Mat::from_vec(5, 3, rng.uniform(15, -1.0, 1.0).unwrap()).unwrap();
        let y = Mat::zeros(5, 1);
        let lambda = 0.3;
        let (_, cache) = objective(&net, &x, &y, lambda, &mut rng).unwrap();
        let g = backward(&net, &cache).unwrap();
        for (w, b) in &g.layers {
            assert!(w.as_slice().iter().chain(b.as_slice()).all(|&v| v == 0.0));
        }
        assert!(g.head_weights.as_slice().iter().all(|&v| v == 0.0));
        for (gate, la) in net.gates.iter().zip(&g.log_alpha) {
            let (_, pen) = gate.expected_l0();
            for (a, p) in la.iter().zip(pen) {
                assert_eq!(*a, lambda / 2.0 * p);
            }
        }
    }
}
