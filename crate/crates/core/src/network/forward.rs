use crate::error::{Error, Result};
use crate::gates::{binary_complement, GateSample};
use crate::numerics::{relu, Mat, Rng};
use crate::scalar::Scalar;

use super::{FeatureLevelNet, Mode};

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// Gate values used for each level.
    pub z: Vec<Vec<T>>,
    /// Reparameterized samples; `None` when gates were given directly.
    pub samples: Option<Vec<GateSample<T>>>,
    /// `h_0 = x, h_1, …, h_K`.
    pub hidden: Vec<Mat<T>>,
    /// Gated inputs `z_k ⊙ h_{k−1}`.
    pub gated: Vec<Mat<T>>,
    /// Pre-activations of each hidden layer.
    pub pre: Vec<Mat<T>>,
    /// `[pass_1, …, pass_K, h_K]`.
    pub glm_input: Mat<T>,
    pub logits: Mat<T>,
}

/// Forward pass with sampled gates (one noise vector per gate for the whole
/// batch). In baseline mode the gates are pinned to one and no noise is
/// drawn. Returns the post-link output.
pub fn forward_train<T: Scalar>(
    net: &FeatureLevelNet<T>,
    batch: &Mat<T>,
    rng: &mut Rng,
) -> Result<(Mat<T>, ForwardCache<T>)> {
    match net.mode {
        Mode::Baseline => forward_with_gates(net, batch, net.eval_gates()),
        Mode::Proposed => {
            let samples: Vec<_> = net.gates.iter().map(|g| g.sample(rng)).collect();
            run(net, batch, samples)
        }
    }
}

/// Forward pass with caller-supplied uniform noise per gate.
pub fn forward_with_noise<T: Scalar>(
    net: &FeatureLevelNet<T>,
    batch: &Mat<T>,
    noise: &[Vec<T>],
) -> Result<(Mat<T>, ForwardCache<T>)> {
    if noise.len() != net.gates.len() {
        return Err(Error::Argument(format!(
            "{} noise vectors for {} gates",
            noise.len(),
            net.gates.len()
        )));
    }
    let mut samples = Vec::with_capacity(noise.len());
    for (g, u) in net.gates.iter().zip(noise) {
        if u.len() != g.dim() {
            return Err(Error::Shape {
                op: "gate noise",
                lhs: (1, u.len()),
                rhs: (1, g.dim()),
            });
        }
        samples.push(g.sample_with_noise(u.clone()));
    }
    run(net, batch, samples)
}

/// Forward pass with fixed gate values (no sampling, no gate gradient).
pub fn forward_with_gates<T: Scalar>(
    net: &FeatureLevelNet<T>,
    batch: &Mat<T>,
    z: Vec<Vec<T>>,
) -> Result<(Mat<T>, ForwardCache<T>)> {
    let (out, mut cache) = propagate(net, batch, z)?;
    cache.samples = None;
    Ok((out, cache))
}

/// Deterministic forward pass used for evaluation.
pub fn forward_eval<T: Scalar>(net: &FeatureLevelNet<T>, batch: &Mat<T>) -> Result<Mat<T>> {
    forward_with_gates(net, batch, net.eval_gates()).map(|(out, _)| out)
}

fn run<T: Scalar>(
    net: &FeatureLevelNet<T>,
    batch: &Mat<T>,
    samples: Vec<GateSample<T>>,
) -> Result<(Mat<T>, ForwardCache<T>)> {
    let z = samples.iter().map(|s| s.z.clone()).collect();
    let (out, mut cache) = propagate(net, batch, z)?;
    cache.samples = Some(samples);
    Ok((out, cache))
}

fn propagate<T: Scalar>(
    net: &FeatureLevelNet<T>,
    batch: &Mat<T>,
    z: Vec<Vec<T>>,
) -> Result<(Mat<T>, ForwardCache<T>)> {
    if batch.cols() != net.input_dim() {
        return Err(Error::Shape {
            op: "forward",
            lhs: batch.shape(),
            rhs: (batch.rows(), net.input_dim()),
        });
    }
    let k = net.depth();
    let mut hidden = Vec::with_capacity(k + 1);
    let mut gated = Vec::with_capacity(k);
    let mut pre = Vec::with_capacity(k);
    let mut passthrough = Vec::with_capacity(k);
    hidden.push(batch.clone());
    for (layer, zk) in net.layers.iter().zip(&z) {
        let h_prev = hidden.last().unwrap();
        passthrough.push(h_prev.scale_columns(&binary_complement(zk))?);
        let g = h_prev.scale_columns(zk)?;
        let a = g.matmul_t(&layer.weights)?.add_row_broadcast(&layer.bias)?;
        hidden.push(relu(&a));
        gated.push(g);
        pre.push(a);
    }
    let mut parts: Vec<&Mat<T>> = passthrough.iter().collect();
    parts.push(hidden.last().unwrap());
    let glm_input = Mat::hcat(&parts)?;
    let logits = glm_input
        .matmul_t(&net.head.weights)?
        .add_row_broadcast(&net.head.bias)?;
    let output = net.head.link.apply(&logits);
    Ok((
        output,
        ForwardCache {
            z,
            samples: None,
            hidden,
            gated,
            pre,
            glm_input,
            logits,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::GateConstants;
    use crate::network::{saturate_gates, Fcnn, Link, Task};

    fn tiny_net() -> FeatureLevelNet<f64> {
        let mut rng = Rng::new(1);
        let mut net = FeatureLevelNet::init(
            2,
            &[2],
            1,
            Task::Regression,
            Mode::Proposed,
            GateConstants::default(),
            &mut rng,
        )
        .unwrap();
        net.layers[0].weights = Mat::from_rows(&[vec![1.0, 2.0], vec![-1.0, 3.0]]).unwrap();
        net.layers[0].bias = Mat::row_vector(vec![0.5, -0.25]).unwrap();
        // head columns: pass_1 (2) then h_1 (2)
        net.head.weights = Mat::row_vector(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        net.head.bias = Mat::row_vector(vec![0.05]).unwrap();
        net
    }

    #[test]
    fn mixed_gate_hand_oracle() {
        let net = tiny_net();
        let x = Mat::from_rows(&[vec![1.5, -0.5], vec![-2.0, 1.0]]).unwrap();
        let (out, cache) = forward_with_gates(&net, &x, vec![vec![0.0, 1.0]]).unwrap();
        for r in 0..2 {
            let (x1, x2) = (x.get(r, 0), x.get(r, 1));
            // group 1 sees (x1, 0); layer 1 sees (0, x2)
            let h1 = (2.0 * x2 + 0.5f64).max(0.0);
            let h2 = (3.0 * x2 - 0.25f64).max(0.0);
            let want = 0.1 * x1 + 0.3 * h1 + 0.4 * h2 + 0.05;
            assert!((out.get(r, 0) - want).abs() < 1e-15);
            assert_eq!(cache.glm_input.get(r, 1), 0.0);
        }
    }

    #[test]
    fn closed_gates_block_hidden_path() {
        let net = tiny_net();
        let x = Mat::from_rows(&[vec![1.5, -0.5]]).unwrap();
        let (out, _) = forward_with_gates(&net, &x, vec![vec![0.0, 0.0]]).unwrap();
        let want = 0.1 * 1.5 + 0.2 * -0.5 + 0.3 * 0.5 + 0.4 * 0.0 + 0.05;
        assert!((out.get(0, 0) - want).abs() < 1e-15);
    }

    #[test]
    fn open_gates_reduce_to_plain_network() {
        let mut rng = Rng::new(3);
        let mut net = FeatureLevelNet::<f64>::init(
            4,
            &[6, 5],
            3,
            Task::Multiclass,
            Mode::Proposed,
            GateConstants::default(),
            &mut rng,
        )
        .unwrap();
        let w: Vec<f64> = rng.uniform(net.head.weights.as_slice().len(), -1.0, 1.0).unwrap();
        net.head.weights = Mat::from_vec(3, net.head.width(), w).unwrap();
        let x = Mat::from_vec(7, 4, rng.uniform(28, -1.0, 1.0).unwrap()).unwrap();
        let ones = net.gates.iter().map(|g| vec![1.0; g.dim()]).collect();
        let (out, _) = forward_with_gates(&net, &x, ones).unwrap();
        let plain = Fcnn::from_net(&net).forward(&x).unwrap();
        assert_eq!(out, plain);
        assert_eq!(net.head.link, Link::Softmax);
    }

    #[test]
    fn eval_is_repeatable_and_saturated_train_agrees() {
        let mut rng = Rng::new(5);
        let mut net = FeatureLevelNet::<f64>::init(
            3,
            &[4, 3],
            2,
            Task::Binary,
            Mode::Proposed,
            GateConstants::default(),
            &mut rng,
        )
        .unwrap();
        let w: Vec<f64> = rng.uniform(net.head.weights.as_slice().len(), -1.0, 1.0).unwrap();
        net.head.weights = Mat::from_vec(2, net.head.width(), w).unwrap();
        // mix of saturated open and closed gates
        saturate_gates(&mut net, 20.0);
        net.gates[0].log_alpha[1] = -20.0;
        net.gates[1].log_alpha[2] = -20.0;
        let x = Mat::from_vec(9, 3, rng.uniform(27, -2.0, 2.0).unwrap()).unwrap();
        let a = forward_eval(&net, &x).unwrap();
        let b = forward_eval(&net, &x).unwrap();
        assert_eq!(a, b);
        for seed in 0..20 {
            let (t, _) = forward_train(&net, &x, &mut Rng::new(seed)).unwrap();
            assert_eq!(t, a);
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let net = tiny_net();
        let x = Mat::<f64>::zeros(3, 5);
        assert!(matches!(forward_eval(&net, &x), Err(Error::Shape { .. })));
    }
}
