use crate::error::{Error, Result};
use crate::numerics::{relu, Mat};
use crate::scalar::Scalar;

use super::{FeatureLevelNet, Link, Task};

/// Hidden layer that reads only the surviving (gate > 0) columns of the
/// previous representation. Fractional gate values are folded into the
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedLayer<T> {
    /// Column indices of the previous representation read by this layer.
    pub inputs: Vec<usize>,
    /// `out_dim × inputs.len()`.
    pub weights: Mat<T>,
    pub bias: Mat<T>,
}

/// Deterministic network with every zero gate removed.
///
/// GLM input is `[h_0[pass_1], …, h_{L−1}[pass_L], h_L]` where `L` is the
/// number of surviving layers and `h_0 = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedNet<T> {
    pub input_dim: usize,
    pub layers: Vec<PrunedLayer<T>>,
    /// Per surviving layer, indices of the previous representation routed
    /// straight to the GLM.
    pub passthrough: Vec<Vec<usize>>,
    pub head_weights: Mat<T>,
    pub head_bias: Mat<T>,
    pub link: Link,
    pub task: Task,
}

impl<T: Scalar> PrunedNet<T> {
    /// Width of the final hidden representation (the input width when no
    /// hidden layer survives).
    pub fn final_width(&self) -> usize {
        self.layers.last().map_or(self.input_dim, |l| l.weights.rows())
    }

    pub fn effective_glm_width(&self) -> usize {
        self.final_width() + self.passthrough.iter().map(Vec::len).sum::<usize>()
    }

    pub fn outputs(&self) -> usize {
        self.head_weights.rows()
    }

    /// `n₁-…-n_L-w*-out`: surviving input count of each layer, then the
    /// final hidden width starred, then the output width.
    pub fn architecture(&self) -> String {
        let mut parts: Vec<String> = self.layers.iter().map(|l| l.inputs.len().to_string()).collect();
        parts.push(format!("{}*", self.final_width()));
        parts.push(self.outputs().to_string());
        parts.join("-")
    }

    pub fn forward(&self, x: &Mat<T>) -> Result<Mat<T>> {
        if x.cols() != self.input_dim {
            return Err(Error::Shape {
                op: "pruned forward",
                lhs: x.shape(),
                rhs: (x.rows(), self.input_dim),
            });
        }
        let mut groups = Vec::with_capacity(self.layers.len() + 1);
        let mut h = x.clone();
        for (layer, pass) in self.layers.iter().zip(&self.passthrough) {
            groups.push(h.select_columns(pass));
            h = relu(
                &h.select_columns(&layer.inputs)
                    .matmul_t(&layer.weights)?
                    .add_row_broadcast(&layer.bias)?,
            );
        }
        groups.push(h);
        let refs: Vec<&Mat<T>> = groups.iter().collect();
        let logits = Mat::hcat(&refs)?
            .matmul_t(&self.head_weights)?
            .add_row_broadcast(&self.head_bias)?;
        Ok(self.link.apply(&logits))
    }
}

/// Removes everything the evaluation gates switch off.
///
/// For each layer, inputs with gate 0 are dropped from the layer (they stay
/// in the GLM as passthrough features) and the remaining gate values are
/// multiplied into the weight columns. GLM columns of passthrough slots
/// whose gate is positive are always zero and are dropped. If some gate is
/// zero everywhere, its layer and every deeper layer only see constants;
/// they are removed, their constant GLM contribution is folded into the
/// bias, and the representation that gate routes becomes the final group.
pub fn prune<T: Scalar>(net: &FeatureLevelNet<T>) -> Result<PrunedNet<T>> {
    let z = net.eval_gates();
    let k = net.depth();
    let head = &net.head;
    let cut = z.iter().position(|zk| zk.iter().all(|&v| v == T::zero()));
    let survivors = cut.unwrap_or(k);

    let mut layers = Vec::with_capacity(survivors);
    let mut passthrough = Vec::with_capacity(survivors);
    let mut head_cols: Vec<usize> = Vec::new();
    for (level, zk) in z.iter().enumerate().take(survivors) {
        let open: Vec<usize> = (0..zk.len()).filter(|&j| zk[j] > T::zero()).collect();
        let closed: Vec<usize> = (0..zk.len()).filter(|&j| zk[j] == T::zero()).collect();
        let factors: Vec<T> = open.iter().map(|&j| zk[j]).collect();
        let layer = &net.layers[level];
        layers.push(PrunedLayer {
            weights: layer.weights.select_columns(&open).scale_columns(&factors)?,
            bias: layer.bias.clone(),
            inputs: open,
        });
        let start = head.group_offsets[level];
        head_cols.extend(closed.iter().map(|&j| start + j));
        passthrough.push(closed);
    }
    // final group: h_K itself, or the fully routed representation at the cut
    head_cols.extend(head.group(survivors));

    let mut head_bias = head.bias.clone();
    if let Some(c) = cut {
        // layers c.. receive zero input: propagate the constants
        let mut h = Mat::zeros(1, net.layers[c].out_dim());
        h = relu(&h.add_row_broadcast(&net.layers[c].bias)?);
        for level in c + 1..k {
            let pass = h.scale_columns(&crate::gates::binary_complement(&z[level]))?;
            let block = head.weights.column_block(head.group(level).start, head.group(level).end);
            head_bias = head_bias.add(&pass.matmul_t(&block)?)?;
            let layer = &net.layers[level];
            h = relu(
                &h.scale_columns(&z[level])?
                    .matmul_t(&layer.weights)?
                    .add_row_broadcast(&layer.bias)?,
            );
        }
        let block = head.weights.column_block(head.group(k).start, head.group(k).end);
        head_bias = head_bias.add(&h.matmul_t(&block)?)?;
    }

    Ok(PrunedNet {
        input_dim: net.input_dim(),
        layers,
        passthrough,
        head_weights: head.weights.select_columns(&head_cols),
        head_bias,
        link: head.link,
        task: net.task,
    })
}
