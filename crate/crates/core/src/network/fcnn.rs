use crate::error::Result;
use crate::numerics::{loss_and_grad, relu, relu_grad, Mat};
use crate::scalar::Scalar;

use super::{FeatureLevelNet, HiddenLayer, Link};

/// Plain fully connected ReLU network `d(f_K(…f_1(x)))` with a GLM head
/// over the last hidden output only.
///
/// Serves as the reference the gated network reduces to when every gate is
/// open.
#[derive(Debug, Clone, PartialEq)]
pub struct Fcnn<T> {
    pub layers: Vec<HiddenLayer<T>>,
    pub head_weights: Mat<T>,
    pub head_bias: Mat<T>,
    pub link: Link,
}

impl<T: Scalar> Fcnn<T> {
    /// Copies the hidden layers and the final-group head columns of `net`.
    pub fn from_net(net: &FeatureLevelNet<T>) -> Self {
        let k = net.depth();
        let range = net.head.group(k);
        Fcnn {
            layers: net.layers.clone(),
            head_weights: net.head.weights.column_block(range.start, range.end),
            head_bias: net.head.bias.clone(),
            link: net.head.link,
        }
    }

    fn hidden(&self, x: &Mat<T>) -> Result<(Vec<Mat<T>>, Vec<Mat<T>>)> {
        let mut acts = vec![x.clone()];
        let mut pres = Vec::new();
        for layer in &self.layers {
            let a = acts
                .last()
                .unwrap()
                .matmul_t(&layer.weights)?
                .add_row_broadcast(&layer.bias)?;
            acts.push(relu(&a));
            pres.push(a);
        }
        Ok((acts, pres))
    }

    pub fn logits(&self, x: &Mat<T>) -> Result<Mat<T>> {
        let (acts, _) = self.hidden(x)?;
        acts.last()
            .unwrap()
            .matmul_t(&self.head_weights)?
            .add_row_broadcast(&self.head_bias)
    }

    pub fn forward(&self, x: &Mat<T>) -> Result<Mat<T>> {
        Ok(self.link.apply(&self.logits(x)?))
    }

    /// Mean loss and `(dW, db)` per layer followed by the head's
    /// `(dW, db)`.
    pub fn loss_and_gradients(&self, x: &Mat<T>, targets: &Mat<T>) -> Result<(T, Vec<(Mat<T>, Mat<T>)>)> {
        let (acts, pres) = self.hidden(x)?;
        let last = acts.last().unwrap();
        let logits = last.matmul_t(&self.head_weights)?.add_row_broadcast(&self.head_bias)?;
        let (loss, dlogits) = loss_and_grad(self.link.loss(), &logits, targets)?;
        let mut grads = vec![(dlogits.t_matmul(last)?, dlogits.sum_rows())];
        let mut delta = dlogits.matmul(&self.head_weights)?;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let d_pre = delta.hadamard(&relu_grad(&pres[i]))?;
            grads.push((d_pre.t_matmul(&acts[i])?, d_pre.sum_rows()));
            delta = d_pre.matmul(&layer.weights)?;
        }
        grads.reverse();
        Ok((loss, grads))
    }
}
