//! The feature-leveling network.
//!
//! `K` ReLU hidden layers, each preceded by a hard-concrete gate over its
//! input. For level `k` the gate splits `h_{k−1}` into a passthrough part
//! `B(z_k) ⊙ h_{k−1}` that goes straight to the GLM head and a gated part
//! `z_k ⊙ h_{k−1}` that feeds layer `k`. The head is a single linear layer
//! with an identity, sigmoid or softmax link over
//! `[pass_1, …, pass_K, h_K]`.

mod backward;
mod checkpoint;
mod fcnn;
mod forward;
mod prune;
mod train;

pub use backward::{backward, objective, objective_from_forward, Gradients, ObjectiveCache};
pub use checkpoint::{load, load_any, load_config, load_pruned, save, save_pruned, AnyNet, CHECKPOINT_VERSION};
pub use fcnn::Fcnn;
pub use forward::{forward_eval, forward_train, forward_with_gates, forward_with_noise, ForwardCache};
pub use prune::{prune, PrunedLayer, PrunedNet};
pub use train::{baseline_train, fit, train, HistoryRecord, TrainConfig, TrainHistory};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{GateConstants, HardConcreteGate};
use crate::numerics::{LossKind, Mat, Rng};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Binary,
    Multiclass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Identity,
    Sigmoid,
    Softmax,
}

impl Link {
    /// Link for a task with the given number of head outputs. Binary tasks
    /// use a sigmoid on one output or a softmax on two.
    pub fn for_task(task: Task, outputs: usize) -> Result<Link> {
        match (task, outputs) {
            (_, 0) => Err(Error::Argument("head needs at least one output".into())),
            (Task::Regression, _) => Ok(Link::Identity),
            (Task::Binary, 1) => Ok(Link::Sigmoid),
            (Task::Binary, 2) => Ok(Link::Softmax),
            (Task::Binary, n) => Err(Error::Argument(format!(
                "binary task needs 1 or 2 outputs, got {n}"
            ))),
            (Task::Multiclass, 1) => Err(Error::Argument(
                "multiclass task needs at least 2 outputs".into(),
            )),
            (Task::Multiclass, _) => Ok(Link::Softmax),
        }
    }

    pub fn loss(self) -> LossKind {
        match self {
            Link::Identity => LossKind::Mse,
            Link::Sigmoid => LossKind::BinaryCrossEntropy,
            Link::Softmax => LossKind::SoftmaxCrossEntropy,
        }
    }

    /// Applies the link row-wise to a logit matrix.
    pub fn apply<T: Scalar>(self, logits: &Mat<T>) -> Mat<T> {
        match self {
            Link::Identity => logits.clone(),
            Link::Sigmoid => logits.map(crate::numerics::sigmoid),
            Link::Softmax => {
                let mut out = logits.clone();
                for r in 0..out.rows() {
                    let row = out.row_mut(r);
                    let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
                    let mut sum = T::zero();
                    for v in row.iter_mut() {
                        *v = (*v - max).exp();
                        sum = sum + *v;
                    }
                    for v in row.iter_mut() {
                        *v = *v / sum;
                    }
                }
                out
            }
        }
    }
}

/// Whether the gates are trained (`Proposed`) or pinned open so the model
/// is a plain fully connected network (`Baseline`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Proposed,
    Baseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer<T> {
    /// `out_dim × in_dim`.
    pub weights: Mat<T>,
    /// `1 × out_dim`.
    pub bias: Mat<T>,
}

impl<T: Scalar> HiddenLayer<T> {
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmHead<T> {
    /// `out_dim × D`.
    pub weights: Mat<T>,
    /// `1 × out_dim`.
    pub bias: Mat<T>,
    pub link: Link,
    /// `K + 2` boundaries; group `k` (0-based) spans
    /// `group_offsets[k]..group_offsets[k + 1]`. The last group is the final
    /// hidden output.
    pub group_offsets: Vec<usize>,
}

impl<T: Scalar> GlmHead<T> {
    pub fn width(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn group(&self, level: usize) -> std::ops::Range<usize> {
        self.group_offsets[level]..self.group_offsets[level + 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureLevelNet<T> {
    pub layers: Vec<HiddenLayer<T>>,
    pub gates: Vec<HardConcreteGate<T>>,
    pub head: GlmHead<T>,
    pub task: Task,
    pub mode: Mode,
}

/// Initial log-alpha: gates start almost surely open.
pub const LOG_ALPHA_INIT: f64 = 2.3;
pub const LOG_ALPHA_INIT_STD: f64 = 0.01;

impl<T: Scalar> FeatureLevelNet<T> {
    /// He-initialized ReLU layers with zero bias, gates at
    /// `LOG_ALPHA_INIT + N(0, LOG_ALPHA_INIT_STD²)`, zero GLM head.
    pub fn init(
        input_dim: usize,
        hidden: &[usize],
        outputs: usize,
        task: Task,
        mode: Mode,
        constants: GateConstants,
        rng: &mut Rng,
    ) -> Result<Self> {
        if hidden.is_empty() {
            return Err(Error::Argument("architecture needs at least one hidden layer".into()));
        }
        if input_dim == 0 || hidden.contains(&0) {
            return Err(Error::Argument("layer widths must be positive".into()));
        }
        let link = Link::for_task(task, outputs)?;
        let mut layers = Vec::with_capacity(hidden.len());
        let mut gates = Vec::with_capacity(hidden.len());
        let mut in_dim = input_dim;
        for &out_dim in hidden {
            let std = (2.0 / in_dim as f64).sqrt();
            let w: Vec<T> = (0..out_dim * in_dim).map(|_| T::lit(rng.normal() * std)).collect();
            layers.push(HiddenLayer {
                weights: Mat::from_vec(out_dim, in_dim, w)?,
                bias: Mat::zeros(1, out_dim),
            });
            let la = (0..in_dim)
                .map(|_| T::lit(LOG_ALPHA_INIT + LOG_ALPHA_INIT_STD * rng.normal()))
                .collect();
            gates.push(HardConcreteGate::new(la, constants)?);
            in_dim = out_dim;
        }
        let mut offsets = vec![0];
        for g in &gates {
            offsets.push(offsets.last().unwrap() + g.dim());
        }
        offsets.push(offsets.last().unwrap() + in_dim);
        let width = *offsets.last().unwrap();
        let net = FeatureLevelNet {
            layers,
            gates,
            head: GlmHead {
                weights: Mat::zeros(outputs, width),
                bias: Mat::zeros(1, outputs),
                link,
                group_offsets: offsets,
            },
            task,
            mode,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn outputs(&self) -> usize {
        self.head.outputs()
    }

    /// Full layer-width list: input, hidden widths, outputs.
    pub fn arch(&self) -> Vec<usize> {
        let mut a = vec![self.input_dim()];
        a.extend(self.layers.iter().map(HiddenLayer::out_dim));
        a.push(self.outputs());
        a
    }

    pub fn arch_string(&self) -> String {
        self.arch().iter().map(usize::to_string).collect::<Vec<_>>().join("-")
    }

    /// Gate values used for evaluation, reporting and pruning: the
    /// deterministic estimator in proposed mode, all ones in baseline mode.
    pub fn eval_gates(&self) -> Vec<Vec<T>> {
        self.gates
            .iter()
            .map(|g| match self.mode {
                Mode::Proposed => g.deterministic(),
                Mode::Baseline => vec![T::one(); g.dim()],
            })
            .collect()
    }

    /// Per-gate count of evaluation gate values that are strictly positive.
    pub fn open_gate_counts(&self) -> Vec<usize> {
        self.eval_gates()
            .iter()
            .map(|z| z.iter().filter(|&&v| v > T::zero()).count())
            .collect()
    }

    /// Checks every dimension invariant; the error names the offending layer.
    pub fn validate(&self) -> Result<()> {
        let k = self.layers.len();
        let bad = |msg: String| Err(Error::CheckpointInvalid(msg));
        if k == 0 {
            return bad("no hidden layers".into());
        }
        if self.gates.len() != k {
            return bad(format!("{} gates for {k} layers", self.gates.len()));
        }
        for (i, (layer, gate)) in self.layers.iter().zip(&self.gates).enumerate() {
            let n = i + 1;
            if gate.dim() != layer.in_dim() {
                return bad(format!(
                    "layer {n}: gate dimension {} does not match layer input dimension {}",
                    gate.dim(),
                    layer.in_dim()
                ));
            }
            if layer.bias.shape() != (1, layer.out_dim()) {
                return bad(format!("layer {n}: bias shape {:?}", layer.bias.shape()));
            }
            if i > 0 && self.layers[i - 1].out_dim() != layer.in_dim() {
                return bad(format!(
                    "layer {n}: input dimension {} does not match previous output {}",
                    layer.in_dim(),
                    self.layers[i - 1].out_dim()
                ));
            }
            if !layer.weights.is_finite() || !layer.bias.is_finite() {
                return bad(format!("layer {n}: non-finite parameters"));
            }
        }
        let offsets = &self.head.group_offsets;
        if offsets.len() != k + 2 || offsets[0] != 0 {
            return bad(format!("head: expected {} group offsets starting at 0", k + 2));
        }
        for i in 0..k {
            if offsets[i + 1] - offsets[i] != self.gates[i].dim() {
                return bad(format!(
                    "head: group {} has width {} but gate {} has dimension {}",
                    i + 1,
                    offsets[i + 1].saturating_sub(offsets[i]),
                    i + 1,
                    self.gates[i].dim()
                ));
            }
        }
        let last = self.layers[k - 1].out_dim();
        if offsets[k + 1].checked_sub(offsets[k]) != Some(last) {
            return bad(format!("head: final group width does not match layer {k} output {last}"));
        }
        if self.head.weights.cols() != offsets[k + 1] {
            return bad(format!(
                "head: weight width {} does not match GLM input width {}",
                self.head.weights.cols(),
                offsets[k + 1]
            ));
        }
        if self.head.bias.shape() != (1, self.head.outputs()) {
            return bad(format!("head: bias shape {:?}", self.head.bias.shape()));
        }
        if Link::for_task(self.task, self.head.outputs())? != self.head.link {
            return bad(format!("head: link {:?} does not fit task {:?}", self.head.link, self.task));
        }
        Ok(())
    }

    /// Mutable views of every parameter, in the same order as
    /// [`Gradients::flat`]: per layer weights then bias, head weights then
    /// bias, then each gate's log-alpha.
    pub fn parameters_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        for layer in &mut self.layers {
            out.push(layer.weights.as_mut_slice());
            out.push(layer.bias.as_mut_slice());
        }
        out.push(self.head.weights.as_mut_slice());
        out.push(self.head.bias.as_mut_slice());
        for gate in &mut self.gates {
            out.push(gate.log_alpha.as_mut_slice());
        }
        out
    }
}

/// Forces every gate to a saturated log-alpha so sampled and deterministic
/// values coincide (`z = 1` for positive, `z = 0` for negative).
pub fn saturate_gates<T: Scalar>(net: &mut FeatureLevelNet<T>, log_alpha: f64) {
    for g in &mut net.gates {
        g.log_alpha.iter_mut().for_each(|v| *v = T::lit(log_alpha));
    }
}
