use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gates::GateConstants;
use crate::numerics::{AdamConfig, AdamState, Rng};
use crate::reports::{metric, MetricKind};
use crate::scalar::Scalar;

use super::backward::{backward, objective};
use super::forward::forward_eval;
use super::{FeatureLevelNet, Mode, LOG_ALPHA_INIT};

// Independent RNG streams derived from the run seed.
const STREAM_INIT: u64 = 0;
const STREAM_BATCHES: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// Rows used for the history metric when no evaluation set is supplied.
const HISTORY_EVAL_ROWS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// L0 penalty weight λ.
    pub lambda: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Iterations over which λ ramps linearly from 0; `None` means 10% of
    /// `iterations`.
    pub lambda_warmup_iters: Option<usize>,
    /// History is recorded every `eval_every` iterations and at the end.
    pub eval_every: usize,
    pub mode: Mode,
    pub gate_constants: GateConstants,
    /// Metric tracked in the history; defaults by task.
    pub metric: Option<MetricKind>,
    /// Mean of the initial gate locations.
    pub log_alpha_init: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.1,
            lr: AdamConfig::default().lr,
            batch_size: 128,
            iterations: 1000,
            seed: 0,
            lambda_warmup_iters: None,
            eval_every: 500,
            mode: Mode::Proposed,
            gate_constants: GateConstants::default(),
            metric: None,
            log_alpha_init: LOG_ALPHA_INIT,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Argument(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::Argument(format!("lr must be >= 0, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch_size must be >= 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Argument("iterations must be >= 1".into()));
        }
        if !self.log_alpha_init.is_finite() {
            return Err(Error::Argument("log_alpha_init must be finite".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Argument("eval_every must be >= 1".into()));
        }
        self.gate_constants.validate()
    }

    pub fn warmup(&self) -> usize {
        self.lambda_warmup_iters.unwrap_or(self.iterations / 10)
    }

    /// λ in effect at 1-based iteration `t`.
    pub fn lambda_at(&self, t: usize) -> f64 {
        let w = self.warmup();
        if w == 0 || t >= w {
            self.lambda
        } else {
            self.lambda * t as f64 / w as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub iteration: usize,
    /// Mean objective over the iterations since the previous record.
    pub train_loss: f64,
    pub metric: Option<f64>,
    /// Per gate, the number of evaluation gate values above zero.
    pub open_gates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub metric: Option<MetricKind>,
    pub records: Vec<HistoryRecord>,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let gates = self.records.first().map_or(0, |r| r.open_gates.len());
        let mut out = String::from("iteration,train_loss,metric");
        for k in 1..=gates {
            let _ = write!(out, ",open_gates_{k}");
        }
        out.push('\n');
        for r in &self.records {
            let m = r.metric.map_or(String::new(), |v| v.to_string());
            let _ = write!(out, "{},{},{}", r.iteration, r.train_loss, m);
            for g in &r.open_gates {
                let _ = write!(out, ",{g}");
            }
            out.push('\n');
        }
        out
    }
}

/// Trains a gated network with Adam on shuffled minibatches.
///
/// `hidden` lists the hidden widths; `outputs` is the head width. When an
/// evaluation set is given the history metric is computed on it,
/// otherwise on the first rows of the training set.
pub fn train<T: Scalar>(
    config: &TrainConfig,
    dataset: &Dataset<T>,
    eval_set: Option<&Dataset<T>>,
    hidden: &[usize],
    outputs: usize,
) -> Result<(FeatureLevelNet<T>, TrainHistory)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    let mut init_rng = Rng::with_stream(config.seed, STREAM_INIT);
    let mut net = FeatureLevelNet::init(
        dataset.dim(),
        hidden,
        outputs,
        dataset.task,
        config.mode,
        config.gate_constants,
        &mut init_rng,
    )?;
    let shift = T::lit(config.log_alpha_init - LOG_ALPHA_INIT);
    for g in &mut net.gates {
        g.log_alpha.iter_mut().for_each(|v| *v = *v + shift);
    }
    let history = fit(&mut net, config, dataset, eval_set)?;
    Ok((net, history))
}

/// Plain fully connected training: [`train`] with the gates pinned open.
pub fn baseline_train<T: Scalar>(
    config: &TrainConfig,
    dataset: &Dataset<T>,
    eval_set: Option<&Dataset<T>>,
    hidden: &[usize],
    outputs: usize,
) -> Result<(FeatureLevelNet<T>, TrainHistory)> {
    let config = TrainConfig {
        mode: Mode::Baseline,
        ..config.clone()
    };
    train(&config, dataset, eval_set, hidden, outputs)
}

/// Continues training `net` in place.
pub fn fit<T: Scalar>(
    net: &mut FeatureLevelNet<T>,
    config: &TrainConfig,
    dataset: &Dataset<T>,
    eval_set: Option<&Dataset<T>>,
) -> Result<TrainHistory> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    let adam = AdamConfig {
        lr: config.lr,
        ..AdamConfig::default()
    };
    let mut states: Vec<AdamState<T>> = net
        .parameters_mut()
        .iter()
        .map(|p| AdamState::new((1, p.len()), adam))
        .collect();
    let mut batch_rng = Rng::with_stream(config.seed, STREAM_BATCHES);
    let mut noise_rng = Rng::with_stream(config.seed, STREAM_NOISE);
    let kind = config.metric.unwrap_or_else(|| MetricKind::default_for(dataset.task));
    let fallback_eval;
    let eval = match eval_set {
        Some(e) => e,
        None => {
            fallback_eval = dataset.head(HISTORY_EVAL_ROWS);
            &fallback_eval
        }
    };

    let n = dataset.len();
    let mut order: Vec<usize> = Vec::new();
    let mut cursor = 0;
    let mut history = TrainHistory {
        metric: Some(kind),
        records: Vec::new(),
    };
    let (mut loss_sum, mut loss_count) = (0.0, 0usize);
    for it in 1..=config.iterations {
        if cursor >= order.len() {
            order = batch_rng.permutation(n);
            cursor = 0;
        }
        let end = (cursor + config.batch_size).min(n);
        let idx = &order[cursor..end];
        cursor = end;
        let x = dataset.features.select_rows(idx);
        let y = crate::numerics::Mat::column(idx.iter().map(|&i| dataset.labels[i]).collect())?;

        let lambda = T::lit(config.lambda_at(it));
        let (value, cache) = match objective(net, &x, &y, lambda, &mut noise_rng) {
            Ok(v) => v,
            Err(Error::NonFinite(_)) => {
                return Err(Error::Divergence {
                    iteration: it,
                    loss: f64::NAN,
                })
            }
            Err(e) => return Err(e),
        };
        if !value.is_finite() {
            return Err(Error::Divergence {
                iteration: it,
                loss: value.as_f64(),
            });
        }
        let grads = backward(net, &cache)?;
        let flat = grads.flat();
        let train_gates = config.mode == Mode::Proposed;
        let n_theta = 2 * net.depth() + 2;
        for (i, ((state, param), grad)) in states.iter_mut().zip(net.parameters_mut()).zip(flat).enumerate() {
            if i >= n_theta && !train_gates {
                continue;
            }
            state.step_slice(param, grad)?;
        }
        loss_sum += value.as_f64();
        loss_count += 1;

        if it % config.eval_every == 0 || it == config.iterations {
            let out = forward_eval(net, &eval.features)?;
            let m = metric(kind, &out, &eval.labels).ok();
            history.records.push(HistoryRecord {
                iteration: it,
                train_loss: loss_sum / loss_count as f64,
                metric: m,
                open_gates: net.open_gate_counts(),
            });
            loss_sum = 0.0;
            loss_count = 0;
        }
    }
    Ok(history)
}
