#![allow(dead_code)]

use leveling::network::{backward, forward_with_noise, objective_from_forward, Fcnn};
use leveling::{FeatureLevelNet, GateConstants, Mat, Mode, Rng, Task};

/// Random 3-5-4-2 proposed net with a nonzero head and a spread of gate
/// locations, plus a fixed batch, targets and gate noise.
pub struct Problem {
    pub net: FeatureLevelNet<f64>,
    pub x: Mat<f64>,
    pub y: Mat<f64>,
    pub noise: Vec<Vec<f64>>,
    pub lambda: f64,
}

pub fn problem(seed: u64, task: Task, outputs: usize) -> Problem {
    let mut rng = Rng::new(seed);
    let mut net = FeatureLevelNet::init(3, &[5, 4], outputs, task, Mode::Proposed, GateConstants::default(), &mut rng)
        .unwrap();
    let w = net.head.weights.as_slice().len();
    net.head.weights = Mat::from_vec(outputs, net.head.width(), rng.uniform(w, -1.0, 1.0).unwrap()).unwrap();
    net.head.bias = Mat::row_vector(rng.uniform(outputs, -0.5, 0.5).unwrap()).unwrap();
    for l in &mut net.layers {
        let n = l.bias.cols();
        l.bias = Mat::row_vector(rng.uniform(n, -0.3, 0.3).unwrap()).unwrap();
    }
    for g in &mut net.gates {
        g.log_alpha = rng.uniform(g.dim(), -2.0, 3.0).unwrap();
    }
    let rows = 6;
    let x = Mat::from_vec(rows, 3, rng.uniform(rows * 3, -2.0, 2.0).unwrap()).unwrap();
    let y = match task {
        Task::Regression => Mat::from_vec(rows, outputs, rng.uniform(rows * outputs, -1.0, 1.0).unwrap()).unwrap(),
        _ => Mat::column((0..rows).map(|_| (rng.next_f64() * outputs.max(2) as f64).floor()).collect()).unwrap(),
    };
    let noise = net.gates.iter().map(|g| rng.uniform(g.dim(), 0.0, 1.0).unwrap()).collect();
    Problem { net, x, y, noise, lambda: 0.3 }
}

pub fn objective_value(p: &Problem, net: &FeatureLevelNet<f64>) -> f64 {
    let (_, fc) = forward_with_noise(net, &p.x, &p.noise).unwrap();
    objective_from_forward(net, fc, &p.y, p.lambda).unwrap().0
}

pub struct SweepResult {
    pub checked: usize,
    pub skipped: usize,
    pub max_rel_err: f64,
    pub worst: String,
}

/// Compares every analytic gradient with a central difference at step `h`.
/// Gate entries whose stretched sample lies within 1e-3 of 0 or 1 are
/// skipped.
pub fn gradient_sweep(p: &Problem, h: f64) -> SweepResult {
    let (_, fc) = forward_with_noise(&p.net, &p.x, &p.noise).unwrap();
    let samples = fc.samples.clone().unwrap();
    let (_, cache) = objective_from_forward(&p.net, fc, &p.y, p.lambda).unwrap();
    let grads = backward(&p.net, &cache).unwrap();
    let analytic: Vec<Vec<f64>> = grads.flat().iter().map(|s| s.to_vec()).collect();
    let n_theta = 2 * p.net.depth() + 2;

    let mut out = SweepResult { checked: 0, skipped: 0, max_rel_err: 0.0, worst: String::new() };
    let mut net = p.net.clone();
    for (block, grad) in analytic.iter().enumerate() {
        for (i, &a) in grad.iter().enumerate() {
            if block >= n_theta {
                let s = samples[block - n_theta].s[i];
                if s.abs() < 1e-3 || (s - 1.0).abs() < 1e-3 {
                    out.skipped += 1;
                    continue;
                }
            }
            let orig = net.parameters_mut()[block][i];
            net.parameters_mut()[block][i] = orig + h;
            let up = objective_value(p, &net);
            net.parameters_mut()[block][i] = orig - h;
            let down = objective_value(p, &net);
            net.parameters_mut()[block][i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let scale = a.abs().max(numeric.abs());
            let err = if scale < 1e-7 { 0.0 } else { (a - numeric).abs() / scale };
            out.checked += 1;
            if err > out.max_rel_err {
                out.max_rel_err = err;
                out.worst = format!("block {block} index {i}: analytic {a:e}, numeric {numeric:e}");
            }
        }
    }
    out
}

/// Largest absolute difference between the all-open gated net and the plain
/// network over outputs, loss and every weight gradient.
pub fn baseline_reduction_gap(seed: u64) -> f64 {
    let mut p = problem(seed, Task::Multiclass, 2);
    p.lambda = 0.0;
    let mut rng = Rng::new(seed ^ 0x5eed);
    let mut gap: f64 = 0.0;
    let mut diff = |a: &[f64], b: &[f64]| {
        assert_eq!(a.len(), b.len());
        for (u, v) in a.iter().zip(b) {
            gap = gap.max((u - v).abs());
        }
    };
    for mode in [Mode::Baseline, Mode::Proposed] {
        let mut net = p.net.clone();
        net.mode = mode;
        if mode == Mode::Proposed {
            // saturated gates sample exactly 1 for any noise in (1e-6, 1 − 1e-6)
            leveling::network::saturate_gates(&mut net, 30.0);
        }
        let plain = Fcnn::from_net(&net);
        let (out, fc) = leveling::network::forward_train(&net, &p.x, &mut rng).unwrap();
        diff(out.as_slice(), plain.forward(&p.x).unwrap().as_slice());
        let (value, cache) = objective_from_forward(&net, fc, &p.y, 0.0).unwrap();
        let (loss, plain_grads) = plain.loss_and_gradients(&p.x, &p.y).unwrap();
        diff(&[value], &[loss]);
        let g = backward(&net, &cache).unwrap();
        for ((dw, db), (pw, pb)) in g.layers.iter().zip(&plain_grads) {
            diff(dw.as_slice(), pw.as_slice());
            diff(db.as_slice(), pb.as_slice());
        }
        let k = net.depth();
        let range = net.head.group(k);
        let final_cols = g.head_weights.column_block(range.start, range.end);
        let (hw, hb) = plain_grads.last().unwrap();
        diff(final_cols.as_slice(), hw.as_slice());
        diff(g.head_bias.as_slice(), hb.as_slice());
    }
    gap
}
