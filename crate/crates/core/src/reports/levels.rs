use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Result;
use crate::network::{forward_eval, prune, FeatureLevelNet, PrunedNet};
use crate::scalar::Scalar;

use super::metrics::{metric, MetricKind};

/// Routing counts for one gate (level `k ≤ K`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateLevelStats {
    pub level: usize,
    pub size: usize,
    /// Features whose evaluation gate is exactly zero (sent to the GLM).
    pub routed: usize,
    /// Features passed on to the next hidden layer.
    pub open: usize,
}

impl GateLevelStats {
    pub fn percent_routed(&self) -> f64 {
        if self.size == 0 {
            0.0
        } else {
            100.0 * self.routed as f64 / self.size as f64
        }
    }
}

/// Per-gate routing counts from the evaluation gate values, the same values
/// [`prune`] uses.
pub fn gate_stats<T: Scalar>(net: &FeatureLevelNet<T>) -> Vec<GateLevelStats> {
    net.eval_gates()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let routed = z.iter().filter(|&&v| v == T::zero()).count();
            GateLevelStats {
                level: i + 1,
                size: z.len(),
                routed,
                open: z.len() - routed,
            }
        })
        .collect()
}

/// Average absolute GLM weight per level. Level `k ≤ K` averages over the
/// head columns of group `k` whose gate is exactly zero; level `K + 1`
/// averages over the whole final hidden group. All output rows are
/// included. `None` marks a level with no selected columns.
pub fn aav_per_level<T: Scalar>(net: &FeatureLevelNet<T>) -> Vec<Option<f64>> {
    let z = net.eval_gates();
    let k = net.depth();
    let w = &net.head.weights;
    let mean_abs = |cols: &[usize]| -> Option<f64> {
        if cols.is_empty() || w.rows() == 0 {
            return None;
        }
        let total: f64 = (0..w.rows())
            .flat_map(|r| cols.iter().map(move |&c| w.get(r, c).abs().as_f64()))
            .sum();
        Some(total / (cols.len() * w.rows()) as f64)
    };
    let mut out = Vec::with_capacity(k + 1);
    for (level, zk) in z.iter().enumerate() {
        let start = net.head.group_offsets[level];
        let cols: Vec<usize> = zk
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == T::zero())
            .map(|(j, _)| start + j)
            .collect();
        out.push(mean_abs(&cols));
    }
    let last: Vec<usize> = net.head.group(k).collect();
    out.push(mean_abs(&last));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub kind: MetricKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEntry {
    pub level: usize,
    /// Width of this level's GLM group.
    pub size: usize,
    /// Features sent to the GLM by the gate (0 for the final level, which
    /// has no gate).
    pub routed: usize,
    pub percent: f64,
    pub aav: Option<f64>,
}

/// Interpretability summary of a trained network on a test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub metric: MetricValue,
    pub architecture: String,
    pub effective_glm_width: usize,
    pub levels: Vec<LevelEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

/// Average absolute GLM weight per group of a pruned network: one entry per
/// surviving layer's passthrough features, then the final starred group.
/// `None` marks an empty group.
pub fn pruned_aav<T: Scalar>(net: &PrunedNet<T>) -> Vec<Option<f64>> {
    let w = &net.head_weights;
    let mut sizes: Vec<usize> = net.passthrough.iter().map(Vec::len).collect();
    sizes.push(net.final_width());
    let mut out = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for size in sizes {
        out.push((size > 0 && w.rows() > 0).then(|| {
            let total: f64 = (0..w.rows())
                .flat_map(|r| (start..start + size).map(move |c| w.get(r, c).abs().as_f64()))
                .sum();
            total / (size * w.rows()) as f64
        }));
        start += size;
    }
    out
}

impl LevelReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn full_report<T: Scalar>(
    net: &FeatureLevelNet<T>,
    test_set: &Dataset<T>,
    kind: MetricKind,
) -> Result<LevelReport> {
    let outputs = forward_eval(net, &test_set.features)?;
    let value = metric(kind, &outputs, &test_set.labels)?;
    let pruned = prune(net)?;
    let stats = gate_stats(net);
    let aav = aav_per_level(net);
    let mut levels: Vec<LevelEntry> = stats
        .iter()
        .zip(&aav)
        .map(|(s, &a)| LevelEntry {
            level: s.level,
            size: s.size,
            routed: s.routed,
            percent: s.percent_routed(),
            aav: a,
        })
        .collect();
    let k = net.depth();
    levels.push(LevelEntry {
        level: k + 1,
        size: net.head.group(k).len(),
        routed: 0,
        percent: 0.0,
        aav: aav[k],
    });
    Ok(LevelReport {
        metric: MetricValue { kind, value },
        architecture: pruned.architecture(),
        effective_glm_width: pruned.effective_glm_width(),
        levels,
        config: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::GateConstants;
    use crate::network::{saturate_gates, Mode, Task};
    use crate::numerics::{Mat, Rng};

    fn net(input: usize, hidden: &[usize], outputs: usize) -> FeatureLevelNet<f64> {
        FeatureLevelNet::init(
            input,
            hidden,
            outputs,
            if outputs == 1 { Task::Regression } else { Task::Multiclass },
            Mode::Proposed,
            GateConstants::default(),
            &mut Rng::new(1),
        )
        .unwrap()
    }

    #[test]
    fn fresh_net_routes_nothing() {
        let n = net(5, &[4, 3], 2);
        assert!(gate_stats(&n).iter().all(|s| s.routed == 0 && s.percent_routed() == 0.0));
        assert_eq!(aav_per_level(&n), vec![None, None, Some(0.0)]);
    }

    #[test]
    fn closed_gates_route_everything() {
        let mut n = net(5, &[4, 3], 2);
        saturate_gates(&mut n, -10.0);
        let s = gate_stats(&n);
        assert_eq!(s[0].routed, 5);
        assert_eq!(s[1].routed, 4);
        assert!(s.iter().all(|l| l.percent_routed() == 100.0));
    }

    #[test]
    fn aav_hand_values() {
        // level 1: two routed inputs; level 2: one hidden unit
        let mut n = net(2, &[1], 1);
        saturate_gates(&mut n, -10.0);
        n.head.weights = Mat::row_vector(vec![0.2, -0.4, 1.0]).unwrap();
        let aav = aav_per_level(&n);
        assert!((aav[0].unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(aav[1], Some(1.0));
    }

    #[test]
    fn aav_skips_open_features_and_averages_rows() {
        let mut n = net(3, &[2], 2);
        n.gates[0].log_alpha = vec![-10.0, 10.0, -10.0];
        n.head.weights = Mat::from_rows(&[
            vec![1.0, 9.0, -3.0, 0.5, 0.5],
            vec![-1.0, 9.0, 1.0, 1.5, -1.5],
        ])
        .unwrap();
        let aav = aav_per_level(&n);
        assert_eq!(aav[0], Some((1.0 + 3.0 + 1.0 + 1.0) / 4.0));
        assert_eq!(aav[1], Some((0.5 + 0.5 + 1.5 + 1.5) / 4.0));
    }

    #[test]
    fn pruned_aav_follows_pruned_groups() {
        let mut n = net(3, &[2, 2], 1);
        n.gates[0].log_alpha = vec![-10.0, 10.0, 10.0];
        n.gates[1].log_alpha = vec![-10.0, -10.0];
        n.head.weights = Mat::row_vector(vec![0.4, 7.0, 7.0, 0.2, -0.6, 5.0, 5.0]).unwrap();
        let p = prune(&n).unwrap();
        assert_eq!(p.architecture(), "2-2*-1");
        let aav = pruned_aav(&p);
        assert_eq!(aav.len(), 2);
        assert!((aav[0].unwrap() - 0.4).abs() < 1e-15);
        assert!((aav[1].unwrap() - 0.4).abs() < 1e-15);
    }
}
