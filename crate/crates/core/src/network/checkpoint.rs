//! JSON checkpoints.
//!
//! Every number is stored as the hex string of its IEEE-754 bit pattern so a
//! save/load round trip is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::gates::{GateConstants, HardConcreteGate};
use crate::io::write_atomic;
use crate::numerics::Mat;
use crate::scalar::Scalar;

use super::forward::forward_eval;
use super::prune::{PrunedLayer, PrunedNet};
use super::{FeatureLevelNet, GlmHead, HiddenLayer, Link, Mode, Task};

pub const CHECKPOINT_VERSION: u64 = 1;

const KIND_FULL: &str = "feature_level";
const KIND_PRUNED: &str = "pruned";

#[derive(Serialize, Deserialize)]
struct MatRecord {
    rows: usize,
    cols: usize,
    data: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct LayerRecord {
    weights: MatRecord,
    bias: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inputs: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GateRecord {
    log_alpha: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct HeadRecord {
    weights: MatRecord,
    bias: Vec<String>,
    link: Link,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    group_offsets: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct ConstantsRecord {
    beta: String,
    gamma: String,
    zeta: String,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u64,
}

#[derive(Serialize, Deserialize)]
struct Record {
    version: u64,
    kind: String,
    scalar: String,
    task: Task,
    arch: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gate_constants: Option<ConstantsRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_dim: Option<usize>,
    layers: Vec<LayerRecord>,
    #[serde(default)]
    gates: Vec<GateRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    passthrough: Option<Vec<Vec<usize>>>,
    head: HeadRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<Value>,
}

fn hex_vec<T: Scalar>(v: &[T]) -> Vec<String> {
    v.iter().map(|x| x.to_hex()).collect()
}

fn mat_record<T: Scalar>(m: &Mat<T>) -> MatRecord {
    MatRecord {
        rows: m.rows(),
        cols: m.cols(),
        data: hex_vec(m.as_slice()),
    }
}

fn parse_vec<T: Scalar>(v: &[String], what: &str) -> Result<Vec<T>> {
    v.iter()
        .map(|s| {
            T::from_hex(s).ok_or_else(|| {
                Error::CheckpointInvalid(format!("{what}: {s:?} is not a {} bit pattern", T::NAME))
            })
        })
        .collect()
}

fn parse_mat<T: Scalar>(m: &MatRecord, what: &str) -> Result<Mat<T>> {
    if m.rows * m.cols != m.data.len() {
        return Err(Error::CheckpointInvalid(format!(
            "{what}: {} values for a {}x{} matrix",
            m.data.len(),
            m.rows,
            m.cols
        )));
    }
    Mat::from_vec(m.rows, m.cols, parse_vec(&m.data, what)?)
        .map_err(|e| Error::CheckpointInvalid(format!("{what}: {e}")))
}

fn parse_row<T: Scalar>(v: &[String], what: &str) -> Result<Mat<T>> {
    Mat::row_vector(parse_vec(v, what)?).map_err(|e| Error::CheckpointInvalid(format!("{what}: {e}")))
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    f64::from_hex(s).ok_or_else(|| Error::CheckpointInvalid(format!("{what}: {s:?} is not an f64 bit pattern")))
}

fn write_record(record: &Record, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(record).map_err(|e| Error::CheckpointParse(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn read_record(path: &Path) -> Result<Record> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header: Header = serde_json::from_str(&text).map_err(|e| Error::CheckpointParse(e.to_string()))?;
    if header.version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion {
            found: header.version,
            expected: CHECKPOINT_VERSION,
        });
    }
    serde_json::from_str(&text).map_err(|e| Error::CheckpointParse(e.to_string()))
}

fn check_scalar<T: Scalar>(record: &Record) -> Result<()> {
    if record.scalar != T::NAME {
        return Err(Error::CheckpointInvalid(format!(
            "checkpoint holds {} parameters, expected {}",
            record.scalar,
            T::NAME
        )));
    }
    Ok(())
}

/// Writes `net` (and optionally the configuration that produced it).
pub fn save<T: Scalar>(net: &FeatureLevelNet<T>, path: impl AsRef<Path>, config: Option<&Value>) -> Result<()> {
    net.validate()?;
    let c = net.gates[0].constants;
    let record = Record {
        version: CHECKPOINT_VERSION,
        kind: KIND_FULL.into(),
        scalar: T::NAME.into(),
        task: net.task,
        arch: net.arch_string(),
        mode: Some(net.mode),
        gate_constants: Some(ConstantsRecord {
            beta: c.beta.to_hex(),
            gamma: c.gamma.to_hex(),
            zeta: c.zeta.to_hex(),
        }),
        input_dim: None,
        layers: net
            .layers
            .iter()
            .map(|l| LayerRecord {
                weights: mat_record(&l.weights),
                bias: hex_vec(l.bias.as_slice()),
                inputs: None,
            })
            .collect(),
        gates: net
            .gates
            .iter()
            .map(|g| GateRecord {
                log_alpha: hex_vec(&g.log_alpha),
            })
            .collect(),
        passthrough: None,
        head: HeadRecord {
            weights: mat_record(&net.head.weights),
            bias: hex_vec(net.head.bias.as_slice()),
            link: net.head.link,
            group_offsets: Some(net.head.group_offsets.clone()),
        },
        config: config.cloned(),
    };
    write_record(&record, path.as_ref())
}

fn full_from_record<T: Scalar>(record: &Record) -> Result<FeatureLevelNet<T>> {
    if record.kind != KIND_FULL {
        return Err(Error::CheckpointInvalid(format!(
            "expected a {KIND_FULL} checkpoint, found {}",
            record.kind
        )));
    }
    check_scalar::<T>(record)?;
    let c = record
        .gate_constants
        .as_ref()
        .ok_or_else(|| Error::CheckpointInvalid("missing gate constants".into()))?;
    let constants = GateConstants {
        beta: parse_f64(&c.beta, "gate constants")?,
        gamma: parse_f64(&c.gamma, "gate constants")?,
        zeta: parse_f64(&c.zeta, "gate constants")?,
    };
    constants
        .validate()
        .map_err(|e| Error::CheckpointInvalid(e.to_string()))?;
    let mut layers = Vec::with_capacity(record.layers.len());
    for (i, l) in record.layers.iter().enumerate() {
        let what = format!("layer {}", i + 1);
        layers.push(HiddenLayer {
            weights: parse_mat(&l.weights, &what)?,
            bias: parse_row(&l.bias, &what)?,
        });
    }
    let mut gates = Vec::with_capacity(record.gates.len());
    for (i, g) in record.gates.iter().enumerate() {
        let what = format!("layer {} gate", i + 1);
        gates.push(HardConcreteGate {
            log_alpha: parse_vec(&g.log_alpha, &what)?,
            constants,
        });
    }
    let head = GlmHead {
        weights: parse_mat(&record.head.weights, "head")?,
        bias: parse_row(&record.head.bias, "head")?,
        link: record.head.link,
        group_offsets: record
            .head
            .group_offsets
            .clone()
            .ok_or_else(|| Error::CheckpointInvalid("head: missing group offsets".into()))?,
    };
    let net = FeatureLevelNet {
        layers,
        gates,
        head,
        task: record.task,
        mode: record.mode.unwrap_or_default(),
    };
    net.validate()?;
    Ok(net)
}

/// Reads a gated-network checkpoint.
pub fn load<T: Scalar>(path: impl AsRef<Path>) -> Result<FeatureLevelNet<T>> {
    full_from_record(&read_record(path.as_ref())?)
}

/// Configuration embedded in a checkpoint of either kind, if any.
pub fn load_config(path: impl AsRef<Path>) -> Result<Option<Value>> {
    Ok(read_record(path.as_ref())?.config)
}

/// Writes a pruned network.
pub fn save_pruned<T: Scalar>(net: &PrunedNet<T>, path: impl AsRef<Path>, config: Option<&Value>) -> Result<()> {
    let record = Record {
        version: CHECKPOINT_VERSION,
        kind: KIND_PRUNED.into(),
        scalar: T::NAME.into(),
        task: net.task,
        arch: net.architecture(),
        mode: None,
        gate_constants: None,
        input_dim: Some(net.input_dim),
        layers: net
            .layers
            .iter()
            .map(|l| LayerRecord {
                weights: mat_record(&l.weights),
                bias: hex_vec(l.bias.as_slice()),
                inputs: Some(l.inputs.clone()),
            })
            .collect(),
        gates: Vec::new(),
        passthrough: Some(net.passthrough.clone()),
        head: HeadRecord {
            weights: mat_record(&net.head_weights),
            bias: hex_vec(net.head_bias.as_slice()),
            link: net.link,
            group_offsets: None,
        },
        config: config.cloned(),
    };
    write_record(&record, path.as_ref())
}

fn pruned_from_record<T: Scalar>(record: &Record) -> Result<PrunedNet<T>> {
    if record.kind != KIND_PRUNED {
        return Err(Error::CheckpointInvalid(format!(
            "expected a {KIND_PRUNED} checkpoint, found {}",
            record.kind
        )));
    }
    check_scalar::<T>(record)?;
    let input_dim = record
        .input_dim
        .ok_or_else(|| Error::CheckpointInvalid("missing input_dim".into()))?;
    let passthrough = record
        .passthrough
        .clone()
        .ok_or_else(|| Error::CheckpointInvalid("missing passthrough".into()))?;
    if passthrough.len() != record.layers.len() {
        return Err(Error::CheckpointInvalid(format!(
            "{} passthrough groups for {} layers",
            passthrough.len(),
            record.layers.len()
        )));
    }
    let mut layers = Vec::with_capacity(record.layers.len());
    let mut prev = input_dim;
    for (i, l) in record.layers.iter().enumerate() {
        let what = format!("layer {}", i + 1);
        let inputs = l
            .inputs
            .clone()
            .ok_or_else(|| Error::CheckpointInvalid(format!("{what}: missing inputs")))?;
        let weights: Mat<T> = parse_mat(&l.weights, &what)?;
        let bias: Mat<T> = parse_row(&l.bias, &what)?;
        if weights.cols() != inputs.len() || bias.cols() != weights.rows() {
            return Err(Error::CheckpointInvalid(format!(
                "{what}: weights {:?}, bias {:?} and {} inputs disagree",
                weights.shape(),
                bias.shape(),
                inputs.len()
            )));
        }
        if inputs.iter().chain(&passthrough[i]).any(|&j| j >= prev) {
            return Err(Error::CheckpointInvalid(format!(
                "{what}: column index out of range for input width {prev}"
            )));
        }
        prev = weights.rows();
        layers.push(PrunedLayer { inputs, weights, bias });
    }
    let net = PrunedNet {
        input_dim,
        layers,
        passthrough,
        head_weights: parse_mat(&record.head.weights, "head")?,
        head_bias: parse_row(&record.head.bias, "head")?,
        link: record.head.link,
        task: record.task,
    };
    if net.head_weights.cols() != net.effective_glm_width() || net.head_bias.cols() != net.outputs() {
        return Err(Error::CheckpointInvalid(format!(
            "head: weights {:?} do not match GLM width {}",
            net.head_weights.shape(),
            net.effective_glm_width()
        )));
    }
    Ok(net)
}

pub fn load_pruned<T: Scalar>(path: impl AsRef<Path>) -> Result<PrunedNet<T>> {
    pruned_from_record(&read_record(path.as_ref())?)
}

/// A checkpoint of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyNet<T> {
    Full(FeatureLevelNet<T>),
    Pruned(PrunedNet<T>),
}

impl<T: Scalar> AnyNet<T> {
    pub fn forward(&self, x: &Mat<T>) -> Result<Mat<T>> {
        match self {
            AnyNet::Full(n) => forward_eval(n, x),
            AnyNet::Pruned(n) => n.forward(x),
        }
    }

    pub fn task(&self) -> Task {
        match self {
            AnyNet::Full(n) => n.task,
            AnyNet::Pruned(n) => n.task,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            AnyNet::Full(n) => n.input_dim(),
            AnyNet::Pruned(n) => n.input_dim,
        }
    }
}

pub fn load_any<T: Scalar>(path: impl AsRef<Path>) -> Result<AnyNet<T>> {
    let record = read_record(path.as_ref())?;
    if record.kind == KIND_PRUNED {
        Ok(AnyNet::Pruned(pruned_from_record(&record)?))
    } else {
        Ok(AnyNet::Full(full_from_record(&record)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::prune;
    use crate::numerics::Rng;

    fn net(seed: u64) -> FeatureLevelNet<f64> {
        let mut rng = Rng::new(seed);
        let mut n = FeatureLevelNet::init(
            4,
            &[5, 3],
            2,
            Task::Multiclass,
            Mode::Proposed,
            GateConstants::default(),
            &mut rng,
        )
        .unwrap();
        let w = n.head.weights.as_slice().len();
        n.head.weights = Mat::from_vec(2, n.head.width(), rng.uniform(w, -1.0, 1.0).unwrap()).unwrap();
        n.gates[1].log_alpha = vec![-5.0, 0.1, 3.0, -0.0, 1e-300];
        n
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        let n = net(1);
        let cfg = serde_json::json!({"lambda": 0.1});
        save(&n, &p, Some(&cfg)).unwrap();
        let back: FeatureLevelNet<f64> = load(&p).unwrap();
        assert_eq!(n, back);
        assert_eq!(n.gates[1].log_alpha[3].to_bits(), back.gates[1].log_alpha[3].to_bits());
        assert_eq!(load_config(&p).unwrap(), Some(cfg));
        let p2 = dir.path().join("b.json");
        save(&back, &p2, Some(&serde_json::json!({"lambda": 0.1}))).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn f32_roundtrip_and_scalar_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        let n = FeatureLevelNet::<f32>::init(
            3,
            &[2],
            1,
            Task::Regression,
            Mode::Baseline,
            GateConstants::default(),
            &mut Rng::new(0),
        )
        .unwrap();
        save(&n, &p, None).unwrap();
        assert_eq!(load::<f32>(&p).unwrap(), n);
        assert!(matches!(load::<f64>(&p), Err(Error::CheckpointInvalid(_))));
    }

    #[test]
    fn pruned_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.json");
        let pr = prune(&net(2)).unwrap();
        save_pruned(&pr, &p, None).unwrap();
        assert_eq!(load_pruned::<f64>(&p).unwrap(), pr);
        assert!(matches!(load_any::<f64>(&p).unwrap(), AnyNet::Pruned(_)));
        assert!(matches!(load::<f64>(&p), Err(Error::CheckpointInvalid(_))));
    }

    #[test]
    fn distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.json");
        assert!(matches!(load::<f64>(&missing), Err(Error::MissingFile(_))));

        let p = dir.path().join("a.json");
        save(&net(3), &p, None).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();

        let trunc = dir.path().join("t.json");
        std::fs::write(&trunc, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load::<f64>(&trunc), Err(Error::CheckpointParse(_))));

        let ver = dir.path().join("v.json");
        std::fs::write(&ver, text.replacen("\"version\": 1", "\"version\": 7", 1)).unwrap();
        assert!(matches!(
            load::<f64>(&ver),
            Err(Error::CheckpointVersion { found: 7, expected: 1 })
        ));

        // drop one log-alpha entry from the second gate
        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["gates"][1]["log_alpha"].as_array_mut().unwrap().pop();
        let bad = dir.path().join("d.json");
        std::fs::write(&bad, v.to_string()).unwrap();
        match load::<f64>(&bad) {
            Err(Error::CheckpointInvalid(msg)) => assert!(msg.contains("layer 2"), "{msg}"),
            other => panic!("expected invalid checkpoint, got {other:?}"),
        }
    }
}
