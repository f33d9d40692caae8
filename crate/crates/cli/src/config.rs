//! Run configuration files.

use std::path::{Path, PathBuf};

use leveling::data::{
    gen_ixor, load_cal_housing, load_cal_housing_raw, load_cifar10_binary, load_mnist, load_table, split,
    OCEAN_PROXIMITY,
};
use leveling::network::LOG_ALPHA_INIT;
use leveling::{Dataset, MetricKind, Mode, Task, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable naming the directory relative dataset paths are
/// resolved against.
pub const DATA_DIR_ENV: &str = "LEVELING_DATA_DIR";

pub const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];
pub const CIFAR_TRAIN_BATCHES: [&str; 5] = [
    "data_batch_1.bin",
    "data_batch_2.bin",
    "data_batch_3.bin",
    "data_batch_4.bin",
    "data_batch_5.bin",
];
pub const CIFAR_TEST_BATCH: &str = "test_batch.bin";

/// When Cal Housing statistics are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalize {
    /// z-score with statistics over every row, then split.
    #[default]
    AllRows,
    /// Split first and z-score with training statistics only.
    TrainSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Freshly generated IXOR rows, split 4:1.
    Ixor { rows: usize, seed: u64 },
    /// Numeric CSV whose last column is `label`. Without `test_path` the
    /// file is split 4:1.
    Table {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test_path: Option<PathBuf>,
    },
    /// Directory holding the four standard IDX files.
    Mnist { dir: PathBuf },
    CalHousing {
        path: PathBuf,
        #[serde(default)]
        normalize: Normalize,
    },
    /// Directory of CIFAR-10 binary batches; `class_a` becomes label 0.
    Cifar10 { dir: PathBuf, class_a: u8, class_b: u8 },
}

impl DataSource {
    /// Every file the source reads.
    pub fn files(&self) -> Vec<PathBuf> {
        match self {
            DataSource::Ixor { .. } => Vec::new(),
            DataSource::Table { path, test_path } => std::iter::once(path.clone()).chain(test_path.clone()).collect(),
            DataSource::Mnist { dir } => MNIST_FILES.iter().map(|f| dir.join(f)).collect(),
            DataSource::CalHousing { path, .. } => vec![path.clone()],
            DataSource::Cifar10 { dir, .. } => CIFAR_TRAIN_BATCHES
                .iter()
                .chain(std::iter::once(&CIFAR_TEST_BATCH))
                .map(|f| dir.join(f))
                .collect(),
        }
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            DataSource::Ixor { .. } => {}
            DataSource::Table { path, test_path } => {
                fix(path);
                if let Some(t) = test_path {
                    fix(t);
                }
            }
            DataSource::Mnist { dir } | DataSource::Cifar10 { dir, .. } => fix(dir),
            DataSource::CalHousing { path, .. } => fix(path),
        }
    }

    /// Loads the train and test sets.
    pub fn load(&self, task: Task, split_seed: u64) -> Result<(Dataset, Dataset), CliError> {
        Ok(match self {
            DataSource::Ixor { rows, seed } => split(&gen_ixor(*rows, *seed)?, split_seed)?,
            DataSource::Table { path, test_path } => {
                let d = load_table(path, task)?;
                match test_path {
                    Some(t) => (d, load_table(t, task)?),
                    None => split(&d, split_seed)?,
                }
            }
            DataSource::Mnist { dir } => {
                let f = |i: usize| dir.join(MNIST_FILES[i]);
                (load_mnist(f(0), f(1))?, load_mnist(f(2), f(3))?)
            }
            DataSource::CalHousing { path, normalize } => match normalize {
                Normalize::AllRows => split(&load_cal_housing(path)?, split_seed)?,
                Normalize::TrainSplit => {
                    let (mut train, mut test) = split(&load_cal_housing_raw(path)?, split_seed)?;
                    let numeric: Vec<usize> = (0..train.dim() - OCEAN_PROXIMITY.len()).collect();
                    let stats = train.fit_standardization(&numeric);
                    train.standardize(&stats);
                    test.standardize(&stats);
                    (train, test)
                }
            },
            DataSource::Cifar10 { dir, class_a, class_b } => {
                let train: Vec<PathBuf> = CIFAR_TRAIN_BATCHES.iter().map(|f| dir.join(f)).collect();
                (
                    load_cifar10_binary(&train, *class_a, *class_b)?,
                    load_cifar10_binary(&[dir.join(CIFAR_TEST_BATCH)], *class_a, *class_b)?,
                )
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    /// Defaults to the checkpoint path with a `.history.csv` extension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<PathBuf>,
}

fn default_lambda() -> f64 {
    TrainConfig::default().lambda
}
fn default_lr() -> f64 {
    TrainConfig::default().lr
}
fn default_batch_size() -> usize {
    TrainConfig::default().batch_size
}
fn default_iterations() -> usize {
    TrainConfig::default().iterations
}
fn default_eval_every() -> usize {
    TrainConfig::default().eval_every
}
fn default_log_alpha_init() -> f64 {
    LOG_ALPHA_INIT
}

/// One experiment. `task`, `dataset` and `architecture` are required; the
/// training fields fall back to the library defaults.
///
/// `output` is never embedded in checkpoints, so where a run is written
/// does not change its bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub dataset: DataSource,
    /// Input width, hidden widths, output width.
    pub architecture: Vec<usize>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub lambda_warmup_iters: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Seed of the 4:1 train/test split for sources without a test file.
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    #[serde(default)]
    pub metric: Option<MetricKind>,
    #[serde(default = "default_log_alpha_init")]
    pub log_alpha_init: f64,
    #[serde(default, skip_serializing)]
    pub output: OutputPaths,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::json("config", e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::json(&path.display().to_string(), e))
    }

    /// Makes dataset paths absolute against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        self.dataset.resolve(base);
    }

    /// Fills every optional training field with its effective value.
    pub fn apply_defaults(&mut self) {
        let train = self.train_config();
        self.lambda_warmup_iters = Some(train.warmup());
        self.metric = Some(self.metric.unwrap_or(MetricKind::default_for(self.task)));
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.architecture.len() < 2 || self.architecture.contains(&0) {
            return Err(CliError::usage(format!(
                "architecture needs an input and an output width, all positive, got {:?}",
                self.architecture
            )));
        }
        if !(self.lambda >= 0.0) {
            return Err(CliError::usage(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        self.train_config().validate()?;
        for f in self.dataset.files() {
            if !f.exists() {
                return Err(CliError::data(format!("dataset file not found: {}", f.display())));
            }
        }
        Ok(())
    }

    pub fn hidden(&self) -> &[usize] {
        &self.architecture[1..self.architecture.len() - 1]
    }

    pub fn outputs(&self) -> usize {
        *self.architecture.last().expect("validated architecture")
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lambda: self.lambda,
            lr: self.lr,
            batch_size: self.batch_size,
            iterations: self.iterations,
            seed: self.seed,
            lambda_warmup_iters: self.lambda_warmup_iters,
            eval_every: self.eval_every,
            mode: self.mode,
            metric: self.metric,
            log_alpha_init: self.log_alpha_init,
            ..TrainConfig::default()
        }
    }
}

/// Configs shipped with the binary, addressable by name.
pub const SHIPPED: [(&str, &str); 4] = [
    ("ixor", include_str!("../configs/ixor.json")),
    ("mnist", include_str!("../configs/mnist.json")),
    ("cal-housing", include_str!("../configs/cal-housing.json")),
    ("cifar-cat-deer", include_str!("../configs/cifar-cat-deer.json")),
];

pub fn shipped(name: &str) -> Option<&'static str> {
    SHIPPED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_configs_parse_with_expected_architectures() {
        let arch: Vec<Vec<usize>> = SHIPPED
            .iter()
            .map(|(_, t)| RunConfig::from_json(t).unwrap().architecture)
            .collect();
        assert_eq!(
            arch,
            vec![
                vec![3, 16, 8, 2],
                vec![784, 300, 100, 10],
                vec![13, 64, 32, 1],
                vec![3072, 2048, 1024, 2],
            ]
        );
    }

    #[test]
    fn unknown_and_missing_keys_are_named() {
        let e = RunConfig::from_json(r#"{"task":"binary","dataset":{"kind":"ixor","rows":10,"seed":0},"architecture":[3,2],"lamda":1}"#)
            .unwrap_err();
        assert_eq!(e.code, 1);
        assert!(e.message.contains("lamda"), "{}", e.message);
        let e = RunConfig::from_json(r#"{"task":"binary","dataset":{"kind":"ixor","rows":10,"seed":0}}"#).unwrap_err();
        assert_eq!(e.code, 1);
        assert!(e.message.contains("architecture"), "{}", e.message);
        let e = RunConfig::from_json(r#"{"task":"binary","dataset":{"kind":"ixor","rows":10,"sed":0},"architecture":[3,2]}"#)
            .unwrap_err();
        assert!(e.message.contains("sed"), "{}", e.message);
    }

    #[test]
    fn syntax_errors_are_parse_errors() {
        assert_eq!(RunConfig::from_json("{\"task\":").unwrap_err().code, 2);
    }

    #[test]
    fn defaults_are_made_explicit() {
        let mut c = RunConfig::from_json(
            r#"{"task":"regression","dataset":{"kind":"ixor","rows":10,"seed":0},"architecture":[3,4,1],"iterations":50}"#,
        )
        .unwrap();
        c.apply_defaults();
        assert_eq!(c.lambda_warmup_iters, Some(5));
        assert_eq!(c.metric, Some(MetricKind::Rmse));
        let v = serde_json::to_value(&c).unwrap();
        assert!(v.get("output").is_none());
        assert_eq!(v["lr"], 1e-3);
    }
}
