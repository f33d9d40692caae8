//! Datasets: the IXOR generator, MNIST / CIFAR-10 / California Housing
//! loaders, a plain CSV table format, standardization and the seeded
//! train/test split.

mod cifar;
mod housing;
mod ixor;
mod mnist;
mod table;

pub use cifar::{load_cifar10_binary, CIFAR_RECORD_BYTES};
pub use housing::{load_cal_housing, load_cal_housing_raw, OCEAN_PROXIMITY};
pub use ixor::{gen_ixor, ixor_label};
pub use mnist::{load_mnist, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use table::{load_table, save_table, LABEL_COLUMN};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Task;
use crate::numerics::{Mat, Rng};
use crate::scalar::Scalar;

/// Per-column mean and (population) standard deviation used to z-score
/// features and, for regression, the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    /// Indices of the standardized feature columns.
    pub columns: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub target: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub features: Mat<T>,
    /// Class index, 0/1 label or real-valued target per row.
    pub labels: Vec<T>,
    pub task: Task,
    pub feature_names: Vec<String>,
    pub standardization: Option<Standardization>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(features: Mat<T>, labels: Vec<T>, task: Task, feature_names: Vec<String>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Shape {
                op: "dataset",
                lhs: features.shape(),
                rhs: (labels.len(), 1),
            });
        }
        if feature_names.len() != features.cols() {
            return Err(Error::Argument(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.cols()
            )));
        }
        if !features.is_finite() || labels.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset".into()));
        }
        Ok(Dataset {
            features,
            labels,
            task,
            feature_names,
            standardization: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Labels as an `N × 1` target column.
    pub fn targets(&self) -> Mat<T> {
        Mat::column(self.labels.clone()).expect("labels are finite")
    }

    /// Number of classes for classification tasks (largest label + 1,
    /// at least 2); 1 for regression.
    pub fn num_classes(&self) -> usize {
        match self.task {
            Task::Regression => 1,
            _ => {
                let max = self.labels.iter().filter_map(|v| v.to_usize()).max().unwrap_or(0);
                (max + 1).max(2)
            }
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            task: self.task,
            feature_names: self.feature_names.clone(),
            standardization: self.standardization.clone(),
        }
    }

    /// First `n` rows (or all, if fewer).
    pub fn head(&self, n: usize) -> Self {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.subset(&idx)
    }

    /// Computes z-score statistics over `columns` (and the target for
    /// regression) from this dataset's rows.
    pub fn fit_standardization(&self, columns: &[usize]) -> Standardization {
        let n = self.len().max(1) as f64;
        let mut mean = Vec::with_capacity(columns.len());
        let mut std = Vec::with_capacity(columns.len());
        for &c in columns {
            let (m, s) = mean_std(self.features.column_values(c).iter().map(|v| v.as_f64()), n);
            mean.push(m);
            std.push(s);
        }
        let target = (self.task == Task::Regression)
            .then(|| mean_std(self.labels.iter().map(|v| v.as_f64()), n));
        Standardization {
            columns: columns.to_vec(),
            mean,
            std,
            target,
        }
    }

    /// Applies previously fitted statistics. Columns with zero spread are
    /// only centered.
    pub fn standardize(&mut self, stats: &Standardization) {
        let cols = self.features.cols();
        for r in 0..self.features.rows() {
            let row = self.features.row_mut(r);
            for ((&c, &m), &s) in stats.columns.iter().zip(&stats.mean).zip(&stats.std) {
                if c < cols {
                    row[c] = T::lit(scale(row[c].as_f64(), m, s));
                }
            }
        }
        if let Some((m, s)) = stats.target {
            for y in &mut self.labels {
                *y = T::lit(scale(y.as_f64(), m, s));
            }
        }
        self.standardization = Some(stats.clone());
    }
}

fn scale(v: f64, mean: f64, std: f64) -> f64 {
    if std > 0.0 {
        (v - mean) / std
    } else {
        v - mean
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone, n: f64) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Seeded shuffle followed by a split at `⌊ratio·N⌋`. Returns the train
/// and test index sets.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut perm = Rng::new(seed).permutation(n);
    let cut = (train_fraction * n as f64).floor() as usize;
    let test = perm.split_off(cut);
    Ok((perm, test))
}

/// 4:1 seeded train/test split.
pub fn split<T: Scalar>(dataset: &Dataset<T>, seed: u64) -> Result<(Dataset<T>, Dataset<T>)> {
    if dataset.len() < 5 {
        return Err(Error::Argument(format!(
            "need at least 5 rows to split, got {}",
            dataset.len()
        )));
    }
    let (train, test) = split_indices(dataset.len(), 0.8, seed)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> Dataset<f64> {
        let x: Vec<f64> = (0..n * 2).map(|v| v as f64).collect();
        let y: Vec<f64> = (0..n).map(|v| v as f64).collect();
        Dataset::new(
            Mat::from_vec(n, 2, x).unwrap(),
            y,
            Task::Regression,
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn split_sizes_and_partition() {
        let d = toy(100);
        let (tr, te) = split(&d, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (80, 20));
        let mut all: Vec<usize> = tr.labels.iter().chain(&te.labels).map(|&v| v as usize).collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        let (tr2, _) = split(&d, 1).unwrap();
        assert_eq!(tr, tr2);
        let (tr3, _) = split(&d, 2).unwrap();
        assert_ne!(tr, tr3);
    }

    #[test]
    fn split_floor_and_minimum() {
        let (tr, te) = split(&toy(7), 0).unwrap();
        assert_eq!((tr.len(), te.len()), (5, 2));
        assert!(split(&toy(4), 0).is_err());
    }

    #[test]
    fn standardize_with_train_statistics() {
        let d = toy(10);
        let (mut tr, mut te) = split(&d, 3).unwrap();
        let stats = tr.fit_standardization(&[0, 1]);
        tr.standardize(&stats);
        te.standardize(&stats);
        for c in 0..2 {
            let col = tr.features.column_values(c);
            let m = col.iter().sum::<f64>() / col.len() as f64;
            assert!(m.abs() < 1e-12);
        }
        let (tm, ts) = stats.target.unwrap();
        let raw = d.labels[te_index(&d, &te)];
        assert!((te.labels[0] - (raw - tm) / ts).abs() < 1e-12);
    }

    fn te_index(d: &Dataset<f64>, te: &Dataset<f64>) -> usize {
        // recover the original row of the first test sample from column b
        let b = te.standardization.as_ref().unwrap();
        let orig_b = te.features.get(0, 1) * b.std[1] + b.mean[1];
        (0..d.len()).find(|&i| (d.features.get(i, 1) - orig_b).abs() < 1e-9).unwrap()
    }

    #[test]
    fn dataset_validation() {
        let m = Mat::<f64>::zeros(3, 2);
        assert!(Dataset::new(m.clone(), vec![0.0; 2], Task::Binary, vec!["a".into(), "b".into()]).is_err());
        assert!(Dataset::new(m.clone(), vec![0.0; 3], Task::Binary, vec!["a".into()]).is_err());
        let d = Dataset::new(m, vec![0.0, 1.0, 4.0], Task::Multiclass, vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(d.num_classes(), 5);
    }
}
