use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::network::Task;
use crate::numerics::Mat;
use crate::scalar::Scalar;

use super::Dataset;

pub const TARGET_COLUMN: &str = "median_house_value";
pub const NOMINAL_COLUMN: &str = "ocean_proximity";
/// Category order of the one-hot block.
pub const OCEAN_PROXIMITY: [&str; 5] = ["<1H OCEAN", "INLAND", "ISLAND", "NEAR BAY", "NEAR OCEAN"];

/// Parses the housing CSV without normalization: rows with any empty field
/// are dropped, the numeric columns keep file order and the nominal column
/// becomes a trailing 5-wide one-hot block.
pub fn load_cal_housing_raw<T: Scalar>(csv_path: impl AsRef<Path>) -> Result<Dataset<T>> {
    let path = csv_path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(file);
    let csv_err = |row: usize, e: csv::Error| Error::format(path, FormatError::Csv { row, message: e.to_string() });

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(0, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format(path, FormatError::MissingColumn(name.into())))
    };
    let target_col = find(TARGET_COLUMN)?;
    let nominal_col = find(NOMINAL_COLUMN)?;
    let numeric_cols: Vec<usize> = (0..header.len())
        .filter(|&c| c != target_col && c != nominal_col)
        .collect();

    let width = numeric_cols.len() + OCEAN_PROXIMITY.len();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_err(row, e))?;
        if record.iter().any(|f| f.trim().is_empty()) {
            continue;
        }
        let number = |c: usize| -> Result<T> {
            let raw = record[c].trim();
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(T::lit)
                .ok_or_else(|| {
                    Error::format(
                        path,
                        FormatError::NonNumeric {
                            row,
                            column: header[c].clone(),
                            value: raw.into(),
                        },
                    )
                })
        };
        for &c in &numeric_cols {
            features.push(number(c)?);
        }
        let category = record[nominal_col].trim();
        let hot = OCEAN_PROXIMITY.iter().position(|&k| k == category).ok_or_else(|| {
            Error::format(
                path,
                FormatError::UnknownCategory {
                    row,
                    value: category.into(),
                },
            )
        })?;
        features.extend((0..OCEAN_PROXIMITY.len()).map(|k| if k == hot { T::one() } else { T::zero() }));
        labels.push(number(target_col)?);
    }
    let mut names: Vec<String> = numeric_cols.iter().map(|&c| header[c].clone()).collect();
    names.extend(OCEAN_PROXIMITY.iter().map(|k| format!("{NOMINAL_COLUMN}={k}")));
    let n = labels.len();
    Dataset::new(Mat::from_vec(n, width, features)?, labels, Task::Regression, names)
}

/// [`load_cal_housing_raw`] followed by z-scoring every numeric column and
/// the target with statistics over all retained rows.
pub fn load_cal_housing<T: Scalar>(csv_path: impl AsRef<Path>) -> Result<Dataset<T>> {
    let mut d = load_cal_housing_raw(csv_path)?;
    let numeric: Vec<usize> = (0..d.dim() - OCEAN_PROXIMITY.len()).collect();
    let stats = d.fit_standardization(&numeric);
    d.standardize(&stats);
    Ok(d)
}
