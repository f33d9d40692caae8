use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::io::write_atomic;
use crate::network::Task;
use crate::numerics::Mat;
use crate::scalar::Scalar;

use super::Dataset;

/// Name of the label column in table CSVs.
pub const LABEL_COLUMN: &str = "label";

/// Writes a dataset as CSV: one column per feature, then `label`. Values
/// use the shortest representation that parses back to the same number.
pub fn save_table<T: Scalar>(dataset: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Argument(e.to_string());
    let mut header: Vec<&str> = dataset.feature_names.iter().map(String::as_str).collect();
    header.push(LABEL_COLUMN);
    w.write_record(&header).map_err(csv_err)?;
    for r in 0..dataset.len() {
        let mut row: Vec<String> = dataset.features.row(r).iter().map(|v| v.to_string()).collect();
        row.push(dataset.labels[r].to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Argument(e.to_string()))?;
    write_atomic(path, &bytes)
}

/// Reads a CSV written by [`save_table`]: a header whose last column is
/// `label`, then numeric rows.
pub fn load_table<T: Scalar>(path: impl AsRef<Path>, task: Task) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let csv_err = |row: usize, e: csv::Error| Error::format(path, FormatError::Csv { row, message: e.to_string() });
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(0, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.last().map(String::as_str) != Some(LABEL_COLUMN) {
        return Err(Error::format(path, FormatError::MissingColumn(LABEL_COLUMN.into())));
    }
    let dim = header.len() - 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_err(row, e))?;
        for (c, field) in record.iter().enumerate() {
            let v = field
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::format(
                        path,
                        FormatError::NonNumeric {
                            row,
                            column: header[c].clone(),
                            value: field.into(),
                        },
                    )
                })?;
            if c < dim {
                features.push(T::lit(v));
            } else {
                labels.push(T::lit(v));
            }
        }
    }
    let n = labels.len();
    Dataset::new(Mat::from_vec(n, dim, features)?, labels, task, header[..dim].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_ixor;

    #[test]
    fn roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let d = gen_ixor::<f64>(50, 3).unwrap();
        save_table(&d, &p).unwrap();
        let back: Dataset<f64> = load_table(&p, Task::Binary).unwrap();
        assert_eq!(back, d);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("x1,x2,x3,label\n"));
    }

    #[test]
    fn rejects_bad_tables() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(matches!(
            load_table::<f64>(&p, Task::Binary),
            Err(Error::Format { kind: FormatError::MissingColumn(_), .. })
        ));
        std::fs::write(&p, "a,label\n1,2\nx,1\n").unwrap();
        assert!(matches!(
            load_table::<f64>(&p, Task::Binary),
            Err(Error::Format { kind: FormatError::NonNumeric { row: 2, .. }, .. })
        ));
        std::fs::write(&p, "a,label\n1,2,3\n").unwrap();
        assert!(matches!(
            load_table::<f64>(&p, Task::Binary),
            Err(Error::Format { kind: FormatError::Csv { row: 1, .. }, .. })
        ));
    }
}
