use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::network::Task;
use crate::numerics::Mat;
use crate::scalar::Scalar;

use super::Dataset;

/// One label byte followed by 32·32·3 channel-major pixels.
pub const CIFAR_RECORD_BYTES: usize = 3073;
const PIXELS: usize = CIFAR_RECORD_BYTES - 1;

/// Reads CIFAR-10 binary batches and keeps the two requested classes;
/// `class_a` becomes label 0 and `class_b` label 1. Pixels are divided by
/// 255.
pub fn load_cifar10_binary<T: Scalar, P: AsRef<Path>>(
    batch_paths: &[P],
    class_a: u8,
    class_b: u8,
) -> Result<Dataset<T>> {
    if class_a == class_b || class_a > 9 || class_b > 9 {
        return Err(Error::Argument(format!(
            "need two distinct CIFAR-10 classes in 0..=9, got {class_a} and {class_b}"
        )));
    }
    let scale = T::lit(255.0);
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for path in batch_paths {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() % CIFAR_RECORD_BYTES != 0 {
            return Err(Error::format(
                path,
                FormatError::RecordSize {
                    len: bytes.len(),
                    record: CIFAR_RECORD_BYTES,
                },
            ));
        }
        for record in bytes.chunks_exact(CIFAR_RECORD_BYTES) {
            let label = match record[0] {
                c if c == class_a => T::zero(),
                c if c == class_b => T::one(),
                _ => continue,
            };
            labels.push(label);
            pixels.extend(record[1..].iter().map(|&b| T::from_u8(b).unwrap() / scale));
        }
    }
    let n = labels.len();
    let names = ["r", "g", "b"]
        .iter()
        .flat_map(|ch| (0..PIXELS / 3).map(move |i| format!("{ch}{}_{}", i / 32, i % 32)))
        .collect();
    Dataset::new(Mat::from_vec(n, PIXELS, pixels)?, labels, Task::Binary, names)
}
