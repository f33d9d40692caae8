use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::network::Task;
use crate::numerics::Mat;
use crate::scalar::Scalar;

use super::Dataset;

pub const IDX_IMAGES_MAGIC: u32 = 2051;
pub const IDX_LABELS_MAGIC: u32 = 2049;

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| {
            Error::format(
                path,
                FormatError::Truncated {
                    expected: at + 4,
                    found: bytes.len(),
                },
            )
        })
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<()> {
    let found = be_u32(bytes, 0, path)?;
    if found != expected {
        return Err(Error::format(path, FormatError::BadMagic { expected, found }));
    }
    Ok(())
}

fn check_len(bytes: &[u8], expected: usize, path: &Path) -> Result<()> {
    if bytes.len() < expected {
        return Err(Error::format(
            path,
            FormatError::Truncated {
                expected,
                found: bytes.len(),
            },
        ));
    }
    Ok(())
}

/// Reads an MNIST image/label pair in IDX format. Pixels are divided by
/// 255; labels are class indices 0–9.
pub fn load_mnist<T: Scalar>(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset<T>> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let images = read(ip)?;
    let labels = read(lp)?;

    check_magic(&images, IDX_IMAGES_MAGIC, ip)?;
    let count = be_u32(&images, 4, ip)? as usize;
    let rows = be_u32(&images, 8, ip)? as usize;
    let cols = be_u32(&images, 12, ip)? as usize;
    let dim = rows * cols;
    check_len(&images, 16 + count * dim, ip)?;

    check_magic(&labels, IDX_LABELS_MAGIC, lp)?;
    let label_count = be_u32(&labels, 4, lp)? as usize;
    check_len(&labels, 8 + label_count, lp)?;
    if label_count != count {
        return Err(Error::format(
            lp,
            FormatError::CountMismatch {
                images: count,
                labels: label_count,
            },
        ));
    }

    let scale = T::lit(255.0);
    let pixels = images[16..16 + count * dim]
        .iter()
        .map(|&b| T::from_u8(b).unwrap() / scale)
        .collect();
    let y = labels[8..8 + count].iter().map(|&b| T::from_u8(b).unwrap()).collect();
    let names = (0..dim).map(|i| format!("px{}_{}", i / cols.max(1), i % cols.max(1))).collect();
    Dataset::new(Mat::from_vec(count, dim, pixels)?, y, Task::Multiclass, names)
}
