use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::numerics::Mat;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapFormat {
    Csv,
    Pgm,
}

/// Comma-separated rows with shortest round-trip decimal values.
pub fn heatmap_csv<T: Scalar>(m: &Mat<T>) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|v| format!("{}", v.as_f64())).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Binary (P5) 8-bit greymap. Values map linearly from
/// `[−max|w|, +max|w|]` onto `[0, 255]`, so zero lands on 128 (rounded
/// midpoint); an all-zero matrix is uniformly 128.
pub fn heatmap_pgm<T: Scalar>(m: &Mat<T>) -> Result<Vec<u8>> {
    if !m.is_finite() {
        return Err(Error::NonFinite("heatmap".into()));
    }
    let peak = m.max_abs().as_f64();
    let mut out = format!("P5\n{} {}\n255\n", m.cols(), m.rows()).into_bytes();
    out.extend(m.as_slice().iter().map(|v| {
        let unit = if peak > 0.0 { v.as_f64() / peak } else { 0.0 };
        ((unit + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8
    }));
    Ok(out)
}

pub fn export_heatmap<T: Scalar>(m: &Mat<T>, path: impl AsRef<Path>, format: HeatmapFormat) -> Result<()> {
    let bytes = match format {
        HeatmapFormat::Csv => heatmap_csv(m).into_bytes(),
        HeatmapFormat::Pgm => heatmap_pgm(m)?,
    };
    write_atomic(path, &bytes)
}
