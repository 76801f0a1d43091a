//! Min-Max (per feature), ℓ1 and ℓ2 (per sample) normalization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationKind {
    MinMax,
    L1,
    L2,
}

impl NormalizationKind {
    pub const ALL: [NormalizationKind; 3] = [Self::MinMax, Self::L1, Self::L2];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::MinMax => "minmax",
            Self::L1 => "l1",
            Self::L2 => "l2",
        }
    }
}

impl fmt::Display for NormalizationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormalizationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minmax" | "min-max" | "mm" => Ok(Self::MinMax),
            "l1" => Ok(Self::L1),
            "l2" => Ok(Self::L2),
            _ => Err(Error::UnknownVariant {
                kind: "normalization",
                value: s.to_owned(),
            }),
        }
    }
}

/// A fitted normalization. Only Min-Max carries parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Normalizer {
    MinMax { ranges: Vec<(f64, f64)> },
    L1,
    L2,
}

impl Normalizer {
    /// Fits `kind` on training data; ℓ1/ℓ2 need no fitting.
    pub fn fit(kind: NormalizationKind, train: &Dataset) -> Normalizer {
        match kind {
            NormalizationKind::MinMax => fit_min_max(train),
            NormalizationKind::L1 => Normalizer::L1,
            NormalizationKind::L2 => Normalizer::L2,
        }
    }

    pub fn kind(&self) -> NormalizationKind {
        match self {
            Normalizer::MinMax { .. } => NormalizationKind::MinMax,
            Normalizer::L1 => NormalizationKind::L1,
            Normalizer::L2 => NormalizationKind::L2,
        }
    }

    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        let x = match self {
            Normalizer::MinMax { ranges } => {
                if ranges.len() != ds.n_features() {
                    return Err(Error::DimensionMismatch {
                        expected: ranges.len(),
                        found: ds.n_features(),
                    });
                }
                ds.x().map_rows(|row, out| {
                    for ((o, &v), &(lo, hi)) in out.iter_mut().zip(row).zip(ranges) {
                        *o = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
                    }
                })
            }
            Normalizer::L1 => ds
                .x()
                .map_rows(|row, out| scale_row(row, out, row.iter().map(|v| v.abs()).sum())),
            Normalizer::L2 => ds.x().map_rows(|row, out| {
                scale_row(row, out, row.iter().map(|v| v * v).sum::<f64>().sqrt())
            }),
        };
        ds.with_features(x)
    }
}

fn scale_row(row: &[f64], out: &mut [f64], norm: f64) {
    if norm > 0.0 {
        for (o, &v) in out.iter_mut().zip(row) {
            *o = v / norm;
        }
    } else {
        out.copy_from_slice(row);
    }
}

/// Per-feature `(min, max)` over `train`. An empty dataset yields `(0, 0)`
/// ranges, which transform to constant zeros.
pub fn fit_min_max(train: &Dataset) -> Normalizer {
    let d = train.n_features();
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
    for row in train.x().iter_rows() {
        for (r, &v) in ranges.iter_mut().zip(row) {
            r.0 = r.0.min(v);
            r.1 = r.1.max(v);
        }
    }
    if train.n_samples() == 0 {
        ranges.fill((0.0, 0.0));
    }
    Normalizer::MinMax { ranges }
}
