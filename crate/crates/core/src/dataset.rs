//! Tabular datasets with binary labels: CSV ingestion and seeded stratified
//! train/test splitting.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default header of the Breast Cancer Coimbra CSV.
pub const BCCDS_FEATURES: [&str; 9] = [
    "Age",
    "BMI",
    "Glucose",
    "Insulin",
    "HOMA",
    "Leptin",
    "Adiponectin",
    "Resistin",
    "MCP.1",
];
pub const BCCDS_LABEL_COLUMN: &str = "Classification";
/// BCCDS encodes healthy controls as `1` and patients as `2`.
pub const BCCDS_POSITIVE_LABEL: &str = "2";

/// Dense row-major matrix of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn map_rows(&self, mut f: impl FnMut(&[f64], &mut [f64])) -> Matrix {
        let mut data = vec![0.0; self.data.len()];
        for (i, out) in data.chunks_mut(self.cols.max(1)).enumerate().take(self.rows) {
            f(self.row(i), out);
        }
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn select_columns(&self, columns: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * columns.len());
        for row in self.iter_rows() {
            data.extend(columns.iter().map(|&c| row[c]));
        }
        Matrix {
            rows: self.rows,
            cols: columns.len(),
            data,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Feature matrix with named columns and `{0, 1}` labels (1 = positive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    feature_names: Vec<String>,
    x: Matrix,
    y: Vec<u8>,
}

impl Dataset {
    /// Checks shape agreement, finiteness and label range. Class balance is
    /// not checked here since split halves may legitimately be one-class.
    pub fn new(feature_names: Vec<String>, x: Matrix, y: Vec<u8>) -> Result<Self> {
        if feature_names.len() != x.cols() {
            return Err(Error::DimensionMismatch {
                expected: x.cols(),
                found: feature_names.len(),
            });
        }
        if y.len() != x.rows() {
            return Err(Error::DimensionMismatch {
                expected: x.rows(),
                found: y.len(),
            });
        }
        if let Some(pos) = x.as_slice().iter().position(|v| !v.is_finite()) {
            let cols = x.cols().max(1);
            return Err(Error::NonNumericCell {
                row: pos / cols,
                column: feature_names[pos % cols].clone(),
                value: x.as_slice()[pos].to_string(),
            });
        }
        if let Some(row) = y.iter().position(|&l| l > 1) {
            return Err(Error::UnknownLabelValue {
                row,
                value: y[row].to_string(),
            });
        }
        Ok(Dataset { feature_names, x, y })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn n_samples(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    /// `[negatives, positives]`
    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.y.iter().filter(|&&l| l == 1).count();
        [self.y.len() - pos, pos]
    }

    /// Rate of the most frequent class; 0 for an empty dataset.
    pub fn majority_rate(&self) -> f64 {
        if self.y.is_empty() {
            return 0.0;
        }
        let [neg, pos] = self.class_counts();
        neg.max(pos) as f64 / self.y.len() as f64
    }

    pub fn select_features(&self, columns: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.n_features()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.n_features(),
            });
        }
        Ok(Dataset {
            feature_names: columns
                .iter()
                .map(|&c| self.feature_names[c].clone())
                .collect(),
            x: self.x.select_columns(columns),
            y: self.y.clone(),
        })
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            x: self.x.select_rows(rows),
            y: rows.iter().map(|&r| self.y[r]).collect(),
        }
    }

    /// Same labels and names, new feature values.
    pub fn with_features(&self, x: Matrix) -> Result<Dataset> {
        Dataset::new(self.feature_names.clone(), x, self.y.clone())
    }
}

fn labels_match(cell: &str, positive: &str) -> bool {
    if cell == positive {
        return true;
    }
    match (cell.parse::<f64>(), positive.parse::<f64>()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

/// Reads a headed CSV. Every column other than `label_column` becomes a
/// feature, in header order. Cells equal to `positive_label` map to 1; the
/// single other label value maps to 0.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    positive_label: &str,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label_column, positive_label)
}

pub fn read_csv<R: std::io::Read>(
    reader: R,
    label_column: &str,
    positive_label: &str,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingColumn(label_column.to_owned()))?;
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != label_idx).collect();
    if feature_cols.is_empty() {
        return Err(Error::NoFeatures);
    }
    let positive_label = positive_label.trim();

    let mut data = Vec::new();
    let mut y = Vec::new();
    let mut negative_label: Option<String> = None;
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::RaggedRow {
                row,
                expected: headers.len(),
                found: record.len(),
            });
        }
        for &c in &feature_cols {
            let cell = &record[c];
            if cell.is_empty() {
                return Err(Error::MissingValue {
                    row,
                    column: headers[c].clone(),
                });
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => data.push(v),
                _ => {
                    return Err(Error::NonNumericCell {
                        row,
                        column: headers[c].clone(),
                        value: cell.to_owned(),
                    })
                }
            }
        }
        let label = &record[label_idx];
        if label.is_empty() {
            return Err(Error::MissingValue {
                row,
                column: headers[label_idx].clone(),
            });
        }
        if labels_match(label, positive_label) {
            y.push(1);
        } else {
            match &negative_label {
                None => {
                    negative_label = Some(label.to_owned());
                    y.push(0);
                }
                Some(neg) if labels_match(label, neg) => y.push(0),
                Some(_) => {
                    return Err(Error::UnknownLabelValue {
                        row,
                        value: label.to_owned(),
                    })
                }
            }
        }
    }
    if y.len() < 2 {
        return Err(Error::TooFewRows {
            required: 2,
            found: y.len(),
        });
    }
    let names = feature_cols.iter().map(|&c| headers[c].clone()).collect();
    let x = Matrix::new(y.len(), feature_cols.len(), data)?;
    let ds = Dataset::new(names, x, y)?;
    if ds.class_counts().contains(&0) {
        return Err(Error::SingleClass);
    }
    Ok(ds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDataset {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
    pub ratio: f64,
    /// Source row indices, ascending.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Per-class train counts: each class gets `floor(ratio * count)`, and the
/// shortfall to `round(ratio * n)` goes to the classes with the largest
/// fractional parts (lower label first on ties).
pub fn stratified_train_counts(class_counts: [usize; 2], ratio: f64) -> [usize; 2] {
    let n: usize = class_counts.iter().sum();
    let target = (ratio * n as f64).round() as usize;
    let quotas = class_counts.map(|c| ratio * c as f64);
    let mut counts = quotas.map(|q| q.floor() as usize);
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut remaining = target.saturating_sub(counts.iter().sum());
    for &c in order.iter().cycle().take(4) {
        if remaining == 0 {
            break;
        }
        if counts[c] < class_counts[c] {
            counts[c] += 1;
            remaining -= 1;
        }
    }
    counts
}

/// Seeded stratified split. `ratio` is the train fraction.
pub fn stratified_split(ds: &Dataset, ratio: f64, seed: u64) -> Result<SplitDataset> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::DegenerateSplit {
            ratio,
            reason: "ratio must lie strictly between 0 and 1".into(),
        });
    }
    let class_counts = ds.class_counts();
    let train_counts = stratified_train_counts(class_counts, ratio);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_indices = Vec::new();
    let mut test_indices = Vec::new();
    for class in 0..2u8 {
        let mut members: Vec<usize> = (0..ds.n_samples()).filter(|&i| ds.y[i] == class).collect();
        members.shuffle(&mut rng);
        let k = train_counts[class as usize];
        train_indices.extend_from_slice(&members[..k]);
        test_indices.extend_from_slice(&members[k..]);
    }
    train_indices.sort_unstable();
    test_indices.sort_unstable();

    if train_indices.is_empty() || test_indices.is_empty() {
        return Err(Error::DegenerateSplit {
            ratio,
            reason: format!(
                "train would have {} rows and test {}",
                train_indices.len(),
                test_indices.len()
            ),
        });
    }
    if train_counts.contains(&0) {
        return Err(Error::DegenerateSplit {
            ratio,
            reason: "train side would contain a single class".into(),
        });
    }

    Ok(SplitDataset {
        train: ds.select_rows(&train_indices),
        test: ds.select_rows(&test_indices),
        seed,
        ratio,
        train_indices,
        test_indices,
    })
}
