#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rlfs::dataset::BCCDS_FEATURES;
use rlfs::{Dataset, Matrix};

/// `n` samples, feature 0 decides the label (`y = 1` iff `x0 > 0.5`, with a
/// gap around the boundary), the remaining `d - 1` features are uniform noise.
pub fn one_informative_feature(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = u8::from(i % 2 == 1);
        let x0 = if label == 1 {
            rng.gen_range(0.6..1.0)
        } else {
            rng.gen_range(0.0..0.4)
        };
        let mut row = vec![x0];
        row.extend((1..d).map(|_| rng.gen_range(0.0..1.0)));
        rows.push(row);
        y.push(label);
    }
    let names = (0..d).map(|i| format!("f{i}")).collect();
    Dataset::new(names, Matrix::from_rows(&rows).unwrap(), y).unwrap()
}

/// Random data shaped like the Coimbra set: `n` rows over the nine BCCDS
/// column names, labels loosely tied to two of the columns.
pub fn bccds_shaped(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..9).map(|j| rng.gen_range(0.0..(10.0 * (j + 1) as f64))).collect();
        let score = row[2] / 30.0 + row[7] / 80.0 + rng.gen_range(-0.5..0.5);
        y.push(u8::from(score > 1.0));
        rows.push(row);
    }
    let names = BCCDS_FEATURES.iter().map(|s| s.to_string()).collect();
    Dataset::new(names, Matrix::from_rows(&rows).unwrap(), y).unwrap()
}

/// `$RLFS_BCCDS_CSV`, else `data/dataR2.csv` at the workspace root.
pub fn bccds_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("RLFS_BCCDS_CSV") {
        let p = PathBuf::from(p);
        return p.is_file().then_some(p);
    }
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/dataR2.csv");
    p.is_file().then_some(p)
}

/// Writes `ds` as a CSV with a trailing `Classification` column, positives as
/// `2` and negatives as `1`.
pub fn write_labelled_csv(ds: &Dataset, path: &std::path::Path) {
    let mut out = ds.feature_names().join(",") + ",Classification\n";
    for (row, &y) in ds.x().iter_rows().zip(ds.y()) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push_str(if y == 1 { ",2\n" } else { ",1\n" });
    }
    std::fs::write(path, out).unwrap();
}
