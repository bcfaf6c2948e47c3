//! Bundled desk-scale datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{read_csv, Dataset, LabelMatrix, Task};
use crate::error::{Error, Result};

const DIGITS_CSV: &str = include_str!("../data/digits.csv");

/// 8×8 handwritten digits (1797 images, 64 pixel intensities in 0..=16,
/// classes "0".."9"), from the UCI optical recognition of handwritten
/// digits test set.
pub fn digits() -> Dataset {
    read_csv(DIGITS_CSV.as_bytes(), "digit", Task::Classification).expect("bundled digits csv is valid")
}

/// Seeded synthetic regression problem on `d` uniform [0, 1) features.
///
/// Every even-indexed feature carries a linear term, every fourth feature
/// interacts with the informative feature two columns to its right, and
/// Gaussian noise with standard deviation `noise` is added. Informative
/// columns are spread over the whole feature range, so dropping trailing
/// columns loses signal.
pub fn synthetic_regression(n: usize, d: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::invalid(format!("noise level {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise).map_err(|e| Error::invalid(e.to_string()))?;
    let mut features = Vec::with_capacity(n * d);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let mut y = 0.0;
        for j in (0..d).step_by(2) {
            y += row[j];
            if j % 4 == 0 && j + 2 < d {
                y += row[j] * row[j + 2];
            }
        }
        y += normal.sample(&mut rng);
        features.extend(row);
        targets.push(y);
    }
    Dataset::new(features, d, LabelMatrix::regression(targets)?)
}
