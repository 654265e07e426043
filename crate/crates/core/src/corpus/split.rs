use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("split sizes {requested} exceed {available} units")]
    TooLarge { requested: usize, available: usize },
    #[error("ratios must be non-negative and sum to 1, got {0:?}")]
    BadRatios([f64; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SplitSizes {
    Counts { train: usize, dev: usize, test: usize },
    Ratios { train: f64, dev: f64, test: f64 },
}

impl SplitSizes {
    /// `(train, dev, test)` counts for `n` units. With ratios, dev and test are
    /// rounded and train takes the rest.
    pub fn resolve(&self, n: usize) -> Result<(usize, usize, usize), SplitError> {
        match *self {
            SplitSizes::Counts { train, dev, test } => {
                let requested = train + dev + test;
                if requested > n {
                    return Err(SplitError::TooLarge { requested, available: n });
                }
                Ok((train, dev, test))
            }
            SplitSizes::Ratios { train, dev, test } => {
                let r = [train, dev, test];
                if r.iter().any(|x| !x.is_finite() || *x < 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
                    return Err(SplitError::BadRatios(r));
                }
                let d = (dev * n as f64).round() as usize;
                let t = ((test * n as f64).round() as usize).min(n - d.min(n));
                Ok((n - d.min(n) - t, d.min(n), t))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    pub test: Vec<T>,
    /// Units left over when counts do not cover the input.
    pub unused: Vec<T>,
}

fn cut<T>(mut units: Vec<T>, (tr, dv, ts): (usize, usize, usize)) -> DatasetSplit<T> {
    let unused = units.split_off(tr + dv + ts);
    let test = units.split_off(tr + dv);
    let dev = units.split_off(tr);
    DatasetSplit {
        train: units,
        dev,
        test,
        unused,
    }
}

/// Seeded shuffle, then train/dev/test in that order. Each unit is one thread.
pub fn split_dataset<T>(mut units: Vec<T>, sizes: SplitSizes, seed: u64) -> Result<DatasetSplit<T>, SplitError> {
    let counts = sizes.resolve(units.len())?;
    units.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(cut(units, counts))
}

/// Oldest units train, newer ones dev, the most recent test. Ties keep input order.
pub fn split_by_time<T>(mut units: Vec<T>, sizes: SplitSizes, time: impl Fn(&T) -> f64) -> Result<DatasetSplit<T>, SplitError> {
    let (tr, dv, ts) = sizes.resolve(units.len())?;
    units.sort_by(|a, b| time(a).total_cmp(&time(b)));
    // leftovers are the oldest units so test stays the most recent
    let skip = units.len() - (tr + dv + ts);
    let rest = units.split_off(skip);
    let mut split = cut(rest, (tr, dv, ts));
    split.unused = units;
    Ok(split)
}
