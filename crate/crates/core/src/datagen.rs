use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Synthetic dataset families used by `bench` and the scaling tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// i.i.d. uniform in the unit cube
    Uniform,
    /// a few tight Gaussian blobs
    Clustered,
    /// uniform bulk plus one far-away point
    Outlier,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Family::Uniform),
            "clustered" => Ok(Family::Clustered),
            "outlier" => Ok(Family::Outlier),
            other => Err(Error::Parameter(format!("unknown dataset family `{}`", other))),
        }
    }
}

/// Deterministic sample of `n` points in `R^dim` from the given family.
pub fn generate(family: Family, n: usize, dim: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || dim == 0 {
        return Err(Error::Parameter("need n >= 1 and dim >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = match family {
        Family::Uniform => (0..n)
            .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
            .collect(),
        Family::Clustered => {
            let k = 4.min(n);
            let centers: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
                .collect();
            (0..n)
                .map(|i| {
                    let c = &centers[i % k];
                    c.iter()
                        .map(|&x| x + 0.05 * (rng.gen::<f64>() - 0.5))
                        .collect()
                })
                .collect()
        }
        Family::Outlier => {
            let mut rows: Vec<Vec<f64>> = (0..n.saturating_sub(1))
                .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
                .collect();
            rows.push((0..dim).map(|_| 25.0).collect());
            rows
        }
    };
    let data = Dataset::from_rows(&rows)?;
    // exact duplicates are measure-zero for these generators, but a build
    // would hard-fail on one, so double-check
    if let Some((a, b)) = data.find_duplicate() {
        return Err(Error::DuplicatePoint { a, b });
    }
    Ok(data)
}
