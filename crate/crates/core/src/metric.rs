use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, PointId};
use crate::error::{Error, Result};

/// A metric on coordinate vectors. Implementations must satisfy the metric
/// axioms (identity, symmetry, triangle inequality) for tree guarantees to
/// hold; the validator and property tests check this for the built-ins.
pub trait Distance: Send + Sync {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64;
}

/// The built-in coordinate metrics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Manhattan,
    Chebyshev,
}

impl Distance for MetricKind {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            MetricKind::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            MetricKind::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            MetricKind::Chebyshev => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        }
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(MetricKind::Euclidean),
            "manhattan" | "l1" => Ok(MetricKind::Manhattan),
            "chebyshev" | "linf" => Ok(MetricKind::Chebyshev),
            other => Err(Error::UnsupportedMetric(other.into())),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Manhattan => "manhattan",
            MetricKind::Chebyshev => "chebyshev",
        };
        f.write_str(name)
    }
}

/// A dataset paired with a metric and a running distance-evaluation counter.
/// Every pairwise distance computed through the session is counted once;
/// all complexity diagnostics are phrased in terms of this counter.
pub struct MetricSession<'a> {
    dataset: &'a Dataset,
    metric: &'a dyn Distance,
    evals: u64,
}

impl<'a> MetricSession<'a> {
    pub fn new(dataset: &'a Dataset, metric: &'a dyn Distance) -> Self {
        MetricSession {
            dataset,
            metric,
            evals: 0,
        }
    }

    #[inline]
    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    #[inline]
    pub fn evals(&self) -> u64 {
        self.evals
    }

    pub fn reset_evals(&mut self) {
        self.evals = 0;
    }

    /// Distance between two stored points, with id validation.
    pub fn distance(&mut self, a: PointId, b: PointId) -> Result<f64> {
        self.dataset.check_id(a)?;
        self.dataset.check_id(b)?;
        Ok(self.dist(a, b))
    }

    #[inline]
    pub(crate) fn dist(&mut self, a: PointId, b: PointId) -> f64 {
        self.evals += 1;
        self.metric.eval(self.dataset.point(a), self.dataset.point(b))
    }

    /// Uncounted variant for audits: keeps `evals` reflecting only the
    /// algorithm's own work, independent of any debug checks.
    #[inline]
    pub(crate) fn dist_unmetered(&self, a: PointId, b: PointId) -> f64 {
        self.metric.eval(self.dataset.point(a), self.dataset.point(b))
    }

    /// Distance from an arbitrary query vector to a stored point.
    pub fn distance_to_query(&mut self, q: &[f64], p: PointId) -> Result<f64> {
        self.dataset.check_id(p)?;
        if q.len() != self.dataset.dim() {
            return Err(Error::Parameter(format!(
                "query has {} coordinates, dataset has dimension {}",
                q.len(),
                self.dataset.dim()
            )));
        }
        Ok(self.dist_to(q, p))
    }

    #[inline]
    pub(crate) fn dist_to(&mut self, q: &[f64], p: PointId) -> f64 {
        self.evals += 1;
        self.metric.eval(q, self.dataset.point(p))
    }
}

/// A candidate point with its (already evaluated) distance to the current
/// query or insertion point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub id: PointId,
    pub dist: f64,
}

/// Sorted k-nearest-neighbor answer; `distances[j]` corresponds to `ids[j]`
/// and the pairs are ascending by `(distance, id)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborAnswer {
    pub ids: Vec<PointId>,
    pub distances: Vec<f64>,
}

impl NeighborAnswer {
    pub fn from_candidates(cands: Vec<Candidate>) -> Self {
        NeighborAnswer {
            ids: cands.iter().map(|c| c.id).collect(),
            distances: cands.iter().map(|c| c.dist).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(Error::Parameter(format!(
            "k = {} out of range for dataset of {} points",
            k, n
        )))
    } else {
        Ok(())
    }
}

/// Exact k-NN by exhaustive scan: the reference oracle for every search
/// algorithm in this crate. Performs exactly `|R|` distance evaluations and
/// breaks distance ties by ascending id.
pub fn knn_bruteforce(session: &mut MetricSession<'_>, q: &[f64], k: usize) -> Result<NeighborAnswer> {
    let data = session.dataset();
    check_k(k, data.len())?;
    if q.len() != data.dim() {
        return Err(Error::Parameter(format!(
            "query has {} coordinates, dataset has dimension {}",
            q.len(),
            data.dim()
        )));
    }
    let mut cands: Vec<Candidate> = data
        .ids()
        .map(|p| Candidate {
            id: p,
            dist: session.dist_to(q, p),
        })
        .collect();
    cands.sort_by(|a, b| a.dist.total_cmp(&b.dist).then(a.id.cmp(&b.id)));
    cands.truncate(k);
    Ok(NeighborAnswer::from_candidates(cands))
}

/// Largest and smallest pairwise distances of the dataset; requires at
/// least two points and `O(|R|^2)` distance evaluations.
pub fn diameter_and_dmin(session: &mut MetricSession<'_>) -> Result<(f64, f64)> {
    let n = session.dataset().len();
    if n < 2 {
        return Err(Error::Degenerate(
            "diameter and minimum separation need at least two points".into(),
        ));
    }
    let mut diam = f64::NEG_INFINITY;
    let mut dmin = f64::INFINITY;
    for a in 0..n as u32 {
        for b in (a + 1)..n as u32 {
            let d = session.dist(PointId(a), PointId(b));
            diam = diam.max(d);
            dmin = dmin.min(d);
        }
    }
    Ok((diam, dmin))
}

/// Aspect ratio `diam(R) / d_min(R)`; errors on duplicate points.
pub fn aspect_ratio(session: &mut MetricSession<'_>) -> Result<f64> {
    let (diam, dmin) = diameter_and_dmin(session)?;
    if dmin <= 0.0 {
        let (a, b) = session
            .dataset()
            .find_duplicate()
            .unwrap_or((0, 0));
        return Err(Error::DuplicatePoint { a, b });
    }
    Ok(diam / dmin)
}
