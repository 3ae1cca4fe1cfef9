use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::{Dataset, PointId};
use crate::error::{Error, Result};
use crate::metric::{diameter_and_dmin, Distance, MetricKind, MetricSession};
use crate::search::QueryTrace;
use crate::tree::CompressedCoverTree;

/// Where the expansion-constant supremum was attained.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionWitness {
    pub center: PointId,
    pub radius: f64,
    pub inner: u64,
    pub outer: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionReport {
    pub c: f64,
    pub witness: Option<ExpansionWitness>,
}

/// Exact expansion constant
/// `c(R) = max(2, sup_t |B(p, 2t)| / |B(p, t)|)` over closed balls.
///
/// The radii range over the dyadic scales `t = d_min * 2^j` up to the
/// diameter, mirroring the dyadic ball structure that every cover-set
/// argument actually uses. Radii below the minimum pairwise distance are
/// excluded (there every ball degenerates to its center), and radii at
/// fractional positions between scales measure sampling artifacts rather
/// than growth: they would assign a uniformly spaced set an expansion
/// constant above its doubling behavior.
pub fn expansion_constant(session: &mut MetricSession<'_>) -> ExpansionReport {
    let data = session.dataset();
    let n = data.len();
    if n < 2 {
        return ExpansionReport {
            c: 2.0,
            witness: None,
        };
    }
    // one sorted distance row per point
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut d_min = f64::INFINITY;
    let mut diam = 0.0f64;
    for p in data.ids() {
        let mut row: Vec<f64> = data.ids().map(|r| session.dist(p, r)).collect();
        row.sort_by(f64::total_cmp);
        for &d in &row {
            if d > 0.0 {
                d_min = d_min.min(d);
                break;
            }
        }
        diam = diam.max(*row.last().unwrap());
        rows.push(row);
    }
    let count_leq = |row: &[f64], t: f64| row.partition_point(|&x| x <= t) as u64;

    let mut scales = vec![d_min];
    while *scales.last().unwrap() * 2.0 <= diam {
        let next = scales.last().unwrap() * 2.0;
        scales.push(next);
    }

    let mut best = f64::NEG_INFINITY;
    let mut witness = None;
    for (pi, row) in rows.iter().enumerate() {
        for &t in &scales {
            let inner = count_leq(row, t);
            let outer = count_leq(row, 2.0 * t);
            let ratio = outer as f64 / inner as f64;
            if ratio > best {
                best = ratio;
                witness = Some(ExpansionWitness {
                    center: PointId(pi as u32),
                    radius: t,
                    inner,
                    outer,
                });
            }
        }
    }
    ExpansionReport {
        c: best.max(2.0),
        witness,
    }
}

/// `|B(center, t) ∩ R|` by direct counting; used to re-verify witnesses.
pub fn ball_count(data: &Dataset, metric: &dyn Distance, center: PointId, t: f64) -> u64 {
    data.ids()
        .filter(|&r| metric.eval(data.point(center), data.point(r)) <= t)
        .count() as u64
}

/// Parameters of the grid-extension estimator for the minimized expansion
/// constant `c_m`.
#[derive(Clone, Debug)]
pub struct CmEstimateParams {
    /// base radius of the sampled scales `t ∈ {xi * 2^j}`
    pub xi: f64,
    /// strictly decreasing grid steps
    pub deltas: Vec<f64>,
    /// number of grid points (besides the data points) used as ball centers
    pub center_samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CmEstimate {
    pub delta: f64,
    pub sup_ratio: f64,
    pub centers: usize,
}

/// Upper-estimate the minimized expansion constant by embedding `R` into a
/// surrounding grid `δ·Z^n` clipped to a padded bounding box: the union
/// `U(δ) = (grid \ nearest-grid-images) ∪ R` has doubling behavior close
/// to `2^n`, and the returned supremum of `|B(p,2t) ∩ U| / |B(p,t) ∩ U|`
/// over sampled centers and scales converges to it as `δ` shrinks.
///
/// Supported for the built-in norms, whose unit basis vectors all have
/// norm 1. Desk-scale: cost grows like `(t/δ)^n` per ball, so keep the
/// dimension small and the schedule moderate.
pub fn cm_upper_estimate(
    data: &Dataset,
    norm: MetricKind,
    params: &CmEstimateParams,
) -> Result<Vec<CmEstimate>> {
    let n = data.dim();
    let rho = 1.0; // max norm of a standard basis vector, for all built-ins
    if !(params.xi > 0.0) {
        return Err(Error::Parameter("xi must be positive".into()));
    }
    if params.deltas.is_empty() {
        return Err(Error::Parameter("empty delta schedule".into()));
    }
    for w in params.deltas.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Parameter("delta schedule must strictly decrease".into()));
        }
    }
    let d_min = if data.len() >= 2 {
        let mut s = MetricSession::new(data, &norm);
        let (_, d_min) = diameter_and_dmin(&mut s)?;
        if d_min <= 0.0 {
            let (a, b) = data.find_duplicate().unwrap_or((0, 0));
            return Err(Error::DuplicatePoint { a, b });
        }
        d_min
    } else {
        f64::INFINITY
    };
    let limit = (params.xi / (n as f64 * rho)).min(d_min / (2.0 * n as f64 * rho));
    if params.deltas[0] >= limit {
        return Err(Error::Parameter(format!(
            "delta {} too coarse: must stay below {} for injective grid rounding",
            params.deltas[0], limit
        )));
    }

    // padded bounding box
    let diam = if data.len() >= 2 {
        let mut s = MetricSession::new(data, &norm);
        diameter_and_dmin(&mut s)?.0
    } else {
        0.0
    };
    let pad = 4.0 * diam.max(2.0 * params.xi);
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for p in data.ids() {
        for (d, &x) in data.point(p).iter().enumerate() {
            lo[d] = lo[d].min(x);
            hi[d] = hi[d].max(x);
        }
    }
    let box_lo: Vec<f64> = lo.iter().map(|&x| x - pad).collect();
    let box_hi: Vec<f64> = hi.iter().map(|&x| x + pad).collect();

    // sampled scales, at least one
    let t_max = diam.max(2.0 * params.xi);
    let mut scales = vec![params.xi];
    while *scales.last().unwrap() * 2.0 <= t_max {
        let next = scales.last().unwrap() * 2.0;
        scales.push(next);
    }

    let mut out = Vec::with_capacity(params.deltas.len());
    for &delta in &params.deltas {
        out.push(estimate_at_delta(
            data, norm, delta, &scales, &box_lo, &box_hi, n, rho, params,
        )?);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn estimate_at_delta(
    data: &Dataset,
    norm: MetricKind,
    delta: f64,
    scales: &[f64],
    box_lo: &[f64],
    box_hi: &[f64],
    n: usize,
    rho: f64,
    params: &CmEstimateParams,
) -> Result<CmEstimate> {
    // nearest-grid images of the data points (componentwise rounding is
    // nearest for all built-in norms); injective by the delta precondition
    let image: HashSet<Vec<i64>> = data
        .ids()
        .map(|p| {
            data.point(p)
                .iter()
                .map(|&x| (x / delta).round() as i64)
                .collect()
        })
        .collect();
    if image.len() != data.len() {
        return Err(Error::Internal("grid rounding collided".into()));
    }

    let idx_lo: Vec<i64> = box_lo.iter().map(|&x| (x / delta).ceil() as i64).collect();
    let idx_hi: Vec<i64> = box_hi.iter().map(|&x| (x / delta).floor() as i64).collect();
    let in_u_grid = |idx: &[i64]| {
        idx.iter()
            .zip(idx_lo.iter().zip(&idx_hi))
            .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
            && !image.contains(idx)
    };

    // |B(center, t) ∩ U|: walk the enclosing index cube, then add the data
    // points themselves (which replace their grid images in U)
    let ball = |center: &[f64], t: f64| -> u64 {
        let mut count = 0u64;
        let lo: Vec<i64> = center.iter().map(|&x| ((x - t) / delta).ceil() as i64).collect();
        let hi: Vec<i64> = center.iter().map(|&x| ((x + t) / delta).floor() as i64).collect();
        let mut idx = lo.clone();
        'cube: loop {
            let g: Vec<f64> = idx.iter().map(|&v| v as f64 * delta).collect();
            if in_u_grid(&idx) && norm.eval(center, &g) <= t {
                count += 1;
            }
            for d in 0..n {
                idx[d] += 1;
                if idx[d] <= hi[d] {
                    continue 'cube;
                }
                idx[d] = lo[d];
            }
            break;
        }
        for p in data.ids() {
            if norm.eval(center, data.point(p)) <= t {
                count += 1;
            }
        }
        count
    };

    // centers: the data points plus seeded grid samples from U
    let mut centers: Vec<Vec<f64>> = data.ids().map(|p| data.point(p).to_vec()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut attempts = 0;
    while centers.len() < data.len() + params.center_samples && attempts < params.center_samples * 20 {
        attempts += 1;
        let idx: Vec<i64> = idx_lo
            .iter()
            .zip(&idx_hi)
            .map(|(&lo, &hi)| rng.gen_range(lo..=hi))
            .collect();
        if in_u_grid(&idx) {
            centers.push(idx.iter().map(|&v| v as f64 * delta).collect());
        }
    }

    let mut sup = f64::NEG_INFINITY;
    let mut used = 0usize;
    for t in scales {
        // the ratio bound needs both balls fully inside the box
        let margin = 2.0 * t + n as f64 * delta * rho;
        for center in &centers {
            let inside = center
                .iter()
                .zip(box_lo.iter().zip(box_hi))
                .all(|(&x, (&lo, &hi))| x - lo >= margin && hi - x >= margin);
            if !inside {
                continue;
            }
            used += 1;
            let inner = ball(center, *t);
            let outer = ball(center, 2.0 * t);
            if inner > 0 {
                sup = sup.max(outer as f64 / inner as f64);
            }
        }
    }
    if !sup.is_finite() {
        return Err(Error::Parameter(
            "no admissible ball centers inside the padded box".into(),
        ));
    }
    Ok(CmEstimate {
        delta,
        sup_ratio: sup,
        centers: used,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct QueryStats {
    pub queries: usize,
    pub mean_iterations: f64,
    pub max_iterations: usize,
    pub mean_distance_evals: f64,
    pub max_distance_evals: u64,
}

/// Summary statistics of a dataset/tree pair, serialized as the `stats`
/// CLI output.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsReport {
    pub size: usize,
    pub dim: usize,
    pub expansion_constant: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diameter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aspect_ratio: Option<f64>,
    pub l_min: i32,
    pub l_max: i32,
    pub height: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height_bound: Option<f64>,
    /// child-count histogram over (node, level) buckets
    pub width_histogram: BTreeMap<usize, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query: Option<QueryStats>,
}

pub fn stats_report(
    session: &mut MetricSession<'_>,
    tree: &CompressedCoverTree,
    traces: &[QueryTrace],
) -> Result<DiagnosticsReport> {
    let data = session.dataset();
    if tree.len() != data.len() {
        return Err(Error::InvalidTree(format!(
            "tree has {} nodes but dataset has {} points",
            tree.len(),
            data.len()
        )));
    }
    let size = data.len();
    let dim = data.dim();
    let c = expansion_constant(session).c;
    let (diameter, d_min, aspect) = if size >= 2 {
        let (diam, dmin) = diameter_and_dmin(session)?;
        if dmin <= 0.0 {
            let (a, b) = data.find_duplicate().unwrap_or((0, 0));
            return Err(Error::DuplicatePoint { a, b });
        }
        (Some(diam), Some(dmin), Some(diam / dmin))
    } else {
        (None, None, None)
    };
    let height = tree.height_set().len();
    let height_bound = aspect.map(|a| 1.0 + a.log2());

    let mut width_histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for nd in tree.nodes() {
        for lvl in nd.child_levels().collect::<Vec<_>>() {
            *width_histogram.entry(nd.children_at(lvl).len()).or_default() += 1;
        }
    }

    let query = if traces.is_empty() {
        None
    } else {
        let iters: Vec<usize> = traces.iter().map(|t| t.iterations()).collect();
        let evals: Vec<u64> = traces.iter().map(|t| t.distance_evals).collect();
        Some(QueryStats {
            queries: traces.len(),
            mean_iterations: iters.iter().sum::<usize>() as f64 / iters.len() as f64,
            max_iterations: *iters.iter().max().unwrap(),
            mean_distance_evals: evals.iter().sum::<u64>() as f64 / evals.len() as f64,
            max_distance_evals: *evals.iter().max().unwrap(),
        })
    };

    Ok(DiagnosticsReport {
        size,
        dim,
        expansion_constant: c,
        diameter,
        d_min,
        aspect_ratio: aspect,
        l_min: tree.l_min(),
        l_max: tree.l_max(),
        height,
        height_bound,
        width_histogram,
        query,
    })
}
