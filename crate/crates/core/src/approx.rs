use serde::{Deserialize, Serialize};

use crate::dataset::PointId;
use crate::error::{Error, Result};
use crate::metric::{check_k, Candidate, MetricSession, NeighborAnswer};
use crate::search::{collect_subtree, k_smallest, lambda_point, LevelTrace, QueryTrace};
use crate::tree::{exp2i, CompressedCoverTree};

/// Answer of the (1+ε)-approximate search. `exact_path` is set when the
/// descent reached the bottom level without triggering the approximation
/// exit, in which case the answer is exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxAnswer {
    pub answer: NeighborAnswer,
    pub epsilon: f64,
    pub exact_path: bool,
}

/// (1+ε)-approximate k-nearest neighbors: the descent of
/// [`knn_search`](crate::search::knn_search) with an earlier exit. Once
/// `2^{i+2}/ε + 2^{i+1} <= d(q,λ)`, the distinctive descendant sets of
/// candidates strictly closer than λ already approximate every true
/// neighbor within factor 1+ε; they are topped up to exactly `k` points
/// from the sets at distance exactly `d(q,λ)` (ascending candidate id).
pub fn approx_knn(
    tree: &CompressedCoverTree,
    session: &mut MetricSession<'_>,
    q: &[f64],
    k: usize,
    epsilon: f64,
) -> Result<(ApproxAnswer, QueryTrace)> {
    let data = session.dataset();
    let n = data.len();
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Parameter(format!("epsilon = {} must be positive", epsilon)));
    }
    if tree.len() != n {
        return Err(Error::InvalidTree(format!(
            "tree has {} nodes but dataset has {} points",
            tree.len(),
            n
        )));
    }
    if q.len() != data.dim() {
        return Err(Error::Parameter(format!(
            "query has {} coordinates, dataset has dimension {}",
            q.len(),
            data.dim()
        )));
    }
    check_k(k, n)?;
    if !tree.dd_ready() {
        return Err(Error::Internal(
            "distinctive descendant counts not computed".into(),
        ));
    }

    let evals0 = session.evals();
    let mut trace = QueryTrace::default();
    let mut cache = vec![f64::NAN; n];
    let root = tree.root();
    let d_root = session.dist_to(q, root);
    cache[root.index()] = d_root;
    let mut frontier = vec![Candidate {
        id: root,
        dist: d_root,
    }];

    let l_min = tree.l_min();
    let mut i = tree.l_max() - 1;
    while i >= l_min && n > 1 {
        let mut c = frontier.clone();
        for f in &frontier {
            for &ch in tree.node(f.id).children_at(i) {
                let d = session.dist_to(q, ch);
                cache[ch.index()] = d;
                c.push(Candidate { id: ch, dist: d });
            }
        }
        let lambda = lambda_point(tree, &c, i, k)?;

        if exp2i(i + 2) / epsilon + exp2i(i + 1) <= lambda.dist {
            // approximation exit: harvest sets strictly inside the λ-ball,
            // then fill up deterministically from the boundary
            let mut pool: Vec<PointId> = Vec::new();
            let mut strict: Vec<&Candidate> = c.iter().filter(|cd| cd.dist < lambda.dist).collect();
            strict.sort_by_key(|cd| cd.id);
            for cd in strict {
                pool.extend(collect_subtree(tree, cd.id, i));
            }
            debug_assert!(pool.len() < k, "strictly-closer sets must undershoot k");
            let mut boundary: Vec<&Candidate> =
                c.iter().filter(|cd| cd.dist == lambda.dist).collect();
            boundary.sort_by_key(|cd| cd.id);
            'fill: for cd in boundary {
                for u in collect_subtree(tree, cd.id, i) {
                    pool.push(u);
                    if pool.len() == k {
                        break 'fill;
                    }
                }
            }
            if pool.len() != k {
                return Err(Error::Internal(format!(
                    "approximate exit assembled {} of {} points",
                    pool.len(),
                    k
                )));
            }
            let cands: Vec<Candidate> = pool
                .into_iter()
                .map(|u| {
                    let d = if cache[u.index()].is_nan() {
                        let d = session.dist_to(q, u);
                        cache[u.index()] = d;
                        d
                    } else {
                        cache[u.index()]
                    };
                    Candidate { id: u, dist: d }
                })
                .collect();
            let answer = k_smallest(&cands, k)?;
            trace.levels.push(LevelTrace {
                level: i,
                candidates: c.len(),
                frontier: 0,
                lambda: lambda.id,
                d_lambda: lambda.dist,
                max_frontier_dist: f64::NEG_INFINITY,
                min_pruned_dist: None,
                special: true,
            });
            trace.collected = Some((k, answer.last().unwrap().dist));
            trace.distance_evals = session.evals() - evals0;
            return Ok((
                ApproxAnswer {
                    answer: NeighborAnswer::from_candidates(answer),
                    epsilon,
                    exact_path: false,
                },
                trace,
            ));
        }

        let threshold = lambda.dist + exp2i(i + 2);
        let mut r_i = Vec::with_capacity(c.len());
        let mut max_kept = f64::NEG_INFINITY;
        let mut min_pruned = f64::INFINITY;
        for cand in &c {
            if cand.dist <= threshold {
                max_kept = max_kept.max(cand.dist);
                r_i.push(*cand);
            } else {
                min_pruned = min_pruned.min(cand.dist);
            }
        }
        trace.levels.push(LevelTrace {
            level: i,
            candidates: c.len(),
            frontier: r_i.len(),
            lambda: lambda.id,
            d_lambda: lambda.dist,
            max_frontier_dist: max_kept,
            min_pruned_dist: (min_pruned < f64::INFINITY).then_some(min_pruned),
            special: false,
        });
        frontier = r_i;
        i = frontier
            .iter()
            .map(|cand| tree.next_level(cand.id, i))
            .max()
            .expect("lambda survives its own filter");
    }

    let answer = k_smallest(&frontier, k)?;
    trace.distance_evals = session.evals() - evals0;
    Ok((
        ApproxAnswer {
            answer: NeighborAnswer::from_candidates(answer),
            epsilon,
            exact_path: true,
        },
        trace,
    ))
}

/// Certificate check: every reported distance is within factor `1+ε` of
/// the true (oracle) distance at the same rank.
pub fn verify_approx(got: &NeighborAnswer, oracle: &NeighborAnswer, epsilon: f64) -> Result<bool> {
    if got.len() != oracle.len() {
        return Err(Error::Parameter(format!(
            "answers have different sizes: {} vs {}",
            got.len(),
            oracle.len()
        )));
    }
    Ok(got
        .distances
        .iter()
        .zip(&oracle.distances)
        .all(|(&r, &t)| r <= (1.0 + epsilon) * t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{build, RootChoice};
    use crate::dataset::Dataset;
    use crate::metric::{knn_bruteforce, MetricKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen::<f64>() * 4.0).collect())
            .collect();
        Dataset::from_rows(&rows).unwrap()
    }

    #[test]
    fn tiny_epsilon_matches_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let data = random_instance(&mut rng, 64, 2);
            let m = MetricKind::Euclidean;
            let mut s = MetricSession::new(&data, &m);
            let (tree, _) = build(&mut s, RootChoice::First).unwrap();
            let q = [rng.gen::<f64>() * 4.0, rng.gen::<f64>() * 4.0];
            let oracle = knn_bruteforce(&mut s, &q, 3).unwrap();
            let (got, _) = approx_knn(&tree, &mut s, &q, 3, 1e-9).unwrap();
            assert_eq!(got.answer, oracle);
            assert!(verify_approx(&got.answer, &oracle, 1e-9).unwrap());
        }
    }

    #[test]
    fn k_equals_n_returns_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let data = random_instance(&mut rng, 32, 1);
        let m = MetricKind::Euclidean;
        let mut s = MetricSession::new(&data, &m);
        let (tree, _) = build(&mut s, RootChoice::First).unwrap();
        let (got, _) = approx_knn(&tree, &mut s, &[0.5], 32, 0.5).unwrap();
        assert_eq!(got.answer.len(), 32);
        let oracle = knn_bruteforce(&mut s, &[0.5], 32).unwrap();
        assert!(verify_approx(&got.answer, &oracle, 0.5).unwrap());
    }

    #[test]
    fn certificate_holds_across_epsilons() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for &eps in &[0.05, 0.1, 0.5, 1.0, 2.0] {
            for _ in 0..10 {
                let data = random_instance(&mut rng, 96, 2);
                let m = MetricKind::Euclidean;
                let mut s = MetricSession::new(&data, &m);
                let (tree, _) = build(&mut s, RootChoice::First).unwrap();
                let q = [rng.gen::<f64>() * 4.0, rng.gen::<f64>() * 4.0];
                for k in [1usize, 5] {
                    let oracle = knn_bruteforce(&mut s, &q, k).unwrap();
                    let (got, _) = approx_knn(&tree, &mut s, &q, k, eps).unwrap();
                    assert_eq!(got.answer.len(), k);
                    assert!(
                        verify_approx(&got.answer, &oracle, eps).unwrap(),
                        "eps {} k {}: {:?} vs {:?}",
                        eps,
                        k,
                        got.answer.distances,
                        oracle.distances
                    );
                }
            }
        }
    }

    #[test]
    fn exact_path_flag_reports_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let data = random_instance(&mut rng, 64, 2);
        let m = MetricKind::Euclidean;
        let mut s = MetricSession::new(&data, &m);
        let (tree, _) = build(&mut s, RootChoice::First).unwrap();
        let oracle = knn_bruteforce(&mut s, &[1.0, 1.0], 2).unwrap();
        let (got, _) = approx_knn(&tree, &mut s, &[1.0, 1.0], 2, 0.01).unwrap();
        if got.exact_path {
            assert_eq!(got.answer, oracle);
        }
    }

    #[test]
    fn rejects_bad_epsilon() {
        let data = Dataset::line(&[0.0, 1.0]);
        let m = MetricKind::Euclidean;
        let mut s = MetricSession::new(&data, &m);
        let (tree, _) = build(&mut s, RootChoice::First).unwrap();
        assert!(approx_knn(&tree, &mut s, &[0.0], 1, 0.0).is_err());
        assert!(approx_knn(&tree, &mut s, &[0.0], 1, -1.0).is_err());
        assert!(approx_knn(&tree, &mut s, &[0.0], 1, f64::INFINITY).is_err());
    }
}
