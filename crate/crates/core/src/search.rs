use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::construct::search_iteration_bound;
use crate::dataset::PointId;
use crate::error::{Error, Result};
use crate::metric::{check_k, Candidate, MetricSession, NeighborAnswer};
use crate::tree::{exp2i, CompressedCoverTree};

struct HeapItem(Candidate);

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .dist
            .total_cmp(&other.0.dist)
            .then(self.0.id.cmp(&other.0.id))
    }
}

/// The `k` candidates with smallest `(distance, id)`, ascending, via a
/// size-capped max-heap: `O(|items| log k)`.
pub fn k_smallest(items: &[Candidate], k: usize) -> Result<Vec<Candidate>> {
    if k == 0 || k > items.len() {
        return Err(Error::Parameter(format!(
            "k = {} out of range for {} candidates",
            k,
            items.len()
        )));
    }
    let mut heap: BinaryHeap<HeapItem> = BinaryHeap::with_capacity(k + 1);
    for &cand in items {
        heap.push(HeapItem(cand));
        if heap.len() > k {
            heap.pop(); // evict the current worst
        }
    }
    Ok(heap
        .into_sorted_vec()
        .into_iter()
        .map(|item| item.0)
        .collect())
}

/// The λ-point of a candidate set at level `i`: the distance-minimal
/// candidate whose prefix of distinctive descendant counts first reaches
/// `k`. It witnesses that the `k` nearest neighbors live inside the
/// distinctive descendant sets of candidates no farther than λ.
pub fn lambda_point(
    tree: &CompressedCoverTree,
    cands: &[Candidate],
    i: i32,
    k: usize,
) -> Result<Candidate> {
    if cands.is_empty() || k == 0 {
        return Err(Error::Parameter("lambda_point needs candidates and k >= 1".into()));
    }
    let sorted = k_smallest(cands, k.min(cands.len()))?;
    let mut cum = 0u64;
    for cand in sorted {
        cum += tree.dd_count(cand.id, i);
        if cum >= k as u64 {
            return Ok(cand);
        }
    }
    Err(Error::Internal(format!(
        "candidate set at level {} carries only {} distinctive descendants, k = {}",
        i, cum, k
    )))
}

/// Collect the distinctive descendant set `S_i(p)`: `p` itself plus the
/// full subtrees of its children strictly below level `i`. Output size
/// equals `dd_count(p, i)`; cost is linear in that size.
pub fn collect_subtree(tree: &CompressedCoverTree, p: PointId, i: i32) -> Vec<PointId> {
    let mut out = Vec::new();
    let mut stack = vec![(p, i)];
    while let Some((u, bound)) = stack.pop() {
        out.push(u);
        for (lvl, kids) in tree.node(u).children_below(bound) {
            for &c in kids {
                stack.push((c, lvl));
            }
        }
    }
    out
}

/// One level of a query descent, with everything the lemma-level audits
/// need afterwards.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelTrace {
    pub level: i32,
    /// size of `C_i` (surviving frontier plus newly exposed children)
    pub candidates: usize,
    /// size of `R_i` after the distance filter
    pub frontier: usize,
    pub lambda: PointId,
    pub d_lambda: f64,
    pub max_frontier_dist: f64,
    pub min_pruned_dist: Option<f64>,
    /// true when the early-exit condition `d(q,λ) > 2^{i+2}` fired here
    pub special: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct QueryTrace {
    pub levels: Vec<LevelTrace>,
    /// size and largest distance of the collected candidate pool when the
    /// early exit fired
    pub collected: Option<(usize, f64)>,
    pub distance_evals: u64,
}

impl QueryTrace {
    /// `|L(T(R), q)|`: number of levels the descent visited.
    pub fn iterations(&self) -> usize {
        self.levels.len()
    }
}

/// Exact k-nearest neighbors via descent of the compressed cover tree.
/// Matches [`knn_bruteforce`](crate::metric::knn_bruteforce) exactly
/// (identical distance arithmetic, ties by ascending id).
pub fn knn_search(
    tree: &CompressedCoverTree,
    session: &mut MetricSession<'_>,
    q: &[f64],
    k: usize,
) -> Result<(NeighborAnswer, QueryTrace)> {
    let data = session.dataset();
    let n = data.len();
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
    let mut special: Option<i32> = None;

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
        let is_special = lambda.dist > exp2i(i + 2);
        trace.levels.push(LevelTrace {
            level: i,
            candidates: c.len(),
            frontier: r_i.len(),
            lambda: lambda.id,
            d_lambda: lambda.dist,
            max_frontier_dist: max_kept,
            min_pruned_dist: (min_pruned < f64::INFINITY).then_some(min_pruned),
            special: is_special,
        });
        frontier = r_i;
        if is_special {
            special = Some(i);
            break;
        }
        i = frontier
            .iter()
            .map(|cand| tree.next_level(cand.id, i))
            .max()
            .expect("lambda survives its own filter");
    }

    let pool: Vec<Candidate> = match special {
        Some(si) => {
            // the k nearest are inside the distinctive descendant sets of
            // the surviving frontier; materialize them all
            let mut seen = vec![false; n];
            let mut pool = Vec::new();
            let mut max_d = f64::NEG_INFINITY;
            for f in &frontier {
                for u in collect_subtree(tree, f.id, si) {
                    debug_assert!(
                        !std::mem::replace(&mut seen[u.index()], true),
                        "distinctive descendant sets must be disjoint"
                    );
                    let d = if cache[u.index()].is_nan() {
                        let d = session.dist_to(q, u);
                        cache[u.index()] = d;
                        d
                    } else {
                        cache[u.index()]
                    };
                    max_d = max_d.max(d);
                    pool.push(Candidate { id: u, dist: d });
                }
            }
            trace.collected = Some((pool.len(), max_d));
            pool
        }
        None => frontier,
    };

    let answer = k_smallest(&pool, k)?;
    trace.distance_evals = session.evals() - evals0;
    Ok((NeighborAnswer::from_candidates(answer), trace))
}

/// Check observed query descent lengths against
/// `20 * c(R ∪ {q})^2 * log2 |R|`; one `(iterations, c)` pair per query.
pub fn knn_iteration_bound_check(observations: &[(usize, f64)], n: usize) -> crate::construct::BoundReport {
    let mut max_observed = 0;
    let mut violations = 0;
    let mut min_bound = f64::INFINITY;
    for &(len, c) in observations {
        let bound = search_iteration_bound(c, n);
        min_bound = min_bound.min(bound);
        max_observed = max_observed.max(len);
        if len as f64 > bound {
            violations += 1;
        }
    }
    crate::construct::BoundReport {
        max_observed,
        bound: if min_bound.is_finite() { min_bound } else { 0.0 },
        violations,
        ok: violations == 0,
    }
}

/// Post-hoc lemma audit of one query descent. `d_k` is the true k-th
/// nearest distance (from the brute-force oracle) and `c` the expansion
/// constant of `R`. Returns human-readable violation descriptions.
pub fn check_query_trace(trace: &QueryTrace, d_k: f64, c: f64) -> Vec<String> {
    let mut out = Vec::new();
    for lt in &trace.levels {
        let i = lt.level;
        if lt.d_lambda > d_k + exp2i(i + 1) {
            out.push(format!(
                "beta-point bound at level {}: d(q,lambda) = {} > d_k + 2^{} = {}",
                i,
                lt.d_lambda,
                i + 1,
                d_k + exp2i(i + 1)
            ));
        }
        if let Some(min_pruned) = lt.min_pruned_dist {
            if min_pruned <= exp2i(i + 2) {
                out.push(format!(
                    "pruned-node bound at level {}: kept-out distance {} <= 2^{}",
                    i,
                    min_pruned,
                    i + 2
                ));
            }
        }
        if !lt.special {
            if lt.frontier > 0 && lt.max_frontier_dist > exp2i(i + 3) {
                out.push(format!(
                    "frontier radius at level {}: {} > 2^{}",
                    i,
                    lt.max_frontier_dist,
                    i + 3
                ));
            }
            if (lt.frontier as f64) > c.powi(6) {
                out.push(format!(
                    "frontier size at level {}: {} > c^6 = {}",
                    i,
                    lt.frontier,
                    c.powi(6)
                ));
            }
        }
    }
    if let Some((size, max_d)) = trace.collected {
        if max_d > 5.0 * d_k {
            out.push(format!(
                "early-exit pool ({} points) reaches distance {} > 5 * d_k = {}",
                size,
                max_d,
                5.0 * d_k
            ));
        }
    }
    out
}
