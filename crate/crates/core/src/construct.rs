use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::PointId;
use crate::debug::debug_asserts_enabled;
use crate::error::{Error, Result};
use crate::metric::{Candidate, MetricSession};
use crate::tree::{exp2i, CompressedCoverTree};

/// How the root of the tree is picked before insertion starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootChoice {
    /// Point 0 (the default).
    First,
    /// An explicit point id.
    Index(PointId),
    /// Uniformly random, derived from the given seed; deterministic.
    Random(u64),
}

/// Per-insertion descent record: the levels visited by the while-loop and
/// the size of the candidate set `R_i` kept at each of them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InsertionTrace {
    pub point: PointId,
    pub levels: Vec<i32>,
    pub frontier_sizes: Vec<usize>,
}

impl InsertionTrace {
    /// `|L(T(W), p)|`: number of iterations of the descent loop.
    pub fn iterations(&self) -> usize {
        self.levels.len()
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BuildTrace {
    pub insertions: Vec<InsertionTrace>,
    pub distance_evals: u64,
}

/// Pick the parent among candidate nodes (nearest, ties by ascending id)
/// and the level of the new point: the unique `l` with
/// `2^l < d(p, parent) <= 2^{l+1}`, which is exactly what the cover and
/// separation conditions require. Zero distance means a duplicate point.
pub fn assign_parent(candidates: &[Candidate]) -> Result<(PointId, i32)> {
    let best = candidates
        .iter()
        .min_by(|a, b| a.dist.total_cmp(&b.dist).then(a.id.cmp(&b.id)))
        .ok_or_else(|| Error::Internal("assign_parent on empty candidate set".into()))?;
    Ok((best.id, level_for_distance(best.dist)?))
}

/// The unique integer `l` with `2^l < d <= 2^{l+1}`.
pub fn level_for_distance(d: f64) -> Result<i32> {
    if !(d > 0.0) {
        return Err(Error::Degenerate(format!(
            "cannot place a point at distance {} from its parent",
            d
        )));
    }
    if d < exp2i(-20) {
        return Err(Error::Degenerate(format!(
            "distance {} below the 2^-20 resolution floor",
            d
        )));
    }
    let mut l = (d.log2().ceil() as i32) - 1;
    while exp2i(l) >= d {
        l -= 1;
    }
    while exp2i(l + 1) < d {
        l += 1;
    }
    debug_assert!(exp2i(l) < d && d <= exp2i(l + 1));
    Ok(l)
}

fn lower_key(a: (i32, f64, PointId), b: (i32, f64, PointId)) -> bool {
    a.0.cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then(a.2.cmp(&b.2))
        .is_lt()
}

/// Insert one point into a partially built tree: descend the candidate
/// frontier through the levels, tracking over all examined nodes the
/// admissible parent giving the lowest level (ties by distance, then id).
/// A node `u` admits `p` when `level_for_distance(d(p,u)) < l(u)`; the
/// root always does, because its level is lifted after the attach. In the
/// regular case this picks the nearest node of the last non-empty
/// candidate set, but the nearest node can sit exactly at the level the
/// new point needs (e.g. values {0, 2, 3.5}: inserting 3.5 finds 2 at
/// distance 1.5, forcing level 0 = l(2)), and then a farther admissible
/// node must take the child instead.
pub fn add_point(
    tree: &mut CompressedCoverTree,
    session: &mut MetricSession<'_>,
    p: PointId,
) -> Result<InsertionTrace> {
    session.dataset().check_id(p)?;
    let root = tree.root();
    let mut trace = InsertionTrace {
        point: p,
        levels: Vec::new(),
        frontier_sizes: Vec::new(),
    };

    let d_root = session.dist(p, root);
    if d_root == 0.0 {
        return Err(Error::DuplicatePoint {
            a: root.index().min(p.index()),
            b: root.index().max(p.index()),
        });
    }
    // (level, dist, parent); the root entry guarantees this is never empty
    let mut best = (level_for_distance(d_root)?, d_root, root);
    let mut frontier = vec![Candidate {
        id: root,
        dist: d_root,
    }];

    // pruned candidates, kept only for the optional separation audit
    let mut pruned: Vec<(Candidate, i32)> = Vec::new();
    let audit = debug_asserts_enabled();

    // start just below the root; a childless root means W = {root} and the
    // descent is skipped entirely
    let top = tree.node(root).child_levels().last();
    if let Some(top) = top {
        let mut i = top;
        let l_min = tree.l_min();
        while i >= l_min {
            // C_i = frontier plus members' children at level i
            let mut c = frontier.clone();
            for f in &frontier {
                for &ch in tree.node(f.id).children_at(i) {
                    let d = session.dist(p, ch);
                    if d == 0.0 {
                        return Err(Error::DuplicatePoint {
                            a: ch.index().min(p.index()),
                            b: ch.index().max(p.index()),
                        });
                    }
                    let lvl = level_for_distance(d)?;
                    if lvl < tree.level(ch) && lower_key((lvl, d, ch), best) {
                        best = (lvl, d, ch);
                    }
                    c.push(Candidate { id: ch, dist: d });
                }
            }
            let threshold = exp2i(i + 1);
            let r_i: Vec<Candidate> = c.iter().filter(|cd| cd.dist <= threshold).cloned().collect();
            trace.levels.push(i);
            trace.frontier_sizes.push(r_i.len());
            if r_i.is_empty() {
                break; // parent comes from the previous frontier
            }
            if audit {
                pruned.extend(c.iter().filter(|cd| cd.dist > threshold).map(|cd| (*cd, i)));
            }
            let next = r_i
                .iter()
                .map(|cd| tree.next_level(cd.id, i))
                .max()
                .unwrap();
            frontier = r_i;
            i = next;
        }
    }

    let (level, _, parent) = best;
    debug_assert!(parent == root || level < tree.level(parent));
    tree.attach(p, parent, level);
    let new_top = tree.node(root).child_levels().last().unwrap();
    tree.set_root_level(1 + new_top);

    if audit {
        audit_separation(tree, session, p, &pruned);
    }
    Ok(trace)
}

/// Separation audit behind `COVERTREE_DEBUG_ASSERTS=1`: a candidate pruned
/// at level `i` keeps its distinctive descendants at level `i` separated
/// from the freshly inserted point.
fn audit_separation(
    tree: &CompressedCoverTree,
    session: &MetricSession<'_>,
    p: PointId,
    pruned: &[(Candidate, i32)],
) {
    for &(cand, i) in pruned {
        for q in crate::search::collect_subtree(tree, cand.id, i) {
            if q == p {
                continue;
            }
            let threshold = exp2i(tree.level(p).min(tree.level(q)));
            let d = session.dist_unmetered(p, q);
            assert!(
                d > threshold,
                "pruned node {} at level {}: descendant {} at distance {} within 2^{}",
                cand.id,
                i,
                q,
                d,
                tree.level(p).min(tree.level(q)),
            );
        }
    }
}

/// Build a compressed cover tree over the whole dataset by inserting the
/// points in id order (skipping the chosen root). Duplicate points are
/// rejected; run [`Dataset::dedup`](crate::dataset::Dataset::dedup) first
/// if the input may contain them.
pub fn build(
    session: &mut MetricSession<'_>,
    root_choice: RootChoice,
) -> Result<(CompressedCoverTree, BuildTrace)> {
    let data = session.dataset();
    let n = data.len();
    let root = match root_choice {
        RootChoice::First => PointId(0),
        RootChoice::Index(p) => {
            data.check_id(p)?;
            p
        }
        RootChoice::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            PointId(rng.gen_range(0..n as u32))
        }
    };

    let mut tree = CompressedCoverTree::new_single(root, n)?;
    let mut trace = BuildTrace::default();
    let evals_before = session.evals();
    for p in data.ids() {
        if p == root {
            continue;
        }
        trace.insertions.push(add_point(&mut tree, session, p)?);
    }
    trace.distance_evals = session.evals() - evals_before;
    tree.recompute_bounds();
    tree.count_distinctive_descendants();
    Ok((tree, trace))
}

/// Result of checking observed descent lengths against the
/// `factor * c^2 * log2 |R|` iteration bounds.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub max_observed: usize,
    pub bound: f64,
    pub violations: usize,
    pub ok: bool,
}

fn iteration_bound_report(lengths: impl Iterator<Item = usize>, factor: f64, c: f64, n: usize) -> BoundReport {
    let bound = factor * c * c * (n as f64).log2();
    let mut max_observed = 0;
    let mut violations = 0;
    for len in lengths {
        max_observed = max_observed.max(len);
        if (len as f64) > bound {
            violations += 1;
        }
    }
    BoundReport {
        max_observed,
        bound,
        violations,
        ok: violations == 0,
    }
}

/// Check every insertion descent against `12 * c(R)^2 * log2 |R|`.
pub fn construction_iteration_bound_check(trace: &BuildTrace, c: f64, n: usize) -> BoundReport {
    iteration_bound_report(trace.insertions.iter().map(|t| t.iterations()), 12.0, c, n)
}

pub(crate) fn search_iteration_bound(c: f64, n: usize) -> f64 {
    20.0 * c * c * (n as f64).log2()
}
