use std::collections::BTreeMap;
use std::fmt;

use crate::dataset::PointId;
use crate::error::{Error, Result};
use crate::metric::MetricSession;

/// Levels are clamped to `[-LEVEL_GUARD, LEVEL_GUARD]`; distances outside
/// `(2^-20, 2^20)` of scale would need levels beyond this and are rejected
/// during construction instead of silently losing precision.
pub const LEVEL_GUARD: i32 = 1 << 20;

/// One node of a compressed cover tree. Every dataset point owns exactly
/// one node; children are bucketed by their level so that a level's bucket
/// can be fetched in `O(log #levels)` and iterated in either direction.
#[derive(Clone, Debug)]
pub struct Node {
    pub point: PointId,
    pub level: i32,
    pub parent: Option<PointId>,
    children: BTreeMap<i32, Vec<PointId>>,
    /// `(essential level e, |S_e|)` pairs, ascending by level. `S_e` is the
    /// distinctive descendant set at level `e`; between essential levels the
    /// set is constant, so these pairs determine `|S_i|` for every `i`.
    dd_counts: Vec<(i32, u64)>,
    subtree: u64,
}

impl Node {
    fn new(point: PointId, level: i32, parent: Option<PointId>) -> Self {
        Node {
            point,
            level,
            parent,
            children: BTreeMap::new(),
            dd_counts: Vec::new(),
            subtree: 1,
        }
    }

    /// Children at exactly this level (possibly empty).
    pub fn children_at(&self, level: i32) -> &[PointId] {
        self.children.get(&level).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Distinct levels that carry at least one child, ascending.
    pub fn child_levels(&self) -> impl Iterator<Item = i32> + '_ {
        self.children.keys().copied()
    }

    pub fn children(&self) -> impl Iterator<Item = PointId> + '_ {
        self.children.values().flatten().copied()
    }

    pub fn child_count(&self) -> usize {
        self.children.values().map(Vec::len).sum()
    }

    /// `(level, children)` buckets strictly below `i`, ascending.
    pub fn children_below(&self, i: i32) -> impl Iterator<Item = (i32, &[PointId])> {
        self.children.range(..i).map(|(&lvl, kids)| (lvl, kids.as_slice()))
    }

    /// Number of descendants including the node itself.
    pub fn subtree_size(&self) -> u64 {
        self.subtree
    }
}

/// A single violation found by [`CompressedCoverTree::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// Root level must exceed every other level by at least one.
    RootCondition { root_level: i32, max_other: i32 },
    /// `d(q, parent) <= 2^{l(q)+1}` failed.
    CoverDistance {
        child: PointId,
        parent: PointId,
        dist: f64,
        bound: f64,
    },
    /// `l(q) < l(parent)` failed.
    CoverLevel { child: PointId, parent: PointId },
    /// Two points of the cover set `C_i` are at distance `<= 2^i`.
    Separation {
        a: PointId,
        b: PointId,
        level: i32,
        dist: f64,
    },
    /// Parent/children bookkeeping is inconsistent.
    Structure(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RootCondition { root_level, max_other } => write!(
                f,
                "root condition: root level {} not above max other level {}",
                root_level, max_other
            ),
            Violation::CoverDistance { child, parent, dist, bound } => write!(
                f,
                "cover condition: d({}, {}) = {} exceeds {}",
                child, parent, dist, bound
            ),
            Violation::CoverLevel { child, parent } => {
                write!(f, "cover condition: l({}) >= l({})", child, parent)
            }
            Violation::Separation { a, b, level, dist } => write!(
                f,
                "separation at level {}: d({}, {}) = {} <= 2^{}",
                level, a, b, dist, level
            ),
            Violation::Structure(msg) => write!(f, "structure: {}", msg),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The height set of a tree: all levels at which the cover set changes,
/// plus the extremes. Iteration sets of build/search descents live inside
/// this set, and its size is bounded by `1 + log2(aspect ratio)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightSet {
    /// ascending, deduplicated
    pub levels: Vec<i32>,
}

impl HeightSet {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// A compressed cover tree over the points of a dataset: one node per
/// point, a level function, and the root/cover/separation invariants
/// checked by [`validate`](CompressedCoverTree::validate).
#[derive(Clone, Debug)]
pub struct CompressedCoverTree {
    root: PointId,
    nodes: Vec<Node>,
    l_min: i32,
    l_max: i32,
    dd_ready: bool,
}

impl CompressedCoverTree {
    /// Single-node tree; the root of a one-point set sits at level 0 by
    /// convention (the general rule `l(root) = 1 + max other level` has no
    /// other levels to dominate).
    pub(crate) fn new_single(root: PointId, n: usize) -> Result<Self> {
        if root.index() >= n {
            return Err(Error::InvalidPointId(root.index()));
        }
        let mut nodes: Vec<Node> = (0..n as u32)
            .map(|i| Node::new(PointId(i), 0, None))
            .collect();
        nodes[root.index()].level = 0;
        Ok(CompressedCoverTree {
            root,
            nodes,
            l_min: 0,
            l_max: 0,
            dd_ready: false,
        })
    }

    /// Rebuild a tree from explicit `(level, parent)` assignments, as found
    /// in the JSON serialization. Checks structural sanity (ids dense, one
    /// root, child levels below parent levels) but not the metric
    /// conditions; run [`validate`](Self::validate) for those.
    pub fn from_parts(root: PointId, parts: &[(i32, Option<PointId>)]) -> Result<Self> {
        let n = parts.len();
        if n == 0 {
            return Err(Error::InvalidTree("no nodes".into()));
        }
        if root.index() >= n {
            return Err(Error::InvalidTree(format!("root id {} out of range", root)));
        }
        let mut nodes: Vec<Node> = parts
            .iter()
            .enumerate()
            .map(|(i, &(level, parent))| Node::new(PointId(i as u32), level, parent))
            .collect();
        for (i, &(level, parent)) in parts.iter().enumerate() {
            if level.abs() > LEVEL_GUARD {
                return Err(Error::InvalidTree(format!(
                    "level {} of node {} outside guard range",
                    level, i
                )));
            }
            match parent {
                None => {
                    if i != root.index() {
                        return Err(Error::InvalidTree(format!(
                            "node {} has no parent but is not the root",
                            i
                        )));
                    }
                }
                Some(p) => {
                    if i == root.index() {
                        return Err(Error::InvalidTree("root has a parent".into()));
                    }
                    if p.index() >= n {
                        return Err(Error::InvalidTree(format!(
                            "parent {} of node {} out of range",
                            p, i
                        )));
                    }
                    let parent_level = parts[p.index()].0;
                    if level >= parent_level {
                        return Err(Error::InvalidTree(format!(
                            "node {} at level {} not below its parent {} at level {}",
                            i, level, p, parent_level
                        )));
                    }
                    nodes[p.index()]
                        .children
                        .entry(level)
                        .or_default()
                        .push(PointId(i as u32));
                }
            }
        }
        for node in &mut nodes {
            for bucket in node.children.values_mut() {
                bucket.sort();
            }
        }
        let l_min = nodes.iter().map(|nd| nd.level).min().unwrap();
        let l_max = nodes.iter().map(|nd| nd.level).max().unwrap();
        let mut tree = CompressedCoverTree {
            root,
            nodes,
            l_min,
            l_max,
            dd_ready: false,
        };
        tree.count_distinctive_descendants();
        Ok(tree)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn root(&self) -> PointId {
        self.root
    }

    #[inline]
    pub fn node(&self, p: PointId) -> &Node {
        &self.nodes[p.index()]
    }

    #[inline]
    pub fn level(&self, p: PointId) -> i32 {
        self.nodes[p.index()].level
    }

    #[inline]
    pub fn l_min(&self) -> i32 {
        self.l_min
    }

    #[inline]
    pub fn l_max(&self) -> i32 {
        self.l_max
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter()
    }

    /// Largest level `j < i` at which `p` has children, or the sentinel
    /// `l_min - 1` if there is none. Search and build descents jump
    /// straight to this level, skipping empty ones.
    pub fn next_level(&self, p: PointId, i: i32) -> i32 {
        self.node(p)
            .children
            .range(..i)
            .next_back()
            .map(|(&lvl, _)| lvl)
            .unwrap_or(self.l_min - 1)
    }

    /// The cover set `C_i = { p : l(p) >= i }`, ascending by id.
    pub fn cover_set(&self, i: i32) -> Vec<PointId> {
        self.nodes
            .iter()
            .filter(|nd| nd.level >= i)
            .map(|nd| nd.point)
            .collect()
    }

    /// Levels at which the distinctive descendant set of `p` can change:
    /// the node's own level plus every level carrying children.
    pub fn essential_levels(&self, p: PointId) -> Vec<i32> {
        let node = self.node(p);
        let mut levels: Vec<i32> = node.child_levels().collect();
        levels.push(node.level);
        levels
    }

    pub fn height_set(&self) -> HeightSet {
        let mut levels: Vec<i32> = self
            .nodes
            .iter()
            .map(|nd| nd.level + 1)
            .filter(|&i| i <= self.l_max)
            .collect();
        levels.push(self.l_max);
        levels.push(self.l_min);
        levels.sort_unstable();
        levels.dedup();
        HeightSet { levels }
    }

    /// All descendants of `p` including `p` itself, in depth-first order.
    pub fn descendants(&self, p: PointId) -> Vec<PointId> {
        let mut out = Vec::new();
        let mut stack = vec![p];
        while let Some(u) = stack.pop() {
            out.push(u);
            stack.extend(self.node(u).children());
        }
        out
    }

    /// Brute-force distinctive descendant set `S_i(p)` straight from the
    /// definition: descendants of `p`, minus the descendants of every
    /// descendant `u` with `i <= l(u) <= l(p) - 1`. Reference oracle for
    /// the fast count/collection paths; returns ids ascending. For
    /// `i > l(p)` the set is taken to be the full subtree (the set is
    /// constant above `l(p) - 1`).
    pub fn distinctive_descendants(&self, p: PointId, i: i32) -> Vec<PointId> {
        let desc = self.descendants(p);
        let lp = self.level(p);
        let mut excluded = vec![false; self.len()];
        for &u in &desc {
            if u != p && i <= self.level(u) && self.level(u) <= lp - 1 {
                for v in self.descendants(u) {
                    excluded[v.index()] = true;
                }
            }
        }
        let mut out: Vec<PointId> = desc.into_iter().filter(|u| !excluded[u.index()]).collect();
        out.sort();
        out
    }

    /// Precompute subtree sizes and per-node distinctive descendant counts
    /// at every essential level. `O(|R|)` overall: one bottom-up pass for
    /// subtree sizes, then prefix sums over each node's child levels.
    pub fn count_distinctive_descendants(&mut self) {
        // bottom-up subtree sizes without recursion: process ids by
        // descending level so children are finished before their parents
        let mut order: Vec<u32> = (0..self.len() as u32).collect();
        order.sort_by_key(|&i| self.nodes[i as usize].level);
        for nd in &mut self.nodes {
            nd.subtree = 1;
        }
        for &i in &order {
            if let Some(parent) = self.nodes[i as usize].parent {
                let sz = self.nodes[i as usize].subtree;
                self.nodes[parent.index()].subtree += sz;
            }
        }
        // |S_e| = 1 + sum of subtree sizes of children strictly below e,
        // accumulated over child levels in ascending order
        let subtree: Vec<u64> = self.nodes.iter().map(|nd| nd.subtree).collect();
        for nd in &mut self.nodes {
            let mut counts = Vec::with_capacity(nd.children.len() + 1);
            let mut acc = 1u64;
            for (&lvl, kids) in nd.children.iter() {
                counts.push((lvl, acc));
                acc += kids.iter().map(|c| subtree[c.index()]).sum::<u64>();
            }
            counts.push((nd.level, acc));
            debug_assert_eq!(acc, nd.subtree);
            nd.dd_counts = counts;
        }
        self.dd_ready = true;
    }

    /// `|S_i(p)|` via the precomputed essential-level table: the stored
    /// count at the smallest essential level `>= i`, clamped to the full
    /// subtree size above `l(p)`.
    pub fn dd_count(&self, p: PointId, i: i32) -> u64 {
        debug_assert!(self.dd_ready, "count_distinctive_descendants not run");
        let nd = self.node(p);
        match nd.dd_counts.iter().find(|&&(lvl, _)| lvl >= i) {
            Some(&(_, count)) => count,
            None => nd.subtree,
        }
    }

    pub(crate) fn dd_ready(&self) -> bool {
        self.dd_ready
    }

    /// Attach `p` as a child of `parent` at `level`; used by construction.
    pub(crate) fn attach(&mut self, p: PointId, parent: PointId, level: i32) {
        let node = &mut self.nodes[p.index()];
        node.level = level;
        node.parent = Some(parent);
        let bucket = self.nodes[parent.index()].children.entry(level).or_default();
        let pos = bucket.partition_point(|&c| c < p);
        bucket.insert(pos, p);
        self.l_min = self.l_min.min(level);
        self.dd_ready = false;
    }

    /// Recompute `l_min`/`l_max` exactly from node levels; the incremental
    /// tracking during construction only maintains a lower bound for
    /// `l_min` (the placeholder root level may undercut the true minimum).
    pub(crate) fn recompute_bounds(&mut self) {
        self.l_min = self.nodes.iter().map(|nd| nd.level).min().unwrap();
        self.l_max = self.nodes.iter().map(|nd| nd.level).max().unwrap();
    }

    pub(crate) fn set_root_level(&mut self, level: i32) {
        self.nodes[self.root.index()].level = level;
        self.l_max = level;
        self.l_min = self.l_min.min(level);
    }

    /// Check the three defining conditions (root, cover, separation) plus
    /// parent/child bookkeeping against the dataset's metric. Collects all
    /// violations rather than stopping at the first.
    pub fn validate(&self, session: &mut MetricSession<'_>) -> Result<ValidationReport> {
        let mut report = ValidationReport::default();
        let n = session.dataset().len();
        if n != self.len() {
            return Err(Error::InvalidTree(format!(
                "tree has {} nodes but dataset has {} points",
                self.len(),
                n
            )));
        }

        // structure: parent/children cross-references
        for nd in &self.nodes {
            match nd.parent {
                None => {
                    if nd.point != self.root {
                        report.violations.push(Violation::Structure(format!(
                            "node {} has no parent but is not the root",
                            nd.point
                        )));
                    }
                }
                Some(par) => {
                    if !self.node(par).children_at(nd.level).contains(&nd.point) {
                        report.violations.push(Violation::Structure(format!(
                            "node {} missing from children list of {}",
                            nd.point, par
                        )));
                    }
                }
            }
            for (&lvl, kids) in nd.children.iter() {
                if kids.is_empty() {
                    report
                        .violations
                        .push(Violation::Structure(format!("empty child bucket at level {}", lvl)));
                }
                for &c in kids {
                    if self.level(c) != lvl || self.node(c).parent != Some(nd.point) {
                        report.violations.push(Violation::Structure(format!(
                            "child bucket of {} at level {} lists {} inconsistently",
                            nd.point, lvl, c
                        )));
                    }
                }
            }
        }

        // root condition: l(root) >= 1 + max level of any other node
        if self.len() > 1 {
            let max_other = self
                .nodes
                .iter()
                .filter(|nd| nd.point != self.root)
                .map(|nd| nd.level)
                .max()
                .unwrap();
            let root_level = self.level(self.root);
            if root_level < 1 + max_other {
                report.violations.push(Violation::RootCondition {
                    root_level,
                    max_other,
                });
            }
        }

        // cover condition for every non-root node
        for nd in &self.nodes {
            if let Some(par) = nd.parent {
                if nd.level >= self.level(par) {
                    report.violations.push(Violation::CoverLevel {
                        child: nd.point,
                        parent: par,
                    });
                }
                let d = session.dist(nd.point, par);
                let bound = exp2i(nd.level + 1);
                if d > bound {
                    report.violations.push(Violation::CoverDistance {
                        child: nd.point,
                        parent: par,
                        dist: d,
                        bound,
                    });
                }
            }
        }

        // separation: walk levels of the height set top-down, growing the
        // cover set incrementally; only pairs involving newly admitted
        // points need checking since thresholds shrink as we descend
        let mut by_level: BTreeMap<i32, Vec<PointId>> = BTreeMap::new();
        for nd in &self.nodes {
            by_level.entry(nd.level).or_default().push(nd.point);
        }
        let mut current: Vec<PointId> = Vec::new();
        for (&lvl, pts) in by_level.iter().rev() {
            let threshold = exp2i(lvl);
            for (idx, &p) in pts.iter().enumerate() {
                for &q in current.iter().chain(&pts[..idx]) {
                    let d = session.dist(p, q);
                    if d <= threshold {
                        report.violations.push(Violation::Separation {
                            a: q,
                            b: p,
                            level: lvl,
                            dist: d,
                        });
                    }
                }
            }
            current.extend_from_slice(pts);
        }

        Ok(report)
    }
}

/// `2^i` as f64, exact for the guarded level range.
#[inline]
pub fn exp2i(i: i32) -> f64 {
    f64::exp2(i as f64)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// The running 15-point example: `R = {1,...,15}` on the line with the
    /// tree rooted at 8.
    ///
    /// ```text
    /// level  2:              8
    /// level  1:        4           12
    /// level  0:     2     6     10     14
    /// level -1:   1  3  5  7  9  11  13  15
    /// ```
    ///
    /// Ids are value minus one.
    pub fn line15() -> (crate::dataset::Dataset, CompressedCoverTree) {
        let data = crate::dataset::Dataset::line(&[
            1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0,
        ]);
        let p = |v: u32| Some(PointId(v - 1));
        // (level, parent) for values 1..=15
        let parts: Vec<(i32, Option<PointId>)> = vec![
            (-1, p(2)),
            (0, p(4)),
            (-1, p(2)),
            (1, p(8)),
            (-1, p(6)),
            (0, p(4)),
            (-1, p(6)),
            (2, None),
            (-1, p(10)),
            (0, p(12)),
            (-1, p(10)),
            (1, p(8)),
            (-1, p(14)),
            (0, p(12)),
            (-1, p(14)),
        ];
        let tree = CompressedCoverTree::from_parts(PointId(7), &parts).unwrap();
        (data, tree)
    }

    /// Seven points `{1,2,3,4,5,7,8}` on the line rooted at 1, exercising
    /// nontrivial distinctive descendant sets:
    /// `S_2(1)` = everything, `S_1(1) = {1,2,3,4}`, `S_0(1) = {1}`.
    pub fn line7() -> (crate::dataset::Dataset, CompressedCoverTree) {
        let data = crate::dataset::Dataset::line(&[1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 8.0]);
        // ids: 0->1, 1->2, 2->3, 3->4, 4->5, 5->7, 6->8
        let parts: Vec<(i32, Option<PointId>)> = vec![
            (2, None),             // 1  root
            (-1, Some(PointId(2))), // 2 under 3
            (0, Some(PointId(0))),  // 3 under 1
            (-1, Some(PointId(2))), // 4 under 3
            (1, Some(PointId(0))),  // 5 under 1
            (0, Some(PointId(4))),  // 7 under 5
            (-1, Some(PointId(5))), // 8 under 7
        ];
        let tree = CompressedCoverTree::from_parts(PointId(0), &parts).unwrap();
        (data, tree)
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::{line15, line7};
    use super::*;
    use crate::metric::MetricKind;

    #[test]
    fn line15_validates() {
        let (data, tree) = line15();
        let m = MetricKind::Euclidean;
        let mut s = MetricSession::new(&data, &m);
        let report = tree.validate(&mut s).unwrap();
        assert!(report.is_ok(), "{:?}", report.violations);
        assert_eq!(tree.l_max(), 2);
        assert_eq!(tree.l_min(), -1);
    }

    #[test]
    fn single_node_validates() {
        let data = crate::dataset::Dataset::line(&[3.0]);
        let tree = CompressedCoverTree::from_parts(PointId(0), &[(0, None)]).unwrap();
        let m = MetricKind::Euclidean;
        let mut s = MetricSession::new(&data, &m);
        assert!(tree.validate(&mut s).unwrap().is_ok());
        assert_eq!(tree.height_set().levels, vec![0]);
    }

    #[test]
    fn corrupted_level_breaks_separation() {
        let (data, tree) = line15();
        let mut parts: Vec<(i32, Option<PointId>)> = tree
            .nodes()
            .map(|nd| (nd.level, nd.parent))
            .collect();
        // lift value 10 to level 1 under the root: d(10, 12) = 2 <= 2^1
        parts[9] = (1, Some(PointId(7)));
        let bad = CompressedCoverTree::from_parts(PointId(7), &parts).unwrap();
        let m = MetricKind::Euclidean;
        let mut s = MetricSession::new(&data, &m);
        let report = bad.validate(&mut s).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Separation { level: 1, .. })));
    }

    #[test]
    fn cover_violation_detected() {
        // value 13 reparented under 4: d = 9 > 2^0
        let (data, tree) = line15();
        let mut parts: Vec<(i32, Option<PointId>)> =
            tree.nodes().map(|nd| (nd.level, nd.parent)).collect();
        parts[12].1 = Some(PointId(3));
        let bad = CompressedCoverTree::from_parts(PointId(7), &parts).unwrap();
        let m = MetricKind::Euclidean;
        let mut s = MetricSession::new(&data, &m);
        let report = bad.validate(&mut s).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::CoverDistance { dist, .. } if *dist == 9.0)));
    }

    #[test]
    fn next_level_examples() {
        let (_, tree) = line15();
        // value 4 (id 3) has children {2, 6} at level 0
        assert_eq!(tree.next_level(PointId(3), 1), 0);
        // ... and none below 0, so the sentinel l_min - 1 comes back
        assert_eq!(tree.next_level(PointId(3), 0), -2);
        // value 2 (id 1) has children {1, 3} at level -1
        assert_eq!(tree.next_level(PointId(1), 0), -1);
        // root 8: children {4, 12} at level 1 only
        assert_eq!(tree.next_level(PointId(7), 2), 1);
        assert_eq!(tree.next_level(PointId(7), 1), -2);
    }

    #[test]
    fn cover_set_examples() {
        let (_, tree) = line15();
        let vals = |ids: Vec<PointId>| ids.iter().map(|p| p.0 + 1).collect::<Vec<_>>();
        assert_eq!(vals(tree.cover_set(2)), vec![8]);
        assert_eq!(vals(tree.cover_set(1)), vec![4, 8, 12]);
        assert_eq!(vals(tree.cover_set(0)), vec![2, 4, 6, 8, 10, 12, 14]);
        assert_eq!(tree.cover_set(-1).len(), 15);
    }

    #[test]
    fn height_set_examples() {
        let (_, tree) = line15();
        assert_eq!(tree.height_set().levels, vec![-1, 0, 1, 2]);
        let (_, small) = line7();
        assert_eq!(small.height_set().levels, vec![-1, 0, 1, 2]);
    }

    #[test]
    fn dd_counts_line7() {
        let (_, tree) = line7();
        let one = PointId(0);
        assert_eq!(tree.dd_count(one, 2), 7);
        assert_eq!(tree.dd_count(one, 1), 4);
        assert_eq!(tree.dd_count(one, 0), 1);
        assert_eq!(tree.dd_count(one, -1), 1);
        // above l(p) the set is the whole subtree
        assert_eq!(tree.dd_count(one, 5), 7);
    }

    #[test]
    fn dd_sets_line7() {
        let (_, tree) = line7();
        let one = PointId(0);
        let vals = |ids: Vec<PointId>| {
            let back = [1, 2, 3, 4, 5, 7, 8];
            ids.iter().map(|p| back[p.index()]).collect::<Vec<i32>>()
        };
        assert_eq!(vals(tree.distinctive_descendants(one, 2)), vec![1, 2, 3, 4, 5, 7, 8]);
        assert_eq!(vals(tree.distinctive_descendants(one, 1)), vec![1, 2, 3, 4]);
        assert_eq!(vals(tree.distinctive_descendants(one, 0)), vec![1]);
    }

    #[test]
    fn dd_counts_match_bruteforce_everywhere() {
        for (_, tree) in [line15(), line7()] {
            for id in 0..tree.len() as u32 {
                let p = PointId(id);
                for i in (tree.l_min() - 1)..=(tree.l_max() + 1) {
                    assert_eq!(
                        tree.dd_count(p, i),
                        tree.distinctive_descendants(p, i).len() as u64,
                        "node {} level {}",
                        p,
                        i
                    );
                }
            }
        }
    }

    #[test]
    fn essential_levels_sum_bound() {
        let (_, tree) = line15();
        assert_eq!(tree.essential_levels(PointId(7)), vec![1, 2]);
        assert_eq!(tree.essential_levels(PointId(0)), vec![-1]); // leaf
        let total: usize = (0..tree.len() as u32)
            .map(|i| tree.essential_levels(PointId(i)).len())
            .sum();
        assert!(total <= 2 * tree.len());
    }

    #[test]
    fn from_parts_rejects_bad_structure() {
        // two roots
        assert!(CompressedCoverTree::from_parts(PointId(0), &[(1, None), (0, None)]).is_err());
        // child above parent
        assert!(
            CompressedCoverTree::from_parts(PointId(0), &[(1, None), (2, Some(PointId(0)))])
                .is_err()
        );
        // parent out of range
        assert!(
            CompressedCoverTree::from_parts(PointId(0), &[(1, None), (0, Some(PointId(9)))])
                .is_err()
        );
    }
}
