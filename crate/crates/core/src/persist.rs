use serde::{Deserialize, Serialize};

use crate::dataset::PointId;
use crate::error::{Error, Result};
use crate::tree::CompressedCoverTree;

/// Serialized tree: integer-only fields, nodes ascending by id, so that a
/// round trip reproduces the document byte for byte.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDoc {
    pub root: u32,
    pub l_max: i32,
    pub l_min: i32,
    pub nodes: Vec<NodeDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: u32,
    pub level: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<u32>,
}

impl TreeDoc {
    pub fn from_tree(tree: &CompressedCoverTree) -> Self {
        let mut nodes: Vec<NodeDoc> = tree
            .nodes()
            .map(|nd| NodeDoc {
                id: nd.point.0,
                level: nd.level,
                parent: nd.parent.map(|p| p.0),
            })
            .collect();
        nodes.sort_by_key(|nd| nd.id);
        TreeDoc {
            root: tree.root().0,
            l_max: tree.l_max(),
            l_min: tree.l_min(),
            nodes,
        }
    }

    pub fn into_tree(self) -> Result<CompressedCoverTree> {
        let n = self.nodes.len();
        let mut parts: Vec<Option<(i32, Option<PointId>)>> = vec![None; n];
        for nd in &self.nodes {
            let slot = parts
                .get_mut(nd.id as usize)
                .ok_or_else(|| Error::InvalidTree(format!("node id {} out of range", nd.id)))?;
            if slot.is_some() {
                return Err(Error::InvalidTree(format!("duplicate node id {}", nd.id)));
            }
            *slot = Some((nd.level, nd.parent.map(PointId)));
        }
        let parts: Vec<(i32, Option<PointId>)> = parts
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InvalidTree("node ids are not dense".into()))?;
        let tree = CompressedCoverTree::from_parts(PointId(self.root), &parts)?;
        if tree.l_max() != self.l_max || tree.l_min() != self.l_min {
            return Err(Error::InvalidTree(format!(
                "stored level range [{}, {}] does not match nodes [{}, {}]",
                self.l_min,
                self.l_max,
                tree.l_min(),
                tree.l_max()
            )));
        }
        Ok(tree)
    }
}

pub fn tree_to_json(tree: &CompressedCoverTree) -> String {
    serde_json::to_string(&TreeDoc::from_tree(tree)).expect("tree serialization is infallible")
}

pub fn tree_from_json(json: &str) -> Result<CompressedCoverTree> {
    let doc: TreeDoc = serde_json::from_str(json)
        .map_err(|e| Error::InvalidTree(format!("malformed tree JSON: {}", e)))?;
    doc.into_tree()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{build, RootChoice};
    use crate::dataset::Dataset;
    use crate::metric::{MetricKind, MetricSession};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_byte_identical() {
        let (_, tree) = crate::tree::fixtures::line15();
        let json = tree_to_json(&tree);
        let back = tree_from_json(&json).unwrap();
        assert_eq!(tree_to_json(&back), json);
        assert_eq!(back.root(), tree.root());
        assert_eq!(back.l_min(), tree.l_min());
        for id in 0..tree.len() as u32 {
            let p = PointId(id);
            assert_eq!(back.level(p), tree.level(p));
            assert_eq!(back.node(p).parent, tree.node(p).parent);
        }
    }

    #[test]
    fn round_trip_random_builds() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..10 {
            let n = rng.gen_range(2..=80);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.gen::<f64>() * 8.0, rng.gen::<f64>() * 8.0])
                .collect();
            let data = Dataset::from_rows(&rows).unwrap();
            let m = MetricKind::Euclidean;
            let mut s = MetricSession::new(&data, &m);
            let (tree, _) = build(&mut s, RootChoice::First).unwrap();
            let json = tree_to_json(&tree);
            assert_eq!(tree_to_json(&tree_from_json(&json).unwrap()), json);
        }
    }

    #[test]
    fn rejects_corrupt_documents() {
        assert!(tree_from_json("{").is_err());
        // duplicate id
        let doc = r#"{"root":0,"l_max":1,"l_min":0,"nodes":[{"id":0,"level":1},{"id":0,"level":0,"parent":0}]}"#;
        assert!(tree_from_json(doc).is_err());
        // sparse ids
        let doc = r#"{"root":0,"l_max":1,"l_min":0,"nodes":[{"id":0,"level":1},{"id":2,"level":0,"parent":0}]}"#;
        assert!(tree_from_json(doc).is_err());
        // level range mismatch
        let doc = r#"{"root":0,"l_max":5,"l_min":0,"nodes":[{"id":0,"level":1},{"id":1,"level":0,"parent":0}]}"#;
        assert!(tree_from_json(doc).is_err());
    }
}
