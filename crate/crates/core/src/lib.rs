//! Compressed cover trees for exact and (1+ε)-approximate k-nearest
//! neighbor search in general metric spaces.
//!
//! A compressed cover tree stores every data point as exactly one node,
//! assigns each node an integer level, and maintains three invariants:
//! the root sits strictly above all other levels, every node lies within
//! `2^{l+1}` of its parent, and any two nodes present at level `i` are
//! more than `2^i` apart. Exact k-NN queries descend a candidate frontier
//! through the levels, using precomputed *distinctive descendant* counts
//! to prove when the frontier already pins down all `k` answers; an
//! ε-relaxed exit gives (1+ε)-approximate answers earlier.
//!
//! Besides construction ([`construct::build`]) and search
//! ([`search::knn_search`], [`approx::approx_knn`]), the crate ships the
//! diagnostics used to check the theoretical complexity parameters on
//! concrete data: exact expansion constants, a grid-extension estimator
//! for the minimized expansion constant, and iteration-count audits of
//! build and query descents.
//!
//! ```
//! use covertree::{
//!     construct::{build, RootChoice},
//!     dataset::Dataset,
//!     metric::{knn_bruteforce, MetricKind, MetricSession},
//!     search::knn_search,
//! };
//!
//! let data = Dataset::line(&[1.0, 2.0, 3.0, 4.0, 9.0]);
//! let metric = MetricKind::Euclidean;
//! let mut session = MetricSession::new(&data, &metric);
//! let (tree, _) = build(&mut session, RootChoice::First).unwrap();
//! let (answer, _) = knn_search(&tree, &mut session, &[2.4], 2).unwrap();
//! assert_eq!(answer, knn_bruteforce(&mut session, &[2.4], 2).unwrap());
//! ```

pub mod approx;
pub mod construct;
pub mod dataset;
mod debug;
pub mod diagnostics;
mod error;
pub mod metric;
pub mod persist;
pub mod search;
pub mod tree;

pub mod datagen;

pub use dataset::{Dataset, PointId};
pub use debug::debug_asserts_enabled;
pub use error::{Error, Result};
pub use metric::{Candidate, Distance, MetricKind, MetricSession, NeighborAnswer};
pub use tree::CompressedCoverTree;
