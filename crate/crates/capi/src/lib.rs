//! C ABI for the covertree crate: opaque handles, integer status codes,
//! and a thread-local last-error message. The matching header is
//! generated into `include/covertree.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use covertree::approx::approx_knn;
use covertree::construct::{build, RootChoice};
use covertree::diagnostics::expansion_constant;
use covertree::persist::{tree_from_json, tree_to_json};
use covertree::search::knn_search;
use covertree::{CompressedCoverTree, Dataset, Error, MetricKind, MetricSession, PointId};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CtStatus {
    CtOk = 0,
    /// invalid argument (bad k, epsilon, metric, id, ...)
    CtErrParam = 1,
    /// file or parse problem
    CtErrIo = 2,
    /// duplicate or degenerate input points
    CtErrData = 3,
    /// malformed or mismatched tree
    CtErrTree = 4,
    /// null pointer argument
    CtErrNull = 5,
    /// internal invariant failure or panic
    CtErrInternal = 6,
}

/// Metric selector.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CtMetric {
    CtMetricEuclidean = 0,
    CtMetricManhattan = 1,
    CtMetricChebyshev = 2,
}

impl From<CtMetric> for MetricKind {
    fn from(m: CtMetric) -> MetricKind {
        match m {
            CtMetric::CtMetricEuclidean => MetricKind::Euclidean,
            CtMetric::CtMetricManhattan => MetricKind::Manhattan,
            CtMetric::CtMetricChebyshev => MetricKind::Chebyshev,
        }
    }
}

/// Opaque dataset handle.
pub struct CtDataset {
    inner: Dataset,
}

/// Opaque tree handle.
pub struct CtTree {
    inner: CompressedCoverTree,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let cstring = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = cstring);
}

fn status_for(err: &Error) -> CtStatus {
    match err {
        Error::Parameter(_) | Error::InvalidPointId(_) | Error::UnsupportedMetric(_) => {
            CtStatus::CtErrParam
        }
        Error::Parse { .. } | Error::Io(_) => CtStatus::CtErrIo,
        Error::Degenerate(_) | Error::DuplicatePoint { .. } => CtStatus::CtErrData,
        Error::InvalidTree(_) => CtStatus::CtErrTree,
        Error::Internal(_) => CtStatus::CtErrInternal,
    }
}

fn guard(f: impl FnOnce() -> CtStatus) -> CtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("panic across FFI boundary");
            CtStatus::CtErrInternal
        }
    }
}

fn fail(err: Error) -> CtStatus {
    set_error(&err.to_string());
    status_for(&err)
}

/// Message describing the most recent error on this thread; valid until
/// the next failing call.
#[no_mangle]
pub extern "C" fn ct_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Create a dataset from a row-major coordinate buffer.
///
/// # Safety
/// `coords` must point to `n_points * dim` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ct_dataset_new(
    coords: *const f64,
    n_points: usize,
    dim: usize,
    out: *mut *mut CtDataset,
) -> CtStatus {
    guard(|| {
        if coords.is_null() || out.is_null() {
            set_error("null pointer");
            return CtStatus::CtErrNull;
        }
        let slice = std::slice::from_raw_parts(coords, n_points.saturating_mul(dim));
        match Dataset::from_flat(dim, slice.to_vec()) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(CtDataset { inner }));
                CtStatus::CtOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Load a dataset from a CSV file (one point per row, optional header).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ct_dataset_load_csv(
    path: *const c_char,
    out: *mut *mut CtDataset,
) -> CtStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            set_error("null pointer");
            return CtStatus::CtErrNull;
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(s) => s,
            Err(_) => {
                set_error("path is not valid UTF-8");
                return CtStatus::CtErrParam;
            }
        };
        match Dataset::load_csv(path) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(CtDataset { inner }));
                CtStatus::CtOk
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `ds` must come from a `ct_dataset_*` constructor (or be null).
#[no_mangle]
pub unsafe extern "C" fn ct_dataset_free(ds: *mut CtDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// # Safety
/// `ds` must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ct_dataset_len(ds: *const CtDataset) -> usize {
    if ds.is_null() {
        0
    } else {
        (*ds).inner.len()
    }
}

/// # Safety
/// `ds` must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ct_dataset_dim(ds: *const CtDataset) -> usize {
    if ds.is_null() {
        0
    } else {
        (*ds).inner.dim()
    }
}

/// Build a tree. `root_index == UINT32_MAX` picks a seeded random root,
/// any other value is used as the root point id.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ct_tree_build(
    ds: *const CtDataset,
    metric: CtMetric,
    root_index: u32,
    seed: u64,
    out: *mut *mut CtTree,
) -> CtStatus {
    guard(|| {
        if ds.is_null() || out.is_null() {
            set_error("null pointer");
            return CtStatus::CtErrNull;
        }
        let data = &(*ds).inner;
        let kind: MetricKind = metric.into();
        let choice = if root_index == u32::MAX {
            RootChoice::Random(seed)
        } else {
            RootChoice::Index(PointId(root_index))
        };
        let mut session = MetricSession::new(data, &kind);
        match build(&mut session, choice) {
            Ok((tree, _)) => {
                *out = Box::into_raw(Box::new(CtTree { inner: tree }));
                CtStatus::CtOk
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `tree` must come from a tree constructor (or be null).
#[no_mangle]
pub unsafe extern "C" fn ct_tree_free(tree: *mut CtTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Number of violations of the tree conditions; 0 means valid.
///
/// # Safety
/// All handles must be live; `violations_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn ct_tree_validate(
    tree: *const CtTree,
    ds: *const CtDataset,
    metric: CtMetric,
    violations_out: *mut usize,
) -> CtStatus {
    guard(|| {
        if tree.is_null() || ds.is_null() {
            set_error("null pointer");
            return CtStatus::CtErrNull;
        }
        let kind: MetricKind = metric.into();
        let mut session = MetricSession::new(&(*ds).inner, &kind);
        match (*tree).inner.validate(&mut session) {
            Ok(report) => {
                if !violations_out.is_null() {
                    *violations_out = report.violations.len();
                }
                CtStatus::CtOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Exact k-NN. `ids_out` and `dists_out` must hold `k` entries each;
/// results are ascending by `(distance, id)`.
///
/// # Safety
/// All pointers must be valid for the documented sizes.
#[no_mangle]
pub unsafe extern "C" fn ct_tree_knn(
    tree: *const CtTree,
    ds: *const CtDataset,
    metric: CtMetric,
    query: *const f64,
    k: usize,
    ids_out: *mut u32,
    dists_out: *mut f64,
) -> CtStatus {
    guard(|| {
        if tree.is_null() || ds.is_null() || query.is_null() || ids_out.is_null() || dists_out.is_null()
        {
            set_error("null pointer");
            return CtStatus::CtErrNull;
        }
        let data = &(*ds).inner;
        let kind: MetricKind = metric.into();
        let q = std::slice::from_raw_parts(query, data.dim());
        let mut session = MetricSession::new(data, &kind);
        match knn_search(&(*tree).inner, &mut session, q, k) {
            Ok((ans, _)) => {
                for (i, (id, d)) in ans.ids.iter().zip(&ans.distances).enumerate() {
                    *ids_out.add(i) = id.0;
                    *dists_out.add(i) = *d;
                }
                CtStatus::CtOk
            }
            Err(e) => fail(e),
        }
    })
}

/// (1+epsilon)-approximate k-NN; same buffer contract as `ct_tree_knn`.
/// `exact_out` (optional) reports whether the descent stayed exact.
///
/// # Safety
/// All pointers must be valid for the documented sizes.
#[no_mangle]
pub unsafe extern "C" fn ct_tree_approx_knn(
    tree: *const CtTree,
    ds: *const CtDataset,
    metric: CtMetric,
    query: *const f64,
    k: usize,
    epsilon: f64,
    ids_out: *mut u32,
    dists_out: *mut f64,
    exact_out: *mut bool,
) -> CtStatus {
    guard(|| {
        if tree.is_null() || ds.is_null() || query.is_null() || ids_out.is_null() || dists_out.is_null()
        {
            set_error("null pointer");
            return CtStatus::CtErrNull;
        }
        let data = &(*ds).inner;
        let kind: MetricKind = metric.into();
        let q = std::slice::from_raw_parts(query, data.dim());
        let mut session = MetricSession::new(data, &kind);
        match approx_knn(&(*tree).inner, &mut session, q, k, epsilon) {
            Ok((ans, _)) => {
                for (i, (id, d)) in ans.answer.ids.iter().zip(&ans.answer.distances).enumerate() {
                    *ids_out.add(i) = id.0;
                    *dists_out.add(i) = *d;
                }
                if !exact_out.is_null() {
                    *exact_out = ans.exact_path;
                }
                CtStatus::CtOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Serialize a tree to JSON; free the string with `ct_string_free`.
///
/// # Safety
/// `tree` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ct_tree_to_json(tree: *const CtTree, out: *mut *mut c_char) -> CtStatus {
    guard(|| {
        if tree.is_null() || out.is_null() {
            set_error("null pointer");
            return CtStatus::CtErrNull;
        }
        let json = tree_to_json(&(*tree).inner);
        match CString::new(json) {
            Ok(s) => {
                *out = s.into_raw();
                CtStatus::CtOk
            }
            Err(_) => {
                set_error("serialized tree contained NUL");
                CtStatus::CtErrInternal
            }
        }
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ct_tree_from_json(json: *const c_char, out: *mut *mut CtTree) -> CtStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            set_error("null pointer");
            return CtStatus::CtErrNull;
        }
        let json = match CStr::from_ptr(json).to_str() {
            Ok(s) => s,
            Err(_) => {
                set_error("tree JSON is not valid UTF-8");
                return CtStatus::CtErrParam;
            }
        };
        match tree_from_json(json) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(CtTree { inner }));
                CtStatus::CtOk
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `s` must come from `ct_tree_to_json` (or be null).
#[no_mangle]
pub unsafe extern "C" fn ct_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Exact expansion constant of the dataset.
///
/// # Safety
/// `ds` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ct_expansion_constant(
    ds: *const CtDataset,
    metric: CtMetric,
    out: *mut f64,
) -> CtStatus {
    guard(|| {
        if ds.is_null() || out.is_null() {
            set_error("null pointer");
            return CtStatus::CtErrNull;
        }
        let kind: MetricKind = metric.into();
        let mut session = MetricSession::new(&(*ds).inner, &kind);
        *out = expansion_constant(&mut session).c;
        CtStatus::CtOk
    })
}
