//! C ABI over the cobridge core.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! a [`CobridgeStatus`]; on failure the message is available from
//! [`cobridge_last_error`] on the same thread until the next failing call.
//! Panics are caught and reported as `COBRIDGE_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use cobridge::louvain::{multi_run, OptimizerConfig};
use cobridge::modularity::{modularity_bipartite, modularity_unipartite};
use cobridge::nmi::nmi;
use cobridge::projection::{compute_idf_with_base, project_articles, project_concepts, LogBase};
use cobridge::{BipartiteGraph, Error, Partition, WeightedGraph};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CobridgeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    IndexOutOfRange = 3,
    EmptyGraph = 4,
    Internal = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CobridgeLogBase {
    Natural = 0,
    Two = 1,
    Ten = 2,
}

impl From<CobridgeLogBase> for LogBase {
    fn from(b: CobridgeLogBase) -> Self {
        match b {
            CobridgeLogBase::Natural => LogBase::Natural,
            CobridgeLogBase::Two => LogBase::Two,
            CobridgeLogBase::Ten => LogBase::Ten,
        }
    }
}

/// Two-mode graph handle.
pub struct CobridgeBipartite(BipartiteGraph);

/// Weighted one-mode graph handle.
pub struct CobridgeWeighted(WeightedGraph);

/// Partition handle.
pub struct CobridgePartition(Partition);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let message =
        CString::new(message).unwrap_or_else(|_| c"error message contained NUL".to_owned());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn status_of(e: &Error) -> CobridgeStatus {
    match e {
        Error::IndexOutOfRange { .. } => CobridgeStatus::IndexOutOfRange,
        Error::EmptyGraph(_) => CobridgeStatus::EmptyGraph,
        Error::Assertion(_) => CobridgeStatus::Internal,
        _ => CobridgeStatus::InvalidArgument,
    }
}

struct Fail(CobridgeStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CobridgeStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> CobridgeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CobridgeStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {message}"));
            CobridgeStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

unsafe fn as_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(unsafe { slice::from_raw_parts(p, len) })
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    let slot = unsafe { as_mut(out, "output handle")? };
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

fn labels_from(raw: &[u32]) -> Vec<usize> {
    raw.iter().map(|&l| l as usize).collect()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cobridge_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cobridge_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn cobridge_bipartite_new(
    left_count: usize,
    right_count: usize,
    out: *mut *mut CobridgeBipartite,
) -> CobridgeStatus {
    guard(|| unsafe {
        emit(
            out,
            CobridgeBipartite(BipartiteGraph::new(left_count, right_count)),
        )
    })
}

/// # Safety
/// `graph` must be NULL or a handle from `cobridge_bipartite_new`.
#[no_mangle]
pub unsafe extern "C" fn cobridge_bipartite_free(graph: *mut CobridgeBipartite) {
    if !graph.is_null() {
        drop(unsafe { Box::from_raw(graph) });
    }
}

/// Adds the edge `left`-`right`. `added` (may be NULL) receives 1 for a new
/// edge and 0 for a duplicate.
///
/// # Safety
/// `graph` must be a live handle; `added` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn cobridge_bipartite_add_edge(
    graph: *mut CobridgeBipartite,
    left: usize,
    right: usize,
    added: *mut u8,
) -> CobridgeStatus {
    guard(|| {
        let g = unsafe { as_mut(graph, "graph")? };
        let new = g.0.add_edge(left, right)?;
        if let Some(slot) = unsafe { added.as_mut() } {
            *slot = u8::from(new);
        }
        Ok(())
    })
}

/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cobridge_bipartite_edge_count(graph: *const CobridgeBipartite) -> usize {
    unsafe { graph.as_ref() }.map_or(0, |g| g.0.edge_count())
}

/// Article projection: idf-weighted cosine similarity, keeping weights
/// strictly above `threshold`.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cobridge_project_articles(
    graph: *const CobridgeBipartite,
    log_base: CobridgeLogBase,
    threshold: f64,
    out: *mut *mut CobridgeWeighted,
) -> CobridgeStatus {
    guard(|| {
        let g = unsafe { as_ref(graph, "graph")? };
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(Fail(
                CobridgeStatus::InvalidArgument,
                format!("bad threshold {threshold}"),
            ));
        }
        let idf = compute_idf_with_base(&g.0, log_base.into());
        unsafe {
            emit(
                out,
                CobridgeWeighted(project_articles(&g.0, &idf, threshold)),
            )
        }
    })
}

/// Concept co-occurrence projection with unit weights.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cobridge_project_concepts(
    graph: *const CobridgeBipartite,
    out: *mut *mut CobridgeWeighted,
) -> CobridgeStatus {
    guard(|| {
        let g = unsafe { as_ref(graph, "graph")? };
        unsafe { emit(out, CobridgeWeighted(project_concepts(&g.0))) }
    })
}

/// Builds a weighted graph from `len` parallel arrays of endpoints and
/// weights.
///
/// # Safety
/// The three arrays must each hold `len` elements; `out` must be a valid
/// handle slot.
#[no_mangle]
pub unsafe extern "C" fn cobridge_weighted_new(
    node_count: usize,
    sources: *const u32,
    targets: *const u32,
    weights: *const f64,
    len: usize,
    out: *mut *mut CobridgeWeighted,
) -> CobridgeStatus {
    guard(|| {
        let (s, t, w) = unsafe {
            (
                as_slice(sources, len, "sources")?,
                as_slice(targets, len, "targets")?,
                as_slice(weights, len, "weights")?,
            )
        };
        let edges = (0..len)
            .map(|i| (s[i] as usize, t[i] as usize, w[i]))
            .collect();
        let g = WeightedGraph::from_edges(node_count, edges)?;
        unsafe { emit(out, CobridgeWeighted(g)) }
    })
}

/// # Safety
/// `graph` must be NULL or a weighted-graph handle.
#[no_mangle]
pub unsafe extern "C" fn cobridge_weighted_free(graph: *mut CobridgeWeighted) {
    if !graph.is_null() {
        drop(unsafe { Box::from_raw(graph) });
    }
}

/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cobridge_weighted_node_count(graph: *const CobridgeWeighted) -> usize {
    unsafe { graph.as_ref() }.map_or(0, |g| g.0.node_count())
}

/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cobridge_weighted_edge_count(graph: *const CobridgeWeighted) -> usize {
    unsafe { graph.as_ref() }.map_or(0, |g| g.0.edge_count())
}

/// Edge `index` in canonical (sorted, `u <= v`) order.
///
/// # Safety
/// `graph` must be a live handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn cobridge_weighted_edge(
    graph: *const CobridgeWeighted,
    index: usize,
    u: *mut u32,
    v: *mut u32,
    weight: *mut f64,
) -> CobridgeStatus {
    guard(|| {
        let g = unsafe { as_ref(graph, "graph")? };
        let &(a, b, w) = g.0.edges().get(index).ok_or(Error::IndexOutOfRange {
            what: "edge",
            index,
            bound: g.0.edge_count(),
        })?;
        unsafe {
            *as_mut(u, "u")? = a as u32;
            *as_mut(v, "v")? = b as u32;
            *as_mut(weight, "weight")? = w;
        }
        Ok(())
    })
}

/// Weighted modularity of `labels` (one per node).
///
/// # Safety
/// `labels` must hold `len` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cobridge_modularity_unipartite(
    graph: *const CobridgeWeighted,
    labels: *const u32,
    len: usize,
    out: *mut f64,
) -> CobridgeStatus {
    guard(|| {
        let g = unsafe { as_ref(graph, "graph")? };
        let labels = labels_from(unsafe { as_slice(labels, len, "labels")? });
        let q = modularity_unipartite(&g.0, &labels)?;
        unsafe { *as_mut(out, "out")? = q };
        Ok(())
    })
}

/// Bipartite modularity of `labels` over the combined index space (Left
/// nodes first, then Right).
///
/// # Safety
/// `labels` must hold `len` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cobridge_modularity_bipartite(
    graph: *const CobridgeBipartite,
    labels: *const u32,
    len: usize,
    out: *mut f64,
) -> CobridgeStatus {
    guard(|| {
        let g = unsafe { as_ref(graph, "graph")? };
        let labels = labels_from(unsafe { as_slice(labels, len, "labels")? });
        let q = modularity_bipartite(&g.0, &labels)?;
        unsafe { *as_mut(out, "out")? = q };
        Ok(())
    })
}

/// Best of `runs` Louvain runs with seeds `base_seed + i`.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cobridge_cluster_unipartite(
    graph: *const CobridgeWeighted,
    runs: usize,
    base_seed: u64,
    out: *mut *mut CobridgePartition,
) -> CobridgeStatus {
    guard(|| {
        let g = unsafe { as_ref(graph, "graph")? };
        let config = OptimizerConfig::unipartite()
            .with_runs(runs)
            .with_seed(base_seed);
        let (best, _) = multi_run(&g.0, &config)?;
        unsafe { emit(out, CobridgePartition(best)) }
    })
}

/// Bipartite counterpart of [`cobridge_cluster_unipartite`].
///
/// # Safety
/// `graph` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cobridge_cluster_bipartite(
    graph: *const CobridgeBipartite,
    runs: usize,
    base_seed: u64,
    out: *mut *mut CobridgePartition,
) -> CobridgeStatus {
    guard(|| {
        let g = unsafe { as_ref(graph, "graph")? };
        let config = OptimizerConfig::bipartite()
            .with_runs(runs)
            .with_seed(base_seed);
        let (best, _) = multi_run(&g.0, &config)?;
        unsafe { emit(out, CobridgePartition(best)) }
    })
}

/// # Safety
/// `partition` must be NULL or a partition handle.
#[no_mangle]
pub unsafe extern "C" fn cobridge_partition_free(partition: *mut CobridgePartition) {
    if !partition.is_null() {
        drop(unsafe { Box::from_raw(partition) });
    }
}

/// # Safety
/// `partition` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cobridge_partition_node_count(
    partition: *const CobridgePartition,
) -> usize {
    unsafe { partition.as_ref() }.map_or(0, |p| p.0.node_count())
}

/// # Safety
/// `partition` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cobridge_partition_community_count(
    partition: *const CobridgePartition,
) -> usize {
    unsafe { partition.as_ref() }.map_or(0, |p| p.0.community_count())
}

/// Modularity of the partition, NaN for a NULL handle.
///
/// # Safety
/// `partition` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cobridge_partition_score(partition: *const CobridgePartition) -> f64 {
    unsafe { partition.as_ref() }.map_or(f64::NAN, |p| p.0.score())
}

/// # Safety
/// `partition` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cobridge_partition_seed(partition: *const CobridgePartition) -> u64 {
    unsafe { partition.as_ref() }.map_or(0, |p| p.0.seed())
}

/// Copies the community of every node into `buffer`, which must hold
/// exactly `node_count` elements.
///
/// # Safety
/// `buffer` must be writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn cobridge_partition_labels(
    partition: *const CobridgePartition,
    buffer: *mut u32,
    len: usize,
) -> CobridgeStatus {
    guard(|| {
        let p = unsafe { as_ref(partition, "partition")? };
        if len != p.0.node_count() {
            return Err(Fail(
                CobridgeStatus::InvalidArgument,
                format!(
                    "buffer holds {len} labels, partition has {} nodes",
                    p.0.node_count()
                ),
            ));
        }
        if buffer.is_null() && len > 0 {
            return Err(null("buffer"));
        }
        let out = unsafe { slice::from_raw_parts_mut(buffer, len) };
        for (slot, &c) in out.iter_mut().zip(p.0.assignment()) {
            *slot = c as u32;
        }
        Ok(())
    })
}

/// Normalized mutual information (arithmetic mean) of two labelings.
///
/// # Safety
/// `a` and `b` must each hold `len` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cobridge_nmi(
    a: *const u32,
    b: *const u32,
    len: usize,
    out: *mut f64,
) -> CobridgeStatus {
    guard(|| {
        let (a, b) = unsafe { (as_slice(a, len, "a")?, as_slice(b, len, "b")?) };
        let v = nmi(a, b)?;
        unsafe { *as_mut(out, "out")? = v };
        Ok(())
    })
}
