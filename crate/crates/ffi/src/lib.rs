//! C ABI over the `qnml` library.
//!
//! Every function returns a [`QnmlStatus`]; results come back through out
//! pointers. On failure, [`qnml_last_error`] describes the error for the
//! calling thread. Handles are opaque and must be released with their
//! `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use qnml::dataset::Dataset;
use qnml::netfile::NetworkDocument;
use qnml::regret::{regret_exact, regret_szp_all_range, regret_szp_small_r};
use qnml::scores::{Criterion, ScoreConfig, Scorer};
use qnml::structure::DagStructure;
use qnml::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QnmlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Format = 4,
    InvalidData = 5,
    InvalidArgument = 6,
    Cyclic = 7,
    ResourceLimit = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QnmlCriterion {
    Bic = 0,
    Bdeu = 1,
    Fnml = 2,
    Qnml = 3,
    Bdq = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QnmlRegretMethod {
    Exact = 0,
    SzpSmallR = 1,
    SzpAllRange = 2,
}

/// Categorical dataset.
pub struct QnmlDataset(Dataset);

/// DAG with variable names; learned networks also carry their score.
pub struct QnmlNetwork {
    graph: DagStructure,
    score: Option<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> QnmlStatus {
    match err {
        Error::Io { .. } => QnmlStatus::Io,
        Error::Format { .. } => QnmlStatus::Format,
        Error::InvalidData(_) => QnmlStatus::InvalidData,
        Error::InvalidArgument(_) => QnmlStatus::InvalidArgument,
        Error::Cyclic => QnmlStatus::Cyclic,
        Error::ResourceLimit(_) => QnmlStatus::ResourceLimit,
    }
}

struct Fail(QnmlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QnmlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QnmlStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            QnmlStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(QnmlStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    non_null(p, "path")?;
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Fail(QnmlStatus::InvalidUtf8, "path is not valid UTF-8".into()))
}

fn criterion(c: QnmlCriterion) -> Criterion {
    match c {
        QnmlCriterion::Bic => Criterion::Bic,
        QnmlCriterion::Bdeu => Criterion::Bdeu,
        QnmlCriterion::Fnml => Criterion::Fnml,
        QnmlCriterion::Qnml => Criterion::Qnml,
        QnmlCriterion::Bdq => Criterion::Bdq,
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qnml_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Multinomial regret `ln C(n, r)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnml_regret(n: u64, r: u64, method: QnmlRegretMethod, out: *mut f64) -> QnmlStatus {
    guard(|| {
        non_null(out, "out")?;
        let v = match method {
            QnmlRegretMethod::Exact => regret_exact(n, r)?,
            QnmlRegretMethod::SzpSmallR => regret_szp_small_r(n, r)?,
            QnmlRegretMethod::SzpAllRange => regret_szp_all_range(n, r)?,
        };
        *out = v;
        Ok(())
    })
}

/// Loads a CSV dataset.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnml_dataset_load(path: *const c_char, out: *mut *mut QnmlDataset) -> QnmlStatus {
    guard(|| {
        non_null(out, "out")?;
        let data = qnml::load_dataset(path_arg(path)?, None)?;
        *out = Box::into_raw(Box::new(QnmlDataset(data)));
        Ok(())
    })
}

/// Builds a dataset from a row-major `n_rows x n_vars` matrix of category
/// indices. Variables are named `x0`, `x1`, ...
///
/// # Safety
/// `values` must hold `n_rows * n_vars` entries and `arities` `n_vars`
/// entries; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnml_dataset_from_matrix(
    values: *const u32,
    n_rows: usize,
    n_vars: usize,
    arities: *const usize,
    out: *mut *mut QnmlDataset,
) -> QnmlStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(arities, "arities")?;
        if n_rows > 0 {
            non_null(values, "values")?;
        }
        let cells = n_rows
            .checked_mul(n_vars)
            .ok_or_else(|| Fail(QnmlStatus::ResourceLimit, "matrix size overflows".into()))?;
        let flat: &[u32] = if cells == 0 { &[] } else { std::slice::from_raw_parts(values, cells) };
        let arities = std::slice::from_raw_parts(arities, n_vars).to_vec();
        let rows: Vec<Vec<usize>> = flat
            .chunks(n_vars.max(1))
            .take(n_rows)
            .map(|r| r.iter().map(|&v| v as usize).collect())
            .collect();
        let names = (0..n_vars).map(|i| format!("x{i}")).collect();
        let data = Dataset::from_rows(names, arities, &rows)?;
        *out = Box::into_raw(Box::new(QnmlDataset(data)));
        Ok(())
    })
}

/// Number of rows, or 0 for NULL.
///
/// # Safety
/// `data` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn qnml_dataset_n_rows(data: *const QnmlDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.n_rows())
}

/// Number of variables, or 0 for NULL.
///
/// # Safety
/// `data` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn qnml_dataset_n_vars(data: *const QnmlDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.n_vars())
}

/// # Safety
/// `data` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qnml_dataset_free(data: *mut QnmlDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Local score of `child` given `parents` (default alphas, all-range regret).
///
/// # Safety
/// `data` must be a live handle, `parents` must hold `n_parents` entries
/// (may be NULL when `n_parents` is 0), `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnml_local_score(
    data: *const QnmlDataset,
    crit: QnmlCriterion,
    child: usize,
    parents: *const usize,
    n_parents: usize,
    out: *mut f64,
) -> QnmlStatus {
    guard(|| {
        non_null(data, "data")?;
        non_null(out, "out")?;
        let parents: &[usize] = if n_parents == 0 {
            &[]
        } else {
            non_null(parents, "parents")?;
            std::slice::from_raw_parts(parents, n_parents)
        };
        let scorer = Scorer::new(&(*data).0, ScoreConfig::new(criterion(crit)))?;
        *out = scorer.local(child, parents)?;
        Ok(())
    })
}

/// Exact structure search. A negative `max_parents` means no cap.
///
/// # Safety
/// `data` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnml_learn(
    data: *const QnmlDataset,
    crit: QnmlCriterion,
    max_parents: i64,
    out: *mut *mut QnmlNetwork,
) -> QnmlStatus {
    guard(|| {
        non_null(data, "data")?;
        non_null(out, "out")?;
        let data = &(*data).0;
        let cap = usize::try_from(max_parents).ok();
        let result = qnml::learn_exact(data, &ScoreConfig::new(criterion(crit)), cap)?;
        let graph = result.network.with_names(data.names().to_vec())?;
        *out = Box::into_raw(Box::new(QnmlNetwork {
            graph,
            score: Some(result.total_score),
        }));
        Ok(())
    })
}

/// Loads a network document (CPTs optional).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnml_network_load(path: *const c_char, out: *mut *mut QnmlNetwork) -> QnmlStatus {
    guard(|| {
        non_null(out, "out")?;
        let graph = NetworkDocument::load(path_arg(path)?)?.structure()?;
        *out = Box::into_raw(Box::new(QnmlNetwork { graph, score: None }));
        Ok(())
    })
}

/// Number of variables, or 0 for NULL.
///
/// # Safety
/// `net` must be NULL or a live network handle.
#[no_mangle]
pub unsafe extern "C" fn qnml_network_n_vars(net: *const QnmlNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.graph.n())
}

/// Writes up to `cap` parent indices of `child` (ascending) into `buf` and
/// their total number into `count`. Returns `BUFFER_TOO_SMALL` when `cap`
/// is short; `count` is still set.
///
/// # Safety
/// `net` must be a live handle, `buf` must hold `cap` entries (may be NULL
/// when `cap` is 0), `count` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnml_network_parents(
    net: *const QnmlNetwork,
    child: usize,
    buf: *mut usize,
    cap: usize,
    count: *mut usize,
) -> QnmlStatus {
    guard(|| {
        non_null(net, "net")?;
        non_null(count, "count")?;
        let g = &(*net).graph;
        if child >= g.n() {
            return Err(Fail(
                QnmlStatus::InvalidArgument,
                format!("variable {child} out of range for {} variables", g.n()),
            ));
        }
        let ps = g.parents(child);
        *count = ps.len();
        if ps.len() > cap {
            return Err(Fail(
                QnmlStatus::BufferTooSmall,
                format!("{} parents, buffer holds {cap}", ps.len()),
            ));
        }
        if !ps.is_empty() {
            non_null(buf, "buf")?;
            std::slice::from_raw_parts_mut(buf, ps.len()).copy_from_slice(ps);
        }
        Ok(())
    })
}

/// Total score found by [`qnml_learn`]. Fails with `INVALID_ARGUMENT` for
/// networks loaded from file.
///
/// # Safety
/// `net` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnml_network_score(net: *const QnmlNetwork, out: *mut f64) -> QnmlStatus {
    guard(|| {
        non_null(net, "net")?;
        non_null(out, "out")?;
        *out = (*net).score.ok_or_else(|| {
            Fail(QnmlStatus::InvalidArgument, "network was not learned from data".into())
        })?;
        Ok(())
    })
}

/// Structural Hamming distance between the equivalence classes of two
/// networks over the same variables (matched by position).
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnml_shd(a: *const QnmlNetwork, b: *const QnmlNetwork, out: *mut usize) -> QnmlStatus {
    guard(|| {
        non_null(a, "a")?;
        non_null(b, "b")?;
        non_null(out, "out")?;
        *out = qnml::shd(&(*a).graph, &(*b).graph)?;
        Ok(())
    })
}

/// # Safety
/// `net` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qnml_network_free(net: *mut QnmlNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}
