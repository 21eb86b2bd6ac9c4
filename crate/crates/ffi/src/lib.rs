//! C interface: opaque surface and graph handles, integer status codes, and
//! a per-thread message for the last failure.
//!
//! Every function returns `HF_OK` or an error code. Outputs go through
//! pointer arguments, which are left untouched on failure.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hypfill::brooks_makover;
use hypfill::dual::{self, DualError};
use hypfill::fill_graph::{self, EmbeddedGraph, GraphError, ShortenConfig};
use hypfill::fixtures;
use hypfill::surface::TriangulatedSurface;
use hypfill::{bounds, hyp};

pub const HF_OK: c_int = 0;
pub const HF_ERR_NULL: c_int = 1;
pub const HF_ERR_INPUT: c_int = 2;
pub const HF_ERR_INVARIANT: c_int = 3;
pub const HF_ERR_UNSUPPORTED: c_int = 4;
pub const HF_ERR_PANIC: c_int = 5;

/// A triangulated hyperbolic surface.
pub struct HfSurface(TriangulatedSurface);

/// A graph embedded in a surface.
pub struct HfGraph(EmbeddedGraph);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let s = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

struct Failure(c_int, String);

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        let code = match e {
            GraphError::Unsupported(_) => HF_ERR_UNSUPPORTED,
            GraphError::Invariant(_) | GraphError::NoProgress(_) | GraphError::Retry(_) => HF_ERR_INVARIANT,
            _ => HF_ERR_INPUT,
        };
        Failure(code, e.to_string())
    }
}

impl From<DualError> for Failure {
    fn from(e: DualError) -> Self {
        match e {
            DualError::Graph(g) => g.into(),
            DualError::Invariant(_) => Failure(HF_ERR_INVARIANT, e.to_string()),
            _ => Failure(HF_ERR_INPUT, e.to_string()),
        }
    }
}

fn input(e: impl ToString) -> Failure {
    Failure(HF_ERR_INPUT, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HF_OK,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            HF_ERR_PANIC
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(HF_ERR_NULL, "null string".into()));
    }
    CStr::from_ptr(p).to_str().map_err(input)
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure(HF_ERR_NULL, "null output pointer".into()))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(HF_ERR_NULL, "null handle".into()))
}

/// Copies the last error message of this thread into `buf`, truncated and
/// NUL-terminated. Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hf_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Parses a surface from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_surface` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_surface_from_json(json: *const c_char, out_surface: *mut *mut HfSurface) -> c_int {
    guard(|| {
        let slot = out(out_surface)?;
        let s = TriangulatedSurface::from_json_str(text(json)?).map_err(input)?;
        *slot = Box::into_raw(Box::new(HfSurface(s)));
        Ok(())
    })
}

/// Loads a bundled closed surface by name, such as `genus2_deg8`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out_surface` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_surface_fixture(name: *const c_char, out_surface: *mut *mut HfSurface) -> c_int {
    guard(|| {
        let slot = out(out_surface)?;
        let name = text(name)?;
        let (_, json) = fixtures::closed_fixtures()
            .into_iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| input(format!("no fixture named {name}")))?;
        *slot = Box::into_raw(Box::new(HfSurface(fixtures::load(json))));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn hf_surface_free(s: *mut HfSurface) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live surface handle; `genus` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_surface_genus(s: *const HfSurface, genus: *mut usize) -> c_int {
    guard(|| {
        let slot = out(genus)?;
        *slot = handle(s)?.0.euler_data().genus;
        Ok(())
    })
}

/// Shortens the pruned skeleton of a closed surface. `converged` receives 1 or 0.
///
/// # Safety
/// `s` must be a live surface handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_shorten(s: *const HfSurface, out_graph: *mut *mut HfGraph, converged: *mut c_int) -> c_int {
    guard(|| {
        let slot = out(out_graph)?;
        let flag = out(converged)?;
        let s = &handle(s)?.0;
        let start = fill_graph::shortening_start(s)?;
        let r = fill_graph::shorten_to_local_min(&start, s, &ShortenConfig::default())?;
        *flag = c_int::from(r.converged);
        *slot = Box::into_raw(Box::new(HfGraph(r.graph)));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn hf_graph_free(g: *mut HfGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live graph handle; `length` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_graph_length(g: *const HfGraph, length: *mut f64) -> c_int {
    guard(|| {
        let slot = out(length)?;
        *slot = handle(g)?.0.total_length();
        Ok(())
    })
}

/// Serializes a graph to JSON. Release the string with [`hf_string_free`].
///
/// # Safety
/// `g` must be a live graph handle; `json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_graph_to_json(g: *const HfGraph, json: *mut *mut c_char) -> c_int {
    guard(|| {
        let slot = out(json)?;
        let s = serde_json::to_string(&handle(g)?.0.to_json()).map_err(input)?;
        *slot = CString::new(s).map_err(input)?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn hf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Length of a balanced trivalent graph and of its dual curves.
///
/// # Safety
/// `g` must be a live graph handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_dual_lengths(g: *const HfGraph, graph_length: *mut f64, dual_length: *mut f64) -> c_int {
    guard(|| {
        let (a, b) = (out(graph_length)?, out(dual_length)?);
        let g = &handle(g)?.0;
        let d = dual::dual_of_graph(g)?;
        let c = dual::decompose_curves(&d);
        let sw = dual::length_sandwich(g, &d, &c)?;
        *a = sw.source;
        *b = sw.dual;
        Ok(())
    })
}

/// Mean genus and fraction of samples with every cusp degree at least `threshold`.
///
/// # Safety
/// The output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_bm_statistics(
    n: usize,
    samples: usize,
    seed: u64,
    threshold: usize,
    mean_genus: *mut f64,
    frac_large_cusps: *mut f64,
) -> c_int {
    guard(|| {
        let (a, b) = (out(mean_genus)?, out(frac_large_cusps)?);
        let st = brooks_makover::run_statistics(n, samples, seed, threshold)?;
        *a = st.aggregates.mean_genus;
        *b = st.aggregates.frac_min_degree_at_least;
        Ok(())
    })
}

/// # Safety
/// `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_exact_min(genus: u64, value: *mut f64) -> c_int {
    guard(|| {
        let slot = out(value)?;
        *slot = bounds::exact_min(genus).map_err(input)?;
        Ok(())
    })
}

/// # Safety
/// `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_collar_half_width(length: f64, value: *mut f64) -> c_int {
    guard(|| {
        let slot = out(value)?;
        *slot = hyp::collar_half_width(length).map_err(input)?;
        Ok(())
    })
}
