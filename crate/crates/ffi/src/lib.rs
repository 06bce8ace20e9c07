//! C interface to `mnw-core`.
//!
//! Every fallible function returns one of the `MNW_*` status codes and writes
//! its result through an out-pointer. On failure the message is kept per
//! thread and can be read with [`mnw_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mnw_core::bounds::{binomial_tail, conductance_exact, gamma_rate, isoperimetric_exact, rate_i, Tail};
use mnw_core::format::{load_edge_list, save_edge_list};
use mnw_core::gen::{generate, EdgeList};
use mnw_core::graph::{bfs_distances, diameter, max_degree, DiameterMode, Graph};
use mnw_core::torus::{ModelParams, VertexId};
use mnw_core::walk::{mixing_time, spectral_gap_with, MixingOptions, PowerOptions, Starts};
use mnw_core::Error;

pub const MNW_OK: i32 = 0;
pub const MNW_ERR_NULL: i32 = 1;
pub const MNW_ERR_INVALID_PARAMS: i32 = 2;
pub const MNW_ERR_IO: i32 = 3;
pub const MNW_ERR_RESOURCE_CAP: i32 = 4;
pub const MNW_ERR_CONVERGENCE: i32 = 5;
pub const MNW_ERR_FORMAT: i32 = 6;
pub const MNW_ERR_PANIC: i32 = 7;
pub const MNW_ERR_BUFFER_TOO_SMALL: i32 = 8;

/// Model parameters, laid out for C.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct MnwParams {
    pub d: u32,
    pub n: u32,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub zeta: f64,
    pub seed: u64,
}

impl From<MnwParams> for ModelParams {
    fn from(p: MnwParams) -> Self {
        ModelParams {
            d: p.d,
            n: p.n,
            alpha: p.alpha,
            beta: p.beta,
            sigma: p.sigma,
            zeta: p.zeta,
            seed: p.seed,
        }
    }
}

/// Opaque graph handle. Free with [`mnw_graph_free`].
pub struct MnwGraph {
    edges: EdgeList,
    graph: Graph,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => MNW_ERR_IO,
        Error::ResourceCap(_) => MNW_ERR_RESOURCE_CAP,
        Error::NoConvergence { .. } => MNW_ERR_CONVERGENCE,
        Error::Parse { .. } | Error::MalformedEdges(_) | Error::Csv(_) | Error::Json(_) => MNW_ERR_FORMAT,
        _ => MNW_ERR_INVALID_PARAMS,
    }
}

/// Runs `body`, mapping errors and panics onto status codes.
fn guard(body: impl FnOnce() -> Result<(), (i32, String)>) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MNW_OK,
        Ok(Err((code, message))) => {
            set_error(message);
            code
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {message}"));
            MNW_ERR_PANIC
        }
    }
}

fn core<T>(r: mnw_core::Result<T>) -> Result<T, (i32, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (i32, String) {
    (MNW_ERR_NULL, format!("{what} is null"))
}

unsafe fn deref<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, (i32, String)> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, (i32, String)> {
    ptr.as_mut().ok_or_else(|| null(what))
}

unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, (i32, String)> {
    if ptr.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map(Path::new)
        .map_err(|_| (MNW_ERR_INVALID_PARAMS, "path is not valid UTF-8".into()))
}

fn handle(edges: EdgeList) -> Result<*mut MnwGraph, (i32, String)> {
    let graph = core(Graph::build(&edges))?;
    Ok(Box::into_raw(Box::new(MnwGraph { edges, graph })))
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to fit. Returns the full message length
/// without the terminator. `buf` may be null when `len` is 0.
///
/// # Safety
/// `buf` must be valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn mnw_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let message = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = message.len().min(len - 1);
            std::ptr::copy_nonoverlapping(message.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        message.len()
    })
}

/// Samples a graph.
///
/// # Safety
/// `params` must point to a valid `MnwParams`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mnw_generate(params: *const MnwParams, out_graph: *mut *mut MnwGraph) -> i32 {
    guard(|| {
        let params: ModelParams = (*deref(params, "params")?).into();
        let slot = out(out_graph, "out_graph")?;
        let edges = core(generate(&params))?;
        *slot = handle(edges)?;
        Ok(())
    })
}

/// Reads an `mnw v1` edge-list file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_graph` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mnw_graph_load(path: *const c_char, out_graph: *mut *mut MnwGraph) -> i32 {
    guard(|| {
        let path = path_arg(path)?;
        let slot = out(out_graph, "out_graph")?;
        *slot = handle(core(load_edge_list(path))?)?;
        Ok(())
    })
}

/// Writes the graph's edge list.
///
/// # Safety
/// `graph` must come from this library; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mnw_graph_save(graph: *const MnwGraph, path: *const c_char) -> i32 {
    guard(|| {
        let g = deref(graph, "graph")?;
        core(save_edge_list(&g.edges, path_arg(path)?))
    })
}

/// Releases a graph. Null is ignored.
///
/// # Safety
/// `graph` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mnw_graph_free(graph: *mut MnwGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// `graph` must come from this library; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mnw_graph_vertex_count(graph: *const MnwGraph, out_count: *mut u64) -> i32 {
    guard(|| {
        let g = deref(graph, "graph")?;
        *out(out_count, "out_count")? = g.graph.vertex_count() as u64;
        Ok(())
    })
}

/// Edges of the simple graph, torus and long.
///
/// # Safety
/// `graph` must come from this library; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mnw_graph_edge_count(graph: *const MnwGraph, out_count: *mut u64) -> i32 {
    guard(|| {
        let g = deref(graph, "graph")?;
        *out(out_count, "out_count")? = g.graph.edge_count();
        Ok(())
    })
}

/// Long edges as sampled, before merging with torus edges.
///
/// # Safety
/// `graph` must come from this library; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mnw_graph_long_edge_count(graph: *const MnwGraph, out_count: *mut u64) -> i32 {
    guard(|| {
        let g = deref(graph, "graph")?;
        *out(out_count, "out_count")? = g.edges.long_edges.len() as u64;
        Ok(())
    })
}

/// # Safety
/// `graph` must come from this library; `out_degree` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mnw_graph_max_degree(graph: *const MnwGraph, out_degree: *mut u32) -> i32 {
    guard(|| {
        let g = deref(graph, "graph")?;
        *out(out_degree, "out_degree")? = max_degree(&g.graph);
        Ok(())
    })
}

/// Hop diameter. With `sampled` nonzero, the maximum eccentricity over `k`
/// random sources and `*out_exact` is 0.
///
/// # Safety
/// `graph` must come from this library; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn mnw_diameter(
    graph: *const MnwGraph,
    sampled: i32,
    k: u32,
    seed: u64,
    out_value: *mut u32,
    out_exact: *mut i32,
) -> i32 {
    guard(|| {
        let g = deref(graph, "graph")?;
        let value = out(out_value, "out_value")?;
        let exact = out(out_exact, "out_exact")?;
        let mode = if sampled != 0 {
            DiameterMode::Sampled {
                sources: k as usize,
                seed,
            }
        } else {
            DiameterMode::Exact
        };
        let d = diameter(&g.graph, mode);
        *value = d.value;
        *exact = d.exact as i32;
        Ok(())
    })
}

/// Hop distances from `source` into `buf`, which must hold one entry per
/// vertex.
///
/// # Safety
/// `graph` must come from this library; `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mnw_bfs(graph: *const MnwGraph, source: u32, buf: *mut u32, len: usize) -> i32 {
    guard(|| {
        let g = deref(graph, "graph")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let count = g.graph.vertex_count();
        if len < count {
            return Err((MNW_ERR_BUFFER_TOO_SMALL, format!("buffer holds {len} entries, need {count}")));
        }
        let dist = core(bfs_distances(&g.graph, VertexId(source)))?;
        std::slice::from_raw_parts_mut(buf, count).copy_from_slice(&dist);
        Ok(())
    })
}

/// Mixing time of the lazy walk. All starts unless `sampled` is nonzero, in
/// which case `k` random starts plus one far vertex give a lower bound.
///
/// # Safety
/// `graph` must come from this library; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn mnw_mixing_time(
    graph: *const MnwGraph,
    sampled: i32,
    k: u32,
    seed: u64,
    max_steps: u64,
    out_t_mix: *mut u64,
    out_exact: *mut i32,
) -> i32 {
    guard(|| {
        let g = deref(graph, "graph")?;
        let t = out(out_t_mix, "out_t_mix")?;
        let exact = out(out_exact, "out_exact")?;
        let starts = if sampled != 0 {
            Starts::Sample { k: k as usize, seed }
        } else {
            Starts::All
        };
        let opts = MixingOptions {
            max_steps,
            ..MixingOptions::default()
        };
        let r = core(mixing_time(&g.graph, &starts, &opts))?;
        *t = r.t_mix;
        *exact = r.exact as i32;
        Ok(())
    })
}

/// `1 - λ₁` of the lazy walk by power iteration.
///
/// # Safety
/// `graph` must come from this library; `out_gap` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mnw_spectral_gap(graph: *const MnwGraph, tol: f64, max_iterations: u64, out_gap: *mut f64) -> i32 {
    guard(|| {
        let g = deref(graph, "graph")?;
        let gap = out(out_gap, "out_gap")?;
        let opts = PowerOptions {
            tol,
            max_iterations,
            seed: 0,
        };
        *gap = core(spectral_gap_with(&g.graph, &opts))?.gap;
        Ok(())
    })
}

/// Exact conductance for graphs of at most 24 vertices.
///
/// # Safety
/// `graph` must come from this library; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mnw_conductance_exact(graph: *const MnwGraph, out_value: *mut f64) -> i32 {
    guard(|| {
        let g = deref(graph, "graph")?;
        *out(out_value, "out_value")? = core(conductance_exact(&g.graph))?.value;
        Ok(())
    })
}

/// Exact edge isoperimetric constant for graphs of at most 24 vertices.
///
/// # Safety
/// `graph` must come from this library; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mnw_isoperimetric_exact(graph: *const MnwGraph, out_value: *mut f64) -> i32 {
    guard(|| {
        let g = deref(graph, "graph")?;
        *out(out_value, "out_value")? = core(isoperimetric_exact(&g.graph))?.value;
        Ok(())
    })
}

/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mnw_rate_i(z: f64, p: f64, out_value: *mut f64) -> i32 {
    guard(|| {
        *out(out_value, "out_value")? = core(rate_i(z, p))?;
        Ok(())
    })
}

/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mnw_gamma_rate(z: f64, out_value: *mut f64) -> i32 {
    guard(|| {
        *out(out_value, "out_value")? = core(gamma_rate(z))?;
        Ok(())
    })
}

/// `P(Z >= zn)` when `upper` is nonzero, else `P(Z <= zn)`, for
/// `Z ~ Binomial(n, p)`.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mnw_binomial_tail(n: u64, p: f64, z: f64, upper: i32, out_value: *mut f64) -> i32 {
    guard(|| {
        let side = if upper != 0 { Tail::Upper } else { Tail::Lower };
        *out(out_value, "out_value")? = core(binomial_tail(n, p, z, side))?;
        Ok(())
    })
}
