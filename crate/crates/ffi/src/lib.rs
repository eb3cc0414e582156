//! C ABI over `augspec`.
//!
//! Objects live behind opaque handles released with the matching `*_free`. Every fallible call returns an
//! `AugspecStatus`; on failure the message is kept per thread and read with
//! [`augspec_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use augspec::bounds::{flip_tolerance_exact, ToleranceInputs};
use augspec::embedding::{build_representation, eigendecompose, normalize, RepresentationMatrix, Spectrum};
use augspec::graph::{delta_prime, synthesize_structured, AdjacencyMatrix, AssumptionReport};
use augspec::labels::{clean_labels, flip_noise, gaussian_noise, symmetric_flip_spec, LabelMatrix};
use augspec::probe::{expected_error_closed_form, ground_truth_accuracy, ground_truth_mse, ridge_fit};
use augspec::structure::SubclassStructure;
use augspec::Error;

pub type AugspecStatus = i32;

pub const AUGSPEC_OK: AugspecStatus = 0;
pub const AUGSPEC_NULL_POINTER: AugspecStatus = 1;
pub const AUGSPEC_INVALID_ARGUMENT: AugspecStatus = 2;
pub const AUGSPEC_DIMENSION_MISMATCH: AugspecStatus = 3;
pub const AUGSPEC_NUMERICAL: AugspecStatus = 4;
pub const AUGSPEC_PANIC: AugspecStatus = 5;
pub const AUGSPEC_BUFFER_TOO_SMALL: AugspecStatus = 6;

/// Weighted graph with its sub-class layout.
pub struct AugspecGraph {
    inner: AdjacencyMatrix,
}

/// Eigenpairs of a normalized graph.
pub struct AugspecSpectrum {
    inner: Spectrum,
}

/// `n x p` embedding.
pub struct AugspecRepresentation {
    inner: RepresentationMatrix,
}

/// `n x K` label matrix.
pub struct AugspecLabels {
    inner: LabelMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Fail(AugspecStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DimensionMismatch { .. } => AUGSPEC_DIMENSION_MISMATCH,
            Error::Numerical(_) | Error::RankDeficient(_) | Error::NegativeEigenvalue { .. } => AUGSPEC_NUMERICAL,
            _ => AUGSPEC_INVALID_ARGUMENT,
        };
        Fail(code, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(AUGSPEC_NULL_POINTER, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AugspecStatus {
    let (code, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (AUGSPEC_OK, String::new()),
        Ok(Err(Fail(code, msg))) => (code, msg),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            (AUGSPEC_PANIC, format!("internal panic: {msg}"))
        }
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    code
}

unsafe fn href<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn store<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn fill(out: *mut f64, len: usize, values: impl ExactSizeIterator<Item = f64>) -> Result<(), Fail> {
    let need = values.len();
    if len < need {
        return Err(Fail(AUGSPEC_BUFFER_TOO_SMALL, format!("buffer holds {len} values, {need} needed")));
    }
    if need > 0 && out.is_null() {
        return Err(null("output buffer"));
    }
    for (i, v) in values.enumerate() {
        out.add(i).write(v);
    }
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn structure_from(classes: usize, sizes: *const usize, class_of: *const usize, k_bar: usize) -> Result<SubclassStructure, Fail> {
    let sizes = input(sizes, k_bar, "sizes")?.to_vec();
    let class_of = input(class_of, k_bar, "class_of")?.to_vec();
    Ok(SubclassStructure::new(classes, sizes, class_of)?)
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated)
/// and stores the byte count it needs, including the terminator, in `needed`.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn augspec_last_error(buf: *mut c_char, len: usize, needed: *mut usize) -> AugspecStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    let need = msg.len() + 1;
    if !needed.is_null() {
        needed.write(need);
    }
    if len < need {
        return AUGSPEC_BUFFER_TOO_SMALL;
    }
    if buf.is_null() {
        return AUGSPEC_NULL_POINTER;
    }
    std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, msg.len());
    buf.add(msg.len()).write(0);
    AUGSPEC_OK
}

/// Synthesizes a graph over `k_bar` sub-classes with the given slack targets.
///
/// # Safety
/// `sizes` and `class_of` must hold `k_bar` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn augspec_graph_synthesize(
    classes: usize,
    sizes: *const usize,
    class_of: *const usize,
    k_bar: usize,
    delta: f64,
    xi: f64,
    base_weight: f64,
    seed: u64,
    out: *mut *mut AugspecGraph,
) -> AugspecStatus {
    guard(|| {
        let s = structure_from(classes, sizes, class_of, k_bar)?;
        let g = synthesize_structured(&s, delta, xi, base_weight, seed)?;
        store(out, boxed(AugspecGraph { inner: g }), "out")
    })
}

/// Wraps a row-major `n x n` weight matrix.
///
/// # Safety
/// `weights` must hold `n * n` values; structure arrays `k_bar` entries.
#[no_mangle]
pub unsafe extern "C" fn augspec_graph_from_weights(
    n: usize,
    weights: *const f64,
    classes: usize,
    sizes: *const usize,
    class_of: *const usize,
    k_bar: usize,
    out: *mut *mut AugspecGraph,
) -> AugspecStatus {
    guard(|| {
        let s = structure_from(classes, sizes, class_of, k_bar)?;
        let w = input(weights, n * n, "weights")?;
        let m = nalgebra::DMatrix::from_row_slice(n, n, w);
        let g = AdjacencyMatrix::new(m, s)?;
        store(out, boxed(AugspecGraph { inner: g }), "out")
    })
}

/// Number of points in a graph, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn augspec_graph_n(graph: *const AugspecGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.n())
}

/// Measured compactness, its column-ratio form, and distinguishability.
///
/// # Safety
/// `graph` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn augspec_graph_measure(
    graph: *const AugspecGraph,
    delta: *mut f64,
    delta_prime_out: *mut f64,
    xi: *mut f64,
) -> AugspecStatus {
    guard(|| {
        let g = href(graph, "graph")?;
        let m = AssumptionReport::measure(&g.inner)?;
        store(delta, m.delta, "delta")?;
        store(delta_prime_out, m.delta_prime, "delta_prime")?;
        store(xi, m.xi, "xi")
    })
}

/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn augspec_graph_free(graph: *mut AugspecGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Normalizes and eigendecomposes a graph.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn augspec_spectrum_compute(graph: *const AugspecGraph, out: *mut *mut AugspecSpectrum) -> AugspecStatus {
    guard(|| {
        let g = href(graph, "graph")?;
        let spec = eigendecompose(&normalize(&g.inner)?)?;
        store(out, boxed(AugspecSpectrum { inner: spec }), "out")
    })
}

/// Copies the `n` descending eigenvalues into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn augspec_spectrum_eigenvalues(spectrum: *const AugspecSpectrum, buf: *mut f64, len: usize) -> AugspecStatus {
    guard(|| {
        let s = href(spectrum, "spectrum")?;
        fill(buf, len, s.inner.eigenvalues().iter().copied())
    })
}

/// # Safety
/// `spectrum` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn augspec_spectrum_free(spectrum: *mut AugspecSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Builds the rank-`p` embedding, rotated by a seeded orthogonal matrix when
/// `rotate` is set.
///
/// # Safety
/// `spectrum` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn augspec_representation_build(
    spectrum: *const AugspecSpectrum,
    p: usize,
    rotate: bool,
    rotation_seed: u64,
    out: *mut *mut AugspecRepresentation,
) -> AugspecStatus {
    guard(|| {
        let s = href(spectrum, "spectrum")?;
        let f = build_representation(&s.inner, p, rotate.then_some(rotation_seed))?;
        store(out, boxed(AugspecRepresentation { inner: f }), "out")
    })
}

/// # Safety
/// `rep` must be a live handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn augspec_representation_shape(rep: *const AugspecRepresentation, rows: *mut usize, cols: *mut usize) -> AugspecStatus {
    guard(|| {
        let r = href(rep, "representation")?;
        store(rows, r.inner.values().nrows(), "rows")?;
        store(cols, r.inner.values().ncols(), "cols")
    })
}

/// Copies the embedding row-major into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn augspec_representation_values(rep: *const AugspecRepresentation, buf: *mut f64, len: usize) -> AugspecStatus {
    guard(|| {
        let r = href(rep, "representation")?;
        let v = r.inner.values();
        let (n, p) = v.shape();
        fill(buf, len, (0..n * p).map(|i| v[(i / p, i % p)]))
    })
}

/// # Safety
/// `rep` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn augspec_representation_free(rep: *mut AugspecRepresentation) {
    if !rep.is_null() {
        drop(Box::from_raw(rep));
    }
}

/// One-hot class labels for a graph's points.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn augspec_labels_clean(graph: *const AugspecGraph, out: *mut *mut AugspecLabels) -> AugspecStatus {
    guard(|| {
        let g = href(graph, "graph")?;
        let y = clean_labels(g.inner.structure());
        store(out, boxed(AugspecLabels { inner: y }), "out")
    })
}

/// Clean labels plus i.i.d. `N(0, sigma^2 / K)` noise.
///
/// # Safety
/// `clean` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn augspec_labels_gaussian(clean: *const AugspecLabels, sigma: f64, seed: u64, out: *mut *mut AugspecLabels) -> AugspecStatus {
    guard(|| {
        let y = href(clean, "labels")?;
        let noisy = gaussian_noise(&y.inner, sigma, seed)?;
        store(out, boxed(AugspecLabels { inner: noisy }), "out")
    })
}

/// Symmetric label flips at rate `alpha` in every sub-class of `graph`.
///
/// # Safety
/// `graph` and `clean` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn augspec_labels_flip_symmetric(
    graph: *const AugspecGraph,
    clean: *const AugspecLabels,
    alpha: f64,
    seed: u64,
    out: *mut *mut AugspecLabels,
) -> AugspecStatus {
    guard(|| {
        let g = href(graph, "graph")?;
        let y = href(clean, "labels")?;
        let s = g.inner.structure();
        let spec = symmetric_flip_spec(s, alpha, seed)?;
        let (noisy, _) = flip_noise(&y.inner, s, &spec)?;
        store(out, boxed(AugspecLabels { inner: noisy }), "out")
    })
}

/// # Safety
/// `labels` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn augspec_labels_free(labels: *mut AugspecLabels) {
    if !labels.is_null() {
        drop(Box::from_raw(labels));
    }
}

/// Fits the ridge probe on `noisy` and scores it against `clean`.
///
/// # Safety
/// Handles must be live; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn augspec_probe_evaluate(
    rep: *const AugspecRepresentation,
    noisy: *const AugspecLabels,
    clean: *const AugspecLabels,
    beta: f64,
    mse: *mut f64,
    accuracy: *mut f64,
) -> AugspecStatus {
    guard(|| {
        let f = href(rep, "representation")?;
        let yn = href(noisy, "noisy labels")?;
        let yc = href(clean, "clean labels")?;
        let fit = ridge_fit(&f.inner, &yn.inner, beta)?;
        store(mse, ground_truth_mse(&fit, &yc.inner)?, "mse")?;
        store(accuracy, ground_truth_accuracy(&fit, &yc.inner)?.accuracy, "accuracy")
    })
}

/// Exact expected bias and variance of the probe under Gaussian label noise.
///
/// # Safety
/// Handles must be live; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn augspec_expected_error(
    spectrum: *const AugspecSpectrum,
    p: usize,
    clean: *const AugspecLabels,
    beta: f64,
    sigma: f64,
    bias_sq: *mut f64,
    variance: *mut f64,
) -> AugspecStatus {
    guard(|| {
        let s = href(spectrum, "spectrum")?;
        let y = href(clean, "labels")?;
        let e = expected_error_closed_form(&s.inner, p, &y.inner, beta, sigma)?;
        store(bias_sq, e.bias_sq, "bias_sq")?;
        store(variance, e.variance, "variance")
    })
}

/// Largest flip rate with a clean-recovery guarantee; `guaranteed` is false
/// when `delta` is too large for any.
///
/// # Safety
/// Outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn augspec_flip_tolerance(
    classes: usize,
    subclasses: usize,
    n_min: usize,
    n_max: usize,
    c_max: f64,
    delta: f64,
    beta: f64,
    p: usize,
    alpha_max: *mut f64,
    guaranteed: *mut bool,
) -> AugspecStatus {
    guard(|| {
        let inputs = ToleranceInputs {
            classes,
            subclasses,
            n_min,
            n_max,
            c_max,
            delta,
            delta_prime: delta_prime(delta),
            beta,
            p,
        };
        let t = flip_tolerance_exact(&inputs)?;
        store(alpha_max, t.alpha_max, "alpha_max")?;
        store(guaranteed, t.guaranteed, "guaranteed")
    })
}
