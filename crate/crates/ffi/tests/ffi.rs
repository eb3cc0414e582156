use std::ffi::CStr;
use std::ptr;

use augspec_ffi::*;

const SIZES: [usize; 4] = [6, 6, 6, 6];
const CLASS_OF: [usize; 4] = [0, 0, 1, 1];

fn last_error() -> String {
    let mut need = 0usize;
    unsafe {
        assert_eq!(augspec_last_error(ptr::null_mut(), 0, &mut need), AUGSPEC_BUFFER_TOO_SMALL);
        let mut buf = vec![0 as std::ffi::c_char; need];
        assert_eq!(augspec_last_error(buf.as_mut_ptr(), buf.len(), &mut need), AUGSPEC_OK);
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn graph(delta: f64, seed: u64) -> *mut AugspecGraph {
    let mut g = ptr::null_mut();
    let st = unsafe { augspec_graph_synthesize(2, SIZES.as_ptr(), CLASS_OF.as_ptr(), 4, delta, 0.0, 1.0, seed, &mut g) };
    assert_eq!(st, AUGSPEC_OK, "{}", last_error());
    g
}

#[test]
fn pipeline_matches_core() {
    unsafe {
        let g = graph(0.1, 7);
        assert_eq!(augspec_graph_n(g), 24);
        let (mut d, mut dp, mut xi) = (0.0, 0.0, 0.0);
        assert_eq!(augspec_graph_measure(g, &mut d, &mut dp, &mut xi), AUGSPEC_OK);
        assert!(d <= 0.1 + 1e-12 && xi == 0.0);
        assert!((dp - ((1.0 + d).powf(1.5) - 1.0)).abs() < 1e-15);

        let mut s = ptr::null_mut();
        assert_eq!(augspec_spectrum_compute(g, &mut s), AUGSPEC_OK);
        let mut lam = vec![0.0; 24];
        assert_eq!(augspec_spectrum_eigenvalues(s, lam.as_mut_ptr(), 2), AUGSPEC_BUFFER_TOO_SMALL);
        assert_eq!(augspec_spectrum_eigenvalues(s, lam.as_mut_ptr(), lam.len()), AUGSPEC_OK);
        assert!(lam.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        assert!((lam[0] - 1.0).abs() < 1e-10);

        let mut r = ptr::null_mut();
        assert_eq!(augspec_representation_build(s, 6, true, 3, &mut r), AUGSPEC_OK);
        let (mut rows, mut cols) = (0, 0);
        assert_eq!(augspec_representation_shape(r, &mut rows, &mut cols), AUGSPEC_OK);
        assert_eq!((rows, cols), (24, 6));
        let mut vals = vec![0.0; rows * cols];
        assert_eq!(augspec_representation_values(r, vals.as_mut_ptr(), vals.len()), AUGSPEC_OK);
        let gram: f64 = vals.iter().map(|v| v * v).sum();
        let top: f64 = lam[..6].iter().sum();
        assert!((gram - top).abs() < 1e-10);

        let mut clean = ptr::null_mut();
        let mut noisy = ptr::null_mut();
        assert_eq!(augspec_labels_clean(g, &mut clean), AUGSPEC_OK);
        assert_eq!(augspec_labels_gaussian(clean, 0.3, 5, &mut noisy), AUGSPEC_OK);
        let (mut mse, mut acc) = (0.0, 0.0);
        assert_eq!(augspec_probe_evaluate(r, noisy, clean, 0.1, &mut mse, &mut acc), AUGSPEC_OK);
        assert!(mse.is_finite() && (0.0..=1.0).contains(&acc));

        let (mut b, mut v) = (0.0, 0.0);
        assert_eq!(augspec_expected_error(s, 6, clean, 0.1, 0.3, &mut b, &mut v), AUGSPEC_OK);
        assert!(b >= 0.0 && v > 0.0);

        let mut flipped = ptr::null_mut();
        assert_eq!(augspec_labels_flip_symmetric(g, clean, 0.2, 9, &mut flipped), AUGSPEC_OK);
        assert_eq!(augspec_probe_evaluate(r, flipped, clean, 0.1, &mut mse, &mut acc), AUGSPEC_OK);

        augspec_labels_free(flipped);
        augspec_labels_free(noisy);
        augspec_labels_free(clean);
        augspec_representation_free(r);
        augspec_spectrum_free(s);
        augspec_graph_free(g);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut g = ptr::null_mut();
        let bad_class = [0usize, 0, 1, 5];
        let st = augspec_graph_synthesize(2, SIZES.as_ptr(), bad_class.as_ptr(), 4, 0.1, 0.0, 1.0, 1, &mut g);
        assert_eq!(st, AUGSPEC_INVALID_ARGUMENT);
        assert!(g.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(augspec_graph_synthesize(2, ptr::null(), CLASS_OF.as_ptr(), 4, 0.1, 0.0, 1.0, 1, &mut g), AUGSPEC_NULL_POINTER);
        assert!(last_error().contains("sizes"));
        let (mut d, mut dp, mut xi) = (0.0, 0.0, 0.0);
        assert_eq!(augspec_graph_measure(ptr::null(), &mut d, &mut dp, &mut xi), AUGSPEC_NULL_POINTER);

        let g = graph(0.0, 1);
        let mut s = ptr::null_mut();
        assert_eq!(augspec_spectrum_compute(g, &mut s), AUGSPEC_OK);
        let mut r = ptr::null_mut();
        assert_eq!(augspec_representation_build(s, 2, false, 0, &mut r), AUGSPEC_INVALID_ARGUMENT);
        assert!(r.is_null());

        let weights = [1.0, 0.0, 0.0, 1.0];
        let mut g2 = ptr::null_mut();
        let st = augspec_graph_from_weights(2, weights.as_ptr(), 2, SIZES.as_ptr(), CLASS_OF.as_ptr(), 4, &mut g2);
        assert_eq!(st, AUGSPEC_DIMENSION_MISMATCH, "{}", last_error());

        augspec_spectrum_free(s);
        augspec_graph_free(g);
        augspec_graph_free(ptr::null_mut());
    }
}

#[test]
fn successful_call_clears_error() {
    unsafe {
        let mut g = ptr::null_mut();
        augspec_graph_synthesize(2, ptr::null(), ptr::null(), 4, 0.1, 0.0, 1.0, 1, &mut g);
        assert!(!last_error().is_empty());
        let g = graph(0.05, 2);
        assert_eq!(last_error(), "");
        augspec_graph_free(g);
    }
}

#[test]
fn flip_tolerance_matches_core() {
    let (mut alpha, mut ok) = (0.0, false);
    let st = unsafe { augspec_flip_tolerance(2, 2, 4, 4, 1.0, 0.001, 10.0, 2, &mut alpha, &mut ok) };
    assert_eq!(st, AUGSPEC_OK);
    let core = augspec::bounds::flip_tolerance_exact(&augspec::bounds::ToleranceInputs {
        classes: 2,
        subclasses: 2,
        n_min: 4,
        n_max: 4,
        c_max: 1.0,
        delta: 0.001,
        delta_prime: augspec::graph::delta_prime(0.001),
        beta: 10.0,
        p: 2,
    })
    .unwrap();
    assert_eq!(alpha, core.alpha_max);
    assert_eq!(ok, core.guaranteed);
    assert!(ok && alpha > 0.0);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/augspec.h")).unwrap();
    let src = include_str!("../src/lib.rs");
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.trim().strip_prefix("pub unsafe extern \"C\" fn "))
        .map(|l| l.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 18);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    for c in ["AUGSPEC_OK", "AUGSPEC_BUFFER_TOO_SMALL", "typedef struct AugspecGraph AugspecGraph"] {
        assert!(header.contains(c));
    }
}
