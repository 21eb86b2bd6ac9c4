use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use hypfill_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        hf_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn shorten_fixture_through_handles() {
    let name = CString::new("genus2_deg8").unwrap();
    let mut s: *mut HfSurface = ptr::null_mut();
    unsafe {
        assert_eq!(hf_surface_fixture(name.as_ptr(), &mut s), HF_OK);
        let mut genus = 0usize;
        assert_eq!(hf_surface_genus(s, &mut genus), HF_OK);
        assert_eq!(genus, 2);
        let mut g: *mut HfGraph = ptr::null_mut();
        let mut converged = 0;
        assert_eq!(hf_shorten(s, &mut g, &mut converged), HF_OK);
        assert_eq!(converged, 1);
        let mut len = 0.0;
        assert_eq!(hf_graph_length(g, &mut len), HF_OK);
        assert!((len - 12.047425778344937).abs() < 1e-8);
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(hf_dual_lengths(g, &mut a, &mut b), HF_OK);
        assert!(a < b && b < 2.0 * a);
        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(hf_graph_to_json(g, &mut json), HF_OK);
        assert!(CStr::from_ptr(json).to_str().unwrap().contains("\"rotation\""));
        hf_string_free(json);
        hf_graph_free(g);
        hf_surface_free(s);
    }
}

#[test]
fn errors_are_reported_by_code_and_message() {
    unsafe {
        let mut s: *mut HfSurface = ptr::null_mut();
        let bad = CString::new("{not json").unwrap();
        assert_eq!(hf_surface_from_json(bad.as_ptr(), &mut s), HF_ERR_INPUT);
        assert!(s.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(hf_surface_from_json(ptr::null(), &mut s), HF_ERR_NULL);
        let mut v = 0.0;
        assert_eq!(hf_exact_min(1, &mut v), HF_ERR_INPUT);
        assert_eq!(hf_exact_min(2, ptr::null_mut()), HF_ERR_NULL);

        let klein = CString::new("genus3_deg7").unwrap();
        assert_eq!(hf_surface_fixture(klein.as_ptr(), &mut s), HF_OK);
        let mut g: *mut HfGraph = ptr::null_mut();
        let mut c = 0;
        assert_eq!(hf_shorten(s, &mut g, &mut c), HF_ERR_UNSUPPORTED);
        assert!(last_error().contains("unsupported"));
        hf_surface_free(s);
        hf_surface_free(ptr::null_mut());
    }
}

#[test]
fn scalar_entry_points() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(hf_exact_min(2, &mut v), HF_OK);
        assert!((v - 9.977315346351729).abs() < 1e-9);
        assert_eq!(hf_collar_half_width(1.0, &mut v), HF_OK);
        assert!((v - 1.06).abs() < 0.01);
        let (mut m, mut f) = (0.0, 0.0);
        assert_eq!(hf_bm_statistics(4, 200, 3, 6, &mut m, &mut f), HF_OK);
        assert!(m >= 0.0 && (0.0..=1.0).contains(&f));
        assert_eq!(hf_bm_statistics(4, 0, 3, 6, &mut m, &mut f), HF_ERR_INPUT);
    }
}

#[test]
fn header_declares_the_interface() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/hypfill.h");
    let h = std::fs::read_to_string(&path).unwrap();
    for name in [
        "hf_surface_from_json",
        "hf_surface_fixture",
        "hf_shorten",
        "hf_dual_lengths",
        "hf_bm_statistics",
        "hf_last_error",
        "typedef struct HfSurface HfSurface",
        "HF_ERR_INVARIANT",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
    // The header must compile as C where a compiler is available.
    if let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-x", "c"]).arg(&path).status() {
        assert!(status.success());
    }
}
