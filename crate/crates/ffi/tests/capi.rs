use std::ffi::CString;
use std::ptr;

use mnw_ffi::*;

fn params(n: u32, sigma: f64, seed: u64) -> MnwParams {
    MnwParams {
        d: 1,
        n,
        alpha: 0.1,
        beta: 0.4,
        sigma,
        zeta: 1.0,
        seed,
    }
}

fn last_error() -> String {
    unsafe {
        let len = mnw_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0 as std::ffi::c_char; len + 1];
        mnw_last_error_message(buf.as_mut_ptr(), buf.len());
        std::ffi::CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn make(p: MnwParams) -> *mut MnwGraph {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { mnw_generate(&p, &mut g) }, MNW_OK);
    assert!(!g.is_null());
    g
}

#[test]
fn generate_and_measure_pure_ring() {
    let g = make(params(16, 0.0, 1));
    unsafe {
        let mut count = 0u64;
        assert_eq!(mnw_graph_vertex_count(g, &mut count), MNW_OK);
        assert_eq!(count, 16);
        assert_eq!(mnw_graph_edge_count(g, &mut count), MNW_OK);
        assert_eq!(count, 16);
        assert_eq!(mnw_graph_long_edge_count(g, &mut count), MNW_OK);
        assert_eq!(count, 0);
        let mut deg = 0u32;
        assert_eq!(mnw_graph_max_degree(g, &mut deg), MNW_OK);
        assert_eq!(deg, 2);

        let (mut value, mut exact) = (0u32, 0i32);
        assert_eq!(mnw_diameter(g, 0, 0, 0, &mut value, &mut exact), MNW_OK);
        assert_eq!((value, exact), (8, 1));
        assert_eq!(mnw_diameter(g, 1, 4, 9, &mut value, &mut exact), MNW_OK);
        assert_eq!((value, exact), (8, 0));

        let mut dist = vec![0u32; 16];
        assert_eq!(mnw_bfs(g, 0, dist.as_mut_ptr(), dist.len()), MNW_OK);
        assert_eq!(dist[5], 5);
        assert_eq!(dist[12], 4);
        assert_eq!(mnw_bfs(g, 0, dist.as_mut_ptr(), 3), MNW_ERR_BUFFER_TOO_SMALL);
        assert_eq!(mnw_bfs(g, 99, dist.as_mut_ptr(), dist.len()), MNW_ERR_INVALID_PARAMS);

        let mut h = 0.0;
        assert_eq!(mnw_conductance_exact(g, &mut h), MNW_OK);
        let mut iota = 0.0;
        assert_eq!(mnw_isoperimetric_exact(g, &mut iota), MNW_OK);
        assert_eq!(iota, 0.25);
        assert_eq!(h, iota / 4.0);

        let mut gap = 0.0;
        assert_eq!(mnw_spectral_gap(g, 1e-10, 1_000_000, &mut gap), MNW_OK);
        let expected = (1.0 - (2.0 * std::f64::consts::PI / 16.0).cos()) / 2.0;
        assert!((gap - expected).abs() < 1e-8, "{gap} vs {expected}");

        let (mut t, mut exact) = (0u64, 0i32);
        assert_eq!(mnw_mixing_time(g, 0, 0, 0, 1 << 20, &mut t, &mut exact), MNW_OK);
        assert!(t > 0 && exact == 1);
        assert_eq!(mnw_mixing_time(g, 0, 0, 0, 2, &mut t, &mut exact), MNW_ERR_CONVERGENCE);
        assert!(last_error().contains("2"));
        mnw_graph_free(g);
    }
}

#[test]
fn save_and_load_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("g.mnw").to_str().unwrap()).unwrap();
    let g = make(params(64, 2.0, 3));
    unsafe {
        assert_eq!(mnw_graph_save(g, path.as_ptr()), MNW_OK);
        let mut h = ptr::null_mut();
        assert_eq!(mnw_graph_load(path.as_ptr(), &mut h), MNW_OK);
        let (mut a, mut b) = (0u64, 0u64);
        mnw_graph_edge_count(g, &mut a);
        mnw_graph_edge_count(h, &mut b);
        assert_eq!(a, b);
        mnw_graph_free(g);
        mnw_graph_free(h);

        let missing = CString::new(dir.path().join("nope.mnw").to_str().unwrap()).unwrap();
        assert_eq!(mnw_graph_load(missing.as_ptr(), &mut h), MNW_ERR_IO);
        std::fs::write(dir.path().join("bad.mnw"), "mnw v9\n").unwrap();
        let bad = CString::new(dir.path().join("bad.mnw").to_str().unwrap()).unwrap();
        assert_eq!(mnw_graph_load(bad.as_ptr(), &mut h), MNW_ERR_FORMAT);
        assert!(last_error().contains("bad.mnw"));
    }
}

#[test]
fn errors_and_nulls() {
    unsafe {
        let mut g = ptr::null_mut();
        let mut bad = params(16, 1.0, 0);
        bad.beta = 0.7;
        assert_eq!(mnw_generate(&bad, &mut g), MNW_ERR_INVALID_PARAMS);
        assert!(last_error().contains("beta"));
        assert_eq!(mnw_generate(ptr::null(), &mut g), MNW_ERR_NULL);
        assert_eq!(mnw_generate(&params(16, 1.0, 0), ptr::null_mut()), MNW_ERR_NULL);
        let mut v = 0u64;
        assert_eq!(mnw_graph_vertex_count(ptr::null(), &mut v), MNW_ERR_NULL);
        mnw_graph_free(ptr::null_mut());

        let big = make(params(40, 1.0, 0));
        let mut h = 0.0;
        assert_eq!(mnw_conductance_exact(big, &mut h), MNW_ERR_RESOURCE_CAP);
        mnw_graph_free(big);

        // truncated message stays NUL terminated
        let mut small = [1 as std::ffi::c_char; 4];
        let full = mnw_last_error_message(small.as_mut_ptr(), small.len());
        assert!(full > 3);
        assert_eq!(small[3], 0);
    }
}

#[test]
fn scalar_functions() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(mnw_rate_i(0.5, 0.25, &mut v), MNW_OK);
        let kl = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert!((v - kl).abs() < 1e-15);
        assert_eq!(mnw_rate_i(1.5, 0.25, &mut v), MNW_ERR_INVALID_PARAMS);
        assert_eq!(mnw_gamma_rate(2.0, &mut v), MNW_OK);
        assert!((v - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        assert_eq!(mnw_binomial_tail(10, 0.5, 0.5, 1, &mut v), MNW_OK);
        assert!((v - 0.623046875).abs() < 1e-14);
        assert_eq!(mnw_binomial_tail(4, 0.5, 0.0, 0, &mut v), MNW_OK);
        assert!((v - 0.0625).abs() < 1e-15);
    }
}

#[test]
fn header_lists_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/mnw.h")).unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.trim().strip_prefix("pub unsafe extern \"C\" fn "))
        .map(|l| l.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 17);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct MnwGraph MnwGraph;"));
    assert!(header.contains("#define MNW_ERR_BUFFER_TOO_SMALL 8"));
}
