use std::ffi::CStr;
use std::ptr;

use cobridge_ffi::*;

fn last_error() -> String {
    let p = cobridge_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

/// Two disjoint K_{2,2} blocks.
unsafe fn two_blocks() -> *mut CobridgeBipartite {
    let mut g = ptr::null_mut();
    assert_eq!(
        unsafe { cobridge_bipartite_new(4, 4, &mut g) },
        CobridgeStatus::Ok
    );
    for (l, r) in [
        (0, 0),
        (0, 1),
        (1, 0),
        (1, 1),
        (2, 2),
        (2, 3),
        (3, 2),
        (3, 3),
    ] {
        let mut added = 9u8;
        assert_eq!(
            unsafe { cobridge_bipartite_add_edge(g, l, r, &mut added) },
            CobridgeStatus::Ok
        );
        assert_eq!(added, 1);
    }
    g
}

#[test]
fn bipartite_round_trip() {
    unsafe {
        let g = two_blocks();
        let mut added = 9u8;
        assert_eq!(
            cobridge_bipartite_add_edge(g, 0, 0, &mut added),
            CobridgeStatus::Ok
        );
        assert_eq!(added, 0);
        assert_eq!(cobridge_bipartite_edge_count(g), 8);

        let labels = [0u32, 0, 1, 1, 0, 0, 1, 1];
        let mut q = 0.0;
        assert_eq!(
            cobridge_modularity_bipartite(g, labels.as_ptr(), 8, &mut q),
            CobridgeStatus::Ok
        );
        assert!((q - 0.5).abs() < 1e-12);

        let mut p = ptr::null_mut();
        assert_eq!(
            cobridge_cluster_bipartite(g, 10, 3, &mut p),
            CobridgeStatus::Ok
        );
        assert_eq!(cobridge_partition_node_count(p), 8);
        assert_eq!(cobridge_partition_community_count(p), 2);
        assert!((cobridge_partition_score(p) - 0.5).abs() < 1e-12);
        let mut out = [0u32; 8];
        assert_eq!(
            cobridge_partition_labels(p, out.as_mut_ptr(), 8),
            CobridgeStatus::Ok
        );
        let mut v = 0.0;
        assert_eq!(
            cobridge_nmi(out.as_ptr(), labels.as_ptr(), 8, &mut v),
            CobridgeStatus::Ok
        );
        assert_eq!(v, 1.0);
        cobridge_partition_free(p);
        cobridge_bipartite_free(g);
    }
}

#[test]
fn projections_through_handles() {
    unsafe {
        let g = two_blocks();
        let mut concepts = ptr::null_mut();
        assert_eq!(
            cobridge_project_concepts(g, &mut concepts),
            CobridgeStatus::Ok
        );
        assert_eq!(cobridge_weighted_node_count(concepts), 4);
        assert_eq!(cobridge_weighted_edge_count(concepts), 2);
        let (mut u, mut v, mut w) = (0u32, 0u32, 0.0);
        assert_eq!(
            cobridge_weighted_edge(concepts, 1, &mut u, &mut v, &mut w),
            CobridgeStatus::Ok
        );
        assert_eq!((u, v, w), (2, 3, 1.0));
        assert_eq!(
            cobridge_weighted_edge(concepts, 2, &mut u, &mut v, &mut w),
            CobridgeStatus::IndexOutOfRange
        );

        let mut articles = ptr::null_mut();
        assert_eq!(
            cobridge_project_articles(g, CobridgeLogBase::Two, 0.0, &mut articles),
            CobridgeStatus::Ok
        );
        // Identical concept sets give cosine 1.
        assert_eq!(cobridge_weighted_edge_count(articles), 2);
        assert_eq!(
            cobridge_weighted_edge(articles, 0, &mut u, &mut v, &mut w),
            CobridgeStatus::Ok
        );
        assert_eq!((u, v), (0, 1));
        assert!((w - 1.0).abs() < 1e-12);
        assert_eq!(
            cobridge_project_articles(g, CobridgeLogBase::Natural, -1.0, &mut articles),
            CobridgeStatus::InvalidArgument
        );
        cobridge_weighted_free(articles);
        cobridge_weighted_free(concepts);
        cobridge_bipartite_free(g);
    }
}

#[test]
fn weighted_graph_from_arrays() {
    // Two triangles joined by one edge.
    let src = [0u32, 0, 1, 3, 3, 4, 2];
    let dst = [1u32, 2, 2, 4, 5, 5, 3];
    let w = [1.0; 7];
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(
            cobridge_weighted_new(6, src.as_ptr(), dst.as_ptr(), w.as_ptr(), 7, &mut g),
            CobridgeStatus::Ok
        );
        let mut p = ptr::null_mut();
        assert_eq!(
            cobridge_cluster_unipartite(g, 5, 0, &mut p),
            CobridgeStatus::Ok
        );
        assert!((cobridge_partition_score(p) - 5.0 / 14.0).abs() < 1e-12);
        let labels = [0u32, 0, 0, 1, 1, 1];
        let mut q = 0.0;
        assert_eq!(
            cobridge_modularity_unipartite(g, labels.as_ptr(), 6, &mut q),
            CobridgeStatus::Ok
        );
        assert!((q - 5.0 / 14.0).abs() < 1e-12);
        cobridge_partition_free(p);
        cobridge_weighted_free(g);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(cobridge_bipartite_new(2, 2, &mut g), CobridgeStatus::Ok);
        assert_eq!(
            cobridge_bipartite_add_edge(g, 5, 0, ptr::null_mut()),
            CobridgeStatus::IndexOutOfRange
        );
        assert!(last_error().contains('5'));

        let mut p = ptr::null_mut();
        assert_eq!(
            cobridge_cluster_bipartite(g, 3, 0, &mut p),
            CobridgeStatus::EmptyGraph
        );
        assert!(p.is_null());

        assert_eq!(
            cobridge_bipartite_add_edge(ptr::null_mut(), 0, 0, ptr::null_mut()),
            CobridgeStatus::NullPointer
        );
        assert!(last_error().contains("null"));

        let bad = [0u32, 9];
        let mut q = 0.0;
        assert_eq!(
            cobridge_bipartite_add_edge(g, 0, 0, ptr::null_mut()),
            CobridgeStatus::Ok
        );
        assert_ne!(
            cobridge_modularity_bipartite(g, bad.as_ptr(), 2, &mut q),
            CobridgeStatus::Ok
        );

        let src = [0u32];
        let w = [f64::NAN];
        let mut wg = ptr::null_mut();
        assert_eq!(
            cobridge_weighted_new(2, src.as_ptr(), [1u32].as_ptr(), w.as_ptr(), 1, &mut wg),
            CobridgeStatus::InvalidArgument
        );
        cobridge_bipartite_free(g);
        cobridge_bipartite_free(ptr::null_mut());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(cobridge_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_entry_point() {
    let header = include_str!("../include/cobridge.h");
    for name in [
        "cobridge_last_error",
        "cobridge_bipartite_new",
        "cobridge_project_articles",
        "cobridge_cluster_bipartite",
        "cobridge_partition_labels",
        "cobridge_nmi",
        "COBRIDGE_STATUS_PANIC",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = std::process::Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler, skipping");
        return;
    };
    assert!(cc.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"cobridge.h\"\nint main(void) { CobridgeBipartite *g = 0; return cobridge_bipartite_new(1, 1, &g) == COBRIDGE_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let out = std::process::Command::new("cc")
        .args([
            "-std=c99",
            "-Wall",
            "-Werror",
            "-fsyntax-only",
            "-I",
            include,
        ])
        .arg(&src)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
