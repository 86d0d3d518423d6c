use std::ptr;

use nfris::*;

const LAMBDA: f64 = 0.01;

fn last_error() -> String {
    unsafe {
        let n = nfris_last_error_message(ptr::null_mut(), 0);
        if n == 0 {
            return String::new();
        }
        let mut buf = vec![0 as std::ffi::c_char; n];
        nfris_last_error_message(buf.as_mut_ptr(), n);
        std::ffi::CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

unsafe fn planar(rows: usize, cols: usize) -> *mut NfrisGeometry {
    let mut g = ptr::null_mut();
    let status = nfris_geometry_planar(
        rows,
        cols,
        LAMBDA / 2.0,
        [0.0; 3].as_ptr(),
        [0.0, 0.0, 1.0].as_ptr(),
        &mut g,
    );
    assert_eq!(status, NfrisStatus::Ok, "{}", last_error());
    g
}

unsafe fn point(p: [f64; 3]) -> *mut NfrisGeometry {
    let mut g = ptr::null_mut();
    assert_eq!(nfris_geometry_point(p.as_ptr(), &mut g), NfrisStatus::Ok);
    g
}

#[test]
fn rayleigh_distance_at_28_ghz() {
    let mut r = 0.0;
    let status = unsafe { nfris_rayleigh_distance(1.0, 299_792_458.0 / 28e9, &mut r) };
    assert_eq!(status, NfrisStatus::Ok);
    assert!((r - 186.7).abs() <= 1.0);
}

#[test]
fn errors_set_status_and_message() {
    let mut r = 0.0;
    let status = unsafe { nfris_rayleigh_distance(1.0, -1.0, &mut r) };
    assert_eq!(status, NfrisStatus::Domain);
    assert!(!last_error().is_empty());
    let status = unsafe { nfris_rayleigh_distance(1.0, 0.01, ptr::null_mut()) };
    assert_eq!(status, NfrisStatus::NullPointer);
    assert!(last_error().contains("out_distance"));
    // success clears the message
    unsafe { nfris_rayleigh_distance(1.0, 0.01, &mut r) };
    assert_eq!(last_error(), "");
}

#[test]
fn truncated_error_copy_is_terminated() {
    unsafe {
        nfris_rayleigh_distance(1.0, -1.0, ptr::null_mut());
        let mut buf = [1 as std::ffi::c_char; 4];
        let n = nfris_last_error_message(buf.as_mut_ptr(), buf.len());
        assert!(n > 4);
        assert_eq!(buf[3], 0);
    }
}

#[test]
fn geometry_handles() {
    unsafe {
        let g = planar(4, 8);
        let (mut n, mut d) = (0usize, 0.0);
        assert_eq!(nfris_geometry_element_count(g, &mut n), NfrisStatus::Ok);
        assert_eq!(n, 32);
        assert_eq!(nfris_geometry_aperture(g, &mut d), NfrisStatus::Ok);
        assert!((d - LAMBDA / 2.0 * (9.0f64 + 49.0).sqrt()).abs() < 1e-15);
        let mut region = NfrisRegion::Far;
        assert_eq!(
            nfris_classify_region(g, [0.0, 0.0, 0.01].as_ptr(), LAMBDA, &mut region),
            NfrisStatus::Ok
        );
        assert_eq!(region, NfrisRegion::Near);
        assert_eq!(
            nfris_classify_region(g, [0.0, 0.0, 100.0].as_ptr(), LAMBDA, &mut region),
            NfrisStatus::Ok
        );
        assert_eq!(region, NfrisRegion::Far);
        nfris_geometry_free(g);
        nfris_geometry_free(ptr::null_mut());

        let mut bad = ptr::null_mut();
        let status = nfris_geometry_planar(0, 4, 0.1, [0.0; 3].as_ptr(), [0.0, 0.0, 1.0].as_ptr(), &mut bad);
        assert_ne!(status, NfrisStatus::Ok);
        assert!(bad.is_null());
    }
}

#[test]
fn power_ascent_reaches_cophase_gain() {
    unsafe {
        let ris = planar(8, 8);
        let tx = point([0.3, 0.0, 2.0]);
        let rx = point([-0.05, 0.02, 0.2]);
        let mut links = ptr::null_mut();
        assert_eq!(
            nfris_links_create(tx, ris, rx, LAMBDA, NfrisPathLoss::FreeSpace, &mut links),
            NfrisStatus::Ok
        );
        let mut best = 0.0;
        assert_eq!(nfris_cophase_gain(links, 0, 0, &mut best), NfrisStatus::Ok);

        let mut phases = vec![0.0; 64];
        let (mut obj, mut sweeps, mut converged) = (0.0, 0usize, false);
        let status = nfris_elementwise_power(
            links,
            ptr::null(),
            50,
            1e-12,
            phases.as_mut_ptr(),
            &mut obj,
            &mut sweeps,
            &mut converged,
        );
        assert_eq!(status, NfrisStatus::Ok, "{}", last_error());
        assert!(converged);
        assert!(sweeps >= 1);
        assert!((best - obj).abs() <= 1e-9 * best);

        assert_eq!(nfris_cophase_gain(links, 1, 0, &mut best), NfrisStatus::Dimension);
        nfris_links_free(links);
        for g in [ris, tx, rx] {
            nfris_geometry_free(g);
        }
    }
}

#[test]
fn effective_rank_of_identity() {
    let mut data = [0.0; 2 * 9];
    for i in 0..3 {
        data[2 * (i * 3 + i)] = 1.0;
    }
    let mut r = 0.0;
    assert_eq!(
        unsafe { nfris_effective_rank(3, 3, data.as_ptr(), &mut r) },
        NfrisStatus::Ok
    );
    assert!((r - 3.0).abs() < 1e-12);
    assert_eq!(
        unsafe { nfris_effective_rank(3, 3, ptr::null(), &mut r) },
        NfrisStatus::NullPointer
    );
}

#[test]
fn codebook_and_training() {
    unsafe {
        let mut ris = ptr::null_mut();
        assert_eq!(
            nfris_geometry_planar(
                1,
                64,
                LAMBDA / 2.0,
                [0.0; 3].as_ptr(),
                [0.0, 0.0, 1.0].as_ptr(),
                &mut ris
            ),
            NfrisStatus::Ok
        );
        let mut cb = ptr::null_mut();
        assert_eq!(
            nfris_codebook_create(ris, LAMBDA, 3, 3, 4, &mut cb),
            NfrisStatus::Ok,
            "{}",
            last_error()
        );
        let mut pilots = 0usize;
        assert_eq!(nfris_codebook_pilot_count(cb, &mut pilots), NfrisStatus::Ok);
        assert_eq!(pilots, 2 * 3 + 2 * 4 * 3);

        let (mut achieved, mut truth, mut used) = (0.0, 0.0, 0usize);
        let status = nfris_train_hierarchical(
            cb,
            [-1.0, 0.0, 3.0].as_ptr(),
            [0.02, 0.0, 0.1].as_ptr(),
            0.0,
            7,
            &mut achieved,
            &mut truth,
            &mut used,
        );
        assert_eq!(status, NfrisStatus::Ok, "{}", last_error());
        assert_eq!(used, pilots);
        assert!(achieved > 0.0 && achieved <= truth * (1.0 + 1e-12));

        let mut bad = ptr::null_mut();
        assert_eq!(
            nfris_codebook_create(ris, LAMBDA, 3, 2, 4, &mut bad),
            NfrisStatus::Config
        );
        assert!(bad.is_null());
        nfris_codebook_free(cb);
        nfris_geometry_free(ris);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/nfris.h")).unwrap();
    for name in [
        "nfris_last_error_message",
        "nfris_rayleigh_distance",
        "nfris_geometry_planar",
        "nfris_geometry_point",
        "nfris_geometry_free",
        "nfris_geometry_element_count",
        "nfris_geometry_aperture",
        "nfris_classify_region",
        "nfris_links_create",
        "nfris_links_free",
        "nfris_cophase_gain",
        "nfris_effective_rank",
        "nfris_elementwise_power",
        "nfris_codebook_create",
        "nfris_codebook_free",
        "nfris_codebook_pilot_count",
        "nfris_train_hierarchical",
        "typedef struct NfrisGeometry NfrisGeometry",
        "NFRIS_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}
