use std::ffi::{c_char, CStr, CString};
use std::ptr;

use riemannian_prox_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        rp_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn cylinder() -> *mut RpManifold {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { rp_manifold_new(RpManifoldKind::Cylinder, 0, &mut m) }, RpStatus::Ok);
    m
}

#[test]
fn cylinder_distance_and_exp_log() {
    let m = cylinder();
    unsafe {
        assert_eq!(rp_manifold_ambient_dim(m), 3);
        let p = [1.0, 0.0, 0.0];
        let q = [0.0, 1.0, 1.0];
        let mut d = 0.0;
        assert_eq!(rp_distance(m, p.as_ptr(), q.as_ptr(), 3, &mut d), RpStatus::Ok);
        assert!((d - (std::f64::consts::FRAC_PI_2.powi(2) + 1.0).sqrt()).abs() < 1e-12);
        let mut v = [0.0; 3];
        assert_eq!(rp_log(m, p.as_ptr(), q.as_ptr(), 3, v.as_mut_ptr()), RpStatus::Ok);
        let mut back = [0.0; 3];
        assert_eq!(rp_exp(m, p.as_ptr(), v.as_ptr(), 3, back.as_mut_ptr()), RpStatus::Ok);
        for i in 0..3 {
            assert!((back[i] - q[i]).abs() < 1e-10);
        }
        rp_manifold_free(m);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let m = cylinder();
    unsafe {
        let p = [1.0, 0.0, 0.0];
        let mut d = 0.0;
        assert_eq!(rp_distance(m, p.as_ptr(), p.as_ptr(), 2, &mut d), RpStatus::InvalidInput);
        assert!(last_error().contains("expected 3"));
        assert_eq!(rp_distance(ptr::null(), p.as_ptr(), p.as_ptr(), 3, &mut d), RpStatus::NullPointer);
        // antipodal generator: the log map is ambiguous
        let q = [-1.0, 0.0, 0.0];
        let mut v = [0.0; 3];
        assert_eq!(rp_log(m, p.as_ptr(), q.as_ptr(), 3, v.as_mut_ptr()), RpStatus::AmbiguousLog);
        let off = [2.0, 0.0, 0.0];
        assert_eq!(rp_distance(m, p.as_ptr(), off.as_ptr(), 3, &mut d), RpStatus::InvalidInput);
        rp_manifold_free(m);
        let mut e = ptr::null_mut();
        assert_eq!(rp_manifold_new(RpManifoldKind::Euclidean, 0, &mut e), RpStatus::InvalidInput);
        assert!(e.is_null());
    }
}

#[test]
fn envelope_of_abs() {
    let (mut v, mut g) = (0.0, 0.0);
    unsafe {
        assert_eq!(rp_envelope_abs(1.0, 2.0, 1, &mut v, &mut g), RpStatus::Ok);
    }
    assert!((v - 1.75).abs() < 1e-9 && (g - 1.0).abs() < 1e-6);
}

#[test]
fn circumcenter_report() {
    let m = cylinder();
    let eps: f64 = 0.05;
    let a1 = [1.0, 0.0, 0.0];
    let a2 = [1.0, 0.0, -1.0];
    let a3 = [(1.0 - eps * eps).sqrt(), eps, 1.0];
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(
            rp_circumcenter(m, a1.as_ptr(), a2.as_ptr(), a3.as_ptr(), a1.as_ptr(), 3, 5, &mut r),
            RpStatus::Ok
        );
        let mut class = RpCircumcenterClass::Circumcenter;
        assert_eq!(rp_report_classification(r, &mut class), RpStatus::Ok);
        assert_eq!(class, RpCircumcenterClass::NoCircumcenter);
        let (mut res, mut lb) = (0.0, 0.0);
        assert_eq!(rp_report_values(r, &mut res, &mut lb), RpStatus::Ok);
        assert!(lb > 0.0 && lb <= res);
        let mut w = [0.0; 2];
        assert_eq!(rp_report_witness(r, w.as_mut_ptr(), 2), RpStatus::BufferTooSmall);
        let mut w = [0.0; 3];
        assert_eq!(rp_report_witness(r, w.as_mut_ptr(), 3), RpStatus::Ok);
        rp_report_free(r);
        rp_manifold_free(m);
    }
}

#[test]
fn scenario_records_round_trip() {
    let name = CString::new("rotation23-fixed-point").unwrap();
    unsafe {
        let mut rec = ptr::null_mut();
        assert_eq!(rp_run_scenario(name.as_ptr(), 7, &mut rec), RpStatus::Ok);
        assert_eq!(rp_run_record_passed(rec), 1);
        let mut s = ptr::null_mut();
        assert_eq!(rp_run_record_json(rec, &mut s), RpStatus::Ok);
        let json = CStr::from_ptr(s).to_str().unwrap().to_owned();
        assert!(json.contains("\"scenario\":\"rotation23-fixed-point\""));
        rp_string_free(s);
        rp_run_record_free(rec);

        let bad = CString::new("no-such-scenario").unwrap();
        let mut rec = ptr::null_mut();
        assert_eq!(rp_run_scenario(bad.as_ptr(), 7, &mut rec), RpStatus::UnknownScenario);
        assert!(last_error().contains("no-such-scenario"));
    }
}

#[test]
fn freeing_null_is_harmless() {
    unsafe {
        rp_manifold_free(ptr::null_mut());
        rp_report_free(ptr::null_mut());
        rp_run_record_free(ptr::null_mut());
        rp_string_free(ptr::null_mut());
    }
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/riemannian_prox.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in ["rp_manifold_new", "rp_circumcenter", "rp_run_scenario", "RP_STATUS_AMBIGUOUS_LOG"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).output() else {
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
