use std::ffi::{CStr, CString};
use std::ptr;

use homoclinic_ffi::*;

fn config(nu: f64, half_width: usize) -> CString {
    CString::new(format!(
        r#"{{"block_dim":1,"period":1,"matrices":[[0,-1,-1,0]],
            "nonlinearity":{{"family":"radial_rational","parameters":{{"nu":{nu}}}}},
            "window":{{"half_width":{half_width}}}}}"#
    ))
    .unwrap()
}

fn last_error() -> String {
    let p = hc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn problem_lifecycle_and_solve() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(
            hc_problem_from_json(config(4.0, 64).as_ptr(), &mut p),
            HcStatus::Ok
        );
        assert!(hc_last_error().is_null());

        let (mut n, mut m, mut len) = (0, 0, 0);
        assert_eq!(hc_problem_dims(p, &mut n, &mut m, &mut len), HcStatus::Ok);
        assert_eq!((n, m, len), (1, 64, 258));

        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(hc_problem_bounds(p, &mut lo, &mut hi), HcStatus::Ok);
        assert_eq!((lo, hi), (1.0, 1.0));

        let mut report = ptr::null_mut();
        assert_eq!(hc_problem_check(p, &mut report), HcStatus::Ok);
        let text = CStr::from_ptr(report).to_str().unwrap().to_owned();
        hc_string_free(report);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["delta0_estimate"].as_f64().unwrap() > 0.0);

        let mut x = vec![0.0; len];
        x[2 * 64] = 1.0;
        let mut value = 0.0;
        assert_eq!(hc_problem_phi(p, x.as_ptr(), len, &mut value), HcStatus::Ok);
        assert!((value + 1.0).abs() < 1e-15);
        assert_eq!(
            hc_problem_phi(p, x.as_ptr(), len - 1, &mut value),
            HcStatus::Dimension
        );

        let mut s = ptr::null_mut();
        assert_eq!(hc_solve(p, &mut s), HcStatus::Ok);
        let count = hc_solution_count(s);
        assert!(count >= 1);
        let (mut phi, mut linf) = (0.0, 0.0);
        assert_eq!(
            hc_solution_orbit_info(s, 0, &mut phi, &mut linf),
            HcStatus::Ok
        );
        assert!((phi - 0.160768).abs() < 1e-5, "{phi}");
        assert!(linf > 1e-3);

        let mut need = 0;
        let mut small = [0.0; 4];
        assert_eq!(
            hc_solution_orbit(s, 0, small.as_mut_ptr(), small.len(), &mut need),
            HcStatus::BufferTooSmall
        );
        assert_eq!(need, len);
        let mut orbit = vec![0.0; need];
        assert_eq!(
            hc_solution_orbit(s, 0, orbit.as_mut_ptr(), orbit.len(), &mut need),
            HcStatus::Ok
        );
        let mut at_orbit = 0.0;
        assert_eq!(
            hc_problem_phi(p, orbit.as_ptr(), need, &mut at_orbit),
            HcStatus::Ok
        );
        assert_eq!(at_orbit.to_bits(), phi.to_bits());

        let mut json = ptr::null_mut();
        assert_eq!(hc_solution_report_json(s, 0, &mut json), HcStatus::Ok);
        let r: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        hc_string_free(json);
        assert_eq!(r["verification"]["passed"], true);

        assert_eq!(
            hc_solution_orbit_info(s, count, &mut phi, ptr::null_mut()),
            HcStatus::IndexOutOfRange
        );
        assert!(last_error().contains("out of range"));

        hc_solution_free(s);
        hc_problem_free(p);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut p = ptr::null_mut();
        let bad = CString::new("{ nope").unwrap();
        assert_eq!(
            hc_problem_from_json(bad.as_ptr(), &mut p),
            HcStatus::Configuration
        );
        assert!(p.is_null());
        assert!(last_error().contains("malformed"));

        assert_eq!(
            hc_problem_from_json(ptr::null(), &mut p),
            HcStatus::NullPointer
        );
        assert_eq!(
            hc_problem_from_json(bad.as_ptr(), ptr::null_mut()),
            HcStatus::NullPointer
        );

        let flipped = CString::new(
            r#"{"block_dim":1,"period":1,"matrices":[[0,1,1,0]],
                "nonlinearity":{"family":"radial_rational","parameters":{"nu":4}},
                "window":{"half_width":8}}"#,
        )
        .unwrap();
        assert_eq!(
            hc_problem_from_json(flipped.as_ptr(), &mut p),
            HcStatus::HypothesisViolation
        );
        assert!(last_error().contains("(R0)"));

        assert_eq!(
            hc_problem_from_json(config(2.5, 16).as_ptr(), &mut p),
            HcStatus::Ok
        );
        assert_eq!(hc_problem_check(p, ptr::null_mut()), HcStatus::CheckFailed);
        assert!(last_error().contains("R3"));
        hc_problem_free(p);

        let mut s = ptr::null_mut();
        assert_eq!(hc_solve(ptr::null(), &mut s), HcStatus::NullPointer);
        assert_eq!(hc_solution_count(ptr::null()), 0);
        hc_solution_free(ptr::null_mut());
        hc_problem_free(ptr::null_mut());
        hc_string_free(ptr::null_mut());

        let v = CStr::from_ptr(hc_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn linear_problem_has_no_orbit() {
    let cfg = CString::new(
        r#"{"block_dim":1,"period":1,"matrices":[[0,-1,-1,0]],
            "nonlinearity":{"family":"quadratic","parameters":{"c":0.5}},
            "window":{"half_width":16}}"#,
    )
    .unwrap();
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(hc_problem_from_json(cfg.as_ptr(), &mut p), HcStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(hc_solve(p, &mut s), HcStatus::NoOrbit);
        assert!(s.is_null());
        hc_problem_free(p);
    }
}
