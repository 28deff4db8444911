use std::ffi::{CStr, CString};
use std::ptr;
use ubw1_ffi::*;

fn last_error() -> String {
    let p = ubw1_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn discrepancy(name: &str) -> *mut Ubw1Discrepancy {
    let name = CString::new(name).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { ubw1_discrepancy_new(name.as_ptr(), &mut h) }, Ubw1Status::Ok);
    assert!(!h.is_null());
    h
}

#[test]
fn tv_eval_and_distances() {
    let h = discrepancy("tv");
    let mut v = f64::NAN;
    unsafe {
        assert_eq!(ubw1_discrepancy_eval(h, 1.0, 3.0, &mut v), Ubw1Status::Ok);
        assert_eq!(v, 2.0);
        let (mut l0, mut l1) = (0.0, 0.0);
        assert_eq!(ubw1_discrepancy_max_distances(h, &mut l0, &mut l1), Ubw1Status::Ok);
        assert_eq!((l0, l1), (2.0, 2.0));
        ubw1_discrepancy_free(h);
    }
    assert!(ubw1_last_error_message().is_null());
}

#[test]
fn hellinger_matches_closed_form() {
    let h = discrepancy("hellinger");
    let mut v = 0.0;
    unsafe {
        assert_eq!(ubw1_discrepancy_eval(h, 1.0, 4.0, &mut v), Ubw1Status::Ok);
        ubw1_discrepancy_free(h);
    }
    assert!((v - 1.0).abs() < 1e-12, "{v}");
}

#[test]
fn errors_carry_codes_and_messages() {
    let bad = CString::new("no_such_model").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { ubw1_discrepancy_new(bad.as_ptr(), &mut h) }, Ubw1Status::UnknownName);
    assert!(h.is_null());
    assert!(last_error().contains("no_such_model"));

    let d = discrepancy("tv");
    let mut v = 0.0;
    assert_eq!(unsafe { ubw1_discrepancy_eval(d, -1.0, 1.0, &mut v) }, Ubw1Status::NegativeMass);
    assert_eq!(unsafe { ubw1_discrepancy_eval(d, 1.0, 1.0, ptr::null_mut()) }, Ubw1Status::NullPointer);
    assert_eq!(unsafe { ubw1_discrepancy_eval(ptr::null(), 1.0, 1.0, &mut v) }, Ubw1Status::NullPointer);
    let invalid = [0xffu8, 0];
    assert_eq!(
        unsafe { ubw1_discrepancy_new(invalid.as_ptr().cast(), &mut h) },
        Ubw1Status::InvalidUtf8
    );
    unsafe { ubw1_discrepancy_free(d) };
}

#[test]
fn free_accepts_null() {
    unsafe {
        ubw1_discrepancy_free(ptr::null_mut());
        ubw1_solution_free(ptr::null_mut());
        ubw1_dynamic_free(ptr::null_mut());
    }
}

#[test]
fn static_solve_round_trip() {
    let d = discrepancy("hellinger");
    let points = [0.0, 0.0, 1.0, 0.0, 0.0, 2.0];
    let rho0 = [1.0, 0.5, 0.0];
    let rho1 = [0.0, 1.0, 2.0];
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(ubw1_solve_static(d, points.as_ptr(), 3, 2, rho0.as_ptr(), rho1.as_ptr(), 65, &mut s), Ubw1Status::Ok);
        let mut n = 0usize;
        assert_eq!(ubw1_solution_len(s, &mut n), Ubw1Status::Ok);
        assert_eq!(n, 3);
        let (mut p, mut q) = (0.0, 0.0);
        assert_eq!(ubw1_solution_values(s, &mut p, &mut q), Ubw1Status::Ok);
        assert!(q <= p + 1e-9 && p - q < 1e-6, "{p} {q}");

        let mut pi0 = [0.0; 9];
        let mut pi1 = [0.0; 9];
        assert_eq!(ubw1_solution_couplings(s, pi0.as_mut_ptr(), pi1.as_mut_ptr(), 4), Ubw1Status::Validation);
        assert_eq!(ubw1_solution_couplings(s, pi0.as_mut_ptr(), pi1.as_mut_ptr(), 9), Ubw1Status::Ok);
        for i in 0..3 {
            let row: f64 = pi0[3 * i..3 * i + 3].iter().sum();
            let col: f64 = (0..3).map(|k| pi1[3 * k + i]).sum();
            assert!((row - rho0[i]).abs() < 1e-7);
            assert!((col - rho1[i]).abs() < 1e-7);
        }
        let mut alpha = [0.0; 3];
        let mut beta = [0.0; 3];
        assert_eq!(ubw1_solution_potentials(s, alpha.as_mut_ptr(), beta.as_mut_ptr(), 3), Ubw1Status::Ok);
        let dual: f64 = (0..3).map(|i| alpha[i] * rho0[i] + beta[i] * rho1[i]).sum();
        assert!((dual - q).abs() < 1e-9, "{dual} {q}");
        ubw1_solution_free(s);
    }

    let mut s = ptr::null_mut();
    let short = [1.0, 1.0];
    assert_eq!(
        unsafe { ubw1_solve_static(d, points.as_ptr(), 3, 0, short.as_ptr(), short.as_ptr(), 65, &mut s) },
        Ubw1Status::Validation
    );
    unsafe { ubw1_discrepancy_free(d) };
}

#[test]
fn dirac_and_semicoupling_for_tv() {
    let d = discrepancy("tv");
    let mut r = Ubw1DiracResult::default();
    let (mut p, mut q) = (0.0, 0.0);
    unsafe {
        assert_eq!(ubw1_dirac_solve(d, 1.0, 1.0, 0.0, 0.0, 1.0, &mut r), Ubw1Status::Ok);
        assert_eq!(ubw1_semicoupling_cost(d, 1.0, 1.0, 1.0, &mut p, &mut q), Ubw1Status::Ok);
        ubw1_discrepancy_free(d);
    }
    // Moving unit mass over distance 1 is cheaper than destroying and creating it.
    assert!((r.value - 1.0).abs() < 1e-9, "{r:?}");
    assert!((p - 1.0).abs() < 1e-9 && (q - 1.0).abs() < 1e-9, "{p} {q}");
}

#[test]
fn dynamic_flow_and_cost() {
    let name = CString::new("hellinger").unwrap();
    let mut h = ptr::null_mut();
    let mut v = 0.0;
    unsafe {
        assert_eq!(ubw1_dynamic_new(name.as_ptr(), &mut h), Ubw1Status::Ok);
        assert_eq!(ubw1_dynamic_flow(h, 0.0, 0.3, &mut v), Ubw1Status::Ok);
        assert_eq!(v, 0.3);
        assert_eq!(ubw1_dynamic_flow(h, -1.0, 0.3, &mut v), Ubw1Status::Validation);
        assert_eq!(ubw1_dynamic_cost(h, 1.0, 0.0, &mut v), Ubw1Status::Ok);
        assert!(v.abs() < 1e-12);
        ubw1_dynamic_free(h);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(ubw1_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn custom_profile_handle() {
    let z = [0.0, 1.0, 2.0, 3.0];
    let hv = [0.0, 1.0, 1.5, 1.75];
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(ubw1_discrepancy_from_profile(z.as_ptr(), hv.as_ptr(), 4, &mut h), Ubw1Status::Ok);
        let mut v = f64::NAN;
        assert_eq!(ubw1_discrepancy_eval(h, 1.0, 1.0, &mut v), Ubw1Status::Ok);
        assert!(v.abs() < 1e-12);
        ubw1_discrepancy_free(h);
    }
}
