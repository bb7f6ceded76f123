use std::ffi::CStr;
use std::ptr;

use effdim_ffi::*;

fn last_error() -> String {
    let p = effdim_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn default_params() -> EffdimPriorParams {
    EffdimPriorParams {
        b: 2.0,
        b_is_infinite: false,
        c: 1.5,
        beta: 1.0,
        alpha: 1.0,
        r: 1.0,
        kappa: 1.0,
        m: 1.0,
        sigma: 1.0,
    }
}

#[test]
fn scalar_functions_match_core() {
    let mut v = 0.0;
    assert_eq!(effdim_corrected_bound(0.1, 2.0, 1e-3, &mut v), EffdimStatus::Ok);
    assert!((v - effdim::effdim::corrected_bound(0.1, 2.0, 1e-3).unwrap()).abs() == 0.0);
    assert_eq!(effdim_claimed_bound(0.1, 2.0, 1e-3, &mut v), EffdimStatus::Ok);
    assert!((v - 6.3246).abs() < 1e-3);
    assert_eq!(effdim_wrong_inequality_gap(0.1, 2.0, &mut v), EffdimStatus::Ok);
    assert!((v - 2.96729).abs() < 1e-5);
    assert_eq!(effdim_counterexample_threshold(2.0, &mut v), EffdimStatus::Ok);
    assert!((v - (std::f64::consts::PI / 4.0).powi(2)).abs() < 1e-12);
    assert_eq!(effdim_integral(1.0, 2.0, &mut v), EffdimStatus::Ok);
    assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    assert_eq!(effdim_c_eta(6.0 / std::f64::consts::E, &mut v), EffdimStatus::Ok);
    assert_eq!(v, 96.0);
    assert_eq!(effdim_q_constant(2.0, 0.0, true, &mut v), EffdimStatus::Ok);
    assert_eq!(v, 2.0);
    assert_eq!(effdim_lambda_schedule(2.0, 1.5, 256.0, &mut v), EffdimStatus::Ok);
    assert!((v - 0.0625).abs() < 1e-15);
    assert_eq!(effdim_rate_exponent(2.0, 2.0, &mut v), EffdimStatus::Ok);
    assert!((v - 0.8).abs() < 1e-15);
    assert_eq!(effdim_eta_tau(192.0, 1.0, &mut v), EffdimStatus::Ok);
    assert!((v - 6.0 / std::f64::consts::E).abs() < 1e-15);
}

#[test]
fn effective_dimension_through_handles() {
    let mut direct = EffdimEffDim::default();
    assert_eq!(effdim_effective_dimension(0.1, 2.0, 1e-3, 1e-9, &mut direct), EffdimStatus::Ok);
    assert!((direct.value - 15.208).abs() < 1e-3);

    let mut handle = ptr::null_mut();
    assert_eq!(effdim_spectrum_polynomial(0.1, 2.0, 100, &mut handle), EffdimStatus::Ok);
    let mut len = 0usize;
    let mut via_handle = EffdimEffDim::default();
    unsafe {
        assert_eq!(effdim_spectrum_len(handle, &mut len), EffdimStatus::Ok);
        assert_eq!(
            effdim_spectrum_effective_dimension(handle, 1e-3, 1e-9, &mut via_handle),
            EffdimStatus::Ok
        );
        effdim_spectrum_free(handle);
    }
    assert_eq!(len, 100);
    assert!((via_handle.value - direct.value).abs() < 1e-8);

    let values = [1.0, 0.5, 0.25];
    let mut finite = ptr::null_mut();
    let mut r = EffdimEffDim::default();
    unsafe {
        assert_eq!(effdim_spectrum_from_values(values.as_ptr(), 3, &mut finite), EffdimStatus::Ok);
        assert_eq!(effdim_spectrum_effective_dimension(finite, 0.5, 1e-9, &mut r), EffdimStatus::Ok);
        effdim_spectrum_free(finite);
        effdim_spectrum_free(ptr::null_mut());
    }
    assert!((r.value - (2.0 / 3.0 + 0.5 + 1.0 / 3.0)).abs() < 1e-15);
}

#[test]
fn risk_bound_and_threshold() {
    let p = default_params();
    let mut br = EffdimBoundBreakdown::default();
    let status = unsafe { effdim_risk_bound(&p, 0.1, 1e9, 0.05, &mut br) };
    assert_eq!(status, EffdimStatus::Ok);
    let sum = br.term_approx + br.term_b + br.term_a + br.term_noise_m + br.term_effdim;
    assert!((br.total - br.c_eta * sum).abs() <= 1e-12 * br.total);
    assert!(br.lambda_ok);
    assert!(br.sample_size_ok);

    let mut ell = 0.0;
    assert_eq!(unsafe { effdim_min_sample_size(&p, 0.05, &mut ell) }, EffdimStatus::Ok);
    assert!(ell.is_finite() && ell > 1.0);

    let inf = EffdimPriorParams { b_is_infinite: true, ..p };
    assert_eq!(unsafe { effdim_risk_bound(&inf, 0.1, 10.0, 0.5, &mut br) }, EffdimStatus::Ok);
    assert!((br.term_effdim - 0.1).abs() < 1e-15);
}

#[test]
fn errors_are_reported() {
    let mut v = 0.0;
    assert_eq!(effdim_corrected_bound(0.1, 1.0, 0.1, &mut v), EffdimStatus::InvalidParameter);
    assert!(last_error().contains("b > 1"), "{}", last_error());
    assert_eq!(effdim_c_eta(0.1, ptr::null_mut()), EffdimStatus::NullPointer);
    assert_eq!(
        unsafe { effdim_risk_bound(ptr::null(), 0.1, 1.0, 0.1, &mut EffdimBoundBreakdown::default()) },
        EffdimStatus::NullPointer
    );
    let bad = [0.5, 1.0];
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { effdim_spectrum_from_values(bad.as_ptr(), 2, &mut h) },
        EffdimStatus::InvalidParameter
    );
    assert!(h.is_null());
    assert_eq!(effdim_rate_exponent(2.0, 2.0, &mut v), EffdimStatus::Ok);
    assert!(effdim_last_error_message().is_null());
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/effdim.h")).unwrap();
    for name in [
        "effdim_last_error_message",
        "effdim_spectrum_polynomial",
        "effdim_spectrum_from_values",
        "effdim_spectrum_free",
        "effdim_spectrum_effective_dimension",
        "effdim_effective_dimension",
        "effdim_q_constant",
        "effdim_corrected_bound",
        "effdim_claimed_bound",
        "effdim_wrong_inequality_gap",
        "effdim_risk_bound",
        "effdim_lambda_schedule",
        "effdim_min_sample_size",
        "effdim_eta_tau",
        "EffdimStatus_InvalidParameter",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"effdim.h\"\n\
         int probe(void) {\n\
           double v;\n\
           EffdimPriorParams p = {2.0, false, 1.5, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};\n\
           EffdimBoundBreakdown br;\n\
           (void)effdim_risk_bound(&p, 0.1, 100.0, 0.05, &br);\n\
           return effdim_c_eta(0.5, &v) == EffdimStatus_Ok;\n\
         }\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "cc rejected effdim.h"),
        Err(e) => eprintln!("skipping: no C compiler ({e})"),
    }
}
