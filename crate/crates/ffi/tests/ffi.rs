use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use rgmwm_ffi::*;

#[test]
fn simulate_fit_and_read_back() {
    unsafe {
        let truth = CString::new("ar1(rho=0.9, v2=1)").unwrap();
        let free = CString::new("ar1(rho=?, v2=?)").unwrap();
        let (mut t, mut m) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(rgmwm_model_parse(truth.as_ptr(), &mut t), RgmwmStatus::Ok);
        assert_eq!(rgmwm_model_parse(free.as_ptr(), &mut m), RgmwmStatus::Ok);

        let mut data = ptr::null_mut();
        assert_eq!(rgmwm_simulate(t, 1000, 0, 1, &mut data), RgmwmStatus::Ok);
        let mut n = 0;
        assert_eq!(rgmwm_data_len(data, &mut n), RgmwmStatus::Ok);
        assert_eq!(n, 1000);

        let mut j = 0;
        assert_eq!(rgmwm_wv_num_scales(data, &mut j), RgmwmStatus::Ok);
        assert_eq!(j, 9);
        let mut nu = vec![0.0; j];
        assert_eq!(rgmwm_wv(data, 1, 0.6, nu.as_mut_ptr(), j), RgmwmStatus::Ok);
        assert!(nu.iter().all(|&v| v > 0.0));
        assert_eq!(rgmwm_wv(data, 0, 0.6, nu.as_mut_ptr(), 3), RgmwmStatus::BufferTooSmall);

        let mut fit = ptr::null_mut();
        let opts = rgmwm_fit_options_default();
        assert_eq!(rgmwm_fit(data, m, &opts, &mut fit), RgmwmStatus::Ok);
        assert_eq!(rgmwm_fit_converged(fit), 1);
        let k = rgmwm_fit_num_params(fit);
        assert_eq!(k, 2);
        assert_eq!(CStr::from_ptr(rgmwm_fit_label(fit, 0)).to_str().unwrap(), "ar1.rho");
        assert!(rgmwm_fit_label(fit, 2).is_null());
        let mut theta = [0.0; 2];
        let (mut lo, mut hi) = ([0.0; 2], [0.0; 2]);
        assert_eq!(rgmwm_fit_estimates(fit, theta.as_mut_ptr(), 2), RgmwmStatus::Ok);
        assert_eq!(rgmwm_fit_intervals(fit, lo.as_mut_ptr(), hi.as_mut_ptr(), 2), RgmwmStatus::Ok);
        assert!((0.8..1.0).contains(&theta[0]));
        assert!(lo[0] <= theta[0] && theta[0] <= hi[0]);
        let mut w = vec![0.0; n];
        assert_eq!(rgmwm_fit_weights(fit, w.as_mut_ptr(), n), RgmwmStatus::Ok);
        assert!(w.iter().all(|x| (0.0..=1.0).contains(x)));
        rgmwm_fit_free(fit);

        let classical = RgmwmFitOptions { robust: 0, inference: 0, ..opts };
        let mut fit = ptr::null_mut();
        assert_eq!(rgmwm_fit(data, m, &classical, &mut fit), RgmwmStatus::Ok);
        assert_eq!(rgmwm_fit_intervals(fit, lo.as_mut_ptr(), hi.as_mut_ptr(), 2), RgmwmStatus::Unavailable);
        rgmwm_fit_free(fit);

        rgmwm_data_free(data);
        rgmwm_model_free(t);
        rgmwm_model_free(m);
    }
}

#[test]
fn field_round_trip_and_invalid_shapes() {
    unsafe {
        let v: Vec<f64> = (0..12).map(f64::from).collect();
        let mut f = ptr::null_mut();
        assert_eq!(rgmwm_field_new(v.as_ptr(), 3, 4, &mut f), RgmwmStatus::Ok);
        let mut back = vec![0.0; 12];
        assert_eq!(rgmwm_data_values(f, back.as_mut_ptr(), 12), RgmwmStatus::Ok);
        assert_eq!(back, v);
        rgmwm_data_free(f);

        let mut s = ptr::null_mut();
        let bad = [1.0, f64::NAN];
        assert_eq!(rgmwm_series_new(bad.as_ptr(), 2, &mut s), RgmwmStatus::InvalidInput);
        assert!(s.is_null());
        assert!(!rgmwm_last_error().is_null());
    }
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let lib = target_dir().join("librgmwm_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "rgmwm.h"
int main(void) {
    RgmwmModel *m = NULL;
    RgmwmData *d = NULL;
    RgmwmFit *f = NULL;
    if (rgmwm_model_parse("ar1(rho=0.5, v2=2)", &m) != RGMWM_STATUS_OK) return 10;
    if (rgmwm_simulate(m, 500, 0, 7, &d) != RGMWM_STATUS_OK) return 11;
    rgmwm_model_free(m);
    if (rgmwm_model_parse("ar1(rho=?, v2=?)", &m) != RGMWM_STATUS_OK) return 12;
    RgmwmFitOptions o = rgmwm_fit_options_default();
    if (rgmwm_fit(d, m, &o, &f) != RGMWM_STATUS_OK) return 13;
    double theta[2];
    if (rgmwm_fit_estimates(f, theta, 2) != RGMWM_STATUS_OK) return 14;
    if (rgmwm_model_parse("bogus(", &m) != RGMWM_STATUS_PARSE || rgmwm_last_error() == NULL) return 15;
    printf("%s %.3f\n", rgmwm_fit_label(f, 0), theta[0]);
    rgmwm_fit_free(f);
    rgmwm_data_free(d);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("main");
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I", include])
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("ar1.rho "), "{text}");
}
