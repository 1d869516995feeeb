use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use acn_bounds_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(acn_last_error()) }.to_str().unwrap().to_string()
}

#[test]
fn bounds_through_out_parameters() {
    let mut d = f64::NAN;
    unsafe {
        assert_eq!(acn_trilemma_advantage(AcnSetting::Sync, 1, 0.0, 0.0, 10, &mut d), AcnStatus::Ok);
        assert_eq!(d, 1.0);
        assert_eq!(acn_trilemma_advantage(AcnSetting::UnsyncImproved, 3, 0.0, 0.3, 10, &mut d), AcnStatus::Ok);
        assert!((d - 0.49).abs() < 1e-12);
        assert_eq!(acn_trilemma_compromising(AcnSetting::Sync, 3, 0.0, 10, 2, 2, &mut d), AcnStatus::Ok);
        assert_eq!(d, 1.0);
    }
    let mut m = 0u64;
    assert_eq!(unsafe { acn_counting_min_com(5, 3, &mut m) }, AcnStatus::Ok);
    assert_eq!(m, 15);
}

#[test]
fn region_reports_verdict_and_threshold() {
    let (mut v, mut t) = (AcnVerdict::NotApplicable, 0.0);
    let s = unsafe { acn_region(AcnBound::Trilemma, 3, 0.1, 1.0, 1000, 0, 256.0, 1000.0, &mut v, &mut t) };
    assert_eq!(s, AcnStatus::Ok);
    assert_eq!(v, AcnVerdict::Impossible);
    assert!((t - 0.999 / 4.0).abs() < 1e-12);
    let s = unsafe { acn_region(AcnBound::Trilemma, 1, 0.1, 1.0, 1000, 0, 256.0, 1000.0, &mut v, &mut t) };
    assert_eq!(s, AcnStatus::Ok);
    assert_eq!(v, AcnVerdict::NotApplicable);
    assert!(t.is_nan());
}

#[test]
fn errors_set_status_and_message() {
    let mut d = 0.0;
    let s = unsafe { acn_trilemma_advantage(AcnSetting::Sync, 3, 2.0, 0.0, 10, &mut d) };
    assert_eq!(s, AcnStatus::InvalidInput);
    assert!(last_error().contains("beta"), "{}", last_error());
    let s = unsafe { acn_trilemma_advantage(AcnSetting::Sync, 3, 0.0, 0.0, 10, ptr::null_mut()) };
    assert_eq!(s, AcnStatus::NullPointer);
    assert_eq!(unsafe { acn_params_set_k(ptr::null_mut(), 2) }, AcnStatus::NullPointer);
}

#[test]
fn simulation_returns_json_record() {
    let params = acn_params_new(10, 3);
    let protocol = CString::new("trilemma-unsync").unwrap();
    let attack = CString::new("timing").unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(acn_params_set_p(params, 0.3), AcnStatus::Ok);
        let s = acn_simulate_json(params, protocol.as_ptr(), attack.as_ptr(), ptr::null(), 0, 0, 2000, 5, &mut out);
        assert_eq!(s, AcnStatus::Ok, "{}", last_error());
        let json: serde_json::Value = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        assert_eq!(json["trials"], 2000);
        assert_eq!(json["protocol"], "trilemma-unsync");
        acn_string_free(out);

        let unknown = CString::new("nope").unwrap();
        let s = acn_simulate_json(params, unknown.as_ptr(), attack.as_ptr(), ptr::null(), 0, 0, 2000, 5, &mut out);
        assert_ne!(s, AcnStatus::Ok);
        assert!(out.is_null());

        assert_eq!(acn_params_set_k(params, 1), AcnStatus::Ok);
        let s = acn_simulate_json(params, protocol.as_ptr(), attack.as_ptr(), ptr::null(), 0, 0, 2000, 5, &mut out);
        assert_eq!(s, AcnStatus::Config);
        acn_params_free(params);
    }
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libacn_bounds_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let exe = tempfile::tempdir().unwrap();
    let bin = exe.path().join("c_api");
    let status = Command::new("cc")
        .arg(dir.join("tests/c_api.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok 0.49");
}
