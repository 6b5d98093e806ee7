use hardedge_ffi::*;
use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    let p = he_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn laguerre_rank_one_is_exponential() {
    let mut det = 0.0;
    assert_eq!(unsafe { he_laguerre_det(0.7, 1, 0, &mut det) }, HeStatus::Ok);
    assert!((det - (-0.7f64).exp()).abs() < 1e-8);
}

#[test]
fn fredholm_limit_matches_closed_form() {
    // β = 2, a = 0: det = exp(−t(1 + 1/c))
    let c = [2.0];
    let mut det = 0.0;
    assert_eq!(unsafe { he_fredholm_limit_det(0.5, 0, c.as_ptr(), 1, &mut det) }, HeStatus::Ok);
    assert!((det - (-0.75f64).exp()).abs() < 1e-9);
}

#[test]
fn domain_errors_carry_a_message() {
    let c = [-1.0];
    let mut det = 0.0;
    assert_eq!(unsafe { he_fredholm_limit_det(1.0, 0, c.as_ptr(), 1, &mut det) }, HeStatus::Domain);
    assert!(last_error().contains("positive"));
    let (mut e, mut se) = (0.0, 0.0);
    let s = unsafe { he_riccati_f1(2.0, -0.5, 0, 0.0, 1.0, 10, HeCountMode::Explosions, 1, &mut e, &mut se) };
    assert_eq!(s, HeStatus::Domain);
    assert!(last_error().contains("a >= r - 1"));
}

#[test]
fn null_pointers_are_rejected() {
    assert_eq!(unsafe { he_laguerre_det(1.0, 1, 0, ptr::null_mut()) }, HeStatus::NullPointer);
    assert_eq!(unsafe { he_pde_probe(ptr::null(), 0, 0.0, 1.0, &mut 0.0) }, HeStatus::NullPointer);
    unsafe {
        he_samples_free(ptr::null_mut());
        he_pde_free(ptr::null_mut());
    }
}

#[test]
fn sample_handle_round_trip() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { he_finite_n_samples(30, 0.0, 2.0, f64::INFINITY, 100, 5, &mut h) }, HeStatus::Ok);
    let mut len = 0;
    assert_eq!(unsafe { he_samples_len(h, &mut len) }, HeStatus::Ok);
    assert_eq!(len, 100);
    let mut buf = vec![0.0; 40];
    let mut written = 0;
    assert_eq!(unsafe { he_samples_copy(h, buf.as_mut_ptr(), buf.len(), &mut written) }, HeStatus::Ok);
    assert_eq!(written, 40);
    assert!(buf.iter().all(|&x| x > 0.0));
    unsafe { he_samples_free(h) };
}

#[test]
fn riccati_estimate_near_null_law() {
    let (mut e, mut se) = (0.0, 0.0);
    let s = unsafe { he_riccati_f1(2.0, 0.0, 0, 0.0, f64::INFINITY, 20_000, HeCountMode::Zeros, 3, &mut e, &mut se) };
    assert_eq!(s, HeStatus::Ok);
    assert!((e - (-1.0f64).exp()).abs() <= 3.0 * se, "{e} ± {se}");
}

#[test]
fn pde_handle_probes_the_chain() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { he_pde_solve(2.0, 1.0, 1, 600, 150, &mut h) }, HeStatus::Ok);
    let (mut f0, mut f1) = (0.0, 0.0);
    unsafe {
        assert_eq!(he_pde_probe(h, 0, 0.0, 1.0, &mut f0), HeStatus::Ok);
        assert_eq!(he_pde_probe(h, 1, 0.0, 1.0, &mut f1), HeStatus::Ok);
        assert_eq!(he_pde_probe(h, 2, 0.0, 1.0, &mut f1), HeStatus::Domain);
        he_pde_free(h);
    }
    assert!(f0 > 0.0 && f0 < f1 && f1 <= 1.0, "{f0} {f1}");
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/hardedge.h")).unwrap();
    for name in [
        "he_last_error",
        "he_version",
        "he_riccati_f1",
        "he_fredholm_limit_det",
        "he_laguerre_det",
        "he_finite_n_samples",
        "he_samples_len",
        "he_samples_copy",
        "he_samples_free",
        "he_pde_solve",
        "he_pde_probe",
        "he_pde_free",
        "typedef struct HePde HePde",
        "HE_STATUS_NULL_POINTER = 5",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

/// Compile the C smoke program against the static library when a C
/// compiler and the archive are available.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libhardedge_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg(dir.join("tests/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
