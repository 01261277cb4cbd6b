use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use qpt_ffi::*;

fn last_error() -> Option<String> {
    let p = qpt_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn canonical(name: &str) -> *mut QptProcess {
    let name = CString::new(name).unwrap();
    let mut h = ptr::null_mut();
    let status = unsafe { qpt_process_canonical(name.as_ptr(), &mut h) };
    assert_eq!(status, QptStatus::Ok, "{:?}", last_error());
    h
}

fn to_array(h: *const QptProcess) -> [f64; 32] {
    let mut a = [0.0; 32];
    assert_eq!(
        unsafe { qpt_process_to_array(h, a.as_mut_ptr()) },
        QptStatus::Ok
    );
    a
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn array_round_trip_and_physicality() {
    let h = canonical("hadamard");
    assert!(unsafe { qpt_process_is_physical(h) });
    let chi = to_array(h);
    // χ(1,1) = χ(3,3) = χ(1,3) = χ(3,1) = 1/2
    for (r, c) in [(1, 1), (3, 3), (1, 3), (3, 1)] {
        assert!((chi[2 * (4 * r + c)] - 0.5).abs() < 1e-15);
    }

    let mut copy = ptr::null_mut();
    assert_eq!(
        unsafe { qpt_process_from_array(chi.as_ptr(), true, &mut copy) },
        QptStatus::Ok
    );
    assert_eq!(to_array(copy), chi);
    assert!(last_error().is_none());

    let mut doubled = chi;
    doubled.iter_mut().for_each(|x| *x *= 2.0);
    let mut bad = ptr::null_mut();
    let status = unsafe { qpt_process_from_array(doubled.as_ptr(), true, &mut bad) };
    assert_ne!(status, QptStatus::Ok);
    assert!(bad.is_null());
    assert!(last_error().is_some());

    let mut raw = ptr::null_mut();
    assert_eq!(
        unsafe { qpt_process_from_array(doubled.as_ptr(), false, &mut raw) },
        QptStatus::Ok
    );
    assert!(!unsafe { qpt_process_is_physical(raw) });

    unsafe {
        qpt_process_free(h);
        qpt_process_free(copy);
        qpt_process_free(raw);
        qpt_process_free(ptr::null_mut());
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { qpt_process_from_array(ptr::null(), false, &mut h) },
        QptStatus::NullPointer
    );
    assert!(last_error().unwrap().contains("chi"));

    let bogus = CString::new("not-a-channel").unwrap();
    assert_eq!(
        unsafe { qpt_process_canonical(bogus.as_ptr(), &mut h) },
        QptStatus::InvalidArgument
    );

    let mut asym = [0.0; 32];
    asym[2] = 0.3; // χ(0,1) without its conjugate partner
    let mut raw = ptr::null_mut();
    assert_eq!(
        unsafe { qpt_process_from_array(asym.as_ptr(), false, &mut raw) },
        QptStatus::Ok
    );
    let mut report = QptConstraintReport::default();
    assert_eq!(
        unsafe { qpt_process_report(raw, 1e-9, &mut report) },
        QptStatus::NotHermitian
    );
    unsafe { qpt_process_free(raw) };

    let garbage = CString::new("{").unwrap();
    assert_eq!(
        unsafe { qpt_process_from_json(garbage.as_ptr(), &mut h) },
        QptStatus::Format
    );

    let mut noise = QptNoise::default();
    let spec = CString::new("rotation=abc").unwrap();
    assert_eq!(
        unsafe { qpt_noise_parse(spec.as_ptr(), &mut noise) },
        QptStatus::InvalidArgument
    );
    assert!(h.is_null());
}

#[test]
fn report_of_polarizer() {
    let h = canonical("polarizer-z");
    let mut report = QptConstraintReport::default();
    assert_eq!(
        unsafe { qpt_process_report(h, 1e-9, &mut report) },
        QptStatus::Ok
    );
    assert!((report.trace_chi - 0.5).abs() < 1e-15);
    assert!((report.p_eig_plus - 1.0).abs() < 1e-12);
    assert!(report.p_eig_minus.abs() < 1e-12);
    assert!(report.eq10_satisfied);
    assert!(!report.tp_consistent);
    unsafe { qpt_process_free(h) };
}

#[test]
fn fit_restores_feasibility() {
    let h = canonical("amplitude-damping:0.36");
    let mut chi = to_array(h);
    chi.iter_mut().for_each(|x| *x *= 1.3);
    let mut raw = ptr::null_mut();
    assert_eq!(
        unsafe { qpt_process_from_array(chi.as_ptr(), false, &mut raw) },
        QptStatus::Ok
    );
    for mode in [QptFitMode::General, QptFitMode::TracePreserving] {
        let mut fitted = ptr::null_mut();
        let mut diag = QptFitDiagnostics::default();
        assert_eq!(
            unsafe { qpt_process_fit(raw, mode, &mut fitted, &mut diag) },
            QptStatus::Ok
        );
        assert!(diag.constraint_violation <= 1e-7);
        assert!(diag.objective > 0.0);
        let mut report = QptConstraintReport::default();
        unsafe { qpt_process_report(fitted, 1e-7, &mut report) };
        assert!(report.eq10_satisfied);
        if mode == QptFitMode::TracePreserving {
            assert!(report.tp_consistent);
        }
        unsafe { qpt_process_free(fitted) };
    }
    unsafe {
        qpt_process_free(raw);
        qpt_process_free(h);
    }
}

#[test]
fn kraus_and_apply() {
    let h = canonical("amplitude-damping:0.36");
    let mut ops = [0.0; 32];
    let mut weights = [0.0; 4];
    let mut count = 0usize;
    assert_eq!(
        unsafe { qpt_process_kraus(h, ops.as_mut_ptr(), weights.as_mut_ptr(), &mut count) },
        QptStatus::Ok
    );
    assert_eq!(count, 2);
    assert!(weights[0] >= weights[1] && weights[1] > 0.0);

    // |1><1| decays to 0.36 |0><0| + 0.64 |1><1|
    let rho = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
    let mut out = [0.0; 8];
    assert_eq!(
        unsafe { qpt_process_apply(h, rho.as_ptr(), out.as_mut_ptr()) },
        QptStatus::Ok
    );
    let expected = [0.36, 0.0, 0.0, 0.0, 0.0, 0.0, 0.64, 0.0];
    assert!(distance(&out, &expected) < 1e-14, "{out:?}");
    unsafe { qpt_process_free(h) };
}

#[test]
fn json_round_trips() {
    let h = canonical("rotation-y:0.7");
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { qpt_process_to_json(h, &mut json) }, QptStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(
        unsafe { qpt_process_from_json(json, &mut back) },
        QptStatus::Ok
    );
    assert_eq!(to_array(back), to_array(h));
    assert!(unsafe { qpt_process_is_physical(back) });
    unsafe {
        qpt_string_free(json);
        qpt_process_free(back);
    }

    let mut exp = ptr::null_mut();
    assert_eq!(
        unsafe { qpt_experiment_simulate(h, ptr::null(), 1000, 3, &mut exp) },
        QptStatus::Ok
    );
    let mut text = ptr::null_mut();
    assert_eq!(
        unsafe { qpt_experiment_to_json(exp, &mut text) },
        QptStatus::Ok
    );
    let mut exp2 = ptr::null_mut();
    assert_eq!(
        unsafe { qpt_experiment_from_json(text, &mut exp2) },
        QptStatus::Ok
    );
    let mut text2 = ptr::null_mut();
    unsafe { qpt_experiment_to_json(exp2, &mut text2) };
    assert_eq!(unsafe { CStr::from_ptr(text) }, unsafe {
        CStr::from_ptr(text2)
    });
    unsafe {
        qpt_string_free(text);
        qpt_string_free(text2);
        qpt_experiment_free(exp);
        qpt_experiment_free(exp2);
        qpt_process_free(h);
    }
}

#[test]
fn pipeline_through_handles() {
    let truth = canonical("hadamard");
    let truth_chi = to_array(truth);

    let mut noise = QptNoise::default();
    let spec = CString::new("rotation=0.05").unwrap();
    assert_eq!(
        unsafe { qpt_noise_parse(spec.as_ptr(), &mut noise) },
        QptStatus::Ok
    );
    assert_eq!(noise.preparation_rotation, [0.05; 4]);
    assert!(!noise.shot_noise);

    let mut exp = ptr::null_mut();
    assert_eq!(
        unsafe { qpt_experiment_simulate(truth, &noise, 100_000, 7, &mut exp) },
        QptStatus::Ok
    );

    let mut raw = ptr::null_mut();
    let mut cond = 0.0;
    assert_eq!(
        unsafe { qpt_experiment_reconstruct(exp, false, &mut raw, &mut cond) },
        QptStatus::Ok
    );
    assert!(cond.is_finite() && cond >= 1.0);
    assert!(distance(&to_array(raw), &truth_chi) < 1e-10);

    let mut fitted = ptr::null_mut();
    let mut diag = QptFitDiagnostics::default();
    let mut report = QptConstraintReport::default();
    assert_eq!(
        unsafe {
            qpt_experiment_run_pipeline(
                exp,
                false,
                QptFitMode::General,
                &mut fitted,
                &mut diag,
                &mut report,
            )
        },
        QptStatus::Ok
    );
    assert!(distance(&to_array(fitted), &truth_chi) < 1e-9);
    assert!(report.eq10_satisfied);

    // Ideal-probe assumption on rotated probes leaves a systematic error.
    let mut biased = ptr::null_mut();
    unsafe { qpt_experiment_reconstruct(exp, true, &mut biased, ptr::null_mut()) };
    assert!(distance(&to_array(biased), &truth_chi) > 1e-3);

    unsafe {
        qpt_process_free(truth);
        qpt_process_free(raw);
        qpt_process_free(fitted);
        qpt_process_free(biased);
        qpt_experiment_free(exp);
    }
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(qpt_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Directory holding the built static library (target/<profile>).
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    // target/<profile>/deps/<test binary>
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    let lib = artifact_dir().join("libqpt_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!(
            "skipping: no C compiler or static library at {}",
            lib.display()
        );
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "qpt.h"

int main(void) {
    QptProcess *chi = NULL;
    if (qpt_process_canonical("polarizer-x", &chi) != QPT_STATUS_OK) return 1;
    QptConstraintReport r;
    if (qpt_process_report(chi, 1e-9, &r) != QPT_STATUS_OK) return 2;
    if (!r.eq10_satisfied || r.tp_consistent) return 3;

    QptProcess *fitted = NULL;
    QptFitDiagnostics d;
    if (qpt_process_fit(chi, QPT_FIT_MODE_TRACE_PRESERVING, &fitted, &d) != QPT_STATUS_OK) return 4;
    printf("%.6f\n", d.objective);

    QptProcess *bad = NULL;
    if (qpt_process_canonical("nope", &bad) != QPT_STATUS_INVALID_ARGUMENT) return 5;
    if (qpt_last_error() == NULL) return 6;

    qpt_process_free(fitted);
    qpt_process_free(chi);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke exited with {:?}", out.status);
    // TP projection of a polarizer is 1/8 away.
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "0.125000");
}
