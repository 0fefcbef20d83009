//! Exercises the C ABI the way a foreign caller would: handles, status
//! codes, file paths, and the thread-local error message.

use edn_ffi::*;
use std::ffi::{CStr, CString};
use std::path::Path;
use tempfile::tempdir;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn cpath(p: &Path) -> CString {
    c(p.to_str().unwrap())
}

fn write_small_config(path: &Path) {
    std::fs::write(
        path,
        "backbone_widths = 4,4,8,8,8\ndecoder_width = 4\nedb_width = 8\ninput_side = 64\nseed = 9\n",
    )
    .unwrap();
}

fn write_ppm(path: &Path, side: usize) {
    let mut bytes = format!("P6\n{side} {side}\n255\n").into_bytes();
    bytes.extend((0..side * side * 3).map(|i| (i * 29 % 256) as u8));
    std::fs::write(path, bytes).unwrap();
}

fn write_pgm(path: &Path, side: usize, f: impl Fn(usize, usize) -> u8) {
    let mut bytes = format!("P5\n{side} {side}\n255\n").into_bytes();
    for y in 0..side {
        for x in 0..side {
            bytes.push(f(x, y));
        }
    }
    std::fs::write(path, bytes).unwrap();
}

#[test]
fn version_and_error_message_are_c_strings() {
    let v = unsafe { CStr::from_ptr(edn_version()) };
    assert!(!v.to_str().unwrap().is_empty());
    let m = unsafe { CStr::from_ptr(edn_last_error_message()) };
    assert!(m.to_str().is_ok());
}

#[test]
fn default_model_creation() {
    let mut model: *mut EdnModelHandle = std::ptr::null_mut();
    assert_eq!(
        unsafe { edn_model_create_default(3, &mut model) },
        EdnStatus::Ok
    );
    assert_eq!(unsafe { edn_model_input_side(model) }, 384);
    assert!(unsafe { edn_model_total_macs(model) } > 1_000_000_000);
    unsafe { edn_model_free(model) };
    assert_eq!(
        unsafe { edn_model_create_default(3, std::ptr::null_mut()) },
        EdnStatus::NullArgument
    );
}

#[test]
fn model_lifecycle_infer_and_weights_round_trip() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write_small_config(&cfg);
    let img = dir.path().join("input.ppm");
    write_ppm(&img, 80);

    let mut model: *mut EdnModelHandle = std::ptr::null_mut();
    let status = unsafe { edn_model_create_from_config(cpath(&cfg).as_ptr(), &mut model) };
    assert_eq!(status, EdnStatus::Ok);
    assert!(!model.is_null());
    assert_eq!(unsafe { edn_model_input_side(model) }, 64);
    assert!(unsafe { edn_model_total_macs(model) } > 0);

    let out1 = dir.path().join("p1.pgm");
    let status = unsafe { edn_infer_file(model, cpath(&img).as_ptr(), cpath(&out1).as_ptr()) };
    assert_eq!(status, EdnStatus::Ok);

    // Round trip the weights through a second handle; inference must agree
    // byte for byte.
    let wfile = dir.path().join("m.ednw");
    assert_eq!(
        unsafe { edn_model_save_weights(model, cpath(&wfile).as_ptr()) },
        EdnStatus::Ok
    );
    let mut model2: *mut EdnModelHandle = std::ptr::null_mut();
    assert_eq!(
        unsafe { edn_model_create_from_config(cpath(&cfg).as_ptr(), &mut model2) },
        EdnStatus::Ok
    );
    assert_eq!(
        unsafe { edn_model_load_weights(model2, cpath(&wfile).as_ptr()) },
        EdnStatus::Ok
    );
    let out2 = dir.path().join("p2.pgm");
    assert_eq!(
        unsafe { edn_infer_file(model2, cpath(&img).as_ptr(), cpath(&out2).as_ptr()) },
        EdnStatus::Ok
    );
    assert_eq!(
        std::fs::read(&out1).unwrap(),
        std::fs::read(&out2).unwrap()
    );

    unsafe {
        edn_model_free(model);
        edn_model_free(model2);
        edn_model_free(std::ptr::null_mut());
    }
}

#[test]
fn evaluate_files_perfect_pair() {
    let dir = tempdir().unwrap();
    let pred = dir.path().join("pred.pgm");
    let gt = dir.path().join("gt.pgm");
    let disc = |x: usize, y: usize| {
        let (dx, dy) = (x as i64 - 16, y as i64 - 16);
        if dx * dx + dy * dy < 100 {
            255
        } else {
            0
        }
    };
    write_pgm(&pred, 32, disc);
    write_pgm(&gt, 32, disc);
    let mut m = EdnPairMetrics {
        mae: -1.0,
        f_max: -1.0,
        f_weighted: -1.0,
        s_measure: -1.0,
        e_max: -1.0,
        e_mean: -1.0,
    };
    let status = unsafe { edn_evaluate_files(cpath(&pred).as_ptr(), cpath(&gt).as_ptr(), &mut m) };
    assert_eq!(status, EdnStatus::Ok);
    assert_eq!(m.mae, 0.0);
    assert_eq!(m.f_max, 1.0);
    assert!(m.f_weighted >= 0.999);
    assert!((1.0 - m.s_measure).abs() <= 1e-9);
    assert_eq!(m.e_max, 1.0);
}

#[test]
fn status_codes_and_error_messages() {
    // Null arguments.
    let mut model: *mut EdnModelHandle = std::ptr::null_mut();
    assert_eq!(
        unsafe { edn_model_create_from_config(std::ptr::null(), &mut model) },
        EdnStatus::NullArgument
    );
    // Missing file -> Io, message populated.
    assert_eq!(
        unsafe { edn_model_create_from_config(c("/nonexistent/cfg").as_ptr(), &mut model) },
        EdnStatus::Io
    );
    let msg = unsafe { CStr::from_ptr(edn_last_error_message()) };
    assert!(!msg.to_bytes().is_empty());

    // Bad config -> Config.
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "decoder_width = 30\n").unwrap();
    assert_eq!(
        unsafe { edn_model_create_from_config(cpath(&cfg).as_ptr(), &mut model) },
        EdnStatus::Config
    );

    // Corrupt image -> Format.
    write_small_config(&cfg);
    assert_eq!(
        unsafe { edn_model_create_from_config(cpath(&cfg).as_ptr(), &mut model) },
        EdnStatus::Ok
    );
    let bad_img = dir.path().join("bad.ppm");
    std::fs::write(&bad_img, b"P3\n1 1\n255\n0 0 0\n").unwrap();
    let out = dir.path().join("o.pgm");
    assert_eq!(
        unsafe { edn_infer_file(model, cpath(&bad_img).as_ptr(), cpath(&out).as_ptr()) },
        EdnStatus::Format
    );
    unsafe { edn_model_free(model) };

    // Empty ground truth -> Undefined.
    let pred = dir.path().join("pred.pgm");
    let gt = dir.path().join("gt.pgm");
    write_pgm(&pred, 8, |_, _| 10);
    write_pgm(&gt, 8, |_, _| 0);
    let mut m = EdnPairMetrics {
        mae: 0.0,
        f_max: 0.0,
        f_weighted: 0.0,
        s_measure: 0.0,
        e_max: 0.0,
        e_mean: 0.0,
    };
    assert_eq!(
        unsafe { edn_evaluate_files(cpath(&pred).as_ptr(), cpath(&gt).as_ptr(), &mut m) },
        EdnStatus::Undefined
    );
}

#[test]
fn poly_lr_and_gradcheck_through_the_abi() {
    let mut v = 0.0f64;
    assert_eq!(
        unsafe { edn_poly_lr(5e-5, 0.9, 30, 0, &mut v) },
        EdnStatus::Ok
    );
    assert_eq!(v, 5e-5);
    assert_eq!(
        unsafe { edn_poly_lr(5e-5, 0.9, 30, 30, &mut v) },
        EdnStatus::Ok
    );
    assert_eq!(v, 0.0);
    assert_eq!(
        unsafe { edn_poly_lr(5e-5, 0.9, 30, 31, &mut v) },
        EdnStatus::Domain
    );

    let mut err = f64::NAN;
    assert_eq!(unsafe { edn_gradcheck(12, &mut err) }, EdnStatus::Ok);
    assert!(err.is_finite() && err <= 1e-4);
}
