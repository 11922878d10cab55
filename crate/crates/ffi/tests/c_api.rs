use std::ffi::{CStr, CString};
use std::ptr;

use recourse_qaoa_ffi::*;

const REFERENCE: &str = "\
horizon = 1
[prices]
ev = 0.25
buy = 0.4
sell = 0.1
[[timestep]]
j_bits = 2
recourse_bits = 2
dist = { 1 = 0.2, 2 = 0.5, 3 = 0.3 }
";

fn instance() -> *mut RqInstance {
    let text = CString::new(REFERENCE).unwrap();
    let mut inst = ptr::null_mut();
    assert_eq!(
        unsafe { rq_instance_from_str(text.as_ptr(), &mut inst) },
        RqStatus::Ok
    );
    assert!(!inst.is_null());
    inst
}

fn last_error() -> String {
    let p = rq_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn expected_costs() {
    let inst = instance();
    for (j, want) in [(0i64, -0.21), (1, -0.36), (2, -0.45), (3, -0.39)] {
        let mut z = 0.0;
        assert_eq!(
            unsafe { rq_expected_cost(inst, &j, 1, &mut z) },
            RqStatus::Ok
        );
        assert!((z - want).abs() < 1e-9, "j={j}: {z}");
    }
    let mut z = 0.0;
    assert_eq!(
        unsafe { rq_expected_cost(inst, ptr::null(), 0, &mut z) },
        RqStatus::InvalidConfig
    );
    unsafe { rq_instance_free(inst) };
}

#[test]
fn solve_exact_json() {
    let inst = instance();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rq_solve_exact_json(inst, &mut s) }, RqStatus::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { rq_string_free(s) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["hn_j"], serde_json::json!([2]));
    assert!((v["evpi"].as_f64().unwrap() - 0.075).abs() < 1e-9);
    unsafe { rq_instance_free(inst) };
}

#[test]
fn error_codes_and_messages() {
    let mut inst = ptr::null_mut();
    let bad = CString::new("horizon = ").unwrap();
    assert_eq!(
        unsafe { rq_instance_from_str(bad.as_ptr(), &mut inst) },
        RqStatus::Parse
    );
    assert!(last_error().contains("line 1"));
    assert!(inst.is_null());

    let invalid = CString::new(REFERENCE.replace("3 = 0.3", "3 = 0.1")).unwrap();
    assert_eq!(
        unsafe { rq_instance_from_str(invalid.as_ptr(), &mut inst) },
        RqStatus::InvalidInstance
    );
    assert!(last_error().contains("probabilities"));

    assert_eq!(
        unsafe { rq_instance_from_str(ptr::null(), &mut inst) },
        RqStatus::NullPointer
    );
    let missing = CString::new("/nonexistent/instance.toml").unwrap();
    assert_eq!(
        unsafe { rq_instance_from_file(missing.as_ptr(), &mut inst) },
        RqStatus::Io
    );

    let mut h = 0usize;
    assert_eq!(
        unsafe { rq_instance_horizon(ptr::null(), &mut h) },
        RqStatus::NullPointer
    );
    unsafe {
        rq_instance_free(ptr::null_mut());
        rq_string_free(ptr::null_mut());
    }
}

#[test]
fn qaoa_run_round_trip() {
    let inst = instance();
    let cfg = rq_config_new();
    unsafe {
        assert_eq!(rq_config_set_layers(cfg, 2), RqStatus::Ok);
        assert_eq!(rq_config_set_max_evaluations(cfg, 40), RqStatus::Ok);
        assert_eq!(rq_config_set_seed(cfg, 3), RqStatus::Ok);
        assert_eq!(
            rq_config_set_optimizer(cfg, RqOptimizer::CobylaStyle),
            RqStatus::Ok
        );
        assert_eq!(rq_config_set_init(cfg, RqInit::Random), RqStatus::Ok);
    }
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { rq_qaoa_run(inst, cfg, &mut res) }, RqStatus::Ok);

    let mut evals = 0usize;
    let mut best = 0.0;
    unsafe {
        assert_eq!(rq_run_evaluations(res, &mut evals), RqStatus::Ok);
        assert_eq!(rq_run_best_expectation(res, &mut best), RqStatus::Ok);
    }
    assert!((1..=40).contains(&evals));
    assert!(best.is_finite());

    let mut len = 0usize;
    assert_eq!(
        unsafe { rq_run_modal_j(res, ptr::null_mut(), 0, &mut len) },
        RqStatus::BufferTooSmall
    );
    assert_eq!(len, 1);
    let mut j = [0i64; 1];
    assert_eq!(
        unsafe { rq_run_modal_j(res, j.as_mut_ptr(), 1, &mut len) },
        RqStatus::Ok
    );
    assert!((0..=3).contains(&j[0]));

    let total: f64 = (0..4i64)
        .map(|v| {
            let mut p = 0.0;
            assert_eq!(
                unsafe { rq_run_probability_of(res, &v, 1, &mut p) },
                RqStatus::Ok
            );
            p
        })
        .sum();
    assert!((total - 1.0).abs() < 1e-9);

    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rq_run_result_json(res, &mut s) }, RqStatus::Ok);
    let v: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(s) }.to_str().unwrap()).unwrap();
    assert_eq!(v["evaluations"].as_u64().unwrap() as usize, evals);
    unsafe {
        rq_string_free(s);
        rq_run_result_free(res);
        rq_config_free(cfg);
        rq_instance_free(inst);
    }
}

#[test]
fn invalid_config_is_reported() {
    let inst = instance();
    let cfg = rq_config_new();
    unsafe { rq_config_set_layers(cfg, 0) };
    let mut res = ptr::null_mut();
    assert_eq!(
        unsafe { rq_qaoa_run(inst, cfg, &mut res) },
        RqStatus::InvalidConfig
    );
    assert!(last_error().contains("layers"));
    unsafe { rq_config_set_penalty(cfg, -1.0) };
    unsafe {
        rq_config_set_layers(cfg, 1);
        assert_eq!(rq_qaoa_run(inst, cfg, &mut res), RqStatus::InvalidConfig);
        rq_config_free(cfg);
        rq_instance_free(inst);
    }
}

#[test]
fn header_is_generated() {
    let header = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/include/recourse_qaoa.h"
    ))
    .unwrap();
    for name in [
        "rq_instance_from_str",
        "rq_qaoa_run",
        "rq_last_error",
        "RQ_STATUS_PANIC",
        "typedef struct RqInstance",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
