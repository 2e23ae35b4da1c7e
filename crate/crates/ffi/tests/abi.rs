use std::ffi::{CStr, CString};
use std::ptr;

use mpes_ffi::*;

fn last_error() -> String {
    let p = mpes_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn power_law_round_trip() {
    let p = mpes_device_params_default();
    let mut r = 0.0;
    let mut n = 0.0;
    unsafe {
        assert_eq!(mpes_resistance_after_pulses(p, 2.0, 0.1, &mut r), MpesStatus::Ok);
        assert_eq!(mpes_pulse_count_from_resistance(p, r, 0.1, &mut n), MpesStatus::Ok);
    }
    assert!((r - 207_863_327.152_749_74).abs() / r < 1e-12);
    assert!((n - 2.0).abs() < 1e-9);
}

#[test]
fn errors_carry_codes_and_messages() {
    let p = mpes_device_params_default();
    let mut r = 0.0;
    unsafe {
        assert_eq!(
            mpes_resistance_after_pulses(p, 0.5, 0.1, &mut r),
            MpesStatus::Domain
        );
        assert!(!last_error().is_empty());
        assert_eq!(
            mpes_resistance_after_pulses(p, 2.0, 0.1, ptr::null_mut()),
            MpesStatus::NullPointer
        );
        assert!(last_error().contains("out_r"));
    }
}

#[test]
fn memristor_handle_pulses_down() {
    let p = mpes_device_params_default();
    let mut dev = ptr::null_mut();
    unsafe {
        assert_eq!(mpes_memristor_new(p, 1e8, 1, &mut dev), MpesStatus::Ok);
        let mut before = 0.0;
        let mut after = 0.0;
        let mut applied = 0;
        mpes_memristor_resistance(dev, &mut before);
        assert_eq!(mpes_memristor_pulse(dev, 0.1, 0.0, &mut applied), MpesStatus::Ok);
        mpes_memristor_resistance(dev, &mut after);
        assert_eq!(applied, 1);
        assert!(after < before);
        mpes_memristor_free(dev);
        mpes_memristor_free(ptr::null_mut());
    }
}

#[test]
fn synapse_array_weights_and_bounds() {
    let p = mpes_device_params_default();
    let mut arr = ptr::null_mut();
    unsafe {
        assert_eq!(
            mpes_synapse_array_new(3, 2, 1e4, p, 1e8, 0.0, 5, &mut arr),
            MpesStatus::Ok
        );
        let mut w = [1.0; 6];
        assert_eq!(mpes_synapse_array_weights(arr, w.as_mut_ptr(), 6), MpesStatus::Ok);
        assert_eq!(w, [0.0; 6]);
        assert_eq!(mpes_synapse_array_pulse(arr, 1, 2, 1, 0.1, 0.0), MpesStatus::Ok);
        mpes_synapse_array_weights(arr, w.as_mut_ptr(), 6);
        assert!(w[5] > 0.0);
        assert_eq!(&w[..5], &[0.0; 5]);
        assert_eq!(
            mpes_synapse_array_pulse(arr, 2, 0, 1, 0.1, 0.0),
            MpesStatus::InvalidArgument
        );
        assert_eq!(
            mpes_synapse_array_weights(arr, w.as_mut_ptr(), 4),
            MpesStatus::DimensionMismatch
        );
        mpes_synapse_array_free(arr);
    }
}

#[test]
fn config_and_run() {
    let cfg = mpes_config_new();
    let set = |k: &str, v: &str| {
        let k = CString::new(k).unwrap();
        let v = CString::new(v).unwrap();
        unsafe { mpes_config_set(cfg, k.as_ptr(), v.as_ptr()) }
    };
    assert_eq!(set("neurons", "5"), MpesStatus::Ok);
    assert_eq!(set("sim_time", "0.5"), MpesStatus::Ok);
    assert_eq!(set("learn_time", "0.3"), MpesStatus::Ok);
    assert_eq!(set("rule", "perceptron"), MpesStatus::Config);
    assert_eq!(set("no_such_key", "1"), MpesStatus::Config);
    let mut res = ptr::null_mut();
    let mut m = MpesMetrics {
        mse: -1.0,
        spearman_rho: 0.0,
        ratio: 0.0,
    };
    let mut pulses = 0;
    unsafe {
        assert_eq!(mpes_run(cfg, &mut res), MpesStatus::Ok);
        assert_eq!(mpes_run_metrics(res, &mut m), MpesStatus::Ok);
        assert_eq!(mpes_run_pulse_count(res, &mut pulses), MpesStatus::Ok);
        mpes_run_result_free(res);
        mpes_config_free(cfg);
    }
    assert!(m.mse >= 0.0 && m.mse.is_finite());
    assert!(pulses > 0);
}

#[test]
fn metrics_and_signal() {
    let r = [0.0, 1.0, 2.0, 3.0];
    let e = [0.0, 1.0, 2.0, 5.0];
    let mut m = MpesMetrics {
        mse: 0.0,
        spearman_rho: 0.0,
        ratio: 0.0,
    };
    let mut s = [0.0; 3];
    unsafe {
        assert_eq!(mpes_metrics(r.as_ptr(), e.as_ptr(), 4, 1, &mut m), MpesStatus::Ok);
        assert_eq!(mpes_metrics(r.as_ptr(), e.as_ptr(), 4, 3, &mut m), MpesStatus::InvalidArgument);
        assert_eq!(mpes_sine_signal(1.0, 3, s.as_mut_ptr()), MpesStatus::Ok);
    }
    assert_eq!(m.mse, 1.0);
    assert!((s[0] - 1.0).abs() < 1e-15);
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/mpes.h");
    let src = include_str!("../src/lib.rs");
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 18);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}
