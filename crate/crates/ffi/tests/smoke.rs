//! Drives the C ABI exactly as a foreign caller would: through raw
//! pointers, status codes, and the thread-local error channel.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use cpsg_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 512];
    let n = cpsg_last_error_message(buf.as_mut_ptr() as *mut c_char, buf.len());
    buf.truncate(n.min(buf.len() - 1));
    String::from_utf8(buf).expect("error messages are UTF-8")
}

#[test]
fn version_is_a_c_string() {
    let ptr = cpsg_version();
    assert!(!ptr.is_null());
    let text = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap();
    assert_eq!(text, env!("CARGO_PKG_VERSION"));
}

#[test]
fn builtin_scenario_roundtrip_and_info() {
    unsafe {
        let name = CString::new("harvey_synth").unwrap();
        let mut sc: *mut CpsgScenario = ptr::null_mut();
        assert_eq!(cpsg_scenario_builtin(name.as_ptr(), &mut sc), CpsgStatus::Ok);
        assert!(!sc.is_null());

        let mut info = CpsgScenarioInfo {
            dt: 0.0,
            horizon: 0,
            window_len: 0,
            seed: 0,
            has_observed: false,
        };
        assert_eq!(cpsg_scenario_info(sc, &mut info), CpsgStatus::Ok);
        assert_eq!(info.horizon, 17);
        assert_eq!(info.window_len, 6);
        assert_eq!(info.seed, 42);
        assert_eq!(info.dt, 1.0);
        assert!(info.has_observed);

        cpsg_scenario_free(sc);
    }
}

#[test]
fn unknown_builtin_reports_invalid_input() {
    unsafe {
        let name = CString::new("no_such_storm").unwrap();
        let mut sc: *mut CpsgScenario = ptr::null_mut();
        assert_eq!(
            cpsg_scenario_builtin(name.as_ptr(), &mut sc),
            CpsgStatus::InvalidInput
        );
        assert!(sc.is_null());
        assert!(last_error().contains("no_such_storm"), "got: {}", last_error());
    }
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        let mut sc: *mut CpsgScenario = ptr::null_mut();
        assert_eq!(
            cpsg_scenario_builtin(ptr::null(), &mut sc),
            CpsgStatus::NullArgument
        );
        let name = CString::new("harvey_synth").unwrap();
        assert_eq!(
            cpsg_scenario_builtin(name.as_ptr(), ptr::null_mut()),
            CpsgStatus::NullArgument
        );
        assert!(!last_error().is_empty());
        // Frees tolerate null.
        cpsg_scenario_free(ptr::null_mut());
        cpsg_params_free(ptr::null_mut());
        cpsg_run_free(ptr::null_mut());
    }
}

#[test]
fn missing_file_reports_io_with_path() {
    unsafe {
        let path = CString::new("/definitely/not/here.json").unwrap();
        let mut sc: *mut CpsgScenario = ptr::null_mut();
        assert_eq!(cpsg_scenario_load(path.as_ptr(), &mut sc), CpsgStatus::Io);
        assert!(last_error().contains("not/here.json"), "got: {}", last_error());

        // A short buffer truncates but still reports the full length.
        let full_len = cpsg_last_error_message(ptr::null_mut(), 0);
        let mut tiny = [0u8; 8];
        let reported = cpsg_last_error_message(tiny.as_mut_ptr() as *mut c_char, tiny.len());
        assert_eq!(reported, full_len);
        assert_eq!(tiny[7], 0, "truncated copy is still NUL-terminated");
    }
}

#[test]
fn train_replay_and_accessors() {
    unsafe {
        let name = CString::new("harvey_synth").unwrap();
        let mut sc: *mut CpsgScenario = ptr::null_mut();
        assert_eq!(cpsg_scenario_builtin(name.as_ptr(), &mut sc), CpsgStatus::Ok);
        let mut params: *mut CpsgParams = ptr::null_mut();
        assert_eq!(cpsg_params_reference(&mut params), CpsgStatus::Ok);

        let mut open: *mut CpsgRun = ptr::null_mut();
        assert_eq!(cpsg_open_loop(sc, params, &mut open), CpsgStatus::Ok);
        let open_fear = cpsg_run_mean_fear(open);

        let mut trained: *mut CpsgRun = ptr::null_mut();
        assert_eq!(
            cpsg_train(sc, params, cpsg_hyper_default(), 42, &mut trained),
            CpsgStatus::Ok
        );
        assert_eq!(cpsg_run_len(trained), 18);

        let mut x0 = [0.0; 10];
        assert_eq!(cpsg_run_state(trained, 0, x0.as_mut_ptr()), CpsgStatus::Ok);
        assert!((x0[0] - 0.62).abs() < 1e-12, "initial fear is the scenario's");
        assert_eq!(
            cpsg_run_state(trained, 18, x0.as_mut_ptr()),
            CpsgStatus::InvalidInput,
            "out-of-range step is rejected"
        );

        let mut u = [0.0; 3];
        assert_eq!(cpsg_run_control(trained, 0, u.as_mut_ptr()), CpsgStatus::Ok);
        assert!(u.iter().all(|v| v.is_finite() && *v >= 0.0));

        let mut costs = [0.0; 3];
        assert_eq!(cpsg_run_costs(trained, costs.as_mut_ptr()), CpsgStatus::Ok);
        assert!(costs.iter().all(|c| c.is_finite() && *c > 0.0));

        // Replaying the learned policies beats the open loop on mean fear.
        let mut closed: *mut CpsgRun = ptr::null_mut();
        assert_eq!(cpsg_replay(trained, sc, params, &mut closed), CpsgStatus::Ok);
        let closed_fear = cpsg_run_mean_fear(closed);
        assert!(
            closed_fear < open_fear,
            "closed {closed_fear:.4} vs open {open_fear:.4}"
        );

        // Replay output has no weights, so replaying it again fails cleanly.
        let mut again: *mut CpsgRun = ptr::null_mut();
        assert_eq!(
            cpsg_replay(closed, sc, params, &mut again),
            CpsgStatus::InvalidInput
        );

        // RMSE against the bundled observed block is finite and small-ish.
        let rmse = cpsg_run_rmse_vs_observed(open, sc);
        assert!(rmse.is_finite() && rmse < 1.0, "rmse = {rmse}");

        let csv_path = std::env::temp_dir().join(format!("cpsg_ffi_{}.csv", std::process::id()));
        let c_csv = CString::new(csv_path.to_str().unwrap()).unwrap();
        assert_eq!(cpsg_run_write_states_csv(trained, c_csv.as_ptr()), CpsgStatus::Ok);
        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert!(text.starts_with("t,x1,"));
        assert_eq!(text.lines().count(), 19);
        std::fs::remove_file(&csv_path).ok();

        cpsg_run_free(again);
        cpsg_run_free(closed);
        cpsg_run_free(trained);
        cpsg_run_free(open);
        cpsg_params_free(params);
        cpsg_scenario_free(sc);
    }
}

#[test]
fn training_is_deterministic_through_the_c_surface() {
    unsafe {
        let name = CString::new("irma_synth").unwrap();
        let mut sc: *mut CpsgScenario = ptr::null_mut();
        assert_eq!(cpsg_scenario_builtin(name.as_ptr(), &mut sc), CpsgStatus::Ok);
        let mut params: *mut CpsgParams = ptr::null_mut();
        assert_eq!(cpsg_params_reference(&mut params), CpsgStatus::Ok);

        let mut runs: Vec<Vec<[f64; 10]>> = Vec::new();
        for _ in 0..2 {
            let mut run: *mut CpsgRun = ptr::null_mut();
            assert_eq!(
                cpsg_train(sc, params, cpsg_hyper_default(), 42, &mut run),
                CpsgStatus::Ok
            );
            let mut states = Vec::new();
            for k in 0..cpsg_run_len(run) {
                let mut x = [0.0; 10];
                assert_eq!(cpsg_run_state(run, k, x.as_mut_ptr()), CpsgStatus::Ok);
                states.push(x);
            }
            runs.push(states);
            cpsg_run_free(run);
        }
        assert_eq!(runs[0].len(), runs[1].len());
        for (a, b) in runs[0].iter().zip(&runs[1]) {
            for i in 0..10 {
                assert_eq!(a[i].to_bits(), b[i].to_bits());
            }
        }
        cpsg_params_free(params);
        cpsg_scenario_free(sc);
    }
}

#[test]
fn invalid_hyper_is_rejected_not_fatal() {
    unsafe {
        let name = CString::new("harvey_synth").unwrap();
        let mut sc: *mut CpsgScenario = ptr::null_mut();
        assert_eq!(cpsg_scenario_builtin(name.as_ptr(), &mut sc), CpsgStatus::Ok);
        let mut params: *mut CpsgParams = ptr::null_mut();
        assert_eq!(cpsg_params_reference(&mut params), CpsgStatus::Ok);

        // Actor rate above critic rate violates the two-timescale order.
        let bad = CpsgHyper { alpha_c: 0.1, alpha_a: 0.5, t_ex: 12.0, n_bar: 0.3 };
        let mut run: *mut CpsgRun = ptr::null_mut();
        assert_eq!(cpsg_train(sc, params, bad, 42, &mut run), CpsgStatus::InvalidInput);
        assert!(run.is_null());
        assert!(last_error().contains("alpha_c"), "got: {}", last_error());

        cpsg_params_free(params);
        cpsg_scenario_free(sc);
    }
}
