use std::ffi::{CStr, CString};
use std::ptr;

use abcs_ffi::*;

const TWO_ARM: &str = r#"{"K": 1, "J": 1, "family": "bernoulli", "means": [[0.3], [0.6]], "alpha": [1.0], "beta": [1.0]}"#;
const THREE_BY_THREE: &str = include_str!("../../core/instances/three_by_three.json");

fn instance(json: &str) -> *mut AbcsInstance {
    let s = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { abcs_instance_from_json(s.as_ptr(), &mut out) }, AbcsStatus::Ok);
    assert!(!out.is_null());
    out
}

fn last_error() -> String {
    let p = abcs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn shape_and_answer_set() {
    let inst = instance(THREE_BY_THREE);
    let (mut arms, mut subpops) = (0, 0);
    unsafe {
        assert_eq!(abcs_instance_shape(inst, &mut arms, &mut subpops), AbcsStatus::Ok);
        assert_eq!((arms, subpops), (3, 3));
        let mut buf = [0usize; 2];
        let mut len = 0;
        assert_eq!(abcs_instance_answer_set(inst, buf.as_mut_ptr(), 2, &mut len), AbcsStatus::Ok);
        assert_eq!(&buf[..len], &[1]);
        abcs_instance_free(inst);
    }
}

#[test]
fn bad_json_reports_message() {
    let s = CString::new("{\"K\": 1}").unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { abcs_instance_from_json(s.as_ptr(), &mut out) };
    assert_eq!(status, AbcsStatus::InvalidInstance);
    assert!(out.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_handles_are_rejected() {
    let mut r = AbcsOracleResult { tstar: 0.0, lower_value: 0.0, upper_value: 0.0, iterations: 0, converged: false };
    let status = unsafe { abcs_oracle_solve(ptr::null(), AbcsMode::Active, 0.0, 0, &mut r, ptr::null_mut(), 0) };
    assert_eq!(status, AbcsStatus::NullPointer);
    assert!(last_error().contains("instance"));
    unsafe {
        abcs_instance_free(ptr::null_mut());
        abcs_policy_free(ptr::null_mut());
    }
}

#[test]
fn oracle_matches_core() {
    let inst = instance(THREE_BY_THREE);
    let mut r = AbcsOracleResult { tstar: 0.0, lower_value: 0.0, upper_value: 0.0, iterations: 0, converged: false };
    let mut w = [0.0; 9];
    let status = unsafe { abcs_oracle_solve(inst, AbcsMode::Agnostic, 1e-4, 0, &mut r, w.as_mut_ptr(), w.len()) };
    assert_eq!(status, AbcsStatus::Ok);
    let core = abcs::Instance::from_json_str(THREE_BY_THREE).unwrap();
    let expect = abcs::oracle::solve(&core, abcs::Mode::Agnostic, &Default::default()).unwrap();
    assert!((r.tstar - expect.tstar).abs() <= 1e-9 * expect.tstar);
    assert!(r.converged);
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);

    let mut small = [0.0; 4];
    let status = unsafe { abcs_oracle_solve(inst, AbcsMode::Agnostic, 1e-4, 0, &mut r, small.as_mut_ptr(), small.len()) };
    assert_eq!(status, AbcsStatus::BufferTooSmall);
    unsafe { abcs_instance_free(inst) };
}

#[test]
fn oblivious_needs_matching_weights() {
    let inst = instance(THREE_BY_THREE);
    let mut r = AbcsOracleResult { tstar: 0.0, lower_value: 0.0, upper_value: 0.0, iterations: 0, converged: false };
    let status = unsafe { abcs_oracle_solve(inst, AbcsMode::Oblivious, 0.0, 0, &mut r, ptr::null_mut(), 0) };
    assert_ne!(status, AbcsStatus::Ok);
    unsafe { abcs_instance_free(inst) };
}

#[test]
fn policy_loop_identifies_better_arm() {
    let inst = instance(TWO_ARM);
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(abcs_policy_new(inst, AbcsPolicyKind::TrackAndStop, AbcsMode::Agnostic, &mut p), AbcsStatus::Ok);
        // Deterministic outcome stream with empirical means 0.3 and 0.6.
        let pattern = [[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0]];
        let mut seen = [0usize; 2];
        let mut delta_hat = 1.0;
        let mut rounds = 0;
        while delta_hat > 0.05 && rounds < 100_000 {
            let (mut arm, mut sub) = (0, 0);
            assert_eq!(abcs_policy_decide(p, -1, &mut arm, &mut sub), AbcsStatus::Ok);
            assert_eq!(sub, -1);
            let x = pattern[arm][seen[arm] % 10];
            seen[arm] += 1;
            assert_eq!(abcs_policy_observe(p, arm, 0, x), AbcsStatus::Ok);
            assert_eq!(abcs_policy_risk(p, ptr::null_mut(), &mut delta_hat), AbcsStatus::Ok);
            rounds += 1;
        }
        assert!(delta_hat <= 0.05, "{rounds} rounds");
        let mut rec = [9usize; 2];
        let mut len = 0;
        assert_eq!(abcs_policy_recommendation(p, rec.as_mut_ptr(), 2, &mut len), AbcsStatus::Ok);
        assert_eq!(&rec[..len], &[1]);
        abcs_policy_free(p);
        abcs_instance_free(inst);
    }
}

#[test]
fn wrong_calls_are_reported() {
    let inst = instance(THREE_BY_THREE);
    let mut p = ptr::null_mut();
    unsafe {
        let status = abcs_policy_new(inst, AbcsPolicyKind::BestChallenger, AbcsMode::Active, &mut p);
        assert_eq!(status, AbcsStatus::Unsupported);
        assert!(p.is_null());
        assert_eq!(abcs_policy_new(inst, AbcsPolicyKind::TrackAndStop, AbcsMode::Proportional, &mut p), AbcsStatus::Ok);
        let mut arm = 0;
        assert_eq!(abcs_policy_decide(p, -1, &mut arm, ptr::null_mut()), AbcsStatus::InvalidArgument);
        assert_eq!(abcs_policy_decide(p, 7, &mut arm, ptr::null_mut()), AbcsStatus::InvalidArgument);
        assert_eq!(abcs_policy_decide(p, 2, &mut arm, ptr::null_mut()), AbcsStatus::Ok);
        assert_eq!(abcs_policy_observe(p, arm, 2, 0.5), AbcsStatus::InvalidArgument);
        assert_eq!(abcs_policy_observe(p, 5, 2, 1.0), AbcsStatus::InvalidArgument);
        abcs_policy_free(p);
        abcs_instance_free(inst);
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = include_str!("../include/abcs.h");
    for name in [
        "abcs_last_error",
        "abcs_instance_from_json",
        "abcs_instance_free",
        "abcs_instance_shape",
        "abcs_instance_answer_set",
        "abcs_oracle_solve",
        "abcs_policy_new",
        "abcs_policy_free",
        "abcs_policy_decide",
        "abcs_policy_observe",
        "abcs_policy_risk",
        "abcs_policy_recommendation",
        "ABCS_STATUS_OK",
        "typedef struct AbcsInstance AbcsInstance",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    // Test binaries live in target/<profile>/deps.
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    let lib = lib_dir.join("libabcs_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let status = std::process::Command::new(cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let tstar: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    // Two arms, unit variances, both gaps 1: T* = 2 (1 + 1)^2 / 1.
    assert!((tstar - 8.0).abs() < 1e-6, "{tstar}");
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
