use std::ffi::CStr;
use std::ptr;

use papr_ffi::*;

fn params(delta: f64, rho: f64, lambda: f64, p_max: f64, sigma2: f64) -> *mut PaprParams {
    let mut p = ptr::null_mut();
    let st = unsafe { papr_params_new(delta, rho, lambda, p_max, sigma2, &mut p) };
    assert_eq!(st, PaprStatus::Ok);
    assert!(!p.is_null());
    p
}

fn last_error() -> Option<String> {
    let e = papr_last_error();
    (!e.is_null()).then(|| unsafe { CStr::from_ptr(e) }.to_string_lossy().into_owned())
}

#[test]
fn report_matches_core() {
    let p = params(1.5, 1.0, 0.01, 1.0, 0.01);
    let mut r = PaprReport::default();
    assert_eq!(unsafe { papr_report(p, &mut r) }, PaprStatus::Ok);
    let core = papr_core::full_report(&papr_core::SystemParams::new(1.5, 1.0, 0.01, 1.0, 0.01).unwrap()).unwrap();
    assert_eq!(r.pb, core.pb_star);
    assert_eq!(r.pe, core.pe_star);
    assert_eq!(r.beta_star, core.saddle.beta_star);
    assert!(r.sinr_lb <= r.sinr_up);
    assert!(last_error().is_none());
    unsafe { papr_params_free(p) };
}

#[test]
fn errors_map_to_status_codes() {
    let mut p = ptr::null_mut();
    let st = unsafe { papr_params_new(-1.0, 1.0, 0.0, 1.0, 0.0, &mut p) };
    assert_eq!(st, PaprStatus::InvalidArgument);
    assert!(p.is_null());
    assert!(last_error().unwrap().contains("delta"));

    let p = params(0.5, 1.0, 0.0, 1.0, 0.01);
    assert!(!unsafe { papr_params_is_feasible(p) });
    let mut r = PaprReport::default();
    assert_eq!(unsafe { papr_report(p, &mut r) }, PaprStatus::Infeasible);
    let mut l = PaprLimit::default();
    assert_eq!(unsafe { papr_limit(p, PaprRegime::Zf as i32, &mut l) }, PaprStatus::Infeasible);
    assert_eq!(unsafe { papr_limit(p, 99, &mut l) }, PaprStatus::InvalidArgument);
    unsafe { papr_params_free(p) };

    let p = params(1.5, 1.0, 0.01, 1.0, 0.01);
    let mut t = PaprTune::default();
    assert_eq!(unsafe { papr_tune_rho(p, 2.0, 0.0, &mut t) }, PaprStatus::TargetUnreachable);
    assert_eq!(unsafe { papr_report(p, ptr::null_mut()) }, PaprStatus::InvalidArgument);
    assert_eq!(unsafe { papr_report(ptr::null(), &mut r) }, PaprStatus::InvalidArgument);
    unsafe { papr_params_free(p) };
    unsafe { papr_params_free(ptr::null_mut()) };

    let s = unsafe { CStr::from_ptr(papr_status_string(PaprStatus::Singular as i32)) };
    assert_eq!(s.to_str().unwrap(), "singular");
    let s = unsafe { CStr::from_ptr(papr_status_string(1234)) };
    assert_eq!(s.to_str().unwrap(), "unknown status");
}

#[test]
fn tune_round_trip() {
    let p = params(1.5, 1.0, 0.01, 1.0, 0.01);
    let mut t = PaprTune::default();
    assert_eq!(unsafe { papr_tune_rho(p, 0.3, 1e-9, &mut t) }, PaprStatus::Ok);
    let mut q = ptr::null_mut();
    assert_eq!(unsafe { papr_params_with_rho(p, t.rho, &mut q) }, PaprStatus::Ok);
    let mut r = PaprReport::default();
    assert_eq!(unsafe { papr_report(q, &mut r) }, PaprStatus::Ok);
    assert!((r.pb - 0.3).abs() < 1e-8);
    unsafe {
        papr_params_free(q);
        papr_params_free(p);
    }
}

#[test]
fn limits_and_s_star() {
    let p = params(2.0, 1.0, 0.5, f64::INFINITY, 0.01);
    let mut l = PaprLimit::default();
    assert_eq!(unsafe { papr_limit(p, PaprRegime::Rzf as i32, &mut l) }, PaprStatus::Ok);
    let mut s = 0.0;
    assert_eq!(unsafe { papr_rzf_s_star(2.0, 0.5, &mut s) }, PaprStatus::Ok);
    assert_eq!(l.s_star, s);
    let mut r = PaprReport::default();
    assert_eq!(unsafe { papr_report(p, &mut r) }, PaprStatus::Ok);
    assert!((r.pb - l.pb).abs() < 1e-8 * l.pb);
    assert_eq!(unsafe { papr_limit(p, PaprRegime::LargeDelta as i32, &mut l) }, PaprStatus::Ok);
    assert!(l.s_star.is_nan());
    assert_eq!(unsafe { papr_rzf_s_star(2.0, 0.0, &mut s) }, PaprStatus::InvalidArgument);
    unsafe { papr_params_free(p) };
}

#[test]
fn precode_row_major_channel() {
    // 2 users, 3 antennas: the box binds on the unconstrained RZF solution.
    let h = [1.0, 0.5, -0.2, 0.3, -1.0, 0.8];
    let s = [1.0, -1.0];
    let p = params(2.0 / 3.0, 4.0, 0.1, 0.25, 0.0);
    let mut x = [0.0; 3];
    let mut info = PaprSolveInfo::default();
    let st = unsafe {
        papr_precode(p, h.as_ptr(), s.as_ptr(), 2, 3, PaprMethod::LimitedPapr as i32, 0.0, 0, x.as_mut_ptr(), &mut info)
    };
    assert_eq!(st, PaprStatus::Ok);
    assert!(x.iter().all(|v| v.abs() <= 0.5 + 1e-12));
    assert!(info.kkt_residual <= 1e-8);

    let inst = papr_core::ChannelInstance::new(
        nalgebra::DMatrix::from_row_slice(2, 3, &h),
        nalgebra::DVector::from_column_slice(&s),
    )
    .unwrap();
    let sp = papr_core::SystemParams::new(2.0 / 3.0, 4.0, 0.1, 0.25, 0.0).unwrap();
    let sol = papr_core::precoder::limited_papr_precode(&inst, &sp, papr_core::SolverOptions::default()).unwrap();
    assert_eq!(&x[..], sol.x.as_slice());
    assert_eq!(info.objective, sol.objective);

    let bad_s = [1.0, 0.0];
    let st = unsafe {
        papr_precode(p, h.as_ptr(), bad_s.as_ptr(), 2, 3, 0, 0.0, 0, x.as_mut_ptr(), ptr::null_mut())
    };
    assert_eq!(st, PaprStatus::InvalidArgument);
    let st = unsafe { papr_precode(p, h.as_ptr(), s.as_ptr(), 2, 3, 7, 0.0, 0, x.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(st, PaprStatus::InvalidArgument);
    let st = unsafe { papr_precode(p, h.as_ptr(), s.as_ptr(), 2, 3, PaprMethod::Zf as i32, 0.0, 0, x.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(st, PaprStatus::Singular);
    unsafe { papr_params_free(p) };
}

#[test]
fn precode_budget_exhaustion_returns_last_iterate() {
    let inst = papr_core::monte_carlo::generate_instance(8, 12, 3);
    let h: Vec<f64> = inst.h.transpose().as_slice().to_vec();
    let s = inst.s.as_slice();
    let p = params(1.5, 1.0, 0.0, 0.1, 0.0);
    let mut x = [f64::NAN; 8];
    let mut info = PaprSolveInfo::default();
    let st = unsafe { papr_precode(p, h.as_ptr(), s.as_ptr(), 12, 8, 0, 1e-15, 3, x.as_mut_ptr(), &mut info) };
    assert_eq!(st, PaprStatus::NotConverged);
    assert!(x.iter().all(|v| v.is_finite()));
    assert_eq!(info.iterations, 3);
    assert!(info.kkt_residual > 1e-15);
    assert!(last_error().is_some());
    unsafe { papr_params_free(p) };
}

#[test]
fn experiment_handle() {
    let p = params(1.5, 1.0, 0.01, 1.0, 0.01);
    let mut e = ptr::null_mut();
    let st = unsafe { papr_experiment_run(p, 32, 4, 11, PaprMethod::LimitedPapr as i32, 0.0, 0, &mut e) };
    assert_eq!(st, PaprStatus::Ok);
    assert_eq!(unsafe { papr_experiment_trial_count(e) }, 4);
    let mut sum = PaprSummary::default();
    assert_eq!(unsafe { papr_experiment_summary(e, PaprMetric::Pb as i32, &mut sum) }, PaprStatus::Ok);
    let mut mean = 0.0;
    for i in 0..4 {
        let mut t = PaprTrial::default();
        assert_eq!(unsafe { papr_experiment_trial(e, i, &mut t) }, PaprStatus::Ok);
        assert_eq!(t.seed, 11 + i as u64);
        mean += t.pb / 4.0;
    }
    assert!((sum.mean - mean).abs() < 1e-14);
    assert!(sum.theory.is_finite() && sum.z.is_finite());
    let mut t = PaprTrial::default();
    assert_eq!(unsafe { papr_experiment_trial(e, 4, &mut t) }, PaprStatus::InvalidArgument);
    let mut d = PaprDistribution::default();
    assert_eq!(unsafe { papr_experiment_distribution(e, &mut d) }, PaprStatus::Ok);
    assert!(d.wasserstein2_self > 0.0);
    unsafe { papr_experiment_free(e) };

    let mut e = ptr::null_mut();
    let st = unsafe { papr_experiment_run(p, 32, 3, 0, PaprMethod::OneBit as i32, 0.0, 0, &mut e) };
    assert_eq!(st, PaprStatus::Ok);
    assert_eq!(unsafe { papr_experiment_summary(e, PaprMetric::Ber as i32, &mut sum) }, PaprStatus::Ok);
    assert!(sum.theory.is_nan());
    assert_eq!(unsafe { papr_experiment_distribution(e, &mut d) }, PaprStatus::Unavailable);
    unsafe { papr_experiment_free(e) };

    let mut e = ptr::null_mut();
    let st = unsafe { papr_experiment_run(p, 32, 1, 0, 0, 0.0, 0, &mut e) };
    assert_eq!(st, PaprStatus::InsufficientData);
    assert!(e.is_null());
    unsafe { papr_params_free(p) };
}
