use std::ffi::CStr;
use std::ptr;

use qlm_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    let n = unsafe { qlm_last_error(buf.as_mut_ptr(), buf.len()) };
    if n == 0 {
        return String::new();
    }
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

const FIG3: QlmParams = QlmParams {
    kappa: 1.0,
    mass: 3.0,
    efield: 6.0,
    plaq: 0.0,
};

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(qlm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn lattice_errors_set_message() {
    let mut lat = ptr::null_mut();
    let s = unsafe { qlm_lattice_new(3, 3, &mut lat) };
    assert_eq!(s, QlmStatus::Geometry);
    assert!(lat.is_null());
    assert!(!last_error().is_empty());
    let s = unsafe { qlm_lattice_new(2, 3, ptr::null_mut()) };
    assert_eq!(s, QlmStatus::NullPointer);
    let s = unsafe { qlm_lattice_new(2, 3, &mut lat) };
    assert_eq!(s, QlmStatus::Ok);
    assert_eq!(last_error(), "");
    assert_eq!(unsafe { qlm_lattice_qubit_count(lat) }, 13);
    unsafe { qlm_lattice_free(lat) };
}

#[test]
fn explicit_charges() {
    let mut lat = ptr::null_mut();
    assert_eq!(unsafe { qlm_lattice_new_with_charges(2, 2, 0, 0, 1, 0, &mut lat) }, QlmStatus::Ok);
    unsafe { qlm_lattice_free(lat) };
    assert_eq!(
        unsafe { qlm_lattice_new_with_charges(2, 2, 0, 0, 1, 1, &mut lat) },
        QlmStatus::Geometry
    );
}

#[test]
fn sector_round_trip() {
    let mut lat = ptr::null_mut();
    let mut sec = ptr::null_mut();
    unsafe {
        assert_eq!(qlm_lattice_new(4, 3, &mut lat), QlmStatus::Ok);
        assert_eq!(qlm_sector_enumerate(lat, false, &mut sec), QlmStatus::Ok);
        let n = qlm_sector_len(sec);
        assert_eq!(n, 1826);
        for i in [0, 1, n / 2, n - 1] {
            let mut c = 0u64;
            assert_eq!(qlm_sector_state(sec, i, &mut c), QlmStatus::Ok);
            let mut j = usize::MAX;
            assert_eq!(qlm_sector_index_of(sec, c, &mut j), QlmStatus::Ok);
            assert_eq!(i, j);
        }
        let mut c = 0u64;
        assert_eq!(qlm_sector_state(sec, n, &mut c), QlmStatus::InvalidArgument);
        let mut j = 0usize;
        assert_eq!(qlm_sector_index_of(sec, u64::MAX, &mut j), QlmStatus::InvalidArgument);
        qlm_sector_free(sec);
        qlm_lattice_free(lat);
    }
}

#[test]
fn resources_match_core() {
    let mut lat = ptr::null_mut();
    let mut r = QlmResources::default();
    unsafe {
        assert_eq!(qlm_lattice_new(4, 3, &mut lat), QlmStatus::Ok);
        assert_eq!(qlm_compile_resources(lat, FIG3, 0.1, &mut r), QlmStatus::Ok);
        qlm_lattice_free(lat);
    }
    assert_eq!((r.n_qubits, r.n2q, r.depth2q), (29, 119, 28));
}

#[test]
fn simulation_engines_agree_and_sample() {
    let mut lat = ptr::null_mut();
    let mut kry = ptr::null_mut();
    let mut tro = ptr::null_mut();
    unsafe {
        assert_eq!(qlm_lattice_new(4, 3, &mut lat), QlmStatus::Ok);
        assert_eq!(qlm_simulation_new(lat, FIG3, &mut kry), QlmStatus::Ok);
        assert_eq!(qlm_simulation_new(lat, FIG3, &mut tro), QlmStatus::Ok);
        qlm_lattice_free(lat);
        assert_eq!(qlm_simulation_sector_dim(kry), 1826);

        let mut o0 = QlmObservables::default();
        assert_eq!(qlm_simulation_observables(kry, &mut o0), QlmStatus::Ok);
        assert_eq!(o0.p_init, 1.0);
        for _ in 0..40 {
            assert_eq!(qlm_simulation_step_krylov(kry, 0.0125, 1e-10), QlmStatus::Ok);
            assert_eq!(qlm_simulation_step_trotter(tro, 0.0125), QlmStatus::Ok);
        }
        let mut ok = QlmObservables::default();
        let mut ot = QlmObservables::default();
        qlm_simulation_observables(kry, &mut ok);
        qlm_simulation_observables(tro, &mut ot);
        assert!((ok.t - 0.5).abs() < 1e-12);
        assert!((ok.norm - 1.0).abs() < 1e-12);
        assert!((ok.energy - o0.energy).abs() < 1e-8);
        assert!(ok.p_init < 1.0);
        assert!((ok.p_init - ot.p_init).abs() < 0.05);

        let mut n = vec![0.0; 12];
        assert_eq!(qlm_simulation_charge_density(kry, n.as_mut_ptr(), 12), QlmStatus::Ok);
        assert!(n.iter().all(|x| (0.0..=1.0).contains(x)));
        assert_eq!(
            qlm_simulation_charge_density(kry, n.as_mut_ptr(), 11),
            QlmStatus::InvalidArgument
        );
        assert_eq!(qlm_simulation_step_krylov(kry, 0.1, 0.0), QlmStatus::InvalidArgument);

        let mut shots = ptr::null_mut();
        assert_eq!(qlm_simulation_sample(kry, 500, 3, &mut shots), QlmStatus::Ok);
        assert_eq!(qlm_shots_total(shots), 500);
        let d = qlm_shots_distinct(shots);
        let mut sum = 0;
        let mut prev = None;
        for i in 0..d {
            let (mut c, mut k) = (0u64, 0u64);
            assert_eq!(qlm_shots_entry(shots, i, &mut c, &mut k), QlmStatus::Ok);
            assert!(prev.map_or(true, |p| p < c));
            prev = Some(c);
            sum += k;
        }
        assert_eq!(sum, 500);

        let mut kept = ptr::null_mut();
        let mut ret = 0.0;
        assert_eq!(qlm_shots_post_select(shots, kry, 0, &mut kept, &mut ret), QlmStatus::Ok);
        assert_eq!(ret, 1.0);
        assert_eq!(qlm_shots_total(kept), 500);
        qlm_shots_free(kept);
        assert_eq!(
            qlm_shots_post_select(shots, kry, 7, &mut kept, &mut ret),
            QlmStatus::InvalidArgument
        );
        qlm_shots_free(shots);
        qlm_simulation_free(kry);
        qlm_simulation_free(tro);
    }
}

#[test]
fn null_handles_are_rejected() {
    unsafe {
        let mut sec = ptr::null_mut();
        assert_eq!(qlm_sector_enumerate(ptr::null(), true, &mut sec), QlmStatus::NullPointer);
        assert_eq!(qlm_sector_len(ptr::null()), 0);
        assert_eq!(qlm_simulation_step_trotter(ptr::null_mut(), 0.1), QlmStatus::NullPointer);
        qlm_lattice_free(ptr::null_mut());
        qlm_sector_free(ptr::null_mut());
        qlm_shots_free(ptr::null_mut());
        qlm_simulation_free(ptr::null_mut());
    }
    assert!(last_error().contains("null"));
}

#[test]
fn header_declares_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qlm.h")).unwrap();
    for f in [
        "qlm_last_error",
        "qlm_lattice_new",
        "qlm_sector_enumerate",
        "qlm_compile_resources",
        "qlm_simulation_step_krylov",
        "qlm_shots_post_select",
        "QLM_STATUS_NULL_POINTER",
    ] {
        assert!(h.contains(f), "{f} missing from header");
    }
}
