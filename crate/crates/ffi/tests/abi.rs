use secbeam_ffi::*;
use std::ffi::CStr;
use std::process::Command;
use std::ptr;

fn system(n_tx: usize, noise: &[f64], outage: &[f64]) -> SecbeamSystem {
    SecbeamSystem {
        n_tx,
        n_eves: noise.len(),
        noise_bob: 1.0,
        noise_eves: noise.as_ptr(),
        power: 100.0,
        outage: outage.as_ptr(),
    }
}

fn last_error() -> String {
    let p = secbeam_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn statistical_design_round_trip() {
    let (noise, outage) = ([1.0], [0.1]);
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(secbeam_problem_new(&system(2, &noise, &outage), &mut p), SecbeamStatus::Ok);
        let h = [1.0, 0.0, 0.0, 0.0];
        let g = [0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.1, 0.0];
        assert_eq!(secbeam_problem_set_statistical(p, h.as_ptr(), g.as_ptr()), SecbeamStatus::Ok);

        let mut s = ptr::null_mut();
        assert_eq!(secbeam_powermin(p, 0.5, 1, &mut s), SecbeamStatus::Ok);
        assert_eq!(secbeam_solution_len(s), 2);
        let mut w = [0.0; 4];
        assert_eq!(secbeam_solution_beamformer(s, w.as_mut_ptr(), 3), SecbeamStatus::BufferTooSmall);
        assert_eq!(secbeam_solution_beamformer(s, w.as_mut_ptr(), 4), SecbeamStatus::Ok);
        let power: f64 = w.iter().map(|x| x * x).sum();
        assert!((power - secbeam_solution_power(s)).abs() <= 1e-12 * power);

        let (mut per_eve, mut worst) = ([0.0], 0.0);
        let st = secbeam_verify(p, w.as_ptr(), 0.5, 20_000, 3, per_eve.as_mut_ptr(), &mut worst);
        assert_eq!(st, SecbeamStatus::Ok);
        // the single-Eve optimum meets its outage budget with equality
        assert!((per_eve[0] - 0.1).abs() < 3.0 * (0.09f64 / 20_000.0).sqrt() + 1e-3, "{}", per_eve[0]);
        secbeam_solution_free(s);

        let mut s = ptr::null_mut();
        assert_eq!(secbeam_powermin(p, 5.0, 1, &mut s), SecbeamStatus::Infeasible);
        assert!(s.is_null());
        assert!(last_error().contains("infeasible"));
        secbeam_problem_free(p);
    }
}

#[test]
fn random_problem_maxrate() {
    let (noise, outage) = ([1.0, 1.0], [0.05, 0.05]);
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(secbeam_problem_new(&system(3, &noise, &outage), &mut p), SecbeamStatus::Ok);
        let st = secbeam_problem_set_random(p, SecbeamScenario::ImperfectBoth, 0.01, 0.05, 9);
        assert_eq!(st, SecbeamStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(secbeam_maxrate(p, 0.0, 0, &mut s), SecbeamStatus::Ok);
        assert!(secbeam_solution_rate(s) > 0.0);
        assert!(secbeam_solution_power(s) <= 100.0 * (1.0 + 1e-9));
        secbeam_solution_free(s);
        secbeam_problem_free(p);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    let (noise, outage) = ([1.0], [1.5]);
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(secbeam_problem_new(&system(2, &noise, &outage), &mut p), SecbeamStatus::InvalidArgument);
        assert!(p.is_null());
        assert_eq!(secbeam_problem_new(ptr::null(), &mut p), SecbeamStatus::NullPointer);

        let outage = [0.1];
        assert_eq!(secbeam_problem_new(&system(2, &noise, &outage), &mut p), SecbeamStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(secbeam_powermin(p, 1.0, 0, &mut s), SecbeamStatus::NoScenario);
        let h = [1.0, 0.0, 0.0, 0.0];
        let not_hermitian = [1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let st = secbeam_problem_set_statistical(p, h.as_ptr(), not_hermitian.as_ptr());
        assert_eq!(st, SecbeamStatus::InvalidArgument);
        assert_eq!(secbeam_problem_set_statistical(p, ptr::null(), h.as_ptr()), SecbeamStatus::NullPointer);
        assert!(last_error().contains("h is null"));
        secbeam_problem_free(p);
        secbeam_problem_free(ptr::null_mut());
        secbeam_solution_free(ptr::null_mut());
        assert!(secbeam_solution_power(ptr::null()).is_nan());
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/secbeam.h")).unwrap();
    for f in [
        "secbeam_last_error",
        "secbeam_version",
        "secbeam_problem_new",
        "secbeam_problem_free",
        "secbeam_problem_set_statistical",
        "secbeam_problem_set_imperfect_ecsi",
        "secbeam_problem_set_imperfect_both",
        "secbeam_problem_set_random",
        "secbeam_powermin",
        "secbeam_maxrate",
        "secbeam_solution_free",
        "secbeam_solution_rate",
        "secbeam_solution_power",
        "secbeam_solution_len",
        "secbeam_solution_beamformer",
        "secbeam_verify",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct SecbeamProblem SecbeamProblem;"));
    let version = unsafe { CStr::from_ptr(secbeam_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"secbeam.h\"\nint main(void) { SecbeamProblem *p = 0; secbeam_problem_free(p); return SECBEAM_STATUS_OK; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
}
