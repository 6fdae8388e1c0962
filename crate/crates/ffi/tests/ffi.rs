use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use evolim_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let n = unsafe { evolim_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

fn single_model() -> *mut EvolimModel {
    let mut m = ptr::null_mut();
    let status = unsafe { evolim_model_gaussians(&2.0, &0.0, &1.0, 1, &mut m) };
    assert_eq!(status, EVOLIM_OK);
    m
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(evolim_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn hamiltonian_of_the_cos2_kernel() {
    let mut k = ptr::null_mut();
    assert_eq!(unsafe { evolim_kernel_cos2(1.0, 201, &mut k) }, EVOLIM_OK);
    let mut h = f64::NAN;
    assert_eq!(
        unsafe { evolim_kernel_hamiltonian(k, 0.0, &mut h) },
        EVOLIM_OK
    );
    assert_eq!(h, 0.0);
    // H(1) for cos^2(pi z / 2) / 1 on [-1, 1]: sinh(1) pi^2 / (1 + pi^2) - 1
    let pi2 = std::f64::consts::PI.powi(2);
    let exact = 1f64.sinh() * pi2 / (1.0 + pi2) - 1.0;
    assert_eq!(
        unsafe { evolim_kernel_hamiltonian(k, 1.0, &mut h) },
        EVOLIM_OK
    );
    assert!((h - exact).abs() < 1e-6, "{h} vs {exact}");
    unsafe { evolim_kernel_free(k) };
    unsafe { evolim_kernel_free(ptr::null_mut()) };
}

#[test]
fn table_kernels_and_their_errors() {
    let z = [-1.0, 0.0, 1.0];
    let good = [0.0, 1.0, 0.0];
    let mut k = ptr::null_mut();
    let s = unsafe { evolim_kernel_from_table(z.as_ptr(), good.as_ptr(), 3, 101, &mut k) };
    assert_eq!(s, EVOLIM_OK);
    unsafe { evolim_kernel_free(k) };

    let negative = [0.0, -1.0, 0.0];
    let s = unsafe { evolim_kernel_from_table(z.as_ptr(), negative.as_ptr(), 3, 101, &mut k) };
    assert_eq!(s, EVOLIM_INVALID_INPUT);
    assert!(!last_error().is_empty());

    let s = unsafe { evolim_kernel_from_table(ptr::null(), good.as_ptr(), 3, 101, &mut k) };
    assert_eq!(s, EVOLIM_NULL_POINTER);
    assert!(last_error().contains("z"));
}

#[test]
fn null_handles_are_reported() {
    let mut h = 0.0;
    assert_eq!(
        unsafe { evolim_kernel_hamiltonian(ptr::null(), 0.0, &mut h) },
        EVOLIM_NULL_POINTER
    );
    assert_eq!(unsafe { evolim_model_resource_count(ptr::null()) }, 0);
}

#[test]
fn resources_of_a_flat_density() {
    let m = single_model();
    assert_eq!(unsafe { evolim_model_resource_count(m) }, 1);
    let n = 4001;
    let u = vec![0.1; n];
    let mut r = [0.0];
    let s = unsafe { evolim_model_resources(m, -10.0, 10.0, n, u.as_ptr(), r.as_mut_ptr(), 1) };
    assert_eq!(s, EVOLIM_OK);
    // int 2 exp(-x^2) * 0.1 = 0.2 sqrt(pi)
    let exact = 1.0 / (1.0 + 0.2 * std::f64::consts::PI.sqrt());
    assert!((r[0] - exact).abs() < 1e-8);
    let s = unsafe { evolim_model_resources(m, -10.0, 10.0, n, u.as_ptr(), r.as_mut_ptr(), 2) };
    assert_eq!(s, EVOLIM_INVALID_INPUT);
    unsafe { evolim_model_free(m) };
}

#[test]
fn metastable_measure_of_one_resource() {
    let m = single_model();
    let mut r = [0.0];
    let (mut xs, mut ws) = ([0.0; 4], [0.0; 4]);
    let mut count = 0usize;
    let s = unsafe {
        evolim_metastable_minimize(
            m,
            -4.0,
            4.0,
            801,
            -4.0,
            4.0,
            1e-6,
            r.as_mut_ptr(),
            1,
            xs.as_mut_ptr(),
            ws.as_mut_ptr(),
            4,
            &mut count,
        )
    };
    assert_eq!(s, EVOLIM_OK);
    assert!((r[0] - 0.5).abs() < 1e-6);
    let total: f64 = ws[..count].iter().sum();
    assert!((total - 0.5).abs() < 1e-4);
    assert!(xs[..count].iter().all(|x| x.abs() <= 0.02 + 1e-12));

    let s = unsafe {
        evolim_metastable_minimize(
            m,
            -4.0,
            4.0,
            801,
            -4.0,
            4.0,
            1e-6,
            r.as_mut_ptr(),
            1,
            ptr::null_mut(),
            ptr::null_mut(),
            0,
            &mut count,
        )
    };
    assert_eq!(s, EVOLIM_BUFFER_TOO_SMALL);
    assert!(count >= 1);
    unsafe { evolim_model_free(m) };
}

#[test]
fn scenario_runs_write_artifacts() {
    let tmp = tempfile::TempDir::new().unwrap();
    let scenario = tmp.path().join("s.scenario");
    std::fs::write(
        &scenario,
        r#"name = "ffi"
[grid]
x_min = -10.0
x_max = 10.0
n = 401
[kernel]
family = "cos2"
radius = 1.0
[[resources]]
family = "gaussian"
amplitude = 2.0
center = 0.0
width = 1.0
[initial]
profile = "well"
center = 0.0
[solver]
kind = "limit"
t_end = 0.5
"#,
    )
    .unwrap();
    let path = CString::new(scenario.to_str().unwrap()).unwrap();
    let out = CString::new(tmp.path().join("out").to_str().unwrap()).unwrap();
    let mut r = [0.0; 2];
    let mut count = 0;
    let s =
        unsafe { evolim_scenario_run(path.as_ptr(), out.as_ptr(), r.as_mut_ptr(), 2, &mut count) };
    assert_eq!(s, EVOLIM_OK, "{}", last_error());
    assert_eq!(count, 1);
    assert!((r[0] - 0.5).abs() < 1e-6);
    assert!(tmp.path().join("out/manifest.toml").exists());

    let missing = CString::new("/nonexistent/x.scenario").unwrap();
    let s = unsafe {
        evolim_scenario_run(
            missing.as_ptr(),
            out.as_ptr(),
            r.as_mut_ptr(),
            2,
            &mut count,
        )
    };
    assert_eq!(s, EVOLIM_IO);
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/evolim.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "evolim_kernel_hamiltonian",
        "evolim_metastable_minimize",
        "evolim_scenario_run",
        "evolim_last_error",
    ] {
        assert!(text.contains(f), "{f} missing from the header");
    }
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(o) = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .output()
        else {
            eprintln!("{compiler} not available; skipping");
            continue;
        };
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
}
