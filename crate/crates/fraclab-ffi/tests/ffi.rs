use fraclab_ffi::*;
use std::ffi::CString;
use std::ptr;

fn last_error() -> String {
    let len = unsafe { fraclab_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0 as std::ffi::c_char; len + 1];
    unsafe { fraclab_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { std::ffi::CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn gamma_and_hyp2f1() {
    let mut v = 0.0;
    assert_eq!(unsafe { fraclab_gamma(5.0, &mut v) }, FraclabStatus::Ok);
    assert!((v - 24.0).abs() < 1e-12);
    assert_eq!(unsafe { fraclab_gamma(-2.0, &mut v) }, FraclabStatus::Pole);
    assert!(last_error().contains("pole"));
    // 2F1(1, 1; 2; z) = -ln(1-z)/z
    assert_eq!(unsafe { fraclab_hyp2f1(1.0, 1.0, 2.0, 0.5, &mut v) }, FraclabStatus::Ok);
    assert!((v - 2.0 * 2f64.ln()).abs() < 1e-13);
}

#[test]
fn ambient_lifecycle() {
    let mut amb = ptr::null_mut();
    assert_eq!(unsafe { fraclab_ambient_new(4, 0.5, &mut amb) }, FraclabStatus::Ok);
    let mut p = 0.0;
    assert_eq!(unsafe { fraclab_ambient_p(amb, &mut p) }, FraclabStatus::Ok);
    assert!((p - 5.0 / 3.0).abs() < 1e-15);
    let mut u0 = 0.0;
    assert_eq!(unsafe { fraclab_bubble_radial(amb, 1.0, 0.0, &mut u0) }, FraclabStatus::Ok);
    assert!(u0 > 0.0);
    assert_eq!(unsafe { fraclab_bubble_radial(amb, -1.0, 0.0, &mut u0) }, FraclabStatus::Domain);
    let mut ev = [0.0; 6];
    assert_eq!(
        unsafe { fraclab_spectral_radial(amb, 6, ev.as_mut_ptr(), 3) },
        FraclabStatus::BufferTooSmall
    );
    assert_eq!(
        unsafe { fraclab_spectral_radial(amb, 6, ev.as_mut_ptr(), ev.len()) },
        FraclabStatus::Ok
    );
    assert!((ev[0] - 1.0).abs() < 1e-6 && (ev[1] - p).abs() < 1e-6);
    unsafe { fraclab_ambient_free(amb) };
    unsafe { fraclab_ambient_free(ptr::null_mut()) };

    assert_eq!(unsafe { fraclab_ambient_new(1, 0.5, &mut amb) }, FraclabStatus::Domain);
    assert_eq!(unsafe { fraclab_ambient_new(3, 0.5, ptr::null_mut()) }, FraclabStatus::NullPointer);
}

#[test]
fn pde_residual() {
    let grid: Vec<f64> = (0..20).map(|i| 0.5 * i as f64).collect();
    let mut res = 1.0;
    assert_eq!(
        unsafe { fraclab_check_bubble_pde(3, 0.5, grid.as_ptr(), grid.len(), &mut res) },
        FraclabStatus::Ok
    );
    assert!(res <= 1e-6, "{res}");
    assert_eq!(
        unsafe { fraclab_check_bubble_pde(3, 0.5, ptr::null(), 4, &mut res) },
        FraclabStatus::NullPointer
    );
}

#[test]
fn family_handle() {
    let json = CString::new(r#"{"n":3,"s":0.75,"bubbles":[{"z":[0,0,0],"lambda":1.0},{"z":[100,0,0],"lambda":1.0}]}"#).unwrap();
    let mut fam = ptr::null_mut();
    assert_eq!(unsafe { fraclab_family_from_json(json.as_ptr(), &mut fam) }, FraclabStatus::Ok);
    let mut len = 0usize;
    assert_eq!(unsafe { fraclab_family_len(fam, &mut len) }, FraclabStatus::Ok);
    assert_eq!(len, 2);
    let mut q = 0.0;
    assert_eq!(unsafe { fraclab_family_q(fam, &mut q) }, FraclabStatus::Ok);
    assert!(q > 0.0 && q < 1e-2);
    let x = [0.0; 3];
    let (mut sig, mut amb_u0) = (0.0, 0.0);
    assert_eq!(unsafe { fraclab_family_sigma(fam, x.as_ptr(), 3, &mut sig) }, FraclabStatus::Ok);
    let mut amb = ptr::null_mut();
    unsafe { fraclab_ambient_new(3, 0.75, &mut amb) };
    unsafe { fraclab_bubble_radial(amb, 1.0, 0.0, &mut amb_u0) };
    unsafe { fraclab_ambient_free(amb) };
    assert!(sig > amb_u0 && sig < amb_u0 * 1.01);
    assert_eq!(unsafe { fraclab_family_sigma(fam, x.as_ptr(), 2, &mut sig) }, FraclabStatus::Domain);
    unsafe { fraclab_family_free(fam) };

    let bad = CString::new("{not json").unwrap();
    assert_ne!(unsafe { fraclab_family_from_json(bad.as_ptr(), &mut fam) }, FraclabStatus::Ok);
    assert!(!last_error().is_empty());
}

#[test]
fn header_is_valid_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = format!("{dir}/include/fraclab.h");
    let src = std::env::temp_dir().join(format!("fraclab_header_{}.c", std::process::id()));
    std::fs::write(
        &src,
        format!("#include \"{header}\"\nint main(void) {{ FraclabStatus s = FRACLAB_STATUS_OK; return (int)s; }}\n"),
    )
    .unwrap();
    let out = match std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&src)
        .output()
    {
        Ok(o) => o,
        Err(_) => {
            eprintln!("no C compiler on PATH; skipping header check");
            return;
        }
    };
    let _ = std::fs::remove_file(&src);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
