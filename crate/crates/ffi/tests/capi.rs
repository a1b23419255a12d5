use std::ffi::{CStr, CString};
use std::ptr;

use surfdist::synth::bumps_surface;
use surfdist::synth::Bump;
use surfdist_ffi::*;

fn arrays(n_rings: usize, bumps: &[Bump]) -> (Vec<f64>, Vec<u32>) {
    let m = bumps_surface(n_rings, bumps);
    let v = m.vertices().iter().flat_map(|p| [p.x, p.y, p.z]).collect();
    let f = m.faces().iter().flat_map(|t| t.map(|i| i as u32)).collect();
    (v, f)
}

fn mesh(n_rings: usize, bumps: &[Bump]) -> *mut SdMesh {
    let (v, f) = arrays(n_rings, bumps);
    let mut out = ptr::null_mut();
    let st = unsafe { sd_mesh_from_arrays(v.as_ptr(), v.len() / 3, f.as_ptr(), f.len() / 3, &mut out) };
    assert_eq!(st, SdStatus::Ok);
    out
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        sd_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn small_config() -> *mut SdConfig {
    let json = CString::new(r#"{"samples": 64, "angles": 8, "fe_h": 0.15, "n_steps": 8, "screen_keep": 2}"#).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { sd_config_from_json(json.as_ptr(), &mut cfg) }, SdStatus::Ok);
    cfg
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(sd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn mesh_counts() {
    let m = mesh(6, &[]);
    let (mut nv, mut nf) = (0, 0);
    assert_eq!(unsafe { sd_mesh_counts(m, &mut nv, &mut nf) }, SdStatus::Ok);
    let (v, f) = arrays(6, &[]);
    assert_eq!((nv, nf), (v.len() / 3, f.len() / 3));
    unsafe { sd_mesh_free(m) };
}

#[test]
fn bad_mesh_sets_error() {
    let v = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0];
    let f = [0u32, 1, 2];
    let mut out = ptr::null_mut();
    let st = unsafe { sd_mesh_from_arrays(v.as_ptr(), 3, f.as_ptr(), 1, &mut out) };
    assert_eq!(st, SdStatus::InvalidMesh);
    assert!(out.is_null());
    assert!(last_error().contains("degenerate"));
}

#[test]
fn null_arguments_are_reported() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { sd_mesh_load(ptr::null(), &mut out) }, SdStatus::NullPointer);
    assert_eq!(unsafe { sd_distance(ptr::null(), ptr::null(), ptr::null(), ptr::null_mut()) }, SdStatus::NullPointer);
    let mut d = 0.0;
    assert_eq!(unsafe { sd_correspondence_distance(ptr::null(), &mut d) }, SdStatus::NullPointer);
    unsafe {
        sd_mesh_free(ptr::null_mut());
        sd_config_free(ptr::null_mut());
        sd_correspondence_free(ptr::null_mut());
        sd_string_free(ptr::null_mut());
    }
}

#[test]
fn missing_file_is_io_error() {
    let path = CString::new("/nonexistent/surface.off").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { sd_mesh_load(path.as_ptr(), &mut out) }, SdStatus::Io);
    assert!(!last_error().is_empty());
}

#[test]
fn bad_config_json() {
    let json = CString::new(r#"{"samples": -3}"#).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { sd_config_from_json(json.as_ptr(), &mut cfg) }, SdStatus::InvalidArgument);
}

#[test]
fn error_message_truncates_and_reports_length() {
    let json = CString::new("not json").unwrap();
    let mut cfg = ptr::null_mut();
    unsafe { sd_config_from_json(json.as_ptr(), &mut cfg) };
    let full = unsafe { sd_last_error_message(ptr::null_mut(), 0) };
    assert!(full > 4);
    let mut buf = [1 as std::ffi::c_char; 4];
    assert_eq!(unsafe { sd_last_error_message(buf.as_mut_ptr(), 4) }, full);
    assert_eq!(buf[3], 0);
}

#[test]
fn distance_roundtrip() {
    let a = mesh(10, &[Bump::new(0.2, 0.0, 0.3, 0.3)]);
    let b = mesh(10, &[Bump::new(-0.1, 0.2, 0.25, 0.3)]);
    let cfg = small_config();
    let mut map = ptr::null_mut();
    assert_eq!(unsafe { sd_distance(a, b, cfg, &mut map) }, SdStatus::Ok, "{}", last_error());

    let mut d = -1.0;
    let mut n = 0;
    unsafe {
        assert_eq!(sd_correspondence_distance(map, &mut d), SdStatus::Ok);
        assert_eq!(sd_correspondence_len(map, &mut n), SdStatus::Ok);
    }
    assert!(d.is_finite() && d >= 0.0);
    assert_eq!(n, 64);

    let (mut rot, mut tr) = ([0.0; 9], [0.0; 3]);
    assert_eq!(unsafe { sd_correspondence_motion(map, rot.as_mut_ptr(), tr.as_mut_ptr()) }, SdStatus::Ok);
    let col = |c: usize| [rot[c], rot[3 + c], rot[6 + c]];
    for i in 0..3 {
        let norm: f64 = col(i).iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    let mut small = vec![0.0; 3 * n - 1];
    assert_eq!(
        unsafe { sd_correspondence_points(map, small.as_mut_ptr(), ptr::null_mut(), small.len()) },
        SdStatus::BufferTooSmall
    );
    let mut samples = vec![0.0; 3 * n];
    let mut images = vec![0.0; 3 * n];
    assert_eq!(
        unsafe { sd_correspondence_points(map, samples.as_mut_ptr(), images.as_mut_ptr(), 3 * n) },
        SdStatus::Ok
    );
    assert!(images.iter().all(|x| x.is_finite()));

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { sd_correspondence_to_json(map, &mut json) }, SdStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { sd_correspondence_from_json(json, &mut back) }, SdStatus::Ok);
    let mut d2 = 0.0;
    unsafe { sd_correspondence_distance(back, &mut d2) };
    assert_eq!(d.to_bits(), d2.to_bits());

    unsafe {
        sd_string_free(json);
        sd_correspondence_free(back);
        sd_correspondence_free(map);
        sd_config_free(cfg);
        sd_mesh_free(a);
        sd_mesh_free(b);
    }
}
