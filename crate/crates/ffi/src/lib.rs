//! C ABI over `surfdist`.
//!
//! Every call returns an `SdStatus`; results come back through out-pointers.
//! Objects are opaque heap handles released with the matching `*_free`.
//! After a non-OK status, `sd_last_error_message` describes the failure on
//! the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use surfdist::io::load_mesh_file;
use surfdist::{continuous_procrustes, CorrespondenceMap, Error, RunConfig, TriangleMesh, Vec3};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMesh = 3,
    Io = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

pub struct SdMesh(TriangleMesh);

pub struct SdConfig(RunConfig);

pub struct SdCorrespondence(CorrespondenceMap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> SdStatus {
    match err {
        Error::Io(_) => SdStatus::Io,
        Error::InvalidArgument(_) | Error::LengthMismatch { .. } | Error::Json(_) => SdStatus::InvalidArgument,
        e if e.is_input_error() => SdStatus::InvalidMesh,
        _ => SdStatus::Numerical,
    }
}

fn fail(status: SdStatus, msg: impl Into<String>) -> SdStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting library errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SdStatus, String)>) -> SdStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SdStatus::Ok,
        Ok(Err((status, msg))) => fail(status, msg),
        Err(_) => fail(SdStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> (SdStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SdStatus, String) {
    (SdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SdStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (SdStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Version string of the library, statically allocated.
#[no_mangle]
pub extern "C" fn sd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL terminated,
/// truncated to `len`) and returns the full message length without the NUL.
/// Returns 0 when there is no pending error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Builds a mesh from `n_vertices` xyz triples and `n_faces` index triples.
///
/// # Safety
/// `vertices` must hold `3 * n_vertices` doubles, `faces` `3 * n_faces`
/// indices and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sd_mesh_from_arrays(
    vertices: *const f64,
    n_vertices: usize,
    faces: *const u32,
    n_faces: usize,
    out: *mut *mut SdMesh,
) -> SdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if vertices.is_null() || faces.is_null() {
            return Err(null("vertex or face array"));
        }
        let v = std::slice::from_raw_parts(vertices, 3 * n_vertices);
        let f = std::slice::from_raw_parts(faces, 3 * n_faces);
        let verts = v.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
        let tris = f.chunks_exact(3).map(|c| [c[0] as usize, c[1] as usize, c[2] as usize]).collect();
        let mesh = TriangleMesh::new(verts, tris).map_err(lib_err)?;
        put(out, SdMesh(mesh));
        Ok(())
    })
}

/// Loads an OFF, OBJ or ASCII PLY file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sd_mesh_load(path: *const c_char, out: *mut *mut SdMesh) -> SdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let mesh = load_mesh_file(Path::new(path)).map_err(lib_err)?;
        put(out, SdMesh(mesh));
        Ok(())
    })
}

/// # Safety
/// `mesh` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sd_mesh_free(mesh: *mut SdMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be a live handle; the out-pointers must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn sd_mesh_counts(mesh: *const SdMesh, n_vertices: *mut usize, n_faces: *mut usize) -> SdStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.0;
        if !n_vertices.is_null() {
            *n_vertices = m.num_vertices();
        }
        if !n_faces.is_null() {
            *n_faces = m.num_faces();
        }
        Ok(())
    })
}

/// Default run configuration.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sd_config_default(out: *mut *mut SdConfig) -> SdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, SdConfig(RunConfig::default()));
        Ok(())
    })
}

/// Configuration from a JSON object; missing keys take default values.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sd_config_from_json(json: *const c_char, out: *mut *mut SdConfig) -> SdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = RunConfig::from_json(str_arg(json, "json")?).map_err(lib_err)?;
        put(out, SdConfig(cfg));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_config_free(cfg: *mut SdConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Continuous Procrustes distance from `a` to `b`. A null `cfg` uses defaults.
///
/// # Safety
/// `a` and `b` must be live mesh handles, `cfg` null or live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sd_distance(
    a: *const SdMesh,
    b: *const SdMesh,
    cfg: *const SdConfig,
    out: *mut *mut SdCorrespondence,
) -> SdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = &a.as_ref().ok_or_else(|| null("a"))?.0;
        let b = &b.as_ref().ok_or_else(|| null("b"))?.0;
        let default = RunConfig::default();
        let cfg = cfg.as_ref().map(|c| &c.0).unwrap_or(&default);
        let map = continuous_procrustes(a, b, cfg).map_err(lib_err)?;
        put(out, SdCorrespondence(map));
        Ok(())
    })
}

/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_correspondence_free(map: *mut SdCorrespondence) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// # Safety
/// `map` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sd_correspondence_distance(map: *const SdCorrespondence, out: *mut f64) -> SdStatus {
    guard(|| {
        let m = &map.as_ref().ok_or_else(|| null("map"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = m.dpc_value;
        Ok(())
    })
}

/// Optimal rigid motion `x -> R x + t`; `rotation` receives 9 doubles in
/// row-major order and `translation` 3.
///
/// # Safety
/// `map` must be a live handle; the arrays must be writable.
#[no_mangle]
pub unsafe extern "C" fn sd_correspondence_motion(
    map: *const SdCorrespondence,
    rotation: *mut f64,
    translation: *mut f64,
) -> SdStatus {
    guard(|| {
        let m = &map.as_ref().ok_or_else(|| null("map"))?.0;
        if rotation.is_null() || translation.is_null() {
            return Err(null("rotation or translation"));
        }
        let rm = &m.rigid_motion;
        for r in 0..3 {
            for c in 0..3 {
                *rotation.add(3 * r + c) = rm.rotation[(r, c)];
            }
            *translation.add(r) = rm.translation[r];
        }
        Ok(())
    })
}

/// Number of samples in the correspondence.
///
/// # Safety
/// `map` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sd_correspondence_len(map: *const SdCorrespondence, out: *mut usize) -> SdStatus {
    guard(|| {
        let m = &map.as_ref().ok_or_else(|| null("map"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = m.len();
        Ok(())
    })
}

/// Copies sample points and their images as xyz triples. Each buffer must
/// hold `3 * len` doubles; either may be null to skip it.
///
/// # Safety
/// `map` must be a live handle; non-null buffers must have `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn sd_correspondence_points(
    map: *const SdCorrespondence,
    samples: *mut f64,
    images: *mut f64,
    capacity: usize,
) -> SdStatus {
    guard(|| {
        let m = &map.as_ref().ok_or_else(|| null("map"))?.0;
        let needed = 3 * m.len();
        if capacity < needed {
            return Err((SdStatus::BufferTooSmall, format!("need {needed} doubles, got {capacity}")));
        }
        for (buf, pts) in [(samples, &m.sample_points), (images, &m.image_points)] {
            if !buf.is_null() {
                ptr::copy_nonoverlapping(pts.as_ptr().cast::<f64>(), buf, needed);
            }
        }
        Ok(())
    })
}

/// Serializes the full correspondence as JSON. Release with `sd_string_free`.
///
/// # Safety
/// `map` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sd_correspondence_to_json(map: *const SdCorrespondence, out: *mut *mut c_char) -> SdStatus {
    guard(|| {
        let m = &map.as_ref().ok_or_else(|| null("map"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let json = m.to_json().map_err(lib_err)?;
        let c = CString::new(json).map_err(|_| (SdStatus::Numerical, "JSON contains NUL".to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// Parses a correspondence previously written by `sd_correspondence_to_json`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sd_correspondence_from_json(json: *const c_char, out: *mut *mut SdCorrespondence) -> SdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let map = CorrespondenceMap::from_json(str_arg(json, "json")?).map_err(lib_err)?;
        put(out, SdCorrespondence(map));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn sd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
