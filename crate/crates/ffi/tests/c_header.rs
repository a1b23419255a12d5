use std::path::{Path, PathBuf};
use std::process::Command;

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok())
}

fn staticlib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libsurfdist_ffi.a");
    lib.exists().then_some(lib)
}

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "surfdist.h"

int main(void) {
    double v[] = {0, 0, 0, 1, 0, 0, 0, 1, 0};
    uint32_t f[] = {0, 1, 2};
    SdMesh *m = NULL;
    if (sd_mesh_from_arrays(v, 3, f, 1, &m) != SD_STATUS_OK) return 1;
    size_t nv = 0, nf = 0;
    if (sd_mesh_counts(m, &nv, &nf) != SD_STATUS_OK || nv != 3 || nf != 1) return 2;
    sd_mesh_free(m);

    SdConfig *cfg = NULL;
    if (sd_config_from_json("{\"samples\": 0}", &cfg) == SD_STATUS_OK) return 3;
    char buf[128];
    if (sd_last_error_message(buf, sizeof buf) == 0 || strlen(buf) == 0) return 4;
    printf("%s\n", sd_version());
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();

    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success(), "header does not compile as C99");

    let Some(lib) = staticlib() else {
        eprintln!("static library not built, skipping link step");
        return;
    };
    let exe = dir.path().join("smoke");
    let status = Command::new(cc)
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "link failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke program exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
