//! Compile and run a small C program against the generated header and the
//! staticlib, proving the ABI end to end.

use std::path::PathBuf;
use std::process::Command;

const C_SMOKE: &str = r#"
#include <stdio.h>
#include <string.h>
#include "pfdtd.h"

int main(void) {
    if (strlen(pfdtd_version()) == 0) return 10;

    PfdtdScenario *scn = pfdtd_scenario_desk();
    if (!scn) return 11;
    if (pfdtd_scenario_set_workers(scn, 2) != PFDTD_STATUS_OK) return 12;
    if (pfdtd_scenario_set_output_dir(scn, NULL) != PFDTD_STATUS_NULL_ARGUMENT) return 13;
    if (strlen(pfdtd_last_error()) == 0) return 14;

    char *dir = pfdtd_scenario_output_dir(scn);
    if (!dir || strcmp(dir, "out") != 0) return 15;
    pfdtd_string_free(dir);

    /* converge without sweep artifacts: missing prerequisite */
    PfdtdReport *rep = NULL;
    if (pfdtd_run_converge(scn, &rep) != PFDTD_STATUS_MISSING_ARTIFACT) return 16;
    if (rep) return 17;
    pfdtd_scenario_free(scn);

    /* single-bin DFT of an analytic tone over whole periods */
    {
        enum { N = 200 };
        double re[N], im[N], dt = 1e-12, f = 5e9, out_re = 0.0, out_im = 0.0;
        for (int n = 0; n < N; n++) {
            double t = n * dt;
            re[n] = cos(2.0 * 3.14159265358979323846 * f * t);
            im[n] = sin(2.0 * 3.14159265358979323846 * f * t);
        }
        if (pfdtd_dft_at(re, im, N, dt, f, &out_re, &out_im) != PFDTD_STATUS_OK) return 18;
        double expect = N * dt;
        if (out_re < 0.99 * expect || out_re > 1.01 * expect) return 19;
    }

    printf("c abi smoke ok\n");
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    let lib = manifest.join("../../target/debug/libpfdtd_ffi.a");
    assert!(lib.exists(), "staticlib not built at {}", lib.display());

    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(&src, C_SMOKE).unwrap();
    let exe = tmp.path().join("smoke");

    let compile = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .expect("cc available");
    assert!(
        compile.status.success(),
        "compile failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&exe).current_dir(tmp.path()).output().unwrap();
    assert!(
        run.status.success(),
        "smoke exited {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout)
    );
    assert!(String::from_utf8_lossy(&run.stdout).contains("c abi smoke ok"));
}
