//! Compiles and runs a small C program against the generated header and
//! the static library, exercising the ABI end to end.

use std::path::{Path, PathBuf};
use std::process::Command;

const C_SOURCE: &str = r#"
#include <stdio.h>
#include "mfq_toolkit.h"

int main(void) {
    MfqQuestionnaire* q = NULL;
    if (mfq_questionnaire_bundled(&q) != MFQ_STATUS_OK) return 1;
    if (mfq_questionnaire_item_count(q) != 32) return 2;

    uint8_t answers[32];
    for (int i = 0; i < 32; i++) answers[i] = 5;
    double scores[5];
    if (mfq_score(q, answers, scores) != MFQ_STATUS_OK) return 3;
    for (int i = 0; i < 5; i++) {
        if (scores[i] != 5.0) return 4;
    }

    int8_t rating = -2;
    if (mfq_parse_rating("Label: not very relevant", 0, &rating) != MFQ_STATUS_OK) return 5;
    if (rating != 1) return 6;

    uint8_t samples[4] = {3, 3, 4, 4};
    uint8_t vote = 0;
    if (mfq_majority_vote(samples, 4, &vote) != MFQ_STATUS_OK) return 7;
    if (vote != 3) return 8;

    double a[5] = {5, 5, 5, 5, 5};
    double b[5] = {0, 0, 0, 0, 0};
    if (mfq_sae(a, b) != 25.0) return 9;

    double probs[6] = {0.0, 0.2, 0.2, 0.2, 0.2, 0.2};
    double expected = 0.0;
    if (mfq_expected_donation(probs, &expected) != MFQ_STATUS_OK) return 10;
    if (expected != 86.0) return 11;

    mfq_questionnaire_free(q);
    printf("c abi ok\n");
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from the crate root; the workspace target dir sits two up.
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    manifest.join("../../target/debug").canonicalize().unwrap()
}

#[test]
fn c_program_links_and_runs() {
    // `cargo test` compiles the library only as an rlib; build the
    // staticlib artifact explicitly before linking against it.
    let build = Command::new(env!("CARGO"))
        .args(["build", "-p", "mfq-toolkit-ffi"])
        .current_dir(Path::new(env!("CARGO_MANIFEST_DIR")))
        .output()
        .expect("cargo build runs");
    assert!(
        build.status.success(),
        "staticlib build failed:\n{}",
        String::from_utf8_lossy(&build.stderr)
    );

    let lib = target_dir().join("libmfq_toolkit_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(
        include.join("mfq_toolkit.h").exists(),
        "header not generated"
    );

    let dir = tempfile::tempdir().unwrap();
    let c_file = dir.path().join("smoke.c");
    std::fs::write(&c_file, C_SOURCE).unwrap();
    let exe = dir.path().join("smoke");

    let compile = Command::new("cc")
        .arg(&c_file)
        .arg(lib)
        .arg(format!("-I{}", include.display()))
        .args(["-lpthread", "-ldl", "-lm", "-lssl", "-lcrypto"])
        .arg("-o")
        .arg(&exe)
        .output()
        .expect("cc runs");
    assert!(
        compile.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&exe).output().expect("smoke test runs");
    assert!(
        run.status.success(),
        "exit {:?}, stdout {:?}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout)
    );
    assert!(String::from_utf8_lossy(&run.stdout).contains("c abi ok"));
}
