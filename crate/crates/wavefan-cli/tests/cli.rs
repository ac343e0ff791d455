//! End-to-end tests of the command-line interface: exit codes, artifact
//! schemas, and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn wavefan(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavefan"))
        .args(args)
        .current_dir(dir)
        .env_remove("WAVEFAN_OUTPUT")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn eigs_reports_structure_and_rejects_subsonic() {
    let dir = tempfile::tempdir().unwrap();
    let out = wavefan(&["eigs"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["multiplicities"], serde_json::json!([1, 2, 1]));
    assert_eq!(v["kinds"], serde_json::json!(["gnl", "ld", "gnl"]));
    assert_eq!(v["convexity_sign"], serde_json::json!(1.0));
    let l0 = v["lambdas"][0].as_f64().unwrap();
    assert!((l0 + 3.0f64.sqrt() / 3.0).abs() < 1e-7);

    let out = wavefan(&["eigs", "--m0", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not supersonic"));

    let out = wavefan(&["eigs", "--system", "linear"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["kinds"], serde_json::json!(["ld", "ld", "ld"]));
}

#[test]
fn solve_trivial_and_contact_data() {
    let dir = tempfile::tempdir().unwrap();
    // equal states: constant profile, all checks pass
    let out = wavefan(
        &["solve", "--output", "trivial", "--points-per-sector", "128"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("trivial/report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["report"]["flags"]["pass"], serde_json::json!(true));
    assert_eq!(report["report"]["waves"].as_array().unwrap().len(), 0);

    // contact-only strengths produce one contact in the degenerate sector
    let out = wavefan(
        &[
            "solve",
            "--output",
            "contact",
            "--right-strengths",
            "0,4e-4,2e-4,0",
            "--points-per-sector",
            "256",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("contact/report.json")).unwrap(),
    )
    .unwrap();
    let waves = report["report"]["waves"].as_array().unwrap();
    assert_eq!(waves.len(), 1);
    assert_eq!(waves[0]["kind"], serde_json::json!("contact"));
    assert_eq!(waves[0]["family"], serde_json::json!(1));
}

#[test]
fn solve_is_deterministic_modulo_timing() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "right_strengths = \"-2e-4,3e-4,0,1e-4\"\npoints_per_sector = 256\nseed = 7\n",
    )
    .unwrap();
    for name in ["a", "b"] {
        let out = wavefan(
            &["solve", "--config", "run.toml", "--output", name],
            dir.path(),
        );
        assert_eq!(
            out.status.code(),
            Some(0),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let csv_a = std::fs::read(dir.path().join("a/profile.csv")).unwrap();
    let csv_b = std::fs::read(dir.path().join("b/profile.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "profiles differ between identical runs");

    let mut ja: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/report.json")).unwrap())
            .unwrap();
    let mut jb: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b/report.json")).unwrap())
            .unwrap();
    // timestamps live in one provenance field; everything else is identical
    ja["provenance"].as_object_mut().unwrap().remove("timing");
    jb["provenance"].as_object_mut().unwrap().remove("timing");
    assert_eq!(ja, jb);
}

#[test]
fn verify_roundtrip_matches_solve() {
    let dir = tempfile::tempdir().unwrap();
    let out = wavefan(
        &[
            "solve",
            "--output",
            "s",
            "--right-strengths",
            "0,3e-4,0,0",
            "--points-per-sector",
            "256",
            "--seed",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let out = wavefan(
        &["verify", "s/profile.csv", "--output", "v", "--seed", "3"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let ja: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s/report.json")).unwrap())
            .unwrap();
    let jb: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("v/report.json")).unwrap())
            .unwrap();
    assert_eq!(ja["report"], jb["report"]);
}

#[test]
fn verify_rejects_malformed_and_flags_violations() {
    let dir = tempfile::tempdir().unwrap();
    // decreasing abscissae
    std::fs::write(
        dir.path().join("bad.csv"),
        "xi,u1,u2,u3,u4\n1.0,1.0,2.0,0.0,3.8\n0.0,1.0,2.0,0.0,3.8\n",
    )
    .unwrap();
    let out = wavefan(&["verify", "bad.csv", "--output", "o"], dir.path());
    assert_eq!(out.status.code(), Some(3));

    // a valid profile with a hand-injected pressure mismatch at the contact
    let out = wavefan(
        &[
            "solve",
            "--output",
            "s",
            "--right-strengths",
            "0,3e-4,0,0",
            "--points-per-sector",
            "256",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("s/profile.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let n = lines.len();
    for line in lines[n - 40..].iter_mut() {
        let mut parts: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        parts[4] += 1e-4 / 0.4; // bump the energy: pressure off by 1e-4
        *line = parts
            .iter()
            .map(|x| format!("{x:.16e}"))
            .collect::<Vec<_>>()
            .join(",");
    }
    std::fs::write(dir.path().join("edited.csv"), lines.join("\n") + "\n").unwrap();
    let out = wavefan(&["verify", "edited.csv", "--output", "e"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(1),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("weak_form: FAIL"));

    // report subcommand mirrors the stored verdict
    let out = wavefan(&["report", "e/report.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = wavefan(&["report", "s/report.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn compose_backward_fan_verifies_on_backward_side() {
    let dir = tempfile::tempdir().unwrap();
    let out = wavefan(
        &[
            "compose",
            "--epsilon",
            "0.05",
            "--side",
            "backward",
            "--waves",
            "shock:2:5e-4;shock:2:5e-4",
            "--output",
            "c",
            "--points-per-sector",
            "256",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["report"]["flags"]["pass"], serde_json::json!(true));
    assert_eq!(report["report"]["waves"].as_array().unwrap().len(), 2);

    // consecutive simple waves are structurally rejected
    let out = wavefan(
        &[
            "compose",
            "--epsilon",
            "0.05",
            "--side",
            "backward",
            "--waves",
            "simple:2:1e-4;simple:2:1e-4",
            "--output",
            "c2",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}
