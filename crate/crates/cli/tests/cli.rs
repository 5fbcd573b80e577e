//! End-to-end tests of the binary: output formats, exit codes, report
//! files and determinism.

use std::path::Path;
use std::process::{Command, Output};

fn genbundle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genbundle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn genbundle_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genbundle"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

/// Small two-item suite that exercises both backends quickly.
const SMALL_CONFIG: &str = r#"{
  "seed": 7,
  "items": [
    {
      "name": "mobius",
      "atlas": "mobius",
      "metric": "flat",
      "frame": "mobius",
      "grid": { "resolution": [20, 10], "margin": 0.001 },
      "structure_grid": { "resolution": [6, 4], "margin": 0.001 },
      "structures": ["metric:J", "frame:F"],
      "random_inputs": 3,
      "overlap_samples": 50,
      "extra_sections": ["mobius:X", "mobius:Y", "mobius:Z"]
    },
    {
      "name": "s3",
      "atlas": "sphere(3)",
      "metric": "round",
      "frame": "s3",
      "grid": { "resolution": [200], "margin": 0.001 },
      "structure_grid": { "resolution": [50], "margin": 0.001 },
      "structures": ["metric:F", "frame:J"],
      "random_inputs": 3,
      "overlap_samples": 50
    }
  ]
}"#;

/// As above with a deliberately broken extra field: the two chart formulas
/// of `cos(pi u / 2) d/dv` do not glue across the flip branch.
const BROKEN_CONFIG: &str = r#"{
  "seed": 7,
  "items": [
    {
      "name": "mobius",
      "atlas": "mobius",
      "metric": "flat",
      "frame": "mobius",
      "grid": { "resolution": [20, 10], "margin": 0.001 },
      "overlap_samples": 50,
      "extra_sections": [
        {
          "name": "broken-Y",
          "charts": {
            "U": { "tangent": ["0", "cos(pi*u/2)"] },
            "V": { "tangent": ["0", "cos(pi*u/2)"] }
          }
        }
      ]
    }
  ]
}"#;

#[test]
fn sw_examples_match_exactly() {
    let out = genbundle(&["sw", "2"]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "w(T) = 1 + a + a^2; w(TT) = 1 + a^2; obstruction: NONZERO\n"
    );
    let out = genbundle(&["sw", "7"]);
    assert_eq!(stdout(&out), "w(T) = 1; w(TT) = 1; obstruction: zero\n");
}

#[test]
fn sw_out_of_range_is_a_usage_error() {
    for bad in ["0", "1025", "-3", "x"] {
        let out = genbundle(&["sw", bad]);
        assert_eq!(out.status.code(), Some(2), "sw {bad}");
    }
}

#[test]
fn classify_matches_the_golden_table() {
    let out = genbundle(&["classify", "7"]);
    assert!(out.status.success());
    let expected = include_str!("golden/classify7.txt");
    assert_eq!(stdout(&out), expected);
}

#[test]
fn classify_single_row_is_all_trivial() {
    let out = genbundle(&["classify", "1"]);
    let text = stdout(&out);
    let row = text.lines().last().unwrap();
    assert!(row.starts_with("   1"));
    assert!(!row.contains("nontrivial"));
    assert!(row.contains("zero"));
}

#[test]
fn classify_json_and_csv_formats() {
    let out = genbundle(&["classify", "4", "--format", "json"]);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 4);
    assert_eq!(
        rows[2]["obstruction_trivial"],
        serde_json::Value::Bool(true)
    );
    assert_eq!(rows[2]["gen_sw"]["display"], "1");

    let out = genbundle(&["classify", "3", "--format", "csv"]);
    let text = stdout(&out);
    assert!(text.starts_with("n,sphere_tangent_trivial"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn verify_small_config_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("suite.json");
    std::fs::write(&config, SMALL_CONFIG).unwrap();
    let out = genbundle_in(
        dir.path(),
        &["verify", config.to_str().unwrap(), "--out", "report.json"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let reports = report.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r["pass"] == true));

    // the report subcommand agrees
    let out = genbundle_in(dir.path(), &["report", "report.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("PASS"));
}

#[test]
fn verify_broken_field_fails_but_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("suite.json");
    std::fs::write(&config, BROKEN_CONFIG).unwrap();
    let out = genbundle_in(
        dir.path(),
        &["verify", config.to_str().unwrap(), "--out", "report.json"],
    );
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let row = &report.as_array().unwrap()[0];
    assert_eq!(row["pass"], false);
    let sections = row["sections"].as_array().unwrap();
    let broken = sections
        .iter()
        .find(|s| s["name"] == "broken-Y")
        .expect("broken section reported");
    assert!(broken["overlap_residual"].as_f64().unwrap() > 0.5);

    let out = genbundle_in(dir.path(), &["report", "report.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_missing_or_malformed_config_is_a_usage_error() {
    let out = genbundle(&["verify", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, "{ not json").unwrap();
    let out = genbundle(&["verify", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // structurally valid JSON, semantically unknown frame name
    let config = dir.path().join("unknown.json");
    std::fs::write(
        &config,
        r#"{ "items": [ { "name": "x", "atlas": "mobius", "frame": "s9",
             "grid": { "resolution": [4, 4] } } ] }"#,
    )
    .unwrap();
    let out = genbundle(&["verify", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_config_env_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("suite.json");
    std::fs::write(&config, BROKEN_CONFIG).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_genbundle"))
        .current_dir(dir.path())
        .env("GENBUNDLE_CONFIG", &config)
        .args(["verify", "--out", "report.json"])
        .output()
        .unwrap();
    // picked up the broken config from the environment, hence exit 1
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("suite.json");
    std::fs::write(&config, SMALL_CONFIG).unwrap();
    for name in ["a.json", "b.json"] {
        let out = genbundle_in(
            dir.path(),
            &["verify", config.to_str().unwrap(), "--out", name],
        );
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn verify_seed_override_changes_sphere_samples() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("suite.json");
    std::fs::write(&config, SMALL_CONFIG).unwrap();
    let run = |name: &str, seed: &str| {
        let out = genbundle_in(
            dir.path(),
            &[
                "verify",
                config.to_str().unwrap(),
                "--out",
                name,
                "--seed",
                seed,
                "--format",
                "csv",
            ],
        );
        assert_eq!(out.status.code(), Some(0));
    };
    run("a.json", "1");
    run("b.json", "2");
    let a = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    // Gram determinants are identical (constant 1), but the sphere sample
    // coordinates differ with the seed.
    assert_ne!(a, b);
    assert!(a.starts_with("frame,chart,index,c0,c1,c2,c3,det,rcond"));
}

#[test]
fn verify_tolerance_override_can_force_failure() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("suite.json");
    std::fs::write(&config, SMALL_CONFIG).unwrap();
    let out = genbundle_in(
        dir.path(),
        &[
            "verify",
            config.to_str().unwrap(),
            "--out",
            "report.json",
            "--tol-det",
            "2.0",
        ],
    );
    // min Gram determinant is 1 < 2, so every frame fails
    assert_eq!(out.status.code(), Some(1));

    let out = genbundle_in(
        dir.path(),
        &[
            "verify",
            config.to_str().unwrap(),
            "--out",
            "report.json",
            "--tol-overlap",
            "1e-30",
        ],
    );
    // rounding noise in the Möbius overlaps exceeds an impossible bound
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_grid_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("suite.json");
    std::fs::write(&config, SMALL_CONFIG).unwrap();
    let out = genbundle_in(
        dir.path(),
        &[
            "verify",
            config.to_str().unwrap(),
            "--out",
            "report.json",
            "--grid",
            "6",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    // mobius: two charts of 6x6; s3: 6 sphere samples
    assert_eq!(report[0]["samples"], 72);
    assert_eq!(report[1]["samples"], 6);

    let out = genbundle_in(
        dir.path(),
        &[
            "verify",
            config.to_str().unwrap(),
            "--out",
            "report.json",
            "--grid",
            "6,6,6",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn structures_exit_codes() {
    let out = genbundle(&["structures", "mobius", "metric:J", "--grid", "8"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("metric:J [PASS]"));
    assert!(text.contains("G0 symmetry residual"));

    let out = genbundle(&["structures", "mobius", "metric:Q", "--grid", "8"]);
    assert_eq!(out.status.code(), Some(2));

    let out = genbundle(&["structures", "nowhere", "metric:J"]);
    assert_eq!(out.status.code(), Some(2));

    // impossible tolerance forces a verification failure
    let out = genbundle(&[
        "structures",
        "mobius",
        "frame:J",
        "--grid",
        "8",
        "--tol-op",
        "1e-30",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn structures_cover_all_builtin_atlases() {
    for atlas in ["klein", "circle", "torus", "sphere(3)"] {
        let out = genbundle(&["structures", atlas, "--grid", "4"]);
        assert_eq!(out.status.code(), Some(0), "{atlas}: {}", stdout(&out));
    }
}

#[test]
fn report_on_missing_file_is_a_usage_error() {
    let out = genbundle(&["report", "/nonexistent/report.json"]);
    assert_eq!(out.status.code(), Some(2));
}
