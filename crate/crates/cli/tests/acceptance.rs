//! Acceptance suite: one test per criterion, each printing a pass line
//! (run with `--nocapture` to see them). Tolerances and runtime budgets
//! are pinned in the asserts.

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use genbundle_core::config::SuiteConfig;
use genbundle_core::frame::{klein_frame, mobius_fields, mobius_frame, sphere_frame, SectionFrame};
use genbundle_core::manifold::{orientability_probe, Atlas, BuiltinAtlas, Orientability};
use genbundle_core::metric::Metric;
use genbundle_core::verify::{
    gram_det, overlap_consistency, run_suite, sample_chart, sample_unit_sphere, structure_check,
    verify_frame, SampleGrid, Tolerances,
};
use genbundle_core::z2::{allard_min_copies, binom_mod2, classify_table};

fn pass(n: usize, label: &str) {
    println!("[acceptance] criterion {n} ({label}): PASS");
}

fn budget(n: usize, elapsed: Duration, limit: Duration) {
    assert!(
        elapsed <= limit,
        "criterion {n} exceeded its runtime budget: {elapsed:?} > {limit:?}"
    );
}

fn grids(atlas: &Atlas, resolution: &[usize]) -> Vec<SampleGrid> {
    atlas
        .charts()
        .iter()
        .map(|c| SampleGrid {
            chart: c.name.clone(),
            resolution: resolution.to_vec(),
            margin: 1e-3,
        })
        .collect()
}

/// Criterion 1: the classification of RP^n for n = 1..=64 reports a zero
/// generalized obstruction exactly when n + 1 is a power of two.
#[test]
fn criterion_1_classification_table() {
    let start = Instant::now();
    let rows = classify_table(64).unwrap();
    assert_eq!(rows.len(), 64);
    for row in &rows {
        let expected = [1usize, 3, 7, 15, 31, 63].contains(&row.n);
        assert_eq!(
            row.obstruction_trivial, expected,
            "n = {}: obstruction_trivial should be {expected}",
            row.n
        );
        assert_eq!(row.obstruction_trivial, row.gen_sw.is_one());
        assert!(row.sphere_gen_trivial);
    }
    budget(1, start.elapsed(), Duration::from_secs(1));

    // and the CLI reports the same pattern
    let out = Command::new(env!("CARGO_BIN_EXE_genbundle"))
        .args(["classify", "64", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for row in json.as_array().unwrap() {
        let n = row["n"].as_u64().unwrap() as usize;
        let expected = [1usize, 3, 7, 15, 31, 63].contains(&n);
        assert_eq!(row["obstruction_trivial"].as_bool().unwrap(), expected);
    }
    pass(1, "Table-1 reproduction at n_max = 64");
}

/// Criterion 2: the bitwise binomial coefficient agrees with a
/// Pascal-triangle-mod-2 oracle on every pair 0 <= k <= n <= 512.
#[test]
fn criterion_2_lucas_oracle() {
    let start = Instant::now();
    let mut rows: Vec<Vec<u8>> = Vec::with_capacity(513);
    let mut cases = 0u64;
    for n in 0..=512usize {
        let mut row = vec![0u8; n + 1];
        row[0] = 1;
        row[n] = 1;
        for k in 1..n {
            row[k] = (rows[n - 1][k - 1] + rows[n - 1][k]) % 2;
        }
        for (k, &expected) in row.iter().enumerate() {
            assert_eq!(
                binom_mod2(n as u64, k as u64),
                expected,
                "C({n}, {k}) mod 2"
            );
            cases += 1;
        }
        rows.push(row);
    }
    assert_eq!(cases, 513 * 514 / 2);
    budget(2, start.elapsed(), Duration::from_secs(1));
    pass(2, "Lucas rule vs Pascal oracle, 131841 cases");
}

/// Criterion 3: the Möbius frame with the flat metric, at 10^4 grid points
/// per chart, has Gram determinant 1 within 1e-9, and every field and frame
/// section glues across the overlap to within 1e-10.
#[test]
fn criterion_3_mobius_trivialization() {
    let start = Instant::now();
    let atlas = Arc::new(Atlas::builtin(BuiltinAtlas::Mobius));
    let metric = Metric::euclidean();
    let frame = mobius_frame(atlas.clone(), &metric).unwrap();
    let report = verify_frame(
        &frame,
        &grids(&atlas, &[200, 50]),
        &Tolerances::default(),
        0xC0FFEE,
        1000,
    )
    .unwrap();
    assert_eq!(report.samples, 20_000); // 10^4 per chart
    assert!(
        (report.min_gram_det - 1.0).abs() < 1e-9,
        "min Gram det {}",
        report.min_gram_det
    );
    assert!(report.pass);

    let mut max_overlap = report.max_overlap_residual;
    for section in mobius_fields(&atlas).unwrap() {
        max_overlap = max_overlap.max(overlap_consistency(&atlas, &section, 1000).unwrap());
    }
    assert!(
        max_overlap < 1e-10,
        "overlap residual of X, Y, Z, w1..w4: {max_overlap}"
    );
    budget(3, start.elapsed(), Duration::from_secs(5));
    pass(
        3,
        "Mobius frame: Gram det = 1 within 1e-9, overlaps < 1e-10",
    );
}

/// Criterion 4: the transplanted Klein-bottle frame passes the same suite.
#[test]
fn criterion_4_klein_frame() {
    let atlas = Arc::new(Atlas::builtin(BuiltinAtlas::Klein));
    let metric = Metric::euclidean();
    let frame = klein_frame(atlas.clone(), &metric).unwrap();
    let report = verify_frame(
        &frame,
        &grids(&atlas, &[100, 100]),
        &Tolerances::default(),
        0xC0FFEE,
        1000,
    )
    .unwrap();
    assert!(
        report.min_gram_det > 0.99,
        "min det {}",
        report.min_gram_det
    );
    assert!(
        report.max_overlap_residual < 1e-10,
        "overlap {}",
        report.max_overlap_residual
    );
    assert!(report.pass);
    pass(4, "Klein frame: Gram det > 0.99, overlaps < 1e-10");
}

/// Criterion 5: structure identities on the Möbius strip, Klein bottle,
/// circle and three-sphere: involution residuals < 1e-12 over >= 10^3
/// points x 10 random inputs, paracomplex +1-eigenrank n at every sample,
/// pairing symmetry < 1e-12 for the metric structures, frame-vs-metric
/// agreement < 1e-10 for the Möbius complex route and both sphere routes.
#[test]
fn criterion_5_structure_identities() {
    let start = Instant::now();
    let cases: [(&str, SectionFrame, Metric, &[usize]); 4] = {
        let mobius = Arc::new(Atlas::builtin(BuiltinAtlas::Mobius));
        let klein = Arc::new(Atlas::builtin(BuiltinAtlas::Klein));
        [
            (
                "mobius",
                mobius_frame(mobius, &Metric::euclidean()).unwrap(),
                Metric::euclidean(),
                &[32, 32],
            ),
            (
                "klein",
                klein_frame(klein, &Metric::euclidean()).unwrap(),
                Metric::euclidean(),
                &[16, 16],
            ),
            ("s1", sphere_frame(1).unwrap(), Metric::euclidean(), &[512]),
            ("s3", sphere_frame(3).unwrap(), Metric::round(), &[1000]),
        ]
    };
    for (name, frame, metric, resolution) in cases {
        let atlas = frame.atlas().clone();
        let mut points = Vec::new();
        for grid in grids(&atlas, resolution) {
            points.extend(sample_chart(&atlas, &grid, 0xC0FFEE).unwrap());
        }
        assert!(points.len() >= 1000, "{name}: {} points", points.len());
        for structure in ["metric:J", "metric:F", "frame:J", "frame:F"] {
            let check = structure_check(structure, &frame, &metric, &points, 10, 0xC0FFEE).unwrap();
            assert!(
                check.identity_residual < 1e-12,
                "{name} {structure}: involution residual {}",
                check.identity_residual
            );
            if let Some(ok) = check.eigen_rank_ok {
                assert!(ok, "{name} {structure}: eigen ranks");
            }
            if structure.starts_with("metric") {
                assert!(
                    check.symmetry_residual < 1e-12,
                    "{name} {structure}: symmetry residual {}",
                    check.symmetry_residual
                );
            }
            if structure == "frame:J" {
                let agreement = check.agreement_residual.unwrap();
                assert!(agreement < 1e-10, "{name} frame:J agreement {agreement}");
            }
            if structure == "frame:F" && (name == "s1" || name == "s3") {
                let agreement = check.agreement_residual.unwrap();
                assert!(agreement < 1e-10, "{name} frame:F agreement {agreement}");
            }
        }
    }
    budget(5, start.elapsed(), Duration::from_secs(10));
    pass(5, "structure identities on mobius/klein/s1/s3");
}

/// Criterion 6: the Gram matrix of the six-section quaternionic frame is
/// the identity within 1e-12 at 10^4 sampled unit quaternions.
#[test]
fn criterion_6_s3_orthonormality() {
    let frame = sphere_frame(3).unwrap();
    let atlas = frame.atlas().clone();
    let points = sample_unit_sphere(&atlas, 10_000, 0xC0FFEE).unwrap();
    assert_eq!(points.len(), 10_000);
    let mut max_defect: f64 = 0.0;
    for p in &points {
        let values = frame.eval_all(p).unwrap();
        for (i, a) in values.iter().enumerate() {
            for (j, b) in values.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                max_defect = max_defect.max((a.block_dot(b) - expected).abs());
            }
        }
    }
    assert!(max_defect < 1e-12, "Gram identity defect {max_defect}");
    pass(6, "S^3 quaternionic frame Gram = identity within 1e-12");
}

/// Criterion 7: the stable-range bound certifies two copies for every
/// sphere: allard_min_copies(1, n + 1) = 2 for 1 <= n <= 10^6.
#[test]
fn criterion_7_stable_range_bound() {
    let start = Instant::now();
    for n in 1..=1_000_000u64 {
        assert_eq!(allard_min_copies(1, n + 1).unwrap(), 2, "n = {n}");
    }
    budget(7, start.elapsed(), Duration::from_secs(1));
    pass(7, "stable-range bound: two copies suffice for every S^n");
}

/// Criterion 8: negative controls. A duplicated-section frame has Gram
/// determinant 0 and a failing report; the orientation probe flags the
/// Möbius strip and Klein bottle and clears the flat torus.
#[test]
fn criterion_8_negative_controls() {
    let atlas = Arc::new(Atlas::builtin(BuiltinAtlas::Mobius));
    let metric = Metric::euclidean();
    let frame = mobius_frame(atlas.clone(), &metric).unwrap();
    let mut sections = frame.sections().to_vec();
    sections[3] = sections[2].clone();
    let degenerate = SectionFrame::new(
        "degenerate",
        atlas.clone(),
        sections,
        genbundle_core::frame::FrameProvenance::User,
    )
    .unwrap();
    let p = atlas.point("U", vec![0.3, 0.1]).unwrap();
    let (det, _) = gram_det(&degenerate, &p).unwrap();
    assert!(det.abs() < 1e-12, "duplicated-section Gram det {det}");
    let report = verify_frame(
        &degenerate,
        &grids(&atlas, &[20, 10]),
        &Tolerances::default(),
        0xC0FFEE,
        100,
    )
    .unwrap();
    assert!(!report.pass);

    let probe = |which| orientability_probe(&Atlas::builtin(which), 32).unwrap();
    assert_eq!(probe(BuiltinAtlas::Mobius), Orientability::Nonorientable);
    assert_eq!(probe(BuiltinAtlas::Klein), Orientability::Nonorientable);
    assert_eq!(
        probe(BuiltinAtlas::Torus),
        Orientability::OrientableEvidence
    );
    pass(
        8,
        "degenerate frame fails; orientation probe classifies correctly",
    );
}

/// Criterion 9: two runs of `verify` with the same config and seed produce
/// byte-identical JSON reports.
#[test]
fn criterion_9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let out = Command::new(env!("CARGO_BIN_EXE_genbundle"))
            .current_dir(dir.path())
            .args(["verify", "--out", name])
            .output()
            .unwrap();
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "reports differ between identical runs");

    // the default config is the checked-in one, and an in-process run
    // reproduces the binary's report byte for byte
    let checked_in = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json"),
    )
    .unwrap();
    let parsed = SuiteConfig::from_json(&checked_in).unwrap();
    assert_eq!(parsed, SuiteConfig::default_suite());
    let run = run_suite(&parsed).unwrap();
    assert!(run.all_pass());
    assert_eq!(run.reports.len(), 4);
    assert_eq!(run.to_json().as_bytes(), &a[..]);
    pass(9, "byte-identical reports across runs");
}
