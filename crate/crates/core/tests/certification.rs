//! The headline facts, exercised through the public API the way a
//! downstream consumer would.

use std::sync::Arc;

use genbundle_core::frame::{klein_frame, mobius_frame, sphere_frame};
use genbundle_core::manifold::{orientability_probe, Atlas, BuiltinAtlas, Orientability};
use genbundle_core::metric::Metric;
use genbundle_core::verify::{verify_frame, SampleGrid, Tolerances};
use genbundle_core::z2::{allard_min_copies, obstruction_trivial};

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

/// Parallelizable manifolds carry verified generalized frames.
#[test]
fn parallelizable_spheres_have_verified_frames() {
    for n in [1usize, 3] {
        let frame = sphere_frame(n).unwrap();
        let atlas = frame.atlas().clone();
        let report = verify_frame(
            &frame,
            &grids(&atlas, &[500]),
            &Tolerances::default(),
            1,
            200,
        )
        .unwrap();
        assert!(report.pass, "S^{n}: {report:?}");
    }
}

/// The converse fails: the Möbius strip and Klein bottle are not
/// orientable (so not parallelizable), yet their generalized tangent
/// bundles carry verified frames.
#[test]
fn nonorientable_surfaces_still_have_generalized_frames() {
    for which in [BuiltinAtlas::Mobius, BuiltinAtlas::Klein] {
        let atlas = Arc::new(Atlas::builtin(which));
        assert_eq!(
            orientability_probe(&atlas, 16).unwrap(),
            Orientability::Nonorientable
        );
        let frame = match which {
            BuiltinAtlas::Mobius => mobius_frame(atlas.clone(), &Metric::euclidean()).unwrap(),
            _ => klein_frame(atlas.clone(), &Metric::euclidean()).unwrap(),
        };
        let report = verify_frame(
            &frame,
            &grids(&atlas, &[40, 20]),
            &Tolerances::default(),
            1,
            200,
        )
        .unwrap();
        assert!(report.pass, "{which:?}: {report:?}");
        assert!((report.min_gram_det - 1.0).abs() < 1e-9);
    }
}

/// Projective spaces split along the power-of-two pattern, while the
/// stable-range bound settles every sphere with two copies.
#[test]
fn obstruction_pattern_and_stable_range() {
    for n in 1..=32usize {
        assert_eq!(obstruction_trivial(n).unwrap(), (n + 1).is_power_of_two());
        assert_eq!(allard_min_copies(1, n as u64 + 1).unwrap(), 2);
    }
}
