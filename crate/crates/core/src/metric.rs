//! Riemannian metrics, the musical isomorphisms, and the overlap
//! compatibility check for metrics on quotient atlases.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::manifold::{grid_points_rel, Atlas, ManifoldPoint};

type MetricFn = dyn Fn(&str, &[f64]) -> Option<DMatrix<f64>> + Send + Sync;

#[derive(Clone)]
enum MetricKind {
    /// Identity matrix in every chart. Globally well defined on the built-in
    /// quotient atlases because their transition Jacobians are orthogonal.
    ChartEuclidean,
    /// Round metric of an embedded sphere: the ambient restriction, acting
    /// as the identity on ambient component vectors.
    Round,
    /// One constant matrix used on every chart.
    Constant(DMatrix<f64>),
    /// Per-chart matrix of closed-form entries in that chart's coordinates.
    PerChart(BTreeMap<String, Vec<Vec<Expr>>>),
    /// Arbitrary callback; `None` marks the metric undefined on a chart.
    Custom(Arc<MetricFn>),
}

/// Symmetric positive-definite metric given per chart. Cheap to clone.
#[derive(Clone)]
pub struct Metric {
    kind: MetricKind,
    name: String,
}

impl fmt::Debug for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Metric({})", self.name)
    }
}

impl Metric {
    /// The chart-coordinate Euclidean metric (`flat`).
    pub fn euclidean() -> Metric {
        Metric {
            kind: MetricKind::ChartEuclidean,
            name: "flat".into(),
        }
    }

    /// The round metric of an embedded sphere.
    pub fn round() -> Metric {
        Metric {
            kind: MetricKind::Round,
            name: "round".into(),
        }
    }

    pub fn constant(matrix: DMatrix<f64>) -> Metric {
        Metric {
            kind: MetricKind::Constant(matrix),
            name: "constant".into(),
        }
    }

    /// Builds a metric from per-chart matrices of expressions, validated
    /// against each chart's coordinate names.
    pub fn from_chart_exprs(
        atlas: &Atlas,
        per_chart: BTreeMap<String, Vec<Vec<Expr>>>,
    ) -> Result<Metric> {
        let dim = atlas.component_dim();
        for (chart_name, rows) in &per_chart {
            let chart = atlas.chart(chart_name)?;
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(Error::ComponentLength {
                    got: rows.len(),
                    expected: dim,
                });
            }
            for row in rows {
                for entry in row {
                    entry.validate(&chart.coords)?;
                }
            }
        }
        Ok(Metric {
            kind: MetricKind::PerChart(per_chart),
            name: "per-chart".into(),
        })
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(&str, &[f64]) -> Option<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Metric {
        Metric {
            kind: MetricKind::Custom(Arc::new(f)),
            name: name.into(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Metric matrix at a point, in the point's chart basis.
    pub fn matrix_at(&self, atlas: &Atlas, p: &ManifoldPoint) -> Result<DMatrix<f64>> {
        let undefined = || Error::MetricUndefined {
            chart: p.chart.clone(),
        };
        let dim = atlas.component_dim();
        match &self.kind {
            MetricKind::ChartEuclidean => {
                if atlas.is_embedded() {
                    return Err(undefined());
                }
                Ok(DMatrix::identity(dim, dim))
            }
            MetricKind::Round => {
                if !atlas.is_embedded() {
                    return Err(undefined());
                }
                Ok(DMatrix::identity(dim, dim))
            }
            MetricKind::Constant(m) => Ok(m.clone()),
            MetricKind::PerChart(map) => {
                let rows = map.get(&p.chart).ok_or_else(undefined)?;
                let coords = &atlas.chart(&p.chart)?.coords;
                let values: Vec<f64> = p.coords.iter().copied().collect();
                Ok(DMatrix::from_fn(dim, dim, |r, c| {
                    rows[r][c].eval(coords, &values)
                }))
            }
            MetricKind::Custom(f) => f(&p.chart, p.coords.as_slice()).ok_or_else(undefined),
        }
    }

    /// Lowers a tangent vector: covector components `G(p) x`.
    pub fn flat(&self, atlas: &Atlas, p: &ManifoldPoint, x: &DVector<f64>) -> Result<DVector<f64>> {
        if matches!(self.kind, MetricKind::Round) && atlas.is_embedded() {
            return Ok(x.clone());
        }
        Ok(self.matrix_at(atlas, p)? * x)
    }

    /// Raises a covector: solves `G(p) x = xi`.
    pub fn sharp(
        &self,
        atlas: &Atlas,
        p: &ManifoldPoint,
        xi: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        if matches!(self.kind, MetricKind::Round) && atlas.is_embedded() {
            return Ok(xi.clone());
        }
        let g = self.matrix_at(atlas, p)?;
        g.lu().solve(xi).ok_or_else(|| Error::SingularMetric {
            chart: p.chart.clone(),
        })
    }

    /// Smallest eigenvalue of the metric over sample points of every chart;
    /// positivity is the positive-definiteness evidence.
    pub fn min_eigenvalue(&self, atlas: &Atlas, samples_per_chart: usize) -> Result<f64> {
        if atlas.is_embedded() {
            // Ambient restriction: eigenvalues are identically 1.
            return Ok(1.0);
        }
        let mut min_eig = f64::INFINITY;
        for chart in atlas.charts() {
            for x in grid_points_rel(&chart.domain, samples_per_chart) {
                let p = ManifoldPoint {
                    chart: chart.name.clone(),
                    coords: DVector::from_vec(x),
                };
                let g = self.matrix_at(atlas, &p)?;
                let eig = g.symmetric_eigen();
                min_eig = min_eig.min(eig.eigenvalues.min());
            }
        }
        Ok(min_eig)
    }
}

/// Maximum over overlap samples of the congruence defect
/// `|G_to - J^{-T} G_from J^{-1}|`: zero exactly when the per-chart matrices
/// describe one global metric. The built-in Euclidean metric returns 0.0 on
/// the Möbius and Klein atlases because their transitions are isometries.
pub fn metric_compatibility_check(
    atlas: &Atlas,
    metric: &Metric,
    samples_per_branch: usize,
) -> Result<f64> {
    if atlas.is_embedded() {
        return Ok(0.0);
    }
    let mut max_residual: f64 = 0.0;
    for t in atlas.transitions() {
        for branch in &t.branches {
            for x in grid_points_rel(&branch.domain, samples_per_branch) {
                let p_from = ManifoldPoint {
                    chart: t.from.clone(),
                    coords: DVector::from_column_slice(&x),
                };
                let g_from = metric.matrix_at(atlas, &p_from)?;
                let y = branch.apply(&x);
                let p_to = ManifoldPoint {
                    chart: t.to.clone(),
                    coords: y,
                };
                let g_to = metric.matrix_at(atlas, &p_to)?;
                let jac = branch.jacobian(&x);
                let inv = jac.clone().try_inverse().ok_or(Error::SingularJacobian {
                    det: jac.determinant(),
                })?;
                let transported = inv.transpose() * g_from * inv;
                let defect = (&g_to - &transported).abs().max();
                max_residual = max_residual.max(defect);
            }
        }
    }
    Ok(max_residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::BuiltinAtlas;

    fn mobius() -> Atlas {
        Atlas::builtin(BuiltinAtlas::Mobius)
    }

    #[test]
    fn euclidean_flat_is_identity_on_components() {
        let atlas = mobius();
        let g = Metric::euclidean();
        let p = atlas.point("U", vec![0.3, 0.2]).unwrap();
        let x = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(g.flat(&atlas, &p, &x).unwrap(), x);
    }

    #[test]
    fn coordinate_dependent_flat() {
        let atlas = mobius();
        // G = diag(1, 1 + u^2); at u = 1 the second diagonal entry is 2.
        // (Evaluated through the custom callback off the chart domain, as a
        // pure matrix-vector check.)
        let g = Metric::custom("diag(1,1+u^2)", |_, x| {
            Some(DMatrix::from_diagonal(&DVector::from_vec(vec![
                1.0,
                1.0 + x[0] * x[0],
            ])))
        });
        let p = ManifoldPoint {
            chart: "U".into(),
            coords: DVector::from_vec(vec![1.0, 0.0]),
        };
        let x = DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(
            g.flat(&atlas, &p, &x).unwrap(),
            DVector::from_vec(vec![0.0, 2.0])
        );
    }

    #[test]
    fn sharp_solves_the_metric_system() {
        let atlas = mobius();
        let g = Metric::constant(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0])));
        let p = atlas.point("U", vec![0.3, 0.2]).unwrap();
        let xi = DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(
            g.sharp(&atlas, &p, &xi).unwrap(),
            DVector::from_vec(vec![0.0, 0.5])
        );
        // Euclidean metric is its own inverse.
        let e = Metric::euclidean();
        assert_eq!(e.sharp(&atlas, &p, &xi).unwrap(), xi);
    }

    #[test]
    fn flat_then_sharp_is_identity() {
        let atlas = mobius();
        let g = Metric::constant(DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.5]));
        let p = atlas.point("U", vec![0.4, -0.2]).unwrap();
        let x = DVector::from_vec(vec![0.7, -1.3]);
        let back = g
            .sharp(&atlas, &p, &g.flat(&atlas, &p, &x).unwrap())
            .unwrap();
        assert!((back - x).norm() < 1e-12);
    }

    #[test]
    fn flat_sharp_roundtrip_on_random_spd_metrics() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        // Seeded SPD matrices with eigenvalues log-uniform over six decades
        // (condition number up to 1e6). The roundtrip error of an LU solve
        // grows like cond * eps, so the 1e-12 bound is asserted where it is
        // attainable and a backward-stability bound covers the ill-
        // conditioned tail.
        let atlas = mobius();
        let p = atlas.point("U", vec![0.4, -0.2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _case in 0..200 {
            let a = DMatrix::from_fn(2, 2, |_, _| {
                rng.sample::<f64, _>(rand_distr::StandardNormal)
            });
            let q = a.qr().q();
            let eig = DVector::from_fn(2, |_, _| 10f64.powf(rng.random_range(-3.0..3.0)));
            let cond = eig.max() / eig.min();
            let sym = &q * DMatrix::from_diagonal(&eig) * q.transpose();
            let g = Metric::constant((&sym + sym.transpose()) * 0.5);
            let x = DVector::from_fn(2, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            let back = g
                .sharp(&atlas, &p, &g.flat(&atlas, &p, &x).unwrap())
                .unwrap();
            let rel = (back - &x).norm() / x.norm().max(1e-30);
            if cond <= 1e3 {
                assert!(rel < 1e-12, "cond {cond:.1e}: roundtrip error {rel:.1e}");
            } else {
                let bound = 100.0 * f64::EPSILON * cond;
                assert!(
                    rel < bound,
                    "cond {cond:.1e}: roundtrip error {rel:.1e} > {bound:.1e}"
                );
            }
        }
    }

    #[test]
    fn flat_metric_is_exactly_compatible_on_mobius_and_klein() {
        for which in [BuiltinAtlas::Mobius, BuiltinAtlas::Klein] {
            let atlas = Atlas::builtin(which);
            let residual = metric_compatibility_check(&atlas, &Metric::euclidean(), 32).unwrap();
            assert_eq!(residual, 0.0, "{which:?}");
        }
    }

    #[test]
    fn chart_dependent_metric_is_flagged_incompatible() {
        let atlas = mobius();
        // diag(1, 1 + u) on chart U only, Euclidean elsewhere: transition
        // congruence cannot hold on the overlap.
        let g = Metric::custom("broken", |chart, x| {
            Some(if chart == "U" {
                DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0 + x[0]]))
            } else {
                DMatrix::identity(2, 2)
            })
        });
        let residual = metric_compatibility_check(&atlas, &g, 32).unwrap();
        assert!(residual > 0.05, "residual {residual}");
    }

    #[test]
    fn single_chart_atlas_is_vacuously_compatible() {
        use crate::manifold::{Chart, Rect};
        let atlas = Atlas::from_parts(
            "strip",
            vec![Chart::new(
                "only",
                vec!["u".into(), "v".into()],
                Rect::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(),
            )
            .unwrap()],
            vec![],
        )
        .unwrap();
        let g = Metric::custom("anything", |_, x| {
            Some(DMatrix::from_diagonal(&DVector::from_vec(vec![
                1.0,
                1.0 + x[0],
            ])))
        });
        assert_eq!(metric_compatibility_check(&atlas, &g, 16).unwrap(), 0.0);
    }

    #[test]
    fn undefined_chart_is_an_error() {
        let atlas = mobius();
        let g = Metric::custom("partial", |chart, _| {
            (chart == "U").then(|| DMatrix::identity(2, 2))
        });
        let p = ManifoldPoint {
            chart: "V".into(),
            coords: DVector::from_vec(vec![0.0, 0.0]),
        };
        assert!(matches!(
            g.flat(&atlas, &p, &DVector::from_vec(vec![1.0, 0.0])),
            Err(Error::MetricUndefined { .. })
        ));
        assert!(metric_compatibility_check(&atlas, &g, 8).is_err());
    }

    #[test]
    fn round_metric_requires_embedded_backend() {
        let atlas = mobius();
        let p = atlas.point("U", vec![0.3, 0.2]).unwrap();
        assert!(Metric::round().matrix_at(&atlas, &p).is_err());

        let sphere = Atlas::builtin(BuiltinAtlas::Sphere(2));
        let q = sphere.point("ambient", vec![0.0, 0.0, 1.0]).unwrap();
        assert!(Metric::euclidean().matrix_at(&sphere, &q).is_err());
        let xi = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!(Metric::round().sharp(&sphere, &q, &xi).unwrap(), xi);
    }

    #[test]
    fn positive_definiteness_evidence() {
        let atlas = mobius();
        assert_eq!(Metric::euclidean().min_eigenvalue(&atlas, 16).unwrap(), 1.0);
        let indefinite =
            Metric::constant(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5])));
        assert!(indefinite.min_eigenvalue(&atlas, 16).unwrap() < 0.0);
    }
}
