//! Global sections of the generalized tangent bundle, given per chart by
//! closed-form component functions.
//!
//! A section stores an evaluation rule plus its declared chart coverage;
//! whether the per-chart expressions actually agree across overlaps is a
//! numerical check (`verify::overlap_consistency`), not a construction-time
//! guarantee.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::manifold::{Atlas, GenVector, ManifoldPoint};
use crate::metric::Metric;

type SectionFn = dyn Fn(&ManifoldPoint) -> Result<GenVector> + Send + Sync;
type BoundComponents = BTreeMap<String, (Vec<String>, Vec<Expr>, Vec<Expr>)>;

/// Named section with per-chart evaluation. Cheap to clone.
#[derive(Clone)]
pub struct Section {
    name: String,
    charts: Vec<String>,
    eval: Arc<SectionFn>,
}

impl fmt::Debug for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Section({}; charts {:?})", self.name, self.charts)
    }
}

impl Section {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn charts(&self) -> &[String] {
        &self.charts
    }

    pub fn covers(&self, chart: &str) -> bool {
        self.charts.iter().any(|c| c == chart)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Section {
        self.name = name.into();
        self
    }

    /// Evaluates the section at a point of a covered chart.
    pub fn eval(&self, p: &ManifoldPoint) -> Result<GenVector> {
        if !self.covers(&p.chart) {
            return Err(Error::SectionUndefined {
                section: self.name.clone(),
                chart: p.chart.clone(),
            });
        }
        (self.eval)(p)
    }

    /// Section from per-chart tangent and covector component expressions.
    pub fn from_exprs(
        name: impl Into<String>,
        atlas: &Arc<Atlas>,
        per_chart: BTreeMap<String, (Vec<Expr>, Vec<Expr>)>,
    ) -> Result<Section> {
        let name = name.into();
        let dim = atlas.component_dim();
        let mut bound: BoundComponents = BTreeMap::new();
        for (chart_name, (tangent, covector)) in per_chart {
            let chart = atlas.chart(&chart_name)?;
            for slot in [&tangent, &covector] {
                if slot.len() != dim {
                    return Err(Error::ComponentLength {
                        got: slot.len(),
                        expected: dim,
                    });
                }
                for e in slot {
                    e.validate(&chart.coords)?;
                }
            }
            bound.insert(chart_name, (chart.coords.clone(), tangent, covector));
        }
        let charts: Vec<String> = bound.keys().cloned().collect();
        let section_name = name.clone();
        let eval = move |p: &ManifoldPoint| -> Result<GenVector> {
            let (coords, tangent, covector) =
                bound.get(&p.chart).ok_or_else(|| Error::SectionUndefined {
                    section: section_name.clone(),
                    chart: p.chart.clone(),
                })?;
            let values: Vec<f64> = p.coords.iter().copied().collect();
            let t = DVector::from_iterator(
                tangent.len(),
                tangent.iter().map(|e| e.eval(coords, &values)),
            );
            let c = DVector::from_iterator(
                covector.len(),
                covector.iter().map(|e| e.eval(coords, &values)),
            );
            Ok(GenVector {
                base: p.clone(),
                tangent: t,
                covector: c,
            })
        };
        Ok(Section {
            name,
            charts,
            eval: Arc::new(eval),
        })
    }

    /// Purely tangent section from per-chart component expressions.
    pub fn tangent_from_exprs(
        name: impl Into<String>,
        atlas: &Arc<Atlas>,
        per_chart: BTreeMap<String, Vec<Expr>>,
    ) -> Result<Section> {
        let dim = atlas.component_dim();
        let zero = || vec![Expr::Num(0.0); dim];
        let full = per_chart
            .into_iter()
            .map(|(chart, tangent)| (chart, (tangent, zero())))
            .collect();
        Section::from_exprs(name, atlas, full)
    }

    /// Purely tangent section defined by one closure on every chart.
    pub fn tangent_from_fn(
        name: impl Into<String>,
        atlas: &Arc<Atlas>,
        f: impl Fn(&ManifoldPoint) -> DVector<f64> + Send + Sync + 'static,
    ) -> Section {
        let charts: Vec<String> = atlas.charts().iter().map(|c| c.name.clone()).collect();
        let dim = atlas.component_dim();
        let eval = move |p: &ManifoldPoint| -> Result<GenVector> {
            Ok(GenVector {
                base: p.clone(),
                tangent: f(p),
                covector: DVector::zeros(dim),
            })
        };
        Section {
            name: name.into(),
            charts,
            eval: Arc::new(eval),
        }
    }

    /// The musical image of `inner`'s tangent part: a purely covector
    /// section with components `G(p) X(p)`.
    pub fn flat_of(
        name: impl Into<String>,
        atlas: Arc<Atlas>,
        metric: Metric,
        inner: Section,
    ) -> Section {
        let charts = inner.charts.clone();
        let eval = move |p: &ManifoldPoint| -> Result<GenVector> {
            let v = inner.eval(p)?;
            let covector = metric.flat(&atlas, p, &v.tangent)?;
            Ok(GenVector {
                base: p.clone(),
                tangent: DVector::zeros(v.tangent.len()),
                covector,
            })
        };
        Section {
            name: name.into(),
            charts,
            eval: Arc::new(eval),
        }
    }

    /// Pointwise linear combination; coverage is the intersection of the
    /// terms' coverages.
    pub fn combine(name: impl Into<String>, terms: Vec<(f64, Section)>) -> Section {
        let mut charts: Vec<String> = match terms.first() {
            Some((_, s)) => s.charts.clone(),
            None => Vec::new(),
        };
        for (_, s) in terms.iter().skip(1) {
            charts.retain(|c| s.covers(c));
        }
        let eval = move |p: &ManifoldPoint| -> Result<GenVector> {
            let mut acc: Option<GenVector> = None;
            for (weight, section) in &terms {
                let v = section.eval(p)?.scaled(*weight);
                acc = Some(match acc {
                    None => v,
                    Some(sum) => sum.try_add(&v)?,
                });
            }
            acc.ok_or(Error::BasePointMismatch)
        };
        Section {
            name: name.into(),
            charts,
            eval: Arc::new(eval),
        }
    }

    /// Identically zero section over the whole atlas.
    pub fn zero(name: impl Into<String>, atlas: &Arc<Atlas>) -> Section {
        let charts: Vec<String> = atlas.charts().iter().map(|c| c.name.clone()).collect();
        let dim = atlas.component_dim();
        Section {
            name: name.into(),
            charts,
            eval: Arc::new(move |p: &ManifoldPoint| Ok(GenVector::zero_at(p.clone(), dim))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::BuiltinAtlas;

    fn mobius() -> Arc<Atlas> {
        Arc::new(Atlas::builtin(BuiltinAtlas::Mobius))
    }

    fn expr(src: &str) -> Expr {
        Expr::parse(src).unwrap()
    }

    #[test]
    fn expr_section_evaluates_per_chart() {
        let atlas = mobius();
        let section = Section::tangent_from_exprs(
            "Y",
            &atlas,
            BTreeMap::from([
                ("U".to_string(), vec![expr("0"), expr("cos(pi*u)")]),
                ("V".to_string(), vec![expr("0"), expr("cos(pi*u)")]),
            ]),
        )
        .unwrap();
        let p = atlas.point("U", vec![0.25, 0.1]).unwrap();
        let v = section.eval(&p).unwrap();
        assert!((v.tangent[1] - (std::f64::consts::PI * 0.25).cos()).abs() < 1e-15);
        assert_eq!(v.covector.norm(), 0.0);
    }

    #[test]
    fn uncovered_chart_is_an_error() {
        let atlas = mobius();
        let section = Section::tangent_from_exprs(
            "partial",
            &atlas,
            BTreeMap::from([("U".to_string(), vec![expr("1"), expr("0")])]),
        )
        .unwrap();
        let p = atlas.point("V", vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            section.eval(&p),
            Err(Error::SectionUndefined { .. })
        ));
    }

    #[test]
    fn flat_and_combine() {
        let atlas = mobius();
        let y = Section::tangent_from_exprs(
            "Y",
            &atlas,
            BTreeMap::from([
                ("U".to_string(), vec![expr("0"), expr("cos(pi*u)")]),
                ("V".to_string(), vec![expr("0"), expr("cos(pi*u)")]),
            ]),
        )
        .unwrap();
        let flat_y = Section::flat_of("bY", atlas.clone(), Metric::euclidean(), y.clone());
        let p = atlas.point("U", vec![0.25, 0.1]).unwrap();
        let v = flat_y.eval(&p).unwrap();
        assert_eq!(v.tangent.norm(), 0.0);
        assert!((v.covector[1] - (std::f64::consts::PI * 0.25).cos()).abs() < 1e-15);

        let combo = Section::combine("Y - bY", vec![(1.0, y), (-1.0, flat_y)]);
        let w = combo.eval(&p).unwrap();
        assert!((w.tangent[1] + w.covector[1]).abs() < 1e-15);
        assert!(w.tangent[1] > 0.0 && w.covector[1] < 0.0);
    }

    #[test]
    fn wrong_component_count_is_rejected() {
        let atlas = mobius();
        let bad = Section::tangent_from_exprs(
            "bad",
            &atlas,
            BTreeMap::from([("U".to_string(), vec![expr("1")])]),
        );
        assert!(matches!(bad, Err(Error::ComponentLength { .. })));
    }
}
