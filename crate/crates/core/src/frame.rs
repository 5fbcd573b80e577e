//! Explicit trivializing frames of the generalized tangent bundle.
//!
//! A parallelizable manifold with pointwise independent fields `X^1..X^n`
//! yields the interleaved frame `X^1, bX^1, ..., X^n, bX^n` through the
//! musical isomorphism of any metric. The Möbius strip (not parallelizable)
//! still carries the four-section frame
//! `w1 = X, w2 = bX, w3 = Y - bZ, w4 = Z + bY` built from the fields
//! `X = d/du`, `Y = cos(pi u) d/dv`, `Z = sin(pi u) d/dv`; the Klein bottle
//! takes the same construction transplanted to its angle coordinate.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::manifold::{Atlas, BuiltinAtlas, GenVector, ManifoldPoint};
use crate::metric::{metric_compatibility_check, Metric};
use crate::section::Section;

/// Residual above which a metric is rejected as not globally defined.
pub const METRIC_COMPAT_TOL: f64 = 1e-9;

/// How a frame was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameProvenance {
    /// Interleaved fields and flats of a parallelizable atlas.
    Parallelizable,
    /// The explicit Möbius four-section construction.
    Mobius,
    /// The Möbius construction transplanted to the Klein bottle.
    Klein,
    /// Explicit sphere frame (circle coordinate field, quaternion fields).
    SphereExplicit,
    User,
}

/// Ordered list of `2n` global sections of the generalized tangent bundle.
#[derive(Clone, Debug)]
pub struct SectionFrame {
    name: String,
    atlas: Arc<Atlas>,
    sections: Vec<Section>,
    provenance: FrameProvenance,
}

impl SectionFrame {
    /// Wraps sections as a frame; there must be exactly `2 * dim` of them.
    /// Pointwise independence and overlap agreement are numerical checks,
    /// not construction-time guarantees.
    pub fn new(
        name: impl Into<String>,
        atlas: Arc<Atlas>,
        sections: Vec<Section>,
        provenance: FrameProvenance,
    ) -> Result<SectionFrame> {
        let expected = 2 * atlas.dim();
        if sections.len() != expected {
            return Err(Error::FrameSize {
                expected,
                got: sections.len(),
            });
        }
        Ok(SectionFrame {
            name: name.into(),
            atlas,
            sections,
            provenance,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> SectionFrame {
        self.name = name.into();
        self
    }

    pub fn atlas(&self) -> &Arc<Atlas> {
        &self.atlas
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    pub fn provenance(&self) -> FrameProvenance {
        self.provenance
    }

    /// Number of interleaved pairs, i.e. the manifold dimension.
    pub fn pairs(&self) -> usize {
        self.sections.len() / 2
    }

    /// Values of all sections at one point.
    pub fn eval_all(&self, p: &ManifoldPoint) -> Result<Vec<GenVector>> {
        self.sections.iter().map(|s| s.eval(p)).collect()
    }

    fn map_provenance(mut self, provenance: FrameProvenance) -> SectionFrame {
        self.provenance = provenance;
        self
    }
}

/// Interleaves `n` pointwise independent tangent fields with their metric
/// flats into a `2n`-section frame.
pub fn parallelizable_frame(
    atlas: Arc<Atlas>,
    fields: Vec<Section>,
    metric: &Metric,
) -> Result<SectionFrame> {
    if fields.len() != atlas.dim() {
        return Err(Error::FrameSize {
            expected: atlas.dim(),
            got: fields.len(),
        });
    }
    let mut sections = Vec::with_capacity(2 * fields.len());
    for field in fields {
        let flat_name = format!("flat_{}", field.name());
        sections.push(field.clone());
        sections.push(Section::flat_of(
            flat_name,
            atlas.clone(),
            metric.clone(),
            field,
        ));
    }
    SectionFrame::new(
        atlas.name().to_string(),
        atlas,
        sections,
        FrameProvenance::Parallelizable,
    )
}

fn angle_fields(atlas: &Arc<Atlas>) -> Result<[Section; 3]> {
    let charts: Vec<String> = atlas.charts().iter().map(|c| c.name.clone()).collect();
    let make = |name: &str, comps: [&str; 2]| -> Result<Section> {
        let mut per_chart = BTreeMap::new();
        for chart in &charts {
            per_chart.insert(
                chart.clone(),
                vec![Expr::parse(comps[0])?, Expr::parse(comps[1])?],
            );
        }
        Section::tangent_from_exprs(name, atlas, per_chart)
    };
    Ok([
        make("X", ["1", "0"])?,
        make("Y", ["0", "cos(pi*u)"])?,
        make("Z", ["0", "sin(pi*u)"])?,
    ])
}

/// The three global fields on the Möbius strip, as chart formulas valid in
/// both charts: `X = d/du`, `Y = cos(pi u) d/dv`, `Z = sin(pi u) d/dv`.
/// They descend through the gluing because `cos(pi(u-1)) = -cos(pi u)` and
/// `sin(pi(u-1)) = -sin(pi u)` cancel the sign of the flipped fibre
/// direction.
pub fn mobius_fields(atlas: &Arc<Atlas>) -> Result<[Section; 3]> {
    expect_charts(atlas, &["U", "V"], "mobius")?;
    angle_fields(atlas)
}

/// The same fields transplanted to the Klein bottle's `(u, theta)` charts;
/// they are independent of `theta`, hence descend through the angle gluing.
pub fn klein_fields(atlas: &Arc<Atlas>) -> Result<[Section; 3]> {
    expect_charts(atlas, &["U0", "U1", "V0", "V1"], "klein")?;
    angle_fields(atlas)
}

fn expect_charts(atlas: &Arc<Atlas>, expected: &[&str], label: &str) -> Result<()> {
    for chart in expected {
        atlas.chart(chart).map_err(|_| {
            Error::BadConfig(format!(
                "atlas `{}` does not have the {label} chart layout (missing chart `{chart}`)",
                atlas.name()
            ))
        })?;
    }
    Ok(())
}

fn angle_frame(
    name: &str,
    atlas: Arc<Atlas>,
    fields: [Section; 3],
    metric: &Metric,
    provenance: FrameProvenance,
) -> Result<SectionFrame> {
    let residual = metric_compatibility_check(&atlas, metric, 64)?;
    if residual > METRIC_COMPAT_TOL {
        return Err(Error::MetricIncompatible { residual });
    }
    let [x, y, z] = fields;
    let flat = |n: &str, s: Section| Section::flat_of(n, atlas.clone(), metric.clone(), s);
    let w1 = x.clone().with_name("w1");
    let w2 = flat("w2", x);
    let w3 = Section::combine("w3", vec![(1.0, y.clone()), (-1.0, flat("bZ", z.clone()))]);
    let w4 = Section::combine("w4", vec![(1.0, z), (1.0, flat("bY", y))]);
    SectionFrame::new(name, atlas, vec![w1, w2, w3, w4], provenance)
}

/// The four-section Möbius frame `(X, bX, Y - bZ, Z + bY)` for a globally
/// defined metric.
pub fn mobius_frame(atlas: Arc<Atlas>, metric: &Metric) -> Result<SectionFrame> {
    let fields = mobius_fields(&atlas)?;
    angle_frame("mobius", atlas, fields, metric, FrameProvenance::Mobius)
}

/// The Möbius construction on the Klein bottle.
pub fn klein_frame(atlas: Arc<Atlas>, metric: &Metric) -> Result<SectionFrame> {
    let fields = klein_fields(&atlas)?;
    angle_frame("klein", atlas, fields, metric, FrameProvenance::Klein)
}

/// Left multiplication of the quaternion `p` by the `unit`-th imaginary
/// basis quaternion (0 = i, 1 = j, 2 = k), Hamilton's convention.
fn quaternion_left_mult(unit: usize, p: &DVector<f64>) -> DVector<f64> {
    let (p0, p1, p2, p3) = (p[0], p[1], p[2], p[3]);
    let out = match unit {
        0 => [-p1, p0, -p3, p2],
        1 => [-p2, p3, p0, -p1],
        2 => [-p3, -p2, p1, p0],
        _ => unreachable!("imaginary units are 0..3"),
    };
    DVector::from_row_slice(&out)
}

/// The `(d/dtheta, dtheta)` frame of a one-dimensional chart atlas whose
/// transitions are translations (the built-in circle).
pub fn circle_frame(atlas: Arc<Atlas>, metric: &Metric) -> Result<SectionFrame> {
    if atlas.is_embedded() || atlas.dim() != 1 {
        return Err(Error::ChartBackendRequired("circle_frame"));
    }
    let mut per_chart = BTreeMap::new();
    for chart in atlas.charts() {
        per_chart.insert(chart.name.clone(), vec![Expr::parse("1")?]);
    }
    let field = Section::tangent_from_exprs("X", &atlas, per_chart)?;
    Ok(parallelizable_frame(atlas, vec![field], metric)?
        .map_provenance(FrameProvenance::SphereExplicit)
        .with_name("s1"))
}

/// The six-section quaternionic frame of the embedded three-sphere: left
/// multiplication fields interleaved with their metric flats.
pub fn quaternion_frame(atlas: Arc<Atlas>, metric: &Metric) -> Result<SectionFrame> {
    if !atlas.is_embedded() || atlas.dim() != 3 {
        return Err(Error::EmbeddedBackendRequired("quaternion_frame"));
    }
    let fields: Vec<Section> = (0..3)
        .map(|unit| {
            let name = ["X1", "X2", "X3"][unit];
            Section::tangent_from_fn(name, &atlas, move |p: &ManifoldPoint| {
                quaternion_left_mult(unit, &p.coords)
            })
        })
        .collect();
    Ok(parallelizable_frame(atlas, fields, metric)?
        .map_provenance(FrameProvenance::SphereExplicit)
        .with_name("s3"))
}

/// Explicit sphere frames: the circle's `(d/dtheta, dtheta)` pair, and the
/// six-section quaternionic frame of the three-sphere. Only dimensions 1
/// and 3 carry explicit constructions here; other spheres are handled by
/// the stable-range bound alone.
pub fn sphere_frame(n: usize) -> Result<SectionFrame> {
    match n {
        1 => circle_frame(
            Arc::new(Atlas::builtin(BuiltinAtlas::Circle)),
            &Metric::euclidean(),
        ),
        3 => quaternion_frame(
            Arc::new(Atlas::builtin(BuiltinAtlas::Sphere(3))),
            &Metric::round(),
        ),
        other => Err(Error::UnsupportedSphereFrame(other)),
    }
}
