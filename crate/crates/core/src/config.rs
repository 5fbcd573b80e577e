//! Declarative configuration for the verification suite: atlases, metrics,
//! frames and extra sections, all loadable from JSON.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::frame::{
    circle_frame, klein_fields, klein_frame, mobius_fields, mobius_frame, quaternion_frame,
    FrameProvenance, SectionFrame,
};
use crate::manifold::{Atlas, BranchMap, Chart, Rect, Transition, TransitionBranch};
use crate::metric::Metric;
use crate::section::Section;
use crate::verify::Tolerances;

/// The checked-in defaults: seed, tolerances and the four built-in frames.
/// `configs/default.json` in the repository holds the same content.
pub const DEFAULT_CONFIG_JSON: &str = r#"{
  "seed": 12648430,
  "tolerances": {
    "det_tol": 1e-8,
    "rcond_tol": 1e-10,
    "overlap_tol": 1e-10,
    "op_tol": 1e-12,
    "agreement_tol": 1e-10
  },
  "items": [
    {
      "name": "mobius",
      "atlas": "mobius",
      "metric": "flat",
      "frame": "mobius",
      "grid": { "resolution": [200, 50], "margin": 0.001 },
      "structure_grid": { "resolution": [32, 16], "margin": 0.001 },
      "structures": ["metric:J", "metric:F", "frame:J", "frame:F"],
      "random_inputs": 10,
      "overlap_samples": 1000,
      "extra_sections": ["mobius:X", "mobius:Y", "mobius:Z"]
    },
    {
      "name": "klein",
      "atlas": "klein",
      "metric": "flat",
      "frame": "klein",
      "grid": { "resolution": [100, 100], "margin": 0.001 },
      "structure_grid": { "resolution": [16, 16], "margin": 0.001 },
      "structures": ["metric:J", "metric:F", "frame:J", "frame:F"],
      "random_inputs": 10,
      "overlap_samples": 1000,
      "extra_sections": ["klein:X", "klein:Y", "klein:Z"]
    },
    {
      "name": "s1",
      "atlas": "circle",
      "metric": "flat",
      "frame": "s1",
      "grid": { "resolution": [10000], "margin": 0.001 },
      "structure_grid": { "resolution": [512], "margin": 0.001 },
      "structures": ["metric:J", "metric:F", "frame:J", "frame:F"],
      "random_inputs": 10,
      "overlap_samples": 1000
    },
    {
      "name": "s3",
      "atlas": "sphere(3)",
      "metric": "round",
      "frame": "s3",
      "grid": { "resolution": [10000], "margin": 0.001 },
      "structure_grid": { "resolution": [1000], "margin": 0.001 },
      "structures": ["metric:J", "metric:F", "frame:J", "frame:F"],
      "random_inputs": 10,
      "overlap_samples": 1000
    }
  ]
}
"#;

fn default_seed() -> u64 {
    0x00C0_FFEE
}

fn default_random_inputs() -> usize {
    10
}

fn default_overlap_samples() -> usize {
    1000
}

fn default_margin() -> f64 {
    1e-3
}

/// Full suite description: what to verify and at which tolerances.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub items: Vec<ItemConfig>,
}

impl SuiteConfig {
    pub fn from_json(text: &str) -> Result<SuiteConfig> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The checked-in default suite.
    pub fn default_suite() -> SuiteConfig {
        SuiteConfig::from_json(DEFAULT_CONFIG_JSON).expect("default config parses")
    }
}

/// One verification item: an atlas, a metric, a frame, grids and the
/// structure checks to run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ItemConfig {
    pub name: String,
    pub atlas: AtlasSpec,
    #[serde(default = "MetricSpec::flat")]
    pub metric: MetricSpec,
    pub frame: FrameSpec,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure_grid: Option<GridSpec>,
    #[serde(default)]
    pub structures: Vec<String>,
    #[serde(default = "default_random_inputs")]
    pub random_inputs: usize,
    #[serde(default = "default_overlap_samples")]
    pub overlap_samples: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_sections: Vec<SectionRef>,
}

/// Per-chart grid: per-axis resolution for rectangular charts; for the
/// embedded backend the product of the entries is the number of sampled
/// unit vectors.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub resolution: Vec<usize>,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum AtlasSpec {
    /// `mobius`, `klein`, `circle`, `torus` or `sphere(N)`.
    Builtin(String),
    Custom(AtlasDef),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AtlasDef {
    pub name: String,
    pub charts: Vec<ChartDef>,
    #[serde(default)]
    pub transitions: Vec<TransitionDef>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChartDef {
    pub name: String,
    pub coords: Vec<String>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TransitionDef {
    pub from: String,
    pub to: String,
    pub branches: Vec<BranchDef>,
}

/// One overlap branch: its source rectangle, the map components and the
/// explicit Jacobian, all as expressions in the source chart's coordinates.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BranchDef {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub map: Vec<String>,
    pub jacobian: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum MetricSpec {
    /// `flat` (chart Euclidean) or `round` (embedded sphere).
    Named(String),
    PerChart {
        per_chart: BTreeMap<String, Vec<Vec<String>>>,
    },
}

impl MetricSpec {
    fn flat() -> MetricSpec {
        MetricSpec::Named("flat".into())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum FrameSpec {
    /// `mobius`, `klein`, `s1` or `s3`.
    Builtin(String),
    Sections {
        sections: Vec<SectionDef>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SectionDef {
    pub name: String,
    pub charts: BTreeMap<String, ComponentsDef>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ComponentsDef {
    #[serde(default)]
    pub tangent: Vec<String>,
    #[serde(default)]
    pub covector: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SectionRef {
    /// Built-in field by name: `mobius:X`, `mobius:Y`, `mobius:Z`,
    /// `klein:X`, `klein:Y`, `klein:Z`.
    Named(String),
    Inline(SectionDef),
}

pub fn build_atlas(spec: &AtlasSpec) -> Result<Arc<Atlas>> {
    match spec {
        AtlasSpec::Builtin(name) => Ok(Arc::new(Atlas::from_name(name)?)),
        AtlasSpec::Custom(def) => {
            let mut charts = Vec::with_capacity(def.charts.len());
            for c in &def.charts {
                charts.push(Chart::new(
                    c.name.clone(),
                    c.coords.clone(),
                    Rect::new(c.lo.clone(), c.hi.clone())?,
                )?);
            }
            let mut transitions = Vec::with_capacity(def.transitions.len());
            for t in &def.transitions {
                let from_chart = charts.iter().find(|c| c.name == t.from).ok_or_else(|| {
                    Error::UnknownChart {
                        atlas: def.name.clone(),
                        chart: t.from.clone(),
                    }
                })?;
                let coords = from_chart.coords.clone();
                let dim = coords.len();
                let mut branches = Vec::with_capacity(t.branches.len());
                for b in &t.branches {
                    if b.map.len() != dim
                        || b.jacobian.len() != dim
                        || b.jacobian.iter().any(|row| row.len() != dim)
                    {
                        return Err(Error::BadConfig(format!(
                            "branch of {} -> {} must have {dim} map components and a {dim}x{dim} jacobian",
                            t.from, t.to
                        )));
                    }
                    let parse_all = |texts: &[String]| -> Result<Vec<Expr>> {
                        texts
                            .iter()
                            .map(|s| {
                                let e = Expr::parse(s)?;
                                e.validate(&coords)?;
                                Ok(e)
                            })
                            .collect()
                    };
                    let components = parse_all(&b.map)?;
                    let jacobian: Vec<Vec<Expr>> = b
                        .jacobian
                        .iter()
                        .map(|row| parse_all(row))
                        .collect::<Result<_>>()?;
                    branches.push(TransitionBranch {
                        domain: Rect::new(b.lo.clone(), b.hi.clone())?,
                        map: BranchMap::Formula {
                            coords: coords.clone(),
                            components,
                            jacobian,
                        },
                    });
                }
                transitions.push(Transition {
                    from: t.from.clone(),
                    to: t.to.clone(),
                    branches,
                });
            }
            Ok(Arc::new(Atlas::from_parts(
                def.name.clone(),
                charts,
                transitions,
            )?))
        }
    }
}

pub fn build_metric(spec: &MetricSpec, atlas: &Arc<Atlas>) -> Result<Metric> {
    match spec {
        MetricSpec::Named(name) => match name.as_str() {
            "flat" | "euclidean" => Ok(Metric::euclidean()),
            "round" => Ok(Metric::round()),
            other => Err(Error::BadConfig(format!(
                "unknown metric `{other}` (expected `flat`, `round` or a per-chart table)"
            ))),
        },
        MetricSpec::PerChart { per_chart } => {
            let mut parsed = BTreeMap::new();
            for (chart, rows) in per_chart {
                let rows: Vec<Vec<Expr>> = rows
                    .iter()
                    .map(|row| row.iter().map(|s| Expr::parse(s)).collect())
                    .collect::<Result<_>>()?;
                parsed.insert(chart.clone(), rows);
            }
            Metric::from_chart_exprs(atlas, parsed)
        }
    }
}

pub fn build_section(def: &SectionDef, atlas: &Arc<Atlas>) -> Result<Section> {
    let dim = atlas.component_dim();
    let mut per_chart = BTreeMap::new();
    for (chart, comps) in &def.charts {
        let parse_slot = |texts: &[String]| -> Result<Vec<Expr>> {
            if texts.is_empty() {
                return Ok(vec![Expr::Num(0.0); dim]);
            }
            texts.iter().map(|s| Expr::parse(s)).collect()
        };
        per_chart.insert(
            chart.clone(),
            (parse_slot(&comps.tangent)?, parse_slot(&comps.covector)?),
        );
    }
    Section::from_exprs(def.name.clone(), atlas, per_chart)
}

pub fn resolve_section_ref(reference: &SectionRef, atlas: &Arc<Atlas>) -> Result<Section> {
    match reference {
        SectionRef::Inline(def) => build_section(def, atlas),
        SectionRef::Named(name) => {
            let pick = |fields: [Section; 3], which: &str| -> Result<Section> {
                match which {
                    "X" => Ok(fields[0].clone()),
                    "Y" => Ok(fields[1].clone()),
                    "Z" => Ok(fields[2].clone()),
                    _ => Err(Error::UnknownSection(name.clone())),
                }
            };
            match name.split_once(':') {
                Some(("mobius", which)) => pick(mobius_fields(atlas)?, which),
                Some(("klein", which)) => pick(klein_fields(atlas)?, which),
                _ => Err(Error::UnknownSection(name.clone())),
            }
        }
    }
}

pub fn build_frame(spec: &FrameSpec, atlas: &Arc<Atlas>, metric: &Metric) -> Result<SectionFrame> {
    match spec {
        FrameSpec::Builtin(name) => match name.as_str() {
            "mobius" => mobius_frame(atlas.clone(), metric),
            "klein" => klein_frame(atlas.clone(), metric),
            "s1" | "circle" => circle_frame(atlas.clone(), metric),
            "s3" => quaternion_frame(atlas.clone(), metric),
            other => Err(Error::BadConfig(format!(
                "unknown frame `{other}` (expected `mobius`, `klein`, `s1`, `s3` or inline sections)"
            ))),
        },
        FrameSpec::Sections { sections } => {
            let built: Vec<Section> = sections
                .iter()
                .map(|d| build_section(d, atlas))
                .collect::<Result<_>>()?;
            SectionFrame::new("user", atlas.clone(), built, FrameProvenance::User)
        }
    }
}
