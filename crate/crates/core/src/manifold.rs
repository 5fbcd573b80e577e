//! Chart-based and embedded presentations of the built-in manifolds, with
//! tangent/cotangent transport across chart overlaps.
//!
//! The quotient surfaces (circle, Möbius strip, Klein bottle, flat torus)
//! are presented as open rectangular charts glued by affine deck
//! transformations; every overlap is stored branch by branch as an explicit
//! rectangle with a closed-form map and Jacobian. Spheres use an embedded
//! backend: points are unit vectors in the ambient space and both slots of a
//! generalized vector are ambient vectors orthogonal to the base point.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::Expr;

/// Tolerance for the unit-norm invariant of embedded points.
pub const UNIT_NORM_TOL: f64 = 1e-12;
/// Tolerance for the tangency invariant of embedded generalized vectors.
pub const TANGENCY_TOL: f64 = 1e-10;
/// Tolerance under which two base points are considered equal.
pub const SAME_POINT_TOL: f64 = 1e-12;

/// Open axis-aligned rectangle.
#[derive(Clone, Debug, PartialEq)]
pub struct Rect {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// NaN-rejecting strict order.
fn strictly_below(a: f64, b: f64) -> bool {
    matches!(a.partial_cmp(&b), Some(std::cmp::Ordering::Less))
}

impl Rect {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Rect> {
        if lo.len() != hi.len()
            || lo.is_empty()
            || lo.iter().zip(&hi).any(|(&a, &b)| !strictly_below(a, b))
        {
            return Err(Error::EmptyRect);
        }
        Ok(Rect { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// Strict containment; the rectangle is open.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&xi, (&lo, &hi))| lo < xi && xi < hi)
    }

    /// Shrinks every axis inward by `margin`. Fails when a side collapses.
    pub fn shrink(&self, margin: f64, chart: &str) -> Result<Rect> {
        if margin <= 0.0 {
            return Err(Error::DegenerateDomain {
                chart: chart.into(),
                margin,
            });
        }
        let lo: Vec<f64> = self.lo.iter().map(|&a| a + margin).collect();
        let hi: Vec<f64> = self.hi.iter().map(|&b| b - margin).collect();
        if lo.iter().zip(&hi).any(|(&a, &b)| !strictly_below(a, b)) {
            return Err(Error::DegenerateDomain {
                chart: chart.into(),
                margin,
            });
        }
        Ok(Rect { lo, hi })
    }

    fn intersect(&self, other: &Rect) -> Option<Rect> {
        let lo: Vec<f64> = self
            .lo
            .iter()
            .zip(&other.lo)
            .map(|(&a, &b)| a.max(b))
            .collect();
        let hi: Vec<f64> = self
            .hi
            .iter()
            .zip(&other.hi)
            .map(|(&a, &b)| a.min(b))
            .collect();
        if lo.iter().zip(&hi).all(|(a, b)| a < b) {
            Some(Rect { lo, hi })
        } else {
            None
        }
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (lo, hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "({lo},{hi})")?;
        }
        Ok(())
    }
}

/// Named chart with an open rectangular coordinate domain.
#[derive(Clone, Debug)]
pub struct Chart {
    pub name: String,
    pub coords: Vec<String>,
    pub domain: Rect,
}

impl Chart {
    pub fn new(name: impl Into<String>, coords: Vec<String>, domain: Rect) -> Result<Chart> {
        if coords.len() != domain.dim() {
            return Err(Error::ComponentLength {
                got: coords.len(),
                expected: domain.dim(),
            });
        }
        Ok(Chart {
            name: name.into(),
            coords,
            domain,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
}

/// Closed-form overlap map together with its Jacobian.
#[derive(Clone, Debug)]
pub enum BranchMap {
    /// `x -> L x + c`; the Jacobian is the constant matrix `L`.
    Affine {
        linear: DMatrix<f64>,
        offset: DVector<f64>,
    },
    /// Componentwise formulas with an explicitly supplied Jacobian, both in
    /// the source chart's coordinates.
    Formula {
        coords: Vec<String>,
        components: Vec<Expr>,
        jacobian: Vec<Vec<Expr>>,
    },
}

/// One branch of a piecewise transition: the rectangle of source
/// coordinates it covers and the map on that rectangle.
#[derive(Clone, Debug)]
pub struct TransitionBranch {
    pub domain: Rect,
    pub map: BranchMap,
}

impl TransitionBranch {
    pub fn apply(&self, x: &[f64]) -> DVector<f64> {
        match &self.map {
            BranchMap::Affine { linear, offset } => linear * DVector::from_column_slice(x) + offset,
            BranchMap::Formula {
                coords, components, ..
            } => DVector::from_iterator(
                components.len(),
                components.iter().map(|e| e.eval(coords, x)),
            ),
        }
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.map {
            BranchMap::Affine { linear, .. } => linear.clone(),
            BranchMap::Formula {
                coords, jacobian, ..
            } => {
                let n = jacobian.len();
                DMatrix::from_fn(n, n, |r, c| jacobian[r][c].eval(coords, x))
            }
        }
    }
}

/// Piecewise transition between two charts.
#[derive(Clone, Debug)]
pub struct Transition {
    pub from: String,
    pub to: String,
    pub branches: Vec<TransitionBranch>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Backend {
    Charts,
    /// Unit sphere of the given manifold dimension in ambient dimension
    /// `dim + 1`.
    EmbeddedSphere {
        dim: usize,
    },
}

/// A manifold presented as charts plus transitions, or as an embedded
/// sphere. Immutable after construction.
#[derive(Clone, Debug)]
pub struct Atlas {
    name: String,
    backend: Backend,
    charts: Vec<Chart>,
    transitions: Vec<Transition>,
}

/// The built-in atlases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinAtlas {
    Mobius,
    Klein,
    Circle,
    Torus,
    Sphere(usize),
}

impl BuiltinAtlas {
    /// Parses `mobius`, `klein`, `circle`, `torus` or `sphere(N)`.
    pub fn parse(name: &str) -> Result<BuiltinAtlas> {
        match name {
            "mobius" => Ok(BuiltinAtlas::Mobius),
            "klein" => Ok(BuiltinAtlas::Klein),
            "circle" => Ok(BuiltinAtlas::Circle),
            "torus" => Ok(BuiltinAtlas::Torus),
            _ => {
                if let Some(rest) = name.strip_prefix("sphere(") {
                    if let Some(num) = rest.strip_suffix(')') {
                        if let Ok(n) = num.trim().parse::<usize>() {
                            if n >= 1 {
                                return Ok(BuiltinAtlas::Sphere(n));
                            }
                        }
                    }
                }
                Err(Error::UnknownAtlas(name.into()))
            }
        }
    }
}

/// Affine deck transformation with diagonal +-1 linear part; the gluing
/// maps of the built-in quotient surfaces all have this shape.
struct DeckMove {
    scale: Vec<f64>,
    offset: Vec<f64>,
}

impl DeckMove {
    fn preimage(&self, r: &Rect) -> Rect {
        // x maps into r iff scale_i * x_i + offset_i lies in (lo_i, hi_i)
        let mut lo = Vec::with_capacity(r.dim());
        let mut hi = Vec::with_capacity(r.dim());
        for i in 0..r.dim() {
            let (a, b) = (r.lo[i] - self.offset[i], r.hi[i] - self.offset[i]);
            if self.scale[i] > 0.0 {
                lo.push(a);
                hi.push(b);
            } else {
                lo.push(-b);
                hi.push(-a);
            }
        }
        Rect { lo, hi }
    }

    fn to_branch_map(&self) -> BranchMap {
        BranchMap::Affine {
            linear: DMatrix::from_diagonal(&DVector::from_column_slice(&self.scale)),
            offset: DVector::from_column_slice(&self.offset),
        }
    }
}

/// All transitions between chart pairs induced by a set of deck moves: the
/// branch from chart `i` to chart `j` through move `g` covers
/// `dom(i) ∩ g^{-1}(dom(j))` and applies `g` there.
fn transitions_from_decks(charts: &[Chart], decks: &[DeckMove]) -> Vec<Transition> {
    let mut transitions = Vec::new();
    for (i, from) in charts.iter().enumerate() {
        for (j, to) in charts.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut branches = Vec::new();
            for deck in decks {
                if let Some(domain) = from.domain.intersect(&deck.preimage(&to.domain)) {
                    branches.push(TransitionBranch {
                        domain,
                        map: deck.to_branch_map(),
                    });
                }
            }
            if !branches.is_empty() {
                transitions.push(Transition {
                    from: from.name.clone(),
                    to: to.name.clone(),
                    branches,
                });
            }
        }
    }
    transitions
}

impl Atlas {
    /// Builds one of the built-in atlases.
    pub fn builtin(which: BuiltinAtlas) -> Atlas {
        use std::f64::consts::PI;
        let uv = || vec!["u".to_string(), "v".to_string()];
        let utheta = || vec!["u".to_string(), "theta".to_string()];
        match which {
            BuiltinAtlas::Mobius => {
                // Quotient of R x (-1,1) by (u, v) ~ (u + m, (-1)^m v); chart
                // U takes representatives with 0 < u < 1, chart V with
                // -1/2 < u < 1/2.
                let charts = vec![
                    Chart::new(
                        "U",
                        uv(),
                        Rect::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap(),
                    )
                    .unwrap(),
                    Chart::new(
                        "V",
                        uv(),
                        Rect::new(vec![-0.5, -1.0], vec![0.5, 1.0]).unwrap(),
                    )
                    .unwrap(),
                ];
                let decks: Vec<DeckMove> = [-1i32, 0, 1]
                    .iter()
                    .map(|&m| DeckMove {
                        scale: vec![1.0, if m % 2 == 0 { 1.0 } else { -1.0 }],
                        offset: vec![m as f64, 0.0],
                    })
                    .collect();
                let transitions = transitions_from_decks(&charts, &decks);
                Atlas {
                    name: "mobius".into(),
                    backend: Backend::Charts,
                    charts,
                    transitions,
                }
            }
            BuiltinAtlas::Klein | BuiltinAtlas::Torus => {
                // u-structure as for the Möbius strip; the second coordinate
                // is an angle on a circle, covered by two angle charts. The
                // Klein gluing reflects the angle, the torus gluing does not.
                let charts = vec![
                    Chart::new(
                        "U0",
                        utheta(),
                        Rect::new(vec![0.0, -PI], vec![1.0, PI]).unwrap(),
                    )
                    .unwrap(),
                    Chart::new(
                        "U1",
                        utheta(),
                        Rect::new(vec![0.0, 0.0], vec![1.0, 2.0 * PI]).unwrap(),
                    )
                    .unwrap(),
                    Chart::new(
                        "V0",
                        utheta(),
                        Rect::new(vec![-0.5, -PI], vec![0.5, PI]).unwrap(),
                    )
                    .unwrap(),
                    Chart::new(
                        "V1",
                        utheta(),
                        Rect::new(vec![-0.5, 0.0], vec![0.5, 2.0 * PI]).unwrap(),
                    )
                    .unwrap(),
                ];
                let reflect = which == BuiltinAtlas::Klein;
                let mut decks = Vec::new();
                for m in [-1i32, 0, 1] {
                    for k in [-1i32, 0, 1] {
                        let s = if reflect && m % 2 != 0 { -1.0 } else { 1.0 };
                        decks.push(DeckMove {
                            scale: vec![1.0, s],
                            offset: vec![m as f64, s * 2.0 * PI * k as f64],
                        });
                    }
                }
                let transitions = transitions_from_decks(&charts, &decks);
                Atlas {
                    name: if reflect { "klein" } else { "torus" }.into(),
                    backend: Backend::Charts,
                    charts,
                    transitions,
                }
            }
            BuiltinAtlas::Circle => {
                let theta = || vec!["theta".to_string()];
                let charts = vec![
                    Chart::new("A", theta(), Rect::new(vec![-PI], vec![PI]).unwrap()).unwrap(),
                    Chart::new("B", theta(), Rect::new(vec![0.0], vec![2.0 * PI]).unwrap())
                        .unwrap(),
                ];
                let decks: Vec<DeckMove> = [-1i32, 0, 1]
                    .iter()
                    .map(|&k| DeckMove {
                        scale: vec![1.0],
                        offset: vec![2.0 * PI * k as f64],
                    })
                    .collect();
                let transitions = transitions_from_decks(&charts, &decks);
                Atlas {
                    name: "circle".into(),
                    backend: Backend::Charts,
                    charts,
                    transitions,
                }
            }
            BuiltinAtlas::Sphere(n) => {
                let coords = (0..=n).map(|i| format!("x{i}")).collect();
                let chart = Chart::new(
                    "ambient",
                    coords,
                    Rect::new(vec![f64::NEG_INFINITY; n + 1], vec![f64::INFINITY; n + 1]).unwrap(),
                )
                .unwrap();
                Atlas {
                    name: format!("sphere({n})"),
                    backend: Backend::EmbeddedSphere { dim: n },
                    charts: vec![chart],
                    transitions: Vec::new(),
                }
            }
        }
    }

    /// Builds a built-in atlas by name (`mobius`, `klein`, `circle`,
    /// `torus`, `sphere(N)`).
    pub fn from_name(name: &str) -> Result<Atlas> {
        Ok(Atlas::builtin(BuiltinAtlas::parse(name)?))
    }

    /// Builds a chart-backend atlas from user-supplied parts.
    pub fn from_parts(
        name: impl Into<String>,
        charts: Vec<Chart>,
        transitions: Vec<Transition>,
    ) -> Result<Atlas> {
        let name = name.into();
        if charts.is_empty() {
            return Err(Error::BadConfig(format!("atlas `{name}` has no charts")));
        }
        let dim = charts[0].dim();
        for c in &charts {
            if c.dim() != dim {
                return Err(Error::BadConfig(format!(
                    "atlas `{name}`: chart `{}` has dimension {}, expected {dim}",
                    c.name,
                    c.dim()
                )));
            }
            if charts.iter().filter(|d| d.name == c.name).count() > 1 {
                return Err(Error::BadConfig(format!(
                    "atlas `{name}`: duplicate chart name `{}`",
                    c.name
                )));
            }
        }
        for t in &transitions {
            for end in [&t.from, &t.to] {
                if !charts.iter().any(|c| &c.name == end) {
                    return Err(Error::UnknownChart {
                        atlas: name,
                        chart: end.clone(),
                    });
                }
            }
            for b in &t.branches {
                if b.domain.dim() != dim {
                    return Err(Error::BadConfig(format!(
                        "atlas `{name}`: branch rectangle of {} -> {} has wrong dimension",
                        t.from, t.to
                    )));
                }
            }
        }
        Ok(Atlas {
            name,
            backend: Backend::Charts,
            charts,
            transitions,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn is_embedded(&self) -> bool {
        matches!(self.backend, Backend::EmbeddedSphere { .. })
    }

    /// Manifold dimension.
    pub fn dim(&self) -> usize {
        match self.backend {
            Backend::Charts => self.charts[0].dim(),
            Backend::EmbeddedSphere { dim } => dim,
        }
    }

    /// Length of coordinate/component vectors: the chart dimension, or the
    /// ambient dimension for the embedded backend.
    pub fn component_dim(&self) -> usize {
        match self.backend {
            Backend::Charts => self.dim(),
            Backend::EmbeddedSphere { dim } => dim + 1,
        }
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn chart(&self, name: &str) -> Result<&Chart> {
        self.charts
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownChart {
                atlas: self.name.clone(),
                chart: name.into(),
            })
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, from: &str, to: &str) -> Result<&Transition> {
        self.transitions
            .iter()
            .find(|t| t.from == from && t.to == to)
            .ok_or_else(|| Error::NoTransition {
                from: from.into(),
                to: to.into(),
            })
    }

    fn find_branch(&self, from: &str, to: &str, coords: &[f64]) -> Result<&TransitionBranch> {
        let transition = self.transition(from, to)?;
        transition
            .branches
            .iter()
            .find(|b| b.domain.contains(coords))
            .ok_or_else(|| Error::OutsideOverlap {
                from: from.into(),
                to: to.into(),
                coords: coords.to_vec(),
                branches: transition
                    .branches
                    .iter()
                    .map(|b| b.domain.to_string())
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }

    /// Expresses `coords` of chart `from` in chart `to` through the branch
    /// covering them.
    pub fn transition_apply(&self, from: &str, to: &str, coords: &[f64]) -> Result<DVector<f64>> {
        Ok(self.find_branch(from, to, coords)?.apply(coords))
    }

    /// Jacobian of the overlap branch covering `coords`.
    pub fn jacobian(&self, from: &str, to: &str, coords: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.find_branch(from, to, coords)?.jacobian(coords))
    }

    /// Re-expresses a generalized vector in another chart: the base point
    /// maps through the transition, tangent components push forward by the
    /// Jacobian and covector components by its inverse transpose.
    pub fn transport(&self, v: &GenVector, to: &str) -> Result<GenVector> {
        self.chart(to)?;
        if v.base.chart == to {
            return Ok(v.clone());
        }
        let coords: Vec<f64> = v.base.coords.iter().copied().collect();
        let branch = self.find_branch(&v.base.chart, to, &coords)?;
        let jac = branch.jacobian(&coords);
        let det = jac.determinant();
        let inv_t = jac
            .transpose()
            .try_inverse()
            .ok_or(Error::SingularJacobian { det })?;
        Ok(GenVector {
            base: ManifoldPoint {
                chart: to.into(),
                coords: branch.apply(&coords),
            },
            tangent: &jac * &v.tangent,
            covector: inv_t * &v.covector,
        })
    }

    /// Validated point constructor.
    pub fn point(&self, chart: &str, coords: Vec<f64>) -> Result<ManifoldPoint> {
        let c = self.chart(chart)?;
        if coords.len() != c.dim() {
            return Err(Error::ComponentLength {
                got: coords.len(),
                expected: c.dim(),
            });
        }
        match self.backend {
            Backend::Charts => {
                if !c.domain.contains(&coords) {
                    return Err(Error::OutsideChart {
                        chart: chart.into(),
                        coords,
                    });
                }
            }
            Backend::EmbeddedSphere { .. } => {
                let norm = coords.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > UNIT_NORM_TOL {
                    return Err(Error::NotUnit { norm });
                }
            }
        }
        Ok(ManifoldPoint {
            chart: chart.into(),
            coords: DVector::from_vec(coords),
        })
    }

    /// Validated generalized-vector constructor.
    pub fn gen_vector(
        &self,
        base: ManifoldPoint,
        tangent: Vec<f64>,
        covector: Vec<f64>,
    ) -> Result<GenVector> {
        let expected = self.component_dim();
        for slot in [&tangent, &covector] {
            if slot.len() != expected {
                return Err(Error::ComponentLength {
                    got: slot.len(),
                    expected,
                });
            }
        }
        let v = GenVector {
            base,
            tangent: DVector::from_vec(tangent),
            covector: DVector::from_vec(covector),
        };
        if self.is_embedded() {
            for (slot, name) in [(&v.tangent, "tangent"), (&v.covector, "covector")] {
                let dot = slot.dot(&v.base.coords);
                if dot.abs() > TANGENCY_TOL * slot.norm().max(1.0) {
                    return Err(Error::NotTangent { slot: name, dot });
                }
            }
        }
        Ok(v)
    }
}

/// Point given by a chart name and coordinates (an ambient unit vector for
/// the embedded backend).
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldPoint {
    pub chart: String,
    pub coords: DVector<f64>,
}

impl ManifoldPoint {
    pub fn approx_eq(&self, other: &ManifoldPoint) -> bool {
        self.chart == other.chart
            && (&self.coords - &other.coords).norm() <= SAME_POINT_TOL * self.coords.norm().max(1.0)
    }
}

/// Element of the generalized tangent space at a point: tangent components
/// plus covector components in the chart basis (two ambient vectors for the
/// embedded backend).
#[derive(Clone, Debug, PartialEq)]
pub struct GenVector {
    pub base: ManifoldPoint,
    pub tangent: DVector<f64>,
    pub covector: DVector<f64>,
}

impl GenVector {
    pub fn zero_at(base: ManifoldPoint, component_dim: usize) -> GenVector {
        GenVector {
            base,
            tangent: DVector::zeros(component_dim),
            covector: DVector::zeros(component_dim),
        }
    }

    /// Euclidean inner product of the stacked (tangent | covector) blocks.
    pub fn block_dot(&self, other: &GenVector) -> f64 {
        self.tangent.dot(&other.tangent) + self.covector.dot(&other.covector)
    }

    pub fn block_norm(&self) -> f64 {
        (self.tangent.norm_squared() + self.covector.norm_squared()).sqrt()
    }

    /// Stacked (tangent | covector) component vector.
    pub fn block_vector(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.tangent.len() + self.covector.len());
        out.rows_mut(0, self.tangent.len()).copy_from(&self.tangent);
        out.rows_mut(self.tangent.len(), self.covector.len())
            .copy_from(&self.covector);
        out
    }

    pub fn scaled(&self, factor: f64) -> GenVector {
        GenVector {
            base: self.base.clone(),
            tangent: &self.tangent * factor,
            covector: &self.covector * factor,
        }
    }

    pub fn try_add(&self, other: &GenVector) -> Result<GenVector> {
        if !self.base.approx_eq(&other.base) {
            return Err(Error::BasePointMismatch);
        }
        Ok(GenVector {
            base: self.base.clone(),
            tangent: &self.tangent + &other.tangent,
            covector: &self.covector + &other.covector,
        })
    }

    pub fn try_sub(&self, other: &GenVector) -> Result<GenVector> {
        self.try_add(&other.scaled(-1.0))
    }
}

/// The canonical neutral pairing `G0(X + xi, Y + eta) = (xi(Y) + eta(X))/2`,
/// evaluated on chart components (ambient dot products for the embedded
/// backend). The two arguments must sit at the same base point.
pub fn canonical_pairing(e: &GenVector, f: &GenVector) -> Result<f64> {
    if !e.base.approx_eq(&f.base) {
        return Err(Error::BasePointMismatch);
    }
    Ok(0.5 * (e.covector.dot(&f.tangent) + f.covector.dot(&e.tangent)))
}

/// Outcome of the orientation probe. A chart atlas can certify
/// non-orientability (inconsistent transition signs); the positive case is
/// only evidence, not a proof.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientability {
    OrientableEvidence,
    Nonorientable,
}

/// Samples Jacobian determinant signs over every transition branch. Mixed
/// signs within one chart pair, or an inconsistent sign assignment around
/// the chart graph, certify non-orientability.
pub fn orientability_probe(atlas: &Atlas, samples_per_branch: usize) -> Result<Orientability> {
    if atlas.is_embedded() {
        return Err(Error::ChartBackendRequired("orientability_probe"));
    }
    let index = |name: &str| atlas.charts.iter().position(|c| c.name == name).unwrap();
    let mut edges: Vec<(usize, usize, bool)> = Vec::new();
    for t in &atlas.transitions {
        let mut has_pos = false;
        let mut has_neg = false;
        for branch in &t.branches {
            for x in grid_points_rel(&branch.domain, samples_per_branch) {
                let det = branch.jacobian(&x).determinant();
                if det.abs() < 1e-12 {
                    return Err(Error::SingularJacobian { det });
                }
                if det > 0.0 {
                    has_pos = true;
                } else {
                    has_neg = true;
                }
            }
        }
        if has_pos && has_neg {
            return Ok(Orientability::Nonorientable);
        }
        edges.push((index(&t.from), index(&t.to), has_neg));
    }
    // Try to orient the charts consistently: union-find with a parity bit
    // recording whether two charts disagree in orientation.
    let mut uf = ParityUf::new(atlas.charts.len());
    for (a, b, flip) in edges {
        if !uf.union(a, b, flip) {
            return Ok(Orientability::Nonorientable);
        }
    }
    Ok(Orientability::OrientableEvidence)
}

struct ParityUf {
    parent: Vec<usize>,
    parity: Vec<bool>,
}

impl ParityUf {
    fn new(n: usize) -> Self {
        ParityUf {
            parent: (0..n).collect(),
            parity: vec![false; n],
        }
    }

    fn find(&mut self, x: usize) -> (usize, bool) {
        if self.parent[x] == x {
            return (x, false);
        }
        let (root, p) = self.find(self.parent[x]);
        let total = self.parity[x] ^ p;
        self.parent[x] = root;
        self.parity[x] = total;
        (root, total)
    }

    /// Returns false when the requested relation contradicts an existing one.
    fn union(&mut self, a: usize, b: usize, flip: bool) -> bool {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return pa ^ pb == flip;
        }
        self.parent[ra] = rb;
        self.parity[ra] = pa ^ pb ^ flip;
        true
    }
}

/// Uniform grid over `rect` shrunk by the absolute `margin`; row-major,
/// endpoints included.
pub(crate) fn grid_points(
    rect: &Rect,
    resolution: &[usize],
    margin: f64,
    chart: &str,
) -> Result<Vec<Vec<f64>>> {
    if resolution.len() != rect.dim() {
        return Err(Error::ResolutionDim {
            chart: chart.into(),
            got: resolution.len(),
            expected: rect.dim(),
        });
    }
    if let Some(&r) = resolution.iter().find(|&&r| r < 2) {
        return Err(Error::ResolutionTooSmall(r));
    }
    let shrunk = rect.shrink(margin, chart)?;
    Ok(cartesian_grid(&shrunk, resolution))
}

/// Grid with a tiny relative margin, for sampling strictly inside an open
/// branch rectangle. `samples` is a total-point budget split evenly across
/// axes.
pub(crate) fn grid_points_rel(rect: &Rect, samples: usize) -> Vec<Vec<f64>> {
    let dim = rect.dim();
    let per_axis = ((samples.max(1) as f64).powf(1.0 / dim as f64).ceil() as usize).max(2);
    let lo: Vec<f64> = rect
        .lo
        .iter()
        .zip(&rect.hi)
        .map(|(&a, &b)| a + (b - a) * 1e-6)
        .collect();
    let hi: Vec<f64> = rect
        .lo
        .iter()
        .zip(&rect.hi)
        .map(|(&a, &b)| b - (b - a) * 1e-6)
        .collect();
    cartesian_grid(&Rect { lo, hi }, &vec![per_axis; dim])
}

fn cartesian_grid(rect: &Rect, resolution: &[usize]) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = rect
        .lo
        .iter()
        .zip(&rect.hi)
        .zip(resolution)
        .map(|((&a, &b), &r)| {
            (0..r)
                .map(|i| {
                    let t = i as f64 / (r - 1) as f64;
                    a * (1.0 - t) + b * t
                })
                .collect()
        })
        .collect();
    let total: usize = resolution.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; resolution.len()];
    for _ in 0..total {
        out.push(idx.iter().zip(&axes).map(|(&i, axis)| axis[i]).collect());
        for d in (0..resolution.len()).rev() {
            idx[d] += 1;
            if idx[d] < resolution[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}
