//! Weak generalized almost complex and paracomplex structures.
//!
//! Both come in two flavours. A trivializing frame `w^1..w^{2n}` induces the
//! basis rules `J(w^{2i-1}) = w^{2i}, J(w^{2i}) = -w^{2i-1}` (complex) and
//! `F(w^{2i-1}) = w^{2i}, F(w^{2i}) = w^{2i-1}` (paracomplex). A metric
//! induces the closed forms `J(X + xi) = -sharp(xi) + flat(X)` and
//! `F(X + xi) = sharp(xi) + flat(X)`. For interleaved parallelizable frames
//! both routes agree for J and F; for the Möbius/Klein four-section frame
//! the J routes agree while the F routes genuinely differ away from the
//! seams (the frame pairs `Y - bZ` with `Z + bY`, whereas the metric form
//! sends `Y - bZ` to `-Z + bY`).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::SectionFrame;
use crate::manifold::{canonical_pairing, Atlas, GenVector, ManifoldPoint};
use crate::metric::Metric;

/// Reciprocal condition bound below which a frame-coordinate solve is
/// rejected; healthy frames sit near 1.
pub const FRAME_SOLVE_RCOND_MIN: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructureKind {
    /// Squares to minus the identity.
    Complex,
    /// Squares to the identity with an n-dimensional +1 eigenspace.
    Paracomplex,
}

impl StructureKind {
    fn label(self) -> &'static str {
        match self {
            StructureKind::Complex => "complex",
            StructureKind::Paracomplex => "paracomplex",
        }
    }
}

#[derive(Clone)]
enum StructureSource {
    Metric { atlas: Arc<Atlas>, metric: Metric },
    Frame(SectionFrame),
}

/// Pointwise endomorphism of the generalized tangent bundle. Immutable;
/// evaluation is pure.
#[derive(Clone)]
pub struct GenEndomorphism {
    kind: StructureKind,
    source: StructureSource,
    name: String,
}

impl std::fmt::Debug for GenEndomorphism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GenEndomorphism({}, {})", self.name, self.kind.label())
    }
}

/// The metric-induced structure: `-sharp + flat` (complex) or
/// `sharp + flat` (paracomplex).
pub fn structure_from_metric(
    atlas: Arc<Atlas>,
    metric: Metric,
    kind: StructureKind,
) -> GenEndomorphism {
    let name = match kind {
        StructureKind::Complex => "metric:J",
        StructureKind::Paracomplex => "metric:F",
    };
    GenEndomorphism {
        kind,
        source: StructureSource::Metric { atlas, metric },
        name: name.into(),
    }
}

/// The frame-induced structure: pointwise, solve for the input's frame
/// coordinates and apply the pairwise basis rule.
pub fn structure_from_frame(frame: SectionFrame, kind: StructureKind) -> GenEndomorphism {
    let name = match kind {
        StructureKind::Complex => "frame:J",
        StructureKind::Paracomplex => "frame:F",
    };
    GenEndomorphism {
        kind,
        source: StructureSource::Frame(frame),
        name: name.into(),
    }
}

impl GenEndomorphism {
    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn atlas(&self) -> &Arc<Atlas> {
        match &self.source {
            StructureSource::Metric { atlas, .. } => atlas,
            StructureSource::Frame(frame) => frame.atlas(),
        }
    }

    /// Applies the endomorphism to one generalized vector.
    pub fn apply(&self, e: &GenVector) -> Result<GenVector> {
        match &self.source {
            StructureSource::Metric { atlas, metric } => {
                let raised = metric.sharp(atlas, &e.base, &e.covector)?;
                let lowered = metric.flat(atlas, &e.base, &e.tangent)?;
                let sign = match self.kind {
                    StructureKind::Complex => -1.0,
                    StructureKind::Paracomplex => 1.0,
                };
                Ok(GenVector {
                    base: e.base.clone(),
                    tangent: raised * sign,
                    covector: lowered,
                })
            }
            StructureSource::Frame(frame) => self.apply_frame(frame, e),
        }
    }

    fn apply_frame(&self, frame: &SectionFrame, e: &GenVector) -> Result<GenVector> {
        let values = frame.eval_all(&e.base)?;
        let columns: Vec<DVector<f64>> = values.iter().map(|v| v.block_vector()).collect();
        let w = DMatrix::from_columns(&columns);
        let svd = w.svd(true, true);
        let s_max = svd.singular_values.max();
        let s_min = svd.singular_values.min();
        let rcond = if s_max > 0.0 { s_min / s_max } else { 0.0 };
        if rcond < FRAME_SOLVE_RCOND_MIN {
            return Err(Error::SingularSolve { rcond });
        }
        let coeffs = svd
            .solve(&e.block_vector(), 0.0)
            .map_err(|_| Error::SingularSolve { rcond })?;
        let sign = match self.kind {
            StructureKind::Complex => -1.0,
            StructureKind::Paracomplex => 1.0,
        };
        let dim = e.tangent.len();
        let mut out = GenVector::zero_at(e.base.clone(), dim);
        for pair in 0..frame.pairs() {
            let odd = &values[2 * pair];
            let even = &values[2 * pair + 1];
            let (a, b) = (coeffs[2 * pair], coeffs[2 * pair + 1]);
            // K(odd) = even; K(even) = sign * odd
            out.tangent += &even.tangent * a + &odd.tangent * (sign * b);
            out.covector += &even.covector * a + &odd.covector * (sign * b);
        }
        Ok(out)
    }

    /// Matrix of the endomorphism in a block-orthonormal fibre basis
    /// (`2n x 2n`).
    pub fn matrix_at(&self, p: &ManifoldPoint) -> Result<DMatrix<f64>> {
        let basis = fiber_basis(self.atlas(), p)?;
        let m = basis.len();
        let mut out = DMatrix::zeros(m, m);
        for (j, b) in basis.iter().enumerate() {
            let image = self.apply(b)?;
            for (i, a) in basis.iter().enumerate() {
                out[(i, j)] = image.block_dot(a);
            }
        }
        Ok(out)
    }

    /// Dimension of the `+1` or `-1` eigenspace of the pointwise matrix,
    /// from the rank of `K -+ Id` under a singular-value threshold. Only
    /// meaningful (and only allowed) for paracomplex structures.
    pub fn eigen_rank(&self, p: &ManifoldPoint, eigenvalue: EigenSign) -> Result<usize> {
        if self.kind != StructureKind::Paracomplex {
            return Err(Error::StructureKindMismatch {
                expected: "paracomplex",
                got: self.kind.label(),
            });
        }
        let m = self.matrix_at(p)?;
        let n = m.nrows();
        let shifted = m - DMatrix::identity(n, n) * eigenvalue.value();
        let svd = shifted.svd(false, false);
        let s_max = svd.singular_values.max();
        let tol = (s_max * 1e-8).max(1e-12);
        let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
        Ok(n - rank)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenSign {
    Plus,
    Minus,
}

impl EigenSign {
    fn value(self) -> f64 {
        match self {
            EigenSign::Plus => 1.0,
            EigenSign::Minus => -1.0,
        }
    }
}

/// Block-orthonormal basis of the generalized fibre at `p`: chart
/// coordinate/covector pairs, or an orthonormal tangent basis of the
/// embedded sphere duplicated across the two slots.
pub fn fiber_basis(atlas: &Arc<Atlas>, p: &ManifoldPoint) -> Result<Vec<GenVector>> {
    let dim = atlas.component_dim();
    let tangent_basis: Vec<DVector<f64>> = if atlas.is_embedded() {
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(atlas.dim());
        for i in 0..dim {
            let mut v = DVector::zeros(dim);
            v[i] = 1.0;
            v -= &p.coords * p.coords.dot(&v);
            for b in &basis {
                v -= b * b.dot(&v);
            }
            let norm = v.norm();
            if norm > 1e-6 {
                basis.push(v / norm);
            }
            if basis.len() == atlas.dim() {
                break;
            }
        }
        debug_assert_eq!(basis.len(), atlas.dim());
        basis
    } else {
        (0..dim)
            .map(|i| {
                let mut v = DVector::zeros(dim);
                v[i] = 1.0;
                v
            })
            .collect()
    };
    let zero = DVector::zeros(dim);
    let mut out = Vec::with_capacity(2 * tangent_basis.len());
    for t in &tangent_basis {
        out.push(GenVector {
            base: p.clone(),
            tangent: t.clone(),
            covector: zero.clone(),
        });
    }
    for t in &tangent_basis {
        out.push(GenVector {
            base: p.clone(),
            tangent: zero.clone(),
            covector: t.clone(),
        });
    }
    Ok(out)
}

/// Random generalized vector at `p` with standard normal components
/// (projected to the fibre for the embedded backend).
pub fn random_gen_vector(atlas: &Atlas, p: &ManifoldPoint, rng: &mut ChaCha8Rng) -> GenVector {
    let dim = atlas.component_dim();
    let mut draw = |_: usize| -> DVector<f64> {
        let mut v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        if atlas.is_embedded() {
            v -= &p.coords * p.coords.dot(&v);
        }
        v
    };
    GenVector {
        base: p.clone(),
        tangent: draw(0),
        covector: draw(1),
    }
}

/// Symmetry evidence for a structure with respect to the canonical pairing:
/// max of `|G0(Ke, f) - G0(e, Kf)|` (symmetric defect) and of
/// `|G0(Ke, f) + G0(e, Kf)|` (skew defect) over sample points and random
/// input pairs. The structures built here are symmetric, not skew, so the
/// skew defect stays O(1) and documents that they are weak structures.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct G0Residuals {
    pub symmetric: f64,
    pub skew: f64,
}

pub fn g0_symmetry_residual(
    k: &GenEndomorphism,
    points: &[ManifoldPoint],
    inputs_per_point: usize,
    seed: u64,
) -> Result<G0Residuals> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atlas = k.atlas().clone();
    let mut residuals = G0Residuals {
        symmetric: 0.0,
        skew: 0.0,
    };
    for p in points {
        for _ in 0..inputs_per_point {
            let e = random_gen_vector(&atlas, p, &mut rng);
            let f = random_gen_vector(&atlas, p, &mut rng);
            let ke = k.apply(&e)?;
            let kf = k.apply(&f)?;
            let left = canonical_pairing(&ke, &f)?;
            let right = canonical_pairing(&e, &kf)?;
            residuals.symmetric = residuals.symmetric.max((left - right).abs());
            residuals.skew = residuals.skew.max((left + right).abs());
        }
    }
    Ok(residuals)
}

/// Agreement between the frame-induced and metric-induced structures of
/// both kinds: max block-norm difference over sample points and random
/// inputs.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct AgreementResiduals {
    pub complex: f64,
    pub paracomplex: f64,
}

pub fn frame_vs_metric_agreement(
    frame: &SectionFrame,
    metric: &Metric,
    points: &[ManifoldPoint],
    inputs_per_point: usize,
    seed: u64,
) -> Result<AgreementResiduals> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atlas = frame.atlas().clone();
    let frame_j = structure_from_frame(frame.clone(), StructureKind::Complex);
    let frame_f = structure_from_frame(frame.clone(), StructureKind::Paracomplex);
    let metric_j = structure_from_metric(atlas.clone(), metric.clone(), StructureKind::Complex);
    let metric_f = structure_from_metric(atlas.clone(), metric.clone(), StructureKind::Paracomplex);
    let mut out = AgreementResiduals {
        complex: 0.0,
        paracomplex: 0.0,
    };
    for p in points {
        for _ in 0..inputs_per_point {
            let e = random_gen_vector(&atlas, p, &mut rng);
            let dj = frame_j
                .apply(&e)?
                .try_sub(&metric_j.apply(&e)?)?
                .block_norm();
            let df = frame_f
                .apply(&e)?
                .try_sub(&metric_f.apply(&e)?)?
                .block_norm();
            out.complex = out.complex.max(dj);
            out.paracomplex = out.paracomplex.max(df);
        }
    }
    Ok(out)
}
