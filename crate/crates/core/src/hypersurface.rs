//! Embedded hypersurfaces: induced metric, unit normal, second fundamental
//! form, and the identities relating intrinsic and ambient curvature.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{central4, ScalarField};
use crate::manifolds::{
    christoffel, curvature_at, CurvatureSample, DiffConfig, ManifoldSpec, MetricSource,
};
use crate::tensor::{norm, restrict_tensor, MetricAtPoint, Tensor};

const UNIT_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;
/// `max |B|` below which a hypersurface counts as totally geodesic.
pub const TOTALLY_GEODESIC_TOL: f64 = 1e-8;

/// Chart map from Σ-coordinates (dimension `m`) into the ambient chart
/// (dimension `m + 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Embedding {
    /// `q ↦ (q₁, …, value, …, q_m)` with `value` inserted at `axis`.
    Slice { axis: usize, value: f64 },
    /// `q ↦ (q₁, …, height(q), …, q_m)` with the graph coordinate at `axis`.
    Graph { axis: usize, height: ScalarField },
    /// `q ↦ A q + b`, `A` given as `m + 1` rows of length `m`.
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    /// Sphere of the given radius in a flat chart, parametrised by inverse
    /// stereographic projection from the north pole.
    StereographicSphere { radius: f64 },
}

/// Which of the two unit normals is used. `Positive` makes
/// `(∂₁i, …, ∂_m i, N)` a positively oriented ambient frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalSign {
    #[default]
    Positive,
    Negative,
}

impl NormalSign {
    fn factor(self) -> f64 {
        match self {
            NormalSign::Positive => 1.0,
            NormalSign::Negative => -1.0,
        }
    }
}

/// A two-sided hypersurface: the normal is part of the data, so one-sided
/// hypersurfaces cannot be expressed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypersurfaceSpec {
    pub ambient: ManifoldSpec,
    pub embedding: Embedding,
    #[serde(default)]
    pub normal: NormalSign,
}

/// Pullback metric, unit normal and frames at one point of Σ.
#[derive(Clone, Debug)]
pub struct InducedData {
    pub q: Vec<f64>,
    /// `i(q)` in the ambient chart.
    pub ambient_point: Vec<f64>,
    pub induced: MetricAtPoint,
    pub normal: Vec<f64>,
    /// Columns `∂_a i`.
    pub tangent: DMatrix<f64>,
    /// g-orthonormal Gram–Schmidt frame of the tangent space, columns.
    pub frame: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct FundamentalForms {
    pub induced: MetricAtPoint,
    /// `B(X, Y) = g(∇_X N, Y)`.
    pub b: Tensor,
    /// `H = tr_g̃ B`.
    pub h: f64,
    /// `L = B − (H/m) g̃`.
    pub l: Tensor,
}

impl HypersurfaceSpec {
    pub fn new(ambient: ManifoldSpec, embedding: Embedding) -> Self {
        HypersurfaceSpec {
            ambient,
            embedding,
            normal: NormalSign::Positive,
        }
    }

    /// `Σ × {value}` inside `Σ × S¹` style products: slice of the last axis.
    pub fn last_axis_slice(ambient: ManifoldSpec, value: f64) -> Self {
        let axis = ambient.dim() - 1;
        Self::new(ambient, Embedding::Slice { axis, value })
    }

    pub fn with_normal(mut self, normal: NormalSign) -> Self {
        self.normal = normal;
        self
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient.dim()
    }

    /// Intrinsic dimension `m = n − 1`.
    pub fn dim(&self) -> usize {
        self.ambient.dim() - 1
    }

    pub fn validate(&self) -> Result<()> {
        self.ambient.validate()?;
        let n = self.ambient_dim();
        if n < 2 {
            return Err(Error::Configuration("ambient dimension must be >= 2".into()));
        }
        match &self.embedding {
            Embedding::Slice { axis, .. } | Embedding::Graph { axis, .. } if *axis >= n => Err(
                Error::Configuration(format!("axis {axis} out of range for dimension {n}")),
            ),
            Embedding::Affine { matrix, offset } => {
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n - 1) || offset.len() != n {
                    Err(Error::Configuration(format!(
                        "affine embedding needs a {n}x{} matrix and {n} offsets",
                        n - 1
                    )))
                } else {
                    Ok(())
                }
            }
            Embedding::StereographicSphere { radius } if !(*radius > 0.0) => Err(
                Error::Configuration(format!("sphere radius must be positive, got {radius}")),
            ),
            _ => Ok(()),
        }
    }

    fn map_scale(&self) -> f64 {
        match &self.embedding {
            Embedding::StereographicSphere { radius } => *radius,
            _ => self.ambient.chart_scale(),
        }
    }

    /// Coordinate box of Σ from which samples are drawn.
    pub fn sample_box(&self) -> Vec<(f64, f64)> {
        let m = self.dim();
        match &self.embedding {
            Embedding::Slice { axis, .. } | Embedding::Graph { axis, .. } => {
                let mut b = self.ambient.sample_box();
                b.remove(*axis);
                b
            }
            Embedding::Affine { .. } => vec![(-1.0, 1.0); m],
            Embedding::StereographicSphere { radius } => vec![(-radius, *radius); m],
        }
    }

    /// Periods of Σ-coordinates when Σ inherits a torus chart.
    pub fn periods(&self) -> Option<Vec<f64>> {
        match &self.embedding {
            Embedding::Slice { axis, .. } | Embedding::Graph { axis, .. } => {
                let mut p = self.ambient.periods()?;
                p.remove(*axis);
                Some(p)
            }
            _ => None,
        }
    }

    pub fn embed(&self, q: &[f64]) -> Result<Vec<f64>> {
        let m = self.dim();
        if q.len() != m {
            return Err(Error::Dimension(format!(
                "hypersurface is {m}-dimensional, point has {} coordinates",
                q.len()
            )));
        }
        Ok(match &self.embedding {
            Embedding::Slice { axis, value } => insert(q, *axis, *value),
            Embedding::Graph { axis, height } => insert(q, *axis, height.value(q)?),
            Embedding::Affine { matrix, offset } => matrix
                .iter()
                .zip(offset)
                .map(|(row, b)| row.iter().zip(q).map(|(a, x)| a * x).sum::<f64>() + b)
                .collect(),
            Embedding::StereographicSphere { radius } => {
                let r2 = radius * radius;
                let y2: f64 = q.iter().map(|v| v * v).sum();
                let d = y2 + r2;
                let mut out: Vec<f64> = q.iter().map(|v| 2.0 * r2 * v / d).collect();
                out.push(radius * (y2 - r2) / d);
                out
            }
        })
    }

    /// `J[k][a] = ∂_a i^k`.
    pub fn jacobian(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        let (n, m) = (self.ambient_dim(), self.dim());
        match &self.embedding {
            Embedding::Slice { axis, .. } => Ok(DMatrix::from_fn(n, m, |k, a| {
                let row = if k < *axis { k } else { k.wrapping_sub(1) };
                if k != *axis && row == a {
                    1.0
                } else {
                    0.0
                }
            })),
            Embedding::Affine { matrix, .. } => Ok(DMatrix::from_fn(n, m, |k, a| matrix[k][a])),
            _ => {
                let h = 1e-3 * self.map_scale();
                let mut j = DMatrix::zeros(n, m);
                for a in 0..m {
                    let col = central4(|y| self.embed(y), q, a, h)?;
                    j.set_column(a, &nalgebra::DVector::from_vec(col));
                }
                Ok(j)
            }
        }
    }

    /// `H[c][(k, a)] = ∂_c ∂_a i^k`, symmetric in `(a, c)`.
    pub fn second_derivatives(&self, q: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let (n, m) = (self.ambient_dim(), self.dim());
        if matches!(self.embedding, Embedding::Slice { .. } | Embedding::Affine { .. }) {
            return Ok(vec![DMatrix::zeros(n, m); m]);
        }
        let h = 1e-3 * self.map_scale();
        let raw = (0..m)
            .map(|c| {
                let v = central4(|y| Ok(self.jacobian(y)?.iter().copied().collect()), q, c, h)?;
                Ok(DMatrix::from_column_slice(n, m, &v))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((0..m)
            .map(|c| {
                DMatrix::from_fn(n, m, |k, a| 0.5 * (raw[c][(k, a)] + raw[a][(k, c)]))
            })
            .collect())
    }

    /// The induced metric as a metric source on Σ-coordinates.
    pub fn induced_metric(&self) -> InducedMetric<'_> {
        InducedMetric { h: self }
    }
}

fn insert(q: &[f64], axis: usize, value: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(q.len() + 1);
    out.extend_from_slice(&q[..axis]);
    out.push(value);
    out.extend_from_slice(&q[axis..]);
    out
}

/// Pullback metric `i*g` with analytic chain-rule first derivatives.
pub struct InducedMetric<'a> {
    h: &'a HypersurfaceSpec,
}

impl MetricSource for InducedMetric<'_> {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn chart_scale(&self) -> f64 {
        self.h.map_scale()
    }

    fn metric(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        let x = self.h.embed(q)?;
        let j = self.h.jacobian(q)?;
        Ok(j.transpose() * self.h.ambient.metric(&x)? * j)
    }

    fn metric_first(&self, q: &[f64], cfg: &DiffConfig) -> Result<Vec<DMatrix<f64>>> {
        let x = self.h.embed(q)?;
        let j = self.h.jacobian(q)?;
        let hs = self.h.second_derivatives(q)?;
        let g = self.h.ambient.metric(&x)?;
        let dg = self.h.ambient.metric_first(&x, cfg)?;
        let gj = &g * &j;
        Ok((0..self.dim())
            .map(|c| {
                let mut dgc = DMatrix::zeros(g.nrows(), g.ncols());
                for (k, d) in dg.iter().enumerate() {
                    dgc += d * j[(k, c)];
                }
                let t = j.transpose() * dgc * &j + hs[c].transpose() * &gj + gj.transpose() * &hs[c];
                (&t + t.transpose()) * 0.5
            })
            .collect())
    }
}

/// Induced metric, unit normal and tangent frames at `q`.
pub fn induced_data(h: &HypersurfaceSpec, q: &[f64]) -> Result<InducedData> {
    let (n, m) = (h.ambient_dim(), h.dim());
    let x = h.embed(q)?;
    let g = MetricAtPoint::new(h.ambient.metric(&x)?)?;
    let j = h.jacobian(q)?;
    let scale = j.amax().max(1.0);

    // Gram–Schmidt of the coordinate tangent vectors, fixed order.
    let mut frame = DMatrix::zeros(n, m);
    for a in 0..m {
        let mut v: Vec<f64> = j.column(a).iter().copied().collect();
        for _ in 0..2 {
            for b in 0..a {
                let e: Vec<f64> = frame.column(b).iter().copied().collect();
                let c = g.inner_vectors(&v, &e);
                v.iter_mut().zip(&e).for_each(|(vi, ei)| *vi -= c * ei);
            }
        }
        let len = g.inner_vectors(&v, &v).sqrt();
        if !(len > RANK_TOL * scale) {
            return Err(Error::Rank(format!(
                "tangent vector {a} is dependent on the previous ones at {q:?}"
            )));
        }
        frame.set_column(a, &nalgebra::DVector::from_vec(v.iter().map(|c| c / len).collect()));
    }

    // Normal from the coordinate vector with the largest normal component.
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..n {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for _ in 0..2 {
            for b in 0..m {
                let e: Vec<f64> = frame.column(b).iter().copied().collect();
                let c = g.inner_vectors(&v, &e);
                v.iter_mut().zip(&e).for_each(|(vi, ei)| *vi -= c * ei);
            }
        }
        let len = g.inner_vectors(&v, &v).sqrt();
        if best.as_ref().map_or(true, |(l, _)| len > *l) {
            best = Some((len, v));
        }
    }
    let (len, v) = best.expect("ambient dimension is positive");
    let mut normal: Vec<f64> = v.iter().map(|c| c / len).collect();
    let mut oriented = DMatrix::zeros(n, n);
    oriented.view_mut((0, 0), (n, m)).copy_from(&j);
    oriented.set_column(m, &nalgebra::DVector::from_vec(normal.clone()));
    let sign = oriented.determinant().signum() * h.normal.factor();
    normal.iter_mut().for_each(|c| *c *= sign);

    let unit = g.inner_vectors(&normal, &normal);
    if (unit - 1.0).abs() > UNIT_TOL {
        return Err(Error::InternalConsistency(format!("|N|² = {unit}")));
    }
    let induced = MetricAtPoint::new(j.transpose() * g.matrix() * &j)?;
    Ok(InducedData {
        q: q.to_vec(),
        ambient_point: x,
        induced,
        normal,
        tangent: j,
        frame,
    })
}

/// `B_ab = −g(N, ∂_a∂_b i + Γ(∂_a i, ∂_b i))`, `H`, and `L`.
pub fn fundamental_forms(h: &HypersurfaceSpec, q: &[f64], cfg: &DiffConfig) -> Result<FundamentalForms> {
    let data = induced_data(h, q)?;
    fundamental_forms_from(h, &data, cfg)
}

fn fundamental_forms_from(
    h: &HypersurfaceSpec,
    data: &InducedData,
    cfg: &DiffConfig,
) -> Result<FundamentalForms> {
    let (n, m) = (h.ambient_dim(), h.dim());
    let g = MetricAtPoint::new(h.ambient.metric(&data.ambient_point)?)?;
    let dg = h.ambient.metric_first(&data.ambient_point, cfg)?;
    let gamma = christoffel(&g, &dg);
    let hs = h.second_derivatives(&data.q)?;
    let gn: Vec<f64> = (0..n)
        .map(|k| (0..n).map(|l| g.matrix()[(k, l)] * data.normal[l]).sum())
        .collect();
    let j = &data.tangent;
    let b = Tensor::from_fn(2, m, |ix| {
        let (a, bb) = (ix[0], ix[1]);
        let mut acc = 0.0;
        for k in 0..n {
            let mut acc_k = hs[bb][(k, a)];
            for i in 0..n {
                for jj in 0..n {
                    acc_k += gamma[(k * n + i) * n + jj] * j[(i, a)] * j[(jj, bb)];
                }
            }
            acc += gn[k] * acc_k;
        }
        -acc
    });
    let b = Tensor::from_fn(2, m, |ix| 0.5 * (b.get(&[ix[0], ix[1]]) + b.get(&[ix[1], ix[0]])));
    let hmean = b.trace(&data.induced)?;
    let l = b.sub(&data.induced.as_tensor().scale(hmean / m as f64))?;
    Ok(FundamentalForms {
        induced: data.induced.clone(),
        b,
        h: hmean,
        l,
    })
}

/// Both sides of `s_g̃ = s_g − 2 Ric(N,N) + H² − |B|²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussCheck {
    pub induced_scalar: f64,
    pub ambient_scalar: f64,
    pub ricci_nn: f64,
    pub mean_curvature: f64,
    pub b_norm_sq: f64,
    pub residual: f64,
}

pub fn gauss_identity_check(h: &HypersurfaceSpec, q: &[f64], cfg: &DiffConfig) -> Result<GaussCheck> {
    let data = induced_data(h, q)?;
    let ff = fundamental_forms_from(h, &data, cfg)?;
    let ambient = curvature_at(&h.ambient, &data.ambient_point, cfg)?;
    let intrinsic = curvature_at(&h.induced_metric(), q, cfg)?;
    let ricci_nn = ricci_nn(&ambient, &data.normal);
    let b2 = norm(&ff.b, &ff.induced)?.powi(2);
    let rhs = ambient.scalar() - 2.0 * ricci_nn + ff.h * ff.h - b2;
    Ok(GaussCheck {
        induced_scalar: intrinsic.scalar(),
        ambient_scalar: ambient.scalar(),
        ricci_nn,
        mean_curvature: ff.h,
        b_norm_sq: b2,
        residual: (intrinsic.scalar() - rhs).abs(),
    })
}

fn ricci_nn(sample: &CurvatureSample, normal: &[f64]) -> f64 {
    let n = normal.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += sample.ricci.ricci.get(&[i, j]) * normal[i] * normal[j];
        }
    }
    acc
}

/// Evidence that `max |B| ≤ 1e−8` over a sample set. Only constructed by
/// [`certify_totally_geodesic`].
#[derive(Clone, Debug, PartialEq)]
pub struct TotallyGeodesic {
    spec: HypersurfaceSpec,
    max_b: f64,
    samples: usize,
}

impl TotallyGeodesic {
    pub fn max_b(&self) -> f64 {
        self.max_b
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn covers(&self, h: &HypersurfaceSpec) -> bool {
        &self.spec == h
    }
}

/// Largest `|B|_g̃` over `points` with its location.
pub fn max_second_fundamental_form(
    h: &HypersurfaceSpec,
    points: &[Vec<f64>],
    cfg: &DiffConfig,
) -> Result<(f64, Option<Vec<f64>>)> {
    let mut best = (0.0, None);
    for q in points {
        let ff = fundamental_forms(h, q, cfg)?;
        let b = norm(&ff.b, &ff.induced)?;
        if b > best.0 || best.1.is_none() {
            best = (b, Some(q.clone()));
        }
    }
    Ok(best)
}

/// Measures `max |B|` over the samples; fails unless it is ≤ 1e−8.
pub fn certify_totally_geodesic(
    h: &HypersurfaceSpec,
    points: &[Vec<f64>],
    cfg: &DiffConfig,
) -> Result<TotallyGeodesic> {
    if points.is_empty() {
        return Err(Error::Precondition("no samples to certify".into()));
    }
    let (max_b, at) = max_second_fundamental_form(h, points, cfg)?;
    if max_b > TOTALLY_GEODESIC_TOL {
        return Err(Error::Precondition(format!(
            "hypersurface is not totally geodesic: |B| = {max_b:e} at {at:?}"
        )));
    }
    Ok(TotallyGeodesic {
        spec: h.clone(),
        max_b,
        samples: points.len(),
    })
}

/// What is restricted to Σ in [`pullback_compare`].
#[derive(Clone, Debug)]
pub enum PullbackTarget {
    /// An ambient covariant tensor at `i(q)`, chart components.
    Tensor(Tensor),
    /// The ambient Weyl tensor.
    Weyl,
}

/// Terms of `|W̃_g|² = |W_g̃|² + |S_g̃ − S̃_g|²` (tensor norms w.r.t. g̃).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PythagorasTerms {
    pub restricted_weyl: f64,
    pub intrinsic_weyl: f64,
    pub s_difference: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackComparison {
    /// `|S̃|_g̃`.
    pub restricted: f64,
    /// `|S|_g`.
    pub ambient: f64,
    /// Present for the Weyl target when a certificate was supplied.
    pub pythagoras: Option<PythagorasTerms>,
}

/// Compares a restricted tensor with the ambient one. For the Weyl target
/// with a certificate, also evaluates the Pythagoras identity.
pub fn pullback_compare(
    h: &HypersurfaceSpec,
    q: &[f64],
    target: &PullbackTarget,
    certificate: Option<&TotallyGeodesic>,
    cfg: &DiffConfig,
) -> Result<PullbackComparison> {
    let data = induced_data(h, q)?;
    let g = MetricAtPoint::new(h.ambient.metric(&data.ambient_point)?)?;
    match target {
        PullbackTarget::Tensor(s) => {
            if certificate.is_some() {
                return Err(Error::Precondition(
                    "the Pythagoras identity applies to the Weyl target only".into(),
                ));
            }
            let restricted = restrict_tensor(s, &g, &data.frame)?;
            Ok(PullbackComparison {
                restricted: restricted.data().iter().map(|v| v * v).sum::<f64>().sqrt(),
                ambient: norm(s, &g)?,
                pythagoras: None,
            })
        }
        PullbackTarget::Weyl => {
            let ambient = curvature_at(&h.ambient, &data.ambient_point, cfg)?;
            let weyl = ambient.weyl()?;
            let restricted_w = weyl.pullback(&data.tangent)?;
            let restricted = norm(restricted_w.tensor(), &data.induced)?;
            let pythagoras = match certificate {
                None => None,
                Some(cert) => {
                    if !cert.covers(h) {
                        return Err(Error::Precondition(
                            "certificate was issued for a different hypersurface".into(),
                        ));
                    }
                    Some(pythagoras_terms(h, q, &data, &ambient, cfg)?)
                }
            };
            Ok(PullbackComparison {
                restricted,
                ambient: ambient.weyl_norm_tensor()?,
                pythagoras,
            })
        }
    }
}

fn pythagoras_terms(
    h: &HypersurfaceSpec,
    q: &[f64],
    data: &InducedData,
    ambient: &CurvatureSample,
    cfg: &DiffConfig,
) -> Result<PythagorasTerms> {
    let intrinsic = curvature_at(&h.induced_metric(), q, cfg)?;
    let idec = intrinsic.decomp.as_ref().ok_or_else(|| Error::UnsupportedDimension {
        dim: h.dim(),
        reason: "Weyl tensor of the hypersurface needs dimension >= 3".into(),
    })?;
    let adec = ambient.decomp.as_ref().expect("ambient dimension >= 4");
    let g = &data.induced;
    let w_tilde = norm(adec.weyl.pullback(&data.tangent)?.tensor(), g)?;
    let w_int = norm(idec.weyl.tensor(), g)?;
    let s_tilde = adec.s_part.pullback(&data.tangent)?;
    let s_diff = norm(idec.s_part.sub(&s_tilde)?.tensor(), g)?;
    Ok(PythagorasTerms {
        restricted_weyl: w_tilde,
        intrinsic_weyl: w_int,
        s_difference: s_diff,
        residual: (w_tilde * w_tilde - w_int * w_int - s_diff * s_diff).abs(),
    })
}

/// `|R_g̃ − i*R_g|` componentwise maximum; zero on totally geodesic Σ.
pub fn gauss_curvature_defect(h: &HypersurfaceSpec, q: &[f64], cfg: &DiffConfig) -> Result<f64> {
    let data = induced_data(h, q)?;
    let ambient = curvature_at(&h.ambient, &data.ambient_point, cfg)?;
    let intrinsic = curvature_at(&h.induced_metric(), q, cfg)?;
    let pulled = ambient.riemann.pullback(&data.tangent)?;
    Ok(intrinsic.riemann.sub(&pulled)?.tensor().max_abs())
}

/// `max |R_g(X, N, N, Y)|` over the orthonormal tangent frame.
pub fn mixed_normal_components(h: &HypersurfaceSpec, q: &[f64], cfg: &DiffConfig) -> Result<f64> {
    let data = induced_data(h, q)?;
    let ambient = curvature_at(&h.ambient, &data.ambient_point, cfg)?;
    let (n, m) = (h.ambient_dim(), h.dim());
    let mut vecs = DMatrix::zeros(n, m + 1);
    vecs.view_mut((0, 0), (n, m)).copy_from(&data.frame);
    vecs.set_column(m, &nalgebra::DVector::from_vec(data.normal.clone()));
    let r = ambient.riemann.pullback(&vecs)?;
    let mut worst: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            worst = worst.max(r.get(a, m, m, b).abs());
        }
    }
    Ok(worst)
}

/// Outcome of testing "`|W_g̃| = |W_g|` on `Σ × S¹` iff `Σ` is Einstein".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductRemarkVerdict {
    pub samples: usize,
    pub tolerance: f64,
    /// `max |z_g̃|`.
    pub max_traceless_ricci: f64,
    /// `max | |W_g̃| − |W_g| |`.
    pub max_weyl_gap: f64,
    pub einstein: bool,
    pub equality: bool,
    /// Sample where the Weyl gap is largest.
    pub witness: Option<Vec<f64>>,
}

impl ProductRemarkVerdict {
    pub fn agrees(&self) -> bool {
        self.einstein == self.equality
    }
}

/// Builds `Σ × S¹(1)`, slices at angle 0 and compares Einstein-ness of Σ
/// with equality of the Weyl norms over the samples.
pub fn product_remark_check(
    sigma: &ManifoldSpec,
    points: &[Vec<f64>],
    tolerance: f64,
    cfg: &DiffConfig,
) -> Result<ProductRemarkVerdict> {
    let h = HypersurfaceSpec::last_axis_slice(sigma.times_circle(), 0.0);
    let mut verdict = ProductRemarkVerdict {
        samples: points.len(),
        tolerance,
        max_traceless_ricci: 0.0,
        max_weyl_gap: 0.0,
        einstein: true,
        equality: true,
        witness: None,
    };
    for q in points {
        let data = induced_data(&h, q)?;
        let intrinsic = curvature_at(&h.induced_metric(), q, cfg)?;
        let ambient = curvature_at(&h.ambient, &data.ambient_point, cfg)?;
        let z = intrinsic.traceless_ricci_norm()?;
        let gap = (intrinsic.weyl_norm_tensor()? - ambient.weyl_norm_tensor()?).abs();
        verdict.max_traceless_ricci = verdict.max_traceless_ricci.max(z);
        if gap >= verdict.max_weyl_gap {
            verdict.max_weyl_gap = gap;
            verdict.witness = Some(q.clone());
        }
    }
    verdict.einstein = verdict.max_traceless_ricci <= tolerance;
    verdict.equality = verdict.max_weyl_gap <= tolerance;
    Ok(verdict)
}

/// One row of the per-sample hypersurface dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypersurfaceSample {
    pub q: Vec<f64>,
    pub mean_curvature: f64,
    pub b_norm: f64,
    pub l_norm: f64,
    pub ambient_scalar: f64,
    pub induced_scalar: f64,
    pub gauss_residual: f64,
    pub pythagoras: Option<PythagorasTerms>,
}

pub fn sample_row(
    h: &HypersurfaceSpec,
    q: &[f64],
    certificate: Option<&TotallyGeodesic>,
    cfg: &DiffConfig,
) -> Result<HypersurfaceSample> {
    let ff = fundamental_forms(h, q, cfg)?;
    let gauss = gauss_identity_check(h, q, cfg)?;
    let pythagoras = match certificate {
        Some(c) if h.dim() >= 3 => {
            pullback_compare(h, q, &PullbackTarget::Weyl, Some(c), cfg)?.pythagoras
        }
        _ => None,
    };
    Ok(HypersurfaceSample {
        q: q.to_vec(),
        mean_curvature: ff.h,
        b_norm: norm(&ff.b, &ff.induced)?,
        l_norm: norm(&ff.l, &ff.induced)?,
        ambient_scalar: gauss.ambient_scalar,
        induced_scalar: gauss.induced_scalar,
        gauss_residual: gauss.residual,
        pythagoras,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::sample_points;

    fn cfg() -> DiffConfig {
        DiffConfig::default()
    }

    fn s3_in_r4() -> HypersurfaceSpec {
        HypersurfaceSpec::new(
            ManifoldSpec::torus(&[100.0; 4]),
            Embedding::StereographicSphere { radius: 1.0 },
        )
        .with_normal(NormalSign::Negative)
    }

    #[test]
    fn slice_of_product_has_base_metric_and_circle_normal() {
        let h = HypersurfaceSpec::last_axis_slice(ManifoldSpec::sphere(4, 1.0).times_circle(), 0.3);
        let q = [0.1, -0.2, 0.3, 0.05];
        let d = induced_data(&h, &q).unwrap();
        let base = ManifoldSpec::sphere(4, 1.0).metric(&q).unwrap();
        assert!((d.induced.matrix() - base).amax() < 1e-15);
        assert!((d.normal[4].abs() - 1.0).abs() < 1e-15);
        assert!(d.normal[..4].iter().all(|c| c.abs() < 1e-15));
        let ff = fundamental_forms(&h, &q, &cfg()).unwrap();
        assert_eq!(ff.b.max_abs(), 0.0);
        assert_eq!(ff.h, 0.0);
    }

    #[test]
    fn graph_normal_matches_finite_difference_oracle() {
        let eps = 0.1;
        let h = HypersurfaceSpec::new(
            ManifoldSpec::standard_torus(2),
            Embedding::Graph {
                axis: 1,
                height: ScalarField::parse("0.1*sin(x1)").unwrap(),
            },
        );
        let x = 0.7;
        let d = induced_data(&h, &[x]).unwrap();
        let step = 1e-5;
        let slope = (eps * (x + step).sin() - eps * (x - step).sin()) / (2.0 * step);
        let len = (1.0 + slope * slope).sqrt();
        let oracle = [-slope / len, 1.0 / len];
        assert!((d.normal[0] - oracle[0]).abs() < 1e-8);
        assert!((d.normal[1] - oracle[1]).abs() < 1e-8);

        // Curvature of a plane curve y = f(x): f'' / (1 + f'^2)^{3/2} up to sign.
        let ff = fundamental_forms(&h, &[0.0], &cfg()).unwrap();
        let fd2 = |t: f64| eps * t.sin();
        let hh = 1e-3;
        let f2 = (fd2(hh) - 2.0 * fd2(0.0) + fd2(-hh)) / (hh * hh);
        let oracle_h = -f2 / (1.0 + eps * eps).powf(1.5);
        assert!((ff.h - oracle_h).abs() < 1e-5, "{} vs {oracle_h}", ff.h);
    }

    #[test]
    fn slanted_subtorus_is_flat() {
        let h = HypersurfaceSpec::new(
            ManifoldSpec::standard_torus(3),
            Embedding::Affine {
                matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.25]],
                offset: vec![0.0, 0.0, 1.0],
            },
        );
        let c = curvature_at(&h.induced_metric(), &[0.3, 0.4], &cfg()).unwrap();
        assert_eq!(c.scalar(), 0.0);
        let g = gauss_identity_check(&h, &[0.3, 0.4], &cfg()).unwrap();
        assert_eq!(g.residual, 0.0);
    }

    #[test]
    fn round_s3_in_flat_r4() {
        let h = s3_in_r4();
        let q = [0.3, -0.5, 0.2];
        let ff = fundamental_forms(&h, &q, &cfg()).unwrap();
        assert!(ff.b.sub(&ff.induced.as_tensor()).unwrap().max_abs() < 1e-7);
        assert!((ff.h - 3.0).abs() < 1e-7);
        assert!(norm(&ff.l, &ff.induced).unwrap() < 1e-7);
        let g = gauss_identity_check(&h, &q, &cfg()).unwrap();
        assert!((g.induced_scalar - 6.0).abs() < 1e-5);
        assert!((g.b_norm_sq - 3.0).abs() < 1e-6);
        assert!(g.residual < 1e-5, "{g:?}");
    }

    #[test]
    fn graph_gauss_residual() {
        let h = HypersurfaceSpec::new(
            ManifoldSpec::standard_torus(4),
            Embedding::Graph {
                axis: 3,
                height: ScalarField::parse("0.1*sin(x1) + 0.05*cos(x2)*sin(x3)").unwrap(),
            },
        );
        for q in sample_points(&ManifoldSpec::standard_torus(3), 5, 3).unwrap() {
            let g = gauss_identity_check(&h, &q, &cfg()).unwrap();
            assert!(g.residual < 1e-5, "{g:?}");
        }
    }

    #[test]
    fn rank_and_certificate_errors() {
        let h = HypersurfaceSpec::new(
            ManifoldSpec::standard_torus(3),
            Embedding::Affine {
                matrix: vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![0.0, 0.0]],
                offset: vec![0.0; 3],
            },
        );
        assert!(matches!(induced_data(&h, &[0.0, 0.0]), Err(Error::Rank(_))));
        let pts = vec![vec![0.1, 0.2, 0.3]];
        assert!(matches!(
            certify_totally_geodesic(&s3_in_r4(), &pts, &cfg()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn pythagoras_on_sphere_product_slice() {
        let sigma = ManifoldSpec::product(vec![ManifoldSpec::sphere(2, 1.0), ManifoldSpec::sphere(2, 2.0)]);
        let h = HypersurfaceSpec::last_axis_slice(sigma.times_circle(), 0.0);
        let pts = sample_points(&sigma, 4, 1).unwrap();
        let cert = certify_totally_geodesic(&h, &pts, &cfg()).unwrap();
        for q in &pts {
            let c = pullback_compare(&h, q, &PullbackTarget::Weyl, Some(&cert), &cfg()).unwrap();
            let p = c.pythagoras.unwrap();
            assert!(p.residual < 1e-5, "{p:?}");
            assert!(p.restricted_weyl > p.intrinsic_weyl + 1e-3);
            assert!(c.restricted <= c.ambient + 1e-10);
            assert!(gauss_curvature_defect(&h, q, &cfg()).unwrap() < 1e-8);
            assert!(mixed_normal_components(&h, q, &cfg()).unwrap() < 1e-8);
        }
    }

    #[test]
    fn product_remark_verdicts() {
        let cfg = cfg();
        for (sigma, einstein) in [
            (ManifoldSpec::sphere(4, 1.0), true),
            (ManifoldSpec::FubiniStudyCp2, true),
            (
                ManifoldSpec::product(vec![ManifoldSpec::sphere(2, 1.0), ManifoldSpec::sphere(2, 2.0)]),
                false,
            ),
        ] {
            let pts = sample_points(&sigma, 5, 11).unwrap();
            let v = product_remark_check(&sigma, &pts, 1e-6, &cfg).unwrap();
            assert_eq!(v.einstein, einstein, "{v:?}");
            assert!(v.agrees(), "{v:?}");
        }
    }
}
