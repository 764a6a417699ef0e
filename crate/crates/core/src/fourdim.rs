//! Dimension-4 machinery: Hodge star on 2-forms, `W = W⁺ + W⁻`, the Bochner
//! identity on parallel 2-forms, the Kähler relation `s = 2√6|W⁺|`, and the
//! branch classifier for four-dimensional slices with `s ≥ 2√6|W|`.
//!
//! Λ² carries `⟨α,β⟩ = ½ α_ij β^ij`, so `|e¹∧e²| = 1`. All `|W±|` values are
//! End(Λ²) Frobenius norms unless the field name says otherwise.

use nalgebra::{DMatrix, Matrix3, SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::{curvature_at, kahler_form, DiffConfig, ManifoldSpec, MetricSource};
use crate::tensor::{lambda2_matrix, MetricAtPoint, Tensor, TraceFreeSym3, CurvTensor};

const ANTISYMMETRY_TOL: f64 = 1e-14;
/// `max|∇ω|` below which a catalog form counts as parallel.
pub const PARALLEL_TOL: f64 = 1e-8;
const RICCI_TRACE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `dx¹∧dx²∧dx³∧dx⁴ > 0`.
    #[default]
    Standard,
    Reversed,
}

impl Orientation {
    pub fn reversed(self) -> Self {
        match self {
            Orientation::Standard => Orientation::Reversed,
            Orientation::Reversed => Orientation::Standard,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Orientation::Standard => 1.0,
            Orientation::Reversed => -1.0,
        }
    }
}

/// Λ² index pairs in the order used by [`lambda2_matrix`].
const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Rows: orthonormal bases of Λ⁺ and Λ⁻ in the basis `{eᵃ∧eᵇ}_{a<b}` of an
/// oriented orthonormal coframe.
fn lambda_pm_bases(o: Orientation) -> (SMatrix<f64, 3, 6>, SMatrix<f64, 3, 6>) {
    let e = o.sign();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // *e12 = e34, *e13 = −e24, *e14 = e23 for the standard orientation.
    let plus = SMatrix::<f64, 3, 6>::from_row_slice(&[
        r, 0.0, 0.0, 0.0, 0.0, e * r, //
        0.0, r, 0.0, 0.0, -e * r, 0.0, //
        0.0, 0.0, r, e * r, 0.0, 0.0,
    ]);
    let minus = SMatrix::<f64, 3, 6>::from_row_slice(&[
        r, 0.0, 0.0, 0.0, 0.0, -e * r, //
        0.0, r, 0.0, 0.0, e * r, 0.0, //
        0.0, 0.0, r, -e * r, 0.0, 0.0,
    ]);
    (plus, minus)
}

fn require_dim4(dim: usize) -> Result<()> {
    if dim != 4 {
        return Err(Error::Dimension(format!(
            "self-duality needs dimension 4, got {dim}"
        )));
    }
    Ok(())
}

/// Antisymmetric covariant 2-form at a point, with its metric and orientation.
#[derive(Clone, Debug)]
pub struct TwoForm4 {
    components: DMatrix<f64>,
    metric: MetricAtPoint,
    orientation: Orientation,
}

impl TwoForm4 {
    pub fn new(components: DMatrix<f64>, metric: MetricAtPoint, orientation: Orientation) -> Result<Self> {
        require_dim4(metric.dim())?;
        if components.nrows() != 4 || components.ncols() != 4 {
            return Err(Error::Dimension(format!(
                "2-form must be 4x4, got {}x{}",
                components.nrows(),
                components.ncols()
            )));
        }
        let scale = components.amax().max(1.0);
        for i in 0..4 {
            for j in 0..=i {
                let defect = (components[(i, j)] + components[(j, i)]).abs();
                if defect > ANTISYMMETRY_TOL * scale {
                    return Err(Error::Validation(format!(
                        "2-form is not antisymmetric: w[{i}][{j}] + w[{j}][{i}] = {defect:e}"
                    )));
                }
            }
        }
        let components = (&components - components.transpose()) * 0.5;
        Ok(TwoForm4 {
            components,
            metric,
            orientation,
        })
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn metric(&self) -> &MetricAtPoint {
        &self.metric
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Coordinates in the orthonormal basis `{eᵃ∧eᵇ}_{a<b}`.
    pub fn lambda2_coords(&self) -> [f64; 6] {
        let f = self.metric.orthonormal_frame();
        let w = f.transpose() * &self.components * f;
        PAIRS.map(|(a, b)| w[(a, b)])
    }

    fn from_lambda2(coords: &[f64; 6], metric: &MetricAtPoint, orientation: Orientation) -> TwoForm4 {
        let mut w = DMatrix::zeros(4, 4);
        for (k, (a, b)) in PAIRS.iter().enumerate() {
            w[(*a, *b)] = coords[k];
            w[(*b, *a)] = -coords[k];
        }
        // Coframe components back to chart components: F^{-T} w F^{-1}.
        let finv = metric
            .orthonormal_frame()
            .clone()
            .try_inverse()
            .expect("orthonormal frame of a valid metric is invertible");
        let c = finv.transpose() * w * finv;
        TwoForm4 {
            components: (&c - c.transpose()) * 0.5,
            metric: metric.clone(),
            orientation,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.lambda2_coords().iter().map(|v| v * v).sum()
    }

    pub fn inner(&self, other: &TwoForm4) -> f64 {
        self.lambda2_coords()
            .iter()
            .zip(other.lambda2_coords())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn hodge_star(&self) -> TwoForm4 {
        let c = self.lambda2_coords();
        let e = self.orientation.sign();
        // (e12,e13,e14,e23,e24,e34) -> (e34,−e24,e23,e14,−e13,e12)
        let star = [c[5], -c[4], c[3], c[2], -c[1], c[0]].map(|v| e * v);
        TwoForm4::from_lambda2(&star, &self.metric, self.orientation)
    }

    /// Coordinates of `ω⁺` and `ω⁻` in the bases of [`WeylSplit::frame`].
    pub fn self_dual_coords(&self) -> (Vector3<f64>, Vector3<f64>) {
        let c = SMatrix::<f64, 6, 1>::from_column_slice(&self.lambda2_coords());
        let (p, m) = lambda_pm_bases(self.orientation);
        (p * c, m * c)
    }

    pub fn sub(&self, other: &TwoForm4) -> TwoForm4 {
        TwoForm4 {
            components: &self.components - &other.components,
            metric: self.metric.clone(),
            orientation: self.orientation,
        }
    }
}

/// `(ω⁺, ω⁻)` with `*ω± = ±ω±`.
pub fn hodge_split(omega: &TwoForm4) -> (TwoForm4, TwoForm4) {
    let star = omega.hodge_star();
    let half = |sign: f64| TwoForm4 {
        components: (&omega.components + &star.components * sign) * 0.5,
        metric: omega.metric.clone(),
        orientation: omega.orientation,
    };
    (half(1.0), half(-1.0))
}

/// `W⁺` and `W⁻` as trace-free symmetric operators on Λ±.
#[derive(Clone, Debug)]
pub struct WeylSplit {
    pub w_plus: TraceFreeSym3,
    pub w_minus: TraceFreeSym3,
    /// Rows 0..3 span Λ⁺, rows 3..6 span Λ⁻, in the coframe basis
    /// `{eᵃ∧eᵇ}_{a<b}`.
    pub frame: DMatrix<f64>,
    pub orientation: Orientation,
    /// Frobenius norm of the Λ⁺→Λ⁻ block plus the removed asymmetry and
    /// trace; zero for an exact Weyl tensor.
    pub projection_defect: f64,
    /// `‖W − (W⁺ ⊕ W⁻)‖` on Λ².
    pub reassembly_residual: f64,
}

impl WeylSplit {
    pub fn plus_norm(&self) -> f64 {
        self.w_plus.norm()
    }

    pub fn minus_norm(&self) -> f64 {
        self.w_minus.norm()
    }

    /// Tensor norms are twice the End(Λ²) norms.
    pub fn plus_norm_tensor(&self) -> f64 {
        2.0 * self.w_plus.norm()
    }

    pub fn minus_norm_tensor(&self) -> f64 {
        2.0 * self.w_minus.norm()
    }

    /// `W⁺(ω⁺, ω⁺)` for a form given in the same metric and orientation.
    pub fn w_plus_form(&self, omega: &TwoForm4) -> f64 {
        let (p, _) = omega.self_dual_coords();
        p.dot(&(self.w_plus.matrix() * p))
    }
}

fn tracefree_part(a: Matrix3<f64>) -> (TraceFreeSym3, f64) {
    let sym = (a + a.transpose()) * 0.5;
    let tr = sym.trace() / 3.0;
    let tf = sym - Matrix3::identity() * tr;
    let defect = (a - sym).norm() + 3f64.sqrt() * tr.abs();
    (
        TraceFreeSym3::new(tf).expect("symmetric trace-free by construction"),
        defect,
    )
}

pub fn weyl_split(w: &CurvTensor, g: &MetricAtPoint, orientation: Orientation) -> Result<WeylSplit> {
    require_dim4(w.dim())?;
    let scale = w.tensor().max_abs().max(1.0);
    let inv = g.inverse();
    for j in 0..4 {
        for l in 0..4 {
            let mut c = 0.0;
            for i in 0..4 {
                for k in 0..4 {
                    c += inv[(i, k)] * w.get(i, j, k, l);
                }
            }
            if c.abs() > RICCI_TRACE_TOL * scale {
                return Err(Error::Validation(format!(
                    "Weyl input has Ricci contraction {c:e} at ({j},{l})"
                )));
            }
        }
    }
    let m = lambda2_matrix(w, g)?;
    let m6 = SMatrix::<f64, 6, 6>::from_fn(|r, c| m[(r, c)]);
    let (p, q) = lambda_pm_bases(orientation);
    let (w_plus, dp) = tracefree_part(p * m6 * p.transpose());
    let (w_minus, dm) = tracefree_part(q * m6 * q.transpose());
    let mixed = (p * m6 * q.transpose()).norm();
    let re = p.transpose() * w_plus.matrix() * p + q.transpose() * w_minus.matrix() * q;
    let frame = DMatrix::from_fn(6, 6, |r, c| if r < 3 { p[(r, c)] } else { q[(r - 3, c)] });
    Ok(WeylSplit {
        w_plus,
        w_minus,
        frame,
        orientation,
        projection_defect: mixed + dp + dm,
        reassembly_residual: (m6 - re).norm(),
    })
}

/// A 2-form field on a 4-dimensional catalog manifold with a known derivative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TwoFormField {
    /// Chart-constant components `ω_ij`.
    Constant { components: Vec<Vec<f64>> },
    /// `ω = g(J·,·)` for the standard complex structure of the chart
    /// `(x¹, y¹, x², y²)`.
    StandardKahler,
}

impl TwoFormField {
    pub fn coordinate(i: usize, j: usize) -> Self {
        let mut c = vec![vec![0.0; 4]; 4];
        c[i][j] = 1.0;
        c[j][i] = -1.0;
        TwoFormField::Constant { components: c }
    }

    pub fn name(&self) -> String {
        match self {
            TwoFormField::Constant { components } => {
                let mut terms = Vec::new();
                for i in 0..components.len() {
                    for j in i + 1..components[i].len() {
                        if components[i][j] != 0.0 {
                            terms.push(format!("{}*dx{}^dx{}", components[i][j], i + 1, j + 1));
                        }
                    }
                }
                if terms.is_empty() {
                    "0".into()
                } else {
                    terms.join(" + ")
                }
            }
            TwoFormField::StandardKahler => "Kahler form g(J.,.)".into(),
        }
    }

    fn constant(components: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        if components.len() != 4 || components.iter().any(|r| r.len() != 4) {
            return Err(Error::Dimension("2-form components must be 4x4".into()));
        }
        Ok(DMatrix::from_fn(4, 4, |i, j| components[i][j]))
    }

    pub fn value(&self, spec: &ManifoldSpec, x: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            TwoFormField::Constant { components } => Self::constant(components),
            TwoFormField::StandardKahler => Ok(kahler_form(&spec.metric(x)?)),
        }
    }

    /// `∂_k ω` for every k.
    pub fn derivative(&self, spec: &ManifoldSpec, x: &[f64], cfg: &DiffConfig) -> Result<Vec<DMatrix<f64>>> {
        match self {
            TwoFormField::Constant { components } => {
                Self::constant(components)?;
                Ok(vec![DMatrix::zeros(4, 4); 4])
            }
            TwoFormField::StandardKahler => Ok(spec
                .metric_first(x, cfg)?
                .iter()
                .map(kahler_form)
                .collect()),
        }
    }
}

/// Catalog forms expected to be parallel; certified before use.
pub fn catalog_parallel_forms(spec: &ManifoldSpec) -> Vec<TwoFormField> {
    match spec {
        ManifoldSpec::FlatTorus { periods } if periods.len() == 4 => {
            let mut out = Vec::new();
            for i in 0..4 {
                for j in i + 1..4 {
                    out.push(TwoFormField::coordinate(i, j));
                }
            }
            out
        }
        ManifoldSpec::FubiniStudyCp2 => vec![TwoFormField::StandardKahler],
        _ => Vec::new(),
    }
}

/// `|∇ω|` at one point, `∇_k ω_ij = ∂_k ω_ij − Γ^l_ki ω_lj − Γ^l_kj ω_il`.
pub fn covariant_derivative_norm(
    spec: &ManifoldSpec,
    omega: &TwoFormField,
    x: &[f64],
    cfg: &DiffConfig,
) -> Result<f64> {
    require_dim4(spec.dim())?;
    let g = MetricAtPoint::new(spec.metric(x)?)?;
    let dg = spec.metric_first(x, cfg)?;
    let gamma = crate::manifolds::christoffel(&g, &dg);
    let gm = |l: usize, k: usize, i: usize| gamma[(l * 4 + k) * 4 + i];
    let w = omega.value(spec, x)?;
    let dw = omega.derivative(spec, x, cfg)?;
    let nabla = Tensor::from_fn(3, 4, |idx| {
        let (k, i, j) = (idx[0], idx[1], idx[2]);
        let mut v = dw[k][(i, j)];
        for l in 0..4 {
            v -= gm(l, k, i) * w[(l, j)] + gm(l, k, j) * w[(i, l)];
        }
        v
    });
    crate::tensor::norm(&nabla, &g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelCertificate {
    pub form: String,
    pub samples: usize,
    pub max_nabla: f64,
    pub tolerance: f64,
}

/// Certifies `max|∇ω| ≤ 1e−8` over the sample points.
pub fn certify_parallel(
    spec: &ManifoldSpec,
    omega: &TwoFormField,
    points: &[Vec<f64>],
    cfg: &DiffConfig,
) -> Result<ParallelCertificate> {
    let mut max_nabla = 0.0f64;
    for x in points {
        max_nabla = max_nabla.max(covariant_derivative_norm(spec, omega, x, cfg)?);
    }
    if !(max_nabla <= PARALLEL_TOL) {
        return Err(Error::Precondition(format!(
            "{} is not parallel: max |nabla w| = {max_nabla:e} > {PARALLEL_TOL:e}",
            omega.name()
        )));
    }
    Ok(ParallelCertificate {
        form: omega.name(),
        samples: points.len(),
        max_nabla,
        tolerance: PARALLEL_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BochnerCheck {
    pub point: Vec<f64>,
    pub scalar: f64,
    /// `W⁺(ω⁺, ω⁺)`.
    pub w_plus_form: f64,
    /// `|ω⁺|²`.
    pub norm_sq: f64,
    /// `|−2W⁺(ω⁺,ω⁺) + (s/3)|ω⁺|²|`.
    pub residual: f64,
}

/// Bochner identity for a certified parallel form at `x`: with `∇ω = 0` the
/// self-dual part satisfies `0 = −2W⁺(ω⁺,ω⁺) + (s/3)|ω⁺|²`.
pub fn bochner_parallel_check(
    spec: &ManifoldSpec,
    omega: &TwoFormField,
    cert: &ParallelCertificate,
    x: &[f64],
    orientation: Orientation,
    cfg: &DiffConfig,
) -> Result<BochnerCheck> {
    if cert.form != omega.name() || !(cert.max_nabla <= PARALLEL_TOL) {
        return Err(Error::Precondition(
            "certificate does not cover this 2-form".into(),
        ));
    }
    // The certificate covers its own samples; x is re-certified.
    let nabla = covariant_derivative_norm(spec, omega, x, cfg)?;
    if !(nabla <= PARALLEL_TOL) {
        return Err(Error::Precondition(format!(
            "|nabla w| = {nabla:e} at {x:?} exceeds {PARALLEL_TOL:e}"
        )));
    }
    let sample = curvature_at(spec, x, cfg)?;
    let split = weyl_split(sample.weyl()?, &sample.metric, orientation)?;
    let form = TwoForm4::new(omega.value(spec, x)?, sample.metric.clone(), orientation)?;
    let (p, _) = form.self_dual_coords();
    let wpf = p.dot(&(split.w_plus.matrix() * p));
    let norm_sq = p.norm_squared();
    let s = sample.scalar();
    Ok(BochnerCheck {
        point: x.to_vec(),
        scalar: s,
        w_plus_form: wpf,
        norm_sq,
        residual: (-2.0 * wpf + s / 3.0 * norm_sq).abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KahlerVerdict {
    pub samples: usize,
    pub tolerance: f64,
    pub orientation: Orientation,
    /// `max |s − 2√6|W⁺|_End|`.
    pub max_deviation: f64,
    /// `min (s − 2√6|W⁺|_End)`.
    pub min_gap: f64,
    pub max_gap: f64,
    pub max_w_plus_end: f64,
    pub max_w_plus_tensor: f64,
    pub max_w_minus_end: f64,
    pub max_w_minus_tensor: f64,
    pub witness: Option<Vec<f64>>,
    pub holds: bool,
}

pub fn kahler_relation_check(
    spec: &ManifoldSpec,
    points: &[Vec<f64>],
    tolerance: f64,
    orientation: Orientation,
    cfg: &DiffConfig,
) -> Result<KahlerVerdict> {
    require_dim4(spec.dim())?;
    let c = 2.0 * 6f64.sqrt();
    let mut v = KahlerVerdict {
        samples: points.len(),
        tolerance,
        orientation,
        max_deviation: 0.0,
        min_gap: f64::INFINITY,
        max_gap: f64::NEG_INFINITY,
        max_w_plus_end: 0.0,
        max_w_plus_tensor: 0.0,
        max_w_minus_end: 0.0,
        max_w_minus_tensor: 0.0,
        witness: None,
        holds: true,
    };
    for x in points {
        let sample = curvature_at(spec, x, cfg)?;
        let split = weyl_split(sample.weyl()?, &sample.metric, orientation)?;
        let gap = sample.scalar() - c * split.plus_norm();
        if gap.abs() > v.max_deviation || v.witness.is_none() {
            v.max_deviation = v.max_deviation.max(gap.abs());
            v.witness = Some(x.clone());
        }
        v.min_gap = v.min_gap.min(gap);
        v.max_gap = v.max_gap.max(gap);
        v.max_w_plus_end = v.max_w_plus_end.max(split.plus_norm());
        v.max_w_plus_tensor = v.max_w_plus_tensor.max(split.plus_norm_tensor());
        v.max_w_minus_end = v.max_w_minus_end.max(split.minus_norm());
        v.max_w_minus_tensor = v.max_w_minus_tensor.max(split.minus_norm_tensor());
    }
    v.holds = v.max_deviation <= tolerance;
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "snake_case")]
pub enum Corollary1Branch {
    /// `s > 2√6|W|` at some sample; consistent with `H² = 0`.
    StrictInequalitySomewhere { max_gap: f64, witness: Vec<f64> },
    /// Equality everywhere, `W⁻ = 0` in the stated orientation, and a
    /// certified parallel 2-form satisfying the Bochner identity.
    SelfDualKahler { reversed: bool, witness_form: String },
    Inconsistent { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corollary1Verdict {
    pub branch: Corollary1Branch,
    pub samples: usize,
    pub tolerance: f64,
    /// `min (s − 2√6|W|_End)` and its maximum.
    pub min_gap: f64,
    pub max_gap: f64,
    pub max_w_plus_end: f64,
    pub max_w_minus_end: f64,
    pub parallel_witnesses: Vec<ParallelCertificate>,
    pub max_bochner_residual: Option<f64>,
    /// Informational only.
    pub b2: Option<u32>,
    /// `Some(b₂ = 0)` on the strict branch when `b₂` is given.
    pub b2_consistent: Option<bool>,
    /// Harmonic forms are represented by certified parallel forms only.
    pub surrogate: String,
}

pub const COROLLARY1_SURROGATE: &str = "pointwise curvature measurements plus catalog-certified \
parallel 2-forms stand in for global harmonic forms; no Hodge solver is run";

/// Classifies a four-dimensional catalog manifold with `s ≥ 2√6|W|`.
pub fn corollary1_classify(
    spec: &ManifoldSpec,
    points: &[Vec<f64>],
    tolerance: f64,
    orientation: Orientation,
    b2: Option<u32>,
    cfg: &DiffConfig,
) -> Result<Corollary1Verdict> {
    require_dim4(spec.dim())?;
    let c = 2.0 * 6f64.sqrt();
    let mut min_gap = f64::INFINITY;
    let mut max_gap = f64::NEG_INFINITY;
    let mut max_witness = Vec::new();
    let mut max_plus = [0.0f64; 2];
    let mut max_minus = [0.0f64; 2];
    for x in points {
        let sample = curvature_at(spec, x, cfg)?;
        let w = sample.weyl()?;
        let gap = sample.scalar() - c * sample.weyl_norm_end()?;
        min_gap = min_gap.min(gap);
        if gap > max_gap {
            max_gap = gap;
            max_witness = x.clone();
        }
        for (k, o) in [orientation, orientation.reversed()].into_iter().enumerate() {
            let split = weyl_split(w, &sample.metric, o)?;
            max_plus[k] = max_plus[k].max(split.plus_norm());
            max_minus[k] = max_minus[k].max(split.minus_norm());
        }
    }
    let mut verdict = Corollary1Verdict {
        branch: Corollary1Branch::Inconsistent {
            reason: "no samples".into(),
        },
        samples: points.len(),
        tolerance,
        min_gap,
        max_gap,
        max_w_plus_end: max_plus[0],
        max_w_minus_end: max_minus[0],
        parallel_witnesses: Vec::new(),
        max_bochner_residual: None,
        b2,
        b2_consistent: None,
        surrogate: COROLLARY1_SURROGATE.into(),
    };
    if points.is_empty() {
        return Ok(verdict);
    }
    if min_gap < -tolerance {
        verdict.branch = Corollary1Branch::Inconsistent {
            reason: format!("s - 2sqrt6|W| = {min_gap:e} < 0: the curvature hypothesis fails"),
        };
        return Ok(verdict);
    }
    if max_gap > tolerance {
        verdict.b2_consistent = b2.map(|b| b == 0);
        verdict.branch = Corollary1Branch::StrictInequalitySomewhere {
            max_gap,
            witness: max_witness,
        };
        return Ok(verdict);
    }
    for form in catalog_parallel_forms(spec) {
        if let Ok(cert) = certify_parallel(spec, &form, points, cfg) {
            verdict.parallel_witnesses.push(cert);
        }
    }
    for (k, o) in [orientation, orientation.reversed()].into_iter().enumerate() {
        if max_minus[k] > tolerance {
            continue;
        }
        for form in catalog_parallel_forms(spec) {
            let Some(cert) = verdict
                .parallel_witnesses
                .iter()
                .find(|c| c.form == form.name())
                .cloned()
            else {
                continue;
            };
            let mut worst = 0.0f64;
            let mut self_dual_mass = f64::INFINITY;
            for x in points {
                let b = bochner_parallel_check(spec, &form, &cert, x, o, cfg)?;
                worst = worst.max(b.residual);
                self_dual_mass = self_dual_mass.min(b.norm_sq);
            }
            verdict.max_bochner_residual =
                Some(verdict.max_bochner_residual.map_or(worst, |m: f64| m.max(worst)));
            if worst <= tolerance && self_dual_mass > 0.5 {
                verdict.branch = Corollary1Branch::SelfDualKahler {
                    reversed: k == 1,
                    witness_form: cert.form.clone(),
                };
                return Ok(verdict);
            }
        }
    }
    verdict.branch = Corollary1Branch::Inconsistent {
        reason: format!(
            "equality holds but no orientation has W- = 0 with a certified self-dual parallel \
             witness (max |W-|_End = {:e}, {:e} reversed)",
            max_minus[0], max_minus[1]
        ),
    };
    Ok(verdict)
}
