//! Closed-form metric catalog on coordinate charts.

mod engine;
mod sampling;

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{central4, ScalarField};

pub use engine::{
    christoffel, curvature_at, laplacian, riemann_from_jet, CurvatureSample, DiffConfig,
    MetricJet, MetricSource,
};
pub use sampling::{halton, hypothesis_scan, sample_points, sample_unit_cube, ScanReport};

/// Chart points farther than this many chart scales from the origin are
/// rejected; sphere and CP² charts degenerate towards infinity.
const CHART_LIMIT: f64 = 1e3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereChart {
    /// Stereographic projection from the south pole; the north pole sits at 0.
    #[default]
    North,
    South,
}

/// Catalog entry. Coordinates of products are concatenated base-first and
/// orientation is the chart coordinate order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldSpec {
    /// `ℝ^m / ⊕ P_i ℤ` with the Euclidean metric.
    FlatTorus { periods: Vec<f64> },
    /// Round sphere `S^dim(radius)` in a stereographic chart.
    RoundSphere {
        dim: usize,
        radius: f64,
        #[serde(default)]
        chart: SphereChart,
    },
    /// `CP²` with the Fubini–Study metric normalised to `Ric = 6g`, on the
    /// affine chart `ℂ²` with coordinates `(Re z1, Im z1, Re z2, Im z2)`.
    FubiniStudyCp2,
    /// Riemannian product of the factors.
    Product { factors: Vec<ManifoldSpec> },
    /// Circle of the given radius, angle coordinate in `[0, 2π)`.
    Circle { radius: f64 },
    /// `factor² · g_base`.
    ConformalDeformation {
        base: Box<ManifoldSpec>,
        factor: ScalarField,
    },
}

/// A point of a chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub coords: Vec<f64>,
    pub chart: String,
}

/// One row of the `catalog` listing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub kind: String,
    pub example: ManifoldSpec,
    pub description: String,
}

impl ManifoldSpec {
    pub fn torus(periods: &[f64]) -> Self {
        ManifoldSpec::FlatTorus {
            periods: periods.to_vec(),
        }
    }

    /// Standard torus `ℝ^m / 2πℤ^m`.
    pub fn standard_torus(m: usize) -> Self {
        Self::torus(&vec![TAU; m])
    }

    pub fn sphere(dim: usize, radius: f64) -> Self {
        ManifoldSpec::RoundSphere {
            dim,
            radius,
            chart: SphereChart::North,
        }
    }

    pub fn circle(radius: f64) -> Self {
        ManifoldSpec::Circle { radius }
    }

    pub fn product(factors: Vec<ManifoldSpec>) -> Self {
        ManifoldSpec::Product { factors }
    }

    /// `self × S¹(1)`.
    pub fn times_circle(&self) -> Self {
        Self::product(vec![self.clone(), Self::circle(1.0)])
    }

    pub fn conformal(base: ManifoldSpec, factor: ScalarField) -> Self {
        ManifoldSpec::ConformalDeformation {
            base: Box::new(base),
            factor,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ManifoldSpec::FlatTorus { .. } => "flat_torus",
            ManifoldSpec::RoundSphere { .. } => "round_sphere",
            ManifoldSpec::FubiniStudyCp2 => "fubini_study_cp2",
            ManifoldSpec::Product { .. } => "product",
            ManifoldSpec::Circle { .. } => "circle",
            ManifoldSpec::ConformalDeformation { .. } => "conformal_deformation",
        }
    }

    /// Checks parameters and, recursively, factor consistency.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Configuration(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            ManifoldSpec::FlatTorus { periods } => {
                if periods.is_empty() {
                    return Err(Error::Configuration("torus needs at least one period".into()));
                }
                periods.iter().try_for_each(|p| positive("torus period", *p))
            }
            ManifoldSpec::RoundSphere { dim, radius, .. } => {
                if *dim < 2 {
                    return Err(Error::Configuration(format!(
                        "sphere dimension must be >= 2, got {dim}"
                    )));
                }
                positive("sphere radius", *radius)
            }
            ManifoldSpec::FubiniStudyCp2 => Ok(()),
            ManifoldSpec::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::Configuration("product needs factors".into()));
                }
                factors.iter().try_for_each(|f| f.validate())
            }
            ManifoldSpec::Circle { radius } => positive("circle radius", *radius),
            ManifoldSpec::ConformalDeformation { base, factor } => {
                base.validate()?;
                if factor.arity() > base.dim() {
                    return Err(Error::Configuration(format!(
                        "conformal factor uses x{} on a {}-dimensional chart",
                        factor.arity(),
                        base.dim()
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn chart_id(&self) -> String {
        match self {
            ManifoldSpec::RoundSphere { chart, .. } => match chart {
                SphereChart::North => "north".into(),
                SphereChart::South => "south".into(),
            },
            ManifoldSpec::FubiniStudyCp2 => "affine".into(),
            ManifoldSpec::Product { factors } => factors
                .iter()
                .map(|f| f.chart_id())
                .collect::<Vec<_>>()
                .join("x"),
            ManifoldSpec::ConformalDeformation { base, .. } => base.chart_id(),
            _ => "standard".into(),
        }
    }

    pub fn chart_point(&self, coords: Vec<f64>) -> ChartPoint {
        ChartPoint {
            coords,
            chart: self.chart_id(),
        }
    }

    /// Coordinate box `[lo, hi]` per axis from which samples are drawn.
    pub fn sample_box(&self) -> Vec<(f64, f64)> {
        match self {
            ManifoldSpec::FlatTorus { periods } => periods.iter().map(|p| (0.0, *p)).collect(),
            ManifoldSpec::RoundSphere { dim, radius, .. } => vec![(-radius, *radius); *dim],
            ManifoldSpec::FubiniStudyCp2 => vec![(-1.0, 1.0); 4],
            ManifoldSpec::Product { factors } => {
                factors.iter().flat_map(|f| f.sample_box()).collect()
            }
            ManifoldSpec::Circle { .. } => vec![(0.0, TAU)],
            ManifoldSpec::ConformalDeformation { base, .. } => base.sample_box(),
        }
    }

    /// Periods of every axis when the chart is a torus chart.
    pub fn periods(&self) -> Option<Vec<f64>> {
        match self {
            ManifoldSpec::FlatTorus { periods } => Some(periods.clone()),
            ManifoldSpec::Circle { .. } => Some(vec![TAU]),
            ManifoldSpec::Product { factors } => {
                let mut out = Vec::new();
                for f in factors {
                    out.extend(f.periods()?);
                }
                Some(out)
            }
            ManifoldSpec::ConformalDeformation { base, .. } => base.periods(),
            _ => None,
        }
    }

    /// Known scalar curvature when it is constant over the manifold.
    pub fn constant_scalar(&self) -> Option<f64> {
        match self {
            ManifoldSpec::FlatTorus { .. } | ManifoldSpec::Circle { .. } => Some(0.0),
            ManifoldSpec::RoundSphere { dim, radius, .. } => {
                let m = *dim as f64;
                Some(m * (m - 1.0) / (radius * radius))
            }
            ManifoldSpec::FubiniStudyCp2 => Some(24.0),
            ManifoldSpec::Product { factors } => factors
                .iter()
                .map(|f| f.constant_scalar())
                .sum::<Option<f64>>(),
            ManifoldSpec::ConformalDeformation { base, factor } => match factor {
                ScalarField::Constant(u) => base.constant_scalar().map(|s| s / (u * u)),
                _ => None,
            },
        }
    }

    /// Whether the catalog knows the metric to be Einstein.
    pub fn known_einstein(&self) -> Option<bool> {
        match self {
            ManifoldSpec::FlatTorus { .. }
            | ManifoldSpec::RoundSphere { .. }
            | ManifoldSpec::FubiniStudyCp2
            | ManifoldSpec::Circle { .. } => Some(true),
            _ => None,
        }
    }

    /// Candidate parallel 2-forms at `x`, as antisymmetric coordinate
    /// matrices. Empty when the catalog knows none (they are certified by the
    /// caller, never assumed).
    pub fn parallel_two_forms(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        match self {
            ManifoldSpec::FlatTorus { periods } => {
                let m = periods.len();
                let mut out = Vec::new();
                for i in 0..m {
                    for j in i + 1..m {
                        let mut w = DMatrix::zeros(m, m);
                        w[(i, j)] = 1.0;
                        w[(j, i)] = -1.0;
                        out.push(w);
                    }
                }
                Ok(out)
            }
            ManifoldSpec::FubiniStudyCp2 => Ok(vec![kahler_form(&self.metric(x)?)]),
            _ => Ok(Vec::new()),
        }
    }

    /// Short description of every catalog kind, with a representative spec.
    pub fn catalog() -> Vec<CatalogEntry> {
        let entry = |example: ManifoldSpec, description: &str| CatalogEntry {
            kind: example.kind_name().into(),
            example,
            description: description.into(),
        };
        vec![
            entry(
                Self::standard_torus(3),
                "flat torus R^m / (P1 Z + ... + Pm Z); coordinates in [0, P_i)",
            ),
            entry(
                Self::sphere(4, 1.0),
                "round sphere S^m(r) in a stereographic chart (north or south); s = m(m-1)/r^2",
            ),
            entry(
                ManifoldSpec::FubiniStudyCp2,
                "CP^2 with the Fubini-Study metric, Ric = 6g (s = 24), affine chart C^2",
            ),
            entry(
                Self::product(vec![Self::sphere(4, 1.0), Self::circle(1.0)]),
                "Riemannian product; coordinates concatenated factor by factor",
            ),
            entry(Self::circle(1.0), "circle S^1(r), angle coordinate in [0, 2pi)"),
            entry(
                Self::conformal(
                    Self::standard_torus(3),
                    ScalarField::parse("1 + 0.1*sin(x1)").expect("catalog expression"),
                ),
                "conformal deformation u^2 g of a base entry; u is a DSL expression",
            ),
        ]
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::Dimension(format!(
                "{} chart is {n}-dimensional, point has {} coordinates",
                self.kind_name(),
                x.len()
            )));
        }
        if let Some(c) = x.iter().find(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate {c}")));
        }
        Ok(())
    }

    fn metric_unchecked(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            ManifoldSpec::FlatTorus { periods } => Ok(DMatrix::identity(periods.len(), periods.len())),
            ManifoldSpec::Circle { radius } => Ok(DMatrix::from_element(1, 1, radius * radius)),
            ManifoldSpec::RoundSphere { dim, radius, .. } => {
                let r2 = radius * radius;
                let q = r2 + x.iter().map(|v| v * v).sum::<f64>();
                if x.iter().map(|v| v * v).sum::<f64>().sqrt() > CHART_LIMIT * radius {
                    return Err(Error::Domain(format!(
                        "point {x:?} is outside the stereographic chart"
                    )));
                }
                Ok(DMatrix::identity(*dim, *dim) * (4.0 * r2 * r2 / (q * q)))
            }
            ManifoldSpec::FubiniStudyCp2 => {
                cp2_check(x)?;
                Ok(cp2_metric(x))
            }
            ManifoldSpec::Product { factors } => {
                let n = self.dim();
                let mut g = DMatrix::zeros(n, n);
                let mut off = 0;
                for f in factors {
                    let k = f.dim();
                    g.view_mut((off, off), (k, k))
                        .copy_from(&f.metric_unchecked(&x[off..off + k])?);
                    off += k;
                }
                Ok(g)
            }
            ManifoldSpec::ConformalDeformation { base, factor } => {
                let u = positive_factor(factor, x)?;
                Ok(base.metric_unchecked(x)? * (u * u))
            }
        }
    }

    fn first_unchecked(&self, x: &[f64], cfg: &DiffConfig) -> Result<Vec<DMatrix<f64>>> {
        let n = self.dim();
        match self {
            ManifoldSpec::FlatTorus { .. } | ManifoldSpec::Circle { .. } => {
                Ok(vec![DMatrix::zeros(n, n); n])
            }
            ManifoldSpec::RoundSphere { dim, radius, .. } => {
                self.metric_unchecked(x)?;
                let r2 = radius * radius;
                let q = r2 + x.iter().map(|v| v * v).sum::<f64>();
                Ok((0..*dim)
                    .map(|k| DMatrix::identity(n, n) * (-16.0 * r2 * r2 * x[k] / (q * q * q)))
                    .collect())
            }
            ManifoldSpec::FubiniStudyCp2 => {
                cp2_check(x)?;
                Ok(cp2_metric_first(x))
            }
            ManifoldSpec::Product { factors } => {
                let mut out = vec![DMatrix::zeros(n, n); n];
                let mut off = 0;
                for f in factors {
                    let k = f.dim();
                    for (c, d) in f.first_unchecked(&x[off..off + k], cfg)?.into_iter().enumerate() {
                        out[off + c].view_mut((off, off), (k, k)).copy_from(&d);
                    }
                    off += k;
                }
                Ok(out)
            }
            ManifoldSpec::ConformalDeformation { base, factor } => {
                let u = positive_factor(factor, x)?;
                let gb = base.metric_unchecked(x)?;
                let dgb = base.first_unchecked(x, cfg)?;
                let du: Vec<f64> = if factor.is_constant() {
                    vec![0.0; n]
                } else {
                    let h = cfg.second_step(self.chart_scale());
                    (0..n)
                        .map(|k| Ok(central4(|y| Ok(vec![factor.value(y)?]), x, k, h)?[0]))
                        .collect::<Result<_>>()?
                };
                Ok(dgb
                    .into_iter()
                    .zip(du)
                    .map(|(d, duk)| &gb * (2.0 * u * duk) + d * (u * u))
                    .collect())
            }
        }
    }
}

impl MetricSource for ManifoldSpec {
    fn dim(&self) -> usize {
        match self {
            ManifoldSpec::FlatTorus { periods } => periods.len(),
            ManifoldSpec::RoundSphere { dim, .. } => *dim,
            ManifoldSpec::FubiniStudyCp2 => 4,
            ManifoldSpec::Product { factors } => factors.iter().map(|f| f.dim()).sum(),
            ManifoldSpec::Circle { .. } => 1,
            ManifoldSpec::ConformalDeformation { base, .. } => base.dim(),
        }
    }

    fn chart_scale(&self) -> f64 {
        match self {
            ManifoldSpec::RoundSphere { radius, .. } => *radius,
            ManifoldSpec::Product { factors } => factors
                .iter()
                .map(|f| f.chart_scale())
                .fold(f64::INFINITY, f64::min),
            ManifoldSpec::ConformalDeformation { base, .. } => base.chart_scale(),
            _ => 1.0,
        }
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        self.metric_unchecked(x)
    }

    fn metric_first(&self, x: &[f64], cfg: &DiffConfig) -> Result<Vec<DMatrix<f64>>> {
        self.check_point(x)?;
        self.first_unchecked(x, cfg)
    }
}

fn fd_metric_first<S: MetricSource + ?Sized>(
    src: &S,
    x: &[f64],
    cfg: &DiffConfig,
) -> Result<Vec<DMatrix<f64>>> {
    let n = src.dim();
    let h = cfg.first_step(src.chart_scale());
    (0..n)
        .map(|k| {
            let v = central4(|y| Ok(src.metric(y)?.iter().copied().collect()), x, k, h)?;
            let m = DMatrix::from_column_slice(n, n, &v);
            Ok((&m + m.transpose()) * 0.5)
        })
        .collect()
}

/// Wraps a source so that only metric values are used, with first
/// derivatives by finite differences. Serves as the low-precision fallback
/// and as an oracle against analytic derivatives.
pub struct FdOnly<'a, S: ?Sized>(pub &'a S);

impl<S: MetricSource + ?Sized> MetricSource for FdOnly<'_, S> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn chart_scale(&self) -> f64 {
        self.0.chart_scale()
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.0.metric(x)
    }

    fn metric_first(&self, x: &[f64], cfg: &DiffConfig) -> Result<Vec<DMatrix<f64>>> {
        fd_metric_first(self.0, x, cfg)
    }
}

impl<S: MetricSource + ?Sized> MetricSource for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn chart_scale(&self) -> f64 {
        (**self).chart_scale()
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        (**self).metric(x)
    }

    fn metric_first(&self, x: &[f64], cfg: &DiffConfig) -> Result<Vec<DMatrix<f64>>> {
        (**self).metric_first(x, cfg)
    }
}

/// `factor² · base` for an arbitrary metric source.
pub struct Conformal<S> {
    pub base: S,
    pub factor: ScalarField,
}

impl<S: MetricSource> MetricSource for Conformal<S> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn chart_scale(&self) -> f64 {
        self.base.chart_scale()
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let u = positive_factor(&self.factor, x)?;
        Ok(self.base.metric(x)? * (u * u))
    }

    fn metric_first(&self, x: &[f64], cfg: &DiffConfig) -> Result<Vec<DMatrix<f64>>> {
        let n = self.dim();
        let u = positive_factor(&self.factor, x)?;
        let gb = self.base.metric(x)?;
        let dgb = self.base.metric_first(x, cfg)?;
        let h = cfg.second_step(self.chart_scale());
        let mut out = Vec::with_capacity(n);
        for (k, d) in dgb.into_iter().enumerate() {
            let duk = if self.factor.is_constant() {
                0.0
            } else {
                central4(|y| Ok(vec![self.factor.value(y)?]), x, k, h)?[0]
            };
            out.push(&gb * (2.0 * u * duk) + d * (u * u));
        }
        Ok(out)
    }
}

fn positive_factor(factor: &ScalarField, x: &[f64]) -> Result<f64> {
    let u = factor.value(x)?;
    if u > 0.0 && u.is_finite() {
        Ok(u)
    } else {
        Err(Error::Domain(format!(
            "conformal factor must be positive, got {u} at {x:?}"
        )))
    }
}

/// Evaluates the metric jet at a chart point after the domain check.
pub fn eval_metric(spec: &ManifoldSpec, p: &ChartPoint, cfg: &DiffConfig) -> Result<MetricJet> {
    if p.chart != spec.chart_id() {
        return Err(Error::Domain(format!(
            "point is in chart `{}`, spec uses `{}`",
            p.chart,
            spec.chart_id()
        )));
    }
    spec.jet(&p.coords, cfg)
}

/// Maps a point between the two stereographic charts of a sphere of the
/// given radius: `x ↦ r² x / |x|²`.
pub fn sphere_chart_transition(x: &[f64], radius: f64) -> Result<Vec<f64>> {
    let q: f64 = x.iter().map(|v| v * v).sum();
    if q == 0.0 {
        return Err(Error::Domain("pole is not covered by the other chart".into()));
    }
    Ok(x.iter().map(|v| radius * radius * v / q).collect())
}

fn cp2_check(x: &[f64]) -> Result<()> {
    if x.iter().map(|v| v * v).sum::<f64>().sqrt() > CHART_LIMIT {
        return Err(Error::Domain(format!(
            "point {x:?} is outside the affine chart"
        )));
    }
    Ok(())
}

fn cp2_z(x: &[f64]) -> [Complex64; 2] {
    [Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3])]
}

/// Real 4×4 form of the Hermitian matrix `h = A + iB`.
fn cp2_realify(h: &[[Complex64; 2]; 2]) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            let (re, im) = (h[a][b].re, h[a][b].im);
            g[(2 * a, 2 * b)] = re;
            g[(2 * a + 1, 2 * b + 1)] = re;
            g[(2 * a, 2 * b + 1)] = im;
            g[(2 * a + 1, 2 * b)] = -im;
        }
    }
    g
}

/// `h_ab = δ_ab/ρ − z̄_a z_b/ρ²`, `ρ = 1 + |z|²`.
fn cp2_metric(x: &[f64]) -> DMatrix<f64> {
    let z = cp2_z(x);
    let rho = 1.0 + z[0].norm_sqr() + z[1].norm_sqr();
    let mut h = [[Complex64::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let delta = if a == b { 1.0 / rho } else { 0.0 };
            h[a][b] = Complex64::new(delta, 0.0) - z[a].conj() * z[b] / (rho * rho);
        }
    }
    cp2_realify(&h)
}

fn cp2_metric_first(x: &[f64]) -> Vec<DMatrix<f64>> {
    let z = cp2_z(x);
    let rho = 1.0 + z[0].norm_sqr() + z[1].norm_sqr();
    (0..4)
        .map(|k| {
            let drho = 2.0 * x[k];
            // ∂z_b/∂x_k is 1 or i on the matching complex coordinate.
            let dz = |b: usize| {
                if k / 2 != b {
                    Complex64::new(0.0, 0.0)
                } else if k % 2 == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 1.0)
                }
            };
            let mut h = [[Complex64::new(0.0, 0.0); 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    let delta = if a == b { -drho / (rho * rho) } else { 0.0 };
                    h[a][b] = Complex64::new(delta, 0.0)
                        - (dz(a).conj() * z[b] + z[a].conj() * dz(b)) / (rho * rho)
                        + z[a].conj() * z[b] * (2.0 * drho / (rho * rho * rho));
                }
            }
            cp2_realify(&h)
        })
        .collect()
}

/// `ω(X, Y) = g(JX, Y)` with `J e_{2a} = e_{2a+1}`, `J e_{2a+1} = −e_{2a}`.
pub fn kahler_form(g: &DMatrix<f64>) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(4, 4);
    for a in 0..2 {
        j[(2 * a + 1, 2 * a)] = 1.0;
        j[(2 * a, 2 * a + 1)] = -1.0;
    }
    j.transpose() * g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::norm;

    fn cfg() -> DiffConfig {
        DiffConfig::default()
    }

    #[test]
    fn torus_metric_is_flat() {
        let t = ManifoldSpec::standard_torus(4);
        let s = curvature_at(&t, &[0.1, 0.2, 0.3, 0.4], &cfg()).unwrap();
        assert_eq!(s.scalar(), 0.0);
        assert_eq!(s.weyl().unwrap().tensor().max_abs(), 0.0);
        assert_eq!(s.ricci.traceless.max_abs(), 0.0);
    }

    #[test]
    fn sphere_metric_at_origin() {
        let s = ManifoldSpec::sphere(3, 1.0);
        let g = s.metric(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(g, DMatrix::identity(3, 3) * 4.0);
        let p = [0.3, -0.2, 0.5];
        let q: f64 = 1.0 + p.iter().map(|v| v * v).sum::<f64>();
        assert!((s.metric(&p).unwrap()[(1, 1)] - 4.0 / (q * q)).abs() < 1e-15);
    }

    #[test]
    fn constant_conformal_factor_scales_metric() {
        let c = ManifoldSpec::conformal(ManifoldSpec::standard_torus(3), 2.0.into());
        assert_eq!(c.metric(&[0.0; 3]).unwrap(), DMatrix::identity(3, 3) * 4.0);
    }

    #[test]
    fn analytic_first_derivatives_match_finite_differences() {
        let cfg = DiffConfig::default();
        for spec in [ManifoldSpec::sphere(4, 1.3), ManifoldSpec::FubiniStudyCp2] {
            let x = [0.3, -0.4, 0.2, 0.7];
            let a = spec.metric_first(&x, &cfg).unwrap();
            let f = FdOnly(&spec).metric_first(&x, &cfg).unwrap();
            for (da, df) in a.iter().zip(&f) {
                assert!((da - df).amax() < 1e-9, "{spec:?}");
            }
        }
    }

    #[test]
    fn sphere_scalar_curvature() {
        for (m, r) in [(2, 1.0), (3, 2.0), (4, 1.0), (5, 0.7)] {
            let s = ManifoldSpec::sphere(m, r);
            let x: Vec<f64> = (0..m).map(|i| 0.1 * r * (i as f64 + 1.0)).collect();
            let c = curvature_at(&s, &x, &cfg()).unwrap();
            let expected = (m * (m - 1)) as f64 / (r * r);
            assert!((c.scalar() - expected).abs() < 1e-6, "m={m}: {}", c.scalar());
            if m >= 3 {
                assert!(c.weyl_norm_tensor().unwrap() < 1e-6);
            }
            let fd = curvature_at(&FdOnly(&s), &x, &cfg()).unwrap();
            assert!((fd.scalar() - expected).abs() < 1e-4);
        }
    }

    #[test]
    fn cp2_is_einstein_with_s_24() {
        let c = curvature_at(&ManifoldSpec::FubiniStudyCp2, &[0.2, -0.5, 0.4, 0.1], &cfg()).unwrap();
        assert!((c.scalar() - 24.0).abs() < 1e-6);
        assert!(norm(&c.ricci.traceless, &c.metric).unwrap() < 1e-6);
        let w = c.weyl_norm_end().unwrap();
        assert!((24.0 - 2.0 * 6f64.sqrt() * w).abs() < 1e-5);
    }

    #[test]
    fn product_dims_and_boxes() {
        let p = ManifoldSpec::product(vec![
            ManifoldSpec::sphere(2, 1.0),
            ManifoldSpec::sphere(2, 2.0),
            ManifoldSpec::circle(1.0),
        ]);
        assert_eq!(p.dim(), 5);
        assert_eq!(p.sample_box()[2], (-2.0, 2.0));
        assert_eq!(p.constant_scalar(), Some(2.5));
        assert!(p.periods().is_none());
        let x = [0.1, 0.2, -0.3, 0.4, 1.0];
        let c = curvature_at(&p, &x, &cfg()).unwrap();
        assert!((c.scalar() - 2.5).abs() < 1e-6);
    }

    #[test]
    fn sphere_charts_agree_on_invariants() {
        let r = 1.5;
        let north = ManifoldSpec::sphere(4, r);
        let south = ManifoldSpec::RoundSphere {
            dim: 4,
            radius: r,
            chart: SphereChart::South,
        };
        let x = [0.9, -0.6, 0.7, 0.8];
        let y = sphere_chart_transition(&x, r).unwrap();
        let a = curvature_at(&north, &x, &cfg()).unwrap();
        let b = curvature_at(&south, &y, &cfg()).unwrap();
        assert!((a.scalar() - b.scalar()).abs() < 1e-6);
        assert!((a.weyl_norm_tensor().unwrap() - b.weyl_norm_tensor().unwrap()).abs() < 1e-6);
    }

    #[test]
    fn domain_and_dimension_errors() {
        let s = ManifoldSpec::sphere(3, 1.0);
        assert!(matches!(s.metric(&[0.0, 0.0]), Err(Error::Dimension(_))));
        assert!(matches!(s.metric(&[f64::NAN, 0.0, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(s.metric(&[1e4, 0.0, 0.0]), Err(Error::Domain(_))));
        let bad = ManifoldSpec::conformal(ManifoldSpec::standard_torus(2), ScalarField::parse("x1 - 1").unwrap());
        assert!(matches!(bad.metric(&[0.5, 0.0]), Err(Error::Domain(_))));
        let p = ChartPoint { coords: vec![0.0; 3], chart: "south".into() };
        assert!(matches!(eval_metric(&s, &p, &cfg()), Err(Error::Domain(_))));
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ManifoldSpec::conformal(
            ManifoldSpec::product(vec![ManifoldSpec::FubiniStudyCp2, ManifoldSpec::circle(1.0)]),
            ScalarField::parse("1 + 0.1*cos(x5)").unwrap(),
        );
        let text = serde_json::to_string(&spec).unwrap();
        let back: ManifoldSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        for entry in ManifoldSpec::catalog() {
            entry.example.validate().unwrap();
        }
    }
}
