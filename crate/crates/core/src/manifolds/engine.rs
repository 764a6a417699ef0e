//! Christoffel symbols and Riemann curvature from metric jets.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::field::central4;
use crate::tensor::{
    decompose_curvature, end_lambda2_norm, norm, ricci_parts, CurvDecomp, CurvTensor,
    MetricAtPoint, RicciParts, Tensor,
};

/// Step selection for the differentiation engine.
///
/// Second derivatives are central differences (4th order) of first
/// derivatives. First derivatives are analytic where a chart supplies them,
/// otherwise 4th-order differences of metric values with the coarser
/// fallback step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiffConfig {
    /// Overrides both steps when set.
    pub step: Option<f64>,
}

impl DiffConfig {
    pub fn with_step(step: f64) -> Self {
        DiffConfig { step: Some(step) }
    }

    pub fn second_step(&self, scale: f64) -> f64 {
        self.step.unwrap_or(1e-4 * scale)
    }

    pub fn first_step(&self, scale: f64) -> f64 {
        self.step.unwrap_or(1e-3 * scale)
    }
}

/// Metric components and their first two coordinate derivatives.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    /// `dg[k] = ∂_k g`.
    pub dg: Vec<DMatrix<f64>>,
    /// `ddg[k][l] = ∂_k ∂_l g`.
    pub ddg: Vec<Vec<DMatrix<f64>>>,
}

fn flatten(ms: &[DMatrix<f64>]) -> Vec<f64> {
    ms.iter().flat_map(|m| m.iter().copied()).collect()
}

fn unflatten(v: &[f64], n: usize) -> Vec<DMatrix<f64>> {
    v.chunks(n * n)
        .map(|c| DMatrix::from_column_slice(n, n, c))
        .collect()
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Anything that yields chart components of a Riemannian metric.
pub trait MetricSource {
    fn dim(&self) -> usize;

    /// Characteristic coordinate length used to scale difference steps.
    fn chart_scale(&self) -> f64 {
        1.0
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>>;

    /// `∂_k g` for every k; finite differences unless overridden.
    fn metric_first(&self, x: &[f64], cfg: &DiffConfig) -> Result<Vec<DMatrix<f64>>> {
        let n = self.dim();
        let h = cfg.first_step(self.chart_scale());
        (0..n)
            .map(|k| {
                let v = central4(|y| Ok(self.metric(y)?.iter().copied().collect()), x, k, h)?;
                Ok(symmetrize(&DMatrix::from_column_slice(n, n, &v)))
            })
            .collect()
    }

    fn jet(&self, x: &[f64], cfg: &DiffConfig) -> Result<MetricJet> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, chart is {n}-dimensional",
                x.len()
            )));
        }
        let g = self.metric(x)?;
        let dg = self.metric_first(x, cfg)?;
        let h = cfg.second_step(self.chart_scale());
        let mut cols = Vec::with_capacity(n);
        for l in 0..n {
            let d = central4(|y| Ok(flatten(&self.metric_first(y, cfg)?)), x, l, h)?;
            cols.push(unflatten(&d, n));
        }
        let ddg = (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| symmetrize(&((&cols[l][k] + &cols[k][l]) * 0.5)))
                    .collect()
            })
            .collect();
        Ok(MetricJet { g, dg, ddg })
    }
}

/// Christoffel symbols of the second kind, `gamma[i][j][k] = Γ^i_jk`,
/// stored flat as `i*n*n + j*n + k`.
pub fn christoffel(g: &MetricAtPoint, dg: &[DMatrix<f64>]) -> Vec<f64> {
    let n = g.dim();
    let first = christoffel_first(dg);
    let inv = g.inverse();
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[(i * n + j) * n + k] = (0..n).map(|l| inv[(i, l)] * first[(l * n + j) * n + k]).sum();
            }
        }
    }
    out
}

/// `Γ_{l,jk} = ½(∂_j g_lk + ∂_k g_lj − ∂_l g_jk)`.
fn christoffel_first(dg: &[DMatrix<f64>]) -> Vec<f64> {
    let n = dg.len();
    let mut out = vec![0.0; n * n * n];
    for l in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[(l * n + j) * n + k] = 0.5 * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)]);
            }
        }
    }
    out
}

/// `R_abcd` with `R_abab` the sectional curvature of the (a,b) plane for an
/// orthonormal pair, and Ricci the contraction on slots 1 and 3.
pub fn riemann_from_jet(jet: &MetricJet, g: &MetricAtPoint) -> Result<CurvTensor> {
    let n = g.dim();
    let first = christoffel_first(&jet.dg);
    let second = christoffel(g, &jet.dg);
    let c1 = |l: usize, j: usize, k: usize| first[(l * n + j) * n + k];
    let c2 = |i: usize, j: usize, k: usize| second[(i * n + j) * n + k];
    let d2 = |k: usize, l: usize, i: usize, j: usize| jet.ddg[k][l][(i, j)];
    let t = Tensor::from_fn(4, n, |ix| {
        let (a, b, c, d) = (ix[0], ix[1], ix[2], ix[3]);
        let mut r = 0.5 * (d2(b, c, a, d) + d2(a, d, b, c) - d2(a, c, b, d) - d2(b, d, a, c));
        for f in 0..n {
            r += c1(f, b, c) * c2(f, a, d) - c1(f, b, d) * c2(f, a, c);
        }
        r
    });
    CurvTensor::new(t)
}

/// Curvature data at one chart point.
#[derive(Clone, Debug)]
pub struct CurvatureSample {
    pub point: Vec<f64>,
    pub metric: MetricAtPoint,
    /// `Γ^i_jk`, flat as in [`christoffel`].
    pub christoffel: Vec<f64>,
    pub riemann: CurvTensor,
    pub ricci: RicciParts,
    /// Present for dimension >= 3.
    pub decomp: Option<CurvDecomp>,
}

impl CurvatureSample {
    pub fn scalar(&self) -> f64 {
        self.ricci.scalar
    }

    pub fn weyl(&self) -> Result<&CurvTensor> {
        self.decomp
            .as_ref()
            .map(|d| &d.weyl)
            .ok_or_else(|| Error::UnsupportedDimension {
                dim: self.metric.dim(),
                reason: "Weyl tensor needs dimension >= 3".into(),
            })
    }

    pub fn weyl_norm_tensor(&self) -> Result<f64> {
        norm(self.weyl()?.tensor(), &self.metric)
    }

    pub fn weyl_norm_end(&self) -> Result<f64> {
        end_lambda2_norm(self.weyl()?, &self.metric)
    }

    pub fn traceless_ricci_norm(&self) -> Result<f64> {
        norm(&self.ricci.traceless, &self.metric)
    }

    pub fn gamma(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.metric.dim();
        self.christoffel[(i * n + j) * n + k]
    }
}

pub fn curvature_at<S: MetricSource + ?Sized>(
    src: &S,
    x: &[f64],
    cfg: &DiffConfig,
) -> Result<CurvatureSample> {
    let jet = src.jet(x, cfg)?;
    let metric = MetricAtPoint::new(jet.g.clone())?;
    let christoffel = christoffel(&metric, &jet.dg);
    let riemann = riemann_from_jet(&jet, &metric)?;
    let ricci = ricci_parts(&riemann, &metric)?;
    let decomp = if metric.dim() >= 3 {
        Some(decompose_curvature(&riemann, &metric)?)
    } else {
        None
    };
    Ok(CurvatureSample {
        point: x.to_vec(),
        metric,
        christoffel,
        riemann,
        ricci,
        decomp,
    })
}

/// Geometer's Laplacian `div grad u = g^ij (∂_i∂_j u − Γ^k_ij ∂_k u)` of a
/// field sampled through `value`, differentiated with the engine's steps.
pub fn laplacian<S, F>(src: &S, field: &F, x: &[f64], cfg: &DiffConfig) -> Result<f64>
where
    S: MetricSource + ?Sized,
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = src.dim();
    let g = MetricAtPoint::new(src.metric(x)?)?;
    let dg = src.metric_first(x, cfg)?;
    let gamma = christoffel(&g, &dg);
    let h = cfg.second_step(src.chart_scale());
    let grad = |y: &[f64]| -> Result<Vec<f64>> {
        (0..n)
            .map(|k| Ok(central4(|z| Ok(vec![field(z)?]), y, k, h)?[0]))
            .collect()
    };
    let du = grad(x)?;
    let mut hess = DMatrix::zeros(n, n);
    for l in 0..n {
        let col = central4(grad, x, l, h)?;
        for k in 0..n {
            hess[(k, l)] = col[k];
        }
    }
    let hess = symmetrize(&hess);
    let inv = g.inverse();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut t = hess[(i, j)];
            for k in 0..n {
                t -= gamma[(k * n + i) * n + j] * du[k];
            }
            acc += inv[(i, j)] * t;
        }
    }
    Ok(acc)
}
