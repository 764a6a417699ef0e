//! Conformal-weight −2 functions, the modified scalar curvature
//! `σ(g, f) = s_g − f_g`, conformal rescaling and its transformation law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::manifolds::{
    curvature_at, laplacian, Conformal, CurvatureSample, DiffConfig, ManifoldSpec, MetricSource,
};
use crate::tensor::{end_lambda2_norm, norm, CurvTensor, MetricAtPoint, Tensor};

/// Norm used for `|W|`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeylNormKind {
    /// Frobenius norm of `W` acting on Λ²; half the tensor norm.
    #[default]
    End,
    /// Full index-sum norm.
    Tensor,
}

/// A metric-dependent function `f` with `f_{u²g} = u⁻² f_g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightedFunction {
    /// `f ≡ 0`.
    Zero,
    /// `|T|_g` for a fixed covariant 2-tensor field `T` (chart components).
    TensorNorm { components: Vec<Vec<ScalarField>> },
    /// `c |W_g|_g`.
    WeylNorm {
        c: f64,
        #[serde(default)]
        norm: WeylNormKind,
    },
    /// `|L_h|²_h` of a hypersurface, evaluated on the hypersurface.
    TraceFreeSffNormSq,
}

impl WeightedFunction {
    /// `c|W|` with the End(Λ²) norm.
    pub fn weyl(c: f64) -> Self {
        WeightedFunction::WeylNorm {
            c,
            norm: WeylNormKind::End,
        }
    }

    /// `2√6 |W|_End`.
    pub fn two_sqrt6_weyl() -> Self {
        Self::weyl(2.0 * 6f64.sqrt())
    }

    /// `|T|` with constant components.
    pub fn constant_tensor(components: &[Vec<f64>]) -> Self {
        WeightedFunction::TensorNorm {
            components: components
                .iter()
                .map(|row| row.iter().map(|c| ScalarField::Constant(*c)).collect())
                .collect(),
        }
    }

    pub fn needs_curvature(&self) -> bool {
        matches!(self, WeightedFunction::WeylNorm { .. })
    }

    pub fn needs_hypersurface(&self) -> bool {
        matches!(self, WeightedFunction::TraceFreeSffNormSq)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            WeightedFunction::TensorNorm { components } => {
                if components.len() != dim || components.iter().any(|r| r.len() != dim) {
                    return Err(Error::Configuration(format!(
                        "tensor components must be {dim}x{dim}"
                    )));
                }
                Ok(())
            }
            WeightedFunction::WeylNorm { c, .. } if !(c.is_finite() && *c > 0.0) => Err(
                Error::Configuration(format!("Weyl coefficient must be positive, got {c}")),
            ),
            _ => Ok(()),
        }
    }

    fn tensor_at(components: &[Vec<ScalarField>], x: &[f64]) -> Result<Tensor> {
        let n = components.len();
        let mut data = Vec::with_capacity(n * n);
        for row in components {
            if row.len() != n {
                return Err(Error::Configuration("tensor components must be square".into()));
            }
            for c in row {
                data.push(c.value(x)?);
            }
        }
        Tensor::from_vec(2, n, data)
    }

    /// Pointwise evaluation from the data the kind depends on. `metric` is
    /// the metric `f` refers to (the induced one for hypersurface kinds).
    pub fn evaluate(
        &self,
        x: &[f64],
        metric: &MetricAtPoint,
        weyl: Option<&CurvTensor>,
        trace_free_sff: Option<&Tensor>,
    ) -> Result<f64> {
        match self {
            WeightedFunction::Zero => Ok(0.0),
            WeightedFunction::TensorNorm { components } => {
                if components.len() != metric.dim() {
                    return Err(Error::Configuration(format!(
                        "tensor field is {}-dimensional, metric is {}-dimensional",
                        components.len(),
                        metric.dim()
                    )));
                }
                norm(&Self::tensor_at(components, x)?, metric)
            }
            WeightedFunction::WeylNorm { c, norm: kind } => {
                let w = weyl.ok_or_else(|| {
                    Error::Configuration("Weyl norm needs curvature data".into())
                })?;
                let n = match kind {
                    WeylNormKind::End => end_lambda2_norm(w, metric)?,
                    WeylNormKind::Tensor => norm(w.tensor(), metric)?,
                };
                Ok(c * n)
            }
            WeightedFunction::TraceFreeSffNormSq => {
                let l = trace_free_sff.ok_or_else(|| {
                    Error::Configuration(
                        "|L|^2 needs a hypersurface context (second fundamental form)".into(),
                    )
                })?;
                Ok(norm(l, metric)?.powi(2))
            }
        }
    }
}

/// `f` at a curvature sample; `trace_free_sff` supplies `L` for the
/// hypersurface kind.
pub fn eval_weighted_sample(
    f: &WeightedFunction,
    sample: &CurvatureSample,
    trace_free_sff: Option<&Tensor>,
) -> Result<f64> {
    let weyl = match f {
        WeightedFunction::WeylNorm { .. } => Some(sample.weyl()?),
        _ => None,
    };
    f.evaluate(&sample.point, &sample.metric, weyl, trace_free_sff)
}

/// `f` at a chart point of a catalog manifold.
pub fn eval_weighted(
    f: &WeightedFunction,
    spec: &ManifoldSpec,
    x: &[f64],
    cfg: &DiffConfig,
) -> Result<f64> {
    if f.needs_hypersurface() {
        return Err(Error::Configuration(
            "|L|^2 is defined on a hypersurface; evaluate it through the hypersurface module"
                .into(),
        ));
    }
    if f.needs_curvature() {
        eval_weighted_sample(f, &curvature_at(spec, x, cfg)?, None)
    } else {
        let g = MetricAtPoint::new(spec.metric(x)?)?;
        f.evaluate(x, &g, None, None)
    }
}

/// Relative defect of `f_{u²g} = u⁻² f_g` from the pointwise data, using
/// `W ↦ u²W` and `L ↦ uL` under `g ↦ u²g`.
pub fn weight_identity_residual(
    f: &WeightedFunction,
    x: &[f64],
    metric: &MetricAtPoint,
    weyl: Option<&CurvTensor>,
    trace_free_sff: Option<&Tensor>,
    u: f64,
) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!("conformal factor {u} is not positive")));
    }
    let base = f.evaluate(x, metric, weyl, trace_free_sff)?;
    let g2 = metric.scaled(u * u)?;
    let w2 = weyl.map(|w| w.scale(u * u));
    let l2 = trace_free_sff.map(|l| l.scale(u));
    let scaled = f.evaluate(x, &g2, w2.as_ref(), l2.as_ref())?;
    let expected = base / (u * u);
    Ok((scaled - expected).abs() / expected.abs().max(f64::MIN_POSITIVE))
}

/// `σ(g, f) = s − f` at a chart point.
pub fn sigma<S: MetricSource + ?Sized>(
    src: &S,
    f: &WeightedFunction,
    x: &[f64],
    cfg: &DiffConfig,
) -> Result<f64> {
    if f.needs_hypersurface() {
        return Err(Error::Configuration(
            "sigma with |L|^2 needs a hypersurface context".into(),
        ));
    }
    let sample = curvature_at(src, x, cfg)?;
    Ok(sample.scalar() - eval_weighted_sample(f, &sample, None)?)
}

/// Modified scalar curvature sampled over a point set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModifiedScalarField {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub source: String,
    pub function: WeightedFunction,
}

pub fn sigma_field(
    spec: &ManifoldSpec,
    f: &WeightedFunction,
    points: &[Vec<f64>],
    cfg: &DiffConfig,
) -> Result<ModifiedScalarField> {
    let values = points
        .iter()
        .map(|x| sigma(spec, f, x, cfg))
        .collect::<Result<_>>()?;
    Ok(ModifiedScalarField {
        points: points.to_vec(),
        values,
        source: spec.kind_name().into(),
        function: f.clone(),
    })
}

fn yamabe_dim(m: usize) -> Result<f64> {
    if m < 3 {
        return Err(Error::UnsupportedDimension {
            dim: m,
            reason: "the rescaling u^{4/(m-2)} needs m >= 3".into(),
        });
    }
    Ok(m as f64)
}

/// The deformation `ḡ = u^{4/(m−2)} g`, stored as `(u^{2/(m−2)})² g`.
/// `u` must be positive at every point of `check_points`.
pub fn conformal_rescale(
    spec: &ManifoldSpec,
    u: &ScalarField,
    check_points: &[Vec<f64>],
) -> Result<ManifoldSpec> {
    let m = yamabe_dim(spec.dim())?;
    check_positive(u, check_points)?;
    Ok(ManifoldSpec::conformal(spec.clone(), u.powf(2.0 / (m - 2.0))))
}

/// [`conformal_rescale`] for an arbitrary metric source.
pub fn conformal_rescale_source<S: MetricSource>(
    base: S,
    u: &ScalarField,
    check_points: &[Vec<f64>],
) -> Result<Conformal<S>> {
    let m = yamabe_dim(base.dim())?;
    check_positive(u, check_points)?;
    Ok(Conformal {
        base,
        factor: u.powf(2.0 / (m - 2.0)),
    })
}

fn check_positive(u: &ScalarField, points: &[Vec<f64>]) -> Result<()> {
    for x in points {
        let v = u.value(x)?;
        if !(v > 0.0) {
            return Err(Error::Domain(format!(
                "conformal factor u = {v} is not positive at {x:?}"
            )));
        }
    }
    Ok(())
}

/// Both sides of the transformation law at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformationCheck {
    /// `σ(ḡ, f)` from the curvature of `ḡ`.
    pub direct: f64,
    /// `u^{−4/(m−2)} σ(g,f) − 4((m−1)/(m−2)) u^{−(m+2)/(m−2)} Δu`.
    pub formula: f64,
    pub residual: f64,
}

/// Compares `σ(ḡ, f)` computed from scratch with the law
/// `σ(ḡ,f) = u^{−4/(m−2)} σ(g,f) − 4((m−1)/(m−2)) u^{−(m+2)/(m−2)} Δu`,
/// `ḡ = u^{4/(m−2)} g`, `Δ = div grad`.
pub fn transformation_law_check<S: MetricSource>(
    src: S,
    f: &WeightedFunction,
    u: &ScalarField,
    x: &[f64],
    cfg: &DiffConfig,
) -> Result<TransformationCheck> {
    let m = yamabe_dim(src.dim())?;
    let uv = u.value(x)?;
    let sigma_g = sigma(&src, f, x, cfg)?;
    let lap = laplacian(&src, &|y: &[f64]| u.value(y), x, cfg)?;
    let formula = uv.powf(-4.0 / (m - 2.0)) * sigma_g
        - 4.0 * (m - 1.0) / (m - 2.0) * uv.powf(-(m + 2.0) / (m - 2.0)) * lap;
    let bar = conformal_rescale_source(src, u, &[x.to_vec()])?;
    let direct = sigma(&bar, f, x, cfg)?;
    Ok(TransformationCheck {
        direct,
        formula,
        residual: (direct - formula).abs(),
    })
}
