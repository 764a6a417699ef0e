//! The dichotomy pipeline: hypotheses, stability, principal eigenpair, and
//! classification into the rescaling case or the rigid case.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::eigen::{conformal_coefficient, jacobi_stability, principal_eigenpair, SpectralResult};
use super::grid::{Laplacian, PeriodicGrid};
use crate::conformal::{WeightedFunction, WeylNormKind};
use crate::error::{Error, Result};
use crate::field::{ScalarField, TrigInterpolant};
use crate::hypersurface::{fundamental_forms, induced_data, HypersurfaceSpec, TOTALLY_GEODESIC_TOL};
use crate::manifolds::{
    curvature_at, hypothesis_scan, sample_points, sample_unit_cube, Conformal, CurvatureSample,
    DiffConfig, MetricSource, ScanReport,
};
use crate::tensor::{end_lambda2_norm, norm, MetricAtPoint, Tensor};

/// Which dichotomy is run: `s ≥ |T|` with a stable minimal hypersurface,
/// or `s ≥ c|W|` with a stable totally geodesic one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremMode {
    Theorem1,
    Theorem2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: TheoremMode,
    /// Grid resolution on Σ; even and at least 16 per axis so that the
    /// half-resolution comparison grid is valid.
    pub resolution: Vec<usize>,
    pub scan_samples: usize,
    pub verification_samples: usize,
    pub seed: u64,
    /// Tolerance for the pointwise hypotheses and measured properties.
    pub hypothesis_tol: f64,
    /// Replaces `σ(g̃, f)` by this field; `f_g̃ := s_g̃ − σ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_injection: Option<ScalarField>,
    #[serde(skip)]
    pub diff: DiffConfig,
}

impl PipelineConfig {
    pub fn new(mode: TheoremMode, resolution: Vec<usize>) -> Self {
        PipelineConfig {
            mode,
            resolution,
            scan_samples: 200,
            verification_samples: 64,
            seed: 0,
            hypothesis_tol: 1e-8,
            sigma_injection: None,
            diff: DiffConfig::default(),
        }
    }
}

/// Why the pipeline could not proceed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum ViolationReason {
    /// `s − f < −tol` at an ambient sample.
    ScalarBound { witness: Vec<f64>, margin: f64 },
    /// Jacobi operator has a negative principal eigenvalue.
    Unstable { mu: f64, witness: Vec<f64> },
    NotMinimal { max_h: f64, witness: Vec<f64> },
    NotTotallyGeodesic { max_b: f64, witness: Vec<f64> },
}

impl ViolationReason {
    pub fn witness(&self) -> &[f64] {
        match self {
            ViolationReason::ScalarBound { witness, .. }
            | ViolationReason::Unstable { witness, .. }
            | ViolationReason::NotMinimal { witness, .. }
            | ViolationReason::NotTotallyGeodesic { witness, .. } => witness,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum TheoremCase {
    HypothesisViolated(ViolationReason),
    /// `μ > tol_λ`: the metric `u^{4/(m−2)} g̃` has `σ̄ > 0`.
    CaseI {
        /// Node values of `u` on the Σ grid.
        factor_nodes: Vec<f64>,
        /// `ḡ = u^exponent g̃`.
        exponent: f64,
        /// `min σ̄` over the verification samples, recomputed from the
        /// curvature of the rescaled metric.
        min_sigma_bar: f64,
        witness: Vec<f64>,
    },
    /// `|μ| ≤ tol_λ`: rigidity residuals, by name.
    #[serde(rename = "case_ii")]
    CaseII { residuals: Vec<(String, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremOutcome {
    pub mode: TheoremMode,
    pub case: TheoremCase,
    pub scan: Option<ScanReport>,
    pub jacobi_mu: Option<f64>,
    pub mu: Option<f64>,
    pub mu_coarse: Option<f64>,
    pub tol_lambda: Option<f64>,
    pub eigen_residual: Option<f64>,
    pub eigen_iterations: Option<usize>,
}

/// Per-node data on the Σ grid.
#[derive(Clone, Debug)]
pub struct NodeData {
    pub grid: PeriodicGrid,
    /// `Ric(N,N) + |B|²`.
    pub jacobi_potential: Vec<f64>,
    pub sigma: Vec<f64>,
    pub induced_scalar: Vec<f64>,
    pub ambient_scalar: Vec<f64>,
    pub b_norm_sq: Vec<f64>,
    pub l_norm_sq: Vec<f64>,
    pub mean_curvature: Vec<f64>,
    /// `|T̃|_g̃` or `c|W_g̃|`, the function entering `σ` besides `|L|²`.
    pub restricted_f: Vec<f64>,
    /// `|T|_g` or `c|W_g|` at `i(q)`.
    pub ambient_f: Vec<f64>,
}

fn check_mode(mode: TheoremMode, f: &WeightedFunction, m: usize) -> Result<()> {
    match (mode, f) {
        (TheoremMode::Theorem1, WeightedFunction::Zero | WeightedFunction::TensorNorm { .. }) => {
            if m < 3 {
                return Err(Error::UnsupportedDimension {
                    dim: m,
                    reason: "the rescaling exponent 4/(m-2) needs dim Σ >= 3".into(),
                });
            }
            Ok(())
        }
        (TheoremMode::Theorem2, WeightedFunction::WeylNorm { .. }) => {
            if m < 4 {
                return Err(Error::UnsupportedDimension {
                    dim: m,
                    reason: "the Weyl dichotomy needs dim Σ >= 4".into(),
                });
            }
            Ok(())
        }
        _ => Err(Error::Configuration(format!(
            "{mode:?} does not accept the weighted function {f:?}"
        ))),
    }
}

/// Restricted weighted function on Σ at one point.
fn restricted_value(
    f: &WeightedFunction,
    x_ambient: &[f64],
    tangent: &nalgebra::DMatrix<f64>,
    induced: &MetricAtPoint,
    intrinsic: &CurvatureSample,
) -> Result<f64> {
    match f {
        WeightedFunction::Zero => Ok(0.0),
        WeightedFunction::TensorNorm { components } => {
            let n = components.len();
            let mut data = Vec::with_capacity(n * n);
            for row in components {
                for c in row {
                    data.push(c.value(x_ambient)?);
                }
            }
            let t = Tensor::from_vec(2, n, data)?.pullback(tangent)?;
            norm(&t, induced)
        }
        WeightedFunction::WeylNorm { c, norm: kind } => {
            let w = intrinsic.weyl()?;
            Ok(c * match kind {
                WeylNormKind::End => end_lambda2_norm(w, induced)?,
                WeylNormKind::Tensor => norm(w.tensor(), induced)?,
            })
        }
        WeightedFunction::TraceFreeSffNormSq => Err(Error::Configuration(
            "|L|^2 enters the pipeline automatically; pass |T| or c|W|".into(),
        )),
    }
}

/// Samples every quantity the pipeline needs at the Σ grid nodes.
pub fn node_data(
    h: &HypersurfaceSpec,
    f: &WeightedFunction,
    mode: TheoremMode,
    resolution: &[usize],
    sigma_injection: Option<&ScalarField>,
    cfg: &DiffConfig,
) -> Result<NodeData> {
    h.validate()?;
    let m = h.dim();
    check_mode(mode, f, m)?;
    f.validate(h.ambient_dim())?;
    let periods = h.periods().ok_or_else(|| {
        Error::Configuration(
            "the spectral pipeline needs a hypersurface with a torus chart (slice or graph of a \
             torus-chart ambient)"
                .into(),
        )
    })?;
    if resolution.len() != m {
        return Err(Error::Configuration(format!(
            "resolution has {} axes, hypersurface is {m}-dimensional",
            resolution.len()
        )));
    }
    let induced_src = h.induced_metric();
    let grid = PeriodicGrid::sample(&induced_src, resolution, &periods)?;
    let total = grid.len();
    let mut d = NodeData {
        grid,
        jacobi_potential: Vec::with_capacity(total),
        sigma: Vec::with_capacity(total),
        induced_scalar: Vec::with_capacity(total),
        ambient_scalar: Vec::with_capacity(total),
        b_norm_sq: Vec::with_capacity(total),
        l_norm_sq: Vec::with_capacity(total),
        mean_curvature: Vec::with_capacity(total),
        restricted_f: Vec::with_capacity(total),
        ambient_f: Vec::with_capacity(total),
    };
    for idx in 0..total {
        let q = d.grid.node(idx);
        let data = induced_data(h, &q)?;
        let ff = fundamental_forms(h, &q, cfg)?;
        let ambient = curvature_at(&h.ambient, &data.ambient_point, cfg)?;
        let intrinsic = curvature_at(&induced_src, &q, cfg)?;
        let nn: f64 = (0..h.ambient_dim())
            .flat_map(|i| (0..h.ambient_dim()).map(move |j| (i, j)))
            .map(|(i, j)| ambient.ricci.ricci.get(&[i, j]) * data.normal[i] * data.normal[j])
            .sum();
        let b2 = norm(&ff.b, &ff.induced)?.powi(2);
        let l2 = norm(&ff.l, &ff.induced)?.powi(2);
        let rf = restricted_value(f, &data.ambient_point, &data.tangent, &ff.induced, &intrinsic)?;
        let af = crate::conformal::eval_weighted_sample(f, &ambient, None)?;
        let sigma = match sigma_injection {
            Some(s) => s.value(&q)?,
            None => match mode {
                TheoremMode::Theorem1 => intrinsic.scalar() - rf - l2,
                TheoremMode::Theorem2 => intrinsic.scalar() - rf,
            },
        };
        d.jacobi_potential.push(nn + b2);
        d.sigma.push(sigma);
        d.induced_scalar.push(intrinsic.scalar());
        d.ambient_scalar.push(ambient.scalar());
        d.b_norm_sq.push(b2);
        d.l_norm_sq.push(l2);
        d.mean_curvature.push(ff.h);
        d.restricted_f.push(rf);
        d.ambient_f.push(af);
    }
    Ok(d)
}

fn argmax(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if *v > best.1 { (i, *v) } else { best })
}

/// `max(1e−8, 10·|μ_N − μ_{N/2}|/3)`: the two-grid difference over-estimates
/// the fine-grid error of a second-order scheme by a factor of three.
pub fn lambda_tolerance(mu_fine: f64, mu_coarse: f64) -> f64 {
    (10.0 * (mu_fine - mu_coarse).abs() / 3.0).max(1e-8)
}

/// Runs hypotheses, stability, eigenpair and classification.
pub fn theorem_pipeline(
    h: &HypersurfaceSpec,
    f: &WeightedFunction,
    cfg: &PipelineConfig,
) -> Result<TheoremOutcome> {
    if cfg.resolution.iter().any(|r| *r < 16 || r % 2 != 0) {
        return Err(Error::Configuration(
            "pipeline resolution must be even and >= 16 per axis".into(),
        ));
    }
    let m = h.dim();
    check_mode(cfg.mode, f, m)?;
    let mut outcome = TheoremOutcome {
        mode: cfg.mode,
        case: TheoremCase::CaseII {
            residuals: Vec::new(),
        },
        scan: None,
        jacobi_mu: None,
        mu: None,
        mu_coarse: None,
        tol_lambda: None,
        eigen_residual: None,
        eigen_iterations: None,
    };

    let ambient_points = sample_points(&h.ambient, cfg.scan_samples, cfg.seed)?;
    let scan = hypothesis_scan(&h.ambient, f, &ambient_points, cfg.hypothesis_tol, &cfg.diff)?;
    outcome.scan = Some(scan.clone());
    if !scan.holds() {
        outcome.case = TheoremCase::HypothesisViolated(ViolationReason::ScalarBound {
            witness: scan.argmin.clone().unwrap_or_default(),
            margin: scan.min_margin,
        });
        return Ok(outcome);
    }

    let data = node_data(h, f, cfg.mode, &cfg.resolution, cfg.sigma_injection.as_ref(), &cfg.diff)?;
    let lap = Laplacian::build(&data.grid)?;

    let (i_h, max_h) = argmax(&data.mean_curvature.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let (i_b, max_b2) = argmax(&data.b_norm_sq);
    match cfg.mode {
        TheoremMode::Theorem1 if max_h > cfg.hypothesis_tol => {
            outcome.case = TheoremCase::HypothesisViolated(ViolationReason::NotMinimal {
                max_h,
                witness: data.grid.node(i_h),
            });
            return Ok(outcome);
        }
        TheoremMode::Theorem2 if max_b2.sqrt() > TOTALLY_GEODESIC_TOL => {
            outcome.case = TheoremCase::HypothesisViolated(ViolationReason::NotTotallyGeodesic {
                max_b: max_b2.sqrt(),
                witness: data.grid.node(i_b),
            });
            return Ok(outcome);
        }
        _ => {}
    }

    let jac = jacobi_stability(&lap, &data.jacobi_potential, cfg.hypothesis_tol)?;
    outcome.jacobi_mu = Some(jac.mu);
    if !jac.stable {
        let (i_q, _) = argmax(&data.jacobi_potential);
        outcome.case = TheoremCase::HypothesisViolated(ViolationReason::Unstable {
            mu: jac.mu,
            witness: data.grid.node(i_q),
        });
        return Ok(outcome);
    }

    let fine = principal_eigenpair(&lap, &data.sigma)?;
    let coarse_grid = data.grid.coarsen()?;
    let coarse_sigma: Vec<f64> = (0..coarse_grid.len())
        .map(|i| data.sigma[data.grid.fine_index(coarse_grid.resolution(), i)])
        .collect();
    let coarse = principal_eigenpair(&Laplacian::build(&coarse_grid)?, &coarse_sigma)?;
    let tol = lambda_tolerance(fine.mu, coarse.mu);
    outcome.mu = Some(fine.mu);
    outcome.mu_coarse = Some(coarse.mu);
    outcome.tol_lambda = Some(tol);
    outcome.eigen_residual = Some(fine.residual);
    outcome.eigen_iterations = Some(fine.iterations);

    if fine.mu < -tol {
        return Err(Error::InternalConsistency(format!(
            "hypotheses hold but the principal eigenvalue is negative: mu = {:e}, \
             coarse mu = {:e}, tol = {tol:e}, jacobi mu = {:e}, min scan margin = {:e}",
            fine.mu, coarse.mu, jac.mu, scan.min_margin
        )));
    }
    outcome.case = if fine.mu > tol {
        case_one(h, f, cfg, &data, &fine)?
    } else {
        case_two(cfg, &data)
    };
    Ok(outcome)
}

fn case_two(cfg: &PipelineConfig, d: &NodeData) -> TheoremCase {
    let max_of = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
    let n = d.grid.len();
    let mut residuals = Vec::new();
    if cfg.sigma_injection.is_some() {
        residuals.push(("max |sigma|".into(), max_of(d.sigma.iter().map(|v| v.abs()).collect())));
    }
    match cfg.mode {
        TheoremMode::Theorem1 => {
            residuals.push((
                "max |s_induced - f_restricted - |B|^2|".into(),
                max_of((0..n)
                    .map(|i| (d.induced_scalar[i] - d.restricted_f[i] - d.b_norm_sq[i]).abs())
                    .collect()),
            ));
            residuals.push((
                "max |s_ambient - s_induced + |B|^2|".into(),
                max_of((0..n)
                    .map(|i| (d.ambient_scalar[i] - d.induced_scalar[i] + d.b_norm_sq[i]).abs())
                    .collect()),
            ));
            residuals.push((
                "max |f_ambient - f_restricted|".into(),
                max_of((0..n).map(|i| (d.ambient_f[i] - d.restricted_f[i]).abs()).collect()),
            ));
        }
        TheoremMode::Theorem2 => {
            residuals.push((
                "max |s_induced - c|W_induced||".into(),
                max_of((0..n).map(|i| (d.induced_scalar[i] - d.restricted_f[i]).abs()).collect()),
            ));
        }
    }
    TheoremCase::CaseII { residuals }
}

fn case_one(
    h: &HypersurfaceSpec,
    f: &WeightedFunction,
    cfg: &PipelineConfig,
    d: &NodeData,
    eig: &SpectralResult,
) -> Result<TheoremCase> {
    let m = h.dim();
    conformal_coefficient(m)?;
    let exponent = 4.0 / (m as f64 - 2.0);
    // Normalised so that max u = 1; the sign of σ̄ is scale-invariant.
    let peak = eig.u.iter().copied().fold(0.0, f64::max);
    let nodes: Vec<f64> = eig.u.iter().map(|v| v / peak).collect();
    let interp = Arc::new(TrigInterpolant::new(
        d.grid.resolution().to_vec(),
        d.grid.periods().to_vec(),
        nodes.clone(),
    )?);
    let u = ScalarField::Grid {
        interpolant: interp,
        exponent: 1.0,
    };
    let bar = Conformal {
        base: h.induced_metric(),
        factor: u.powf(exponent / 2.0),
    };
    let induced_src = h.induced_metric();
    let bx = h.sample_box();
    let points: Vec<Vec<f64>> = sample_unit_cube(cfg.verification_samples, m, cfg.seed ^ 0x5eed)?
        .into_iter()
        .map(|t| t.iter().zip(&bx).map(|(t, (lo, hi))| lo + t * (hi - lo)).collect())
        .collect();
    let mut min_sigma = f64::INFINITY;
    let mut witness = Vec::new();
    for q in &points {
        let phi = u.value(q)?.powf(exponent);
        let cb = curvature_at(&bar, q, &cfg.diff)?;
        let f_bar = match &cfg.sigma_injection {
            Some(s) => {
                let s_tilde = curvature_at(&induced_src, q, &cfg.diff)?.scalar();
                (s_tilde - s.value(q)?) / phi
            }
            None => {
                let data = induced_data(h, q)?;
                let rf = restricted_value(f, &data.ambient_point, &data.tangent, &cb.metric, &cb)?;
                match cfg.mode {
                    TheoremMode::Theorem1 => {
                        let ff = fundamental_forms(h, q, &cfg.diff)?;
                        rf + norm(&ff.l, &ff.induced)?.powi(2) / phi
                    }
                    TheoremMode::Theorem2 => rf,
                }
            }
        };
        let sigma_bar = cb.scalar() - f_bar;
        if sigma_bar < min_sigma {
            min_sigma = sigma_bar;
            witness = q.clone();
        }
    }
    if !(min_sigma > 0.0) {
        return Err(Error::InternalConsistency(format!(
            "rescaled metric has sigma = {min_sigma:e} at {witness:?} although mu = {:e} > 0",
            eig.mu
        )));
    }
    Ok(TheoremCase::CaseI {
        factor_nodes: nodes,
        exponent,
        min_sigma_bar: min_sigma,
        witness,
    })
}

/// Conformal factor of a case-I outcome as a field on Σ.
pub fn case_one_metric<'a>(
    h: &'a HypersurfaceSpec,
    grid: &PeriodicGrid,
    factor_nodes: &[f64],
    exponent: f64,
) -> Result<impl MetricSource + 'a> {
    let interp = TrigInterpolant::new(grid.resolution().to_vec(), grid.periods().to_vec(), factor_nodes.to_vec())?;
    Ok(Conformal {
        base: h.induced_metric(),
        factor: ScalarField::Grid {
            interpolant: Arc::new(interp),
            exponent: exponent / 2.0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypersurface::Embedding;
    use crate::manifolds::ManifoldSpec;

    fn flat_slice() -> HypersurfaceSpec {
        HypersurfaceSpec::last_axis_slice(ManifoldSpec::standard_torus(4), 0.0)
    }

    #[test]
    fn flat_slice_is_rigid() {
        let mut cfg = PipelineConfig::new(TheoremMode::Theorem1, vec![16; 3]);
        cfg.scan_samples = 20;
        let out = theorem_pipeline(&flat_slice(), &WeightedFunction::Zero, &cfg).unwrap();
        match out.case {
            TheoremCase::CaseII { residuals } => {
                assert!(residuals.iter().all(|(_, r)| *r <= 1e-8), "{residuals:?}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tensor_bound_violation_is_reported() {
        let mut cfg = PipelineConfig::new(TheoremMode::Theorem1, vec![16; 3]);
        cfg.scan_samples = 20;
        let mut c = vec![vec![0.0; 4]; 4];
        c[0][0] = 1.0;
        let out =
            theorem_pipeline(&flat_slice(), &WeightedFunction::constant_tensor(&c), &cfg).unwrap();
        match out.case {
            TheoremCase::HypothesisViolated(ViolationReason::ScalarBound { margin, witness }) => {
                assert!((margin + 1.0).abs() < 1e-12);
                assert_eq!(witness.len(), 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn injected_positive_sigma_gives_case_one() {
        let mut cfg = PipelineConfig::new(TheoremMode::Theorem1, vec![16; 3]);
        cfg.scan_samples = 10;
        cfg.verification_samples = 16;
        cfg.sigma_injection = Some(ScalarField::parse("1 + 0.5*sin(x1)*cos(x2)").unwrap());
        let out = theorem_pipeline(&flat_slice(), &WeightedFunction::Zero, &cfg).unwrap();
        match out.case {
            TheoremCase::CaseI { min_sigma_bar, .. } => assert!(min_sigma_bar > 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mode_and_domain_errors() {
        let cfg = PipelineConfig::new(TheoremMode::Theorem2, vec![16; 3]);
        assert!(matches!(
            theorem_pipeline(&flat_slice(), &WeightedFunction::Zero, &cfg),
            Err(Error::Configuration(_))
        ));
        let sphere = HypersurfaceSpec::new(
            ManifoldSpec::torus(&[100.0; 4]),
            Embedding::StereographicSphere { radius: 1.0 },
        );
        let cfg = PipelineConfig::new(TheoremMode::Theorem1, vec![16; 3]);
        assert!(matches!(
            node_data(&sphere, &WeightedFunction::Zero, cfg.mode, &cfg.resolution, None, &cfg.diff),
            Err(Error::Configuration(_))
        ));
    }
}
