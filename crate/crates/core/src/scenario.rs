//! Scenario configuration and the check orchestrator.
//!
//! A scenario is one JSON document: a catalog manifold, an optional
//! hypersurface in it, a weighted function, and a list of named checks.
//! Scalar fields are DSL strings; anything that needs their derivatives goes
//! through the finite-difference rules of the manifolds engine.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::conformal::{eval_weighted_sample, transformation_law_check, WeightedFunction};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::fourdim::{corollary1_classify, kahler_relation_check, Corollary1Branch, Corollary1Verdict, Orientation};
use crate::hypersurface::{
    certify_totally_geodesic, gauss_identity_check, max_second_fundamental_form,
    product_remark_check, pullback_compare, sample_row, Embedding, HypersurfaceSpec, NormalSign,
    PullbackTarget,
};
use crate::manifolds::{curvature_at, sample_points, sample_unit_cube, DiffConfig, ManifoldSpec, MetricSource};
use crate::report::{read_text, CheckResult, Metadata, Report, Status, SCHEMA};
use crate::spectral::{
    jacobi_stability, node_data, theorem_pipeline, Laplacian, PipelineConfig, TheoremCase,
    TheoremMode, ViolationReason, CONVENTIONS,
};

fn default_samples() -> usize {
    100
}

fn is_zero_function(f: &WeightedFunction) -> bool {
    *f == WeightedFunction::Zero
}

fn zero_function() -> WeightedFunction {
    WeightedFunction::Zero
}

/// Hypersurface of the scenario manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioHypersurface {
    pub embedding: Embedding,
    #[serde(default)]
    pub normal: NormalSign,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Per-sample curvature table of the manifold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_csv: Option<PathBuf>,
    /// Per-sample hypersurface table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypersurface_csv: Option<PathBuf>,
    /// Principal eigenfunction of the conformal operator on the Σ grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigen_csv: Option<PathBuf>,
}

impl Outputs {
    fn is_empty(&self) -> bool {
        *self == Outputs::default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum CheckSpec {
    /// `s − f ≥ −tol` on manifold samples.
    Hypothesis { tolerance: f64 },
    /// `max |s − 2√6|W|_End| / |s|` (absolute where `s = 0`).
    #[serde(rename = "s_equals_2sqrt6_w", alias = "s_equals_2sqrt6_W")]
    SEquals2Sqrt6W { tolerance: f64 },
    /// `max |W|` (tensor norm).
    ConformallyFlat { tolerance: f64 },
    /// `max |z|`.
    Einstein { tolerance: f64 },
    /// `σ(u^{4/(m−2)} g, f)` recomputed vs the transformation law.
    TransformationLaw { tolerance: f64, u: ScalarField },
    GaussIdentity { tolerance: f64 },
    /// `max |B|` over hypersurface samples.
    TotallyGeodesic { tolerance: f64 },
    /// `|W̃|² − |W_Σ|²` against the curvature-difference terms.
    Pythagoras { tolerance: f64 },
    /// Einstein iff `|W_Σ| = |W_{Σ×S¹}|`, on `Σ` (or the non-circle
    /// factors of a product ending in a circle).
    ProductRemark {
        tolerance: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect_equality: Option<bool>,
    },
    /// Principal eigenvalue of the Jacobi operator on the Σ grid is `≥ −tol`.
    JacobiStability { tolerance: f64 },
    Theorem1 {
        tolerance: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma_injection: Option<ScalarField>,
    },
    Theorem2 {
        tolerance: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma_injection: Option<ScalarField>,
    },
    KahlerRelation {
        tolerance: f64,
        #[serde(default)]
        orientation: Orientation,
    },
    Corollary1 {
        tolerance: f64,
        #[serde(default)]
        orientation: Orientation,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b2: Option<u32>,
    },
}

impl CheckSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            CheckSpec::Hypothesis { .. } => "hypothesis",
            CheckSpec::SEquals2Sqrt6W { .. } => "s_equals_2sqrt6_w",
            CheckSpec::ConformallyFlat { .. } => "conformally_flat",
            CheckSpec::Einstein { .. } => "einstein",
            CheckSpec::TransformationLaw { .. } => "transformation_law",
            CheckSpec::GaussIdentity { .. } => "gauss_identity",
            CheckSpec::TotallyGeodesic { .. } => "totally_geodesic",
            CheckSpec::Pythagoras { .. } => "pythagoras",
            CheckSpec::ProductRemark { .. } => "product_remark",
            CheckSpec::JacobiStability { .. } => "jacobi_stability",
            CheckSpec::Theorem1 { .. } => "theorem1",
            CheckSpec::Theorem2 { .. } => "theorem2",
            CheckSpec::KahlerRelation { .. } => "kahler_relation",
            CheckSpec::Corollary1 { .. } => "corollary1",
        }
    }

    pub fn tolerance(&self) -> f64 {
        match self {
            CheckSpec::Hypothesis { tolerance }
            | CheckSpec::SEquals2Sqrt6W { tolerance }
            | CheckSpec::ConformallyFlat { tolerance }
            | CheckSpec::Einstein { tolerance }
            | CheckSpec::TransformationLaw { tolerance, .. }
            | CheckSpec::GaussIdentity { tolerance }
            | CheckSpec::TotallyGeodesic { tolerance }
            | CheckSpec::Pythagoras { tolerance }
            | CheckSpec::ProductRemark { tolerance, .. }
            | CheckSpec::JacobiStability { tolerance }
            | CheckSpec::Theorem1 { tolerance, .. }
            | CheckSpec::Theorem2 { tolerance, .. }
            | CheckSpec::KahlerRelation { tolerance, .. }
            | CheckSpec::Corollary1 { tolerance, .. } => *tolerance,
        }
    }

    pub fn set_tolerance(&mut self, value: f64) {
        match self {
            CheckSpec::Hypothesis { tolerance }
            | CheckSpec::SEquals2Sqrt6W { tolerance }
            | CheckSpec::ConformallyFlat { tolerance }
            | CheckSpec::Einstein { tolerance }
            | CheckSpec::TransformationLaw { tolerance, .. }
            | CheckSpec::GaussIdentity { tolerance }
            | CheckSpec::TotallyGeodesic { tolerance }
            | CheckSpec::Pythagoras { tolerance }
            | CheckSpec::ProductRemark { tolerance, .. }
            | CheckSpec::JacobiStability { tolerance }
            | CheckSpec::Theorem1 { tolerance, .. }
            | CheckSpec::Theorem2 { tolerance, .. }
            | CheckSpec::KahlerRelation { tolerance, .. }
            | CheckSpec::Corollary1 { tolerance, .. } => *tolerance = value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub spec: CheckSpec,
}

impl CheckEntry {
    pub fn new(spec: CheckSpec) -> Self {
        CheckEntry { name: None, spec }
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.spec.kind().to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub manifold: ManifoldSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypersurface: Option<ScenarioHypersurface>,
    #[serde(default = "zero_function", skip_serializing_if = "is_zero_function")]
    pub weighted_function: WeightedFunction,
    #[serde(default)]
    pub checks: Vec<CheckEntry>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Σ grid for spectral checks; defaults to 16 per axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Vec<usize>>,
    /// Overrides the engine's difference step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diff_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Outputs::is_empty")]
    pub outputs: Outputs,
}

impl Scenario {
    pub fn new(manifold: ManifoldSpec) -> Self {
        Scenario {
            name: String::new(),
            manifold,
            hypersurface: None,
            weighted_function: WeightedFunction::Zero,
            checks: Vec::new(),
            samples: default_samples(),
            seed: 0,
            resolution: None,
            diff_step: None,
            outputs: Outputs::default(),
        }
    }

    pub fn with_check(mut self, spec: CheckSpec) -> Self {
        self.checks.push(CheckEntry::new(spec));
        self
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        Scenario::from_json(&read_text(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Scenario-wide validation; per-check problems surface as check errors.
    pub fn validate(&self) -> Result<()> {
        self.manifold.validate()?;
        if let Some(h) = self.hypersurface_spec() {
            h.validate()?;
        }
        if !self.weighted_function.needs_hypersurface() {
            self.weighted_function.validate(self.manifold.dim())?;
        }
        if let Some(step) = self.diff_step {
            if !(step > 0.0) {
                return Err(Error::Configuration("diff_step must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn hypersurface_spec(&self) -> Option<HypersurfaceSpec> {
        self.hypersurface.as_ref().map(|h| HypersurfaceSpec {
            ambient: self.manifold.clone(),
            embedding: h.embedding.clone(),
            normal: h.normal,
        })
    }

    pub fn diff(&self) -> DiffConfig {
        match self.diff_step {
            Some(s) => DiffConfig::with_step(s),
            None => DiffConfig::default(),
        }
    }

    fn require_hypersurface(&self) -> Result<HypersurfaceSpec> {
        self.hypersurface_spec()
            .ok_or_else(|| Error::Configuration("this check needs a hypersurface".into()))
    }

    fn grid_resolution(&self, m: usize) -> Vec<usize> {
        self.resolution.clone().unwrap_or_else(|| vec![16; m])
    }

    pub fn manifold_points(&self) -> Result<Vec<Vec<f64>>> {
        sample_points(&self.manifold, self.samples, self.seed)
    }

    pub fn hypersurface_points(&self, h: &HypersurfaceSpec) -> Result<Vec<Vec<f64>>> {
        let bx = h.sample_box();
        Ok(sample_unit_cube(self.samples, bx.len(), self.seed)?
            .into_iter()
            .map(|t| t.iter().zip(&bx).map(|(t, (lo, hi))| lo + t * (hi - lo)).collect())
            .collect())
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides every check tolerance.
    pub tolerance: Option<f64>,
    /// Runs only checks of these kinds; the rest are reported as skipped.
    pub only: Option<Vec<String>>,
}

/// Runs every check in declared order. Check failures never abort siblings.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<Report> {
    scenario.validate()?;
    let mut scenario = scenario.clone();
    if let Some(t) = opts.tolerance {
        for c in &mut scenario.checks {
            c.spec.set_tolerance(t);
        }
    }
    let mut checks = Vec::with_capacity(scenario.checks.len());
    let mut corollary1 = None;
    for entry in &scenario.checks {
        let name = entry.display_name();
        let tol = entry.spec.tolerance();
        let selected = opts
            .only
            .as_ref()
            .map_or(true, |kinds| kinds.iter().any(|k| k == entry.spec.kind()));
        if !selected {
            checks.push(CheckResult::skipped(name, tol));
            continue;
        }
        let result = if !(tol > 0.0) || !tol.is_finite() {
            Err(Error::Configuration(format!("tolerance must be positive, got {tol}")))
        } else {
            run_check(&scenario, &entry.spec, &name, &mut corollary1)
        };
        checks.push(result.unwrap_or_else(|e| CheckResult::error(name, tol, &e)));
    }
    Ok(Report {
        schema: SCHEMA.into(),
        metadata: Metadata {
            seed: scenario.seed,
            samples: scenario.samples,
            resolution: scenario.resolution.clone(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            conventions: CONVENTIONS.into(),
        },
        scenario,
        checks,
        corollary1,
    })
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

/// Tracks the largest value and where it occurred.
struct Worst {
    value: f64,
    at: Option<Vec<f64>>,
}

impl Worst {
    fn new() -> Self {
        Worst { value: 0.0, at: None }
    }

    fn update(&mut self, value: f64, at: &[f64]) {
        if self.at.is_none() || value > self.value || value.is_nan() {
            self.value = if value.is_nan() { f64::INFINITY } else { value.max(self.value) };
            self.at = Some(at.to_vec());
        }
    }
}

fn run_check(
    s: &Scenario,
    spec: &CheckSpec,
    name: &str,
    corollary1: &mut Option<Corollary1Verdict>,
) -> Result<CheckResult> {
    let cfg = s.diff();
    let tol = spec.tolerance();
    match spec {
        CheckSpec::Hypothesis { .. } => {
            let pts = s.manifold_points()?;
            let scan = crate::manifolds::hypothesis_scan(&s.manifold, &s.weighted_function, &pts, tol, &cfg)?;
            let violation = (-scan.min_margin).max(0.0);
            Ok(CheckResult::measured(name, violation, tol, pts.len(), scan.argmin.clone(), to_value(&scan)))
        }
        CheckSpec::SEquals2Sqrt6W { .. } | CheckSpec::ConformallyFlat { .. } | CheckSpec::Einstein { .. } => {
            let pts = s.manifold_points()?;
            let c = 2.0 * 6f64.sqrt();
            let mut worst = Worst::new();
            let mut min_s = f64::INFINITY;
            let mut max_s = f64::NEG_INFINITY;
            for x in &pts {
                let sample = curvature_at(&s.manifold, x, &cfg)?;
                let sc = sample.scalar();
                min_s = min_s.min(sc);
                max_s = max_s.max(sc);
                let v = match spec {
                    CheckSpec::SEquals2Sqrt6W { .. } => {
                        let d = (sc - c * sample.weyl_norm_end()?).abs();
                        if sc != 0.0 {
                            d / sc.abs()
                        } else {
                            d
                        }
                    }
                    CheckSpec::ConformallyFlat { .. } => sample.weyl_norm_tensor()?,
                    _ => sample.traceless_ricci_norm()?,
                };
                worst.update(v, x);
            }
            Ok(CheckResult::measured(
                name,
                worst.value,
                tol,
                pts.len(),
                worst.at,
                json!({ "min_scalar": min_s, "max_scalar": max_s }),
            ))
        }
        CheckSpec::TransformationLaw { u, .. } => {
            let mut pts = s.manifold_points()?;
            pts.truncate(50);
            let mut worst = Worst::new();
            let mut direct = Vec::new();
            for x in &pts {
                let t = transformation_law_check(&s.manifold, &s.weighted_function, u, x, &cfg)?;
                worst.update(t.residual, x);
                direct.push(t.direct);
            }
            let min_direct = direct.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(CheckResult::measured(
                name,
                worst.value,
                tol,
                pts.len(),
                worst.at,
                json!({ "min_sigma_rescaled": min_direct }),
            ))
        }
        CheckSpec::GaussIdentity { .. } => {
            let h = s.require_hypersurface()?;
            let pts = s.hypersurface_points(&h)?;
            let mut worst = Worst::new();
            for q in &pts {
                worst.update(gauss_identity_check(&h, q, &cfg)?.residual, q);
            }
            Ok(CheckResult::measured(name, worst.value, tol, pts.len(), worst.at, serde_json::Value::Null))
        }
        CheckSpec::TotallyGeodesic { .. } => {
            let h = s.require_hypersurface()?;
            let pts = s.hypersurface_points(&h)?;
            let (max_b, at) = max_second_fundamental_form(&h, &pts, &cfg)?;
            Ok(CheckResult::measured(name, max_b, tol, pts.len(), at, serde_json::Value::Null))
        }
        CheckSpec::Pythagoras { .. } => {
            let h = s.require_hypersurface()?;
            let pts = s.hypersurface_points(&h)?;
            let cert = certify_totally_geodesic(&h, &pts, &cfg)?;
            let mut worst = Worst::new();
            let mut max_gap = 0.0f64;
            for q in &pts {
                let cmp = pullback_compare(&h, q, &PullbackTarget::Weyl, Some(&cert), &cfg)?;
                let p = cmp.pythagoras.ok_or_else(|| {
                    Error::InternalConsistency("certified comparison without Pythagoras terms".into())
                })?;
                max_gap = max_gap.max(p.restricted_weyl - p.intrinsic_weyl);
                worst.update(p.residual, q);
            }
            Ok(CheckResult::measured(
                name,
                worst.value,
                tol,
                pts.len(),
                worst.at,
                json!({ "max_b": cert.max_b(), "max_weyl_sq_gap": max_gap }),
            ))
        }
        CheckSpec::ProductRemark { expect_equality, .. } => {
            let sigma = match &s.manifold {
                ManifoldSpec::Product { factors }
                    if factors.len() >= 2 && matches!(factors.last(), Some(ManifoldSpec::Circle { .. })) =>
                {
                    let rest = &factors[..factors.len() - 1];
                    if rest.len() == 1 {
                        rest[0].clone()
                    } else {
                        ManifoldSpec::product(rest.to_vec())
                    }
                }
                other => other.clone(),
            };
            let pts = sample_points(&sigma, s.samples, s.seed)?;
            let v = product_remark_check(&sigma, &pts, tol, &cfg)?;
            let ok = v.agrees() && expect_equality.map_or(true, |e| e == v.equality);
            Ok(CheckResult {
                name: name.into(),
                status: if ok { Status::Pass } else { Status::Fail },
                max_violation: Some(if ok { 0.0 } else { v.max_weyl_gap.max(v.max_traceless_ricci) }),
                tolerance: tol,
                samples: pts.len(),
                witness: if ok { v.witness.clone() } else { Some(v.witness.clone().unwrap_or_default()) },
                details: to_value(&v),
            })
        }
        CheckSpec::JacobiStability { .. } => {
            let h = s.require_hypersurface()?;
            let res = s.grid_resolution(h.dim());
            let data = node_data(&h, &WeightedFunction::Zero, TheoremMode::Theorem1, &res, None, &cfg)?;
            let lap = Laplacian::build(&data.grid)?;
            let j = jacobi_stability(&lap, &data.jacobi_potential, tol)?;
            // Witness: the node with the most destabilising potential.
            let i_max = (0..data.grid.len())
                .max_by(|a, b| data.jacobi_potential[*a].total_cmp(&data.jacobi_potential[*b]))
                .unwrap_or(0);
            Ok(CheckResult::measured(
                name,
                (-j.mu).max(0.0),
                tol,
                data.grid.len(),
                Some(data.grid.node(i_max)),
                to_value(&j),
            ))
        }
        CheckSpec::Theorem1 { sigma_injection, .. } | CheckSpec::Theorem2 { sigma_injection, .. } => {
            let h = s.require_hypersurface()?;
            let mode = if matches!(spec, CheckSpec::Theorem1 { .. }) {
                TheoremMode::Theorem1
            } else {
                TheoremMode::Theorem2
            };
            let mut pc = PipelineConfig::new(mode, s.grid_resolution(h.dim()));
            pc.scan_samples = s.samples;
            pc.verification_samples = s.samples.min(64);
            pc.seed = s.seed;
            pc.sigma_injection = sigma_injection.clone();
            pc.diff = cfg.clone();
            let out = theorem_pipeline(&h, &s.weighted_function, &pc)?;
            let details = to_value(&out);
            let grid_len = pc.resolution.iter().product::<usize>();
            Ok(match &out.case {
                TheoremCase::CaseII { residuals } => {
                    let worst = residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max);
                    CheckResult::measured(name, worst, tol, grid_len, Some(vec![]), details)
                }
                TheoremCase::CaseI { min_sigma_bar, witness, .. } => CheckResult::measured(
                    name,
                    (-min_sigma_bar).max(0.0),
                    tol,
                    pc.verification_samples,
                    Some(witness.clone()),
                    details,
                ),
                TheoremCase::HypothesisViolated(reason) => {
                    let v = match reason {
                        ViolationReason::ScalarBound { margin, .. } => -margin,
                        ViolationReason::Unstable { mu, .. } => -mu,
                        ViolationReason::NotMinimal { max_h, .. } => *max_h,
                        ViolationReason::NotTotallyGeodesic { max_b, .. } => *max_b,
                    };
                    CheckResult {
                        name: name.into(),
                        status: Status::Fail,
                        max_violation: Some(v),
                        tolerance: tol,
                        samples: grid_len,
                        witness: Some(reason.witness().to_vec()),
                        details,
                    }
                }
            })
        }
        CheckSpec::KahlerRelation { orientation, .. } => {
            let pts = s.manifold_points()?;
            let v = kahler_relation_check(&s.manifold, &pts, tol, *orientation, &cfg)?;
            Ok(CheckResult::measured(name, v.max_deviation, tol, pts.len(), v.witness.clone(), to_value(&v)))
        }
        CheckSpec::Corollary1 { orientation, b2, .. } => {
            let pts = s.manifold_points()?;
            let v = corollary1_classify(&s.manifold, &pts, tol, *orientation, *b2, &cfg)?;
            let (status, violation, witness) = match &v.branch {
                Corollary1Branch::StrictInequalitySomewhere { witness, .. } => {
                    (Status::Pass, 0.0, Some(witness.clone()))
                }
                Corollary1Branch::SelfDualKahler { .. } => {
                    (Status::Pass, v.max_bochner_residual.unwrap_or(0.0), pts.first().cloned())
                }
                Corollary1Branch::Inconsistent { .. } => (
                    Status::Fail,
                    (-v.min_gap).max(v.max_w_minus_end).max(v.max_bochner_residual.unwrap_or(0.0)),
                    Some(pts.first().cloned().unwrap_or_default()),
                ),
            };
            let details = to_value(&v);
            *corollary1 = Some(v);
            Ok(CheckResult {
                name: name.into(),
                status,
                max_violation: Some(violation),
                tolerance: tol,
                samples: pts.len(),
                witness,
                details,
            })
        }
    }
}

/// Header and rows of the per-sample curvature table.
pub fn curvature_table(s: &Scenario) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let cfg = s.diff();
    let n = s.manifold.dim();
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let with_f = !s.weighted_function.needs_hypersurface();
    header.extend(["scalar", "traceless_ricci", "weyl_tensor", "weyl_end"].map(String::from));
    if with_f {
        header.extend(["f", "sigma"].map(String::from));
    }
    let mut rows = Vec::new();
    for x in s.manifold_points()? {
        let sample = curvature_at(&s.manifold, &x, &cfg)?;
        let mut row = x.clone();
        row.push(sample.scalar());
        row.push(sample.traceless_ricci_norm()?);
        let (wt, we) = if n >= 3 {
            (sample.weyl_norm_tensor()?, sample.weyl_norm_end()?)
        } else {
            (0.0, 0.0)
        };
        row.push(wt);
        row.push(we);
        if with_f {
            let f = eval_weighted_sample(&s.weighted_function, &sample, None)?;
            row.push(f);
            row.push(sample.scalar() - f);
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Header and rows of the per-sample hypersurface table.
pub fn hypersurface_table(s: &Scenario) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let cfg = s.diff();
    let h = s.require_hypersurface()?;
    let pts = s.hypersurface_points(&h)?;
    let cert = certify_totally_geodesic(&h, &pts, &cfg).ok();
    let mut header: Vec<String> = (1..=h.dim()).map(|i| format!("q{i}")).collect();
    header.extend(
        ["mean_curvature", "b_norm", "l_norm", "ambient_scalar", "induced_scalar", "gauss_residual", "pythagoras_residual"]
            .map(String::from),
    );
    let mut rows = Vec::new();
    for q in &pts {
        let r = sample_row(&h, q, cert.as_ref(), &cfg)?;
        let mut row = r.q.clone();
        row.extend([
            r.mean_curvature,
            r.b_norm,
            r.l_norm,
            r.ambient_scalar,
            r.induced_scalar,
            r.gauss_residual,
            r.pythagoras.map_or(f64::NAN, |p| p.residual),
        ]);
        rows.push(row);
    }
    Ok((header, rows))
}

/// Principal eigenpair of the conformal operator on the Σ grid, as a table of
/// node coordinates, `σ` and `u`, plus the eigenvalue.
pub fn eigen_table(s: &Scenario, mode: TheoremMode) -> Result<(Vec<String>, Vec<Vec<f64>>, f64)> {
    let cfg = s.diff();
    let h = s.require_hypersurface()?;
    let res = s.grid_resolution(h.dim());
    let data = node_data(&h, &s.weighted_function, mode, &res, None, &cfg)?;
    let lap = Laplacian::build(&data.grid)?;
    let eig = crate::spectral::principal_eigenpair(&lap, &data.sigma)?;
    let mut header: Vec<String> = (1..=h.dim()).map(|i| format!("q{i}")).collect();
    header.extend(["sigma", "u", "jacobi_potential"].map(String::from));
    let rows = (0..data.grid.len())
        .map(|i| {
            let mut r = data.grid.node(i);
            r.extend([data.sigma[i], eig.u[i], data.jacobi_potential[i]]);
            r
        })
        .collect();
    Ok((header, rows, eig.mu))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_scenario_and_defaults() {
        let s = Scenario::from_json(
            r#"{"manifold": {"kind": "flat_torus", "periods": [1, 1, 1]},
                "checks": [{"check": "hypothesis", "tolerance": 1e-8}]}"#,
        )
        .unwrap();
        assert_eq!(s.samples, 100);
        assert_eq!(s.weighted_function, WeightedFunction::Zero);
        let back = Scenario::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let e = Scenario::from_json(r#"{"manifold": {"kind": "klein_bottle"}}"#);
        assert!(matches!(e, Err(Error::Json(_))));
    }

    #[test]
    fn per_check_errors_do_not_abort_siblings() {
        let s = Scenario::new(ManifoldSpec::standard_torus(3))
            .with_check(CheckSpec::GaussIdentity { tolerance: 1e-8 })
            .with_check(CheckSpec::Einstein { tolerance: -1.0 })
            .with_check(CheckSpec::ConformallyFlat { tolerance: 1e-8 });
        let r = run_scenario(&s, &RunOptions::default()).unwrap();
        let st: Vec<Status> = r.checks.iter().map(|c| c.status).collect();
        assert_eq!(st, vec![Status::Error, Status::Error, Status::Pass]);
        assert_eq!(r.exit_code(), 2);
    }
}
