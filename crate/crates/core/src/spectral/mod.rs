//! Laplace–Beltrami discretisation on periodic grids, the Jacobi and
//! conformal Schrödinger operators, and the dichotomy pipeline.
//!
//! Conventions: `Δ_a = −div grad` (nonnegative) and `μ = −λ`, where `λ` is
//! the eigenvalue in the geometer's convention `Δ = div grad`.

mod eigen;
mod grid;
mod pipeline;

pub use eigen::{
    conformal_coefficient, dense_eigenvalues, jacobi_stability, lambda_sign_certificate,
    principal_eigenpair, smallest_eigenpair, stability_margin, JacobiStability,
    LambdaCertificate, SpectralResult, ITERATION_CAP, RESIDUAL_TOL,
};
pub use grid::{Csr, Laplacian, PeriodicGrid, MIN_RESOLUTION};
pub use pipeline::{
    case_one_metric, lambda_tolerance, node_data, theorem_pipeline, NodeData, PipelineConfig,
    TheoremCase, TheoremMode, TheoremOutcome, ViolationReason,
};

/// Stated in every report.
pub const CONVENTIONS: &str = "Laplacian in analyst convention Delta_a = -div grad (nonnegative); \
reported mu is the principal eigenvalue of Delta_a + ((m-2)/(4(m-1))) sigma and equals -lambda \
of the geometer's convention Delta = div grad; |W| in the 2*sqrt(6) relation is the End(Lambda^2) \
Frobenius norm (half the tensor norm)";
