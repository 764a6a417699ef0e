//! Principal eigenpairs of `Δ_a + V` and the sign certificate for `μ`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::Laplacian;
use crate::error::{Error, Result};
use crate::tensor::pairwise_dot;

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const ITERATION_CAP: usize = 10_000;
const CG_CAP: usize = 20_000;

/// Principal eigenpair of `Δ_a + V` (analyst convention; `μ = −λ`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub mu: f64,
    /// Node values, positive, normalised to `Σ w u² = 1`.
    pub u: Vec<f64>,
    /// `‖(Δ_a + V)u − μu‖` in the weighted norm.
    pub residual: f64,
    pub iterations: usize,
    pub min_u: f64,
}

fn norm2(v: &[f64]) -> f64 {
    pairwise_dot(v, v).sqrt()
}

/// `y ↦ (S + diag V − shift) y` with `S = W^{-1/2} K W^{-1/2}`.
fn apply_shifted(lap: &Laplacian, potential: &[f64], shift: f64, y: &[f64], out: &mut [f64]) {
    lap.symmetric().apply(y, out);
    for ((o, v), yi) in out.iter_mut().zip(potential).zip(y) {
        *o += (v - shift) * yi;
    }
}

/// Conjugate gradients for an SPD operator, warm-started from `x`.
fn conjugate_gradient(
    lap: &Laplacian,
    potential: &[f64],
    shift: f64,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
) -> Result<usize> {
    let n = b.len();
    let mut ax = vec![0.0; n];
    apply_shifted(lap, potential, shift, x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = pairwise_dot(&r, &r);
    let target = rel_tol * norm2(b);
    let mut ap = vec![0.0; n];
    for it in 0..CG_CAP {
        if rr.sqrt() <= target {
            return Ok(it);
        }
        apply_shifted(lap, potential, shift, &p, &mut ap);
        let pap = pairwise_dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver(format!(
                "shifted operator is not positive definite (pAp = {pap:e})"
            )));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = pairwise_dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!(
        "conjugate gradients did not reach {rel_tol:e} in {CG_CAP} steps"
    )))
}

/// Smallest eigenpair of `Δ_a + diag(potential)` by shift-invert
/// iteration from the all-ones vector. The shift `min V − 1` lies strictly
/// below the spectrum since `Δ_a ≥ 0`.
pub fn smallest_eigenpair(lap: &Laplacian, potential: &[f64]) -> Result<SpectralResult> {
    let n = lap.len();
    if potential.len() != n {
        return Err(Error::Dimension(format!(
            "potential has {} values, grid has {n} nodes",
            potential.len()
        )));
    }
    let shift = potential.iter().fold(f64::INFINITY, |m, v| m.min(*v)) - 1.0;
    let sqrt_w: Vec<f64> = lap.weights().iter().map(|w| w.sqrt()).collect();
    let mut y = sqrt_w.clone();
    let s = norm2(&y);
    y.iter_mut().for_each(|v| *v /= s);

    let mut my = vec![0.0; n];
    apply_shifted(lap, potential, 0.0, &y, &mut my);
    let mut rho = pairwise_dot(&y, &my);
    let mut residual = residual_norm(&my, &y, rho);
    let mut iterations = 0;
    while residual > RESIDUAL_TOL {
        if iterations >= ITERATION_CAP {
            return Err(Error::Solver(format!(
                "inverse iteration stalled after {ITERATION_CAP} steps: residual {residual:e}, \
                 Rayleigh quotient {rho}, shift {shift}"
            )));
        }
        iterations += 1;
        let mut z: Vec<f64> = y.iter().map(|v| v / (rho - shift)).collect();
        let tol = (1e-2 * residual).clamp(1e-14, 1e-6);
        conjugate_gradient(lap, potential, shift, &y, &mut z, tol)?;
        let zn = norm2(&z);
        y = z.into_iter().map(|v| v / zn).collect();
        apply_shifted(lap, potential, 0.0, &y, &mut my);
        rho = pairwise_dot(&y, &my);
        residual = residual_norm(&my, &y, rho);
    }

    // u = W^{-1/2} y has Σ w u² = 1; the weighted residual equals |My − ρy|.
    let sign = if y.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let u: Vec<f64> = y.iter().zip(&sqrt_w).map(|(v, s)| sign * v / s).collect();
    let min_u = u.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    Ok(SpectralResult {
        mu: rho,
        u,
        residual,
        iterations,
        min_u,
    })
}

fn residual_norm(my: &[f64], y: &[f64], rho: f64) -> f64 {
    let r: Vec<f64> = my.iter().zip(y).map(|(a, b)| a - rho * b).collect();
    norm2(&r)
}

/// All eigenvalues of `Δ_a + diag(potential)`, ascending; dense, so only for
/// small grids. Serves as the oracle for the iterative solver.
pub fn dense_eigenvalues(lap: &Laplacian, potential: &[f64]) -> Vec<f64> {
    let d: DMatrix<f64> = lap.dense_operator(potential);
    let mut ev: Vec<f64> = d.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Coefficient `(m−2)/(4(m−1))` of `σ` in the conformal operator.
pub fn conformal_coefficient(m: usize) -> Result<f64> {
    if m < 3 {
        return Err(Error::UnsupportedDimension {
            dim: m,
            reason: "the conformal operator needs dimension >= 3".into(),
        });
    }
    let m = m as f64;
    Ok((m - 2.0) / (4.0 * (m - 1.0)))
}

/// Principal eigenpair of `Δ_a + ((m−2)/(4(m−1))) σ`, `m` the grid dimension.
pub fn principal_eigenpair(lap: &Laplacian, sigma: &[f64]) -> Result<SpectralResult> {
    let c = conformal_coefficient(lap.grid().dim())?;
    let potential: Vec<f64> = sigma.iter().map(|s| c * s).collect();
    let r = smallest_eigenpair(lap, &potential)?;
    if !(r.min_u > 0.0) {
        return Err(Error::Solver(format!(
            "principal eigenfunction is not positive (min u = {:e})",
            r.min_u
        )));
    }
    Ok(r)
}

/// Stability of a hypersurface from its Jacobi potential
/// `q = Ric(N,N) + |B|²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobiStability {
    /// Principal eigenvalue of `Δ_a − q`.
    pub mu: f64,
    pub stable: bool,
    pub tolerance: f64,
    pub iterations: usize,
}

pub fn jacobi_stability(lap: &Laplacian, q: &[f64], tolerance: f64) -> Result<JacobiStability> {
    let potential: Vec<f64> = q.iter().map(|v| -v).collect();
    let r = smallest_eigenpair(lap, &potential)?;
    Ok(JacobiStability {
        mu: r.mu,
        stable: r.mu >= -tolerance,
        tolerance,
        iterations: r.iterations,
    })
}

/// Evidence relating the eigenvalue sign to the stability-type bound
/// `−½ ∫ σ φ² ≤ ∫ |∇φ|²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaCertificate {
    pub mu: f64,
    /// Defect of `(1/2c)∫|∇u|² = −½∫σu² + (μ/2c)∫u²` on the discrete pair.
    pub identity_residual: f64,
    /// The bound at the eigenfunction itself.
    pub bound_holds_at_u: bool,
    pub test_functions: usize,
    /// Test functions at which the bound fails.
    pub bound_failures: usize,
    /// Bound holds at `u` but `μ < −tolerance`; must be zero.
    pub implication_violations: usize,
    pub tolerance: f64,
}

impl LambdaCertificate {
    /// The bound held at every test function, so the hypothesis is met.
    pub fn hypothesis_holds(&self) -> bool {
        self.bound_failures == 0 && self.bound_holds_at_u
    }
}

/// `∫|∇φ|² + ½∫σφ²`; the bound holds iff this is `≥ 0`.
pub fn stability_margin(lap: &Laplacian, sigma: &[f64], phi: &[f64]) -> f64 {
    let s: Vec<f64> = sigma.iter().zip(phi).map(|(s, p)| s * p).collect();
    lap.dirichlet(phi, phi) + 0.5 * lap.weighted_dot(&s, phi)
}

/// Checks the integrated identity on `(μ, u)` and the implication
/// "bound holds ⇒ `μ ≥ 0`" over the constant, `u`, and `count` seeded
/// random Fourier test functions.
pub fn lambda_sign_certificate(
    lap: &Laplacian,
    sigma: &[f64],
    result: &SpectralResult,
    count: usize,
    seed: u64,
    tolerance: f64,
) -> Result<LambdaCertificate> {
    let grid = lap.grid();
    let c = conformal_coefficient(grid.dim())?;
    let u = &result.u;
    let su: Vec<f64> = sigma.iter().zip(u).map(|(s, v)| s * v).collect();
    let lhs = lap.dirichlet(u, u) / (2.0 * c);
    let rhs = -0.5 * lap.weighted_dot(&su, u) + result.mu / (2.0 * c) * lap.weighted_dot(u, u);
    let identity_residual = (lhs - rhs).abs();

    let scale = 1e-12 * (1.0 + lap.dirichlet(u, u).abs());
    let bound_holds_at_u = stability_margin(lap, sigma, u) >= -scale;
    let mut failures = 0;
    let mut tests = 0;
    let mut check = |phi: &[f64]| {
        tests += 1;
        let scale = 1e-12 * (1.0 + lap.dirichlet(phi, phi).abs() + lap.weighted_dot(phi, phi));
        if stability_margin(lap, sigma, phi) < -scale {
            failures += 1;
        }
    };
    check(&vec![1.0; lap.len()]);
    check(u);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = grid.nodes();
    let periods = grid.periods().to_vec();
    for _ in 0..count {
        let modes: Vec<(Vec<f64>, f64, f64)> = (0..3)
            .map(|_| {
                let k: Vec<f64> = periods
                    .iter()
                    .map(|p| rng.gen_range(-2i32..=2) as f64 * std::f64::consts::TAU / p)
                    .collect();
                (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        let offset: f64 = rng.gen_range(-1.0..1.0);
        let phi: Vec<f64> = nodes
            .iter()
            .map(|x| {
                offset
                    + modes
                        .iter()
                        .map(|(k, a, ph)| {
                            a * (k.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() + ph).cos()
                        })
                        .sum::<f64>()
            })
            .collect();
        check(&phi);
    }
    let implication_violations = usize::from(bound_holds_at_u && result.mu < -tolerance);
    Ok(LambdaCertificate {
        mu: result.mu,
        identity_residual,
        bound_holds_at_u,
        test_functions: tests,
        bound_failures: failures,
        implication_violations,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::PeriodicGrid;
    use crate::tensor::MetricAtPoint;
    use std::f64::consts::TAU;

    #[test]
    fn circle_spectrum() {
        let grid = PeriodicGrid::flat(&[256], &[TAU]).unwrap();
        let lap = Laplacian::build(&grid).unwrap();
        let ev = dense_eigenvalues(&lap, &vec![0.0; 256]);
        for (got, want) in ev.iter().zip([0.0, 1.0, 1.0, 4.0, 4.0]) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn anisotropic_torus_gap() {
        let g = MetricAtPoint::from_diagonal(&[1.0, 4.0]).unwrap();
        let grid = PeriodicGrid::constant(&[8, 64], &[TAU, TAU], g).unwrap();
        let lap = Laplacian::build(&grid).unwrap();
        let ev = dense_eigenvalues(&lap, &vec![0.0; grid.len()]);
        assert!(ev[0].abs() < 1e-10);
        assert!((ev[1] - 0.25).abs() < 1e-3, "{}", ev[1]);
    }

    #[test]
    fn constant_potential_shift_is_exact() {
        let grid = PeriodicGrid::flat(&[8, 8, 8], &[TAU; 3]).unwrap();
        let lap = Laplacian::build(&grid).unwrap();
        let r = principal_eigenpair(&lap, &vec![2.0; grid.len()]).unwrap();
        assert!((r.mu - 2.0 / 8.0).abs() < 1e-10);
        assert!(r.u.iter().all(|v| (v - r.u[0]).abs() < 1e-10));
    }

    #[test]
    fn iterative_matches_dense_with_variable_potential() {
        let g = MetricAtPoint::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.5])).unwrap();
        let grid = PeriodicGrid::constant(&[10, 12], &[TAU, 4.0], g).unwrap();
        let lap = Laplacian::build(&grid).unwrap();
        let pot: Vec<f64> = grid.nodes().iter().map(|x| x[0].sin() + 0.3 * x[1].cos()).collect();
        let r = smallest_eigenpair(&lap, &pot).unwrap();
        let ev = dense_eigenvalues(&lap, &pot);
        assert!((r.mu - ev[0]).abs() < 1e-10, "{} vs {}", r.mu, ev[0]);
        assert!(r.min_u > 0.0);
    }

    #[test]
    fn jacobi_cases() {
        let grid = PeriodicGrid::flat(&[8, 8, 8], &[TAU; 3]).unwrap();
        let lap = Laplacian::build(&grid).unwrap();
        let n = grid.len();
        let j = jacobi_stability(&lap, &vec![0.0; n], 1e-8).unwrap();
        assert!(j.stable && j.mu.abs() < 1e-12);
        let j = jacobi_stability(&lap, &vec![0.7; n], 1e-8).unwrap();
        assert!(!j.stable && (j.mu + 0.7).abs() < 1e-10);
        let q: Vec<f64> = grid.nodes().iter().map(|x| -1.0 - x[0].cos()).collect();
        assert!(jacobi_stability(&lap, &q, 1e-8).unwrap().stable);
    }

    #[test]
    fn certificate_cases() {
        let grid = PeriodicGrid::flat(&[8, 8, 8], &[TAU; 3]).unwrap();
        let lap = Laplacian::build(&grid).unwrap();
        let n = grid.len();
        let zero = vec![0.0; n];
        let r = principal_eigenpair(&lap, &zero).unwrap();
        let c = lambda_sign_certificate(&lap, &zero, &r, 50, 1, 1e-8).unwrap();
        assert!(c.identity_residual < 1e-8 && c.hypothesis_holds());

        let negative = vec![-20.0; n];
        let r = principal_eigenpair(&lap, &negative).unwrap();
        assert!(r.mu < 0.0);
        let c = lambda_sign_certificate(&lap, &negative, &r, 50, 1, 1e-8).unwrap();
        assert!(!c.hypothesis_holds() && !c.bound_holds_at_u);
        assert_eq!(c.implication_violations, 0);
        assert!(c.identity_residual < 1e-8);
    }
}
