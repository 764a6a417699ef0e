//! Deterministic low-discrepancy sampling and pointwise hypothesis scans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::engine::{curvature_at, DiffConfig, MetricSource};
use super::ManifoldSpec;
use crate::conformal::{eval_weighted_sample, WeightedFunction};
use crate::error::{Error, Result};

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// `count` points of the Halton sequence in `[0,1)^dim`, Cranley–Patterson
/// rotated by a shift drawn from the seed.
pub fn sample_unit_cube(count: usize, dim: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if dim > PRIMES.len() {
        return Err(Error::UnsupportedDimension {
            dim,
            reason: format!("sampling supports at most {} axes", PRIMES.len()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    Ok((1..=count as u64)
        .map(|i| {
            (0..dim)
                .map(|k| (halton(i, PRIMES[k]) + shift[k]).fract())
                .collect()
        })
        .collect())
}

/// Sample points in the catalog box of `spec`.
pub fn sample_points(spec: &ManifoldSpec, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let bx = spec.sample_box();
    Ok(sample_unit_cube(count, bx.len(), seed)?
        .into_iter()
        .map(|u| {
            u.iter()
                .zip(&bx)
                .map(|(t, (lo, hi))| lo + t * (hi - lo))
                .collect()
        })
        .collect())
}

/// Outcome of checking `s ≥ f` at every sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub samples: usize,
    /// `min (s − f)`; `+∞` for an empty sample set.
    pub min_margin: f64,
    pub argmin: Option<Vec<f64>>,
    /// Samples with `s − f < −tolerance`.
    pub violations: usize,
    pub tolerance: f64,
}

impl ScanReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Scans `s ≥ f` pointwise. Violations are data; only evaluation failures
/// are errors.
pub fn hypothesis_scan<S: MetricSource + ?Sized>(
    src: &S,
    f: &WeightedFunction,
    points: &[Vec<f64>],
    tolerance: f64,
    cfg: &DiffConfig,
) -> Result<ScanReport> {
    let mut report = ScanReport {
        samples: points.len(),
        min_margin: f64::INFINITY,
        argmin: None,
        violations: 0,
        tolerance,
    };
    for x in points {
        let sample = curvature_at(src, x, cfg)?;
        let margin = sample.scalar() - eval_weighted_sample(f, &sample, None)?;
        if margin < -tolerance {
            report.violations += 1;
        }
        if margin < report.min_margin {
            report.min_margin = margin;
            report.argmin = Some(x.clone());
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base_two() {
        let v: Vec<f64> = (1..5).map(|i| halton(i, 2)).collect();
        assert_eq!(v, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn samples_are_seeded_and_inside_box() {
        let spec = ManifoldSpec::sphere(4, 2.0);
        let a = sample_points(&spec, 50, 7).unwrap();
        let b = sample_points(&spec, 50, 7).unwrap();
        let c = sample_points(&spec, 50, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().flatten().all(|v| (-2.0..=2.0).contains(v)));
    }
}
