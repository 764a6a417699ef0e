//! Periodic grids and the divergence-form Laplace–Beltrami operator.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::manifolds::MetricSource;
use crate::tensor::{pairwise_dot, MetricAtPoint};

pub const MIN_RESOLUTION: usize = 8;

/// Uniform grid on `∏ [0, P_i)` with metric samples at the nodes. Node
/// indices are row-major with the first axis slowest.
#[derive(Clone, Debug)]
pub struct PeriodicGrid {
    resolution: Vec<usize>,
    periods: Vec<f64>,
    metrics: Vec<MetricAtPoint>,
}

impl PeriodicGrid {
    /// Samples `src` at every node.
    pub fn sample<S: MetricSource + ?Sized>(
        src: &S,
        resolution: &[usize],
        periods: &[f64],
    ) -> Result<Self> {
        Self::check_shape(resolution, periods)?;
        if src.dim() != resolution.len() {
            return Err(Error::Dimension(format!(
                "metric is {}-dimensional, grid has {} axes",
                src.dim(),
                resolution.len()
            )));
        }
        let total: usize = resolution.iter().product();
        let mut metrics = Vec::with_capacity(total);
        for idx in 0..total {
            let x = node_coords(resolution, periods, idx);
            metrics.push(MetricAtPoint::new(src.metric(&x)?).map_err(|e| {
                Error::Metric(format!("singular metric sample at node {x:?}: {e}"))
            })?);
        }
        Ok(PeriodicGrid {
            resolution: resolution.to_vec(),
            periods: periods.to_vec(),
            metrics,
        })
    }

    /// Constant metric at every node.
    pub fn constant(resolution: &[usize], periods: &[f64], metric: MetricAtPoint) -> Result<Self> {
        Self::check_shape(resolution, periods)?;
        if metric.dim() != resolution.len() {
            return Err(Error::Dimension("metric and grid dimension differ".into()));
        }
        let total = resolution.iter().product();
        Ok(PeriodicGrid {
            resolution: resolution.to_vec(),
            periods: periods.to_vec(),
            metrics: vec![metric; total],
        })
    }

    /// Euclidean metric.
    pub fn flat(resolution: &[usize], periods: &[f64]) -> Result<Self> {
        Self::constant(resolution, periods, MetricAtPoint::identity(resolution.len()))
    }

    fn check_shape(resolution: &[usize], periods: &[f64]) -> Result<()> {
        if resolution.is_empty() || resolution.len() != periods.len() {
            return Err(Error::Dimension(
                "resolution and periods must have equal non-zero length".into(),
            ));
        }
        if let Some(r) = resolution.iter().find(|r| **r < MIN_RESOLUTION) {
            return Err(Error::Configuration(format!(
                "grid resolution {r} is below the minimum {MIN_RESOLUTION}"
            )));
        }
        if let Some(p) = periods.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::Configuration(format!("period {p} must be positive")));
        }
        Ok(())
    }

    /// Every other node along each axis; needs even resolutions.
    pub fn coarsen(&self) -> Result<Self> {
        if self.resolution.iter().any(|r| r % 2 != 0) {
            return Err(Error::Configuration(
                "coarsening needs even resolutions".into(),
            ));
        }
        let coarse: Vec<usize> = self.resolution.iter().map(|r| r / 2).collect();
        Self::check_shape(&coarse, &self.periods)?;
        let metrics = (0..coarse.iter().product())
            .map(|idx| self.metrics[self.fine_index(&coarse, idx)].clone())
            .collect();
        Ok(PeriodicGrid {
            resolution: coarse,
            periods: self.periods.clone(),
            metrics,
        })
    }

    /// Fine-grid index of coarse node `idx`.
    pub fn fine_index(&self, coarse: &[usize], idx: usize) -> usize {
        let multi = unravel(coarse, idx);
        ravel(&self.resolution, &multi.iter().map(|i| 2 * i).collect::<Vec<_>>())
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn len(&self) -> usize {
        self.metrics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty()
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.periods
            .iter()
            .zip(&self.resolution)
            .map(|(p, n)| p / *n as f64)
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        node_coords(&self.resolution, &self.periods, idx)
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn metric(&self, idx: usize) -> &MetricAtPoint {
        &self.metrics[idx]
    }

    /// Quadrature weights `cellvol · √det g` (all positive).
    pub fn weights(&self) -> Vec<f64> {
        let v = self.cell_volume();
        self.metrics.iter().map(|g| v * g.sqrt_det()).collect()
    }

    /// `Σ_n w_n a_n b_n`, pairwise summed.
    pub fn weighted_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let w = self.weights();
        let wa: Vec<f64> = w.iter().zip(a).map(|(w, a)| w * a).collect();
        pairwise_dot(&wa, b)
    }

    fn neighbour(&self, idx: usize, axis: usize, step: isize) -> usize {
        let mut multi = unravel(&self.resolution, idx);
        let n = self.resolution[axis] as isize;
        multi[axis] = ((multi[axis] as isize + step).rem_euclid(n)) as usize;
        ravel(&self.resolution, &multi)
    }
}

fn unravel(resolution: &[usize], mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; resolution.len()];
    for axis in (0..resolution.len()).rev() {
        out[axis] = idx % resolution[axis];
        idx /= resolution[axis];
    }
    out
}

fn ravel(resolution: &[usize], multi: &[usize]) -> usize {
    multi
        .iter()
        .zip(resolution)
        .fold(0, |acc, (i, n)| acc * n + i)
}

fn node_coords(resolution: &[usize], periods: &[f64], idx: usize) -> Vec<f64> {
    unravel(resolution, idx)
        .iter()
        .zip(resolution.iter().zip(periods))
        .map(|(i, (n, p))| *i as f64 * p / *n as f64)
        .collect()
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|(c, _)| *c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().expect("entry exists") += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[lo..hi].binary_search(&j) {
            Ok(p) => self.vals[lo + p],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`; each row is summed in column order, so the result does
    /// not depend on scheduling.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = 0.0;
            for p in lo..hi {
                acc += self.vals[p] * x[self.cols[p]];
            }
            *yi = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[(i, self.cols[p])] = self.vals[p];
            }
        }
        d
    }

    /// `max |A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p];
                worst = worst.max((self.vals[p] - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Analyst-convention Laplacian `Δ_a = −div grad = W⁻¹ K` on a periodic
/// grid. `K` is the stiffness matrix of the sign-averaged one-sided
/// difference quadratic form and `W` the diagonal of quadrature weights,
/// so `Δ_a` is self-adjoint in the weighted inner product and annihilates
/// constants.
#[derive(Clone, Debug)]
pub struct Laplacian {
    grid: PeriodicGrid,
    stiffness: Csr,
    weights: Vec<f64>,
    /// `W^{-1/2} K W^{-1/2}`.
    symmetric: Csr,
}

impl Laplacian {
    pub fn build(grid: &PeriodicGrid) -> Result<Self> {
        let m = grid.dim();
        let h = grid.spacing();
        let vol = grid.cell_volume();
        let total = grid.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); total];
        let norm = 0.5f64.powi(m as i32);
        for node in 0..total {
            let g = grid.metric(node);
            let a = g.inverse() * (vol * g.sqrt_det());
            for signs in 0..(1usize << m) {
                let sigma: Vec<isize> = (0..m)
                    .map(|i| if signs >> i & 1 == 1 { -1 } else { 1 })
                    .collect();
                let p: Vec<usize> = (0..m).map(|i| grid.neighbour(node, i, sigma[i])).collect();
                for i in 0..m {
                    for j in 0..m {
                        let c = norm * a[(i, j)] * (sigma[i] * sigma[j]) as f64 / (h[i] * h[j]);
                        if c == 0.0 {
                            continue;
                        }
                        rows[p[i]].push((p[j], c));
                        rows[p[i]].push((node, -c));
                        rows[node].push((p[j], -c));
                        rows[node].push((node, c));
                    }
                }
            }
        }
        let stiffness = Csr::from_rows(rows);
        let weights = grid.weights();
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Metric("non-positive volume weight".into()));
        }
        let inv_sqrt: Vec<f64> = weights.iter().map(|w| 1.0 / w.sqrt()).collect();
        let mut symmetric = stiffness.clone();
        for i in 0..total {
            for p in symmetric.row_ptr[i]..symmetric.row_ptr[i + 1] {
                symmetric.vals[p] *= inv_sqrt[i] * inv_sqrt[symmetric.cols[p]];
            }
        }
        Ok(Laplacian {
            grid: grid.clone(),
            stiffness,
            weights,
            symmetric,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn stiffness(&self) -> &Csr {
        &self.stiffness
    }

    pub fn symmetric(&self) -> &Csr {
        &self.symmetric
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Δ_a u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.stiffness.apply(u, &mut out);
        out.iter_mut().zip(&self.weights).for_each(|(o, w)| *o /= w);
        out
    }

    /// `uᵀ K v = ∫ ⟨∇u, ∇v⟩` in the discrete form.
    pub fn dirichlet(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut kv = vec![0.0; v.len()];
        self.stiffness.apply(v, &mut kv);
        pairwise_dot(u, &kv)
    }

    /// `Σ w_n a_n b_n`.
    pub fn weighted_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let wa: Vec<f64> = self.weights.iter().zip(a).map(|(w, a)| w * a).collect();
        pairwise_dot(&wa, b)
    }

    /// Dense `W^{-1/2} K W^{-1/2} + diag(potential)`; for small grids.
    pub fn dense_operator(&self, potential: &[f64]) -> DMatrix<f64> {
        let mut d = self.symmetric.to_dense();
        for (i, v) in potential.iter().enumerate() {
            d[(i, i)] += v;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn constants_are_in_the_kernel_and_operator_is_symmetric() {
        let g = MetricAtPoint::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0])).unwrap();
        let grid = PeriodicGrid::constant(&[8, 10], &[TAU, 3.0], g).unwrap();
        let lap = Laplacian::build(&grid).unwrap();
        let ones = vec![1.0; grid.len()];
        assert!(lap.apply(&ones).iter().all(|v| v.abs() < 1e-12));
        assert!(lap.stiffness().asymmetry() < 1e-12);
    }

    #[test]
    fn rejects_coarse_grids_and_coarsens() {
        assert!(PeriodicGrid::flat(&[4], &[TAU]).is_err());
        let g = PeriodicGrid::flat(&[16, 16], &[TAU, TAU]).unwrap();
        let c = g.coarsen().unwrap();
        assert_eq!(c.resolution(), &[8, 8]);
        assert_eq!(g.node(g.fine_index(&[8, 8], 9)), c.node(9));
    }
}
