//! Pointwise multilinear algebra over a fixed inner product.
//!
//! Tensors are fully covariant and stored densely in row-major order. All
//! norms are full index sums in a g-orthonormal frame, with no symmetry-factor
//! division, so that restriction to a subspace can only drop terms.

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-14;
const CURVATURE_TOL: f64 = 1e-12;
const FRAME_TOL: f64 = 1e-10;

/// Sum with pairwise (cascade) reduction so results do not depend on how a
/// caller chunks the work.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= 16 {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let mid = a.len() / 2;
    pairwise_dot(&a[..mid], &b[..mid]) + pairwise_dot(&a[mid..], &b[mid..])
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Chart-basis components of a Riemannian metric at one point.
#[derive(Clone, Debug)]
pub struct MetricAtPoint {
    g: DMatrix<f64>,
    inv: DMatrix<f64>,
    frame: DMatrix<f64>,
}

impl MetricAtPoint {
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        let m = g.nrows();
        if m == 0 || g.ncols() != m {
            return Err(Error::Dimension(format!(
                "metric must be square and non-empty, got {}x{}",
                g.nrows(),
                g.ncols()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Metric("non-finite component".into()));
        }
        let scale = max_abs(g.as_slice()).max(1.0);
        for i in 0..m {
            for j in 0..i {
                if (g[(i, j)] - g[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Metric(format!(
                        "asymmetric components g[{i}][{j}]={} vs g[{j}][{i}]={}",
                        g[(i, j)],
                        g[(j, i)]
                    )));
                }
            }
        }
        let g = (&g + g.transpose()) * 0.5;
        let chol = g
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Metric("not positive definite".into()))?;
        let l = chol.l();
        // Gram-Schmidt of the coordinate basis in order: columns of L^{-T}.
        let frame = l
            .transpose()
            .solve_upper_triangular(&DMatrix::identity(m, m))
            .ok_or_else(|| Error::Metric("singular Cholesky factor".into()))?;
        let inv = &frame * frame.transpose();
        Ok(MetricAtPoint { g, inv, frame })
    }

    pub fn identity(m: usize) -> Self {
        MetricAtPoint {
            g: DMatrix::identity(m, m),
            inv: DMatrix::identity(m, m),
            frame: DMatrix::identity(m, m),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        MetricAtPoint::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inv
    }

    /// Positively oriented g-orthonormal frame; column `a` holds the chart
    /// components of `e_a`.
    pub fn orthonormal_frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn sqrt_det(&self) -> f64 {
        // det g = 1 / det(frame)^2, frame triangular.
        let d: f64 = (0..self.dim()).map(|i| self.frame[(i, i)]).product();
        1.0 / d.abs()
    }

    pub fn inner_vectors(&self, u: &[f64], v: &[f64]) -> f64 {
        let m = self.dim();
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                acc += self.g[(i, j)] * u[i] * v[j];
            }
        }
        acc
    }

    /// The metric `factor * g`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        MetricAtPoint::new(&self.g * factor)
    }

    /// The metric itself as a symmetric rank-2 tensor.
    pub fn as_tensor(&self) -> Tensor {
        Tensor::from_matrix(&self.g)
    }
}

/// A fully covariant tensor at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    rank: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rank: usize, dim: usize) -> Self {
        Tensor {
            rank,
            dim,
            data: vec![0.0; dim.pow(rank as u32)],
        }
    }

    pub fn from_vec(rank: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if rank == 0 || dim == 0 {
            return Err(Error::Dimension("rank and dim must be positive".into()));
        }
        if data.len() != dim.pow(rank as u32) {
            return Err(Error::Dimension(format!(
                "rank {rank} dim {dim} needs {} components, got {}",
                dim.pow(rank as u32),
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite tensor component".into()));
        }
        Ok(Tensor { rank, dim, data })
    }

    pub fn from_fn(rank: usize, dim: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Tensor::zeros(rank, dim);
        let mut idx = vec![0usize; rank];
        for flat in 0..t.data.len() {
            let mut r = flat;
            for slot in (0..rank).rev() {
                idx[slot] = r % dim;
                r /= dim;
            }
            t.data[flat] = f(&idx);
        }
        t
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        Tensor::from_fn(2, n, |ix| m[(ix[0], ix[1])])
    }

    /// `v^1 ⊗ ... ⊗ v^r` for covectors given by components.
    pub fn outer(factors: &[&[f64]]) -> Result<Self> {
        let dim = factors
            .first()
            .map(|f| f.len())
            .ok_or_else(|| Error::Dimension("empty outer product".into()))?;
        if factors.iter().any(|f| f.len() != dim) {
            return Err(Error::Dimension("outer factors differ in length".into()));
        }
        Ok(Tensor::from_fn(factors.len(), dim, |ix| {
            ix.iter().zip(factors).map(|(&i, f)| f[i]).product()
        }))
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.rank != 2 {
            return Err(Error::Dimension(format!(
                "expected rank 2, got {}",
                self.rank
            )));
        }
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &self.data))
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn scale(&self, factor: f64) -> Tensor {
        Tensor {
            rank: self.rank,
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    fn check_same_shape(&self, other: &Tensor) -> Result<()> {
        if self.rank != other.rank || self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "shape mismatch: rank {} dim {} vs rank {} dim {}",
                self.rank, self.dim, other.rank, other.dim
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_shape(other)?;
        Ok(Tensor {
            rank: self.rank,
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.add(&other.scale(-1.0))
    }

    /// Applies `mat` (k x dim) to every slot:
    /// `T'_{a1..ar} = Σ mat[a1,i1] ... mat[ar,ir] T_{i1..ir}`.
    pub fn transform_slots(&self, mat: &DMatrix<f64>) -> Result<Tensor> {
        if mat.ncols() != self.dim {
            return Err(Error::Dimension(format!(
                "transform has {} columns, tensor dim is {}",
                mat.ncols(),
                self.dim
            )));
        }
        let k = mat.nrows();
        let mut shape = vec![self.dim; self.rank];
        let mut data = self.data.clone();
        for slot in 0..self.rank {
            let outer: usize = shape[..slot].iter().product();
            let mid = shape[slot];
            let inner: usize = shape[slot + 1..].iter().product();
            let mut next = vec![0.0; outer * k * inner];
            for o in 0..outer {
                for a in 0..k {
                    let dst = (o * k + a) * inner;
                    for j in 0..mid {
                        let c = mat[(a, j)];
                        if c == 0.0 {
                            continue;
                        }
                        let src = (o * mid + j) * inner;
                        for i in 0..inner {
                            next[dst + i] += c * data[src + i];
                        }
                    }
                }
            }
            shape[slot] = k;
            data = next;
        }
        Ok(Tensor {
            rank: self.rank,
            dim: k,
            data,
        })
    }

    /// Components in the g-orthonormal frame of `g`.
    pub fn frame_components(&self, g: &MetricAtPoint) -> Result<Tensor> {
        if g.dim() != self.dim {
            return Err(Error::Dimension(format!(
                "tensor dim {} vs metric dim {}",
                self.dim,
                g.dim()
            )));
        }
        self.transform_slots(&g.orthonormal_frame().transpose())
    }

    /// Pullback along the linear map whose columns are `vectors` (n x k).
    pub fn pullback(&self, vectors: &DMatrix<f64>) -> Result<Tensor> {
        self.transform_slots(&vectors.transpose())
    }

    pub fn is_symmetric2(&self, tol: f64) -> bool {
        if self.rank != 2 {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        (0..self.dim).all(|i| {
            (0..i).all(|j| (self.get(&[i, j]) - self.get(&[j, i])).abs() <= tol * scale)
        })
    }

    /// Metric trace of a rank-2 tensor.
    pub fn trace(&self, g: &MetricAtPoint) -> Result<f64> {
        let m = self.to_matrix()?;
        if g.dim() != self.dim {
            return Err(Error::Dimension("trace: metric dim mismatch".into()));
        }
        Ok(g.inverse().component_mul(&m.transpose()).sum())
    }
}

/// `⟨A, B⟩_g`, the full index sum of frame components.
pub fn inner(a: &Tensor, b: &Tensor, g: &MetricAtPoint) -> Result<f64> {
    a.check_same_shape(b)?;
    let fa = a.frame_components(g)?;
    let fb = b.frame_components(g)?;
    Ok(pairwise_dot(&fa.data, &fb.data))
}

pub fn norm(a: &Tensor, g: &MetricAtPoint) -> Result<f64> {
    Ok(inner(a, a, g)?.max(0.0).sqrt())
}

/// An algebraic curvature tensor: pair-antisymmetric, pair-symmetric and
/// satisfying the first Bianchi identity.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvTensor(Tensor);

impl CurvTensor {
    pub fn new(t: Tensor) -> Result<Self> {
        if t.rank != 4 {
            return Err(Error::Dimension(format!(
                "curvature tensor must be rank 4, got {}",
                t.rank
            )));
        }
        let defect = curvature_symmetry_defect(&t);
        let scale = t.max_abs().max(1.0);
        if defect > CURVATURE_TOL * scale {
            return Err(Error::Validation(format!(
                "curvature symmetries violated by {defect:e}"
            )));
        }
        Ok(CurvTensor(t))
    }

    pub fn zeros(dim: usize) -> Self {
        CurvTensor(Tensor::zeros(4, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0.get(&[i, j, k, l])
    }

    pub fn scale(&self, factor: f64) -> CurvTensor {
        CurvTensor(self.0.scale(factor))
    }

    pub fn add(&self, other: &CurvTensor) -> Result<CurvTensor> {
        Ok(CurvTensor(self.0.add(&other.0)?))
    }

    pub fn sub(&self, other: &CurvTensor) -> Result<CurvTensor> {
        Ok(CurvTensor(self.0.sub(&other.0)?))
    }

    /// Pullback along n x k `vectors`; the result is again algebraic curvature.
    pub fn pullback(&self, vectors: &DMatrix<f64>) -> Result<CurvTensor> {
        Ok(CurvTensor(self.0.pullback(vectors)?))
    }
}

/// Largest violation of the curvature symmetries and first Bianchi identity.
pub fn curvature_symmetry_defect(t: &Tensor) -> f64 {
    let n = t.dim;
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let r = t.get(&[i, j, k, l]);
                    worst = worst
                        .max((r + t.get(&[j, i, k, l])).abs())
                        .max((r + t.get(&[i, j, l, k])).abs())
                        .max((r - t.get(&[k, l, i, j])).abs())
                        .max((r + t.get(&[i, k, l, j]) + t.get(&[i, l, j, k])).abs());
                }
            }
        }
    }
    worst
}

/// `(h ∧ k)_ijkl = h_ik k_jl + h_jl k_ik − h_il k_jk − h_jk k_il`.
pub fn kulkarni_nomizu(h: &Tensor, k: &Tensor) -> Result<CurvTensor> {
    if h.rank != 2 || k.rank != 2 {
        return Err(Error::Dimension(
            "Kulkarni-Nomizu product needs rank-2 factors".into(),
        ));
    }
    h.check_same_shape(k)?;
    for (name, t) in [("h", h), ("k", k)] {
        if !t.is_symmetric2(1e-12) {
            return Err(Error::Validation(format!("{name} is not symmetric")));
        }
    }
    let n = h.dim;
    let hm = |a: usize, b: usize| h.data[a * n + b];
    let km = |a: usize, b: usize| k.data[a * n + b];
    Ok(CurvTensor(Tensor::from_fn(4, n, |ix| {
        let (i, j, a, b) = (ix[0], ix[1], ix[2], ix[3]);
        hm(i, a) * km(j, b) + hm(j, b) * km(i, a) - hm(i, b) * km(j, a) - hm(j, a) * km(i, b)
    })))
}

#[derive(Clone, Debug)]
pub struct RicciParts {
    pub ricci: Tensor,
    pub scalar: f64,
    pub traceless: Tensor,
}

/// Contraction on slots 1 and 3, its trace, and its trace-free part.
pub fn ricci_parts(r: &CurvTensor, g: &MetricAtPoint) -> Result<RicciParts> {
    let n = r.dim();
    if g.dim() != n {
        return Err(Error::Dimension(format!(
            "curvature dim {n} vs metric dim {}",
            g.dim()
        )));
    }
    let inv = g.inverse();
    let ricci = Tensor::from_fn(2, n, |ix| {
        let (j, l) = (ix[0], ix[1]);
        let mut acc = 0.0;
        for i in 0..n {
            for k in 0..n {
                acc += inv[(i, k)] * r.get(i, j, k, l);
            }
        }
        acc
    });
    // Exact symmetrisation; the contraction is symmetric only up to rounding.
    let ricci = Tensor::from_fn(2, n, |ix| {
        0.5 * (ricci.get(&[ix[0], ix[1]]) + ricci.get(&[ix[1], ix[0]]))
    });
    let scalar = ricci.trace(g)?;
    let traceless = ricci.sub(&g.as_tensor().scale(scalar / n as f64))?;
    Ok(RicciParts {
        ricci,
        scalar,
        traceless,
    })
}

/// Orthogonal split `R = s/(2m(m−1)) g∧g + 1/(m−2) z∧g + W`.
#[derive(Clone, Debug)]
pub struct CurvDecomp {
    pub scalar: f64,
    pub traceless_ricci: Tensor,
    pub weyl: CurvTensor,
    /// Scalar plus traceless-Ricci block.
    pub s_part: CurvTensor,
    /// Dimension 3: the Weyl block is identically zero and set to exactly 0.
    pub weyl_degenerate: bool,
}

pub fn decompose_curvature(r: &CurvTensor, g: &MetricAtPoint) -> Result<CurvDecomp> {
    let m = r.dim();
    if m < 3 {
        return Err(Error::UnsupportedDimension {
            dim: m,
            reason: "curvature decomposition needs m >= 3".into(),
        });
    }
    let parts = ricci_parts(r, g)?;
    let gt = g.as_tensor();
    let mf = m as f64;
    let gg = kulkarni_nomizu(&gt, &gt)?;
    let zg = kulkarni_nomizu(&parts.traceless, &gt)?;
    let s_part = gg
        .scale(parts.scalar / (2.0 * mf * (mf - 1.0)))
        .add(&zg.scale(1.0 / (mf - 2.0)))?;
    let (weyl, weyl_degenerate) = if m == 3 {
        (CurvTensor::zeros(3), true)
    } else {
        (r.sub(&s_part)?, false)
    };
    Ok(CurvDecomp {
        scalar: parts.scalar,
        traceless_ricci: parts.traceless,
        weyl,
        s_part,
        weyl_degenerate,
    })
}

/// Residuals of the orthogonal decomposition; used by tests and reports.
#[derive(Clone, Debug, Default)]
pub struct DecompositionResiduals {
    pub reconstruction: f64,
    pub weyl_dot_zg: f64,
    pub weyl_dot_gg: f64,
    pub zg_dot_gg: f64,
    pub weyl_ricci_trace: f64,
    pub traceless_trace: f64,
    pub norm_sq: f64,
}

pub fn decomposition_residuals(
    r: &CurvTensor,
    d: &CurvDecomp,
    g: &MetricAtPoint,
) -> Result<DecompositionResiduals> {
    let gt = g.as_tensor();
    let gg = kulkarni_nomizu(&gt, &gt)?;
    let zg = kulkarni_nomizu(&d.traceless_ricci, &gt)?;
    let recon = d.s_part.add(&d.weyl)?.sub(r)?;
    Ok(DecompositionResiduals {
        reconstruction: norm(recon.tensor(), g)?,
        weyl_dot_zg: inner(d.weyl.tensor(), zg.tensor(), g)?.abs(),
        weyl_dot_gg: inner(d.weyl.tensor(), gg.tensor(), g)?.abs(),
        zg_dot_gg: inner(zg.tensor(), gg.tensor(), g)?.abs(),
        weyl_ricci_trace: norm(&ricci_parts(&d.weyl, g)?.ricci, g)?,
        traceless_trace: d.traceless_ricci.trace(g)?.abs(),
        norm_sq: inner(r.tensor(), r.tensor(), g)?,
    })
}

/// Components of `s` on a g-orthonormal family of `k` tangent vectors
/// (columns of `frame`, chart components).
pub fn restrict_tensor(s: &Tensor, g: &MetricAtPoint, frame: &DMatrix<f64>) -> Result<Tensor> {
    let n = g.dim();
    if frame.nrows() != n || s.dim() != n {
        return Err(Error::Dimension(format!(
            "frame has {} rows, tensor dim {}, metric dim {n}",
            frame.nrows(),
            s.dim()
        )));
    }
    let k = frame.ncols();
    if k == 0 || k > n {
        return Err(Error::Frame(format!("frame size {k} not in 1..={n}")));
    }
    let gram = frame.transpose() * g.matrix() * frame;
    for a in 0..k {
        for b in 0..k {
            let target = if a == b { 1.0 } else { 0.0 };
            if (gram[(a, b)] - target).abs() > FRAME_TOL {
                return Err(Error::Frame(format!(
                    "g(e{a}, e{b}) = {} deviates from {target}",
                    gram[(a, b)]
                )));
            }
        }
    }
    s.pullback(frame)
}

fn lambda2_pairs(m: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
    for a in 0..m {
        for b in a + 1..m {
            pairs.push((a, b));
        }
    }
    pairs
}

/// Matrix of `W` acting on Λ² in the orthonormal basis `{e^a ∧ e^b}_{a<b}`,
/// with `⟨α,β⟩ = ½ α_ij β^ij` and `(Wα)_ij = ½ W_ij^kl α_kl`.
pub fn lambda2_matrix(w: &CurvTensor, g: &MetricAtPoint) -> Result<DMatrix<f64>> {
    let fw = w.tensor().frame_components(g)?;
    let pairs = lambda2_pairs(w.dim());
    let p = pairs.len();
    Ok(DMatrix::from_fn(p, p, |r, c| {
        let (a, b) = pairs[r];
        let (i, j) = pairs[c];
        fw.get(&[a, b, i, j])
    }))
}

/// Frobenius norm of `W` as an endomorphism of Λ²; equals half the tensor norm.
pub fn end_lambda2_norm(w: &CurvTensor, g: &MetricAtPoint) -> Result<f64> {
    if w.dim() < 3 {
        return Err(Error::UnsupportedDimension {
            dim: w.dim(),
            reason: "End(Λ²) norm is used for m >= 3".into(),
        });
    }
    Ok(lambda2_matrix(w, g)?.norm())
}

/// Symmetric trace-free 3x3 operator (e.g. W⁺ on Λ⁺).
#[derive(Clone, Debug, PartialEq)]
pub struct TraceFreeSym3(Matrix3<f64>);

impl TraceFreeSym3 {
    pub fn new(a: Matrix3<f64>) -> Result<Self> {
        let scale = a.norm().max(1.0);
        for i in 0..3 {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Validation("operator is not symmetric".into()));
                }
            }
        }
        let tr = a.trace();
        if tr.abs() > 1e-12 * scale {
            return Err(Error::Validation(format!("trace {tr:e} is not zero")));
        }
        Ok(TraceFreeSym3((a + a.transpose()) * 0.5))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn eigenvalues_sorted(&self) -> [f64; 3] {
        let mut ev: Vec<f64> = self.0.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        [ev[0], ev[1], ev[2]]
    }
}

/// `(A(ω,ω), √(2/3)·|A|·|ω|²)`; the first never exceeds the second.
pub fn tracefree3_bound_check(a: &TraceFreeSym3, omega: &[f64; 3]) -> (f64, f64) {
    let w = nalgebra::Vector3::from_column_slice(omega);
    let lhs = w.dot(&(a.0 * w));
    let rhs = (2.0_f64 / 3.0).sqrt() * a.norm() * w.norm_squared();
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> Tensor {
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        Tensor::from_matrix(&((&m + m.transpose()) * 0.5))
    }

    fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> MetricAtPoint {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        MetricAtPoint::new(&a * a.transpose() + DMatrix::identity(n, n) * 0.5).unwrap()
    }

    /// Raises every index with explicit sums; independent of the frame route.
    fn raised_inner_oracle(a: &Tensor, b: &Tensor, g: &MetricAtPoint) -> f64 {
        let n = a.dim();
        let inv = g.inverse();
        let r = a.rank();
        let total = n.pow(r as u32);
        let mut acc = 0.0;
        let unflat = |mut f: usize| {
            let mut ix = vec![0; r];
            for s in (0..r).rev() {
                ix[s] = f % n;
                f /= n;
            }
            ix
        };
        for fa in 0..total {
            let ia = unflat(fa);
            for fb in 0..total {
                let ib = unflat(fb);
                let w: f64 = ia.iter().zip(&ib).map(|(&i, &j)| inv[(i, j)]).product();
                acc += w * a.get(&ia) * b.get(&ib);
            }
        }
        acc
    }

    #[test]
    fn inner_norm_examples() {
        let g = MetricAtPoint::identity(3);
        let e1 = [1.0, 0.0, 0.0];
        let a = Tensor::outer(&[&e1, &e1]).unwrap();
        assert!((inner(&a, &a, &g).unwrap() - 1.0).abs() < 1e-15);

        let g = MetricAtPoint::from_diagonal(&[4.0, 1.0]).unwrap();
        let a = Tensor::outer(&[&[1.0, 0.0], &[1.0, 0.0]]).unwrap();
        assert!((inner(&a, &a, &g).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        assert!((raised_inner_oracle(&a, &a, &g) - 1.0 / 16.0).abs() < 1e-15);
        assert!((norm(&a, &g).unwrap() - 0.25).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g5 = random_metric(&mut rng, 5);
        let gt = g5.as_tensor();
        assert!((inner(&gt, &gt, &g5).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn inner_matches_raised_index_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for rank in 1..=3 {
            let g = random_metric(&mut rng, 3);
            let a = Tensor::from_fn(rank, 3, |_| rng.gen_range(-1.0..1.0));
            let b = Tensor::from_fn(rank, 3, |_| rng.gen_range(-1.0..1.0));
            let x = inner(&a, &b, &g).unwrap();
            let y = raised_inner_oracle(&a, &b, &g);
            assert!((x - y).abs() < 1e-11 * (1.0 + y.abs()), "{x} vs {y}");
        }
    }

    #[test]
    fn inner_rejects_mismatch_and_bad_metric() {
        let g = MetricAtPoint::identity(3);
        let a = Tensor::zeros(2, 3);
        let b = Tensor::zeros(3, 3);
        assert!(matches!(inner(&a, &b, &g), Err(Error::Dimension(_))));
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(MetricAtPoint::new(bad), Err(Error::Metric(_))));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(MetricAtPoint::new(asym), Err(Error::Metric(_))));
    }

    #[test]
    fn kulkarni_nomizu_of_identity() {
        let g = MetricAtPoint::identity(4);
        let gt = g.as_tensor();
        let gg = kulkarni_nomizu(&gt, &gt).unwrap();
        // Direct index summation.
        let direct: f64 = gg.tensor().data().iter().map(|v| v * v).sum();
        assert!((direct - 96.0).abs() < 1e-12);
        assert!((inner(gg.tensor(), gg.tensor(), &g).unwrap() - 96.0).abs() < 1e-12);

        let zero = kulkarni_nomizu(&Tensor::zeros(2, 4), &gt).unwrap();
        assert_eq!(zero.tensor().max_abs(), 0.0);
    }

    #[test]
    fn kulkarni_nomizu_rejects_asymmetric() {
        let mut h = Tensor::zeros(2, 3);
        h.set(&[0, 1], 1.0);
        let k = MetricAtPoint::identity(3).as_tensor();
        assert!(matches!(kulkarni_nomizu(&h, &k), Err(Error::Validation(_))));
    }

    #[test]
    fn kulkarni_nomizu_fuzz_symmetries() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let h = random_sym(&mut rng, 5);
            let k = random_sym(&mut rng, 5);
            let r = kulkarni_nomizu(&h, &k).unwrap();
            assert!(curvature_symmetry_defect(r.tensor()) < 1e-12);
        }
    }

    #[test]
    fn ricci_parts_of_constant_curvature() {
        let g = MetricAtPoint::identity(3);
        let gt = g.as_tensor();
        let r = kulkarni_nomizu(&gt, &gt).unwrap().scale(0.5);
        let p = ricci_parts(&r, &g).unwrap();
        assert!((p.scalar - 6.0).abs() < 1e-14);
        assert!(p.traceless.max_abs() < 1e-14);

        let zero = ricci_parts(&CurvTensor::zeros(3), &g).unwrap();
        assert_eq!(zero.scalar, 0.0);
        assert_eq!(zero.ricci.max_abs(), 0.0);
    }

    #[test]
    fn decomposition_of_flat_and_low_dim() {
        let g = MetricAtPoint::identity(4);
        let d = decompose_curvature(&CurvTensor::zeros(4), &g).unwrap();
        assert_eq!(d.scalar, 0.0);
        assert_eq!(d.weyl.tensor().max_abs(), 0.0);
        assert!(matches!(
            decompose_curvature(&CurvTensor::zeros(2), &MetricAtPoint::identity(2)),
            Err(Error::UnsupportedDimension { dim: 2, .. })
        ));
        let d3 = decompose_curvature(&CurvTensor::zeros(3), &MetricAtPoint::identity(3)).unwrap();
        assert!(d3.weyl_degenerate);
    }

    #[test]
    fn restriction_examples() {
        let g = MetricAtPoint::identity(3);
        let frame = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let s1 = Tensor::outer(&[&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]).unwrap();
        let r1 = restrict_tensor(&s1, &g, &frame).unwrap();
        assert!((norm(&r1, &MetricAtPoint::identity(2)).unwrap() - 1.0).abs() < 1e-15);
        let s3 = Tensor::outer(&[&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]]).unwrap();
        let r3 = restrict_tensor(&s3, &g, &frame).unwrap();
        assert_eq!(r3.max_abs(), 0.0);

        let skew = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            restrict_tensor(&s1, &g, &skew),
            Err(Error::Frame(_))
        ));
    }

    #[test]
    fn end_norm_is_quarter_of_tensor_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let g = random_metric(&mut rng, 4);
            let h = random_sym(&mut rng, 4);
            let k = random_sym(&mut rng, 4);
            let r = kulkarni_nomizu(&h, &k).unwrap();
            let w = decompose_curvature(&r, &g).unwrap().weyl;
            let end = end_lambda2_norm(&w, &g).unwrap().powi(2);
            let ten = inner(w.tensor(), w.tensor(), &g).unwrap();
            if ten > 1e-12 {
                assert!((end / ten - 0.25).abs() < 1e-12);
            }
        }
        let z = end_lambda2_norm(&CurvTensor::zeros(4), &MetricAtPoint::identity(4)).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn tracefree3_examples() {
        let a = TraceFreeSym3::new(Matrix3::from_diagonal(&nalgebra::Vector3::new(
            2.0, -1.0, -1.0,
        )))
        .unwrap();
        let (lhs, rhs) = tracefree3_bound_check(&a, &[1.0, 0.0, 0.0]);
        assert!((lhs - 2.0).abs() < 1e-15);
        assert!((rhs - 2.0).abs() < 1e-12);
        assert!((a.norm() - 6.0_f64.sqrt()).abs() < 1e-15);

        let zero = TraceFreeSym3::new(Matrix3::zeros()).unwrap();
        assert_eq!(tracefree3_bound_check(&zero, &[0.3, 0.1, 2.0]), (0.0, 0.0));

        let traced = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 0.0, 0.0));
        assert!(matches!(
            TraceFreeSym3::new(traced),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
        assert_eq!(pairwise_dot(&v, &vec![1.0; 100]), 4950.0);
    }
}
