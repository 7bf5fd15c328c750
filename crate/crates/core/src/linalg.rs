//! Symmetric-matrix utilities: half-vectorization, SPD solves and a
//! fixed-point Riccati solver.

use std::ops::Deref;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{Error, Result};

/// Square matrix kept exactly symmetric.
///
/// Construction replaces `m` by `(m + mᵀ) / 2`, which removes the drift that
/// consensus arithmetic would otherwise accumulate.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
        }
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn cholesky(&self) -> Result<Cholesky<f64, Dyn>> {
        Cholesky::new(self.0.clone())
            .ok_or_else(|| Error::NotPositiveDefinite(format!("{}x{} matrix", self.dim(), self.dim())))
    }

    pub fn is_positive_definite(&self) -> bool {
        Cholesky::new(self.0.clone()).is_some()
    }

    /// SPD inverse, symmetrized.
    pub fn inverse(&self) -> Result<SymMatrix> {
        Ok(Self::symmetrized(self.cholesky()?.inverse()))
    }
}

impl Deref for SymMatrix {
    type Target = DMatrix<f64>;
    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl From<SymMatrix> for DMatrix<f64> {
    fn from(s: SymMatrix) -> Self {
        s.0
    }
}

/// Lower triangle of a symmetric `n×n` matrix, column-major:
/// `(0,0), (1,0), …, (n-1,0), (1,1), …`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfVec {
    n: usize,
    data: DVector<f64>,
}

pub fn triangular_len(n: usize) -> usize {
    n * (n + 1) / 2
}

impl HalfVec {
    pub fn from_vector(data: DVector<f64>) -> Result<Self> {
        let len = data.len();
        let mut n = 0;
        while triangular_len(n) < len {
            n += 1;
        }
        if n == 0 || triangular_len(n) != len {
            return Err(Error::Dimension(format!("length {len} is not a positive triangular number")));
        }
        Ok(Self { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, data: DVector::zeros(triangular_len(n)) }
    }

    pub fn source_dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn as_vector_mut(&mut self) -> &mut DVector<f64> {
        &mut self.data
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.data
    }
}

pub fn vech(m: &SymMatrix) -> HalfVec {
    let n = m.dim();
    let mut data = DVector::zeros(triangular_len(n));
    let mut k = 0;
    for c in 0..n {
        for r in c..n {
            data[k] = m[(r, c)];
            k += 1;
        }
    }
    HalfVec { n, data }
}

pub fn unvech(v: &HalfVec) -> SymMatrix {
    let n = v.n;
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for c in 0..n {
        for r in c..n {
            m[(r, c)] = v.data[k];
            m[(c, r)] = v.data[k];
            k += 1;
        }
    }
    SymMatrix(m)
}

/// Solves `a x = b` for SPD `a` by Cholesky.
pub fn spd_solve(a: &SymMatrix, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if b.nrows() != a.dim() {
        return Err(Error::Dimension(format!("rhs has {} rows, matrix is {}x{}", b.nrows(), a.dim(), a.dim())));
    }
    Ok(a.cholesky()?.solve(b))
}

pub fn spd_solve_vec(a: &SymMatrix, b: &DVector<f64>) -> Result<DVector<f64>> {
    if b.len() != a.dim() {
        return Err(Error::Dimension(format!("rhs has {} rows, matrix is {}x{}", b.len(), a.dim(), a.dim())));
    }
    Ok(a.cholesky()?.solve(b))
}

/// Rank of `[H; HF; …; HF^{n-1}]`.
pub fn observability_rank(f: &DMatrix<f64>, h: &DMatrix<f64>) -> usize {
    let n = f.nrows();
    let m = h.nrows();
    let mut obs = DMatrix::zeros(m * n, n);
    let mut block = h.clone();
    for k in 0..n {
        obs.view_mut((k * m, 0), (m, n)).copy_from(&block);
        block = &block * f;
    }
    let scale = obs.amax().max(1.0);
    obs.rank(1e-10 * scale)
}

pub fn check_observable(f: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<()> {
    let n = f.nrows();
    let rank = observability_rank(f, h);
    if rank < n {
        return Err(Error::Observability { rank, n });
    }
    Ok(())
}

/// One prior-to-prior Riccati map:
/// `F P Fᵀ − F P Hᵀ (H P Hᵀ + R)⁻¹ H P Fᵀ + Q`.
pub fn riccati_map(
    p: &SymMatrix,
    f: &DMatrix<f64>,
    h: &DMatrix<f64>,
    q: &SymMatrix,
    r: &SymMatrix,
) -> Result<SymMatrix> {
    let ph_t = p.as_matrix() * h.transpose();
    let s = SymMatrix::new(h * &ph_t + r.as_matrix())?;
    let gain_term = &ph_t * spd_solve(&s, &ph_t.transpose())?;
    let posterior = p.as_matrix() - gain_term;
    SymMatrix::new(f * posterior * f.transpose() + q.as_matrix())
}

/// Stabilizing DARE solution by fixed-point Riccati iteration from `P = Q`.
///
/// Stops once successive iterates differ by at most `tol·‖P‖_F`, then
/// verifies the residual bound before returning.
pub fn dare_solve(
    f: &DMatrix<f64>,
    h: &DMatrix<f64>,
    q: &SymMatrix,
    r_bar: &SymMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<SymMatrix> {
    let n = f.nrows();
    if !f.is_square() || h.ncols() != n || q.dim() != n || r_bar.dim() != h.nrows() {
        return Err(Error::Dimension("inconsistent DARE operand shapes".into()));
    }
    check_observable(f, h)?;
    q.cholesky()?;
    r_bar.cholesky()?;

    let mut p = q.clone();
    let mut last_change = f64::INFINITY;
    for _ in 0..max_iter {
        let next = riccati_map(&p, f, h, q, r_bar)?;
        last_change = (next.as_matrix() - p.as_matrix()).norm();
        p = next;
        if last_change <= tol * p.norm() {
            let residual = (riccati_map(&p, f, h, q, r_bar)?.as_matrix() - p.as_matrix()).norm();
            if residual <= tol * p.norm() && p.is_positive_definite() {
                return Ok(p);
            }
        }
    }
    Err(Error::RiccatiDivergence { iterations: max_iter, last_change })
}
