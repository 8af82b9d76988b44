//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Hermitian inputs are
//! symmetrized as `(m + m†)/2` before any spectral decomposition; an
//! asymmetry larger than [`HERMITIAN_TOL`] (relative to the largest entry)
//! is rejected instead of silently repaired.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = nalgebra::DVector<Complex64>;

/// Largest tolerated `|m - m†|` entry, relative to `max(1, |m|_max)`.
pub const HERMITIAN_TOL: f64 = 1e-8;

/// Relative cut below which an eigenvalue is treated as outside the support.
pub const SUPPORT_TOL: f64 = 1e-10;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds a matrix from row-major entries, rejecting NaN/Inf.
pub fn cmatrix(rows: usize, cols: usize, entries: &[Complex64]) -> Result<CMatrix> {
    if entries.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "{} entries for a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    if entries
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::NonFinite);
    }
    Ok(CMatrix::from_row_slice(rows, cols, entries))
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c64(v, 0.0)),
    ))
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn dag(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.trace()
}

/// `|v⟩⟨v|` for a column vector.
pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Hilbert-Schmidt inner product `Tr(a† b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Symmetrizes `m`, failing when it is not square or not Hermitian within
/// [`HERMITIAN_TOL`].
pub fn hermitian_part(m: &CMatrix) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_TOL * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Ok((m + m.adjoint()).scale(0.5))
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: CMatrix,
}

impl HermEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Eigenvalue threshold separating support from kernel.
    pub fn support_cut(&self) -> f64 {
        SUPPORT_TOL * self.max().max(1.0)
    }

    /// `U diag(g(λ)) U†`.
    pub fn reconstruct_with(&self, g: impl Fn(f64) -> f64) -> CMatrix {
        let values: Vec<f64> = self.eigenvalues.iter().map(|&l| g(l)).collect();
        self.reconstruct_values(&values)
    }

    /// `U diag(values) U†`.
    pub fn reconstruct_values(&self, values: &[f64]) -> CMatrix {
        let n = self.dim();
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for k in 0..n {
            let w = values[k];
            for i in 0..n {
                scaled[(i, k)] *= w;
            }
        }
        scaled * u.adjoint()
    }

    /// Orthogonal projector onto the support.
    pub fn support_projector(&self) -> CMatrix {
        let cut = self.support_cut();
        self.reconstruct_with(|l| if l > cut { 1.0 } else { 0.0 })
    }

    pub fn rank(&self) -> usize {
        let cut = self.support_cut();
        self.eigenvalues.iter().filter(|&&l| l > cut).count()
    }
}

pub fn eigh(m: &CMatrix) -> Result<HermEig> {
    let h = hermitian_part(m)?;
    Ok(eigh_unchecked(h))
}

/// Decomposition without the Hermiticity check; the input is symmetrized.
pub(crate) fn eigh_unchecked(h: CMatrix) -> HermEig {
    let n = h.nrows();
    if n == 0 {
        return HermEig {
            eigenvalues: vec![],
            eigenvectors: h,
        };
    }
    let h = (&h + h.adjoint()).scale(0.5);
    let se = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &se.eigenvectors.column(src));
    }
    HermEig {
        eigenvalues,
        eigenvectors,
    }
}

/// Applies `f` to the spectrum of a Hermitian matrix.
///
/// With `support_only`, eigenvalues at or below the support cut map to zero
/// and `f` is never evaluated there (pseudo-function convention, e.g. the
/// pseudo-logarithm). Otherwise `f` must be finite on every eigenvalue.
pub fn spectral_fn(m: &CMatrix, f: impl Fn(f64) -> f64, support_only: bool) -> Result<CMatrix> {
    let eig = eigh(m)?;
    spectral_fn_eig(&eig, f, support_only)
}

pub fn spectral_fn_eig(
    eig: &HermEig,
    f: impl Fn(f64) -> f64,
    support_only: bool,
) -> Result<CMatrix> {
    let cut = eig.support_cut();
    let mut values = Vec::with_capacity(eig.dim());
    for &l in &eig.eigenvalues {
        let v = if support_only && l <= cut { 0.0 } else { f(l) };
        if !v.is_finite() {
            return Err(Error::Domain(l));
        }
        values.push(v);
    }
    Ok(eig.reconstruct_values(&values))
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return vec![];
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}

/// `Tr|m|`, the sum of singular values.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    if hermiticity_defect(m) <= 1e-13 * max_abs(m).max(1e-300) {
        let eig = eigh_unchecked(m.clone());
        return Ok(eig.eigenvalues.iter().map(|l| l.abs()).sum());
    }
    Ok(singular_values(m).iter().sum())
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    Ok(singular_values(m).into_iter().fold(0.0, f64::max))
}

pub fn min_eig(m: &CMatrix) -> Result<f64> {
    Ok(eigh(m)?.min())
}

/// Unitary factor `U` of the polar decomposition `m = U |m|`.
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested u");
    let v_t = svd.v_t.expect("requested v_t");
    u * v_t
}

/// Isometric factor of a tall matrix (`G (G†G)^{-1/2}`).
pub fn polar_isometry(m: &CMatrix) -> CMatrix {
    polar_unitary(m)
}

/// Positive square root of a PSD matrix; eigenvalues at or below the
/// support cut map to zero, so rounding noise in the kernel does not turn
/// into `√ε`-sized entries.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = eigh(m)?;
    let cut = eig.support_cut();
    Ok(eig.reconstruct_with(|l| if l > cut { l.sqrt() } else { 0.0 }))
}

/// Partial trace of an operator on `A ⊗ B` (A-major ordering).
pub fn ptrace_b(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    let mut out = CMatrix::zeros(da, da);
    for a in 0..da {
        for a2 in 0..da {
            let mut s = Complex64::new(0.0, 0.0);
            for b in 0..db {
                s += m[(a * db + b, a2 * db + b)];
            }
            out[(a, a2)] = s;
        }
    }
    out
}

pub fn ptrace_a(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    let mut out = CMatrix::zeros(db, db);
    for b in 0..db {
        for b2 in 0..db {
            let mut s = Complex64::new(0.0, 0.0);
            for a in 0..da {
                s += m[(a * db + b, a * db + b2)];
            }
            out[(b, b2)] = s;
        }
    }
    out
}

/// Transpose on the B factor of an operator on `A ⊗ B`.
pub fn partial_transpose_b(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    let n = da * db;
    let mut out = CMatrix::zeros(n, n);
    for a in 0..da {
        for b in 0..db {
            for a2 in 0..da {
                for b2 in 0..db {
                    out[(a * db + b, a2 * db + b2)] = m[(a * db + b2, a2 * db + b)];
                }
            }
        }
    }
    out
}

/// Column-stacking vectorization: `vec(X)[i + rows*j] = X[i,j]`.
pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Elementwise max distance.
pub fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a - b))
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(0., -1.), c64(0., 1.), c64(0., 0.)])
}

pub fn pauli_z() -> CMatrix {
    diag(&[1.0, -1.0])
}

pub fn paulis() -> [CMatrix; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let norm: f64 = (0..n)
        .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    if norm > 0.25 {
        squarings = (norm / 0.25).log2().ceil() as u32;
    }
    let a = m.scale(0.5f64.powi(squarings as i32));
    let mut result = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=20 {
        term = (&term * &a).scale(1.0 / k as f64);
        result += &term;
        if max_abs(&term) < 1e-18 * max_abs(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}
