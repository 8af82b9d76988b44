//! Quantum states, ensembles and measurements.
//!
//! Tensor products use A-major ordering everywhere: the basis vector
//! `|a⟩ ⊗ |b⟩` sits at index `a * dim_b + b`, which is exactly
//! `nalgebra`'s Kronecker product layout.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix, CVector};
use crate::random::{ginibre, rng_from_seed};

const STATE_HERMITIAN_TOL: f64 = 1e-10;
const STATE_PSD_TOL: f64 = 1e-9;
const STATE_TRACE_TOL: f64 = 1e-9;

/// Hermitian, positive, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > STATE_HERMITIAN_TOL * linalg::max_abs(&matrix).max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        let matrix = (&matrix + matrix.adjoint()).scale(0.5);
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > STATE_TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let lo = linalg::eigh_unchecked(matrix.clone()).min();
        if lo < -STATE_PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo:.3e}")));
        }
        Ok(DensityOperator { matrix })
    }

    /// Normalizes a PSD operator to unit trace (tiny negative eigenvalues
    /// from round-off are tolerated by [`DensityOperator::new`]).
    pub fn from_psd(matrix: CMatrix) -> Result<Self> {
        let tr = matrix.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        Self::new(matrix.unscale(tr))
    }

    pub fn pure(psi: &CVector) -> Result<Self> {
        let n = psi.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::new(linalg::projector(&psi.unscale(n)))
    }

    /// Computational basis projector `|k⟩⟨k|`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = c64(1.0, 0.0);
        DensityOperator { matrix: m }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator {
            matrix: CMatrix::identity(dim, dim).unscale(dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn to_json(&self) -> StateJson {
        StateJson::from_matrix(vec![self.dim()], &self.matrix)
    }

    pub fn from_json(j: &StateJson) -> Result<Self> {
        let m = j.to_matrix()?;
        if j.dims.iter().product::<usize>() != m.nrows() {
            return Err(Error::DimensionMismatch("dims do not match matrix".into()));
        }
        Self::new(m)
    }
}

/// State on `A ⊗ B` with its factor dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    pub dim_a: usize,
    pub dim_b: usize,
    pub state: DensityOperator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

impl BipartiteState {
    pub fn new(dim_a: usize, dim_b: usize, state: DensityOperator) -> Result<Self> {
        if dim_a * dim_b != state.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{dim_a}x{dim_b} factors for a state of dimension {}",
                state.dim()
            )));
        }
        Ok(BipartiteState {
            dim_a,
            dim_b,
            state,
        })
    }

    pub fn from_matrix(dim_a: usize, dim_b: usize, m: CMatrix) -> Result<Self> {
        Self::new(dim_a, dim_b, DensityOperator::new(m)?)
    }

    pub fn matrix(&self) -> &CMatrix {
        self.state.matrix()
    }

    pub fn marginal_a(&self) -> DensityOperator {
        partial_trace(self, Subsystem::B)
    }

    pub fn marginal_b(&self) -> DensityOperator {
        partial_trace(self, Subsystem::A)
    }

    pub fn to_json(&self) -> StateJson {
        StateJson::from_matrix(vec![self.dim_a, self.dim_b], self.matrix())
    }

    pub fn from_json(j: &StateJson) -> Result<Self> {
        if j.dims.len() != 2 {
            return Err(Error::DimensionMismatch(
                "bipartite state needs two dims".into(),
            ));
        }
        Self::from_matrix(j.dims[0], j.dims[1], j.to_matrix()?)
    }
}

/// Pure state on `A ⊗ B ⊗ C`.
#[derive(Debug, Clone)]
pub struct TripartitePure {
    pub dims: [usize; 3],
    pub psi: CVector,
}

impl TripartitePure {
    pub fn density(&self) -> CMatrix {
        linalg::projector(&self.psi)
    }

    /// Marginal on `A ⊗ B`.
    pub fn rho_ab(&self) -> BipartiteState {
        let [da, db, dc] = self.dims;
        let m = linalg::ptrace_b(&self.density(), da * db, dc);
        BipartiteState::new(da, db, DensityOperator { matrix: herm(m) }).expect("dims")
    }

    /// Marginal on `A ⊗ C`.
    pub fn rho_ac(&self) -> BipartiteState {
        let [da, db, dc] = self.dims;
        let mut m = CMatrix::zeros(da * dc, da * dc);
        for a in 0..da {
            for c in 0..dc {
                for a2 in 0..da {
                    for c2 in 0..dc {
                        let mut s = Complex64::new(0.0, 0.0);
                        for b in 0..db {
                            s += self.psi[(a * db + b) * dc + c]
                                * self.psi[(a2 * db + b) * dc + c2].conj();
                        }
                        m[(a * dc + c, a2 * dc + c2)] = s;
                    }
                }
            }
        }
        BipartiteState::new(da, dc, DensityOperator { matrix: herm(m) }).expect("dims")
    }
}

fn herm(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()).scale(0.5)
}

/// Ensemble `{p_i, ρ_i}`.
#[derive(Debug, Clone)]
pub struct StateEnsemble {
    probs: Vec<f64>,
    states: Vec<DensityOperator>,
}

impl StateEnsemble {
    pub fn new(probs: Vec<f64>, states: Vec<DensityOperator>) -> Result<Self> {
        if probs.is_empty() || probs.len() != states.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for {} states",
                probs.len(),
                states.len()
            )));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::OutOfRange("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::OutOfRange(format!("probabilities sum to {total}")));
        }
        let d = states[0].dim();
        if states.iter().any(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch(
                "ensemble states differ in dimension".into(),
            ));
        }
        Ok(StateEnsemble { probs, states })
    }

    pub fn uniform(states: Vec<DensityOperator>) -> Result<Self> {
        let n = states.len().max(1);
        Self::new(vec![1.0 / n as f64; states.len()], states)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// `Σ p_i ρ_i`.
    pub fn average(&self) -> CMatrix {
        let d = self.dim();
        self.probs
            .iter()
            .zip(&self.states)
            .fold(CMatrix::zeros(d, d), |acc, (p, s)| {
                acc + s.matrix().scale(*p)
            })
    }

    /// Applies an operation to every member, keeping the probabilities.
    pub fn map_states(
        &self,
        f: impl Fn(&DensityOperator) -> Result<DensityOperator>,
    ) -> Result<StateEnsemble> {
        let states = self.states.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(StateEnsemble {
            probs: self.probs.clone(),
            states,
        })
    }
}

/// Positive-operator-valued measure.
#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<CMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::OutOfRange("empty POVM".into()));
        }
        let d = elements[0].nrows();
        let mut total = CMatrix::zeros(d, d);
        for e in &elements {
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::DimensionMismatch("POVM element dims".into()));
            }
            let lo = linalg::eigh(e)?.min();
            if lo < -1e-9 {
                return Err(Error::InvalidState(format!(
                    "POVM element eigenvalue {lo:.3e}"
                )));
            }
            total += e;
        }
        let resid = linalg::max_diff(&total, &CMatrix::identity(d, d));
        if resid > 1e-9 {
            return Err(Error::InvalidState(format!(
                "POVM completeness residual {resid:.3e}"
            )));
        }
        Ok(Povm { elements })
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// Outcome probabilities `Tr(E_j ρ)`.
    pub fn probabilities(&self, rho: &DensityOperator) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| (e * rho.matrix()).trace().re)
            .collect()
    }
}

pub fn tensor(a: &DensityOperator, b: &DensityOperator) -> BipartiteState {
    let m = linalg::kron(a.matrix(), b.matrix());
    BipartiteState {
        dim_a: a.dim(),
        dim_b: b.dim(),
        state: DensityOperator { matrix: m },
    }
}

/// Traces out `which`, returning the state of the other factor.
pub fn partial_trace(s: &BipartiteState, which: Subsystem) -> DensityOperator {
    let m = match which {
        Subsystem::A => linalg::ptrace_a(s.matrix(), s.dim_a, s.dim_b),
        Subsystem::B => linalg::ptrace_b(s.matrix(), s.dim_a, s.dim_b),
    };
    DensityOperator { matrix: herm(m) }
}

/// `|ψ⁺⟩ = Σ_i |ii⟩/√d` as a vector on `C^d ⊗ C^d`.
pub fn max_entangled_vector(d: usize) -> CVector {
    let mut v = CVector::zeros(d * d);
    let amp = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        v[i * d + i] = c64(amp, 0.0);
    }
    v
}

pub fn max_entangled(dim_a: usize) -> Result<BipartiteState> {
    if dim_a < 2 {
        return Err(Error::OutOfRange(format!(
            "maximally entangled state needs d >= 2, got {dim_a}"
        )));
    }
    let v = max_entangled_vector(dim_a);
    Ok(BipartiteState {
        dim_a,
        dim_b: dim_a,
        state: DensityOperator {
            matrix: linalg::projector(&v),
        },
    })
}

/// Purification on `A ⊗ B ⊗ C` with `dim C = rank(s)`.
pub fn purify(s: &BipartiteState) -> TripartitePure {
    let eig = linalg::eigh_unchecked(s.matrix().clone());
    let cut = eig.support_cut();
    let kept: Vec<usize> = (0..eig.dim())
        .filter(|&k| eig.eigenvalues[k] > cut)
        .collect();
    let dc = kept.len().max(1);
    let n = s.dim_a * s.dim_b;
    let mut psi = CVector::zeros(n * dc);
    for (c, &k) in kept.iter().enumerate() {
        let amp = eig.eigenvalues[k].sqrt();
        for i in 0..n {
            psi[i * dc + c] = eig.eigenvectors[(i, k)] * amp;
        }
    }
    let norm = psi.norm();
    TripartitePure {
        dims: [s.dim_a, s.dim_b, dc],
        psi: psi.unscale(norm),
    }
}

/// Pure-state vector of a (numerically) pure bipartite state.
fn pure_vector(s: &BipartiteState) -> Result<CVector> {
    let eig = linalg::eigh_unchecked(s.matrix().clone());
    let top = eig.max();
    if (1.0 - top) > 1e-9 {
        return Err(Error::InvalidState(format!(
            "state is not pure (largest eigenvalue {top})"
        )));
    }
    let n = eig.dim();
    Ok(eig.eigenvectors.column(n - 1).into_owned())
}

/// Schmidt coefficients of a pure vector on `C^da ⊗ C^db`, descending.
pub fn schmidt_coefficients(psi: &CVector, da: usize, db: usize) -> Vec<f64> {
    let coeff = CMatrix::from_fn(da, db, |a, b| psi[a * db + b]);
    let mut s = linalg::singular_values(&coeff);
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn schmidt_rank_vector(psi: &CVector, da: usize, db: usize) -> usize {
    let s = schmidt_coefficients(psi, da, db);
    let cut = linalg::SUPPORT_TOL * s.first().copied().unwrap_or(0.0).max(1.0);
    s.iter().filter(|&&x| x > cut).count()
}

pub fn schmidt_rank(psi: &BipartiteState) -> Result<usize> {
    let v = pure_vector(psi)?;
    Ok(schmidt_rank_vector(&v, psi.dim_a, psi.dim_b))
}

/// Eigenvalue clusters of a Hermitian matrix: indices into the ascending
/// spectrum, grouped where adjacent eigenvalues agree to 1e-8 relative.
pub(crate) fn eigen_clusters(values: &[f64]) -> Vec<usize> {
    let scale = values
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let mut labels = Vec::with_capacity(values.len());
    let mut current = 0;
    for (k, &v) in values.iter().enumerate() {
        if k > 0 {
            let prev = values[k - 1];
            let tol = (1e-8 * prev.abs().max(v.abs())).max(1e-14 * scale);
            if v - prev > tol {
                current += 1;
            }
        }
        labels.push(current);
    }
    labels
}

/// Pinching `X ↦ Σ_k P_k X P_k` with respect to the eigenprojectors of `sigma`.
pub fn pinch(sigma: &DensityOperator, x: &CMatrix) -> Result<CMatrix> {
    pinch_operator(sigma.matrix(), x)
}

pub fn pinch_operator(sigma: &CMatrix, x: &CMatrix) -> Result<CMatrix> {
    if sigma.nrows() != x.nrows() || x.nrows() != x.ncols() {
        return Err(Error::DimensionMismatch("pinching dims".into()));
    }
    let eig = linalg::eigh(sigma)?;
    let labels = eigen_clusters(&eig.eigenvalues);
    let u = &eig.eigenvectors;
    let mut inner = u.adjoint() * x * u;
    for i in 0..inner.nrows() {
        for j in 0..inner.ncols() {
            if labels[i] != labels[j] {
                inner[(i, j)] = c64(0.0, 0.0);
            }
        }
    }
    Ok(u * inner * u.adjoint())
}

/// Classical-quantum state `Σ p_i |i⟩⟨i| ⊗ ρ_i`.
pub fn make_cq(probs: &[f64], states: &[DensityOperator]) -> Result<BipartiteState> {
    let ens = StateEnsemble::new(probs.to_vec(), states.to_vec())?;
    Ok(cq_state(&ens))
}

pub fn cq_state(ens: &StateEnsemble) -> BipartiteState {
    let n = ens.len();
    let d = ens.dim();
    let mut m = CMatrix::zeros(n * d, n * d);
    for (i, (p, s)) in ens.probs().iter().zip(ens.states()).enumerate() {
        m.view_mut((i * d, i * d), (d, d))
            .copy_from(&s.matrix().scale(*p));
    }
    BipartiteState {
        dim_a: n,
        dim_b: d,
        state: DensityOperator { matrix: m },
    }
}

/// Ginibre-induced random state of the given rank; fully determined by `seed`.
pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<DensityOperator> {
    if rank == 0 || rank > dim {
        return Err(Error::OutOfRange(format!(
            "rank {rank} for dimension {dim}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    Ok(random_density_with(dim, rank, &mut rng))
}

pub(crate) fn random_density_with(
    dim: usize,
    rank: usize,
    rng: &mut crate::random::Rng,
) -> DensityOperator {
    let g = ginibre(dim, rank, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator {
        matrix: herm(m.unscale(tr)),
    }
}

pub(crate) fn random_pure_with(dim: usize, rng: &mut crate::random::Rng) -> DensityOperator {
    random_density_with(dim, 1, rng)
}

/// JSON form `{"dims":[...],"re":[[...]],"im":[[...]]}` (row-major rows).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub dims: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl StateJson {
    pub fn from_matrix(dims: Vec<usize>, m: &CMatrix) -> Self {
        let (re, im) = split_rows(m);
        StateJson { dims, re, im }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        join_rows(&self.re, &self.im)
    }
}

pub(crate) fn split_rows(m: &CMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let re = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect())
        .collect();
    let im = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect())
        .collect();
    (re, im)
}

pub(crate) fn join_rows(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<CMatrix> {
    let rows = re.len();
    if im.len() != rows || rows == 0 {
        return Err(Error::DimensionMismatch("re/im row counts".into()));
    }
    let cols = re[0].len();
    let mut entries = Vec::with_capacity(rows * cols);
    for (r, i) in re.iter().zip(im) {
        if r.len() != cols || i.len() != cols {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        entries.extend(r.iter().zip(i).map(|(&a, &b)| c64(a, b)));
    }
    linalg::cmatrix(rows, cols, &entries)
}
