//! Dense primal-dual interior-point solver for small Hermitian SDPs.
//!
//! Primal (minimization form):
//!
//! ```text
//!   min ⟨C, X⟩   s.t.  ⟨A_i, X⟩ = b_i,  X ⪰ 0   (X block diagonal, Hermitian)
//!   max b·y      s.t.  Z = C − Σ y_i A_i ⪰ 0
//! ```
//!
//! with `⟨A, X⟩ = Re Tr(A X)`. Each Hermitian block `H` is mapped to the real
//! symmetric matrix `[[Re H, −Im H], [Im H, Re H]] / 2`, which turns the
//! Hermitian inner product into the real Frobenius one. The iteration is an
//! infeasible-start HKM path-following method with a Mehrotra
//! predictor-corrector and fraction-to-boundary step 0.98.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix};
use crate::maps::MatrixJson;
use crate::quantum::{join_rows, split_rows};

/// Residual and relative-gap level at which an iterate is reported optimal.
const CERTIFIED_TOL: f64 = 1e-8;

type RMatrix = DMatrix<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

/// One linear constraint `Σ_blocks ⟨A_block, X_block⟩ = b`; `None` is a zero block.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub a: Vec<Option<CMatrix>>,
    pub b: f64,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub objective: Vec<CMatrix>,
    pub constraints: Vec<Constraint>,
    pub sense: Sense,
}

impl SdpProblem {
    pub fn new(blocks: Vec<usize>, sense: Sense) -> Self {
        let objective = blocks.iter().map(|&n| CMatrix::zeros(n, n)).collect();
        SdpProblem {
            blocks,
            objective,
            constraints: Vec::new(),
            sense,
        }
    }

    pub fn set_objective(&mut self, block: usize, c: CMatrix) {
        self.objective[block] = c;
    }

    /// Adds `Σ ⟨A, X_block⟩ = b` over the listed blocks.
    pub fn add_constraint(&mut self, terms: Vec<(usize, CMatrix)>, b: f64) {
        let mut a = vec![None; self.blocks.len()];
        for (blk, m) in terms {
            a[blk] = Some(match a[blk].take() {
                Some(prev) => prev + m,
                None => m,
            });
        }
        self.constraints.push(Constraint { a, b });
    }

    fn validate(&self) -> Result<()> {
        if self.objective.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch("objective block count".into()));
        }
        let check = |m: &CMatrix, n: usize| -> Result<()> {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "block of size {}x{} where {n} expected",
                    m.nrows(),
                    m.ncols()
                )));
            }
            let d = crate::linalg::hermiticity_defect(m);
            if d > 1e-12 * crate::linalg::max_abs(m).max(1.0) {
                return Err(Error::NotHermitian(d));
            }
            Ok(())
        };
        for (m, &n) in self.objective.iter().zip(&self.blocks) {
            check(m, n)?;
        }
        for c in &self.constraints {
            if c.a.len() != self.blocks.len() {
                return Err(Error::DimensionMismatch("constraint block count".into()));
            }
            if !c.b.is_finite() {
                return Err(Error::NonFinite);
            }
            for (m, &n) in c.a.iter().zip(&self.blocks) {
                if let Some(m) = m {
                    check(m, n)?;
                }
            }
        }
        if self.blocks.iter().any(|&n| n == 0 || n > 64) {
            return Err(Error::OutOfRange("block sizes must lie in 1..=64".into()));
        }
        if self.constraints.len() > 2000 {
            return Err(Error::OutOfRange("at most 2000 constraints".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> SdpProblemJson {
        let mj = |m: &CMatrix| {
            let (re, im) = split_rows(m);
            MatrixJson { re, im }
        };
        SdpProblemJson {
            blocks: self.blocks.clone(),
            sense: self.sense,
            c: self.objective.iter().map(mj).collect(),
            a: self
                .constraints
                .iter()
                .map(|c| c.a.iter().map(|m| m.as_ref().map(mj)).collect())
                .collect(),
            b: self.constraints.iter().map(|c| c.b).collect(),
        }
    }

    pub fn from_json(j: &SdpProblemJson) -> Result<Self> {
        if j.a.len() != j.b.len() {
            return Err(Error::DimensionMismatch("A and b lengths differ".into()));
        }
        let objective =
            j.c.iter()
                .map(|m| join_rows(&m.re, &m.im))
                .collect::<Result<Vec<_>>>()?;
        let constraints =
            j.a.iter()
                .zip(&j.b)
                .map(|(blocks, &b)| {
                    let a = blocks
                        .iter()
                        .map(|m| m.as_ref().map(|m| join_rows(&m.re, &m.im)).transpose())
                        .collect::<Result<Vec<_>>>()?;
                    Ok(Constraint { a, b })
                })
                .collect::<Result<Vec<_>>>()?;
        let p = SdpProblem {
            blocks: j.blocks.clone(),
            objective,
            constraints,
            sense: j.sense,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Debug dump format `{"blocks":[...],"sense":..,"C":[...],"A":[[...]],"b":[...]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SdpProblemJson {
    pub blocks: Vec<usize>,
    pub sense: Sense,
    #[serde(rename = "C")]
    pub c: Vec<MatrixJson>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Option<MatrixJson>>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    InfeasibleDetected,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: Vec<CMatrix>,
    pub y: Vec<f64>,
    pub z: Vec<CMatrix>,
    /// Objective of the problem as posed (sign restored for `Max`).
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    /// Largest relative equality residual `|⟨A_i,X⟩ − b_i| / max(1,|b_i|)`.
    pub primal_residual: f64,
    /// Improving ray `y` (with `b·y > 0`, `Σ y_i A_i ⪯ 0`) when primal infeasibility was detected.
    pub ray: Option<Vec<f64>>,
}

impl SdpSolution {
    /// Value, or an error unless the solver reached `Optimal`.
    pub fn optimal_value(&self) -> Result<f64> {
        match self.status {
            SdpStatus::Optimal => Ok(self.primal_value),
            s => Err(Error::Solver(format!(
                "{s:?} after {} iterations (gap {:.2e})",
                self.iterations, self.gap
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    pub max_iter: usize,
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub step_fraction: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            max_iter: 200,
            gap_tol: 1e-10,
            feas_tol: 1e-10,
            step_fraction: 0.98,
        }
    }
}

/// `[[Re h, −Im h], [Im h, Re h]]`.
pub fn embed_hermitian(h: &CMatrix) -> RMatrix {
    let n = h.nrows();
    let mut r = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            r[(i, j)] = z.re;
            r[(i + n, j + n)] = z.re;
            r[(i, j + n)] = -z.im;
            r[(i + n, j)] = z.im;
        }
    }
    r
}

/// Inverse of [`embed_hermitian`] averaged over the two copies.
fn recover_hermitian(r: &RMatrix) -> CMatrix {
    let n = r.nrows() / 2;
    CMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (r[(i, j)] + r[(i + n, j + n)]);
        let im = 0.5 * (r[(i + n, j)] - r[(i, j + n)]);
        c64(re, im)
    })
}

/// Orthonormal basis of `n x n` Hermitian matrices under `Re Tr(A B)`.
pub fn hermitian_basis(n: usize) -> Vec<CMatrix> {
    let s = 1.0 / 2f64.sqrt();
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        let mut e = CMatrix::zeros(n, n);
        e[(a, a)] = c64(1.0, 0.0);
        out.push(e);
    }
    for a in 0..n {
        for b in a + 1..n {
            let mut e = CMatrix::zeros(n, n);
            e[(a, b)] = c64(s, 0.0);
            e[(b, a)] = c64(s, 0.0);
            out.push(e);
            let mut f = CMatrix::zeros(n, n);
            f[(a, b)] = c64(0.0, s);
            f[(b, a)] = c64(0.0, -s);
            out.push(f);
        }
    }
    out
}

/// Nonzero entries of a real symmetric constraint block.
struct Sparse {
    entries: Vec<(usize, usize, f64)>,
    /// Distinct column indices, ascending.
    cols: Vec<usize>,
}

impl Sparse {
    fn from_dense(m: &RMatrix) -> Self {
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                if m[(r, c)] != 0.0 {
                    entries.push((r, c, m[(r, c)]));
                }
            }
        }
        let mut cols: Vec<usize> = entries.iter().map(|e| e.1).collect();
        cols.dedup();
        Sparse { entries, cols }
    }

    fn dot(&self, x: &RMatrix) -> f64 {
        self.entries.iter().map(|&(r, c, v)| v * x[(r, c)]).sum()
    }

    fn norm_squared(&self) -> f64 {
        self.entries.iter().map(|e| e.2 * e.2).sum()
    }

    fn add_to(&self, out: &mut RMatrix, scale: f64) {
        for &(r, c, v) in &self.entries {
            out[(r, c)] += scale * v;
        }
    }
}

struct RealProblem {
    sizes: Vec<usize>,
    c: Vec<RMatrix>,
    a: Vec<Vec<Option<Sparse>>>,
    b: DVector<f64>,
}

fn dot(a: &RMatrix, b: &RMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn bdot(a: &[RMatrix], b: &[RMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| dot(x, y)).sum()
}

fn sym(m: &RMatrix) -> RMatrix {
    (m + m.transpose()) * 0.5
}

impl RealProblem {
    fn from(p: &SdpProblem) -> Self {
        let sign = match p.sense {
            Sense::Min => 0.5,
            Sense::Max => -0.5,
        };
        RealProblem {
            sizes: p.blocks.iter().map(|n| 2 * n).collect(),
            c: p.objective
                .iter()
                .map(|m| embed_hermitian(m) * sign)
                .collect(),
            a: p.constraints
                .iter()
                .map(|c| {
                    c.a.iter()
                        .map(|m| {
                            m.as_ref()
                                .map(|m| Sparse::from_dense(&(embed_hermitian(m) * 0.5)))
                        })
                        .collect()
                })
                .collect(),
            b: DVector::from_iterator(p.constraints.len(), p.constraints.iter().map(|c| c.b)),
        }
    }

    fn m(&self) -> usize {
        self.b.len()
    }

    fn apply_a(&self, x: &[RMatrix]) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.a.iter().map(|ai| {
                ai.iter()
                    .zip(x)
                    .map(|(a, xb)| a.as_ref().map_or(0.0, |a| a.dot(xb)))
                    .sum::<f64>()
            }),
        )
    }

    fn apply_at(&self, y: &DVector<f64>) -> Vec<RMatrix> {
        let mut out: Vec<RMatrix> = self.sizes.iter().map(|&n| RMatrix::zeros(n, n)).collect();
        for (i, ai) in self.a.iter().enumerate() {
            if y[i] == 0.0 {
                continue;
            }
            for (blk, a) in ai.iter().enumerate() {
                if let Some(a) = a {
                    a.add_to(&mut out[blk], y[i]);
                }
            }
        }
        out
    }

    /// `G_ij = ⟨A_i, A_j⟩`.
    fn gram(&self) -> RMatrix {
        let m = self.m();
        let mut g = RMatrix::zeros(m, m);
        for i in 0..m {
            let dense: Vec<Option<RMatrix>> = self.a[i]
                .iter()
                .zip(&self.sizes)
                .map(|(a, &n)| {
                    a.as_ref().map(|a| {
                        let mut d = RMatrix::zeros(n, n);
                        a.add_to(&mut d, 1.0);
                        d
                    })
                })
                .collect();
            for j in i..m {
                let v: f64 = dense
                    .iter()
                    .zip(&self.a[j])
                    .map(|(x, y)| match (x, y) {
                        (Some(x), Some(y)) => y.dot(x),
                        _ => 0.0,
                    })
                    .sum();
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }
}

fn fro(blocks: &[RMatrix]) -> f64 {
    blocks.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

/// Eigen-based inverse of a symmetric positive definite block.
fn spd_inverse(m: &RMatrix) -> Option<RMatrix> {
    let se = sym(m).symmetric_eigen();
    if se.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return None;
    }
    let mut v = se.eigenvectors.clone();
    for k in 0..v.ncols() {
        let s = 1.0 / se.eigenvalues[k];
        v.column_mut(k).scale_mut(s);
    }
    Some(v * se.eigenvectors.transpose())
}

/// Largest `α` with `X + α dX ⪰ 0` (infinite when dX is PSD).
fn max_step(x: &RMatrix, dx: &RMatrix) -> f64 {
    let se = sym(x).symmetric_eigen();
    let mut w = se.eigenvectors.clone();
    for k in 0..w.ncols() {
        let l = se.eigenvalues[k].max(1e-300);
        w.column_mut(k).scale_mut(1.0 / l.sqrt());
    }
    let scaled = w.transpose() * dx * &w;
    let lo = sym(&scaled)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if lo >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lo
    }
}

fn block_min_eig(blocks: &[RMatrix]) -> f64 {
    blocks
        .iter()
        .map(|m| {
            sym(m)
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Solves the program; never panics on numerical trouble, reporting it in `status`.
pub fn solve(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    p.validate()?;
    let rp_problem = RealProblem::from(p);
    let gram = rp_problem.gram();
    let ev = gram.symmetric_eigenvalues();
    let glo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let ghi = ev.iter().copied().fold(0.0, f64::max);
    if rp_problem.m() > 0 && glo <= 1e-12 * ghi.max(1.0) {
        return Err(Error::RankDeficient(glo));
    }
    let gram = gram.cholesky().ok_or(Error::RankDeficient(glo))?;
    Ok(Solver {
        rp: rp_problem,
        opts: *opts,
        gram,
    }
    .run(p))
}

pub fn solve_default(p: &SdpProblem) -> Result<SdpSolution> {
    solve(p, &SdpOptions::default())
}

struct Solver {
    rp: RealProblem,
    opts: SdpOptions,
    /// Cholesky factor of the constraint Gram matrix `⟨A_i, A_j⟩`.
    gram: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

struct Direction {
    dx: Vec<RMatrix>,
    dy: DVector<f64>,
    dz: Vec<RMatrix>,
}

impl Solver {
    fn initial_point(&self) -> (Vec<RMatrix>, DVector<f64>, Vec<RMatrix>) {
        let rp = &self.rp;
        let n_total: usize = rp.sizes.iter().sum();
        let sqrt_n = (n_total as f64).sqrt();
        let mut xi: f64 = 10f64.max(sqrt_n);
        let mut eta: f64 = 10f64.max(sqrt_n).max(fro(&rp.c));
        for (i, ai) in rp.a.iter().enumerate() {
            let norm = ai
                .iter()
                .flatten()
                .map(Sparse::norm_squared)
                .sum::<f64>()
                .sqrt();
            xi = xi.max(n_total as f64 * (1.0 + rp.b[i].abs()) / (1.0 + norm));
            eta = eta.max(norm);
        }
        let x = rp
            .sizes
            .iter()
            .map(|&n| RMatrix::identity(n, n) * xi)
            .collect();
        let z = rp
            .sizes
            .iter()
            .map(|&n| RMatrix::identity(n, n) * eta)
            .collect();
        (x, DVector::zeros(rp.m()), z)
    }

    fn run(&self, problem: &SdpProblem) -> SdpSolution {
        let rp = &self.rp;
        let n_total: f64 = rp.sizes.iter().sum::<usize>() as f64;
        let (mut x, mut y, mut z) = self.initial_point();
        let c_norm = fro(&rp.c);
        let mut status = SdpStatus::MaxIter;
        let mut iterations = 0;
        let mut ray = None;
        let mut pinf_history: Vec<f64> = Vec::new();
        let mut stall = 0;
        let mut best: Option<(f64, Vec<RMatrix>, DVector<f64>, Vec<RMatrix>)> = None;

        for iter in 0..self.opts.max_iter {
            iterations = iter;
            let ax = rp.apply_a(&x);
            let r_p = &rp.b - &ax;
            let aty = rp.apply_at(&y);
            let r_d: Vec<RMatrix> =
                rp.c.iter()
                    .zip(&z)
                    .zip(&aty)
                    .map(|((c, z), a)| c - z - a)
                    .collect();
            let pobj = bdot(&rp.c, &x);
            let dobj = rp.b.dot(&y);
            let mu = bdot(&x, &z) / n_total;
            let pinf = r_p
                .iter()
                .zip(rp.b.iter())
                .map(|(r, b)| r.abs() / b.abs().max(1.0))
                .fold(0.0, f64::max);
            let dinf = fro(&r_d) / (1.0 + c_norm);
            let gap = (pobj - dobj).abs();
            pinf_history.push(pinf);

            if pinf <= self.opts.feas_tol
                && dinf <= self.opts.feas_tol
                && gap <= self.opts.gap_tol * (1.0 + pobj.abs())
            {
                status = SdpStatus::Optimal;
                break;
            }
            // Near the optimum Z⁻¹ is ill-conditioned and the primal residual
            // can grow by orders of magnitude per step; keep the best iterate
            // that meets the published invariants and stop once it degrades.
            let merit = pinf.max(dinf).max(gap / (1.0 + pobj.abs()));
            if merit <= CERTIFIED_TOL && best.as_ref().is_none_or(|b| merit < b.0) {
                best = Some((merit, x.clone(), y.clone(), z.clone()));
            } else if best.as_ref().is_some_and(|b| merit > 100.0 * b.0) {
                break;
            }

            let blown_up = y.norm() > 1e6 || fro(&x) > 1e6;
            let stagnant = iter >= 30 && pinf > 0.1 * pinf_history[iter - 30];
            if blown_up || stagnant {
                if let Some(r) = self.primal_infeasibility_ray(&y) {
                    status = SdpStatus::InfeasibleDetected;
                    ray = Some(r);
                    break;
                }
                if self.dual_infeasible(&x) {
                    status = SdpStatus::InfeasibleDetected;
                    break;
                }
            }
            if !(pobj.is_finite() && dobj.is_finite() && mu.is_finite()) {
                status = SdpStatus::NumericalFailure;
                break;
            }

            let z_inv: Option<Vec<RMatrix>> = z.iter().map(spd_inverse).collect();
            // Z can lose definiteness to round-off right at the optimum.
            let Some(z_inv) = z_inv else {
                status = if self.is_certifiably_optimal(&x, &y, &z) {
                    SdpStatus::Optimal
                } else {
                    SdpStatus::NumericalFailure
                };
                break;
            };
            let Some(schur) = self.schur_factor(&x, &z_inv) else {
                if let Some(r) = self.primal_infeasibility_ray(&y) {
                    status = SdpStatus::InfeasibleDetected;
                    ray = Some(r);
                } else {
                    status = if self.is_certifiably_optimal(&x, &y, &z) {
                        SdpStatus::Optimal
                    } else {
                        SdpStatus::NumericalFailure
                    };
                }
                break;
            };

            // predictor
            let rc_aff: Vec<RMatrix> = x.iter().zip(&z).map(|(x, z)| -(x * z)).collect();
            let aff = self.direction(&x, &z_inv, &r_p, &r_d, &rc_aff, &schur);
            let ap = self.step(&x, &aff.dx, 1.0);
            let ad = self.step(&z, &aff.dz, 1.0);
            let x_aff: Vec<RMatrix> = x.iter().zip(&aff.dx).map(|(x, d)| x + d * ap).collect();
            let z_aff: Vec<RMatrix> = z.iter().zip(&aff.dz).map(|(z, d)| z + d * ad).collect();
            let mu_aff = bdot(&x_aff, &z_aff) / n_total;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // corrector
            let rc: Vec<RMatrix> = x
                .iter()
                .zip(&z)
                .zip(aff.dx.iter().zip(&aff.dz))
                .map(|((x, z), (dx, dz))| {
                    let n = x.nrows();
                    RMatrix::identity(n, n) * (sigma * mu) - x * z - dx * dz
                })
                .collect();
            let dir = self.direction(&x, &z_inv, &r_p, &r_d, &rc, &schur);
            let ap = self.step(&x, &dir.dx, self.opts.step_fraction);
            let ad = self.step(&z, &dir.dz, self.opts.step_fraction);
            for (xb, d) in x.iter_mut().zip(&dir.dx) {
                *xb += d * ap;
                *xb = sym(xb);
            }
            for (zb, d) in z.iter_mut().zip(&dir.dz) {
                *zb += d * ad;
                *zb = sym(zb);
            }
            y += &dir.dy * ad;

            if ap.max(ad) < 1e-10 {
                stall += 1;
                if stall >= 5 {
                    status = if self.is_certifiably_optimal(&x, &y, &z) {
                        SdpStatus::Optimal
                    } else {
                        SdpStatus::NumericalFailure
                    };
                    break;
                }
            } else {
                stall = 0;
            }
            iterations = iter + 1;
        }
        if status == SdpStatus::MaxIter && self.is_certifiably_optimal(&x, &y, &z) {
            status = SdpStatus::Optimal;
        }
        if status != SdpStatus::Optimal && status != SdpStatus::InfeasibleDetected {
            if let Some((_, bx, by, bz)) = best {
                (x, y, z) = (bx, by, bz);
                status = SdpStatus::Optimal;
            }
        }
        self.finish(problem, x, y, z, status, iterations, ray)
    }

    /// Accepts a stalled iterate when it already meets the published invariants.
    fn is_certifiably_optimal(&self, x: &[RMatrix], y: &DVector<f64>, z: &[RMatrix]) -> bool {
        let rp = &self.rp;
        let ax = rp.apply_a(x);
        let pinf = (&rp.b - &ax)
            .iter()
            .zip(rp.b.iter())
            .map(|(r, b)| r.abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        let aty = rp.apply_at(y);
        let r_d: Vec<RMatrix> =
            rp.c.iter()
                .zip(z)
                .zip(&aty)
                .map(|((c, z), a)| c - z - a)
                .collect();
        let dinf = fro(&r_d) / (1.0 + fro(&rp.c));
        let pobj = bdot(&rp.c, x);
        let dobj = rp.b.dot(y);
        pinf <= CERTIFIED_TOL
            && dinf <= CERTIFIED_TOL
            && (pobj - dobj).abs() <= CERTIFIED_TOL * (1.0 + pobj.abs())
    }

    fn primal_infeasibility_ray(&self, y: &DVector<f64>) -> Option<Vec<f64>> {
        let by = self.rp.b.dot(y);
        if !(by > 0.0) {
            return None;
        }
        let ybar = y / by;
        let aty = self.rp.apply_at(&ybar);
        // need -Σ ȳ A ⪰ 0
        let neg: Vec<RMatrix> = aty.iter().map(|m| -m).collect();
        let lo = block_min_eig(&neg);
        let scale = fro(&aty).max(1.0);
        if lo >= -1e-8 * scale && y.norm() > 1e6 {
            Some(ybar.iter().copied().collect())
        } else {
            None
        }
    }

    fn dual_infeasible(&self, x: &[RMatrix]) -> bool {
        let cx = bdot(&self.rp.c, x);
        if !(cx < 0.0) {
            return false;
        }
        let xbar: Vec<RMatrix> = x.iter().map(|m| m / (-cx)).collect();
        let ax = self.rp.apply_a(&xbar);
        ax.norm() <= 1e-8 * (1.0 + fro(&xbar)) && fro(x) > 1e6
    }

    /// Cholesky factor of the Schur complement `M_ij = ⟨A_i, X A_j Z⁻¹⟩`,
    /// with diagonal regularization retries.
    fn schur_factor(
        &self,
        x: &[RMatrix],
        z_inv: &[RMatrix],
    ) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        let rp = &self.rp;
        let m = rp.m();
        let mut big_m = RMatrix::zeros(m, m);
        // M_ij = ⟨A_i, X A_j Z⁻¹⟩, with X A_j built column by column and only
        // the columns of Z⁻¹ that A_j touches.
        for j in 0..m {
            let g: Vec<Option<RMatrix>> = rp.a[j]
                .iter()
                .enumerate()
                .map(|(blk, a)| {
                    a.as_ref().map(|a| {
                        let n = x[blk].nrows();
                        let mut xa = RMatrix::zeros(n, n);
                        for &(r, c, v) in &a.entries {
                            xa.column_mut(c).axpy(v, &x[blk].column(r), 1.0);
                        }
                        let mut out = RMatrix::zeros(n, n);
                        for &d in &a.cols {
                            out.ger(1.0, &xa.column(d), &z_inv[blk].row(d).transpose(), 1.0);
                        }
                        out
                    })
                })
                .collect();
            for i in j..m {
                let mut s = 0.0;
                for (ai, gj) in rp.a[i].iter().zip(&g) {
                    if let (Some(ai), Some(gj)) = (ai, gj) {
                        s += ai.dot(gj);
                    }
                }
                big_m[(i, j)] = s;
                big_m[(j, i)] = s;
            }
        }
        let big_m = sym(&big_m);
        if let Some(ch) = big_m.clone().cholesky() {
            return Some(ch);
        }
        let diag_max = (0..m)
            .map(|i| big_m[(i, i)].abs())
            .fold(0.0, f64::max)
            .max(1e-300);
        let mut delta = 1e-14 * diag_max;
        for _ in 0..6 {
            let reg = &big_m + RMatrix::identity(m, m) * delta;
            if let Some(ch) = reg.cholesky() {
                return Some(ch);
            }
            delta *= 100.0;
        }
        None
    }

    /// HKM direction for complementarity target `X Z + dX Z + X dZ = X Z + rc`.
    fn direction(
        &self,
        x: &[RMatrix],
        z_inv: &[RMatrix],
        r_p: &DVector<f64>,
        r_d: &[RMatrix],
        rc: &[RMatrix],
        schur: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
    ) -> Direction {
        let rp = &self.rp;
        // dX = rc Z⁻¹ − X dZ Z⁻¹,  dZ = R_d − Aᵀ dy
        let base: Vec<RMatrix> = rc
            .iter()
            .zip(x)
            .zip(r_d.iter().zip(z_inv))
            .map(|((rc, x), (rd, zi))| rc * zi - x * rd * zi)
            .collect();
        let rhs = r_p - rp.apply_a(&base);
        let dy = schur.solve(&rhs);
        let atdy = rp.apply_at(&dy);
        let dz: Vec<RMatrix> = r_d
            .iter()
            .zip(&atdy)
            .map(|(rd, a)| sym(&(rd - a)))
            .collect();
        let dx: Vec<RMatrix> = rc
            .iter()
            .zip(x)
            .zip(dz.iter().zip(z_inv))
            .map(|((rc, x), (dz, zi))| sym(&(rc * zi - x * dz * zi)))
            .collect();
        // With Z⁻¹ ill-conditioned, A dX drifts from r_p by about ε/μ and the
        // primal residual grows each step; the least-squares correction
        // Aᵀ G⁻¹ (r_p − A dX) restores it at round-off cost.
        let drift = r_p - rp.apply_a(&dx);
        let fix = rp.apply_at(&self.gram.solve(&drift));
        let dx = dx.iter().zip(&fix).map(|(d, f)| d + f).collect();
        Direction { dx, dy, dz }
    }

    fn step(&self, v: &[RMatrix], dv: &[RMatrix], fraction: f64) -> f64 {
        let alpha = v
            .iter()
            .zip(dv)
            .map(|(a, d)| max_step(a, d))
            .fold(f64::INFINITY, f64::min);
        (fraction * alpha).min(1.0)
    }

    fn finish(
        &self,
        problem: &SdpProblem,
        x: Vec<RMatrix>,
        y: DVector<f64>,
        z: Vec<RMatrix>,
        status: SdpStatus,
        iterations: usize,
        ray: Option<Vec<f64>>,
    ) -> SdpSolution {
        let xc: Vec<CMatrix> = x.iter().map(recover_hermitian).collect();
        // Z_real = S(Z)/2
        let zc: Vec<CMatrix> = z.iter().map(|m| recover_hermitian(m).scale(2.0)).collect();
        let min_primal: f64 = problem
            .objective
            .iter()
            .zip(&xc)
            .map(|(c, x)| (c * x).trace().re)
            .sum();
        let dual_min = self.rp.b.dot(&y);
        let (primal_value, dual_value) = match problem.sense {
            Sense::Min => (min_primal, dual_min),
            Sense::Max => (min_primal, -dual_min),
        };
        let primal_residual = problem
            .constraints
            .iter()
            .map(|c| {
                let v: f64 =
                    c.a.iter()
                        .zip(&xc)
                        .map(|(a, x)| a.as_ref().map_or(0.0, |a| (a * x).trace().re))
                        .sum();
                (v - c.b).abs() / c.b.abs().max(1.0)
            })
            .fold(0.0, f64::max);
        SdpSolution {
            x: xc,
            y: y.iter().copied().collect(),
            z: zc,
            primal_value,
            dual_value,
            gap: (primal_value - dual_value).abs(),
            status,
            iterations,
            primal_residual,
            ray,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, diag, identity, pauli_y};

    fn trace_norm_program(h: &CMatrix) -> SdpProblem {
        // min Tr P + Tr N  s.t.  P − N = H
        let n = h.nrows();
        let mut p = SdpProblem::new(vec![n, n], Sense::Min);
        p.set_objective(0, identity(n));
        p.set_objective(1, identity(n));
        for e in hermitian_basis(n) {
            let b = (&e * h).trace().re;
            p.add_constraint(vec![(0, e.clone()), (1, -e)], b);
        }
        p
    }

    #[test]
    fn unit_trace_minimum() {
        let mut p = SdpProblem::new(vec![2], Sense::Min);
        p.set_objective(0, identity(2));
        p.add_constraint(vec![(0, identity(2))], 1.0);
        let s = solve_default(&p).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.primal_value - 1.0).abs() < 1e-9);
        assert!(s.dual_value <= s.primal_value + 1e-9);
    }

    #[test]
    fn trace_norm_of_pauli_z() {
        let s = solve_default(&trace_norm_program(&diag(&[1.0, -1.0]))).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.primal_value - 2.0).abs() < 1e-8);
        let tn = linalg::trace_norm(&diag(&[1.0, -1.0])).unwrap();
        assert!((s.primal_value - tn).abs() < 1e-8);
    }

    #[test]
    fn trace_norm_of_complex_hermitian() {
        let mut rng = crate::random::rng_from_seed(5);
        for _ in 0..5 {
            let h = crate::random::random_hermitian(3, &mut rng);
            let s = solve_default(&trace_norm_program(&h)).unwrap();
            assert_eq!(s.status, SdpStatus::Optimal);
            let tn = linalg::trace_norm(&h).unwrap();
            assert!(
                (s.primal_value - tn).abs() < 1e-7 * (1.0 + tn),
                "{} vs {}",
                s.primal_value,
                tn
            );
            assert!(s.gap <= 1e-8 * (1.0 + s.primal_value.abs()));
            for x in &s.x {
                assert!(linalg::hermiticity_defect(x) < 1e-10);
                assert!(linalg::min_eig(x).unwrap() > -1e-9);
            }
        }
    }

    #[test]
    fn embedding_examples() {
        let r = embed_hermitian(&diag(&[1.0, 2.0]));
        assert_eq!(r[(0, 0)], 1.0);
        assert_eq!(r[(3, 3)], 2.0);
        assert_eq!(r[(0, 2)], 0.0);

        let y = embed_hermitian(&pauli_y());
        assert!(y.transpose() == y);
        let mut ev: Vec<f64> = y.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let expected = [-1.0, -1.0, 1.0, 1.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }

        let mut rng = crate::random::rng_from_seed(2);
        for _ in 0..20 {
            let a = crate::random::random_hermitian(3, &mut rng);
            let b = crate::random::random_hermitian(3, &mut rng);
            let lhs = dot(&embed_hermitian(&a), &embed_hermitian(&b));
            let rhs = (&a * &b).trace().re;
            assert!((lhs - 2.0 * rhs).abs() < 1e-12);
            let back = recover_hermitian(&embed_hermitian(&a));
            assert!(linalg::max_diff(&back, &a) < 1e-15);
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let mut p = SdpProblem::new(vec![2], Sense::Min);
        p.set_objective(0, identity(2));
        p.add_constraint(vec![(0, identity(2))], 1.0);
        p.add_constraint(vec![(0, identity(2).scale(2.0))], 2.0);
        assert!(matches!(solve_default(&p), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn infeasible_program_is_detected() {
        // X ⪰ 0 with Tr X = −1
        let mut p = SdpProblem::new(vec![2], Sense::Min);
        p.set_objective(0, identity(2));
        p.add_constraint(vec![(0, identity(2))], -1.0);
        let s = solve_default(&p).unwrap();
        assert_eq!(s.status, SdpStatus::InfeasibleDetected);
        let ray = s.ray.expect("ray");
        assert!(ray[0] * -1.0 > 0.0);
    }

    #[test]
    fn deterministic_iterates() {
        let mut rng = crate::random::rng_from_seed(9);
        let h = crate::random::random_hermitian(3, &mut rng);
        let a = solve_default(&trace_norm_program(&h)).unwrap();
        let b = solve_default(&trace_norm_program(&h)).unwrap();
        assert_eq!(a.primal_value.to_bits(), b.primal_value.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn json_dump_round_trip() {
        let p = trace_norm_program(&diag(&[0.5, -0.25]));
        let text = serde_json::to_string(&p.to_json()).unwrap();
        assert!(text.starts_with("{\"blocks\":[2,2]"));
        let back = SdpProblem::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        let s = solve_default(&back).unwrap();
        assert!((s.primal_value - 0.75).abs() < 1e-8);
    }
}
