//! Divergences and entropies, all in bits.
//!
//! Divergence evaluators accept positive (not necessarily normalized)
//! second arguments through the `_op` variants; the first argument is
//! normalized by its trace.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix, HermEig};
use crate::quantum::{self, BipartiteState, DensityOperator};
use crate::random::{self, sub_seed};
use crate::sdp::{self, hermitian_basis, SdpProblem, Sense};

/// A divergence value, `+∞` exactly when the support condition fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceValue {
    pub value: f64,
    pub support_violated: bool,
}

impl DivergenceValue {
    pub fn finite(value: f64) -> Self {
        DivergenceValue {
            value,
            support_violated: false,
        }
    }

    pub fn infinite() -> Self {
        DivergenceValue {
            value: f64::INFINITY,
            support_violated: true,
        }
    }

    pub fn is_finite(&self) -> bool {
        !self.support_violated
    }
}

fn square_check(rho: &CMatrix, sigma: &CMatrix) -> Result<()> {
    if rho.nrows() != sigma.nrows() || rho.nrows() != rho.ncols() || sigma.nrows() != sigma.ncols()
    {
        return Err(Error::DimensionMismatch(format!(
            "divergence of {}x{} and {}x{} operators",
            rho.nrows(),
            rho.ncols(),
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    Ok(())
}

/// `λ^p` on the support, zero elsewhere.
fn support_power(eig: &HermEig, p: f64) -> CMatrix {
    let cut = eig.support_cut();
    let values: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l > cut { l.powf(p) } else { 0.0 })
        .collect();
    eig.reconstruct_values(&values)
}

/// Weight of `rho` outside the support of `sigma`.
fn weight_outside(rho: &CMatrix, sigma: &HermEig) -> f64 {
    let inside = (rho * sigma.support_projector()).trace().re;
    rho.trace().re - inside
}

fn weight_inside(rho: &CMatrix, sigma: &HermEig) -> f64 {
    (rho * sigma.support_projector()).trace().re
}

fn support_contained(rho: &CMatrix, sigma: &HermEig) -> bool {
    weight_outside(rho, sigma) <= linalg::SUPPORT_TOL * rho.trace().re.max(1e-300)
}

fn orthogonal(rho: &CMatrix, sigma: &HermEig) -> bool {
    weight_inside(rho, sigma) <= linalg::SUPPORT_TOL * rho.trace().re.max(1e-300)
}

/// `ln Σ μ^α` over the positive entries, computed stably for large `α`.
fn log_power_sum(mu: &[f64], alpha: f64) -> f64 {
    let top = mu.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let s: f64 = mu
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| (m / top).powf(alpha))
        .sum();
    alpha * top.ln() + s.ln()
}

/// `D(ρ‖σ) = Tr ρ(log ρ − log σ)`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<DivergenceValue> {
    relative_entropy_op(rho.matrix(), sigma.matrix())
}

pub fn relative_entropy_op(rho: &CMatrix, sigma: &CMatrix) -> Result<DivergenceValue> {
    square_check(rho, sigma)?;
    let er = linalg::eigh(rho)?;
    let es = linalg::eigh(sigma)?;
    if !support_contained(rho, &es) {
        return Ok(DivergenceValue::infinite());
    }
    let tr = rho.trace().re;
    let cut = er.support_cut();
    let a: f64 = er
        .eigenvalues
        .iter()
        .filter(|&&l| l > cut)
        .map(|&l| l * l.ln())
        .sum();
    let scut = es.support_cut();
    let logs: Vec<f64> = es
        .eigenvalues
        .iter()
        .map(|&l| if l > scut { l.ln() } else { 0.0 })
        .collect();
    let b = (rho * es.reconstruct_values(&logs)).trace().re;
    Ok(DivergenceValue::finite((a - b) / tr / LN_2))
}

/// Petz–Rényi divergence `(1/(α−1)) log Tr ρ^α σ^{1−α}`, with the closed
/// limits at `α = 0` (`−log Tr Π_ρ σ`) and `α = 1` (relative entropy).
///
/// For `α < 1` the value is finite unless `ρ ⊥ σ`; for `α ≥ 1` it is
/// infinite unless `supp ρ ⊆ supp σ`.
pub fn renyi_divergence(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    alpha: f64,
) -> Result<DivergenceValue> {
    renyi_divergence_op(rho.matrix(), sigma.matrix(), alpha)
}

pub fn renyi_divergence_op(rho: &CMatrix, sigma: &CMatrix, alpha: f64) -> Result<DivergenceValue> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::OutOfRange(format!(
            "Rényi order α = {alpha} must be finite and ≥ 0"
        )));
    }
    square_check(rho, sigma)?;
    if alpha == 1.0 {
        return relative_entropy_op(rho, sigma);
    }
    let er = linalg::eigh(rho)?;
    let es = linalg::eigh(sigma)?;
    let tr = rho.trace().re;
    if alpha > 1.0 {
        if !support_contained(rho, &es) {
            return Ok(DivergenceValue::infinite());
        }
    } else if orthogonal(rho, &es) {
        return Ok(DivergenceValue::infinite());
    }
    let q = if alpha == 0.0 {
        (er.support_projector() * sigma).trace().re
    } else {
        (support_power(&er, alpha) * support_power(&es, 1.0 - alpha))
            .trace()
            .re
    };
    if !(q > 0.0) {
        return Ok(DivergenceValue::infinite());
    }
    let norm = if alpha == 0.0 { 1.0 } else { tr };
    Ok(DivergenceValue::finite(
        (q / norm).ln() / (alpha - 1.0) / LN_2,
    ))
}

/// Sandwiched divergence
/// `(1/(α−1)) log Tr[(σ^{(1−α)/2α} ρ σ^{(1−α)/2α})^α]`, `α > 0`.
pub fn sandwiched_divergence(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    alpha: f64,
) -> Result<DivergenceValue> {
    sandwiched_divergence_op(rho.matrix(), sigma.matrix(), alpha)
}

pub fn sandwiched_divergence_op(
    rho: &CMatrix,
    sigma: &CMatrix,
    alpha: f64,
) -> Result<DivergenceValue> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::OutOfRange(format!(
            "sandwiched order α = {alpha} must be finite and > 0"
        )));
    }
    square_check(rho, sigma)?;
    if alpha == 1.0 {
        return relative_entropy_op(rho, sigma);
    }
    let es = linalg::eigh(sigma)?;
    if alpha > 1.0 {
        if !support_contained(rho, &es) {
            return Ok(DivergenceValue::infinite());
        }
    } else if orthogonal(rho, &es) {
        return Ok(DivergenceValue::infinite());
    }
    // μ are the squared singular values of σ^{(1−α)/2α} √ρ; taking them
    // from an SVD keeps kernel noise at ε instead of √ε once raised to α.
    let s = support_power(&es, (1.0 - alpha) / (2.0 * alpha));
    let mu: Vec<f64> = linalg::singular_values(&(s * linalg::psd_sqrt(rho)?))
        .iter()
        .map(|v| v * v)
        .collect();
    let log_q = log_power_sum(&mu, alpha);
    if !log_q.is_finite() {
        return Ok(DivergenceValue::infinite());
    }
    let tr = rho.trace().re;
    Ok(DivergenceValue::finite(
        (log_q - tr.ln()) / (alpha - 1.0) / LN_2,
    ))
}

/// `S_α(ρ) = (1/(1−α)) log Tr ρ^α`; `α = 1` is the von Neumann entropy and
/// `α = ∞` gives `−log λ_max`.
pub fn renyi_entropy(rho: &DensityOperator, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::OutOfRange(format!(
            "Rényi order α = {alpha} must be ≥ 0"
        )));
    }
    let eig = linalg::eigh_unchecked(rho.matrix().clone());
    let cut = eig.support_cut();
    let lambda: Vec<f64> = eig
        .eigenvalues
        .iter()
        .copied()
        .filter(|&l| l > cut)
        .collect();
    let v = if alpha == 0.0 {
        (lambda.len() as f64).ln()
    } else if alpha == 1.0 {
        -lambda.iter().map(|&l| l * l.ln()).sum::<f64>()
    } else if alpha.is_infinite() {
        -lambda.iter().copied().fold(0.0, f64::max).ln()
    } else {
        log_power_sum(&lambda, alpha) / (1.0 - alpha)
    };
    Ok(v / LN_2)
}

pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    renyi_entropy(rho, 1.0).expect("α = 1")
}

/// `F(ρ,σ) = ||√ρ √σ||₁` (root fidelity), clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    Ok(fidelity_op(rho.matrix(), sigma.matrix())?.clamp(0.0, 1.0))
}

/// `||√P √Q||₁` for positive operators.
pub fn fidelity_op(p: &CMatrix, q: &CMatrix) -> Result<f64> {
    square_check(p, q)?;
    let m = linalg::psd_sqrt(p)? * linalg::psd_sqrt(q)?;
    Ok(linalg::singular_values(&m).iter().sum())
}

/// `(1/n) D_α(P_{σ^{⊗n}}(ρ^{⊗n}) ‖ σ^{⊗n})`, requiring `dim^n ≤ 64`.
pub fn pinched_approximation(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    alpha: f64,
    n: usize,
) -> Result<DivergenceValue> {
    let d = rho.dim();
    if n == 0 {
        return Err(Error::OutOfRange("n must be ≥ 1".into()));
    }
    if (d as f64).powi(n as i32) > 64.0 {
        return Err(Error::OutOfRange(format!("dimension {d}^{n} exceeds 64")));
    }
    let mut rn = rho.matrix().clone();
    let mut sn = sigma.matrix().clone();
    for _ in 1..n {
        rn = linalg::kron(&rn, rho.matrix());
        sn = linalg::kron(&sn, sigma.matrix());
    }
    let pinched = quantum::pinch_operator(&sn, &rn)?;
    let v = renyi_divergence_op(&pinched, &sn, alpha)?;
    Ok(if v.is_finite() {
        DivergenceValue::finite(v.value / n as f64)
    } else {
        v
    })
}

/// `H(A|B) = S(AB) − S(B)`.
pub fn conditional_entropy(rho: &BipartiteState) -> f64 {
    von_neumann_entropy(&rho.state) - von_neumann_entropy(&rho.marginal_b())
}

pub const CONDITIONAL_RENYI_RESTARTS: usize = 16;

/// `H̃_α(A|B) = −min_{σ_B} D̃_α(ρ_AB ‖ I_A ⊗ σ_B)`, `α ≥ ½`.
///
/// `α = ½` is the max-entropy, `α = 1` the conditional entropy and
/// `α = ∞` the min-entropy, each evaluated in closed or SDP form. Other
/// orders minimize over `σ = BB†/Tr BB†` with BFGS from 16 starts, one of
/// them at `ρ_B`.
pub fn conditional_renyi(rho: &BipartiteState, alpha: f64) -> Result<f64> {
    conditional_renyi_with(rho, alpha, CONDITIONAL_RENYI_RESTARTS, 0x5eed)
}

pub fn conditional_renyi_with(
    rho: &BipartiteState,
    alpha: f64,
    restarts: usize,
    seed: u64,
) -> Result<f64> {
    if !(alpha >= 0.5) {
        return Err(Error::OutOfRange(format!(
            "conditional Rényi entropy needs α ≥ ½, got {alpha}"
        )));
    }
    if alpha.is_infinite() {
        return h_min(rho);
    }
    if alpha == 0.5 {
        return h_max(rho);
    }
    if alpha == 1.0 {
        return Ok(conditional_entropy(rho));
    }
    let (da, db) = (rho.dim_a, rho.dim_b);
    let id_a = CMatrix::identity(da, da);
    let objective = |b: &CMatrix| -> f64 {
        let g = b * b.adjoint();
        let tr = g.trace().re;
        if !(tr > 0.0) {
            return f64::INFINITY;
        }
        let sigma = linalg::kron(&id_a, &g.unscale(tr));
        match sandwiched_divergence_op(rho.matrix(), &sigma, alpha) {
            Ok(v) if v.is_finite() => v.value,
            _ => f64::INFINITY,
        }
    };
    let rb = rho.marginal_b().into_matrix();
    let mixed = rb.scale(0.99) + CMatrix::identity(db, db).scale(0.01 / db as f64);
    let start0 = linalg::psd_sqrt(&mixed)?;
    let best = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let b0 = if r == 0 {
                start0.clone()
            } else {
                let mut rng = random::rng_from_seed(sub_seed(seed, r as u64));
                random::ginibre(db, db, &mut rng)
            };
            let f = |x: &[f64]| objective(&unpack(x, db));
            let (_, fx) = crate::optimize::minimize(&f, pack(&b0), 400, 1e-13);
            fx
        })
        .reduce(|| f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::Solver(
            "conditional Rényi optimization found no finite value".into(),
        ));
    }
    Ok(-best)
}

pub(crate) fn pack(m: &CMatrix) -> Vec<f64> {
    m.iter().flat_map(|z| [z.re, z.im]).collect()
}

pub(crate) fn unpack(x: &[f64], n: usize) -> CMatrix {
    let cols = x.len() / (2 * n);
    CMatrix::from_iterator(n, cols, x.chunks(2).map(|p| c64(p[0], p[1])))
}

fn base2(v: f64) -> f64 {
    v.ln() / LN_2
}

fn optimal(sol: &sdp::SdpSolution) -> Result<f64> {
    sol.optimal_value()
}

/// `2^{−H_min(A|B)} = max{⟨ρ, X⟩ : Tr_A X = I_B, X ⪰ 0}`.
pub fn h_min(rho: &BipartiteState) -> Result<f64> {
    Ok(-base2(q_corr_sdp(rho)?))
}

fn q_corr_sdp(rho: &BipartiteState) -> Result<f64> {
    let (da, db) = (rho.dim_a, rho.dim_b);
    let n = da * db;
    let mut p = SdpProblem::new(vec![n], Sense::Max);
    p.set_objective(0, rho.matrix().clone());
    let id_a = CMatrix::identity(da, da);
    for e in hermitian_basis(db) {
        let b = e.trace().re;
        p.add_constraint(vec![(0, linalg::kron(&id_a, &e))], b);
    }
    optimal(&sdp::solve_default(&p)?)
}

/// Variational form `max_{σ_B} −log ||(I ⊗ σ^{−½}) ρ (I ⊗ σ^{−½})||_∞`,
/// evaluated by multistart BFGS; agrees with [`h_min`] to optimizer accuracy.
pub fn h_min_variational(rho: &BipartiteState, restarts: usize, seed: u64) -> Result<f64> {
    let (da, db) = (rho.dim_a, rho.dim_b);
    let id_a = CMatrix::identity(da, da);
    let objective = |b: &CMatrix| -> f64 {
        let g = b * b.adjoint();
        let tr = g.trace().re;
        let Ok(eig) = linalg::eigh(&g.unscale(tr)) else {
            return f64::INFINITY;
        };
        if eig.min() <= 1e-14 {
            return f64::INFINITY;
        }
        let inv_sqrt = linalg::kron(&id_a, &eig.reconstruct_with(|l| 1.0 / l.sqrt()));
        let m = &inv_sqrt * rho.matrix() * &inv_sqrt;
        base2(linalg::eigh_unchecked((&m + m.adjoint()).scale(0.5)).max())
    };
    let best = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let b0 = if r == 0 {
                CMatrix::identity(db, db)
            } else {
                let mut rng = random::rng_from_seed(sub_seed(seed, r as u64));
                random::ginibre(db, db, &mut rng)
            };
            let f = |x: &[f64]| objective(&unpack(x, db));
            crate::optimize::minimize(&f, pack(&b0), 400, 1e-14).1
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(-best)
}

/// `max_{σ ⪰ 0, Tr σ ≤ 1} F(ρ, c I_A ⊗ σ)²` by the fidelity SDP restricted
/// to `supp ρ`, where the fixed block is positive definite.
fn max_fidelity_sq(rho: &BipartiteState, c: f64) -> Result<f64> {
    let (da, db) = (rho.dim_a, rho.dim_b);
    let eig = linalg::eigh(rho.matrix())?;
    let cut = eig.support_cut();
    let kept: Vec<usize> = (0..eig.dim())
        .filter(|&k| eig.eigenvalues[k] > cut)
        .collect();
    let r = kept.len();
    let n = da * db;
    let v = CMatrix::from_fn(n, r, |i, j| eig.eigenvectors[(i, kept[j])]);
    let rho_c = linalg::diag(&kept.iter().map(|&k| eig.eigenvalues[k]).collect::<Vec<_>>());

    let mut p = SdpProblem::new(vec![2 * r, db, 1], Sense::Max);
    let mut obj = CMatrix::zeros(2 * r, 2 * r);
    for i in 0..r {
        obj[(i, r + i)] = c64(0.5, 0.0);
        obj[(r + i, i)] = c64(0.5, 0.0);
    }
    p.set_objective(0, obj);
    for e in hermitian_basis(r) {
        let mut top = CMatrix::zeros(2 * r, 2 * r);
        top.view_mut((0, 0), (r, r)).copy_from(&e);
        let b = (&e * &rho_c).trace().re;
        p.add_constraint(vec![(0, top)], b);

        let mut bottom = CMatrix::zeros(2 * r, 2 * r);
        bottom.view_mut((r, r), (r, r)).copy_from(&e);
        let lifted = &v * &e * v.adjoint();
        let on_sigma = linalg::ptrace_a(&lifted, da, db).scale(-c);
        p.add_constraint(vec![(0, bottom), (1, on_sigma)], 0.0);
    }
    p.add_constraint(
        vec![(1, CMatrix::identity(db, db)), (2, CMatrix::identity(1, 1))],
        1.0,
    );
    let f = optimal(&sdp::solve_default(&p)?)?;
    Ok(f * f)
}

/// `H_max(A|B) = log max_{σ_B} F(ρ_AB, I_A ⊗ σ_B)²`, `Tr σ_B ≤ 1`.
pub fn h_max(rho: &BipartiteState) -> Result<f64> {
    Ok(base2(max_fidelity_sq(rho, 1.0)?))
}

/// `q_corr = d_A max_Λ F((id ⊗ Λ)ρ, ψ⁺)²`, evaluated as `2^{−H_min}`.
pub fn q_corr(rho: &BipartiteState) -> Result<f64> {
    q_corr_sdp(rho)
}

/// Lower bound on `q_corr` from a seesaw over Stinespring isometries of the
/// channel on `B`; the objective is convex in the isometry, so each
/// polar-decomposition step cannot decrease it.
pub fn q_corr_seesaw(rho: &BipartiteState, restarts: usize, seed: u64) -> f64 {
    let (da, db) = (rho.dim_a, rho.dim_b);
    let r = da * db;
    let psi = quantum::max_entangled_vector(da);
    let p_env = linalg::kron(&linalg::projector(&psi), &CMatrix::identity(r, r));
    let id_a = CMatrix::identity(da, da);
    let rows = da * r;
    let value = |v: &CMatrix| -> (f64, CMatrix) {
        let w = linalg::kron(&id_a, v);
        let x = &p_env * &w * rho.matrix();
        let f = (&x * w.adjoint()).trace().re;
        let mut g = CMatrix::zeros(rows, db);
        for a in 0..da {
            g += x.view((a * rows, a * db), (rows, db));
        }
        (da as f64 * f, g)
    };
    (0..restarts.max(1))
        .into_par_iter()
        .map(|k| {
            let mut rng = random::rng_from_seed(sub_seed(seed, k as u64));
            let mut v = random::random_isometry(rows, db, &mut rng);
            let (mut q, mut g) = value(&v);
            for _ in 0..1000 {
                v = linalg::polar_isometry(&g);
                let (q_new, g_new) = value(&v);
                let gain = q_new - q;
                q = q_new;
                g = g_new;
                if gain < 1e-13 {
                    break;
                }
            }
            q
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// `q_decpl = d_A max_{σ_B} F(ρ_AB, I_A/d_A ⊗ σ_B)²`, equal to `2^{H_max}`.
pub fn q_decpl(rho: &BipartiteState) -> Result<f64> {
    let da = rho.dim_a as f64;
    Ok(da * max_fidelity_sq(rho, 1.0 / da)?)
}
