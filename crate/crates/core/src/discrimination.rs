//! State and channel discrimination: Helstrom bound, guessing-probability
//! SDPs, ancilla-assisted distances and channel norms.
//!
//! Values from multistart local ascent (`p_guess_channels`,
//! `channel_distance`, `square_norm`, the cb-norm side of `cb_norm_check`)
//! are lower bounds; `p_guess` and `diamond_norm` are SDP optima.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix, CVector};
use crate::maps::{self, QuantumMap};
use crate::quantum::{DensityOperator, Povm, StateEnsemble};
use crate::random::{self, sub_seed};
use crate::sdp::{self, hermitian_basis, SdpProblem, Sense};

pub const DEFAULT_RESTARTS: usize = 64;

/// `X = p₁ρ₁ − p₂ρ₂`.
#[derive(Debug, Clone)]
pub struct HelstromMatrix {
    matrix: CMatrix,
}

impl HelstromMatrix {
    pub fn new(p1: f64, rho1: &DensityOperator, rho2: &DensityOperator) -> Result<Self> {
        if !(0.0..=1.0).contains(&p1) {
            return Err(Error::OutOfRange(format!("prior p1 = {p1}")));
        }
        if rho1.dim() != rho2.dim() {
            return Err(Error::DimensionMismatch(
                "Helstrom states differ in dimension".into(),
            ));
        }
        Ok(HelstromMatrix {
            matrix: rho1.matrix().scale(p1) - rho2.matrix().scale(1.0 - p1),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace_norm(&self) -> f64 {
        linalg::trace_norm(&self.matrix).expect("Hermitian by construction")
    }
}

/// `½(1 + ||p₁ρ₁ − p₂ρ₂||₁)`.
pub fn helstrom_guess(p1: f64, rho1: &DensityOperator, rho2: &DensityOperator) -> Result<f64> {
    Ok(0.5 * (1.0 + HelstromMatrix::new(p1, rho1, rho2)?.trace_norm()))
}

#[derive(Debug, Clone)]
pub struct GuessResult {
    pub value: f64,
    pub povm: Povm,
}

/// `max Σ p_i Tr(E_i ρ_i)` over POVMs, solved as an SDP.
pub fn p_guess(ens: &StateEnsemble) -> Result<GuessResult> {
    let weighted: Vec<CMatrix> = ens
        .probs()
        .iter()
        .zip(ens.states())
        .map(|(p, s)| s.matrix().scale(*p))
        .collect();
    p_guess_weighted(&weighted)
}

fn p_guess_weighted(weighted: &[CMatrix]) -> Result<GuessResult> {
    let n = weighted.len();
    if n == 0 {
        return Err(Error::OutOfRange(
            "discrimination needs at least one hypothesis".into(),
        ));
    }
    let d = weighted[0].nrows();
    if n == 1 {
        return Ok(GuessResult {
            value: weighted[0].trace().re,
            povm: Povm::new(vec![CMatrix::identity(d, d)])?,
        });
    }
    let mut p = SdpProblem::new(vec![d; n], Sense::Max);
    for (i, w) in weighted.iter().enumerate() {
        p.set_objective(i, w.clone());
    }
    for e in hermitian_basis(d) {
        let b = e.trace().re;
        p.add_constraint((0..n).map(|i| (i, e.clone())).collect(), b);
    }
    let sol = sdp::solve_default(&p)?;
    sol.optimal_value()?;
    // Elements can come back indefinite at the 1e-8 level; clip to the PSD cone.
    let raw: Vec<CMatrix> = sol
        .x
        .iter()
        .map(|x| linalg::spectral_fn(&(x + x.adjoint()).scale(0.5), |l| l.max(0.0), false))
        .collect::<Result<_>>()?;
    // The solver meets ΣE_i = I to 1e-8; S^{-1/2} E_i S^{-1/2} restores it to round-off.
    let total = raw.iter().fold(CMatrix::zeros(d, d), |acc, e| acc + e);
    let s = linalg::spectral_fn(&total, |l| 1.0 / l.sqrt(), false)?;
    let elements: Vec<CMatrix> = raw
        .iter()
        .map(|e| {
            let m = &s * e * &s;
            (&m + m.adjoint()).scale(0.5)
        })
        .collect();
    let value = elements
        .iter()
        .zip(weighted)
        .map(|(e, w)| (e * w).trace().re)
        .sum();
    Ok(GuessResult {
        value,
        povm: Povm::new(elements)?,
    })
}

fn check_channels(maps_: &[QuantumMap], k: usize) -> Result<(usize, usize)> {
    let first = maps_
        .first()
        .ok_or_else(|| Error::OutOfRange("empty channel list".into()))?;
    let (din, dout) = (first.dim_in(), first.dim_out());
    if maps_
        .iter()
        .any(|m| m.dim_in() != din || m.dim_out() != dout)
    {
        return Err(Error::DimensionMismatch(
            "channels must share dimensions".into(),
        ));
    }
    if k == 0 || k > din {
        return Err(Error::OutOfRange(format!(
            "ancilla dimension k = {k} must lie in 1..={din}"
        )));
    }
    Ok((din, dout))
}

fn top_eigenvector(h: &CMatrix) -> CVector {
    let eig = linalg::eigh_unchecked((h + h.adjoint()).scale(0.5));
    eig.eigenvectors.column(eig.dim() - 1).into_owned()
}

/// `p_guess^{(k)}`: best ancilla-assisted guessing probability with a
/// `k`-dimensional ancilla. Each restart alternates the POVM SDP with the
/// optimal pure input for that POVM (top eigenvector), which never lowers
/// the objective.
pub fn p_guess_channels(
    probs: &[f64],
    channels: &[QuantumMap],
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<f64> {
    if probs.len() != channels.len() {
        return Err(Error::DimensionMismatch("one prior per channel".into()));
    }
    StateEnsemble::new(
        probs.to_vec(),
        vec![DensityOperator::maximally_mixed(1); probs.len()],
    )?;
    let (din, _) = check_channels(channels, k)?;
    let amplified: Vec<QuantumMap> = channels
        .iter()
        .map(|m| maps::amplify(m, k))
        .collect::<Result<_>>()?;
    let duals: Vec<QuantumMap> = amplified.iter().map(maps::adjoint).collect();
    let n_in = k * din;
    let results: Vec<Result<f64>> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = random::rng_from_seed(sub_seed(seed, r as u64));
            let value_at = |psi: &CVector| -> Result<GuessResult> {
                let input = linalg::projector(psi);
                let weighted: Vec<CMatrix> = amplified
                    .iter()
                    .zip(probs)
                    .map(|(m, p)| m.apply(&input).scale(*p))
                    .collect();
                p_guess_weighted(&weighted)
            };
            let mut psi = random::random_unit_vector(n_in, &mut rng);
            let mut g = value_at(&psi)?;
            for _ in 0..500 {
                let mut h = CMatrix::zeros(n_in, n_in);
                for ((dual, p), e) in duals.iter().zip(probs).zip(g.povm.elements()) {
                    h += dual.apply(e).scale(*p);
                }
                let top = top_eigenvector(&h);
                // The plain update moves to `top`; longer steps along the same
                // direction are tried while they keep improving.
                let overlap = psi.dotc(&top);
                let phase = if overlap.norm() > 0.0 {
                    overlap.conj() / overlap.norm()
                } else {
                    c64(1.0, 0.0)
                };
                let step = top * phase - &psi;
                let mut next: Option<(CVector, GuessResult)> = None;
                let mut omega = 1.0;
                while omega <= 64.0 {
                    let trial = (&psi + &step * c64(omega, 0.0)).normalize();
                    let gt = value_at(&trial)?;
                    if next.as_ref().is_some_and(|(_, b)| gt.value <= b.value) {
                        break;
                    }
                    next = Some((trial, gt));
                    omega *= 2.0;
                }
                let (trial, gt) = next.expect("one trial");
                let gain = gt.value - g.value;
                if gain <= 1e-13 {
                    break;
                }
                psi = trial;
                g = gt;
            }
            let best = g.value;
            Ok(best)
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    for r in results {
        best = best.max(r?);
    }
    Ok(best)
}

/// Hermitian unitary `sign(H)` with `sign(0) = 1`.
fn sign(h: &CMatrix) -> CMatrix {
    linalg::eigh_unchecked((h + h.adjoint()).scale(0.5)).reconstruct_with(|l| {
        if l < 0.0 {
            -1.0
        } else {
            1.0
        }
    })
}

/// `D_k^p(E₁,E₂) = max_ρ ||(id_k ⊗ ((1−p)E₁ − pE₂))(ρ)||₁` over inputs on
/// `C^k ⊗ H`, by alternating `S = sign(Δ(ψψ†))` with the top eigenvector of
/// `Δ^#(S)`.
pub fn channel_distance(
    e1: &QuantumMap,
    e2: &QuantumMap,
    p: f64,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("weight p = {p}")));
    }
    let (din, _) = check_channels(&[e1.clone(), e2.clone()], k)?;
    let delta = maps::amplify(&e1.combine(1.0 - p, e2, -p)?, k)?;
    let dual = maps::adjoint(&delta);
    let n_in = k * din;
    let best = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = random::rng_from_seed(sub_seed(seed, r as u64));
            let mut psi = random::random_unit_vector(n_in, &mut rng);
            let mut value = f64::NEG_INFINITY;
            for _ in 0..500 {
                let out = delta.apply(&linalg::projector(&psi));
                let v = linalg::trace_norm(&(&out + out.adjoint()).scale(0.5)).expect("Hermitian");
                let gain = v - value;
                value = value.max(v);
                if gain < 1e-12 {
                    break;
                }
                psi = top_eigenvector(&dual.apply(&sign(&out)));
            }
            value
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(best)
}

/// Diamond norm of a Hermiticity-preserving map by the SDP
/// `max Re⟨J, X⟩` s.t. `[[I⊗ρ₀, X], [X†, I⊗ρ₁]] ⪰ 0`, `ρ₀, ρ₁` states.
pub fn diamond_norm(m: &QuantumMap) -> Result<f64> {
    Ok(diamond_norm_solution(m)?.0)
}

/// Value together with the SDP dual value.
pub fn diamond_norm_solution(m: &QuantumMap) -> Result<(f64, f64)> {
    let (din, dout) = (m.dim_in(), m.dim_out());
    let n = din * dout;
    let j = maps::choi(m);
    let mut p = SdpProblem::new(vec![2 * n, din, din], Sense::Max);
    let mut c = CMatrix::zeros(2 * n, 2 * n);
    c.view_mut((0, n), (n, n)).copy_from(&j.scale(0.5));
    c.view_mut((n, 0), (n, n))
        .copy_from(&j.adjoint().scale(0.5));
    p.set_objective(0, c);
    for e in hermitian_basis(n) {
        let on_state = linalg::ptrace_a(&e, dout, din).scale(-1.0);
        for (offset, blk) in [(0, 1), (n, 2)] {
            let mut w = CMatrix::zeros(2 * n, 2 * n);
            w.view_mut((offset, offset), (n, n)).copy_from(&e);
            p.add_constraint(vec![(0, w), (blk, on_state.clone())], 0.0);
        }
    }
    p.add_constraint(vec![(1, CMatrix::identity(din, din))], 1.0);
    p.add_constraint(vec![(2, CMatrix::identity(din, din))], 1.0);
    let sol = sdp::solve_default(&p)?;
    let v = sol.optimal_value()?;
    Ok((v, sol.dual_value))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CbNormCheck {
    /// Best lower bound on `||id ⊗ Φ^#||_{∞→∞}`.
    pub cb_norm: f64,
    pub diamond_norm: f64,
    pub residual: f64,
}

/// Compares `||Φ^#||_cb` (multistart ascent, ancilla `max(d_in, d_out)`)
/// with `||Φ||_⋄` from the SDP.
pub fn cb_norm_check(m: &QuantumMap, restarts: usize, seed: u64) -> Result<CbNormCheck> {
    let k = m.dim_in().max(m.dim_out());
    // Ψ = id ⊗ Φ^# and its dual id ⊗ Φ
    let psi_map = maps::amplify(&maps::adjoint(m), k)?;
    let psi_dual = maps::amplify(m, k)?;
    let n = psi_map.dim_in();
    let best = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = random::rng_from_seed(sub_seed(seed, r as u64));
            let mut x = random::random_unitary(n, &mut rng);
            let mut value = f64::NEG_INFINITY;
            for _ in 0..500 {
                let y = psi_map.apply(&x);
                let svd = y.clone().svd(true, true);
                let (idx, &s) = svd
                    .singular_values
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .expect("nonempty");
                let gain = s - value;
                value = value.max(s);
                if gain < 1e-12 {
                    break;
                }
                let u = svd.u.as_ref().expect("u").column(idx).into_owned();
                let v = svd.v_t.as_ref().expect("v_t").row(idx).adjoint();
                let g = psi_dual.apply(&(&u * v.adjoint()));
                x = linalg::polar_unitary(&g);
            }
            value
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let diamond = diamond_norm(m)?;
    Ok(CbNormCheck {
        cb_norm: best,
        diamond_norm: diamond,
        residual: (best - diamond).abs(),
    })
}

/// `Tr_A` of a (possibly non-Hermitian) operator on `A ⊗ B`.
fn ptrace_a_general(x: &CMatrix, da: usize, db: usize) -> CMatrix {
    let mut out = CMatrix::zeros(db, db);
    for a in 0..da {
        out += x.view((a * db, a * db), (db, db));
    }
    out
}

/// Square norm `sup ||(I_A⊗B₁) X (I_A⊗B₂)||₁` with `||B_i||₂ = √d_B`.
///
/// Seesaw over the polar unitary `U` and the two factors; each half-step
/// maximizes the bilinear form `Re Tr(U (I⊗B₁) X (I⊗B₂))` exactly, so the
/// returned best value is a lower bound that never decreases per restart.
pub fn square_norm(x: &CMatrix, db: usize, restarts: usize, seed: u64) -> Result<f64> {
    let n = x.nrows();
    if x.ncols() != n {
        return Err(Error::NotSquare(x.nrows(), x.ncols()));
    }
    if db == 0 || n % db != 0 {
        return Err(Error::DimensionMismatch(format!(
            "d_B = {db} does not divide {n}"
        )));
    }
    let da = n / db;
    let radius = (db as f64).sqrt();
    let id_a = CMatrix::identity(da, da);
    let normalize = |g: &CMatrix| -> CMatrix {
        let f = g.norm();
        if f > 0.0 {
            g.adjoint().scale(radius / f)
        } else {
            CMatrix::identity(db, db)
        }
    };
    let best = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = random::rng_from_seed(sub_seed(seed, r as u64));
            let mut b1 = random::ginibre(db, db, &mut rng);
            b1 = b1.scale(radius / b1.norm());
            let mut b2 = random::ginibre(db, db, &mut rng);
            b2 = b2.scale(radius / b2.norm());
            let mut value = f64::NEG_INFINITY;
            for _ in 0..1000 {
                let m = linalg::kron(&id_a, &b1) * x * linalg::kron(&id_a, &b2);
                let v: f64 = linalg::singular_values(&m).iter().sum();
                let gain = v - value;
                value = value.max(v);
                if gain < 1e-13 * (1.0 + v) {
                    break;
                }
                // Re Tr(U M) = ||M||₁ at the polar unitary U = W†
                let u = linalg::polar_unitary(&m).adjoint();
                let g1 = ptrace_a_general(&(x * linalg::kron(&id_a, &b2) * &u), da, db);
                b1 = normalize(&g1);
                let g2 = ptrace_a_general(&(&u * linalg::kron(&id_a, &b1) * x), da, db);
                b2 = normalize(&g2);
            }
            value
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(best)
}

fn unit_vector(x: &[f64]) -> CVector {
    let v = CVector::from_iterator(x.len() / 2, x.chunks(2).map(|p| c64(p[0], p[1])));
    let n = v.norm();
    if n > 0.0 {
        v.unscale(n)
    } else {
        v
    }
}

/// `inf_ψ F((id⊗E₁)(ψ), (id⊗E₂)(ψ))` over pure inputs with an ancilla of
/// the input dimension, by multistart BFGS on the unnormalized amplitude.
pub fn operational_fidelity(
    e1: &QuantumMap,
    e2: &QuantumMap,
    restarts: usize,
    seed: u64,
) -> Result<f64> {
    let (din, _) = check_channels(&[e1.clone(), e2.clone()], 1)?;
    let a1 = maps::amplify(e1, din)?;
    let a2 = maps::amplify(e2, din)?;
    let objective = |x: &[f64]| -> f64 {
        let psi = unit_vector(x);
        if psi.norm() == 0.0 {
            return f64::INFINITY;
        }
        let input = linalg::projector(&psi);
        crate::entropy::fidelity_op(&a1.apply(&input), &a2.apply(&input)).unwrap_or(f64::INFINITY)
    };
    let n = din * din;
    let best = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = random::rng_from_seed(sub_seed(seed, r as u64));
            let start = random::random_unit_vector(n, &mut rng);
            let x0: Vec<f64> = start.iter().flat_map(|z| [z.re, z.im]).collect();
            crate::optimize::minimize(&objective, x0, 300, 1e-12).1
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plus() -> DensityOperator {
        DensityOperator::new(CMatrix::from_element(2, 2, c64(0.5, 0.0))).unwrap()
    }

    fn trine() -> StateEnsemble {
        let states = (0..3)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / 3.0;
                let v =
                    CVector::from_vec(vec![c64((th / 2.0).cos(), 0.0), c64((th / 2.0).sin(), 0.0)]);
                DensityOperator::pure(&v).unwrap()
            })
            .collect();
        StateEnsemble::uniform(states).unwrap()
    }

    #[test]
    fn helstrom_examples() {
        let (z0, z1) = (DensityOperator::basis(2, 0), DensityOperator::basis(2, 1));
        assert!((helstrom_guess(0.5, &z0, &z1).unwrap() - 1.0).abs() < 1e-12);
        assert!((helstrom_guess(0.3, &z0, &z0).unwrap() - 0.7).abs() < 1e-12);
        let v = helstrom_guess(0.5, &z0, &plus()).unwrap();
        assert!((v - 0.5 * (1.0 + 0.5f64.sqrt())).abs() < 1e-12);
        let h = HelstromMatrix::new(0.3, &z0, &plus()).unwrap();
        assert!((h.matrix().trace().re - (0.3 - 0.7)).abs() < 1e-12);
    }

    #[test]
    fn p_guess_examples() {
        let ens = StateEnsemble::uniform(vec![DensityOperator::basis(2, 0), plus()]).unwrap();
        let g = p_guess(&ens).unwrap();
        assert!((g.value - 0.85355339).abs() < 1e-6);
        let ens = StateEnsemble::uniform(vec![
            DensityOperator::basis(2, 0),
            DensityOperator::basis(2, 1),
        ])
        .unwrap();
        assert!((p_guess(&ens).unwrap().value - 1.0).abs() < 1e-7);
        let g = p_guess(&trine()).unwrap();
        assert!((g.value - 2.0 / 3.0).abs() < 1e-6);
        let direct: f64 = g
            .povm
            .elements()
            .iter()
            .zip(trine().states())
            .map(|(e, s)| (e * s.matrix()).trace().re / 3.0)
            .sum();
        assert!((direct - g.value).abs() < 1e-7);
    }

    #[test]
    fn diamond_examples() {
        let cptp = QuantumMap::random_cptp(2, 3, 2, 5);
        assert!((diamond_norm(&cptp).unwrap() - 1.0).abs() < 1e-6);
        for q in [0.1, 0.5, 1.0] {
            let diff = QuantumMap::identity(2)
                .combine(1.0, &QuantumMap::depolarizing(2, q), -1.0)
                .unwrap();
            let (v, dual) = diamond_norm_solution(&diff).unwrap();
            assert!((v - 1.5 * q).abs() < 1e-6, "q={q}: {v}");
            assert!((v - dual).abs() < 1e-6);
        }
        let r0 = QuantumMap::replacer(2, &DensityOperator::basis(2, 0));
        let r1 = QuantumMap::replacer(2, &DensityOperator::basis(2, 1));
        assert!((diamond_norm(&r0.combine(1.0, &r1, -1.0).unwrap()).unwrap() - 2.0).abs() < 1e-6);
        assert!((diamond_norm(&cptp.scale(2.0)).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn channel_distance_examples() {
        let dep = QuantumMap::depolarizing(2, 0.4);
        let id = QuantumMap::identity(2);
        let v = channel_distance(&dep, &dep, 0.3, 1, 4, 1).unwrap();
        assert!((v - 0.4).abs() < 1e-9);
        assert!(channel_distance(&id, &id, 0.5, 2, 4, 1).unwrap().abs() < 1e-12);
        let v = channel_distance(&id, &dep, 0.5, 2, 8, 1).unwrap();
        assert!((v - 0.5 * 1.5 * 0.4).abs() < 1e-6, "{v}");
        let weighted = id.combine(0.5, &dep, -0.5).unwrap();
        assert!((v - diamond_norm(&weighted).unwrap()).abs() < 1e-4);
        let v1 = channel_distance(&id, &dep, 0.5, 1, 8, 1).unwrap();
        assert!(v1 <= v + 1e-6);
    }

    #[test]
    fn p_guess_channel_examples() {
        let dep = QuantumMap::depolarizing(2, 0.7);
        let v = p_guess_channels(&[0.3, 0.7], &[dep.clone(), dep], 2, 2, 1).unwrap();
        assert!((v - 0.7).abs() < 1e-6);
        let r0 = QuantumMap::replacer(2, &DensityOperator::basis(2, 0));
        let r1 = QuantumMap::replacer(2, &DensityOperator::basis(2, 1));
        assert!((p_guess_channels(&[0.5, 0.5], &[r0, r1], 1, 2, 1).unwrap() - 1.0).abs() < 1e-6);
        let pair = [QuantumMap::identity(2), QuantumMap::depolarizing(2, 1.0)];
        let p2 = p_guess_channels(&[0.5, 0.5], &pair, 2, 4, 1).unwrap();
        assert!((p2 - 0.875).abs() < 1e-6, "{p2}");
        let p1 = p_guess_channels(&[0.5, 0.5], &pair, 1, 4, 1).unwrap();
        assert!(p1 <= p2 + 1e-6);
    }

    #[test]
    fn cb_norm_examples() {
        let u =
            QuantumMap::unitary(&random::random_unitary(2, &mut random::rng_from_seed(3))).unwrap();
        let c = cb_norm_check(&u, 4, 1).unwrap();
        assert!((c.cb_norm - 1.0).abs() < 1e-6 && (c.diamond_norm - 1.0).abs() < 1e-6);
        let m = QuantumMap::random_cptp(2, 2, 2, 9);
        assert!(cb_norm_check(&m, 8, 1).unwrap().residual <= 1e-3);
        let c = cb_norm_check(&m.scale(2.0), 8, 1).unwrap();
        assert!((c.cb_norm - 2.0).abs() < 1e-3 && (c.diamond_norm - 2.0).abs() < 1e-6);
    }

    #[test]
    fn square_norm_examples() {
        let v = square_norm(&CMatrix::identity(6, 6), 3, 4, 1).unwrap();
        assert!((v - 6.0).abs() < 1e-8, "{v}");
        assert!(square_norm(&CMatrix::zeros(4, 4), 2, 2, 1).unwrap().abs() < 1e-12);
        let diff = QuantumMap::identity(2)
            .combine(1.0, &QuantumMap::depolarizing(2, 0.5), -1.0)
            .unwrap();
        let v = square_norm(&maps::choi(&diff), 2, 20, 1).unwrap();
        assert!((v - 1.5).abs() < 1e-2, "{v}");
    }

    #[test]
    fn operational_fidelity_examples() {
        let m = QuantumMap::random_cptp(2, 2, 2, 4);
        assert!((operational_fidelity(&m, &m, 2, 1).unwrap() - 1.0).abs() < 1e-6);
        let r0 = QuantumMap::replacer(2, &DensityOperator::basis(2, 0));
        let r1 = QuantumMap::replacer(2, &DensityOperator::basis(2, 1));
        assert!(operational_fidelity(&r0, &r1, 2, 1).unwrap() < 1e-6);

        let flip = QuantumMap::pauli_channel([0.5, 0.0, 0.0, 0.5]).unwrap();
        let id = QuantumMap::identity(2);
        let f = operational_fidelity(&id, &flip, 8, 2).unwrap();
        // grid over ψ = cos a |00⟩ + sin a e^{ib} |11⟩-type inputs and
        // product inputs; F² = ½ + ½⟨I⊗Z⟩²
        let (a_id, a_flip) = (
            maps::amplify(&id, 2).unwrap(),
            maps::amplify(&flip, 2).unwrap(),
        );
        let mut grid_min = f64::INFINITY;
        for i in 0..200 {
            let a = std::f64::consts::PI * i as f64 / 199.0;
            for j in 0..200 {
                let b = 2.0 * std::f64::consts::PI * j as f64 / 199.0;
                let psi = CVector::from_vec(vec![
                    c64(a.cos(), 0.0),
                    c64(0.0, 0.0),
                    c64(0.0, 0.0),
                    c64(a.sin() * b.cos(), a.sin() * b.sin()),
                ]);
                let rho = linalg::projector(&psi);
                let (out1, out2) = (a_id.apply(&rho), a_flip.apply(&rho));
                grid_min = grid_min.min(crate::entropy::fidelity_op(&out1, &out2).unwrap());
            }
        }
        assert!((f - grid_min).abs() < 1e-4, "{f} vs {grid_min}");
        assert!((f - 0.5f64.sqrt()).abs() < 1e-6);
    }
}
