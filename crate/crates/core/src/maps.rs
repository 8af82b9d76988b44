//! Linear maps on operators.
//!
//! A [`QuantumMap`] stores its superoperator in the column-stacking
//! convention, `vec(Φ(X)) = S vec(X)` with `vec(X)[i + d*j] = X[i,j]`.
//! The Choi matrix is `J(Φ) = Σ_ij Φ(|i⟩⟨j|) ⊗ |i⟩⟨j|`, output factor
//! first, so it lives on `Out ⊗ In`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix, CVector};
use crate::quantum::{join_rows, split_rows, DensityOperator};
use crate::random::{random_isometry, rng_from_seed, sub_seed};

/// Tolerance below which a certified negative value is reported.
pub const CERTIFIED_NEGATIVE_TOL: f64 = 1e-8;
pub const DEFAULT_RESTARTS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumMap {
    dim_in: usize,
    dim_out: usize,
    superop: CMatrix,
}

impl QuantumMap {
    /// Wraps a superoperator, requiring Hermiticity preservation.
    pub fn new(dim_in: usize, dim_out: usize, superop: CMatrix) -> Result<Self> {
        if superop.nrows() != dim_out * dim_out || superop.ncols() != dim_in * dim_in {
            return Err(Error::DimensionMismatch(format!(
                "superoperator {}x{} for dims {dim_in} -> {dim_out}",
                superop.nrows(),
                superop.ncols()
            )));
        }
        if superop
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        let map = QuantumMap {
            dim_in,
            dim_out,
            superop,
        };
        let j = map.choi();
        let defect = linalg::hermiticity_defect(&j);
        if defect > 1e-9 * linalg::max_abs(&j).max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        Ok(map)
    }

    /// Builds the map from its action on matrix units `|i⟩⟨j|`.
    pub fn from_fn(dim_in: usize, dim_out: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Result<Self> {
        let mut s = CMatrix::zeros(dim_out * dim_out, dim_in * dim_in);
        for j in 0..dim_in {
            for i in 0..dim_in {
                let mut e = CMatrix::zeros(dim_in, dim_in);
                e[(i, j)] = c64(1.0, 0.0);
                let out = f(&e);
                s.set_column(i + dim_in * j, &linalg::vectorize(&out));
            }
        }
        Self::new(dim_in, dim_out, s)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn superop(&self) -> &CMatrix {
        &self.superop
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let v = &self.superop * linalg::vectorize(x);
        linalg::unvectorize(&v, self.dim_out, self.dim_out)
    }

    /// Applies the map to a state; fails if the image is not a state.
    pub fn apply_state(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "state of dim {} into map with input dim {}",
                rho.dim(),
                self.dim_in
            )));
        }
        DensityOperator::new(self.apply(rho.matrix()))
    }

    pub fn identity(d: usize) -> Self {
        QuantumMap {
            dim_in: d,
            dim_out: d,
            superop: CMatrix::identity(d * d, d * d),
        }
    }

    /// Conjugation `ρ ↦ U ρ U†`.
    pub fn unitary(u: &CMatrix) -> Result<Self> {
        from_kraus(std::slice::from_ref(u))
    }

    pub fn transposition(d: usize) -> Self {
        Self::from_fn(d, d, |x| x.transpose()).expect("transposition preserves Hermiticity")
    }

    /// `ρ ↦ (1-q) ρ + q Tr(ρ) I/d`.
    pub fn depolarizing(d: usize, q: f64) -> Self {
        Self::from_fn(d, d, |x| {
            x.scale(1.0 - q) + CMatrix::identity(d, d) * (x.trace() * (q / d as f64))
        })
        .expect("depolarizing")
    }

    /// `ρ ↦ Tr(ρ) σ`.
    pub fn replacer(dim_in: usize, sigma: &DensityOperator) -> Self {
        let s = sigma.matrix().clone();
        Self::from_fn(dim_in, s.nrows(), |x| s.clone() * x.trace()).expect("replacer")
    }

    /// Qubit amplitude damping with decay probability `p`.
    pub fn amplitude_damping(p: f64) -> Self {
        let k0 = linalg::diag(&[1.0, (1.0 - p).sqrt()]);
        let mut k1 = CMatrix::zeros(2, 2);
        k1[(0, 1)] = c64(p.sqrt(), 0.0);
        from_kraus(&[k0, k1]).expect("amplitude damping")
    }

    /// Qubit map with `σ_i ↦ λ_i σ_i` and `I ↦ I`.
    pub fn pauli_diagonal(lambdas: [f64; 3]) -> Self {
        let p = linalg::paulis();
        Self::from_fn(2, 2, |x| {
            let mut out = CMatrix::identity(2, 2) * (x.trace() * 0.5);
            for k in 0..3 {
                let coeff = (&p[k] * x).trace() * 0.5;
                out += &p[k] * (coeff * lambdas[k]);
            }
            out
        })
        .expect("pauli map")
    }

    /// Pauli channel `ρ ↦ Σ_k p_k σ_k ρ σ_k` with `σ_0 = I`.
    pub fn pauli_channel(probs: [f64; 4]) -> Result<Self> {
        let p = linalg::paulis();
        let ops = [
            CMatrix::identity(2, 2).scale(probs[0].sqrt()),
            p[0].scale(probs[1].sqrt()),
            p[1].scale(probs[2].sqrt()),
            p[2].scale(probs[3].sqrt()),
        ];
        from_kraus(&ops)
    }

    /// Random CPTP map from a Haar isometry with `kraus_rank` Kraus operators.
    pub fn random_cptp(dim_in: usize, dim_out: usize, kraus_rank: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let v = random_isometry(dim_out * kraus_rank, dim_in, &mut rng);
        let ops: Vec<CMatrix> = (0..kraus_rank)
            .map(|k| v.rows(k * dim_out, dim_out).into_owned())
            .collect();
        from_kraus(&ops).expect("random channel")
    }

    /// Random unital CPTP map: a convex mixture of random unitary conjugations.
    pub fn random_mixed_unitary(d: usize, terms: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let weights: Vec<f64> = (0..terms)
            .map(|_| rand::Rng::random::<f64>(&mut rng) + 0.1)
            .collect();
        let total: f64 = weights.iter().sum();
        let ops: Vec<CMatrix> = weights
            .iter()
            .map(|w| crate::random::random_unitary(d, &mut rng).scale((w / total).sqrt()))
            .collect();
        from_kraus(&ops).expect("mixed unitary")
    }

    pub fn scale(&self, a: f64) -> Self {
        QuantumMap {
            superop: self.superop.scale(a),
            ..self.clone()
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &QuantumMap, b: f64) -> Result<Self> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return Err(Error::DimensionMismatch("maps differ in dimensions".into()));
        }
        Ok(QuantumMap {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            superop: self.superop.scale(a) + other.superop.scale(b),
        })
    }

    pub fn choi(&self) -> CMatrix {
        choi(self)
    }

    pub fn to_json(&self) -> MapJson {
        let (re, im) = split_rows(&self.superop);
        MapJson {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            superop: Some(MatrixJson { re, im }),
            kraus: None,
        }
    }

    pub fn from_json(j: &MapJson) -> Result<Self> {
        match (&j.superop, &j.kraus) {
            (Some(s), None) => Self::new(j.dim_in, j.dim_out, join_rows(&s.re, &s.im)?),
            (None, Some(ks)) => {
                let ops = ks
                    .iter()
                    .map(|k| join_rows(&k.re, &k.im))
                    .collect::<Result<Vec<_>>>()?;
                let m = from_kraus(&ops)?;
                if m.dim_in != j.dim_in || m.dim_out != j.dim_out {
                    return Err(Error::DimensionMismatch(
                        "kraus dims disagree with header".into(),
                    ));
                }
                Ok(m)
            }
            _ => Err(Error::Serde(
                "map needs exactly one of `superop` or `kraus`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// `{"dimIn","dimOut","superop":{re,im}}`, or a Kraus list in place of `superop`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MapJson {
    #[serde(rename = "dimIn")]
    pub dim_in: usize,
    #[serde(rename = "dimOut")]
    pub dim_out: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub superop: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kraus: Option<Vec<MatrixJson>>,
}

/// `ρ ↦ Σ K_i ρ K_i†`.
pub fn from_kraus(ops: &[CMatrix]) -> Result<QuantumMap> {
    let first = ops
        .first()
        .ok_or_else(|| Error::OutOfRange("empty Kraus list".into()))?;
    let (dim_out, dim_in) = (first.nrows(), first.ncols());
    let mut s = CMatrix::zeros(dim_out * dim_out, dim_in * dim_in);
    for k in ops {
        if k.nrows() != dim_out || k.ncols() != dim_in {
            return Err(Error::DimensionMismatch(
                "Kraus operators differ in shape".into(),
            ));
        }
        s += k.map(|z| z.conj()).kronecker(k);
    }
    QuantumMap::new(dim_in, dim_out, s)
}

/// Kraus operators from the Choi spectrum (only meaningful for CP maps;
/// negative Choi eigenvalues are dropped).
pub fn kraus(m: &QuantumMap) -> Vec<CMatrix> {
    let j = choi(m);
    let eig = linalg::eigh_unchecked(j);
    let cut = eig.support_cut();
    let (dout, din) = (m.dim_out, m.dim_in);
    (0..eig.dim())
        .rev()
        .filter(|&k| eig.eigenvalues[k] > cut)
        .map(|k| {
            let amp = eig.eigenvalues[k].sqrt();
            CMatrix::from_fn(dout, din, |a, i| eig.eigenvectors[(a * din + i, k)] * amp)
        })
        .collect()
}

pub fn choi(m: &QuantumMap) -> CMatrix {
    let (din, dout) = (m.dim_in, m.dim_out);
    let mut j = CMatrix::zeros(dout * din, dout * din);
    for i in 0..din {
        for jj in 0..din {
            let col = m.superop.column(i + din * jj);
            for a in 0..dout {
                for b in 0..dout {
                    j[(a * din + i, b * din + jj)] = col[a + dout * b];
                }
            }
        }
    }
    j
}

pub fn from_choi(dim_in: usize, dim_out: usize, j: &CMatrix) -> Result<QuantumMap> {
    let n = dim_in * dim_out;
    if j.nrows() != n || j.ncols() != n {
        return Err(Error::DimensionMismatch("Choi matrix size".into()));
    }
    let mut s = CMatrix::zeros(dim_out * dim_out, dim_in * dim_in);
    for i in 0..dim_in {
        for jj in 0..dim_in {
            for a in 0..dim_out {
                for b in 0..dim_out {
                    s[(a + dim_out * b, i + dim_in * jj)] = j[(a * dim_in + i, b * dim_in + jj)];
                }
            }
        }
    }
    QuantumMap::new(dim_in, dim_out, s)
}

/// `f ∘ g`.
pub fn compose(f: &QuantumMap, g: &QuantumMap) -> Result<QuantumMap> {
    if g.dim_out != f.dim_in {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose: inner output {} vs outer input {}",
            g.dim_out, f.dim_in
        )));
    }
    Ok(QuantumMap {
        dim_in: g.dim_in,
        dim_out: f.dim_out,
        superop: &f.superop * &g.superop,
    })
}

/// Inverse map; requires the smallest singular value of the superoperator
/// to exceed 1e-10 of the largest.
pub fn inverse(m: &QuantumMap) -> Result<QuantumMap> {
    if m.dim_in != m.dim_out {
        return Err(Error::DimensionMismatch(
            "inverse of a non-square map".into(),
        ));
    }
    let svd = m.superop.clone().svd(true, true);
    let sv = &svd.singular_values;
    let largest = sv.iter().copied().fold(0.0, f64::max);
    let smallest = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smallest > 1e-10 * largest) {
        return Err(Error::NonInvertible { smallest, largest });
    }
    let u = svd.u.expect("u");
    let v_t = svd.v_t.expect("v_t");
    let mut inv_s = CMatrix::zeros(sv.len(), sv.len());
    for k in 0..sv.len() {
        inv_s[(k, k)] = c64(1.0 / sv[k], 0.0);
    }
    let superop = v_t.adjoint() * inv_s * u.adjoint();
    Ok(QuantumMap {
        dim_in: m.dim_in,
        dim_out: m.dim_out,
        superop,
    })
}

/// Heisenberg-picture dual `Φ^#`, defined by `Tr(A† Φ(B)) = Tr(Φ^#(A)† B)`.
pub fn adjoint(m: &QuantumMap) -> QuantumMap {
    QuantumMap {
        dim_in: m.dim_out,
        dim_out: m.dim_in,
        superop: m.superop.adjoint(),
    }
}

/// `id_k ⊗ m`, ancilla factor first.
pub fn amplify(m: &QuantumMap, k: usize) -> Result<QuantumMap> {
    if k == 0 {
        return Err(Error::OutOfRange("ancilla dimension must be >= 1".into()));
    }
    if k == 1 {
        return Ok(m.clone());
    }
    let (din, dout) = (m.dim_in, m.dim_out);
    QuantumMap::from_fn(k * din, k * dout, |x| {
        let mut out = CMatrix::zeros(k * dout, k * dout);
        for alpha in 0..k {
            for beta in 0..k {
                let block = x.view((alpha * din, beta * din), (din, din)).into_owned();
                if block.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                    continue;
                }
                out.view_mut((alpha * dout, beta * dout), (dout, dout))
                    .copy_from(&m.apply(&block));
            }
        }
        out
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CptpReport {
    pub cp: bool,
    pub tp: bool,
    pub min_choi_eig: f64,
    pub tp_residual: f64,
}

pub fn is_cptp(m: &QuantumMap) -> CptpReport {
    let j = choi(m);
    let min_choi_eig = linalg::eigh_unchecked(j.clone()).min();
    let tr_out = linalg::ptrace_a(&j, m.dim_out, m.dim_in);
    let tp_residual =
        linalg::operator_norm(&(tr_out - CMatrix::identity(m.dim_in, m.dim_in))).expect("square");
    CptpReport {
        cp: min_choi_eig >= -1e-9,
        tp: tp_residual <= 1e-9,
        min_choi_eig,
        tp_residual,
    }
}

/// `(m(I) == I, ||m(I) - I||_∞)`.
pub fn is_unital(m: &QuantumMap) -> Result<(bool, f64)> {
    if m.dim_in != m.dim_out {
        return Err(Error::DimensionMismatch(
            "unitality needs equal dims".into(),
        ));
    }
    let d = m.dim_in;
    let resid =
        linalg::operator_norm(&(m.apply(&CMatrix::identity(d, d)) - CMatrix::identity(d, d)))?;
    Ok((resid <= 1e-9, resid))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositivityVerdict {
    /// The witness is an explicit vector with a negative Choi expectation.
    CertifiedNegative,
    /// No negative value found; not a proof of k-positivity.
    HeuristicallyNonnegative,
}

#[derive(Debug, Clone)]
pub struct PositivityCertificate {
    pub k: usize,
    pub min_value: f64,
    /// Unit vector on `Out ⊗ In` with Schmidt rank at most `k`.
    pub witness: CVector,
    pub restarts_used: usize,
    pub verdict: PositivityVerdict,
}

/// Searches for a Schmidt-rank-`k` vector with negative Choi expectation.
///
/// For `k >= min(dim_out, dim_in)` the minimum is the smallest Choi
/// eigenvalue. Otherwise each restart alternates exact minimizations over
/// the two factors of `ψ = Σ_{j<k} l_j ⊗ r_j`, keeping the fixed factor
/// orthonormal so every half-step is a Hermitian eigenproblem.
pub fn k_positivity(
    m: &QuantumMap,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<PositivityCertificate> {
    if k == 0 || k > m.dim_in {
        return Err(Error::OutOfRange(format!(
            "k = {k} for input dimension {}",
            m.dim_in
        )));
    }
    let j = choi(m);
    let j = (&j + j.adjoint()).scale(0.5);
    let (da, db) = (m.dim_out, m.dim_in);
    if k >= da.min(db) {
        let eig = linalg::eigh_unchecked(j);
        let w = eig.eigenvectors.column(0).into_owned();
        return Ok(certificate(k, eig.min(), w, 0));
    }
    let restarts = restarts.max(1);
    let results: Vec<(f64, CVector)> = (0..restarts)
        .into_par_iter()
        .map(|r| schmidt_constrained_min(&j, da, db, k, sub_seed(seed, r as u64)))
        .collect();
    let (_, best_vec) =
        results
            .into_iter()
            .fold((f64::INFINITY, CVector::zeros(0)), |acc, cand| {
                if cand.0 < acc.0 {
                    cand
                } else {
                    acc
                }
            });
    let value = (best_vec.adjoint() * &j * &best_vec)[(0, 0)].re;
    Ok(certificate(k, value, best_vec, restarts))
}

fn certificate(
    k: usize,
    min_value: f64,
    witness: CVector,
    restarts_used: usize,
) -> PositivityCertificate {
    let verdict = if min_value < -CERTIFIED_NEGATIVE_TOL {
        PositivityVerdict::CertifiedNegative
    } else {
        PositivityVerdict::HeuristicallyNonnegative
    };
    PositivityCertificate {
        k,
        min_value,
        witness,
        restarts_used,
        verdict,
    }
}

/// Orthonormal basis of the column space of a `n x k` matrix (QR, Q factor).
fn orthonormal_columns(m: &CMatrix) -> CMatrix {
    m.clone().qr().q()
}

/// One local minimization of `⟨ψ|J|ψ⟩` over unit `ψ` of Schmidt rank <= k.
fn schmidt_constrained_min(
    j: &CMatrix,
    da: usize,
    db: usize,
    k: usize,
    seed: u64,
) -> (f64, CVector) {
    let mut rng = rng_from_seed(seed);
    // fixed factor, orthonormal columns
    let mut r = random_isometry(db, k, &mut rng);
    let mut value = f64::INFINITY;
    let mut psi = CVector::zeros(da * db);
    for _ in 0..500 {
        // free L: psi[a*db+b] = Σ_j L[a,j] R[b,j]
        let t = CMatrix::from_fn(da * db, da * k, |row, col| {
            let (a, b) = (row / db, row % db);
            let (a2, jj) = (col / k, col % k);
            if a == a2 {
                r[(b, jj)]
            } else {
                c64(0.0, 0.0)
            }
        });
        let reduced = t.adjoint() * j * &t;
        let eig = linalg::eigh_unchecked(reduced);
        let x = eig.eigenvectors.column(0).into_owned();
        let l = CMatrix::from_fn(da, k, |a, jj| x[a * k + jj]);
        let after_l = eig.min();

        // fix orthonormal L, free R
        let ql = orthonormal_columns(&l);
        let t = CMatrix::from_fn(da * db, db * k, |row, col| {
            let (a, b) = (row / db, row % db);
            let (b2, jj) = (col / k, col % k);
            if b == b2 {
                ql[(a, jj)]
            } else {
                c64(0.0, 0.0)
            }
        });
        let reduced = t.adjoint() * j * &t;
        let eig = linalg::eigh_unchecked(reduced);
        let x = eig.eigenvectors.column(0).into_owned();
        // the L-step optimum is feasible here, so this never goes up
        let new_value = eig.min().min(after_l);
        psi = &t * &x;
        let rr = CMatrix::from_fn(db, k, |b, jj| x[b * k + jj]);
        r = orthonormal_columns(&rr);
        let improved = value - new_value;
        value = new_value;
        if improved.abs() < 1e-15 * value.abs().max(1.0) {
            break;
        }
    }
    let n = psi.norm();
    let psi = psi.unscale(n);
    ((psi.adjoint() * j * &psi)[(0, 0)].re, psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_diff, pauli_x, pauli_z};
    use crate::quantum::{random_density, schmidt_rank_vector};
    use crate::random::{random_unitary, rng_from_seed};

    #[test]
    fn unitary_superop_is_conj_kron() {
        let u = random_unitary(2, &mut rng_from_seed(1));
        let m = QuantumMap::unitary(&u).unwrap();
        let expected = u.map(|z| z.conj()).kronecker(&u);
        assert!(max_diff(m.superop(), &expected) < 1e-14);
        let rho = random_density(2, 2, 3).unwrap();
        let out = m.apply(rho.matrix());
        assert!(max_diff(&out, &(&u * rho.matrix() * u.adjoint())) < 1e-13);
    }

    #[test]
    fn amplitude_damping_full_decay_is_constant() {
        let m = QuantumMap::amplitude_damping(1.0);
        for seed in 0..5 {
            let rho = random_density(2, 2, seed).unwrap();
            let out = m.apply(rho.matrix());
            assert!(max_diff(&out, DensityOperator::basis(2, 0).matrix()) < 1e-14);
        }
        assert!(is_cptp(&m).tp && is_cptp(&m).cp);
    }

    #[test]
    fn trace_preserving_kraus_is_cptp() {
        let m = QuantumMap::random_cptp(3, 2, 4, 5);
        let ks = kraus(&m);
        let sum = ks
            .iter()
            .fold(CMatrix::zeros(3, 3), |acc, k| acc + k.adjoint() * k);
        assert!(max_diff(&sum, &CMatrix::identity(3, 3)) < 1e-12);
        let r = is_cptp(&m);
        assert!(r.cp && r.tp);
    }

    #[test]
    fn choi_conventions() {
        let j = choi(&QuantumMap::identity(2));
        let psi = crate::quantum::max_entangled(2).unwrap();
        assert!(max_diff(&j, &psi.matrix().scale(2.0)) < 1e-14);

        let dep = QuantumMap::depolarizing(2, 1.0);
        assert!(max_diff(&choi(&dep), &CMatrix::identity(4, 4).scale(0.5)) < 1e-14);

        let m = QuantumMap::random_cptp(2, 3, 2, 9);
        assert!((choi(&m).trace().re - 2.0).abs() < 1e-12);
        let back = from_choi(2, 3, &choi(&m)).unwrap();
        assert!(max_diff(back.superop(), m.superop()) < 1e-12);
    }

    #[test]
    fn compose_examples() {
        let g = QuantumMap::random_cptp(2, 2, 2, 1);
        let c = compose(&QuantumMap::identity(2), &g).unwrap();
        assert!(max_diff(c.superop(), g.superop()) < 1e-14);
        let mut rng = rng_from_seed(4);
        let (u, v) = (random_unitary(2, &mut rng), random_unitary(2, &mut rng));
        let uv = compose(
            &QuantumMap::unitary(&u).unwrap(),
            &QuantumMap::unitary(&v).unwrap(),
        )
        .unwrap();
        assert!(
            max_diff(
                uv.superop(),
                QuantumMap::unitary(&(&u * &v)).unwrap().superop()
            ) < 1e-13
        );
        let rho = random_density(2, 2, 8).unwrap();
        let f = QuantumMap::random_cptp(2, 2, 3, 2);
        let fg = compose(&f, &g).unwrap();
        assert!(max_diff(&fg.apply(rho.matrix()), &f.apply(&g.apply(rho.matrix()))) < 1e-12);
        assert!(compose(&QuantumMap::identity(3), &g).is_err());
    }

    #[test]
    fn compose_is_associative() {
        for s in 0..10 {
            let a = QuantumMap::random_cptp(2, 2, 2, 3 * s);
            let b = QuantumMap::random_cptp(2, 2, 3, 3 * s + 1);
            let c = QuantumMap::random_cptp(2, 2, 1, 3 * s + 2);
            let left = compose(&compose(&a, &b).unwrap(), &c).unwrap();
            let right = compose(&a, &compose(&b, &c).unwrap()).unwrap();
            assert!(max_diff(left.superop(), right.superop()) < 1e-10);
        }
    }

    #[test]
    fn inverse_examples() {
        let u = random_unitary(2, &mut rng_from_seed(6));
        let inv = inverse(&QuantumMap::unitary(&u).unwrap()).unwrap();
        let expected = QuantumMap::unitary(&u.adjoint()).unwrap();
        assert!(max_diff(inv.superop(), expected.superop()) < 1e-12);

        assert!(matches!(
            inverse(&QuantumMap::depolarizing(2, 1.0)),
            Err(Error::NonInvertible { .. })
        ));

        let lam = [0.5, -0.3, 0.8];
        let inv = inverse(&QuantumMap::pauli_diagonal(lam)).unwrap();
        let expected = QuantumMap::pauli_diagonal([1.0 / lam[0], 1.0 / lam[1], 1.0 / lam[2]]);
        assert!(max_diff(inv.superop(), expected.superop()) < 1e-12);

        let g = QuantumMap::random_cptp(2, 2, 2, 12);
        let id = compose(&inverse(&g).unwrap(), &g).unwrap();
        assert!(max_diff(id.superop(), QuantumMap::identity(2).superop()) < 1e-8);
    }

    #[test]
    fn adjoint_duality() {
        let m = QuantumMap::random_cptp(2, 3, 2, 21);
        let a = adjoint(&m);
        for i in 0..3 {
            for jx in 0..3 {
                let mut e = CMatrix::zeros(3, 3);
                e[(i, jx)] = c64(1.0, 0.0);
                for p in 0..2 {
                    for q in 0..2 {
                        let mut f = CMatrix::zeros(2, 2);
                        f[(p, q)] = c64(1.0, 0.0);
                        let lhs = linalg::hs_inner(&e, &m.apply(&f));
                        let rhs = linalg::hs_inner(&a.apply(&e), &f);
                        assert!((lhs - rhs).norm() < 1e-10);
                    }
                }
            }
        }
        let (unital, _) = is_unital(&adjoint(&QuantumMap::random_cptp(2, 2, 3, 1))).unwrap();
        assert!(unital);
        assert!(max_diff(adjoint(&a).superop(), m.superop()) < 1e-15);
        let u = random_unitary(2, &mut rng_from_seed(3));
        let adj = adjoint(&QuantumMap::unitary(&u).unwrap());
        assert!(
            max_diff(
                adj.superop(),
                QuantumMap::unitary(&u.adjoint()).unwrap().superop()
            ) < 1e-13
        );
    }

    #[test]
    fn amplify_examples() {
        let m = QuantumMap::random_cptp(2, 2, 2, 30);
        assert_eq!(amplify(&m, 1).unwrap(), m);
        let id = amplify(&QuantumMap::identity(2), 3).unwrap();
        assert!(max_diff(id.superop(), QuantumMap::identity(6).superop()) < 1e-15);
        let a = random_density(2, 2, 1).unwrap();
        let rho = random_density(2, 2, 2).unwrap();
        let lhs = amplify(&m, 2)
            .unwrap()
            .apply(&linalg::kron(a.matrix(), rho.matrix()));
        let rhs = linalg::kron(a.matrix(), &m.apply(rho.matrix()));
        assert!(max_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn cptp_reports() {
        let u = random_unitary(3, &mut rng_from_seed(2));
        let r = is_cptp(&QuantumMap::unitary(&u).unwrap());
        assert!(r.cp && r.tp);
        let t = is_cptp(&QuantumMap::transposition(2));
        assert!(!t.cp && t.tp);
        assert!((t.min_choi_eig + 1.0).abs() < 1e-12);
        let mix = QuantumMap::random_cptp(2, 2, 2, 1)
            .combine(0.3, &QuantumMap::random_cptp(2, 2, 3, 2), 0.7)
            .unwrap();
        let r = is_cptp(&mix);
        assert!(r.cp && r.tp);
    }

    #[test]
    fn unitality_examples() {
        assert!(
            is_unital(&QuantumMap::pauli_diagonal([0.2, -0.4, 0.9]))
                .unwrap()
                .0
        );
        let (u, resid) = is_unital(&QuantumMap::amplitude_damping(0.3)).unwrap();
        // m(I) = diag(1 + p, 1 - p)
        assert!(!u);
        assert!((resid - 0.3).abs() < 1e-12);
    }

    #[test]
    fn k_positivity_examples() {
        let m = QuantumMap::random_cptp(2, 2, 2, 4);
        let c = k_positivity(&m, 2, 8, 1).unwrap();
        assert!(c.min_value >= -1e-9);
        let exact = linalg::min_eig(&choi(&m)).unwrap();
        assert!((c.min_value - exact).abs() < 1e-12);

        let t = QuantumMap::transposition(2);
        let c1 = k_positivity(&t, 1, 64, 7).unwrap();
        assert_eq!(c1.verdict, PositivityVerdict::HeuristicallyNonnegative);
        assert!(c1.min_value > -1e-12 && c1.min_value < 1e-6);
        assert_eq!(schmidt_rank_vector(&c1.witness, 2, 2), 1);
        let c2 = k_positivity(&t, 2, 64, 7).unwrap();
        assert_eq!(c2.verdict, PositivityVerdict::CertifiedNegative);
        assert!((c2.min_value + 1.0).abs() < 1e-6);

        assert!(k_positivity(&t, 0, 4, 0).is_err());
        assert!(k_positivity(&t, 3, 4, 0).is_err());
    }

    #[test]
    fn k_positivity_qutrit_monotone_in_k() {
        // reduction map X ↦ Tr(X) I - X is 1-positive but not 2-positive
        let d = 3;
        let red = QuantumMap::from_fn(d, d, |x| CMatrix::identity(d, d) * x.trace() - x).unwrap();
        let c1 = k_positivity(&red, 1, 32, 3).unwrap();
        let c2 = k_positivity(&red, 2, 32, 3).unwrap();
        let c3 = k_positivity(&red, 3, 32, 3).unwrap();
        assert_eq!(c1.verdict, PositivityVerdict::HeuristicallyNonnegative);
        assert_eq!(c2.verdict, PositivityVerdict::CertifiedNegative);
        assert!(c2.min_value <= c1.min_value + 1e-12);
        assert!(c3.min_value <= c2.min_value + 1e-12);
        assert!(schmidt_rank_vector(&c2.witness, 3, 3) <= 2);
        let j = choi(&red);
        let q = (c2.witness.adjoint() * &j * &c2.witness)[(0, 0)].re;
        assert!((q - c2.min_value).abs() < 1e-10);
    }

    #[test]
    fn choi_is_hermitian_for_hermiticity_preserving() {
        let m = QuantumMap::random_cptp(2, 2, 2, 3)
            .combine(1.0, &QuantumMap::transposition(2), -0.5)
            .unwrap();
        assert!(linalg::hermiticity_defect(&choi(&m)) < 1e-10);
        let x = pauli_x();
        let z = pauli_z();
        assert!(from_kraus(&[x, CMatrix::zeros(3, 3)]).is_err());
        let _ = z;
    }

    #[test]
    fn map_json_round_trip() {
        let m = QuantumMap::random_cptp(2, 2, 3, 44);
        let text = serde_json::to_string(&m.to_json()).unwrap();
        assert!(text.contains("\"dimIn\":2"));
        let back = QuantumMap::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.superop().as_slice(), m.superop().as_slice());
        let kraus_text =
            r#"{"dimIn":2,"dimOut":2,"kraus":[{"re":[[1,0],[0,1]],"im":[[0,0],[0,0]]}]}"#;
        let id = QuantumMap::from_json(&serde_json::from_str(kraus_text).unwrap()).unwrap();
        assert!(max_diff(id.superop(), QuantumMap::identity(2).superop()) < 1e-15);
    }
}
