//! Time-dependent dynamical maps `Λ_t`: GKSL propagation, exact reduction
//! from a system-environment Hamiltonian, intermediate maps
//! `V_{t,s} = Λ_t Λ_s^{-1}` and per-step divisibility certificates.
//!
//! Divisibility is only ever certified between consecutive grid points; a
//! finer grid makes a finer claim.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, kron, CMatrix, CVector};
use crate::maps::{self, PositivityVerdict, QuantumMap};
use crate::quantum::DensityOperator;
use crate::random::{self, sub_seed};

/// Scalar rate `γ(t)` in inverse-time units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateFn {
    Constant {
        c: f64,
    },
    /// `a sin(ω t + φ)`.
    Sinusoid {
        a: f64,
        omega: f64,
        phi: f64,
    },
    /// `−tanh t`.
    NegTanh,
    /// Linear interpolation between `(t, γ)` knots, constant outside.
    PiecewiseLinear {
        knots: Vec<[f64; 2]>,
    },
}

impl RateFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            RateFn::Constant { c } => *c,
            RateFn::Sinusoid { a, omega, phi } => a * (omega * t + phi).sin(),
            RateFn::NegTanh => -t.tanh(),
            RateFn::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return f64::NAN;
                }
                if t <= knots[0][0] {
                    return knots[0][1];
                }
                for w in knots.windows(2) {
                    let ([t0, g0], [t1, g1]) = (w[0], w[1]);
                    if t <= t1 {
                        return g0 + (g1 - g0) * (t - t0) / (t1 - t0);
                    }
                }
                knots[knots.len() - 1][1]
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, RateFn::Constant { .. })
    }

    fn validate(&self) -> Result<()> {
        if let RateFn::PiecewiseLinear { knots } = self {
            if knots.is_empty() {
                return Err(Error::OutOfRange(
                    "piecewise_linear needs at least one knot".into(),
                ));
            }
            if knots.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                return Err(Error::OutOfRange(
                    "piecewise_linear knots must have increasing times".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `L_t(ρ) = −i[H, ρ] + Σ_i γ_i(t) (V_i ρ V_i† − ½{V_i†V_i, ρ})`.
#[derive(Debug, Clone)]
pub struct GkslGenerator {
    dim: usize,
    h_eff: CMatrix,
    jumps: Vec<CMatrix>,
    rates: Vec<RateFn>,
}

impl GkslGenerator {
    pub fn new(h_eff: CMatrix, jumps: Vec<CMatrix>, rates: Vec<RateFn>) -> Result<Self> {
        let dim = h_eff.nrows();
        if h_eff.ncols() != dim {
            return Err(Error::NotSquare(h_eff.nrows(), h_eff.ncols()));
        }
        let defect = linalg::hermiticity_defect(&h_eff);
        if defect > 1e-10 * linalg::max_abs(&h_eff).max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        if jumps.len() != rates.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} jump operators but {} rates",
                jumps.len(),
                rates.len()
            )));
        }
        if jumps.iter().any(|v| v.nrows() != dim || v.ncols() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "jump operators must be {dim}x{dim}"
            )));
        }
        for r in &rates {
            r.validate()?;
        }
        let g = GkslGenerator {
            dim,
            h_eff,
            jumps,
            rates,
        };
        // Tr L_t(X) = 0  ⇔  vec(I)† L_t = 0
        let probe = g.superop_with(&vec![1.0; g.rates.len()]);
        let vec_i = linalg::vectorize(&CMatrix::identity(dim, dim));
        let row = vec_i.adjoint() * &probe;
        let resid = row.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if resid > 1e-10 * linalg::max_abs(&probe).max(1.0) {
            return Err(Error::OutOfRange(format!(
                "generator is not trace-annihilating ({resid:.2e})"
            )));
        }
        Ok(g)
    }

    /// Pure dissipation with zero Hamiltonian.
    pub fn dissipative(dim: usize, jumps: Vec<CMatrix>, rates: Vec<RateFn>) -> Result<Self> {
        Self::new(CMatrix::zeros(dim, dim), jumps, rates)
    }

    /// Seeded Markovian generator: random Hamiltonian and `n_jumps` Ginibre
    /// jump operators at constant rates in `[0.2, 1.2)`.
    pub fn random_markovian(dim: usize, n_jumps: usize, seed: u64) -> Result<Self> {
        let mut rng = random::rng_from_seed(seed);
        let h = random::random_hermitian(dim, &mut rng).scale(0.5);
        let jumps: Vec<CMatrix> = (0..n_jumps)
            .map(|_| random::ginibre(dim, dim, &mut rng).unscale((2 * dim) as f64))
            .collect();
        let rates = (0..n_jumps)
            .map(|_| RateFn::Constant {
                c: 0.2 + rand::Rng::random::<f64>(&mut rng),
            })
            .collect();
        Self::new(h, jumps, rates)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h_eff(&self) -> &CMatrix {
        &self.h_eff
    }

    pub fn jumps(&self) -> &[CMatrix] {
        &self.jumps
    }

    pub fn rates(&self) -> &[RateFn] {
        &self.rates
    }

    pub fn is_time_independent(&self) -> bool {
        self.rates.iter().all(RateFn::is_constant)
    }

    pub fn rates_at(&self, t: f64) -> Vec<f64> {
        self.rates.iter().map(|r| r.eval(t)).collect()
    }

    /// Column-stacking superoperator of `L_t`.
    pub fn superop_at(&self, t: f64) -> Result<CMatrix> {
        let g = self.rates_at(t);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(self.superop_with(&g))
    }

    fn superop_with(&self, gammas: &[f64]) -> CMatrix {
        let d = self.dim;
        let id = CMatrix::identity(d, d);
        let minus_i = c64(0.0, -1.0);
        let mut l = (kron(&id, &self.h_eff) - kron(&self.h_eff.transpose(), &id)) * minus_i;
        for (v, &gamma) in self.jumps.iter().zip(gammas) {
            if gamma == 0.0 {
                continue;
            }
            let vdv = v.adjoint() * v;
            let term = kron(&v.map(|z| z.conj()), v)
                - kron(&id, &vdv).scale(0.5)
                - kron(&vdv.transpose(), &id).scale(0.5);
            l += term.scale(gamma);
        }
        l
    }
}

/// Closed system-plus-environment description `Λ_t(ρ) = Tr_E(U_t (ρ⊗ρ_E) U_t†)`.
#[derive(Debug, Clone)]
pub struct TotalSystemModel {
    dim_s: usize,
    dim_e: usize,
    h_total: CMatrix,
    env_state: DensityOperator,
}

impl TotalSystemModel {
    pub fn new(
        dim_s: usize,
        dim_e: usize,
        h_total: CMatrix,
        env_state: DensityOperator,
    ) -> Result<Self> {
        let n = dim_s * dim_e;
        if n > 64 {
            return Err(Error::OutOfRange(format!("dimS*dimE = {n} exceeds 64")));
        }
        if h_total.nrows() != n || h_total.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "total Hamiltonian must be {n}x{n}"
            )));
        }
        let defect = linalg::hermiticity_defect(&h_total);
        if defect > 1e-10 * linalg::max_abs(&h_total).max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        if env_state.dim() != dim_e {
            return Err(Error::DimensionMismatch(
                "environment state dimension".into(),
            ));
        }
        Ok(TotalSystemModel {
            dim_s,
            dim_e,
            h_total,
            env_state,
        })
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }
}

/// A family `Λ_{t_j}` on a grid starting at `t_0 = 0` with `Λ_0 = id`.
#[derive(Debug, Clone)]
pub struct DynamicalMap {
    grid: Vec<f64>,
    maps: Vec<QuantumMap>,
    provenance: String,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid[0] != 0.0 {
        return Err(Error::OutOfRange("time grid must start at 0".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite);
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::OutOfRange(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

impl DynamicalMap {
    /// Wraps externally supplied maps, checking `Λ_0 = id` within 1e-10.
    pub fn new(
        grid: Vec<f64>,
        maps: Vec<QuantumMap>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        check_grid(&grid)?;
        if maps.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} maps for {} grid points",
                maps.len(),
                grid.len()
            )));
        }
        let d = maps[0].dim_in();
        if maps.iter().any(|m| m.dim_in() != d || m.dim_out() != d) {
            return Err(Error::DimensionMismatch(
                "all maps must act on the same space".into(),
            ));
        }
        let dev = linalg::max_diff(maps[0].superop(), QuantumMap::identity(d).superop());
        if dev > 1e-10 {
            return Err(Error::OutOfRange(format!(
                "Λ_0 deviates from identity by {dev:.2e}"
            )));
        }
        Ok(DynamicalMap {
            grid,
            maps,
            provenance: provenance.into(),
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn maps(&self) -> &[QuantumMap] {
        &self.maps
    }

    pub fn map(&self, j: usize) -> &QuantumMap {
        &self.maps[j]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim_in()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }
}

/// Integrates `Λ̇_t = L_t Λ_t` on `grid`.
///
/// Time-independent generators are exponentiated exactly. Otherwise each
/// grid interval is covered by classical RK4, doubling the step count until
/// the Richardson error estimate is at most `tol` per unit time.
pub fn propagate(gen: &GkslGenerator, grid: &[f64], tol: f64) -> Result<DynamicalMap> {
    check_grid(grid)?;
    if !(tol > 0.0) {
        return Err(Error::OutOfRange("tolerance must be positive".into()));
    }
    let d = gen.dim;
    for (j, &t) in grid.iter().enumerate() {
        if gen.rates_at(t).iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite.at_time(j, t));
        }
    }
    let provenance = format!("gksl(dim={d}, jumps={})", gen.jumps.len());
    let mut maps = Vec::with_capacity(grid.len());
    if gen.is_time_independent() {
        let l = gen.superop_at(0.0)?;
        for (j, &t) in grid.iter().enumerate() {
            let s = linalg::expm(&(&l * c64(t, 0.0)));
            maps.push(QuantumMap::new(d, d, s).map_err(|e| e.at_time(j, t))?);
        }
    } else {
        let mut s = CMatrix::identity(d * d, d * d);
        maps.push(QuantumMap::identity(d));
        for j in 1..grid.len() {
            s = rk4_interval(gen, &s, grid[j - 1], grid[j], tol)
                .map_err(|e| e.at_time(j, grid[j]))?;
            maps.push(QuantumMap::new(d, d, s.clone()).map_err(|e| e.at_time(j, grid[j]))?);
        }
    }
    DynamicalMap::new(grid.to_vec(), maps, provenance)
}

fn rk4_run(gen: &GkslGenerator, s0: &CMatrix, t0: f64, t1: f64, n: usize) -> Result<CMatrix> {
    let h = (t1 - t0) / n as f64;
    let mut s = s0.clone();
    let hc = c64(h, 0.0);
    for step in 0..n {
        let t = t0 + h * step as f64;
        let l0 = gen.superop_at(t)?;
        let lm = gen.superop_at(t + 0.5 * h)?;
        let l1 = gen.superop_at(t + h)?;
        let k1 = &l0 * &s;
        let k2 = &lm * (&s + &k1 * (hc * 0.5));
        let k3 = &lm * (&s + &k2 * (hc * 0.5));
        let k4 = &l1 * (&s + &k3 * hc);
        s += (k1 + k2 * c64(2.0, 0.0) + k3 * c64(2.0, 0.0) + k4) * (hc / 6.0);
    }
    Ok(s)
}

fn rk4_interval(gen: &GkslGenerator, s0: &CMatrix, t0: f64, t1: f64, tol: f64) -> Result<CMatrix> {
    let dt = t1 - t0;
    let mut n = ((dt / 0.05).ceil() as usize).max(1);
    let mut coarse = rk4_run(gen, s0, t0, t1, n)?;
    loop {
        let fine = rk4_run(gen, s0, t0, t1, 2 * n)?;
        let err = linalg::max_diff(&fine, &coarse) / 15.0;
        if err <= tol * dt {
            return Ok(&fine + (&fine - &coarse) / c64(15.0, 0.0));
        }
        n *= 2;
        if n > 1 << 20 {
            return Err(Error::Integration(format!(
                "step underflow on [{t0}, {t1}]"
            )));
        }
        coarse = fine;
    }
}

/// Exact reduction: `U_t = e^{−iHt}` by spectral decomposition of `H`.
pub fn reduce(model: &TotalSystemModel, grid: &[f64]) -> Result<DynamicalMap> {
    check_grid(grid)?;
    let (ds, de) = (model.dim_s, model.dim_e);
    let eig = linalg::eigh(&model.h_total)?;
    let rho_e = model.env_state.matrix().clone();
    let mut maps = Vec::with_capacity(grid.len());
    for (j, &t) in grid.iter().enumerate() {
        let n = ds * de;
        let mut u = eig.eigenvectors.clone();
        for k in 0..n {
            let phase = c64(0.0, -eig.eigenvalues[k] * t).exp();
            for i in 0..n {
                u[(i, k)] *= phase;
            }
        }
        let u = u * eig.eigenvectors.adjoint();
        let m = QuantumMap::from_fn(ds, ds, |x| {
            let big = kron(x, &rho_e);
            linalg::ptrace_b(&(&u * big * u.adjoint()), ds, de)
        })
        .map_err(|e| e.at_time(j, t))?;
        maps.push(m);
    }
    DynamicalMap::new(
        grid.to_vec(),
        maps,
        format!("reduction(dimS={ds}, dimE={de})"),
    )
}

/// `V_{t,s} = Λ_t Λ_s^{-1}` for grid indices `t_idx ≥ s_idx`.
pub fn intermediate(dm: &DynamicalMap, t_idx: usize, s_idx: usize) -> Result<QuantumMap> {
    if t_idx < s_idx || t_idx >= dm.len() {
        return Err(Error::OutOfRange(format!(
            "intermediate({t_idx}, {s_idx}) on a grid of {}",
            dm.len()
        )));
    }
    if t_idx == s_idx {
        return Ok(QuantumMap::identity(dm.dim()));
    }
    let inv = maps::inverse(&dm.maps[s_idx]).map_err(|e| e.at_time(s_idx, dm.grid[s_idx]))?;
    maps::compose(&dm.maps[t_idx], &inv)
}

/// Certificate for one consecutive grid step and one `k`.
#[derive(Debug, Clone, Serialize)]
pub struct StepCertificate {
    pub step: usize,
    pub t_from: f64,
    pub t_to: f64,
    pub k: usize,
    pub min_value: f64,
    pub verdict: PositivityVerdict,
    pub restarts_used: usize,
    /// `||Tr_out J(V) − I||_∞`.
    pub tp_residual: f64,
    #[serde(skip)]
    pub witness: CVector,
}

#[derive(Debug, Clone, Serialize)]
pub struct KDivisibility {
    pub k: usize,
    /// System dimension; `k = dim` is CP-divisibility, `k = 1` P-divisibility.
    pub dim: usize,
    pub divisible_on_grid: bool,
    pub certified_negative_steps: Vec<usize>,
}

impl KDivisibility {
    pub fn verdict(&self) -> String {
        let name = if self.k == self.dim {
            "CP".to_string()
        } else if self.k == 1 {
            "P".to_string()
        } else {
            self.k.to_string()
        };
        if self.divisible_on_grid {
            format!("{name}-divisible on grid")
        } else {
            format!("not {name}-divisible")
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DivisibilityReport {
    pub steps: Vec<StepCertificate>,
    pub per_k: Vec<KDivisibility>,
}

impl DivisibilityReport {
    pub fn step(&self, step: usize, k: usize) -> Option<&StepCertificate> {
        self.steps.iter().find(|s| s.step == step && s.k == k)
    }

    pub fn for_k(&self, k: usize) -> Option<&KDivisibility> {
        self.per_k.iter().find(|v| v.k == k)
    }
}

/// k-positivity certificates of `V_{t_{j+1}, t_j}` for every step and `k`.
///
/// Step `j` (between grid points `j` and `j+1`) uses the seed
/// `sub_seed(seed, j)`, so results do not depend on scheduling.
pub fn divisibility_report(
    dm: &DynamicalMap,
    ks: &[usize],
    restarts: usize,
    seed: u64,
) -> Result<DivisibilityReport> {
    let d = dm.dim();
    if ks.iter().any(|&k| k == 0 || k > d) {
        return Err(Error::OutOfRange(format!("k values must lie in 1..={d}")));
    }
    let per_step: Vec<Result<Vec<StepCertificate>>> = (0..dm.len().saturating_sub(1))
        .into_par_iter()
        .map(|j| {
            let v = intermediate(dm, j + 1, j)?;
            let tp_residual = maps::is_cptp(&v).tp_residual;
            ks.iter()
                .map(|&k| {
                    let cert = maps::k_positivity(&v, k, restarts, sub_seed(seed, j as u64))?;
                    Ok(StepCertificate {
                        step: j,
                        t_from: dm.grid[j],
                        t_to: dm.grid[j + 1],
                        k,
                        min_value: cert.min_value,
                        verdict: cert.verdict,
                        restarts_used: cert.restarts_used,
                        tp_residual,
                        witness: cert.witness,
                    })
                })
                .collect()
        })
        .collect();
    let mut steps = Vec::new();
    for s in per_step {
        steps.extend(s?);
    }
    let per_k = ks
        .iter()
        .map(|&k| {
            let bad: Vec<usize> = steps
                .iter()
                .filter(|s| s.k == k && s.verdict == PositivityVerdict::CertifiedNegative)
                .map(|s| s.step)
                .collect();
            KDivisibility {
                k,
                dim: d,
                divisible_on_grid: bad.is_empty(),
                certified_negative_steps: bad,
            }
        })
        .collect();
    Ok(DivisibilityReport { steps, per_k })
}

/// Parameters accepted by [`model`]; unused fields must be absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateFn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<[RateFn; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum Model {
    Generator(GkslGenerator),
    Total(TotalSystemModel),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Generator(g) => g.dim(),
            Model::Total(m) => m.dim_s(),
        }
    }

    /// Propagates or reduces onto `grid`.
    pub fn evolve(&self, grid: &[f64], tol: f64) -> Result<DynamicalMap> {
        match self {
            Model::Generator(g) => propagate(g, grid, tol),
            Model::Total(m) => reduce(m, grid),
        }
    }
}

/// Names and one-line descriptions of the bundled models.
pub const MODELS: [(&str, &str); 5] = [
    (
        "amplitude_damping",
        "qubit decay σ− at constant rate `gamma` (> 0, default 1)",
    ),
    (
        "dephasing",
        "qubit σz dephasing at rate `rate` (default constant 1); coherence ∝ exp(−2∫γ)",
    ),
    ("pauli", "qubit ½Σγ_k(σ_k ρ σ_k − ρ) with three `rates`"),
    ("eternal", "pauli model with γ₁ = γ₂ = 1, γ₃ = −tanh t"),
    (
        "jaynes_cummings_toy",
        "qubit system exchanging with a qubit environment in |0⟩, coupling `coupling` (default 1)",
    ),
];

fn sigma_minus() -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 1)] = c64(1.0, 0.0);
    m
}

/// Jumps `σ_k/√2` at rate `γ_k`, i.e. `½Σγ_k(σ_k ρ σ_k − ρ)`.
fn pauli_generator(rates: [RateFn; 3]) -> Result<GkslGenerator> {
    let s = c64(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let jumps = linalg::paulis().iter().map(|p| p * s).collect();
    GkslGenerator::dissipative(2, jumps, rates.to_vec())
}

/// Builds a named test model.
pub fn model(name: &str, params: &ModelParams) -> Result<Model> {
    let unexpected =
        |field: &str| Error::OutOfRange(format!("model `{name}` does not take `{field}`"));
    let only = |allowed: &[&str]| -> Result<()> {
        let present = [
            ("gamma", params.gamma.is_some()),
            ("rate", params.rate.is_some()),
            ("rates", params.rates.is_some()),
            ("coupling", params.coupling.is_some()),
        ];
        for (field, set) in present {
            if set && !allowed.contains(&field) {
                return Err(unexpected(field));
            }
        }
        Ok(())
    };
    match name {
        "amplitude_damping" => {
            only(&["gamma"])?;
            let gamma = params.gamma.unwrap_or(1.0);
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::OutOfRange(format!(
                    "gamma = {gamma} must be positive"
                )));
            }
            let g = GkslGenerator::dissipative(
                2,
                vec![sigma_minus()],
                vec![RateFn::Constant { c: gamma }],
            )?;
            Ok(Model::Generator(g))
        }
        "dephasing" => {
            only(&["rate"])?;
            let rate = params.rate.clone().unwrap_or(RateFn::Constant { c: 1.0 });
            let g = GkslGenerator::dissipative(2, vec![linalg::pauli_z()], vec![rate])?;
            Ok(Model::Generator(g))
        }
        "pauli" => {
            only(&["rates"])?;
            let rates = params
                .rates
                .clone()
                .ok_or_else(|| Error::OutOfRange("pauli model needs `rates`".into()))?;
            Ok(Model::Generator(pauli_generator(rates)?))
        }
        "eternal" => {
            only(&[])?;
            Ok(Model::Generator(eternal_generator()))
        }
        "jaynes_cummings_toy" => {
            only(&["coupling"])?;
            let g = params.coupling.unwrap_or(1.0);
            if !g.is_finite() {
                return Err(Error::NonFinite);
            }
            let sm = sigma_minus();
            let sp = sm.adjoint();
            let h = (kron(&sp, &sm) + kron(&sm, &sp)) * c64(g, 0.0);
            let m = TotalSystemModel::new(2, 2, h, DensityOperator::basis(2, 0))?;
            Ok(Model::Total(m))
        }
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

fn eternal_generator() -> GkslGenerator {
    let one = RateFn::Constant { c: 1.0 };
    pauli_generator([one.clone(), one, RateFn::NegTanh]).expect("eternal generator")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, pauli_x, pauli_z};
    use crate::maps::is_cptp;

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|j| t_max * j as f64 / n as f64).collect()
    }

    fn pauli_eigs(m: &QuantumMap) -> [f64; 3] {
        let p = linalg::paulis();
        [0, 1, 2].map(|k| 0.5 * (&p[k] * m.apply(&p[k])).trace().re)
    }

    #[test]
    fn zero_generator_is_identity() {
        let g = GkslGenerator::new(CMatrix::zeros(3, 3), vec![], vec![]).unwrap();
        let dm = propagate(&g, &grid(2.0, 4), 1e-10).unwrap();
        for m in dm.maps() {
            assert!(linalg::max_diff(m.superop(), QuantumMap::identity(3).superop()) < 1e-14);
        }
    }

    #[test]
    fn hamiltonian_flow_is_isospectral() {
        let h = pauli_x() + diag(&[0.3, -0.3]);
        let g = GkslGenerator::new(h, vec![], vec![]).unwrap();
        let dm = propagate(&g, &grid(3.0, 6), 1e-10).unwrap();
        let spec0 = linalg::eigh(&dm.map(0).choi()).unwrap().eigenvalues;
        for m in dm.maps() {
            let spec = linalg::eigh(&m.choi()).unwrap().eigenvalues;
            for (a, b) in spec.iter().zip(spec0.iter()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn amplitude_damping_population() {
        let gamma = 0.7;
        let Model::Generator(g) = model(
            "amplitude_damping",
            &ModelParams {
                gamma: Some(gamma),
                ..Default::default()
            },
        )
        .unwrap() else {
            panic!()
        };
        let dm = propagate(&g, &[0.0, 0.5, 1.0], 1e-10).unwrap();
        let out = dm.map(2).apply(&diag(&[0.0, 1.0]));
        assert!((out[(1, 1)].re - (-gamma).exp()).abs() < 1e-7);
    }

    #[test]
    fn amplitude_damping_fixed_point() {
        let m = model("amplitude_damping", &ModelParams::default()).unwrap();
        let dm = m.evolve(&[0.0, 20.0, 30.0], 1e-10).unwrap();
        let ground = diag(&[1.0, 0.0]);
        // populations have relaxed by t = 20; coherences decay at half the rate
        for x in [diag(&[0.0, 1.0]), diag(&[0.5, 0.5])] {
            assert!(linalg::max_diff(&dm.map(1).apply(&x), &ground) < 1e-6);
        }
        let replacer = QuantumMap::replacer(2, &DensityOperator::basis(2, 0));
        assert!(linalg::max_diff(dm.map(2).superop(), replacer.superop()) < 1e-6);
    }

    #[test]
    fn semigroup_consistency() {
        let m = model(
            "amplitude_damping",
            &ModelParams {
                gamma: Some(1.3),
                ..Default::default()
            },
        )
        .unwrap();
        let dm = m.evolve(&[0.0, 0.4, 0.7, 1.1], 1e-10).unwrap();
        let composed = maps::compose(dm.map(1), dm.map(2)).unwrap();
        assert!(linalg::max_diff(composed.superop(), dm.map(3).superop()) < 1e-7);
    }

    #[test]
    fn eternal_eigenvalues_match_closed_form() {
        let m = model("eternal", &ModelParams::default()).unwrap();
        let dm = m.evolve(&grid(3.0, 60), 1e-10).unwrap();
        for (t, map) in dm.grid().iter().zip(dm.maps()) {
            let l = pauli_eigs(map);
            let a = (-t).exp() * t.cosh();
            let b = (-2.0 * t).exp();
            assert!(
                (l[0] - a).abs() < 1e-7 && (l[1] - a).abs() < 1e-7 && (l[2] - b).abs() < 1e-7,
                "t={t}: {l:?}"
            );
            assert!(is_cptp(map).tp_residual < 1e-8);
        }
    }

    #[test]
    fn eternal_intermediate_is_trace_preserving_and_p_divisible() {
        let m = model("eternal", &ModelParams::default()).unwrap();
        let dm = m.evolve(&grid(2.0, 10), 1e-10).unwrap();
        for j in 1..dm.len() {
            let v = intermediate(&dm, j, j - 1).unwrap();
            assert!(is_cptp(&v).tp_residual < 1e-8);
            for r in pauli_eigs(&v) {
                assert!(r > 0.0 && r <= 1.0 + 1e-9);
            }
        }
        let v = intermediate(&dm, 3, 3).unwrap();
        assert_eq!(v.superop(), QuantumMap::identity(2).superop());
    }

    #[test]
    fn divisibility_reports() {
        let ad = model("amplitude_damping", &ModelParams::default()).unwrap();
        let dm = ad.evolve(&grid(2.0, 8), 1e-10).unwrap();
        let rep = divisibility_report(&dm, &[1, 2], 8, 3).unwrap();
        assert!(rep.per_k.iter().all(|v| v.divisible_on_grid));
        assert!(rep.steps.iter().all(|s| s.min_value >= -1e-8));
        assert_eq!(rep.for_k(2).unwrap().verdict(), "CP-divisible on grid");
        assert_eq!(rep.for_k(1).unwrap().verdict(), "P-divisible on grid");

        let et = model("eternal", &ModelParams::default()).unwrap();
        let dm = et.evolve(&grid(1.0, 5), 1e-10).unwrap();
        let rep = divisibility_report(&dm, &[1, 2], 16, 3).unwrap();
        assert!(rep.for_k(1).unwrap().divisible_on_grid);
        // V_{t,0} = Λ_t is CP; every later step has integrated γ₃ < 0
        assert_eq!(
            rep.for_k(2).unwrap().certified_negative_steps,
            vec![1, 2, 3, 4]
        );
    }

    #[test]
    fn dephasing_sin_breaks_cp_where_rate_is_negative() {
        let rate = RateFn::Sinusoid {
            a: 1.0,
            omega: 1.0,
            phi: 0.0,
        };
        let m = model(
            "dephasing",
            &ModelParams {
                rate: Some(rate),
                ..Default::default()
            },
        )
        .unwrap();
        let dm = m.evolve(&grid(6.0, 24), 1e-10).unwrap();
        for j in 1..dm.len() {
            let (s, t) = (dm.grid()[j - 1], dm.grid()[j]);
            let v = intermediate(&dm, j, j - 1).unwrap();
            let min = is_cptp(&v).min_choi_eig;
            // coherence factor over the step: exp(−2 ∫_s^t sin)
            let factor = (-2.0 * (s.cos() - t.cos())).exp();
            // Choi spectrum {1 ± f, 0, 0}
            let oracle = (1.0 - factor).min(0.0);
            assert!((min - oracle).abs() < 1e-8, "step {j}: {min} vs {oracle}");
        }
    }

    #[test]
    fn reduction_examples() {
        let hs = pauli_z().scale(0.8);
        let h = kron(&hs, &CMatrix::identity(2, 2));
        let tm = TotalSystemModel::new(2, 2, h, DensityOperator::maximally_mixed(2)).unwrap();
        let dm = reduce(&tm, &[0.0, 0.5, 1.3]).unwrap();
        assert!(linalg::max_diff(dm.map(0).superop(), QuantumMap::identity(2).superop()) < 1e-12);
        for (t, map) in dm.grid().iter().zip(dm.maps()) {
            let u = linalg::expm(&(&hs * c64(0.0, -t)));
            let expected = QuantumMap::unitary(&u).unwrap();
            assert!(linalg::max_diff(map.superop(), expected.superop()) < 1e-12);
        }

        let Model::Total(jc) = model("jaynes_cummings_toy", &ModelParams::default()).unwrap()
        else {
            panic!()
        };
        let period = 2.0 * std::f64::consts::PI;
        let dm = reduce(&jc, &grid(period, 16)).unwrap();
        for map in dm.maps() {
            let r = is_cptp(map);
            assert!(r.cp && r.tp);
        }
        assert!(linalg::max_diff(dm.map(16).superop(), dm.map(0).superop()) < 1e-10);
    }

    #[test]
    fn model_errors() {
        assert!(matches!(
            model("nope", &ModelParams::default()),
            Err(Error::UnknownModel(_))
        ));
        assert!(model(
            "amplitude_damping",
            &ModelParams {
                gamma: Some(-1.0),
                ..Default::default()
            }
        )
        .is_err());
        assert!(model(
            "eternal",
            &ModelParams {
                gamma: Some(1.0),
                ..Default::default()
            }
        )
        .is_err());
        assert!(model("pauli", &ModelParams::default()).is_err());
    }

    #[test]
    fn rate_forms_parse() {
        let r: RateFn =
            serde_json::from_str(r#"{"form":"sinusoid","a":1.0,"omega":2.0,"phi":0.0}"#).unwrap();
        assert!((r.eval(0.25) - 0.5f64.sin()).abs() < 1e-15);
        let r: RateFn = serde_json::from_str(r#"{"form":"neg_tanh"}"#).unwrap();
        assert_eq!(r, RateFn::NegTanh);
        let r: RateFn =
            serde_json::from_str(r#"{"form":"piecewise_linear","knots":[[0,1],[2,-1]]}"#).unwrap();
        assert!((r.eval(1.0)).abs() < 1e-15 && r.eval(5.0) == -1.0);
        assert!(serde_json::from_str::<RateFn>(r#"{"form":"constant","c":1,"extra":2}"#).is_err());
    }

    #[test]
    fn grid_validation() {
        let g = GkslGenerator::new(CMatrix::zeros(2, 2), vec![], vec![]).unwrap();
        assert!(propagate(&g, &[0.1, 0.2], 1e-10).is_err());
        assert!(propagate(&g, &[0.0, 0.2, 0.2], 1e-10).is_err());
        assert!(propagate(&g, &[0.0, 1.0], 0.0).is_err());
    }
}
