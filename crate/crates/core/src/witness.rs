//! Witness trajectories: scalar functionals evaluated along a dynamical map,
//! their grid derivatives, monotonicity violations, and reconciliation with
//! k-positivity certificates of the intermediate maps.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrimination;
use crate::dynamics::{DivisibilityReport, DynamicalMap};
use crate::entropy::{self, DivergenceValue};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::maps::{self, PositivityVerdict, QuantumMap};
use crate::quantum::{self, BipartiteState, DensityOperator, StateEnsemble, StateJson};
use crate::random::{self, sub_seed};

pub const DEFAULT_PROBES: usize = 20;
pub const DEFAULT_WITNESS_RESTARTS: usize = 8;
/// Relative tolerance on the signed derivative before a step counts as a
/// violation; multiplied by `max(1, max |value|)`.
pub const EPS_MONO: f64 = 1e-6;
/// Increase in guessing probability that counts as a discrete backflow.
pub const BD_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "KindRepr")]
pub enum WitnessKind {
    BlpTraceDistance,
    Guessing,
    RelativeEntropy,
    Renyi { alpha: f64 },
    Sandwiched { alpha: f64 },
    Fidelity,
    HMin,
    QCorr,
    QDecpl,
    Negativity,
    ChannelDistance { k: usize, p: f64 },
    OperationalFidelity,
}

/// Flat form used to reject fields a kind does not take.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KindRepr {
    kind: String,
    alpha: Option<f64>,
    k: Option<usize>,
    p: Option<f64>,
}

impl TryFrom<KindRepr> for WitnessKind {
    type Error = String;

    fn try_from(r: KindRepr) -> std::result::Result<Self, String> {
        let takes: &[&str] = match r.kind.as_str() {
            "renyi" | "sandwiched" => &["alpha"],
            "channel_distance" => &["k", "p"],
            _ => &[],
        };
        for (field, set) in [
            ("alpha", r.alpha.is_some()),
            ("k", r.k.is_some()),
            ("p", r.p.is_some()),
        ] {
            if set != takes.contains(&field) {
                let verb = if set { "does not take" } else { "needs" };
                return Err(format!("witness `{}` {verb} `{field}`", r.kind));
            }
        }
        Ok(match r.kind.as_str() {
            "blp_trace_distance" => WitnessKind::BlpTraceDistance,
            "guessing" => WitnessKind::Guessing,
            "relative_entropy" => WitnessKind::RelativeEntropy,
            "renyi" => WitnessKind::Renyi {
                alpha: r.alpha.unwrap(),
            },
            "sandwiched" => WitnessKind::Sandwiched {
                alpha: r.alpha.unwrap(),
            },
            "fidelity" => WitnessKind::Fidelity,
            "h_min" => WitnessKind::HMin,
            "q_corr" => WitnessKind::QCorr,
            "q_decpl" => WitnessKind::QDecpl,
            "negativity" => WitnessKind::Negativity,
            "channel_distance" => WitnessKind::ChannelDistance {
                k: r.k.unwrap(),
                p: r.p.unwrap(),
            },
            "operational_fidelity" => WitnessKind::OperationalFidelity,
            other => return Err(format!("unknown witness kind `{other}`")),
        })
    }
}

/// Names and one-line descriptions of the witness kinds.
pub const WITNESS_KINDS: [(&str, &str); 12] = [
    (
        "blp_trace_distance",
        "||Λ_t(pρ₁ − (1−p)ρ₂)||₁ on state pairs; non-increasing under P-divisibility",
    ),
    (
        "guessing",
        "p_guess of an evolved ensemble; non-increasing under P-divisibility",
    ),
    (
        "relative_entropy",
        "D(Λ_tρ‖Λ_tσ); non-increasing under P-divisibility",
    ),
    (
        "renyi",
        "Petz D_α, `alpha` in [0, 2]; positive-map monotone for α ∈ {0, 1, 2}",
    ),
    (
        "sandwiched",
        "sandwiched D̃_α, `alpha` >= ½; positive-map monotone for α = ½ or α > 1",
    ),
    (
        "fidelity",
        "F(Λ_tρ, Λ_tσ); non-decreasing under P-divisibility",
    ),
    (
        "h_min",
        "H_min(A|B) of (id ⊗ Λ_t)ρ_AB; non-decreasing for Schmidt number <= k under k-divisibility",
    ),
    ("q_corr", "2^{−H_min(A|B)}; non-increasing"),
    ("q_decpl", "2^{H_max(A|B)}; non-decreasing"),
    (
        "negativity",
        "(||ρ^{T_B}||₁ − 1)/2 of (id ⊗ Λ_t)ρ_AB; non-increasing",
    ),
    (
        "channel_distance",
        "D_k^p(Λ_t∘E₁, Λ_t∘E₂) with `k` and `p`; non-increasing under k-divisibility",
    ),
    (
        "operational_fidelity",
        "min-input fidelity of Λ_t∘E₁ and Λ_t∘E₂; non-decreasing under CP-divisibility",
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    NonIncreasing,
    NonDecreasing,
}

/// What a probe is made of, per kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeClass {
    Pair,
    Ensemble,
    Bipartite,
    Channels,
}

impl WitnessKind {
    pub fn name(&self) -> &'static str {
        match self {
            WitnessKind::BlpTraceDistance => "blp_trace_distance",
            WitnessKind::Guessing => "guessing",
            WitnessKind::RelativeEntropy => "relative_entropy",
            WitnessKind::Renyi { .. } => "renyi",
            WitnessKind::Sandwiched { .. } => "sandwiched",
            WitnessKind::Fidelity => "fidelity",
            WitnessKind::HMin => "h_min",
            WitnessKind::QCorr => "q_corr",
            WitnessKind::QDecpl => "q_decpl",
            WitnessKind::Negativity => "negativity",
            WitnessKind::ChannelDistance { .. } => "channel_distance",
            WitnessKind::OperationalFidelity => "operational_fidelity",
        }
    }

    /// File-name-safe label including parameters.
    pub fn label(&self) -> String {
        match self {
            WitnessKind::Renyi { alpha } | WitnessKind::Sandwiched { alpha } => {
                format!("{}_a{alpha}", self.name())
            }
            WitnessKind::ChannelDistance { k, p } => format!("{}_k{k}_p{p}", self.name()),
            _ => self.name().to_string(),
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            WitnessKind::Fidelity
            | WitnessKind::HMin
            | WitnessKind::QDecpl
            | WitnessKind::OperationalFidelity => Direction::NonDecreasing,
            _ => Direction::NonIncreasing,
        }
    }

    pub fn probe_class(&self) -> ProbeClass {
        match self {
            WitnessKind::Guessing => ProbeClass::Ensemble,
            WitnessKind::HMin
            | WitnessKind::QCorr
            | WitnessKind::QDecpl
            | WitnessKind::Negativity => ProbeClass::Bipartite,
            WitnessKind::ChannelDistance { .. } | WitnessKind::OperationalFidelity => {
                ProbeClass::Channels
            }
            _ => ProbeClass::Pair,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WitnessKind::Renyi { alpha } if !(0.0..=2.0).contains(&alpha) => Err(
                Error::OutOfRange(format!("renyi witness needs alpha in [0, 2], got {alpha}")),
            ),
            WitnessKind::Sandwiched { alpha } if !(alpha >= 0.5 && alpha.is_finite()) => {
                Err(Error::OutOfRange(format!(
                    "sandwiched witness needs finite alpha >= 1/2, got {alpha}"
                )))
            }
            WitnessKind::ChannelDistance { k, p } if k == 0 || !(0.0..=1.0).contains(&p) => {
                Err(Error::OutOfRange(format!(
                    "channel_distance needs k >= 1 and p in [0, 1], got k = {k}, p = {p}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Monotone under positive trace-preserving maps (after amplification).
    fn positive_map_monotone(&self) -> bool {
        match *self {
            WitnessKind::Renyi { alpha } => alpha == 0.0 || alpha == 1.0 || alpha == 2.0,
            WitnessKind::Sandwiched { alpha } => alpha == 0.5 || alpha > 1.0,
            _ => true,
        }
    }
}

/// Fixed input a functional is evaluated on.
#[derive(Debug, Clone)]
pub enum Probe {
    /// `p` weights `ρ₁` in the trace-distance kind; ignored elsewhere.
    Pair {
        p: f64,
        rho1: DensityOperator,
        rho2: DensityOperator,
    },
    Ensemble(StateEnsemble),
    /// The map acts on the `B` factor.
    Bipartite(BipartiteState),
    /// The map is composed after each channel.
    Channels {
        e1: QuantumMap,
        e2: QuantumMap,
    },
}

impl Probe {
    fn class(&self) -> ProbeClass {
        match self {
            Probe::Pair { .. } => ProbeClass::Pair,
            Probe::Ensemble(_) => ProbeClass::Ensemble,
            Probe::Bipartite(_) => ProbeClass::Bipartite,
            Probe::Channels { .. } => ProbeClass::Channels,
        }
    }

    pub fn to_json(&self) -> ProbeJson {
        let state = |s: &DensityOperator| StateJson::from_matrix(vec![s.dim()], s.matrix());
        match self {
            Probe::Pair { p, rho1, rho2 } => ProbeJson::Pair {
                p: *p,
                rho1: state(rho1),
                rho2: state(rho2),
            },
            Probe::Ensemble(e) => ProbeJson::Ensemble {
                probs: e.probs().to_vec(),
                states: e.states().iter().map(state).collect(),
            },
            Probe::Bipartite(b) => ProbeJson::Bipartite { state: b.to_json() },
            Probe::Channels { e1, e2 } => ProbeJson::Channels {
                e1: e1.to_json(),
                e2: e2.to_json(),
            },
        }
    }

    pub fn from_json(j: &ProbeJson) -> Result<Self> {
        Ok(match j {
            ProbeJson::Pair { p, rho1, rho2 } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::OutOfRange(format!("pair weight p = {p}")));
                }
                Probe::Pair {
                    p: *p,
                    rho1: DensityOperator::from_json(rho1)?,
                    rho2: DensityOperator::from_json(rho2)?,
                }
            }
            ProbeJson::Ensemble { probs, states } => Probe::Ensemble(StateEnsemble::new(
                probs.clone(),
                states
                    .iter()
                    .map(DensityOperator::from_json)
                    .collect::<Result<_>>()?,
            )?),
            ProbeJson::Bipartite { state } => Probe::Bipartite(BipartiteState::from_json(state)?),
            ProbeJson::Channels { e1, e2 } => Probe::Channels {
                e1: QuantumMap::from_json(e1)?,
                e2: QuantumMap::from_json(e2)?,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeJson {
    Pair {
        p: f64,
        rho1: StateJson,
        rho2: StateJson,
    },
    Ensemble {
        probs: Vec<f64>,
        states: Vec<StateJson>,
    },
    Bipartite {
        state: StateJson,
    },
    Channels {
        e1: maps::MapJson,
        e2: maps::MapJson,
    },
}

#[derive(Debug, Clone)]
pub struct WitnessSpec {
    pub kind: WitnessKind,
    pub probes: Vec<Probe>,
    /// Ancilla dimension for pair and ensemble probes (`0` = none); for
    /// bipartite probes it fixes `dim A`.
    pub ancilla_k: usize,
    /// Restarts of the variational channel kinds.
    pub restarts: usize,
    /// Seed of the variational channel kinds, shared by all grid points.
    pub seed: u64,
    /// Relative violation tolerance, see [`EPS_MONO`].
    pub eps_mono: f64,
}

impl WitnessSpec {
    pub fn new(kind: WitnessKind, probes: Vec<Probe>, ancilla_k: usize) -> Self {
        WitnessSpec {
            kind,
            probes,
            ancilla_k,
            restarts: DEFAULT_WITNESS_RESTARTS,
            seed: 0,
            eps_mono: EPS_MONO,
        }
    }

    /// `count` seeded random probes for a map on dimension `d`; probe `i`
    /// is drawn from `sub_seed(seed, i)`.
    pub fn random(
        kind: WitnessKind,
        d: usize,
        ancilla_k: usize,
        count: usize,
        seed: u64,
    ) -> Result<Self> {
        kind.validate()?;
        let probes = (0..count)
            .map(|i| random_probe(kind, d, ancilla_k, sub_seed(seed, i as u64)))
            .collect::<Result<_>>()?;
        let mut spec = WitnessSpec::new(kind, probes, ancilla_k);
        spec.seed = seed;
        Ok(spec)
    }

    /// Trace-distance witness on `H ⊗ C^{d+1}` with equal-weight pairs, whose
    /// monotonicity for all pairs is equivalent to CP-divisibility.
    pub fn blp_full_ancilla(d: usize, count: usize, seed: u64) -> Result<Self> {
        Self::random(WitnessKind::BlpTraceDistance, d, d + 1, count, seed)
    }

    /// Checks probe shapes against a map on dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        self.kind.validate()?;
        if self.probes.is_empty() {
            return Err(Error::OutOfRange("witness needs at least one probe".into()));
        }
        if !(self.eps_mono >= 0.0 && self.eps_mono.is_finite()) {
            return Err(Error::OutOfRange(format!("eps_mono = {}", self.eps_mono)));
        }
        let class = self.kind.probe_class();
        let a = self.ancilla_k.max(1);
        for (i, probe) in self.probes.iter().enumerate() {
            let bad = |msg: String| Err(Error::DimensionMismatch(format!("probe {i}: {msg}")));
            if probe.class() != class {
                return bad(format!("wrong probe type for `{}`", self.kind.name()));
            }
            match probe {
                Probe::Pair { rho1, rho2, .. } => {
                    if rho1.dim() != a * d || rho2.dim() != a * d {
                        return bad(format!("states must have dimension {}", a * d));
                    }
                }
                Probe::Ensemble(e) => {
                    if e.dim() != a * d {
                        return bad(format!("states must have dimension {}", a * d));
                    }
                }
                Probe::Bipartite(b) => {
                    if b.dim_b != d || (self.ancilla_k > 0 && b.dim_a != self.ancilla_k) {
                        return bad(format!("state must live on {} x {d}", b.dim_a));
                    }
                }
                Probe::Channels { e1, e2 } => {
                    if self.ancilla_k != 0 {
                        return bad("channel kinds carry their own ancilla".into());
                    }
                    if e1.dim_out() != d || e2.dim_out() != d || e1.dim_in() != e2.dim_in() {
                        return bad(format!(
                            "channels must share an input and output into dimension {d}"
                        ));
                    }
                    if let WitnessKind::ChannelDistance { k, .. } = self.kind {
                        if k > e1.dim_in() {
                            return bad(format!("k = {k} exceeds channel input dimension"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Smallest `ℓ` such that ℓ-divisibility guarantees monotonicity of
    /// this witness on `probe`.
    fn order(&self, d: usize, probe: &Probe) -> usize {
        let a = self.ancilla_k.max(1);
        let l = match (self.kind, probe) {
            (_, Probe::Bipartite(b)) => b.dim_a,
            (WitnessKind::ChannelDistance { k, .. }, _) => k,
            (WitnessKind::OperationalFidelity, _) => d,
            (kind, _) if kind.positive_map_monotone() => a,
            _ => d,
        };
        l.clamp(1, d)
    }
}

fn random_probe(kind: WitnessKind, d: usize, ancilla_k: usize, seed: u64) -> Result<Probe> {
    let mut rng = random::rng_from_seed(seed);
    let n = ancilla_k.max(1) * d;
    Ok(match kind.probe_class() {
        ProbeClass::Pair => Probe::Pair {
            p: 0.5,
            rho1: quantum::random_density_with(n, n, &mut rng),
            rho2: quantum::random_density_with(n, n, &mut rng),
        },
        ProbeClass::Ensemble => {
            let probs = dirichlet(3, &mut rng);
            let states = (0..3)
                .map(|_| quantum::random_density_with(n, n, &mut rng))
                .collect();
            Probe::Ensemble(StateEnsemble::new(probs, states)?)
        }
        ProbeClass::Bipartite => {
            let da = if ancilla_k > 0 { ancilla_k } else { d };
            let state = quantum::random_density_with(da * d, 2.min(da * d), &mut rng);
            Probe::Bipartite(BipartiteState::new(da, d, state)?)
        }
        ProbeClass::Channels => Probe::Channels {
            e1: QuantumMap::random_cptp(d, d, d, random::sub_seed(seed, 1)),
            e2: QuantumMap::random_cptp(d, d, d, random::sub_seed(seed, 2)),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub time: f64,
    pub derivative: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessTrajectory {
    pub kind: WitnessKind,
    pub probe: usize,
    pub ancilla_k: usize,
    /// Divisibility order `ℓ` whose hypothesis makes this trajectory monotone.
    pub order: usize,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    pub violations: Vec<Violation>,
    pub expected_direction: Direction,
    pub epsilon: f64,
}

impl WitnessTrajectory {
    /// Builds the derivative series and violation list from values.
    pub fn from_values(
        kind: WitnessKind,
        probe: usize,
        ancilla_k: usize,
        order: usize,
        times: Vec<f64>,
        values: Vec<f64>,
        eps_mono: f64,
    ) -> Self {
        let derivatives = grid_derivative(&times, &values);
        let scale = values
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let epsilon = eps_mono * scale.max(1.0);
        let direction = kind.direction();
        let violations = derivatives
            .iter()
            .enumerate()
            .filter(|(_, &g)| {
                let signed = match direction {
                    Direction::NonIncreasing => g,
                    Direction::NonDecreasing => -g,
                };
                signed > epsilon
            })
            .map(|(i, &g)| Violation {
                index: i,
                time: times[i],
                derivative: g,
            })
            .collect();
        WitnessTrajectory {
            kind,
            probe,
            ancilla_k,
            order,
            times,
            values,
            derivatives,
            violations,
            expected_direction: direction,
            epsilon,
        }
    }

    pub fn label(&self) -> String {
        let base = self.kind.label();
        if self.ancilla_k > 0 {
            format!("{base}_anc{}", self.ancilla_k)
        } else {
            base
        }
    }

    /// `time,value,derivative,violation_flag` with shortest round-trip floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,value,derivative,violation_flag\n");
        let flagged: Vec<usize> = self.violations.iter().map(|v| v.index).collect();
        for (i, ((t, v), g)) in self
            .times
            .iter()
            .zip(&self.values)
            .zip(&self.derivatives)
            .enumerate()
        {
            let flag = u8::from(flagged.contains(&i));
            out.push_str(&format!("{t},{v},{g},{flag}\n"));
        }
        out
    }
}

/// Central differences inside the grid, one-sided at the ends.
pub fn grid_derivative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (values[hi] - values[lo]) / (times[hi] - times[lo])
        })
        .collect()
}

fn divergence(v: DivergenceValue) -> f64 {
    v.value
}

fn to_state(m: CMatrix) -> Result<DensityOperator> {
    DensityOperator::from_psd(m)
}

fn evaluate(
    kind: WitnessKind,
    probe: &Probe,
    map: &QuantumMap,
    amplified: &QuantumMap,
    restarts: usize,
    seed: u64,
) -> Result<f64> {
    match (kind, probe) {
        (_, Probe::Pair { p, rho1, rho2 }) => {
            let r1 = amplified.apply(rho1.matrix());
            let r2 = amplified.apply(rho2.matrix());
            match kind {
                WitnessKind::BlpTraceDistance => {
                    let x = r1.scale(*p) - r2.scale(1.0 - p);
                    linalg::trace_norm(&(&x + x.adjoint()).scale(0.5))
                }
                WitnessKind::RelativeEntropy => {
                    entropy::relative_entropy_op(&r1, &r2).map(divergence)
                }
                WitnessKind::Renyi { alpha } => {
                    entropy::renyi_divergence_op(&r1, &r2, alpha).map(divergence)
                }
                WitnessKind::Sandwiched { alpha } => {
                    entropy::sandwiched_divergence_op(&r1, &r2, alpha).map(divergence)
                }
                WitnessKind::Fidelity => entropy::fidelity(&to_state(r1)?, &to_state(r2)?),
                _ => unreachable!("validated probe class"),
            }
        }
        (_, Probe::Ensemble(e)) => {
            let evolved = e.map_states(|s| to_state(amplified.apply(s.matrix())))?;
            Ok(discrimination::p_guess(&evolved)?.value)
        }
        (_, Probe::Bipartite(b)) => {
            let lifted = maps::amplify(map, b.dim_a)?;
            let state = BipartiteState::new(b.dim_a, b.dim_b, to_state(lifted.apply(b.matrix()))?)?;
            match kind {
                WitnessKind::HMin => entropy::h_min(&state),
                WitnessKind::QCorr => entropy::q_corr(&state),
                WitnessKind::QDecpl => entropy::q_decpl(&state),
                WitnessKind::Negativity => Ok(negativity(&state)),
                _ => unreachable!("validated probe class"),
            }
        }
        (_, Probe::Channels { e1, e2 }) => {
            let c1 = maps::compose(map, e1)?;
            let c2 = maps::compose(map, e2)?;
            match kind {
                WitnessKind::ChannelDistance { k, p } => {
                    discrimination::channel_distance(&c1, &c2, p, k, restarts, seed)
                }
                WitnessKind::OperationalFidelity => {
                    discrimination::operational_fidelity(&c1, &c2, restarts, seed)
                }
                _ => unreachable!("validated probe class"),
            }
        }
    }
}

/// Evaluates the witness on every probe at every grid point.
///
/// Pair and ensemble probes see `id_a ⊗ Λ_t` with `a = ancilla_k`; bipartite
/// probes see `id_A ⊗ Λ_t`; channel probes see `Λ_t ∘ E_i`. Errors carry the
/// grid index at which they occurred.
pub fn run(dm: &DynamicalMap, spec: &WitnessSpec) -> Result<Vec<WitnessTrajectory>> {
    let d = dm.dim();
    spec.validate(d)?;
    let a = spec.ancilla_k.max(1);
    let amplified: Vec<QuantumMap> = dm
        .maps()
        .par_iter()
        .map(|m| maps::amplify(m, a))
        .collect::<Result<_>>()?;
    spec.probes
        .par_iter()
        .enumerate()
        .map(|(i, probe)| {
            let values = (0..dm.len())
                .into_par_iter()
                .map(|j| {
                    evaluate(
                        spec.kind,
                        probe,
                        dm.map(j),
                        &amplified[j],
                        spec.restarts,
                        spec.seed,
                    )
                    .map_err(|e| e.at_time(j, dm.grid()[j]))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(WitnessTrajectory::from_values(
                spec.kind,
                i,
                spec.ancilla_k,
                spec.order(d, probe),
                dm.grid().to_vec(),
                values,
                spec.eps_mono,
            ))
        })
        .collect()
}

/// Information-flow series `σ(ρ₁,ρ₂;t)`; positive entries are backflow.
pub fn blp_sigma(traj: &WitnessTrajectory) -> Result<Vec<f64>> {
    if traj.kind != WitnessKind::BlpTraceDistance {
        return Err(Error::OutOfRange(format!(
            "information flow needs a blp_trace_distance trajectory, got {}",
            traj.kind.name()
        )));
    }
    Ok(traj.derivatives.clone())
}

/// `(||ρ^{T_B}||₁ − 1)/2`.
pub fn negativity(rho: &BipartiteState) -> f64 {
    let pt = linalg::partial_transpose_b(rho.matrix(), rho.dim_a, rho.dim_b);
    let norm =
        linalg::trace_norm(&pt).expect("partial transpose of a Hermitian matrix is Hermitian");
    ((norm - 1.0) / 2.0).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BdViolation {
    pub ensemble: usize,
    /// Later index `k > l`.
    pub k: usize,
    pub l: usize,
    pub increase: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BdReport {
    /// `guess[e][k]` for ensemble `e` after `id ⊗ Λ_k`.
    pub guess: Vec<Vec<f64>>,
    pub violations: Vec<BdViolation>,
}

impl BdReport {
    /// True when some guessing probability increased: the sequence is then
    /// certainly not CP-divisible.
    pub fn certifies_non_divisible(&self) -> bool {
        !self.violations.is_empty()
    }
}

/// Guessing probabilities of `{p_i, (id ⊗ Λ_k)(ρ̃_i)}` for a discrete
/// sequence with `Λ_0 = id`; any increase beyond [`BD_TOL`] between `l < k`
/// is reported. No violations is evidence over the sampled ensembles only.
pub fn discrete_bd_check(sequence: &[QuantumMap], ensembles: &[StateEnsemble]) -> Result<BdReport> {
    let first = sequence
        .first()
        .ok_or_else(|| Error::OutOfRange("empty map sequence".into()))?;
    let d = first.dim_in();
    if sequence.iter().any(|m| m.dim_in() != d || m.dim_out() != d) {
        return Err(Error::DimensionMismatch(
            "maps must share one dimension".into(),
        ));
    }
    if linalg::max_diff(first.superop(), QuantumMap::identity(d).superop()) > 1e-10 {
        return Err(Error::OutOfRange(
            "sequence must start at the identity".into(),
        ));
    }
    if ensembles.iter().any(|e| e.dim() != d * d) {
        return Err(Error::DimensionMismatch(format!(
            "ensembles must live on {d} x {d}"
        )));
    }
    let lifted: Vec<QuantumMap> = sequence
        .iter()
        .map(|m| maps::amplify(m, d))
        .collect::<Result<_>>()?;
    let guess: Vec<Vec<f64>> = ensembles
        .par_iter()
        .map(|e| {
            lifted
                .iter()
                .map(|m| {
                    let evolved = e.map_states(|s| to_state(m.apply(s.matrix())))?;
                    Ok(discrimination::p_guess(&evolved)?.value)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut violations = Vec::new();
    for (e, g) in guess.iter().enumerate() {
        for k in 1..g.len() {
            for l in 0..k {
                if g[k] - g[l] > BD_TOL {
                    violations.push(BdViolation {
                        ensemble: e,
                        k,
                        l,
                        increase: g[k] - g[l],
                    });
                }
            }
        }
    }
    Ok(BdReport { guess, violations })
}

/// `count` ensembles of `size` random pure states on `C^d ⊗ C^d` with
/// flat-Dirichlet priors. Equal priors are a poor search space: on the
/// eternal model they never show a discrete backflow.
pub fn random_bd_ensembles(
    d: usize,
    count: usize,
    size: usize,
    seed: u64,
) -> Result<Vec<StateEnsemble>> {
    (0..count)
        .map(|i| {
            let mut rng = random::rng_from_seed(sub_seed(seed, i as u64));
            let probs = dirichlet(size, &mut rng);
            let states = (0..size)
                .map(|_| quantum::random_pure_with(d * d, &mut rng))
                .collect();
            StateEnsemble::new(probs, states)
        })
        .collect()
}

/// Flat-Dirichlet weights whose sum is exactly one.
fn dirichlet(n: usize, rng: &mut random::Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let head: f64 = probs[..n - 1].iter().sum();
    probs[n - 1] = 1.0 - head;
    probs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Consistency {
    #[serde(rename = "CONSISTENT")]
    Consistent,
    /// No certificate covers the steps involved.
    #[serde(rename = "UNCHECKED")]
    Unchecked,
    #[serde(rename = "INCONSISTENT-INVESTIGATE")]
    InconsistentInvestigate,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationCheck {
    pub witness: String,
    pub probe: usize,
    pub order: usize,
    pub index: usize,
    pub time: f64,
    pub derivative: f64,
    /// Steps `j` (from `t_j` to `t_{j+1}`) that the violation can blame.
    pub steps: Vec<usize>,
    pub status: Consistency,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessRow {
    pub witness: String,
    pub probes: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct KRow {
    pub k: usize,
    pub verdict: String,
    pub certified_negative_steps: Vec<usize>,
    /// Witnesses of order exactly `k`.
    pub witnesses: Vec<WitnessRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Reconciliation {
    pub status: Consistency,
    pub table: Vec<KRow>,
    pub checks: Vec<ViolationCheck>,
}

/// Compares witness violations with the step certificates.
///
/// A violation of an order-`ℓ` witness at grid index `i` is blamed on steps
/// `i−2..=i+1` (one step of slack). It is CONSISTENT if one of those steps
/// is certified not `k`-positive for some `k ≤ ℓ`, and INCONSISTENT-INVESTIGATE
/// if every one of them was searched at some `k ≥ ℓ` without finding
/// negativity, since the witness theorems then forbid the violation.
pub fn verdict(
    dm: &DynamicalMap,
    trajectories: &[WitnessTrajectory],
    report: &DivisibilityReport,
) -> Result<Reconciliation> {
    let steps = dm.len().saturating_sub(1);
    for t in trajectories {
        if t.times.len() != dm.len() || t.times.iter().zip(dm.grid()).any(|(a, b)| a != b) {
            return Err(Error::DimensionMismatch(format!(
                "trajectory {} is on a different grid",
                t.label()
            )));
        }
    }
    if report.steps.iter().any(|s| s.step >= steps) {
        return Err(Error::DimensionMismatch(
            "divisibility report is on a different grid".into(),
        ));
    }
    let mut checks = Vec::new();
    for t in trajectories {
        for v in &t.violations {
            let lo = v.index.saturating_sub(2);
            let hi = (v.index + 1).min(steps.saturating_sub(1));
            let window: Vec<usize> = (lo..=hi).collect();
            let certs = |j: usize| report.steps.iter().filter(move |s| s.step == j);
            let explained = window.iter().any(|&j| {
                certs(j)
                    .any(|s| s.k <= t.order && s.verdict == PositivityVerdict::CertifiedNegative)
            });
            let covered = window.iter().all(|&j| {
                certs(j).any(|s| {
                    s.k >= t.order && s.verdict == PositivityVerdict::HeuristicallyNonnegative
                })
            });
            let status = if explained {
                Consistency::Consistent
            } else if covered {
                Consistency::InconsistentInvestigate
            } else {
                Consistency::Unchecked
            };
            checks.push(ViolationCheck {
                witness: t.label(),
                probe: t.probe,
                order: t.order,
                index: v.index,
                time: v.time,
                derivative: v.derivative,
                steps: window,
                status,
            });
        }
    }
    let table = report
        .per_k
        .iter()
        .map(|kd| {
            let mut witnesses: Vec<WitnessRow> = Vec::new();
            for t in trajectories.iter().filter(|t| t.order == kd.k) {
                let label = t.label();
                match witnesses.iter_mut().find(|w| w.witness == label) {
                    Some(w) => {
                        w.probes += 1;
                        w.violations += t.violations.len();
                    }
                    None => witnesses.push(WitnessRow {
                        witness: label,
                        probes: 1,
                        violations: t.violations.len(),
                    }),
                }
            }
            KRow {
                k: kd.k,
                verdict: kd.verdict(),
                certified_negative_steps: kd.certified_negative_steps.clone(),
                witnesses,
            }
        })
        .collect();
    let status = if checks
        .iter()
        .any(|c| c.status == Consistency::InconsistentInvestigate)
    {
        Consistency::InconsistentInvestigate
    } else {
        Consistency::Consistent
    };
    Ok(Reconciliation {
        status,
        table,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{self, ModelParams};

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
    }

    fn evolve(name: &str, g: &[f64]) -> DynamicalMap {
        dynamics::model(name, &ModelParams::default())
            .unwrap()
            .evolve(g, 1e-10)
            .unwrap()
    }

    #[test]
    fn blp_on_amplitude_damping_is_exp_decay() {
        let g = grid(3.0, 31);
        let dm = evolve("amplitude_damping", &g);
        let probe = Probe::Pair {
            p: 0.5,
            rho1: DensityOperator::basis(2, 0),
            rho2: DensityOperator::basis(2, 1),
        };
        let spec = WitnessSpec::new(WitnessKind::BlpTraceDistance, vec![probe], 0);
        let tr = &run(&dm, &spec).unwrap()[0];
        for (t, v) in tr.times.iter().zip(&tr.values) {
            assert!((v - (-t).exp()).abs() < 1e-9, "{t}: {v}");
        }
        assert!(tr.violations.is_empty());
        assert!(tr.derivatives.iter().all(|g| *g < 0.0));
    }

    #[test]
    fn derivative_bookkeeping() {
        let times = vec![0.0, 0.5, 1.5, 2.0];
        let values = vec![1.0, 2.0, 0.0, 4.0];
        let g = grid_derivative(&times, &values);
        assert_eq!(g, vec![2.0, -1.0 / 1.5, 2.0 / 1.5, 8.0]);
        let tr =
            WitnessTrajectory::from_values(WitnessKind::Guessing, 0, 0, 1, times, values, EPS_MONO);
        let idx: Vec<usize> = tr.violations.iter().map(|v| v.index).collect();
        assert_eq!(idx, vec![0, 2, 3]);
    }

    #[test]
    fn constant_functional_has_zero_flow() {
        let g = grid(1.0, 5);
        let dm =
            DynamicalMap::new(g.clone(), vec![QuantumMap::identity(2); 5], "identity").unwrap();
        let spec = WitnessSpec::random(WitnessKind::BlpTraceDistance, 2, 0, 2, 3).unwrap();
        for tr in run(&dm, &spec).unwrap() {
            assert!(blp_sigma(&tr).unwrap().iter().all(|s| *s == 0.0));
        }
    }

    #[test]
    fn negativity_values() {
        let bell = quantum::max_entangled(2).unwrap();
        assert!((negativity(&bell) - 0.5).abs() < 1e-12);
        let prod = quantum::tensor(
            &DensityOperator::basis(2, 0),
            &DensityOperator::maximally_mixed(2),
        );
        assert!(negativity(&prod).abs() < 1e-12);
        for v in [0.0, 0.2, 1.0 / 3.0, 0.6, 1.0] {
            let m = bell.matrix().scale(v) + CMatrix::identity(4, 4).scale((1.0 - v) / 4.0);
            let iso = BipartiteState::from_matrix(2, 2, m).unwrap();
            let want = ((3.0 * v - 1.0) / 4.0).max(0.0);
            assert!((negativity(&iso) - want).abs() < 1e-12, "v = {v}");
        }
    }

    #[test]
    fn sandwiched_half_is_log_fidelity() {
        let g = grid(2.0, 11);
        let dm = evolve("eternal", &g);
        let fid = run(
            &dm,
            &WitnessSpec::random(WitnessKind::Fidelity, 2, 0, 3, 9).unwrap(),
        )
        .unwrap();
        let san = run(
            &dm,
            &WitnessSpec::random(WitnessKind::Sandwiched { alpha: 0.5 }, 2, 0, 3, 9).unwrap(),
        )
        .unwrap();
        for (f, s) in fid.iter().zip(&san) {
            for (a, b) in f.values.iter().zip(&s.values) {
                assert!((b + 2.0 * a.log2()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn kind_json_round_trip() {
        let k = WitnessKind::ChannelDistance { k: 2, p: 0.25 };
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s, r#"{"kind":"channel_distance","k":2,"p":0.25}"#);
        assert_eq!(serde_json::from_str::<WitnessKind>(&s).unwrap(), k);
        assert!(serde_json::from_str::<WitnessKind>(r#"{"kind":"h_min","x":1}"#).is_err());
        assert!(WitnessKind::Sandwiched { alpha: 0.3 }.validate().is_err());
    }

    #[test]
    fn wrong_probe_dimension_is_rejected() {
        let g = grid(1.0, 3);
        let dm = evolve("amplitude_damping", &g);
        let spec = WitnessSpec::random(WitnessKind::Fidelity, 3, 0, 1, 0).unwrap();
        assert!(matches!(run(&dm, &spec), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn cptp_sequence_has_no_bd_violation() {
        let step = QuantumMap::random_cptp(2, 2, 2, 4);
        let mut seq = vec![QuantumMap::identity(2)];
        for _ in 0..3 {
            let next = maps::compose(&step, seq.last().unwrap()).unwrap();
            seq.push(next);
        }
        let ens = random_bd_ensembles(2, 10, 4, 1).unwrap();
        assert!(!discrete_bd_check(&seq, &ens)
            .unwrap()
            .certifies_non_divisible());
        let single = vec![StateEnsemble::uniform(vec![DensityOperator::basis(4, 0)]).unwrap()];
        let r = discrete_bd_check(&seq, &single).unwrap();
        assert!(r.guess[0].iter().all(|g| (g - 1.0).abs() < 1e-7));
    }
}
