//! Property tests: data processing, the unitality law, covariance and the
//! ordering relations between ancilla-assisted quantities.

use proptest::prelude::*;
use qdiv::discrimination;
use qdiv::dynamics::{self, DynamicalMap, ModelParams};
use qdiv::entropy;
use qdiv::linalg::{self, CMatrix};
use qdiv::maps::{self, QuantumMap};
use qdiv::quantum::{self, random_density, BipartiteState, DensityOperator, StateEnsemble};
use qdiv::random::{self, sub_seed};
use qdiv::witness::{self, Probe, WitnessKind, WitnessSpec};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn random_unitary(d: usize, seed: u64) -> CMatrix {
    random::random_unitary(d, &mut random::rng_from_seed(seed))
}

/// `T ∘ E` for a random channel `E`: positive and trace preserving, not CP.
fn transposed_channel(d: usize, seed: u64) -> QuantumMap {
    maps::compose(
        &QuantumMap::transposition(d),
        &QuantumMap::random_cptp(d, d, 2, seed),
    )
    .unwrap()
}

fn pair(d: usize, seed: u64) -> (DensityOperator, DensityOperator) {
    (
        random_density(d, d, sub_seed(seed, 1)).unwrap(),
        random_density(d, 1 + (seed as usize % d), sub_seed(seed, 2)).unwrap(),
    )
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn divergences_obey_data_processing(seed in any::<u64>(), d in 2usize..=3) {
        let (rho, sigma) = pair(d, seed);
        let channel = QuantumMap::random_cptp(d, d, 1 + (seed as usize % 3), sub_seed(seed, 3));
        let (r, s) = (channel.apply_state(&rho).unwrap(), channel.apply_state(&sigma).unwrap());
        let before = entropy::relative_entropy(&rho, &sigma).unwrap().value;
        let after = entropy::relative_entropy(&r, &s).unwrap().value;
        prop_assert!(after <= before + 1e-8, "D: {} -> {}", before, after);
        for alpha in [0.0, 0.5, 0.9, 1.5, 2.0] {
            let before = entropy::renyi_divergence(&rho, &sigma, alpha).unwrap().value;
            let after = entropy::renyi_divergence(&r, &s, alpha).unwrap().value;
            prop_assert!(after <= before + 1e-8, "Petz {}: {} -> {}", alpha, before, after);
        }
        for alpha in [0.5, 0.9, 1.5, 3.0, 10.0] {
            let before = entropy::sandwiched_divergence(&rho, &sigma, alpha).unwrap().value;
            let after = entropy::sandwiched_divergence(&r, &s, alpha).unwrap().value;
            prop_assert!(after <= before + 1e-8, "sandwiched {}: {} -> {}", alpha, before, after);
        }
    }

    #[test]
    fn positive_trace_preserving_maps_contract(seed in any::<u64>(), d in 2usize..=3) {
        let (rho, sigma) = pair(d, seed);
        let map = transposed_channel(d, sub_seed(seed, 3));
        let (r, s) = (map.apply_state(&rho).unwrap(), map.apply_state(&sigma).unwrap());
        let before = entropy::relative_entropy(&rho, &sigma).unwrap().value;
        let after = entropy::relative_entropy(&r, &s).unwrap().value;
        prop_assert!(after <= before + 1e-8);
        for alpha in [0.5, 1.5, 3.0] {
            let before = entropy::sandwiched_divergence(&rho, &sigma, alpha).unwrap().value;
            let after = entropy::sandwiched_divergence(&r, &s, alpha).unwrap().value;
            prop_assert!(after <= before + 1e-8, "{}: {} -> {}", alpha, before, after);
        }
        let trace = |a: &DensityOperator, b: &DensityOperator| linalg::trace_norm(&(a.matrix() - b.matrix())).unwrap();
        prop_assert!(trace(&r, &s) <= trace(&rho, &sigma) + 1e-10);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounds_trace_distance(seed in any::<u64>(), d in 2usize..=3) {
        let (rho, sigma) = pair(d, seed);
        let f = entropy::fidelity(&rho, &sigma).unwrap();
        prop_assert!((f - entropy::fidelity(&sigma, &rho).unwrap()).abs() < 1e-9);
        let t = 0.5 * linalg::trace_norm(&(rho.matrix() - sigma.matrix())).unwrap();
        prop_assert!(1.0 - f <= t + 1e-9);
        prop_assert!(t <= (1.0 - f * f).max(0.0).sqrt() + 1e-9);
        let half = entropy::sandwiched_divergence(&rho, &sigma, 0.5).unwrap().value;
        prop_assert!((half + 2.0 * f.log2()).abs() < 1e-9);
    }

    #[test]
    fn guessing_never_improves_under_positive_preprocessing(seed in any::<u64>(), d in 2usize..=3, n in 2usize..=4) {
        let states: Vec<DensityOperator> = (0..n).map(|i| random_density(d, 1 + i % d, sub_seed(seed, i as u64)).unwrap()).collect();
        let ens = StateEnsemble::uniform(states).unwrap();
        let base = discrimination::p_guess(&ens).unwrap().value;
        for map in [QuantumMap::random_cptp(d, d, 2, sub_seed(seed, 10)), transposed_channel(d, sub_seed(seed, 11))] {
            let after = ens.map_states(|s| map.apply_state(s)).unwrap();
            prop_assert!(discrimination::p_guess(&after).unwrap().value <= base + 1e-7);
        }
    }

    #[test]
    fn renyi_entropies_follow_the_unitality_law(seed in any::<u64>(), transposed in any::<bool>()) {
        let mut rng = random::rng_from_seed(seed);
        let w: Vec<f64> = (0..4).map(|_| rand::Rng::random::<f64>(&mut rng) + 1e-3).collect();
        let total: f64 = w.iter().sum();
        let pauli = QuantumMap::pauli_channel([w[0] / total, w[1] / total, w[2] / total, w[3] / total]).unwrap();
        let damping = QuantumMap::amplitude_damping(0.05 + 0.9 * rand::Rng::random::<f64>(&mut rng));
        let t = QuantumMap::transposition(2);
        let (unital, lossy) = if transposed {
            (maps::compose(&t, &pauli).unwrap(), maps::compose(&t, &damping).unwrap())
        } else {
            (pauli, damping)
        };
        prop_assert!(maps::is_unital(&unital).unwrap().0);
        prop_assert!(!maps::is_unital(&lossy).unwrap().0);
        let states: Vec<DensityOperator> = (0..8)
            .map(|i| random_density(2, 1 + i % 2, sub_seed(seed, i as u64)).unwrap())
            .chain([DensityOperator::maximally_mixed(2)])
            .collect();
        for alpha in [0.5, 1.0, 2.0, 5.0] {
            let mut worst_drop: f64 = 0.0;
            for rho in &states {
                let s0 = entropy::renyi_entropy(rho, alpha).unwrap();
                let s1 = entropy::renyi_entropy(&unital.apply_state(rho).unwrap(), alpha).unwrap();
                prop_assert!(s1 >= s0 - 1e-9, "unital map lowered S_{}", alpha);
                let s2 = entropy::renyi_entropy(&lossy.apply_state(rho).unwrap(), alpha).unwrap();
                worst_drop = worst_drop.max(s0 - s2);
            }
            prop_assert!(worst_drop > 1e-6, "no decrease for α = {}", alpha);
        }
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn min_and_max_entropy_are_dual(seed in any::<u64>()) {
        let rho = BipartiteState::new(2, 2, random_density(4, 1 + (seed as usize % 4), seed).unwrap()).unwrap();
        let abc = quantum::purify(&rho);
        let h_min = entropy::h_min(&abc.rho_ab()).unwrap();
        let h_max = entropy::h_max(&abc.rho_ac()).unwrap();
        prop_assert!((h_min + h_max).abs() < 1e-5, "{} + {}", h_min, h_max);
        prop_assert!(h_min <= entropy::conditional_entropy(&rho) + 1e-6);
    }

    #[test]
    fn ancilla_assistance_is_monotone(seed in any::<u64>(), p in 0.1f64..0.9) {
        let e1 = QuantumMap::random_cptp(2, 2, 2, sub_seed(seed, 1));
        let e2 = QuantumMap::random_cptp(2, 2, 2, sub_seed(seed, 2));
        let d1 = discrimination::channel_distance(&e1, &e2, p, 1, 16, seed).unwrap();
        let d2 = discrimination::channel_distance(&e1, &e2, p, 2, 16, seed).unwrap();
        prop_assert!(d1 <= d2 + 1e-6, "{} > {}", d1, d2);
        let diff = e1.combine(1.0 - p, &e2, -p).unwrap();
        let diamond = discrimination::diamond_norm(&diff).unwrap();
        prop_assert!((d2 - diamond).abs() < 1e-4, "{} vs {}", d2, diamond);
        let g1 = discrimination::p_guess_channels(&[1.0 - p, p], &[e1.clone(), e2.clone()], 1, 8, seed).unwrap();
        let g2 = discrimination::p_guess_channels(&[1.0 - p, p], &[e1, e2], 2, 8, seed).unwrap();
        prop_assert!(g1 <= g2 + 1e-6, "{} > {}", g1, g2);
    }
}

/// `ρ ↦ (I ⊗ U) ρ (I ⊗ U)†` on states whose last factor is the system.
fn rotate(m: &CMatrix, u: &CMatrix) -> CMatrix {
    let a = m.nrows() / u.nrows();
    let big = linalg::kron(&CMatrix::identity(a, a), u);
    &big * m * big.adjoint()
}

fn rotate_probe(probe: &Probe, u: &CMatrix, conj: &QuantumMap, conj_inv: &QuantumMap) -> Probe {
    let state = |s: &DensityOperator| DensityOperator::from_psd(rotate(s.matrix(), u)).unwrap();
    match probe {
        Probe::Pair { p, rho1, rho2 } => Probe::Pair {
            p: *p,
            rho1: state(rho1),
            rho2: state(rho2),
        },
        Probe::Ensemble(e) => Probe::Ensemble(e.map_states(|s| Ok(state(s))).unwrap()),
        Probe::Bipartite(b) => {
            Probe::Bipartite(BipartiteState::new(b.dim_a, b.dim_b, state(&b.state)).unwrap())
        }
        Probe::Channels { e1, e2 } => {
            let r =
                |e: &QuantumMap| maps::compose(conj, &maps::compose(e, conj_inv).unwrap()).unwrap();
            Probe::Channels {
                e1: r(e1),
                e2: r(e2),
            }
        }
    }
}

#[test]
fn witnesses_are_unitarily_covariant() {
    let grid: Vec<f64> = (0..=6).map(|i| 0.25 * i as f64).collect();
    let gen = dynamics::GkslGenerator::random_markovian(2, 2, 4).unwrap();
    let dm = dynamics::propagate(&gen, &grid, 1e-10).unwrap();
    let u = random_unitary(2, 77);
    let conj = QuantumMap::unitary(&u).unwrap();
    let conj_inv = QuantumMap::unitary(&u.adjoint()).unwrap();
    let rotated_maps = dm
        .maps()
        .iter()
        .map(|m| maps::compose(&conj, &maps::compose(m, &conj_inv).unwrap()).unwrap())
        .collect();
    let rotated = DynamicalMap::new(grid.clone(), rotated_maps, "rotated").unwrap();
    let kinds = [
        (WitnessKind::BlpTraceDistance, 2),
        (WitnessKind::Guessing, 0),
        (WitnessKind::RelativeEntropy, 0),
        (WitnessKind::Renyi { alpha: 0.5 }, 0),
        (WitnessKind::Sandwiched { alpha: 2.0 }, 2),
        (WitnessKind::Fidelity, 0),
        (WitnessKind::HMin, 2),
        (WitnessKind::QCorr, 2),
        (WitnessKind::QDecpl, 2),
        (WitnessKind::Negativity, 2),
        (WitnessKind::ChannelDistance { k: 2, p: 0.5 }, 0),
    ];
    for (kind, anc) in kinds {
        let mut spec = WitnessSpec::random(kind, 2, anc, 2, 5).unwrap();
        spec.restarts = 16;
        let base = witness::run(&dm, &spec).unwrap();
        spec.probes = spec
            .probes
            .iter()
            .map(|p| rotate_probe(p, &u, &conj, &conj_inv))
            .collect();
        let turned = witness::run(&rotated, &spec).unwrap();
        for (a, b) in base.iter().zip(&turned) {
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!(
                    (x - y).abs() < 1e-5 * (1.0 + x.abs()),
                    "{}: {x} vs {y}",
                    kind.label()
                );
            }
        }
    }
}

#[test]
fn sandwiched_half_tracks_fidelity_pointwise() {
    let grid: Vec<f64> = (0..=20).map(|i| 0.15 * i as f64).collect();
    let dm = dynamics::model("eternal", &ModelParams::default())
        .unwrap()
        .evolve(&grid, 1e-10)
        .unwrap();
    let probes = WitnessSpec::random(WitnessKind::Fidelity, 2, 2, 4, 9)
        .unwrap()
        .probes;
    let fid = witness::run(
        &dm,
        &WitnessSpec::new(WitnessKind::Fidelity, probes.clone(), 2),
    )
    .unwrap();
    let half = witness::run(
        &dm,
        &WitnessSpec::new(WitnessKind::Sandwiched { alpha: 0.5 }, probes, 2),
    )
    .unwrap();
    for (f, h) in fid.iter().zip(&half) {
        for (x, y) in f.values.iter().zip(&h.values) {
            assert!((y + 2.0 * x.log2()).abs() < 1e-10, "{y} vs {x}");
        }
    }
}
