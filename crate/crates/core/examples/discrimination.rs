//! State and channel discrimination: Helstrom's closed form, the trine
//! guessing SDP, the diamond norm and the ancilla-assisted channel distance.

use std::f64::consts::PI;

use qdiv::discrimination;
use qdiv::linalg::{c64, CVector};
use qdiv::maps::QuantumMap;
use qdiv::quantum::{DensityOperator, StateEnsemble};

pub struct Outcome {
    pub helstrom: f64,
    pub trine: f64,
    /// `(q, ||id − depolarizing(q)||_⋄)`.
    pub diamond: Vec<(f64, f64)>,
    pub distance_k1: f64,
    pub distance_k2: f64,
}

fn real_pure(x: f64, y: f64) -> qdiv::Result<DensityOperator> {
    DensityOperator::pure(&CVector::from_vec(vec![c64(x, 0.0), c64(y, 0.0)]))
}

pub fn run_example() -> qdiv::Result<Outcome> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let helstrom = discrimination::helstrom_guess(0.5, &real_pure(1.0, 0.0)?, &real_pure(s, s)?)?;
    println!("p_guess(|0>, |+>) = {helstrom:.6}");

    let trine: Vec<DensityOperator> = (0..3)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / 3.0;
            real_pure((a / 2.0).cos(), (a / 2.0).sin())
        })
        .collect::<qdiv::Result<_>>()?;
    let trine = discrimination::p_guess(&StateEnsemble::uniform(trine)?)?.value;
    println!("p_guess(trine) = {trine:.8}");

    let id = QuantumMap::identity(2);
    let mut diamond = Vec::new();
    for q in [0.1, 0.5, 1.0] {
        let diff = id.combine(1.0, &QuantumMap::depolarizing(2, q), -1.0)?;
        let v = discrimination::diamond_norm(&diff)?;
        println!("||id − depolarizing({q})||_⋄ = {v:.7} (3q/2 = {})", 1.5 * q);
        diamond.push((q, v));
    }

    let dep = QuantumMap::depolarizing(2, 1.0);
    let distance_k1 = discrimination::channel_distance(&id, &dep, 0.5, 1, 16, 1)?;
    let distance_k2 = discrimination::channel_distance(&id, &dep, 0.5, 2, 16, 1)?;
    println!(
        "D^1/2 between id and full depolarizing: k = 1 {distance_k1:.4}, k = 2 {distance_k2:.4}"
    );
    Ok(Outcome {
        helstrom,
        trine,
        diamond,
        distance_k1,
        distance_k2,
    })
}

#[allow(dead_code)]
fn main() -> qdiv::Result<()> {
    run_example().map(|_| ())
}
