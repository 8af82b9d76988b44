//! Relative entropy, Petz and sandwiched Rényi divergences, and their data
//! processing under a channel and under the (positive) transposition.

use qdiv::entropy;
use qdiv::maps::QuantumMap;
use qdiv::quantum::random_density;

pub struct Outcome {
    /// Largest increase of any divergence under the maps tried.
    pub worst_increase: f64,
    /// `|D̃_{1/2} + 2 log F|`.
    pub fidelity_identity_error: f64,
}

pub fn run_example() -> qdiv::Result<Outcome> {
    let rho = random_density(3, 3, 1)?;
    let sigma = random_density(3, 3, 2)?;
    let channel = QuantumMap::random_cptp(3, 3, 2, 3);
    let transpose = QuantumMap::transposition(3);
    let mut worst_increase = f64::NEG_INFINITY;
    for (name, map) in [("channel", &channel), ("transpose", &transpose)] {
        let (r, s) = (map.apply_state(&rho)?, map.apply_state(&sigma)?);
        let before = entropy::relative_entropy(&rho, &sigma)?.value;
        let after = entropy::relative_entropy(&r, &s)?.value;
        println!("{name}: D {before:.4} -> {after:.4}");
        worst_increase = worst_increase.max(after - before);
        for alpha in [0.5, 1.5, 3.0] {
            let before = entropy::sandwiched_divergence(&rho, &sigma, alpha)?.value;
            let after = entropy::sandwiched_divergence(&r, &s, alpha)?.value;
            println!("{name}: sandwiched α = {alpha}: {before:.4} -> {after:.4}");
            worst_increase = worst_increase.max(after - before);
        }
    }
    let petz = entropy::renyi_divergence(&rho, &sigma, 2.0)?.value;
    println!("Petz D_2 = {petz:.4}");
    let half = entropy::sandwiched_divergence(&rho, &sigma, 0.5)?.value;
    let f = entropy::fidelity(&rho, &sigma)?;
    let fidelity_identity_error = (half + 2.0 * f.log2()).abs();
    println!("D̃_1/2 = {half:.6}, −2 log F = {:.6}", -2.0 * f.log2());
    Ok(Outcome {
        worst_increase,
        fidelity_identity_error,
    })
}

#[allow(dead_code)]
fn main() -> qdiv::Result<()> {
    run_example().map(|_| ())
}
