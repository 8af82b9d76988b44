//! k-positivity certificates: the transposition is positive but not
//! 2-positive, and the search returns the vector that proves it.

use qdiv::maps::{self, PositivityVerdict, QuantumMap};

pub struct Outcome {
    pub k1: PositivityVerdict,
    pub k2: PositivityVerdict,
    pub k2_min: f64,
}

pub fn run_example() -> qdiv::Result<Outcome> {
    let t = QuantumMap::transposition(2);
    let k1 = maps::k_positivity(&t, 1, maps::DEFAULT_RESTARTS, 1)?;
    let k2 = maps::k_positivity(&t, 2, maps::DEFAULT_RESTARTS, 1)?;
    println!("k = 1: {:?} (min {:.2e})", k1.verdict, k1.min_value);
    println!("k = 2: {:?} (min {:.3})", k2.verdict, k2.min_value);
    Ok(Outcome {
        k1: k1.verdict,
        k2: k2.verdict,
        k2_min: k2.min_value,
    })
}

#[allow(dead_code)]
fn main() -> qdiv::Result<()> {
    run_example().map(|_| ())
}
