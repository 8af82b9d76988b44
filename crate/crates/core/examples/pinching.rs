//! Pinched approximations of the sandwiched divergence: the classical
//! divergence of the pinched `n`-copy state approaches `D̃_α` from below.

use qdiv::entropy;
use qdiv::quantum::random_density;

pub fn run_example() -> qdiv::Result<Vec<f64>> {
    let rho = random_density(2, 2, 11)?;
    let sigma = random_density(2, 2, 12)?;
    let target = entropy::sandwiched_divergence(&rho, &sigma, 2.0)?.value;
    let mut gaps = Vec::new();
    for n in 1..=3 {
        let approx = entropy::pinched_approximation(&rho, &sigma, 2.0, n)?.value;
        println!("n = {n}: {approx:.6} (D̃_2 = {target:.6})");
        gaps.push((target - approx).abs());
    }
    Ok(gaps)
}

#[allow(dead_code)]
fn main() -> qdiv::Result<()> {
    run_example().map(|_| ())
}
