//! Conditional min- and max-entropies by semidefinite programming, their
//! duality on a purification, and the operational quantities they encode.

use qdiv::entropy;
use qdiv::quantum::{self, random_density, BipartiteState};

pub struct Outcome {
    pub bell_h_min: f64,
    pub duality_residual: f64,
    pub bell_q_corr: f64,
}

pub fn run_example() -> qdiv::Result<Outcome> {
    let bell = quantum::max_entangled(2)?;
    let bell_h_min = entropy::h_min(&bell)?;
    let bell_q_corr = entropy::q_corr(&bell)?;
    println!("Bell state: H_min(A|B) = {bell_h_min:.6}, q_corr = {bell_q_corr:.6}");
    println!("Bell state: q_decpl = {:.6}", entropy::q_decpl(&bell)?);

    let rho = BipartiteState::new(2, 2, random_density(4, 2, 5)?)?;
    let abc = quantum::purify(&rho);
    let h_min = entropy::h_min(&abc.rho_ab())?;
    let h_max = entropy::h_max(&abc.rho_ac())?;
    println!("H_min(A|B) = {h_min:.6}, H_max(A|C) = {h_max:.6}");
    println!("H(A|B) = {:.6}", entropy::conditional_entropy(&rho));
    Ok(Outcome {
        bell_h_min,
        duality_residual: (h_min + h_max).abs(),
        bell_q_corr,
    })
}

#[allow(dead_code)]
fn main() -> qdiv::Result<()> {
    run_example().map(|_| ())
}
