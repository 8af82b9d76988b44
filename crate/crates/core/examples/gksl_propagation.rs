//! Propagating GKSL generators: the amplitude-damping semigroup and the
//! eternally non-Markovian Pauli model.

use qdiv::dynamics::{self, ModelParams};
use qdiv::linalg::{self, c64, CMatrix};

pub struct Outcome {
    /// Largest deviation of the excited population from `e^{−t}`.
    pub population_error: f64,
    /// Largest deviation of the eternal model's Pauli eigenvalues.
    pub eternal_eigen_error: f64,
}

pub fn run_example() -> qdiv::Result<Outcome> {
    let grid: Vec<f64> = (0..=40).map(|i| 0.1 * i as f64).collect();
    let ad = dynamics::model("amplitude_damping", &ModelParams::default())?.evolve(&grid, 1e-10)?;
    let mut excited = CMatrix::zeros(2, 2);
    excited[(1, 1)] = c64(1.0, 0.0);
    let population_error = grid
        .iter()
        .zip(ad.maps())
        .map(|(t, m)| (m.apply(&excited)[(1, 1)].re - (-t).exp()).abs())
        .fold(0.0, f64::max);
    println!("amplitude damping: max |p1(t) − e^-t| = {population_error:.1e}");

    let eternal = dynamics::model("eternal", &ModelParams::default())?.evolve(&grid, 1e-10)?;
    let mut eternal_eigen_error: f64 = 0.0;
    for (t, m) in grid.iter().zip(eternal.maps()) {
        let lambda = |p: &CMatrix| (m.apply(p) * p).trace().re / 2.0;
        let want = [
            (-t).exp() * t.cosh(),
            (-t).exp() * t.cosh(),
            (-2.0 * t).exp(),
        ];
        for (p, w) in linalg::paulis().iter().zip(want) {
            eternal_eigen_error = eternal_eigen_error.max((lambda(p) - w).abs());
        }
    }
    println!("eternal model: max eigenvalue error {eternal_eigen_error:.1e}");
    Ok(Outcome {
        population_error,
        eternal_eigen_error,
    })
}

#[allow(dead_code)]
fn main() -> qdiv::Result<()> {
    run_example().map(|_| ())
}
