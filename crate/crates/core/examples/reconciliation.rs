//! Reconciling witnesses with divisibility certificates on the eternal
//! model: single-system trace distance stays monotone (the dynamics is
//! P-divisible) while a sandwiched divergence with a qubit ancilla detects
//! the failure of CP-divisibility.

use qdiv::dynamics::{self, ModelParams};
use qdiv::linalg::{c64, CMatrix};
use qdiv::quantum::DensityOperator;
use qdiv::witness::{self, Probe, Reconciliation, WitnessKind, WitnessSpec};

/// Bell-diagonal state with weights on `Φ+, Ψ+, Ψ−, Φ−` (the Pauli frame
/// order `I, X, Y, Z`).
fn bell_diagonal(q: [f64; 4]) -> qdiv::Result<DensityOperator> {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = c64((q[0] + q[3]) / 2.0, 0.0);
    m[(3, 3)] = m[(0, 0)];
    m[(0, 3)] = c64((q[0] - q[3]) / 2.0, 0.0);
    m[(3, 0)] = m[(0, 3)];
    m[(1, 1)] = c64((q[1] + q[2]) / 2.0, 0.0);
    m[(2, 2)] = m[(1, 1)];
    m[(1, 2)] = c64((q[1] - q[2]) / 2.0, 0.0);
    m[(2, 1)] = m[(1, 2)];
    DensityOperator::new(m)
}

pub fn run_example() -> qdiv::Result<Reconciliation> {
    let grid: Vec<f64> = (0..=60).map(|i| 0.05 * i as f64).collect();
    let dm = dynamics::model("eternal", &ModelParams::default())?.evolve(&grid, 1e-10)?;
    let report = dynamics::divisibility_report(&dm, &[1, 2], 64, 1)?;

    let blp = WitnessSpec::random(WitnessKind::BlpTraceDistance, 2, 0, 10, 2)?;
    let pair = Probe::Pair {
        p: 0.5,
        rho1: bell_diagonal([0.05, 0.0, 0.0, 0.95])?,
        rho2: bell_diagonal([0.0, 0.05, 0.95, 0.0])?,
    };
    let sandwiched = WitnessSpec::new(WitnessKind::Sandwiched { alpha: 3.0 }, vec![pair], 2);
    let mut trajectories = witness::run(&dm, &blp)?;
    trajectories.extend(witness::run(&dm, &sandwiched)?);

    let rec = witness::verdict(&dm, &trajectories, &report)?;
    for row in &rec.table {
        println!("k = {}: {}", row.k, row.verdict);
        for w in &row.witnesses {
            println!(
                "    {}: {} violations over {} probes",
                w.witness, w.violations, w.probes
            );
        }
    }
    println!("overall: {:?}", rec.status);
    Ok(rec)
}

#[allow(dead_code)]
fn main() -> qdiv::Result<()> {
    run_example().map(|_| ())
}
