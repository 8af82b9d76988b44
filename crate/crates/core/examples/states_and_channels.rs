//! States, partial traces and channels in Kraus, superoperator and Choi form.

use qdiv::linalg;
use qdiv::maps::{self, QuantumMap};
use qdiv::quantum::{self, DensityOperator, Subsystem};

pub struct Outcome {
    pub bell_marginal_purity: f64,
    pub damping_cptp: bool,
    pub transposition_min_choi_eig: f64,
    pub kraus_round_trip_error: f64,
}

pub fn run_example() -> qdiv::Result<Outcome> {
    let bell = quantum::max_entangled(2)?;
    let marginal = quantum::partial_trace(&bell, Subsystem::B);
    println!("purity of a Bell-state marginal: {:.3}", marginal.purity());

    let damping = QuantumMap::amplitude_damping(0.3);
    let report = maps::is_cptp(&damping);
    println!(
        "amplitude damping(0.3): cp = {}, tp = {}",
        report.cp, report.tp
    );

    let excited = DensityOperator::basis(2, 1);
    let out = damping.apply_state(&excited)?;
    println!(
        "|1><1| -> populations {:.2} / {:.2}",
        out.matrix()[(0, 0)].re,
        out.matrix()[(1, 1)].re
    );

    let t = QuantumMap::transposition(2);
    let lo = linalg::min_eig(&maps::choi(&t))?;
    println!("transposition: smallest Choi eigenvalue {lo:.2} (positive but not CP)");

    let ops = maps::kraus(&damping);
    let rebuilt = maps::from_kraus(&ops)?;
    let err = linalg::max_diff(rebuilt.superop(), damping.superop());
    println!(
        "Kraus round trip error {err:.1e} with {} operators",
        ops.len()
    );

    Ok(Outcome {
        bell_marginal_purity: marginal.purity(),
        damping_cptp: report.cp && report.tp,
        transposition_min_choi_eig: lo,
        kraus_round_trip_error: err,
    })
}

#[allow(dead_code)]
fn main() -> qdiv::Result<()> {
    run_example().map(|_| ())
}
