//! Discrete guessing-probability criterion on a coarse time sequence of the
//! eternal model: some ensemble on `H ⊗ H` becomes easier to discriminate
//! at a later time, which certifies that the sequence is not CP-divisible.

use qdiv::dynamics::{self, ModelParams};
use qdiv::witness::{self, BdReport};

pub fn run_example() -> qdiv::Result<BdReport> {
    let dm =
        dynamics::model("eternal", &ModelParams::default())?.evolve(&[0.0, 1.0, 3.0], 1e-10)?;
    let ensembles = witness::random_bd_ensembles(2, 200, 4, 5)?;
    let report = witness::discrete_bd_check(dm.maps(), &ensembles)?;
    println!(
        "{} violations among {} ensembles",
        report.violations.len(),
        ensembles.len()
    );
    if let Some(v) = report
        .violations
        .iter()
        .max_by(|a, b| a.increase.total_cmp(&b.increase))
    {
        println!(
            "largest: ensemble {} gains {:.3e} from step {} to step {}",
            v.ensemble, v.increase, v.l, v.k
        );
    }
    Ok(report)
}

#[allow(dead_code)]
fn main() -> qdiv::Result<()> {
    run_example().map(|_| ())
}
