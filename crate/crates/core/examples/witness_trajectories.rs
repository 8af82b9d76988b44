//! Trace-distance backflow under dephasing with the oscillating rate
//! `γ(t) = sin t`: the flagged grid points are those where `γ < 0`.

use qdiv::dynamics::{self, ModelParams, RateFn};
use qdiv::linalg::{c64, CVector};
use qdiv::quantum::DensityOperator;
use qdiv::witness::{self, Probe, WitnessKind, WitnessSpec, WitnessTrajectory};

pub fn run_example() -> qdiv::Result<WitnessTrajectory> {
    let params = ModelParams {
        rate: Some(RateFn::Sinusoid {
            a: 1.0,
            omega: 1.0,
            phi: 0.0,
        }),
        ..ModelParams::default()
    };
    let grid: Vec<f64> = (0..=200).map(|i| 0.05 * i as f64).collect();
    let dm = dynamics::model("dephasing", &params)?.evolve(&grid, 1e-10)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = DensityOperator::pure(&CVector::from_vec(vec![c64(s, 0.0), c64(s, 0.0)]))?;
    let minus = DensityOperator::pure(&CVector::from_vec(vec![c64(s, 0.0), c64(-s, 0.0)]))?;
    let probe = Probe::Pair {
        p: 0.5,
        rho1: plus,
        rho2: minus,
    };
    let spec = WitnessSpec::new(WitnessKind::BlpTraceDistance, vec![probe], 0);
    let traj = witness::run(&dm, &spec)?.remove(0);
    let flagged: Vec<f64> = traj.violations.iter().map(|v| v.time).collect();
    println!(
        "{} of {} grid points flagged, first at t = {:.2}, last at t = {:.2}",
        flagged.len(),
        traj.times.len(),
        flagged.first().copied().unwrap_or(f64::NAN),
        flagged.last().copied().unwrap_or(f64::NAN)
    );
    print!(
        "{}",
        traj.to_csv().lines().take(4).collect::<Vec<_>>().join("\n")
    );
    println!("\n...");
    Ok(traj)
}

#[allow(dead_code)]
fn main() -> qdiv::Result<()> {
    run_example().map(|_| ())
}
