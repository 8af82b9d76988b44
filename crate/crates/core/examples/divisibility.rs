//! Step-by-step divisibility certificates for the eternal model: every
//! intermediate map is positive, yet none after the first is CP.

use qdiv::dynamics::{self, DivisibilityReport, ModelParams};

pub fn run_example() -> qdiv::Result<DivisibilityReport> {
    let grid: Vec<f64> = (0..=30).map(|i| 0.1 * i as f64).collect();
    let dm = dynamics::model("eternal", &ModelParams::default())?.evolve(&grid, 1e-10)?;
    let report = dynamics::divisibility_report(&dm, &[1, 2], 64, 7)?;
    for k in &report.per_k {
        println!(
            "k = {}: {} ({} certified negative steps)",
            k.k,
            k.verdict(),
            k.certified_negative_steps.len()
        );
    }
    let worst = report
        .steps
        .iter()
        .filter(|s| s.k == 2)
        .map(|s| s.min_value)
        .fold(f64::INFINITY, f64::min);
    println!("most negative Choi value over steps: {worst:.3e}");
    Ok(report)
}

#[allow(dead_code)]
fn main() -> qdiv::Result<()> {
    run_example().map(|_| ())
}
