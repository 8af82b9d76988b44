//! The interior-point solver on a trace-norm program: `||H||₁` is
//! `min Tr(P + N)` subject to `P − N = H`, `P, N ⪰ 0`.

use qdiv::linalg::{self, c64, CMatrix};
use qdiv::sdp::{self, SdpProblem, SdpSolution, Sense};

pub struct Outcome {
    pub solution: SdpSolution,
    pub exact: f64,
}

pub fn run_example() -> qdiv::Result<Outcome> {
    let h = linalg::cmatrix(
        3,
        3,
        &[
            c64(1.0, 0.0),
            c64(0.5, 0.3),
            c64(0.0, 0.0),
            c64(0.5, -0.3),
            c64(-0.7, 0.0),
            c64(0.2, 0.0),
            c64(0.0, 0.0),
            c64(0.2, 0.0),
            c64(0.1, 0.0),
        ],
    )?;
    let n = h.nrows();
    let mut p = SdpProblem::new(vec![n, n], Sense::Min);
    p.set_objective(0, CMatrix::identity(n, n));
    p.set_objective(1, CMatrix::identity(n, n));
    for e in sdp::hermitian_basis(n) {
        let b = linalg::hs_inner(&e, &h).re;
        p.add_constraint(vec![(0, e.clone()), (1, -e)], b);
    }
    let solution = sdp::solve_default(&p)?;
    let exact = linalg::trace_norm(&h)?;
    println!(
        "status {:?} after {} iterations: primal {:.10}, dual {:.10}, exact {exact:.10}",
        solution.status, solution.iterations, solution.primal_value, solution.dual_value
    );
    Ok(Outcome { solution, exact })
}

#[allow(dead_code)]
fn main() -> qdiv::Result<()> {
    run_example().map(|_| ())
}
