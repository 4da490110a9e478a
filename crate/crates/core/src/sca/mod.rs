//! Successive convex approximation of the max-min secrecy objective in `W`.

pub mod bounds;
pub mod solver;
pub mod surrogate;

use nalgebra::DMatrix;

pub use bounds::{f1_lower, f2_upper, log_ratio};
pub use solver::{soft_min, solve_subproblem, SolverOptions, SubproblemSolution};
pub use surrogate::{pair_surrogate, SurrogatePoint};

use crate::channel::UeId;
use crate::error::Result;
use crate::linalg::C64;
use crate::rates::RateEvaluator;

/// Builds the surrogates around `w` at power-allocation factor `epsilon`
/// and solves the resulting subproblem once.
///
/// With `eavesdroppers == false` the EUE terms are dropped and the round
/// maximizes the minimum LUE rate instead.
pub fn sca_round(
    evaluator: &RateEvaluator<'_>,
    w: &DMatrix<C64>,
    epsilon: f64,
    eavesdroppers: bool,
    opts: &SolverOptions,
) -> Result<SubproblemSolution> {
    let point = surrogate_point(evaluator, w.clone(), epsilon, eavesdroppers)?;
    Ok(solve_subproblem(&point, w.ncols() as f64, opts))
}

pub fn surrogate_point(
    evaluator: &RateEvaluator<'_>,
    w: DMatrix<C64>,
    epsilon: f64,
    eavesdroppers: bool,
) -> Result<SurrogatePoint> {
    let ch = evaluator.channels();
    let lue = (0..ch.num_lue())
        .map(|k| evaluator.effective_noise(UeId::Lue(k), epsilon))
        .collect::<Result<Vec<_>>>()?;
    let eue = (0..ch.num_eue())
        .map(|e| evaluator.effective_noise(UeId::Eue(e), epsilon))
        .collect::<Result<Vec<_>>>()?;
    SurrogatePoint::new(ch, w, lue, eue, eavesdroppers)
}
