//! Per-iteration measurements.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::algorithms::AlgoState;
use crate::error::{Error, Result};
use crate::objectives::{ObjectiveModel, ReferenceSolution};
use crate::topology::MixingMatrices;

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// `f(x̄) − f*` with `x̄` the `r`-weighted average of the agents' iterates.
    pub loss_gap: f64,
    /// `‖X − 𝟙x̄ᵀ‖_F`.
    pub consensus_err: f64,
    /// `‖𝟙ᵀY − 𝟙ᵀ∇F(X)‖`.
    pub tracking_residual: f64,
    /// Cumulative transmitted bits.
    pub bits: u64,
}

/// `(1/n) rᵀX`.
pub fn weighted_average(x: &DMatrix<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
    if x.nrows() != r.len() {
        return Err(Error::param(format!(
            "{} agent rows but Perron vector of length {}",
            x.nrows(),
            r.len()
        )));
    }
    Ok(x.tr_mul(r) / x.nrows() as f64)
}

pub fn consensus_error(x: &DMatrix<f64>, r: &DVector<f64>) -> Result<f64> {
    let avg = weighted_average(x, r)?;
    let mut dev = x.clone();
    for mut row in dev.row_iter_mut() {
        row -= avg.transpose();
    }
    Ok(dev.norm())
}

/// Euclidean norm of the column sums of `Y − G`.
pub fn tracking_residual(y: &DMatrix<f64>, grads: &DMatrix<f64>) -> f64 {
    (y - grads).row_sum().norm()
}

pub fn record(
    state: &AlgoState,
    objective: &ObjectiveModel,
    reference: &ReferenceSolution,
    mixing: &MixingMatrices,
) -> Result<IterationRecord> {
    let avg = weighted_average(&state.x, &mixing.r_perron)?;
    Ok(IterationRecord {
        iter: state.iter,
        loss_gap: objective.value(&avg) - reference.f_star,
        consensus_err: consensus_error(&state.x, &mixing.r_perron)?,
        tracking_residual: tracking_residual(&state.y, &state.grads),
        bits: state.bits,
    })
}
