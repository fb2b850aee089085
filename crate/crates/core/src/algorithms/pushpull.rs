use nalgebra::{DMatrix, DVector};

use crate::compression::{bit_cost, CompressorSpec};
use crate::error::Result;
use crate::objectives::ObjectiveModel;
use crate::topology::MixingMatrices;

use super::{check_shapes, AlgoParams, AlgoState};

/// Uncompressed Push-Pull:
/// `X⁺ = RX − diag(α)Y`, `Y⁺ = CY + ∇F(X⁺) − ∇F(X)`.
///
/// Every link of both graphs carries a full 64-bit vector each round.
pub fn pushpull_step(
    state: &mut AlgoState,
    mixing: &MixingMatrices,
    objective: &ObjectiveModel,
    params: &AlgoParams,
) -> Result<()> {
    check_shapes(state, mixing, objective)?;
    let mut x_next = &mixing.r * &state.x;
    x_next -= DMatrix::from_diagonal(&DVector::from_column_slice(&params.alpha)) * &state.y;
    let grads_next = objective.stacked_gradient(&x_next);
    let y_next = &mixing.c * &state.y + &grads_next - &state.grads;

    let links = (mixing.graph_r.link_count() + mixing.graph_c.link_count()) as u64;
    state.bits += links * bit_cost(&CompressorSpec::Identity, objective.dim());
    state.x = x_next;
    state.y = y_next;
    state.grads = grads_next;
    state.iter += 1;
    Ok(())
}
