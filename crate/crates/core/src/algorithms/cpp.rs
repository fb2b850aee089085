use nalgebra::{DMatrix, DVector};

use crate::compression::{bit_cost, compress, CompressorSpec};
use crate::error::Result;
use crate::objectives::ObjectiveModel;
use crate::rng::{CompressionStreams, Direction};
use crate::topology::MixingMatrices;

use super::{check_shapes, AlgoParams, AlgoState};

fn compress_rows(
    m: &DMatrix<f64>,
    spec: &CompressorSpec,
    streams: &CompressionStreams,
    iter: usize,
    direction: Direction,
) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    let mut buf = vec![0.0; m.ncols()];
    for i in 0..m.nrows() {
        buf.iter_mut().zip(m.row(i).iter()).for_each(|(b, v)| *b = *v);
        let msg = compress(spec, &buf, &mut streams.rng(i, iter, direction))?;
        out.row_mut(i).iter_mut().zip(msg.payload).for_each(|(o, v)| *o = v);
    }
    Ok(out)
}

/// One synchronous CPP round.
///
/// Pull side: each agent compresses `x_i − u_i`; receivers rebuild
/// `X̂_R = U_R + R·P` without ever seeing `X`. Push side: each agent
/// compresses `y_i` and the damped update `Y + γ(C − I)Ŷ` keeps `𝟙ᵀY`
/// equal to `𝟙ᵀ∇F(X)`.
pub fn cpp_step(
    state: &mut AlgoState,
    mixing: &MixingMatrices,
    objective: &ObjectiveModel,
    params: &AlgoParams,
    spec: &CompressorSpec,
    streams: &CompressionStreams,
) -> Result<()> {
    check_shapes(state, mixing, objective)?;
    spec.validate_for(objective.dim())?;
    let AlgoParams {
        alpha,
        beta,
        gamma,
        eta,
    } = params;
    let k = state.iter;

    let p_msgs = compress_rows(&(&state.x - &state.u), spec, streams, k, Direction::Pull)?;
    let q_msgs = compress_rows(&state.y, spec, streams, k, Direction::Push)?;

    let x_hat = &state.u + &p_msgs;
    let x_hat_r = &state.u_r + &mixing.r * &p_msgs;

    let mut x_next = &state.x * (1.0 - beta) + &x_hat_r * *beta;
    x_next -= DMatrix::from_diagonal(&DVector::from_column_slice(alpha)) * &state.y;
    let grads_next = objective.stacked_gradient(&x_next);
    let y_next = &state.y + (&mixing.c * &q_msgs - &q_msgs) * *gamma + &grads_next - &state.grads;

    state.u = &state.u * (1.0 - eta) + x_hat * *eta;
    state.u_r = &state.u_r * (1.0 - eta) + x_hat_r * *eta;
    state.x = x_next;
    state.y = y_next;
    state.grads = grads_next;

    let links = (mixing.graph_r.link_count() + mixing.graph_c.link_count()) as u64;
    state.bits += links * bit_cost(spec, objective.dim());
    state.iter += 1;
    Ok(())
}
