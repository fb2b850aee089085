use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng;

use crate::compression::{bit_cost, compress, CompressorSpec};
use crate::error::{Error, Result};
use crate::objectives::ObjectiveModel;
use crate::rng::{CompressionStreams, Direction};
use crate::topology::MixingMatrices;

use super::{check_shapes, sample_agent, AlgoParams, AlgoState};

/// One B-CPP iteration with a uniformly drawn active agent.
pub fn bcpp_step<R: Rng + ?Sized>(
    state: &mut AlgoState,
    mixing: &MixingMatrices,
    objective: &ObjectiveModel,
    params: &AlgoParams,
    spec: &CompressorSpec,
    streams: &CompressionStreams,
    activation: &mut R,
) -> Result<()> {
    let active = sample_agent(activation, mixing.n());
    bcpp_step_with_activation(state, mixing, objective, params, spec, streams, active)
}

fn row(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
    m.row(i).iter().copied().collect()
}

/// `m[i, :] += a · v`
fn add_scaled(m: &mut DMatrix<f64>, i: usize, a: f64, v: &[f64]) {
    m.row_mut(i).iter_mut().zip(v).for_each(|(x, v)| *x += a * v);
}

/// One B-CPP iteration in which agent `active` wakes up.
///
/// The active agent broadcasts `p = C(x − u)` to its pull out-neighbors and
/// `q = C(y)` to its push out-neighbors. Out-neighbor sets come from the
/// matrix supports, so the active agent is its own out-neighbor.
pub fn bcpp_step_with_activation(
    state: &mut AlgoState,
    mixing: &MixingMatrices,
    objective: &ObjectiveModel,
    params: &AlgoParams,
    spec: &CompressorSpec,
    streams: &CompressionStreams,
    active: usize,
) -> Result<()> {
    check_shapes(state, mixing, objective)?;
    spec.validate_for(objective.dim())?;
    let n = mixing.n();
    if active >= n {
        return Err(Error::param(format!("active agent {active} out of range for n = {n}")));
    }
    let nf = n as f64;
    let AlgoParams {
        alpha,
        beta,
        gamma,
        eta,
    } = params;
    let k = state.iter;

    let diff: Vec<f64> = state
        .x
        .row(active)
        .iter()
        .zip(state.u.row(active).iter())
        .map(|(x, u)| x - u)
        .collect();
    let p_msg = compress(spec, &diff, &mut streams.rng(active, k, Direction::Pull))?.payload;
    let q_msg = compress(
        spec,
        &row(&state.y, active),
        &mut streams.rng(active, k, Direction::Push),
    )?
    .payload;

    let r_out = mixing.r_out_neighbors(active);
    let c_out = mixing.c_out_neighbors(active);
    let awake: BTreeSet<usize> = std::iter::once(active)
        .chain(r_out.iter().copied())
        .chain(c_out.iter().copied())
        .collect();

    // Pull-side averaging. The x update uses u_R from before this
    // iteration's increment, which keeps its expectation at [(1−β)I + βR]X.
    for &j in &r_out {
        let w = mixing.r[(j, active)];
        let damp = beta * nf / mixing.r_in_degree(j) as f64;
        let u_r_old = row(&state.u_r, j);
        for (col, (x, u)) in state.x.row_mut(j).iter_mut().zip(&u_r_old).enumerate() {
            *x = (1.0 - damp) * *x + damp * u + beta * nf * w * p_msg[col];
        }
        add_scaled(&mut state.u_r, j, eta * nf * w, &p_msg);
    }
    add_scaled(&mut state.u, active, eta * nf, &p_msg);

    // Local descent and gradient tracking on every awakened agent.
    for &j in &awake {
        let y_j = row(&state.y, j);
        add_scaled(&mut state.x, j, -alpha[j], &y_j);
        let g_new = objective.local_gradient(j, &state.x.row(j).transpose());
        for (col, y) in state.y.row_mut(j).iter_mut().enumerate() {
            *y += g_new[col] - state.grads[(j, col)];
        }
        state.grads.set_row(j, &g_new.transpose());
    }

    // Push-side mixing; column `active` of C sums to one so 𝟙ᵀY is unchanged.
    add_scaled(&mut state.y, active, -gamma * nf, &q_msg);
    for &j in &c_out {
        add_scaled(&mut state.y, j, gamma * nf * mixing.c[(j, active)], &q_msg);
    }

    let sent = r_out.iter().filter(|&&j| j != active).count() + c_out.iter().filter(|&&j| j != active).count();
    state.bits += sent as u64 * bit_cost(spec, objective.dim());
    state.iter += 1;
    Ok(())
}
